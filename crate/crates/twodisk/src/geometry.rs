//! Problem configuration and region classification.
//!
//! Two disks `B1`, `B2` of radii `r1`, `r2` sit on the `x1` axis separated by a
//! gap of width `eps` centered at the origin. The coefficient is `k1` in `B1`,
//! `k2` in `B2` and `1` in the matrix `B0`.

use num_complex::Complex64;
use thiserror::Error;

/// Points of the plane are complex numbers `x1 + i x2`.
pub type Point = Complex64;

/// Shorthand for building a point.
#[inline]
pub fn pt(x1: f64, x2: f64) -> Point {
    Complex64::new(x1, x2)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("point {0} lies on an interface and no side was given")]
    Ambiguous(Point),
}

/// Which inclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Disk {
    One,
    Two,
}

impl Disk {
    pub fn other(self) -> Disk {
        match self {
            Disk::One => Disk::Two,
            Disk::Two => Disk::One,
        }
    }

    pub fn tag(self) -> RegionTag {
        match self {
            Disk::One => RegionTag::Inclusion1,
            Disk::Two => RegionTag::Inclusion2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionTag {
    Matrix,
    Inclusion1,
    Inclusion2,
}

impl RegionTag {
    pub fn disk(self) -> Option<Disk> {
        match self {
            RegionTag::Matrix => None,
            RegionTag::Inclusion1 => Some(Disk::One),
            RegionTag::Inclusion2 => Some(Disk::Two),
        }
    }

    /// Region index as used for the potentials: 0 matrix, 1 and 2 inclusions.
    pub fn index(self) -> usize {
        match self {
            RegionTag::Matrix => 0,
            RegionTag::Inclusion1 => 1,
            RegionTag::Inclusion2 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegionTag::Matrix => "B0",
            RegionTag::Inclusion1 => "B1",
            RegionTag::Inclusion2 => "B2",
        }
    }
}

/// Marker for a point within the classification tolerance of a circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interface {
    pub disk: Disk,
    /// Side the point falls on numerically; `tag` of the enclosing region.
    pub side: RegionTag,
    /// Signed distance `|p - c| - r`.
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub tag: RegionTag,
    pub on_boundary: Option<Interface>,
}

/// Geometry and contrasts. Immutable once built.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoDiskConfig {
    eps: f64,
    r1: f64,
    r2: f64,
    k1: f64,
    k2: f64,
    alpha: f64,
    beta: f64,
}

/// `(k - 1)/(k + 1)` for a positive finite conductivity.
pub fn contrast_of(k: f64) -> Result<f64, GeometryError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(GeometryError::InvalidConfig(format!(
            "conductivity must be positive and finite, got {k}"
        )));
    }
    Ok((k - 1.0) / (k + 1.0))
}

/// Inverse of [`contrast_of`].
pub fn conductivity_of(alpha: f64) -> f64 {
    (1.0 + alpha) / (1.0 - alpha)
}

impl TwoDiskConfig {
    pub fn new(eps: f64, r1: f64, r2: f64, k1: f64, k2: f64) -> Result<Self, GeometryError> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(GeometryError::InvalidConfig(format!(
                "eps must lie in (0, 1/2), got {eps}"
            )));
        }
        for (name, r) in [("r1", r1), ("r2", r2)] {
            if !(r > 0.0 && r < 10.0) {
                return Err(GeometryError::InvalidConfig(format!(
                    "{name} must lie in (0, 10), got {r}"
                )));
            }
        }
        if eps > r1.min(r2) / 2.0 {
            return Err(GeometryError::InvalidConfig(format!(
                "eps = {eps} exceeds min(r1, r2)/2"
            )));
        }
        let alpha = contrast_of(k1)?;
        let beta = contrast_of(k2)?;
        Ok(TwoDiskConfig {
            eps,
            r1,
            r2,
            k1,
            k2,
            alpha,
            beta,
        })
    }

    /// Unit radii.
    pub fn unit(eps: f64, k1: f64, k2: f64) -> Result<Self, GeometryError> {
        Self::new(eps, 1.0, 1.0, k1, k2)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn r2(&self) -> f64 {
        self.r2
    }
    pub fn k1(&self) -> f64 {
        self.k1
    }
    pub fn k2(&self) -> f64 {
        self.k2
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `(alpha, beta)`.
    pub fn contrast(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    pub fn c1(&self) -> Point {
        pt(self.eps / 2.0 + self.r1, 0.0)
    }

    pub fn c2(&self) -> Point {
        pt(-self.eps / 2.0 - self.r2, 0.0)
    }

    pub fn center(&self, d: Disk) -> Point {
        match d {
            Disk::One => self.c1(),
            Disk::Two => self.c2(),
        }
    }

    pub fn radius(&self, d: Disk) -> f64 {
        match d {
            Disk::One => self.r1,
            Disk::Two => self.r2,
        }
    }

    pub fn conductivity(&self, d: Disk) -> f64 {
        match d {
            Disk::One => self.k1,
            Disk::Two => self.k2,
        }
    }

    pub fn contrast_on(&self, d: Disk) -> f64 {
        match d {
            Disk::One => self.alpha,
            Disk::Two => self.beta,
        }
    }

    /// Effective gap parameter `sqrt(2 (1/r1 + 1/r2) eps)`; equals `2 sqrt(eps)` for unit radii.
    pub fn tau(&self) -> f64 {
        (2.0 * (1.0 / self.r1 + 1.0 / self.r2) * self.eps).sqrt()
    }

    pub fn default_tol(&self) -> f64 {
        1e-12 * self.r1.max(self.r2)
    }

    /// Mirror image: swap the disks and negate `x1`.
    pub fn reflected(&self) -> TwoDiskConfig {
        TwoDiskConfig {
            eps: self.eps,
            r1: self.r2,
            r2: self.r1,
            k1: self.k2,
            k2: self.k1,
            alpha: self.beta,
            beta: self.alpha,
        }
    }

    /// Classify `p` with tolerance `tol` for the boundary marker.
    pub fn classify(&self, p: Point, tol: f64) -> Region {
        let mut on_boundary = None;
        let mut tag = RegionTag::Matrix;
        for d in [Disk::One, Disk::Two] {
            let offset = (p - self.center(d)).norm() - self.radius(d);
            if offset < 0.0 {
                tag = d.tag();
            }
            if offset.abs() <= tol {
                on_boundary = Some((d, offset));
            }
        }
        Region {
            tag,
            on_boundary: on_boundary.map(|(disk, offset)| Interface {
                disk,
                side: tag,
                offset,
            }),
        }
    }

    /// Region tag with the default tolerance, rejecting interface points.
    pub fn region_strict(&self, p: Point) -> Result<RegionTag, GeometryError> {
        let r = self.classify(p, self.default_tol());
        match r.on_boundary {
            Some(_) => Err(GeometryError::Ambiguous(p)),
            None => Ok(r.tag),
        }
    }

    pub fn coefficient_of(&self, tag: RegionTag) -> f64 {
        match tag {
            RegionTag::Matrix => 1.0,
            RegionTag::Inclusion1 => self.k1,
            RegionTag::Inclusion2 => self.k2,
        }
    }

    /// Coefficient `a(p)`; interface points need an explicit side via [`Self::coefficient_of`].
    pub fn coefficient(&self, p: Point) -> Result<f64, GeometryError> {
        self.region_strict(p).map(|t| self.coefficient_of(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> TwoDiskConfig {
        TwoDiskConfig::unit(0.1, 7.0, 0.2).unwrap()
    }

    #[test]
    fn origin_is_matrix() {
        let c = cfg();
        let r = c.classify(pt(0.0, 0.0), c.default_tol());
        assert_eq!(r.tag, RegionTag::Matrix);
        assert!(r.on_boundary.is_none());
    }

    #[test]
    fn centers_are_inside() {
        let c = cfg();
        assert_eq!(c.classify(c.c1(), 0.0).tag, RegionTag::Inclusion1);
        assert_eq!(c.classify(c.c2(), 0.0).tag, RegionTag::Inclusion2);
    }

    #[test]
    fn gap_endpoint_is_on_boundary() {
        let c = cfg();
        let r = c.classify(pt(c.eps() / 2.0, 0.0), 0.0);
        assert_eq!(r.tag, RegionTag::Matrix);
        assert_eq!(r.on_boundary.map(|b| b.disk), Some(Disk::One));
        assert!(matches!(
            c.coefficient(pt(c.eps() / 2.0, 0.0)),
            Err(GeometryError::Ambiguous(_))
        ));
    }

    #[test]
    fn contrast_values() {
        let c = TwoDiskConfig::unit(0.1, 1.0, 1.0).unwrap();
        assert_eq!(c.contrast(), (0.0, 0.0));
        assert_eq!(contrast_of(3.0).unwrap(), 0.5);
        assert!((contrast_of(1e6).unwrap() - 0.999998000002).abs() < 1e-12);
        assert!(contrast_of(0.0).is_err());
        assert!(contrast_of(-2.0).is_err());
    }

    #[test]
    fn coefficient_per_region() {
        let c = cfg();
        assert_eq!(c.coefficient(pt(0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(c.coefficient(c.c1()).unwrap(), 7.0);
        assert_eq!(c.coefficient(c.c2()).unwrap(), 0.2);
    }

    #[test]
    fn validation() {
        assert!(TwoDiskConfig::unit(0.5, 1.0, 1.0).is_err());
        assert!(TwoDiskConfig::unit(0.0, 1.0, 1.0).is_err());
        assert!(TwoDiskConfig::new(0.05, 0.5, 1.0, 1.0, 1.0).is_ok());
        assert!(TwoDiskConfig::new(0.3, 0.5, 1.0, 1.0, 1.0).is_err());
        assert!(TwoDiskConfig::new(0.32, 1.0, 0.6, 1.0, 1.0).is_err());
        assert!(TwoDiskConfig::unit(0.32, 1.0, 1.0).is_ok());
        assert!(TwoDiskConfig::new(0.01, 10.0, 1.0, 1.0, 1.0).is_err());
        let c = TwoDiskConfig::new(0.07, 2.0, 0.8, 1.0, 1.0).unwrap();
        assert!(((c.c1() - c.c2()).norm() - (2.0 + 0.8 + 0.07)).abs() < 1e-14);
    }

    #[test]
    fn partition_on_halton_points() {
        let c = TwoDiskConfig::new(0.05, 1.3, 0.7, 4.0, 0.3).unwrap();
        let halton = |i: u64, b: u64| {
            let (mut f, mut r, mut i) = (1.0, 0.0, i);
            while i > 0 {
                f /= b as f64;
                r += f * (i % b) as f64;
                i /= b;
            }
            r
        };
        for i in 1..=100_000u64 {
            let p = pt(-4.0 + 8.0 * halton(i, 2), -3.0 + 6.0 * halton(i, 3));
            let r = c.classify(p, c.default_tol());
            let in1 = (p - c.c1()).norm() < c.r1();
            let in2 = (p - c.c2()).norm() < c.r2();
            assert!(!(in1 && in2));
            let expect = if in1 {
                RegionTag::Inclusion1
            } else if in2 {
                RegionTag::Inclusion2
            } else {
                RegionTag::Matrix
            };
            assert_eq!(r.tag, expect);
            if r.on_boundary.is_none() {
                assert_eq!(c.coefficient(p).unwrap(), c.coefficient_of(expect));
            }
        }
    }

    #[test]
    fn contrast_roundtrip_by_decade() {
        // alpha carries one rounding; near |alpha| = 1 that costs (k+1)^2/(2k) ulps in k.
        for e in -6..=6 {
            let k = 10f64.powi(e);
            let a = contrast_of(k).unwrap();
            assert!(a > -1.0 && a < 1.0);
            let rel = (conductivity_of(a) - k).abs() / k;
            let budget = if e.abs() <= 5 { 1e-12 } else { 1e-11 };
            assert!(rel <= budget, "k = {k}: rel {rel}");
        }
    }

    proptest! {
        #[test]
        fn contrast_monotone(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
            prop_assume!(a < b);
            prop_assert!(contrast_of(a).unwrap() <= contrast_of(b).unwrap());
        }

        #[test]
        fn reflection_swaps_tags(x1 in -4.0f64..4.0, x2 in -3.0f64..3.0) {
            let c = TwoDiskConfig::new(0.05, 1.3, 0.7, 4.0, 0.3).unwrap();
            let m = c.reflected();
            let t = c.classify(pt(x1, x2), 0.0).tag;
            let s = m.classify(pt(-x1, x2), 0.0).tag;
            let swapped = match t {
                RegionTag::Matrix => RegionTag::Matrix,
                RegionTag::Inclusion1 => RegionTag::Inclusion2,
                RegionTag::Inclusion2 => RegionTag::Inclusion1,
            };
            prop_assert_eq!(s, swapped);
        }
    }
}
