//! Region-wise source data `(f1, f2, f3)` and the built-in presets.

use crate::error::{Error, Result};
use crate::geometry::{Point, RegionTag, TwoDiskConfig};
use crate::potentials::quadrature::GaussRule;
use num_complex::Complex64 as C64;
use std::f64::consts::TAU;
use std::sync::Arc;

/// `(f1, f2, f3)` at a point.
pub type FieldFn = Arc<dyn Fn(Point) -> [f64; 3] + Send + Sync>;
/// `J[i][k] = d_k f_i` for the vector part.
pub type JacobianFn = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

/// Data on one region, supported in a disk contained in the closure of that region.
#[derive(Clone)]
pub struct RegionData {
    pub center: Point,
    pub radius: f64,
    pub field: FieldFn,
    pub jacobian: JacobianFn,
    /// Skips the boundary term of the gradient rule when the data vanish on the support circle.
    pub vanishes_on_boundary: bool,
}

impl std::fmt::Debug for RegionData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegionData")
            .field("center", &self.center)
            .field("radius", &self.radius)
            .field("vanishes_on_boundary", &self.vanishes_on_boundary)
            .finish()
    }
}

impl RegionData {
    pub fn contains(&self, y: Point) -> bool {
        (y - self.center).norm() <= self.radius
    }

    /// Field with zero extension outside the support disk.
    pub fn field_at(&self, y: Point) -> [f64; 3] {
        if self.contains(y) {
            (self.field)(y)
        } else {
            [0.0; 3]
        }
    }
}

/// Data on the three regions; each region may carry several pieces.
#[derive(Clone, Debug, Default)]
pub struct PiecewiseSource {
    regions: [Vec<RegionData>; 3],
}

impl PiecewiseSource {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Adds one piece of data on region `tag`.
    pub fn with_region(mut self, tag: RegionTag, data: RegionData) -> Self {
        self.regions[tag.index()].push(data);
        self
    }

    pub fn region(&self, tag: RegionTag) -> &[RegionData] {
        &self.regions[tag.index()]
    }

    /// First piece on region `tag`, if any.
    pub fn first(&self, tag: RegionTag) -> Option<&RegionData> {
        self.regions[tag.index()].first()
    }

    pub fn is_zero(&self) -> bool {
        self.regions.iter().all(|r| r.is_empty())
    }

    /// A disk enclosing every piece, centered at the mean piece center.
    pub fn support(&self) -> Option<(Point, f64)> {
        let rs: Vec<&RegionData> = self.regions.iter().flatten().collect();
        if rs.is_empty() {
            return None;
        }
        let c = rs.iter().map(|r| r.center).sum::<Point>() / rs.len() as f64;
        let rad = rs
            .iter()
            .map(|r| (r.center - c).norm() + r.radius)
            .fold(0.0, f64::max);
        Some((c, rad))
    }

    /// Each support disk must sit in the closure of its region; matrix supports must avoid both disks.
    pub fn validate(&self, cfg: &TwoDiskConfig) -> Result<()> {
        for tag in [
            RegionTag::Matrix,
            RegionTag::Inclusion1,
            RegionTag::Inclusion2,
        ] {
            for r in self.region(tag) {
                if !(r.radius > 0.0) || !r.radius.is_finite() {
                    return Err(Error::InvalidSource(
                        "support radius must be positive".into(),
                    ));
                }
                match tag.disk() {
                    Some(d) => {
                        let reach = (r.center - cfg.center(d)).norm() + r.radius;
                        if reach > cfg.radius(d) * (1.0 + 1e-12) {
                            return Err(Error::InvalidSource(format!(
                                "{} data leave the disk",
                                tag.name()
                            )));
                        }
                    }
                    None => {
                        for d in [crate::geometry::Disk::One, crate::geometry::Disk::Two] {
                            let gap = (r.center - cfg.center(d)).norm() - cfg.radius(d) - r.radius;
                            if gap < 0.0 {
                                return Err(Error::InvalidSource(format!(
                                    "matrix support overlaps {}",
                                    d.tag().name()
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Sample a ring just outside each support disk and confirm the data vanish there.
    pub fn check_support(&self, samples: usize) -> bool {
        self.regions.iter().flatten().all(|r| {
            (0..samples).all(|j| {
                let t = j as f64 / samples as f64;
                let rad = r.radius * (1.0 + 1e-9 + 0.5 * t);
                let y = r.center
                    + C64::from_polar(rad, TAU * (0.618_033_988_749_895 * j as f64).fract());
                (r.field)(y).iter().all(|&v| v == 0.0)
            })
        })
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &PiecewiseSource, b: f64) -> PiecewiseSource {
        let mut out = PiecewiseSource::zero();
        for i in 0..3 {
            out.regions[i] = self.regions[i]
                .iter()
                .map(|p| scale_region(p, a))
                .chain(other.regions[i].iter().map(|q| scale_region(q, b)))
                .collect();
        }
        out
    }

    /// `(f1, f2, f3)` at `y`, using the pieces of region `tag`.
    pub fn field_on(&self, tag: RegionTag, y: Point) -> [f64; 3] {
        let mut v = [0.0; 3];
        for r in self.region(tag) {
            let f = r.field_at(y);
            for k in 0..3 {
                v[k] += f[k];
            }
        }
        v
    }
    /// Sum of all pieces at `y`, each extended by zero outside its support.
    pub fn field(&self, y: Point) -> [f64; 3] {
        let mut v = [0.0; 3];
        for r in self.regions.iter().flatten() {
            let f = r.field_at(y);
            for k in 0..3 {
                v[k] += f[k];
            }
        }
        v
    }
}

fn scale_region(p: &RegionData, a: f64) -> RegionData {
    let (f, j) = (p.field.clone(), p.jacobian.clone());
    RegionData {
        center: p.center,
        radius: p.radius,
        field: Arc::new(move |y| f(y).map(|v| a * v)),
        jacobian: Arc::new(move |y| j(y).map(|r| r.map(|v| a * v))),
        vanishes_on_boundary: p.vanishes_on_boundary,
    }
}

/// `exp(-1/(1 - s^2))` with `s = |y - p|/R`, scaled to a prescribed integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
    /// Multiplier making the integral equal to the requested mass.
    pub scale: f64,
}

/// `∫_0^1 exp(-1/(1 - s^2)) s ds`.
fn bump_radial_moment() -> f64 {
    // The profile is flat to all orders at s = 1; composite Gauss panels resolve it to round-off.
    let g = GaussRule::new(20);
    let panels = 40;
    let mut acc = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        for (s, w) in g.on(a, b) {
            acc += w * s * (-1.0 / (1.0 - s * s)).exp();
        }
    }
    acc
}

impl Bump {
    pub fn with_mass(center: Point, radius: f64, mass: f64) -> Self {
        let unit = TAU * radius * radius * bump_radial_moment();
        Bump {
            center,
            radius,
            scale: mass / unit,
        }
    }

    pub fn value(&self, y: Point) -> f64 {
        let s2 = (y - self.center).norm_sqr() / (self.radius * self.radius);
        if s2 >= 1.0 {
            return 0.0;
        }
        self.scale * (-1.0 / (1.0 - s2)).exp()
    }

    pub fn gradient(&self, y: Point) -> [f64; 2] {
        let r2 = self.radius * self.radius;
        let d = y - self.center;
        let s2 = d.norm_sqr() / r2;
        if s2 >= 1.0 {
            return [0.0, 0.0];
        }
        let f = -2.0 * self.scale * (-1.0 / (1.0 - s2)).exp() / (r2 * (1.0 - s2) * (1.0 - s2));
        [f * d.re, f * d.im]
    }
}

/// Region data from a bump in component `comp` (0, 1 for the vector part, 2 for `f3`).
pub fn bump_region(bump: Bump, comp: usize) -> RegionData {
    RegionData {
        center: bump.center,
        radius: bump.radius,
        field: Arc::new(move |y| {
            let mut v = [0.0; 3];
            v[comp] = bump.value(y);
            v
        }),
        jacobian: Arc::new(move |y| {
            let mut j = [[0.0; 2]; 2];
            if comp < 2 {
                j[comp] = bump.gradient(y);
            }
            j
        }),
        vanishes_on_boundary: true,
    }
}

/// The sign-test source: `f1` a bump at `(-3 r1, 0)` of radius `r1/10` and integral `r1^2`;
/// `f2 = f3 = 0`. For unit radii this is the unit-integral bump in `B_{1/10}((-3, 0))`, and
/// scaling both radii and the gap by `s` scales the source with them.
pub fn lower_bound_source(cfg: &TwoDiskConfig) -> PiecewiseSource {
    let r = cfg.r1();
    let bump = Bump::with_mass(C64::new(-3.0 * r, 0.0), 0.1 * r, r * r);
    PiecewiseSource::zero().with_region(RegionTag::Matrix, bump_region(bump, 0))
}

/// Constant vector field `(value, 0)` on `B1`.
pub fn constant_disk1(cfg: &TwoDiskConfig, value: f64) -> PiecewiseSource {
    PiecewiseSource::zero().with_region(
        RegionTag::Inclusion1,
        RegionData {
            center: cfg.c1(),
            radius: cfg.r1(),
            field: Arc::new(move |_| [value, 0.0, 0.0]),
            jacobian: Arc::new(|_| [[0.0; 2]; 2]),
            vanishes_on_boundary: false,
        },
    )
}

/// Radial bump in the volume term `f3` with total mass `mass`, placed in the region of its center.
pub fn radial_bump(
    cfg: &TwoDiskConfig,
    center: Point,
    radius: f64,
    mass: f64,
) -> Result<PiecewiseSource> {
    let tag = cfg.region_strict(center)?;
    let src = PiecewiseSource::zero()
        .with_region(tag, bump_region(Bump::with_mass(center, radius, mass), 2));
    src.validate(cfg)?;
    Ok(src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pt;
    use crate::potentials::quadrature::DiskRule;

    #[test]
    fn lower_bound_bump_is_normalized_and_even() {
        let cfg = TwoDiskConfig::unit(0.1, 5.0, 5.0).unwrap();
        let src = lower_bound_source(&cfg);
        src.validate(&cfg).unwrap();
        let r = src.first(RegionTag::Matrix).unwrap();
        assert_eq!(r.center, pt(-3.0, 0.0));
        assert_eq!(r.radius, 0.1);
        let rule = DiskRule::new(r.center, r.radius, 200, 16);
        let mass: f64 = rule.points.iter().map(|(y, w)| w * (r.field)(*y)[0]).sum();
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
        for y in [pt(-3.03, 0.02), pt(-2.95, 0.07), pt(-3.0, 0.05)] {
            assert_eq!((r.field)(y), (r.field)(y.conj()));
        }
        assert!(src.check_support(500));
    }

    #[test]
    fn bump_gradient_matches_difference() {
        let b = Bump::with_mass(pt(0.3, -0.2), 0.5, 2.0);
        let h = 1e-6;
        for y in [pt(0.4, -0.1), pt(0.1, 0.05), pt(0.5, -0.5)] {
            let g = b.gradient(y);
            let d1 = (b.value(y + h) - b.value(y - h)) / (2.0 * h);
            let d2 = (b.value(y + C64::new(0.0, h)) - b.value(y - C64::new(0.0, h))) / (2.0 * h);
            assert!(
                (g[0] - d1).abs() < 1e-6 * g[0].abs().max(1.0)
                    && (g[1] - d2).abs() < 1e-6 * g[1].abs().max(1.0)
            );
        }
    }

    #[test]
    fn validation_rejects_misplaced_supports() {
        let cfg = TwoDiskConfig::unit(0.1, 2.0, 2.0).unwrap();
        let bad = PiecewiseSource::zero().with_region(
            RegionTag::Matrix,
            bump_region(Bump::with_mass(pt(0.0, 0.0), 0.5, 1.0), 0),
        );
        assert!(bad.validate(&cfg).is_err());
        assert!(constant_disk1(&cfg, 1.0).validate(&cfg).is_ok());
        assert!(radial_bump(&cfg, pt(0.0, 2.0), 0.3, 1.0).is_ok());
    }
}
