//! Inversions across the two circles, their compositions and closed-form iterates.
//!
//! A [`ConjMoebius`] is `z -> (a w + b)/(c w + d)` with `w = z` or `w = conj(z)`
//! depending on the parity bit. The inversion across `|z - c| = r` is
//! `c + r^2/(conj(z) - c)`, so `Phi1`, `Phi2` carry the bit and `Phi2 Phi1`,
//! `Phi1 Phi2` do not.
//!
//! The composites are studied in an affine frame `zeta = sigma z + delta` in which
//! they become `zeta -> t - s^2/zeta` with `s = r1 r2`; their iterates then have an
//! `O(1)` closed form.

use crate::geometry::{Disk, Point, TwoDiskConfig};
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoebiusError {
    #[error("degenerate map (zero determinant)")]
    Degenerate,
    #[error("evaluation at or near the pole of the map (z = {0})")]
    Pole(Point),
}

/// Relative size of `|c w + d|` below which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjMoebius {
    a: C64,
    b: C64,
    c: C64,
    d: C64,
    // Carried multiplicatively; `ad - bc` cancels badly for high iterates.
    det: C64,
    conj: bool,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

impl ConjMoebius {
    pub fn new(a: C64, b: C64, cc: C64, d: C64, conj: bool) -> Result<Self, MoebiusError> {
        let det = a * d - b * cc;
        if det == C64::new(0.0, 0.0) || !det.is_finite() {
            return Err(MoebiusError::Degenerate);
        }
        Ok(ConjMoebius {
            a,
            b,
            c: cc,
            d,
            det,
            conj,
        })
    }

    pub fn identity() -> Self {
        ConjMoebius {
            a: c(1.0),
            b: c(0.0),
            c: c(0.0),
            d: c(1.0),
            det: c(1.0),
            conj: false,
        }
    }

    pub fn det(&self) -> C64 {
        self.det
    }

    /// `(a, b, c, d)`.
    pub fn entries(&self) -> (C64, C64, C64, C64) {
        (self.a, self.b, self.c, self.d)
    }

    /// Conjugation parity.
    pub fn conj(&self) -> bool {
        self.conj
    }

    pub fn is_holomorphic(&self) -> bool {
        !self.conj
    }

    #[inline]
    fn input(&self, z: Point) -> C64 {
        if self.conj {
            z.conj()
        } else {
            z
        }
    }

    fn denominator(&self, z: Point) -> Result<(C64, C64), MoebiusError> {
        let w = self.input(z);
        let den = self.c * w + self.d;
        let scale = (self.c * w).norm().max(self.d.norm());
        if !(den.norm() > POLE_GUARD * scale) {
            return Err(MoebiusError::Pole(z));
        }
        Ok((w, den))
    }

    pub fn apply(&self, z: Point) -> Result<Point, MoebiusError> {
        let (w, den) = self.denominator(z)?;
        Ok((self.a * w + self.b) / den)
    }

    /// `m`-th complex derivative of the holomorphic part `w -> (a w + b)/(c w + d)`
    /// at `w = conj^p(z)`.
    pub fn derivative(&self, z: Point, m: u32) -> Result<C64, MoebiusError> {
        assert!(m >= 1);
        let (_, den) = self.denominator(z)?;
        let mut fact = 1.0;
        for j in 2..=m {
            fact *= j as f64;
        }
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        Ok(self.det() * self.c.powu(m - 1) * (sign * fact) / den.powu(m + 1))
    }

    /// Value and first derivative of the holomorphic part.
    pub fn apply_with_derivative(&self, z: Point) -> Result<(Point, C64), MoebiusError> {
        let (w, den) = self.denominator(z)?;
        Ok(((self.a * w + self.b) / den, self.det() / (den * den)))
    }

    /// `g.compose(f)` is `g o f`.
    pub fn compose(&self, f: &ConjMoebius) -> Result<ConjMoebius, MoebiusError> {
        let g = self;
        // g(f(z)) = M_g(conj^{p_g}(M_f(conj^{p_f} z))); conj of a map's output
        // conjugates its coefficients.
        let (fa, fb, fc, fd) = if g.conj {
            (f.a.conj(), f.b.conj(), f.c.conj(), f.d.conj())
        } else {
            (f.a, f.b, f.c, f.d)
        };
        let det_f = if g.conj { f.det.conj() } else { f.det };
        let mut out = ConjMoebius {
            a: g.a * fa + g.b * fc,
            b: g.a * fb + g.b * fd,
            c: g.c * fa + g.d * fc,
            d: g.c * fb + g.d * fd,
            det: g.det * det_f,
            conj: g.conj ^ f.conj,
        };
        let scale = [out.a, out.b, out.c, out.d]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(MoebiusError::Degenerate);
        }
        out.a /= scale;
        out.b /= scale;
        out.c /= scale;
        out.d /= scale;
        out.det /= scale * scale;
        // A determinant that underflowed marks a high iterate collapsed onto its attractor.
        if !out.det.is_finite() {
            return Err(MoebiusError::Degenerate);
        }
        Ok(out)
    }
}

/// Inversion across the boundary of disk `which`.
pub fn inversion(which: Disk, cfg: &TwoDiskConfig) -> ConjMoebius {
    let cc = cfg.center(which);
    let r = cfg.radius(which);
    ConjMoebius {
        a: cc,
        b: c(r * r) - cc * cc,
        c: c(1.0),
        d: -cc,
        det: c(-r * r),
        conj: true,
    }
}

/// The two composites of the inversions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pair {
    /// `Phi2 o Phi1`, maps the plane minus `B1` into `B2`.
    TwoOne,
    /// `Phi1 o Phi2`, maps the plane minus `B2` into `B1`.
    OneTwo,
}

impl Pair {
    /// Disk containing the attracting fixed point.
    pub fn target(self) -> Disk {
        match self {
            Pair::TwoOne => Disk::Two,
            Pair::OneTwo => Disk::One,
        }
    }
}

pub fn composite(pair: Pair, cfg: &TwoDiskConfig) -> ConjMoebius {
    let p1 = inversion(Disk::One, cfg);
    let p2 = inversion(Disk::Two, cfg);
    match pair {
        Pair::TwoOne => p2.compose(&p1),
        Pair::OneTwo => p1.compose(&p2),
    }
    .expect("inversions are nondegenerate")
}

/// Affine change of variables `zeta = scale z + shift`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedFrame {
    pub scale: C64,
    pub shift: C64,
}

impl NormalizedFrame {
    pub fn to_normalized(&self, z: Point) -> C64 {
        self.scale * z + self.shift
    }

    pub fn from_normalized(&self, zeta: C64) -> Point {
        (zeta - self.shift) / self.scale
    }

    /// Physical map corresponding to the normalized matrix `[[m11, m12], [m21, m22]]`
    /// whose determinant is `det`.
    fn pull_back(&self, m11: C64, m12: C64, m21: C64, m22: C64, det: C64) -> ConjMoebius {
        let (s, t) = (self.scale, self.shift);
        ConjMoebius {
            a: (m11 - t * m21) * s,
            b: m11 * t + m12 - t * (m21 * t + m22),
            c: s * m21 * s,
            d: s * (m21 * t + m22),
            det: det * s * s,
            conj: false,
        }
    }
}

/// Closed-form description of one composite and all its powers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateFamily {
    pub pair: Pair,
    pub frame: NormalizedFrame,
    /// `r1^2 r2^2`.
    pub s2: f64,
    /// Normalized map is `zeta -> trace - s2/zeta`.
    pub trace: f64,
    /// Attracting normalized fixed point (larger modulus).
    pub lambda_att: f64,
    /// Repelling normalized fixed point, `s2 / lambda_att`.
    pub lambda_rep: f64,
}

impl IterateFamily {
    pub fn new(pair: Pair, cfg: &TwoDiskConfig) -> Self {
        Self::from_geometry(pair, cfg.eps(), cfg.r1(), cfg.r2())
    }

    /// Same as [`Self::new`] without the configuration's range checks.
    pub fn from_geometry(pair: Pair, e: f64, r1: f64, r2: f64) -> Self {
        let big_s = r1 + r2 + e;
        let s = r1 * r2;
        let b = s + (r1 + r2) * e + e * e / 2.0;
        let b_minus_s = (r1 + r2) * e + e * e / 2.0;
        let root = (b_minus_s * (b + s)).sqrt();
        let (c1, c2) = (e / 2.0 + r1, -e / 2.0 - r2);
        let (shift, trace, lambda_att) = match pair {
            Pair::TwoOne => (r1 * r1 - c1 * big_s, -2.0 * b, -b - root),
            Pair::OneTwo => (-r2 * r2 - c2 * big_s, 2.0 * b, b + root),
        };
        IterateFamily {
            pair,
            frame: NormalizedFrame {
                scale: c(big_s),
                shift: c(shift),
            },
            s2: s * s,
            trace,
            lambda_att,
            lambda_rep: s * s / lambda_att,
        }
    }

    /// Multiplier `lambda_rep / lambda_att = (s/lambda_att)^2` in `(0, 1)`.
    pub fn ratio(&self) -> f64 {
        self.lambda_rep / self.lambda_att
    }

    /// `(rho^l, 1 - rho^l)` without cancellation.
    fn powers(&self, l: u64) -> (f64, f64) {
        let lr = self.ratio().ln() * l as f64;
        (lr.exp(), -lr.exp_m1())
    }

    /// Normalized iterate matrix for `l >= 0`; the identity at `l = 0`.
    fn normalized_matrix(&self, l: u64) -> (f64, f64, f64, f64) {
        let (p, q) = self.powers(l);
        let (la, lr) = (self.lambda_att, self.lambda_rep);
        (la - p * lr, -self.s2 * q, q, -lr + p * la)
    }

    /// `(Pair)^l` in physical coordinates.
    pub fn iterate(&self, l: u64) -> ConjMoebius {
        if l == 0 {
            return ConjMoebius::identity();
        }
        let (m11, m12, m21, m22) = self.normalized_matrix(l);
        let (p, _) = self.powers(l);
        let gap = self.lambda_att - self.lambda_rep;
        self.frame
            .pull_back(c(m11), c(m12), c(m21), c(m22), c(p * gap * gap))
    }

    /// Fixed points in physical coordinates, `(in B1, in B2)`.
    pub fn fixed_points(&self) -> (Point, Point) {
        let att = self.frame.from_normalized(c(self.lambda_att));
        let rep = self.frame.from_normalized(c(self.lambda_rep));
        match self.pair {
            Pair::TwoOne => (rep, att),
            Pair::OneTwo => (att, rep),
        }
    }

    /// Attracting fixed point, the limit of `Pair^l z` for `z` off the repelling one.
    pub fn attractor(&self) -> Point {
        self.frame.from_normalized(c(self.lambda_att))
    }

    /// The normalized composite `zeta -> trace - s2/zeta`.
    pub fn normalized_map(&self, zeta: C64) -> C64 {
        c(self.trace) - self.s2 / zeta
    }

    /// Closed form of the `l`-th normalized iterate written around the attracting
    /// fixed point, `l >= 1`.
    pub fn normalized_iterate_formula(&self, l: u64, zeta: C64) -> C64 {
        assert!(l >= 1);
        let (p, q) = self.powers(l);
        let (la, lr) = (self.lambda_att, self.lambda_rep);
        let inner = (lr - la) / (zeta * q - (lr - la * p));
        la + (la - lr) * p / q * (1.0 + inner)
    }

    /// First derivative of the normalized iterate from the same closed form.
    pub fn normalized_first_derivative(&self, l: u64, zeta: C64) -> C64 {
        let (p, q) = self.powers(l);
        let (la, lr) = (self.lambda_att, self.lambda_rep);
        let den = zeta * q - lr + la * p;
        (la - lr) * (la - lr) * p / (den * den)
    }

    /// `m`-th derivative of the physical iterate at `z`.
    pub fn derivative(&self, l: u64, m: u32, z: Point) -> Result<C64, MoebiusError> {
        if l == 0 {
            return Ok(if m == 1 { c(1.0) } else { c(0.0) });
        }
        self.iterate(l).derivative(z, m)
    }

    /// `ln |D^m (Pair)^l (z)|`, finite even where the value underflows.
    pub fn log_abs_derivative(&self, l: u64, m: u32, z: Point) -> Result<f64, MoebiusError> {
        if l == 0 {
            return Ok(if m == 1 { 0.0 } else { f64::NEG_INFINITY });
        }
        let (p, q) = self.powers(l);
        let (la, lr) = (self.lambda_att, self.lambda_rep);
        let zeta = self.frame.to_normalized(z);
        let den = zeta * q - lr + la * p;
        let scale = (zeta * q).norm().max((la * p - lr).abs());
        if !(den.norm() > POLE_GUARD * scale) {
            return Err(MoebiusError::Pole(z));
        }
        let ln_fact: f64 = (2..=m).map(|j| (j as f64).ln()).sum();
        Ok(ln_fact
            + l as f64 * self.ratio().ln()
            + 2.0 * (la - lr).abs().ln()
            + (m as f64 - 1.0) * (q.ln() + self.frame.scale.norm().ln())
            - (m as f64 + 1.0) * den.norm().ln())
    }
}

pub fn iterate_closed_form(pair: Pair, l: u64, cfg: &TwoDiskConfig) -> ConjMoebius {
    IterateFamily::new(pair, cfg).iterate(l)
}

pub fn fixed_points(pair: Pair, cfg: &TwoDiskConfig) -> (Point, Point) {
    IterateFamily::new(pair, cfg).fixed_points()
}

pub fn iterate_derivative(
    pair: Pair,
    l: u64,
    m: u32,
    z: Point,
    cfg: &TwoDiskConfig,
) -> Result<C64, MoebiusError> {
    IterateFamily::new(pair, cfg).derivative(l, m, z)
}

/// Sampled decay of `sup |D^m Pair^l|` over a lattice in the target disk.
#[derive(Clone, Debug)]
pub struct DecayCertificate {
    pub pair: Pair,
    pub m: u32,
    /// `(l, ln sup |D^m Pair^l|)`.
    pub log_samples: Vec<(u64, f64)>,
    /// `sample_{l+1}/sample_l`, for `l >= 1`.
    pub ratios: Vec<f64>,
    /// Largest ratio over the second half of the run.
    pub limsup: f64,
    /// `(1 + tau)^{-2} + 0.01`.
    pub bound: f64,
    pub passed: bool,
}

/// Lattice of points covering the closed target disk of `pair`.
pub fn target_lattice(pair: Pair, cfg: &TwoDiskConfig) -> Vec<Point> {
    let d = pair.target();
    let (cc, r) = (cfg.center(d), cfg.radius(d));
    let mut pts = vec![cc];
    for &f in &[0.3, 0.6, 0.9, 1.0] {
        for j in 0..16 {
            let th = std::f64::consts::TAU * j as f64 / 16.0;
            pts.push(cc + C64::from_polar(f * r, th));
        }
    }
    pts
}

pub fn decay_certificate(pair: Pair, cfg: &TwoDiskConfig, m: u32, l_max: u64) -> DecayCertificate {
    assert!(l_max <= 10_000 && m >= 1);
    let fam = IterateFamily::new(pair, cfg);
    let lattice = target_lattice(pair, cfg);
    let mut log_samples = Vec::with_capacity(l_max as usize + 1);
    for l in 0..=l_max {
        let s = lattice
            .iter()
            .filter_map(|&z| fam.log_abs_derivative(l, m, z).ok())
            .fold(f64::NEG_INFINITY, f64::max);
        log_samples.push((l, s));
    }
    let ratios: Vec<f64> = log_samples
        .windows(2)
        .skip(1)
        .map(|w| (w[1].1 - w[0].1).exp())
        .collect();
    let tail = &ratios[ratios.len() / 2..];
    let limsup = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bound = (1.0 + cfg.tau()).powi(-2) + 0.01;
    DecayCertificate {
        pair,
        m,
        log_samples,
        ratios,
        limsup,
        bound,
        passed: limsup <= bound,
    }
}

/// Mapping invariance check: `Pair^l x` lands in the target disk.
pub fn lands_in_target(pair: Pair, l: u64, x: Point, cfg: &TwoDiskConfig) -> bool {
    match iterate_closed_form(pair, l, cfg).apply(x) {
        Ok(w) => cfg.classify(w, 0.0).tag == pair.target().tag(),
        Err(_) => false,
    }
}
