//! Log potentials of one region's data.
//!
//! Integrating by parts on the support disk `D`,
//! `∫_D D_{y_i} log|w - y| f_i dy = ∮_{∂D} log|w - y| f·n ds - ∫_D log|w - y| div f dy`,
//! so every potential is a volume log potential of a scalar density plus a
//! single layer on the support circle. The single layer is evaluated exactly
//! from the Fourier coefficients of its density; the volume part uses a
//! multipole expansion far away and a polar rule centered at `w` nearby.

use crate::error::{Error, Result};
use crate::geometry::{Disk, Point, TwoDiskConfig};
use crate::images::{eval_mapped, ImagePotential};
use crate::moebius::{inversion, ConjMoebius};
use crate::potentials::quadrature::{adaptive, DiskRule, GaussRule};
use crate::potentials::source::RegionData;
use crate::series::ValGrad;
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

/// Quadrature settings shared by all layers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureGrid {
    /// Radial Gauss points of the moment rule.
    pub n_r: usize,
    /// Angular trapezoid points of the moment rule.
    pub n_theta: usize,
    /// Gauss points along each ray of the polar near-field rule.
    pub n_ray: usize,
    /// Gauss points per adaptive angular panel.
    pub n_panel: usize,
    /// Samples of the single-layer density on the support circle.
    pub n_circle: usize,
    pub n_moments: usize,
    /// Multipole expansion is used at distance `far_factor * R` from the support center and beyond.
    pub far_factor: f64,
    /// Relative tolerance of the adaptive angular integration.
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid {
            n_r: 96,
            n_theta: 128,
            n_ray: 128,
            n_panel: 16,
            n_circle: 128,
            n_moments: 64,
            far_factor: 3.0,
            tol: 1e-12,
            max_depth: 30,
        }
    }
}

impl QuadratureGrid {
    /// Every point count multiplied by `f`, for self-convergence checks.
    pub fn refined(&self, f: usize) -> Self {
        QuadratureGrid {
            n_r: self.n_r * f,
            n_theta: self.n_theta * f,
            n_ray: self.n_ray * f,
            n_panel: self.n_panel,
            n_circle: self.n_circle * f,
            n_moments: self.n_moments,
            far_factor: self.far_factor,
            tol: self.tol / f as f64,
            max_depth: self.max_depth + 4,
        }
    }
}

/// Which density of the region data the layer integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    /// `h = ∫ D_{y_i} log|x - y| f_i dy`.
    Divergence,
    /// `g = ∫ log|x - y| f3 dy`.
    Volume,
    /// `g - h`, the combination entering the solution formula.
    Combined,
}

type Density = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// `sum_n beta_n (s/zeta)^n / n` style expansion about `center` with scale `s`.
#[derive(Clone, Debug)]
struct Multipole {
    center: Point,
    scale: f64,
    mass: f64,
    /// `b_n / s^n`, `n >= 1`.
    moments: Vec<C64>,
    /// `max_{j >= k} |moments[j]|`, for truncating once the remaining terms are negligible.
    tail_max: Vec<f64>,
}

impl Multipole {
    fn new(center: Point, scale: f64, mass: f64, moments: Vec<C64>) -> Self {
        let mut tail_max = vec![0.0f64; moments.len() + 1];
        for k in (0..moments.len()).rev() {
            tail_max[k] = tail_max[k + 1].max(moments[k].norm());
        }
        Multipole {
            center,
            scale,
            mass,
            moments,
            tail_max,
        }
    }

    /// Remaining terms from index `k` on are below rounding when `|q| < 1` is the series ratio.
    fn negligible(&self, k: usize, pw: f64, q: f64) -> bool {
        q < 1.0 && self.tail_max[k] * pw <= 1e-17 * (self.mass.abs() + self.tail_max[0]) * (1.0 - q)
    }

    /// `P = Re(M log zeta - sum b_n zeta^{-n}/n)` with gradient `conj(P')`.
    fn eval(&self, w: Point) -> ValGrad {
        let z = (w - self.center) / self.scale;
        let iz = C64::new(1.0, 0.0) / z;
        let mut pw = iz;
        let mut phi = C64::new(0.0, 0.0);
        let mut dphi = self.mass * iz;
        let q = iz.norm();
        for (k, b) in self.moments.iter().enumerate() {
            if self.negligible(k, pw.norm(), q) {
                break;
            }
            let n = (k + 1) as f64;
            phi -= b * pw / n;
            dphi += b * pw * iz;
            pw *= iz;
        }
        let value = self.mass * ((w - self.center).norm().ln()) + phi.re;
        ValGrad::new(value, (dphi / self.scale).conj())
    }

    /// `-Re sum b_n zbar^n / n` with `zbar = conj(x')/s^2 * s`, the regular part of `P(Phi x)`.
    fn eval_reflected(&self, xp: Point) -> ValGrad {
        let t = xp.conj() / self.scale;
        let mut pw = C64::new(1.0, 0.0);
        let mut val = C64::new(0.0, 0.0);
        let mut grad = C64::new(0.0, 0.0);
        let q = t.norm();
        for (k, b) in self.moments.iter().enumerate() {
            if self.negligible(k, pw.norm(), q) {
                break;
            }
            let n = (k + 1) as f64;
            grad -= b * pw;
            pw *= t;
            val -= b * pw / n;
        }
        ValGrad::new(val.re, grad / self.scale)
    }

    fn reflected_ratio(&self, xp: Point, reach: f64) -> f64 {
        xp.norm() * reach / (self.scale * self.scale)
    }
}

/// Potential of one region's data.
#[derive(Clone)]
pub struct RegionLayer {
    center: Point,
    radius: f64,
    density: Option<Density>,
    /// Fourier coefficients `m_n`, `n >= 0`, of the single-layer density in the circle angle.
    circle: Vec<C64>,
    far: Multipole,
    /// Expansion about the disk center, for reflected evaluations.
    near_center: Option<(Disk, Multipole, ConjMoebius, f64)>,
    abs_scale: f64,
    grid: QuadratureGrid,
    ray: GaussRule,
    panel: GaussRule,
}

impl std::fmt::Debug for RegionLayer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegionLayer")
            .field("center", &self.center)
            .field("radius", &self.radius)
            .field("mass", &self.far.mass)
            .finish()
    }
}

fn densities(data: &RegionData, kind: LayerKind) -> (Density, f64) {
    let (field, jac) = (data.field.clone(), data.jacobian.clone());
    let vol: Density = match kind {
        LayerKind::Volume => Arc::new(move |y| field(y)[2]),
        LayerKind::Divergence => Arc::new(move |y| {
            let j = jac(y);
            -(j[0][0] + j[1][1])
        }),
        LayerKind::Combined => Arc::new(move |y| {
            let j = jac(y);
            field(y)[2] + j[0][0] + j[1][1]
        }),
    };
    let line_sign = match kind {
        LayerKind::Volume => 0.0,
        LayerKind::Divergence => 1.0,
        LayerKind::Combined => -1.0,
    };
    (vol, line_sign)
}

fn moments_about(pts: &[(Point, f64)], c: Point, s: f64, n: usize) -> Vec<C64> {
    let mut m = vec![C64::new(0.0, 0.0); n];
    for &(y, w) in pts {
        let z = (y - c) / s;
        let mut pw = z;
        for mk in m.iter_mut() {
            *mk += w * pw;
            pw *= z;
        }
    }
    m
}

impl RegionLayer {
    /// Layer for data living in `region`; `disk` enables the reflected evaluation about that disk.
    pub fn new(
        cfg: &TwoDiskConfig,
        disk: Option<Disk>,
        data: &RegionData,
        kind: LayerKind,
        grid: QuadratureGrid,
    ) -> Self {
        let (vol, line_sign) = densities(data, kind);
        let (p, r) = (data.center, data.radius);
        let rule = DiskRule::new(p, r, grid.n_r, grid.n_theta);
        let weighted: Vec<(Point, f64)> =
            rule.points.iter().map(|&(y, w)| (y, w * vol(y))).collect();
        let has_volume = weighted.iter().any(|&(_, w)| w != 0.0);
        let mut abs_scale: f64 = weighted.iter().map(|&(_, w)| w.abs()).sum();

        // Single-layer density on the support circle, with arclength weight.
        let nc = grid.n_circle;
        let mut line: Vec<(Point, f64)> = Vec::new();
        let mut samples = vec![0.0; nc];
        if line_sign != 0.0 {
            for (j, s) in samples.iter_mut().enumerate() {
                let e = C64::from_polar(1.0, TAU * j as f64 / nc as f64);
                let f = (data.field)(p + e * r);
                *s = line_sign * (f[0] * e.re + f[1] * e.im);
            }
        }
        let has_line = samples.iter().any(|&s| s != 0.0);
        let mut circle = Vec::new();
        if has_line {
            let ds = TAU * r / nc as f64;
            for (j, &s) in samples.iter().enumerate() {
                let e = C64::from_polar(1.0, TAU * j as f64 / nc as f64);
                line.push((p + e * r, s * ds));
                abs_scale += s.abs() * ds;
            }
            circle = (0..nc / 2)
                .map(|n| {
                    samples
                        .iter()
                        .enumerate()
                        .map(|(j, &s)| s * C64::from_polar(1.0, -TAU * (n * j) as f64 / nc as f64))
                        .sum::<C64>()
                        / nc as f64
                })
                .collect();
            let top = circle.iter().map(|m| m.norm()).fold(0.0, f64::max);
            while circle.len() > 1 && circle.last().unwrap().norm() <= 1e-15 * top {
                circle.pop();
            }
        }

        let all: Vec<(Point, f64)> = weighted.iter().chain(line.iter()).copied().collect();
        let mass: f64 = all.iter().map(|&(_, w)| w).sum();
        let far = Multipole::new(p, r, mass, moments_about(&all, p, r, grid.n_moments));
        let near_center = disk.map(|d| {
            let (c, rd) = (cfg.center(d), cfg.radius(d));
            let reach = (p - c).norm() + r;
            let m = Multipole::new(c, rd, mass, moments_about(&all, c, rd, grid.n_moments));
            (d, m, inversion(d, cfg), reach)
        });
        RegionLayer {
            center: p,
            radius: r,
            density: has_volume.then_some(vol),
            circle,
            far,
            near_center,
            abs_scale: abs_scale.max(f64::MIN_POSITIVE),
            grid,
            ray: GaussRule::new(grid.n_ray),
            panel: GaussRule::new(grid.n_panel),
        }
    }

    pub fn mass(&self) -> f64 {
        self.far.mass
    }

    pub fn support(&self) -> (Point, f64) {
        (self.center, self.radius)
    }

    /// Exact single layer from the Fourier coefficients of its density.
    fn single_layer(&self, w: Point) -> ValGrad {
        if self.circle.is_empty() {
            return ValGrad::zero();
        }
        let r = self.radius;
        let z = (w - self.center) / r;
        let m0 = self.circle[0].re;
        if z.norm() >= 1.0 {
            let iz = C64::new(1.0, 0.0) / z;
            let mut pw = iz;
            let mut phi = C64::new(m0 * (w - self.center).norm().ln(), 0.0);
            let mut dphi = m0 * iz;
            for (k, m) in self.circle.iter().enumerate().skip(1) {
                phi -= m.conj() * pw / k as f64;
                dphi += m.conj() * pw * iz;
                pw *= iz;
            }
            ValGrad::new(TAU * r * phi.re, (TAU * dphi).conj())
        } else {
            let mut pw = C64::new(1.0, 0.0);
            let mut phi = C64::new(m0 * r.ln(), 0.0);
            let mut dphi = C64::new(0.0, 0.0);
            for (k, m) in self.circle.iter().enumerate().skip(1) {
                dphi -= m * pw;
                pw *= z;
                phi -= m * pw / k as f64;
            }
            ValGrad::new(TAU * r * phi.re, (TAU * dphi).conj())
        }
    }

    /// Volume potential by a polar rule centered at `w`.
    fn volume_near(&self, rho: &Density, w: Point) -> Result<ValGrad> {
        let v = w - self.center;
        let (r, d) = (self.radius, v.norm());
        let tol = self.grid.tol * self.abs_scale;
        let ray = &self.ray;
        let out = if d < r {
            let along = |th: f64| {
                let e = C64::from_polar(1.0, th);
                let b = v.re * e.re + v.im * e.im;
                let t_max = -b + (b * b + r * r - d * d).max(0.0).sqrt();
                let (mut val, mut g) = (0.0, 0.0);
                // t = T u^2 removes the t log t endpoint behaviour.
                for (u, wu) in ray.on(0.0, 1.0) {
                    let t = t_max * u * u;
                    let jac = 2.0 * t_max * u * wu;
                    let f = rho(w + e * t);
                    if t > 0.0 {
                        val += jac * t * t.ln() * f;
                    }
                    g += jac * f;
                }
                [val, -e.re * g, -e.im * g]
            };
            let th0 = v.im.atan2(v.re);
            let breaks: Vec<f64> = (0..=8).map(|k| th0 + TAU * k as f64 / 8.0).collect();
            adaptive(along, &breaks, &self.panel, tol, self.grid.max_depth)
        } else {
            let th0 = (-v).im.atan2((-v).re);
            let half = (r / d).min(1.0).asin();
            let along = |phi: f64| {
                let th = th0 + half * phi.sin();
                let dth = half * phi.cos();
                let e = C64::from_polar(1.0, th);
                let b = -(v.re * e.re + v.im * e.im);
                let h = (r * r - d * d + b * b).max(0.0).sqrt();
                let (t1, t2) = ((b - h).max(0.0), b + h);
                let (mut val, mut g) = (0.0, 0.0);
                if t2 > t1 {
                    for (t, wt) in ray.on(t1, t2) {
                        let f = rho(w + e * t);
                        if t > 0.0 {
                            val += wt * t * t.ln() * f;
                        }
                        g += wt * f;
                    }
                }
                [dth * val, -dth * e.re * g, -dth * e.im * g]
            };
            let breaks: Vec<f64> = (0..=4).map(|k| -FRAC_PI_2 + PI * k as f64 / 4.0).collect();
            adaptive(along, &breaks, &self.panel, tol, self.grid.max_depth)
        };
        let vg = ValGrad::new(out.value[0], C64::new(out.value[1], out.value[2]));
        if !out.converged {
            return Err(Error::Quadrature {
                partial: vg,
                estimate: out.error,
            });
        }
        Ok(vg)
    }

    /// Value and complex gradient, choosing the far or near representation.
    pub fn eval_at(&self, w: Point) -> Result<ValGrad> {
        if (w - self.center).norm() >= self.grid.far_factor * self.radius {
            return Ok(self.far.eval(w));
        }
        let mut out = self.single_layer(w);
        if let Some(rho) = &self.density {
            out += self.volume_near(rho, w)?;
        }
        Ok(out)
    }

    /// Declared absolute accuracy of a near-field evaluation.
    pub fn error_scale(&self) -> f64 {
        self.grid.tol * self.abs_scale
    }
}

impl ImagePotential for RegionLayer {
    fn eval(&self, w: Point) -> Result<ValGrad> {
        self.eval_at(w)
    }

    fn monopole(&self) -> f64 {
        self.far.mass
    }

    fn reflected_regular(&self, cfg: &TwoDiskConfig, d: Disk, x: Point) -> Result<ValGrad> {
        let xp = x - cfg.center(d);
        if let Some((dd, m, _, reach)) = &self.near_center {
            if *dd == d && m.reflected_ratio(xp, *reach) <= 0.5 {
                return Ok(m.eval_reflected(xp));
            }
        }
        if xp == C64::new(0.0, 0.0) {
            return Err(Error::CenterSingularity(x));
        }
        let inv = match &self.near_center {
            Some((dd, _, inv, _)) if *dd == d => *inv,
            _ => inversion(d, cfg),
        };
        let mut v = eval_mapped(|w| self.eval_at(w), &inv, x)?;
        let mass = self.far.mass;
        v.value -= mass * (2.0 * cfg.radius(d).ln() - xp.norm().ln());
        v.grad += mass / xp.conj();
        Ok(v)
    }
}
