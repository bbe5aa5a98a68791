//! The auxiliary function `𝒢(x, y)` and the Green's function `G(x, y)`.
//!
//! Normalization is `Δ log|x - y| = δ`; multiply by [`PHYS_SCALE`] for the
//! Green's function of `-div(a grad)` with the usual `2π`.

use crate::error::{Error, Result};
use crate::geometry::{Disk, Point, Region, RegionTag, TwoDiskConfig};
use crate::images::{log_charge, ImageEval, ImagePotential, ImageSystem, RegionSource};
use crate::series::{plan_truncation, Quantity, SeriesPolicy, ValGrad};
use num_complex::Complex64 as C64;
use std::f64::consts::{PI, TAU};

pub const PHYS_SCALE: f64 = -1.0 / (2.0 * PI);

/// Unit charge `log|w - y|`.
#[derive(Clone, Copy, Debug)]
pub struct PointSource {
    pub y: Point,
}

impl ImagePotential for PointSource {
    fn eval(&self, w: Point) -> Result<ValGrad> {
        log_charge(w, self.y)
    }

    fn monopole(&self) -> f64 {
        1.0
    }

    fn reflected_regular(&self, cfg: &TwoDiskConfig, d: Disk, x: Point) -> Result<ValGrad> {
        let (c, r2) = (cfg.center(d), cfg.radius(d).powi(2));
        let (xp, yp) = (x - c, self.y - c);
        let phi = C64::new(1.0, 0.0) - xp.conj() * yp / r2;
        Ok(ValGrad::new(phi.norm().ln(), -yp / (r2 * phi)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreensEval<T> {
    pub value: T,
    pub terms_used: usize,
    pub tail_estimate: f64,
    pub x_region: Region,
    pub y_region: Region,
}

/// One-sided audit of the transmission conditions at a boundary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpReport {
    pub value_jump: f64,
    pub flux_jump: f64,
    /// `|D_nu G|` outside minus inside, extrapolated; nonzero whenever `k != 1`.
    pub unweighted_jump: f64,
    /// Inner one-sided normal derivative, extrapolated.
    pub inner_normal_derivative: f64,
    pub tail_estimate: f64,
}

/// Green's function evaluator for one configuration and policy.
#[derive(Clone, Debug)]
pub struct GreenFunction {
    sys: ImageSystem,
    policy: SeriesPolicy,
}

fn tagged(tag: RegionTag) -> Region {
    Region {
        tag,
        on_boundary: None,
    }
}

impl GreenFunction {
    pub fn new(cfg: &TwoDiskConfig, policy: SeriesPolicy) -> Self {
        GreenFunction {
            sys: ImageSystem::new(cfg),
            policy,
        }
    }

    pub fn cfg(&self) -> &TwoDiskConfig {
        self.sys.cfg()
    }

    pub fn policy(&self) -> &SeriesPolicy {
        &self.policy
    }

    fn region_of(&self, p: Point) -> Result<RegionTag> {
        Ok(self.cfg().region_strict(p)?)
    }

    fn check_distinct(x: Point, y: Point) -> Result<()> {
        if (x - y).norm() <= 1e-14 * y.norm().max(1.0) {
            return Err(Error::Singular(x));
        }
        Ok(())
    }

    fn raw(
        &self,
        x: Point,
        x_tag: RegionTag,
        y: Point,
        y_tag: RegionTag,
        green: bool,
        quantity: Quantity,
    ) -> Result<ImageEval> {
        Self::check_distinct(x, y)?;
        let cfg = self.cfg();
        let q = match (green, y_tag.disk()) {
            (true, Some(d)) => {
                let c = cfg.contrast_on(d);
                c / (1.0 - c)
            }
            _ => 0.0,
        };
        let ps = PointSource { y };
        let src = RegionSource {
            region: y_tag,
            potential: &ps,
            center_charge: q,
        };
        self.sys.evaluate(x, x_tag, &src, &self.policy, quantity)
    }

    fn report<T>(&self, e: ImageEval, v: T, x_tag: RegionTag, y_tag: RegionTag) -> GreensEval<T> {
        GreensEval {
            value: v,
            terms_used: e.terms,
            tail_estimate: e.tail,
            x_region: tagged(x_tag),
            y_region: tagged(y_tag),
        }
    }

    /// `𝒢(x, y)` with explicit region tags.
    pub fn eval_aux_on(
        &self,
        x: Point,
        x_tag: RegionTag,
        y: Point,
        y_tag: RegionTag,
    ) -> Result<GreensEval<f64>> {
        let e = self.raw(x, x_tag, y, y_tag, false, Quantity::Value)?;
        Ok(self.report(e, e.value.value, x_tag, y_tag))
    }

    pub fn eval_aux(&self, x: Point, y: Point) -> Result<GreensEval<f64>> {
        self.eval_aux_on(x, self.region_of(x)?, y, self.region_of(y)?)
    }

    /// `G(x, y)` with explicit region tags.
    pub fn eval_on(
        &self,
        x: Point,
        x_tag: RegionTag,
        y: Point,
        y_tag: RegionTag,
    ) -> Result<GreensEval<f64>> {
        let e = self.raw(x, x_tag, y, y_tag, true, Quantity::Value)?;
        Ok(self.report(e, e.value.value, x_tag, y_tag))
    }

    pub fn eval(&self, x: Point, y: Point) -> Result<GreensEval<f64>> {
        self.eval_on(x, self.region_of(x)?, y, self.region_of(y)?)
    }

    /// Value and gradient of `G` in `x`.
    pub fn value_grad_on(
        &self,
        x: Point,
        x_tag: RegionTag,
        y: Point,
        y_tag: RegionTag,
    ) -> Result<GreensEval<ValGrad>> {
        let e = self.raw(x, x_tag, y, y_tag, true, Quantity::Both)?;
        Ok(self.report(e, e.value, x_tag, y_tag))
    }

    pub fn grad_x_on(
        &self,
        x: Point,
        x_tag: RegionTag,
        y: Point,
        y_tag: RegionTag,
    ) -> Result<GreensEval<[f64; 2]>> {
        let e = self.raw(x, x_tag, y, y_tag, true, Quantity::Gradient)?;
        Ok(self.report(e, e.value.gradient(), x_tag, y_tag))
    }

    pub fn grad_x(&self, x: Point, y: Point) -> Result<GreensEval<[f64; 2]>> {
        self.grad_x_on(x, self.region_of(x)?, y, self.region_of(y)?)
    }

    /// Transmission audit at `s` on the boundary of `disk`, with Richardson extrapolation in `h`.
    pub fn interface_jump(&self, y: Point, disk: Disk, s: Point, h: f64) -> Result<JumpReport> {
        let cfg = *self.cfg();
        if !(h > 1e-8 && h < cfg.eps() / 10.0 + 1e-15) {
            return Err(Error::InvalidArgument(format!(
                "step h = {h} outside (1e-8, eps/10)"
            )));
        }
        let c = cfg.center(disk);
        let nu = (s - c) / (s - c).norm();
        let y_tag = self.region_of(y)?;
        let k = cfg.conductivity(disk);
        let mut tail: f64 = 0.0;
        let mut levels = [[0.0; 3]; 3];
        for (i, hh) in [h, h / 2.0, h / 4.0].into_iter().enumerate() {
            let out = self.value_grad_on(s + nu * hh, RegionTag::Matrix, y, y_tag)?;
            let inn = self.value_grad_on(s - nu * hh, disk.tag(), y, y_tag)?;
            tail = tail.max(out.tail_estimate).max(inn.tail_estimate);
            let dn_out = (nu.conj() * out.value.grad).re;
            let dn_in = (nu.conj() * inn.value.grad).re;
            levels[0][i] = out.value.value - inn.value.value;
            levels[1][i] = dn_out - k * dn_in;
            levels[2][i] = dn_in;
        }
        let rich = |j: [f64; 3]| {
            let r0 = 2.0 * j[1] - j[0];
            let r1 = 2.0 * j[2] - j[1];
            (4.0 * r1 - r0) / 3.0
        };
        let dn_in = rich(levels[2]);
        let flux = rich(levels[1]);
        Ok(JumpReport {
            value_jump: rich(levels[0]).abs(),
            flux_jump: flux.abs(),
            unweighted_jump: (flux + (k - 1.0) * dn_in).abs(),
            inner_normal_derivative: dn_in,
            tail_estimate: tail,
        })
    }

    /// `∮ a ∂_ν G ds` over `|x - y| = rho`, 256-point trapezoid rule.
    pub fn flux_around_source(&self, y: Point, rho: f64) -> Result<f64> {
        let cfg = *self.cfg();
        for d in [Disk::One, Disk::Two] {
            let dc = (y - cfg.center(d)).norm();
            if rho >= (dc - cfg.radius(d)).abs() || (dc - rho).abs() < 1e-12 {
                return Err(Error::InvalidContour);
            }
        }
        let y_tag = self.region_of(y)?;
        let x_tag = y_tag;
        let a = cfg.coefficient_of(x_tag);
        let n = 256;
        let mut sum = 0.0;
        for j in 0..n {
            let nu = C64::from_polar(1.0, TAU * j as f64 / n as f64);
            let g = self.grad_x_on(y + nu * rho, x_tag, y, y_tag)?.value;
            sum += a * (nu.re * g[0] + nu.im * g[1]);
        }
        Ok(sum * rho * TAU / n as f64)
    }

    /// `|G(x, y) - G(y, x)|`, reported rather than asserted.
    pub fn asymmetry(&self, x: Point, y: Point) -> Result<f64> {
        Ok((self.eval(x, y)?.value - self.eval(y, x)?.value).abs())
    }

    /// A-priori term count for this configuration with running bound `bound`.
    pub fn plan(&self, quantity: Quantity, bound: f64) -> Result<usize> {
        Ok(plan_truncation(self.cfg(), &self.policy, quantity, bound)?)
    }
}

pub fn eval_aux(
    x: Point,
    y: Point,
    cfg: &TwoDiskConfig,
    policy: &SeriesPolicy,
) -> Result<GreensEval<f64>> {
    GreenFunction::new(cfg, *policy).eval_aux(x, y)
}

#[allow(non_snake_case)]
pub fn eval_G(
    x: Point,
    y: Point,
    cfg: &TwoDiskConfig,
    policy: &SeriesPolicy,
) -> Result<GreensEval<f64>> {
    GreenFunction::new(cfg, *policy).eval(x, y)
}

#[allow(non_snake_case)]
pub fn grad_x_G(
    x: Point,
    y: Point,
    cfg: &TwoDiskConfig,
    policy: &SeriesPolicy,
) -> Result<GreensEval<[f64; 2]>> {
    GreenFunction::new(cfg, *policy).grad_x(x, y)
}

pub fn interface_jump(
    y: Point,
    disk: Disk,
    s: Point,
    cfg: &TwoDiskConfig,
    policy: &SeriesPolicy,
    h: f64,
) -> Result<JumpReport> {
    GreenFunction::new(cfg, *policy).interface_jump(y, disk, s, h)
}

pub fn flux_around_source(
    y: Point,
    rho: f64,
    cfg: &TwoDiskConfig,
    policy: &SeriesPolicy,
) -> Result<f64> {
    GreenFunction::new(cfg, *policy).flux_around_source(y, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pt;
    use crate::moebius::inversion;
    use proptest::prelude::*;

    fn gf(eps: f64, k1: f64, k2: f64) -> GreenFunction {
        GreenFunction::new(
            &TwoDiskConfig::unit(eps, k1, k2).unwrap(),
            SeriesPolicy::with_tol(1e-12),
        )
    }

    #[test]
    fn free_space_everywhere() {
        let g = gf(0.1, 1.0, 1.0);
        let pts = [
            pt(0.0, 0.0),
            pt(1.2, 0.3),
            pt(-0.8, -0.2),
            pt(0.0, 1.5),
            pt(3.0, 2.0),
        ];
        for &x in &pts {
            for &y in &pts {
                if x == y {
                    continue;
                }
                let want = (x - y).norm().ln();
                assert!((g.eval_aux(x, y).unwrap().value - want).abs() < 1e-12);
                assert!((g.eval(x, y).unwrap().value - want).abs() < 1e-12);
                let gr = g.grad_x(x, y).unwrap().value;
                let d = x - y;
                let w = d / d.norm_sqr();
                assert!((gr[0] - w.re).abs() < 1e-12 && (gr[1] - w.im).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_disk_image_formula() {
        let cfg = TwoDiskConfig::unit(0.1, 4.0, 1.0).unwrap();
        let g = GreenFunction::new(&cfg, SeriesPolicy::with_tol(1e-12));
        let p1 = inversion(Disk::One, &cfg);
        let a = cfg.alpha();
        for (x, y) in [(pt(-0.3, 0.8), pt(0.0, -0.4)), (pt(0.0, 0.0), pt(0.0, 2.0))] {
            let want = (x - y).norm().ln() - a * (p1.apply(x).unwrap() - y).norm().ln();
            assert!((g.eval_aux(x, y).unwrap().value - want).abs() < 1e-12);
        }
    }

    #[test]
    fn long_fixed_sum_agrees() {
        let cfg = TwoDiskConfig::unit(0.1, 5.0, 5.0).unwrap();
        let (x, y) = (pt(-0.9, 0.0), pt(0.3, 0.2));
        let v = eval_aux(x, y, &cfg, &SeriesPolicy::with_tol(1e-12))
            .unwrap()
            .value;
        let w = eval_aux(x, y, &cfg, &SeriesPolicy::fixed(10_000))
            .unwrap()
            .value;
        assert!((v - w).abs() < 1e-8, "{v} {w}");
    }

    #[test]
    fn center_of_own_disk() {
        let g = gf(0.1, 3.0, 2.0);
        let cfg = *g.cfg();
        let y = cfg.c1() + pt(0.2, 0.3);
        // 𝒢 alone is log-singular at c1; G is finite.
        assert!(matches!(
            g.eval_aux(cfg.c1(), y),
            Err(Error::CenterSingularity(_))
        ));
        let at = g.eval(cfg.c1(), y).unwrap().value;
        for k in 0..4 {
            let dir = C64::from_polar(1e-7, k as f64 * PI / 2.0);
            let v = g.eval(cfg.c1() + dir, y).unwrap().value;
            assert!((v - at).abs() < 1e-6);
        }
        assert!(matches!(
            g.eval(cfg.c1(), cfg.c1()),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn gradient_vs_finite_difference() {
        let g = gf(0.1, 10.0, 10.0);
        let cfg = *g.cfg();
        let pairs = [
            (pt(0.0, 0.02), pt(0.0, 0.5)),
            (pt(1.3, 0.4), pt(-0.5, 1.2)),
            (pt(-1.6, -0.3), cfg.c1() + pt(0.1, 0.1)),
            (pt(0.4, 2.0), cfg.c2()),
            (cfg.c1(), cfg.c1() + pt(-0.3, 0.2)),
        ];
        let h = 1e-6;
        for (x, y) in pairs {
            let gr = g.grad_x(x, y).unwrap().value;
            let d1 =
                (g.eval(x + h, y).unwrap().value - g.eval(x - h, y).unwrap().value) / (2.0 * h);
            let ih = C64::new(0.0, h);
            let d2 =
                (g.eval(x + ih, y).unwrap().value - g.eval(x - ih, y).unwrap().value) / (2.0 * h);
            assert!(
                (gr[0] - d1).abs() < 1e-6 && (gr[1] - d2).abs() < 1e-6,
                "{x} {y}: {gr:?} vs {d1} {d2}"
            );
        }
    }

    #[test]
    fn axis_symmetry_of_gradient() {
        let g = gf(0.05, 20.0, 0.3);
        let gr = g.grad_x(pt(0.01, 0.0), pt(-3.0, 0.0)).unwrap().value;
        assert!(gr[1].abs() < 1e-12);
    }

    #[test]
    fn flux_normalization() {
        let g = gf(0.1, 50.0, 0.2);
        let cfg = *g.cfg();
        assert!((g.flux_around_source(pt(0.0, 0.0), 0.025).unwrap() - TAU).abs() < 1e-6);
        let y = cfg.c1() + pt(0.5, 0.0);
        let f1 = g.flux_around_source(y, 0.125).unwrap();
        let f2 = g.flux_around_source(y, 0.25).unwrap();
        assert!((f1 - TAU).abs() < 1e-6 && (f1 - f2).abs() < 1e-6);
        assert!((g.flux_around_source(cfg.c2() + pt(0.0, 0.3), 0.2).unwrap() - TAU).abs() < 1e-6);
        assert!(matches!(
            g.flux_around_source(pt(0.0, 0.0), 0.2),
            Err(Error::InvalidContour)
        ));
    }

    #[test]
    fn transmission_conditions() {
        let g = gf(0.1, 7.0, 0.2);
        let cfg = *g.cfg();
        let y = pt(0.0, 0.5);
        for j in 0..8 {
            let s = cfg.c1() + C64::from_polar(1.0, TAU * j as f64 / 8.0 + 0.1);
            let r = g.interface_jump(y, Disk::One, s, 1e-3).unwrap();
            assert!(r.value_jump < 1e-6 && r.flux_jump < 1e-5, "{r:?}");
            assert!(r.unweighted_jump >= 6.0 * r.inner_normal_derivative.abs() / 7.0 - 1e-5);
        }
    }

    #[test]
    fn source_at_center() {
        let g = gf(0.1, 6.0, 2.0);
        let cfg = *g.cfg();
        let y = cfg.c1();
        // k1 G - log|x - y| is harmonic in B1: mean over circles equals the value at the center.
        let h = |x: Point| cfg.k1() * g.eval(x, y).unwrap().value - (x - y).norm().ln();
        let centre = cfg.c1() + pt(0.3, -0.2);
        let v0 = h(centre);
        let mean: f64 = (0..64)
            .map(|j| h(centre + C64::from_polar(0.2, TAU * j as f64 / 64.0)))
            .sum::<f64>()
            / 64.0;
        assert!((mean - v0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn harmonic_off_source(x1 in -2.5f64..2.5, x2 in 0.3f64..2.0) {
            let g = gf(0.1, 4.0, 0.5);
            let cfg = *g.cfg();
            let x = pt(x1, x2);
            let y = pt(0.0, -0.8);
            let far = |p: Point| {
                [Disk::One, Disk::Two].iter().all(|&d| ((p - cfg.center(d)).norm() - 1.0).abs() > 0.1 && (p - cfg.center(d)).norm() > 0.1)
            };
            prop_assume!(far(x) && (x - y).norm() > 0.1);
            let st = 1e-3;
            let f = |p: Point| g.eval(p, y).unwrap().value;
            let lap = (f(x + st) + f(x - st) + f(x + C64::new(0.0, st)) + f(x - C64::new(0.0, st)) - 4.0 * f(x)) / (st * st);
            prop_assert!(lap.abs() < 1e-3);
        }
    }
}
