//! Potentials of region-wise data and the whole-plane solution of
//! `div(a grad u) = div f + f3` assembled from the reflection series.
//!
//! For data `f_j` on region `j` the solution is
//! `u = (1/2π) sum_j ∫ G(x, y) (div f_j + f3_j) dy`, where each term is the
//! series of [`ImageSystem`] applied to the log potential `g_j - h_j` of that
//! region, with the center charge of `G` scaled by the data's mass.

pub mod layer;
pub mod quadrature;
pub mod source;

pub use layer::{LayerKind, QuadratureGrid, RegionLayer};
pub use source::{
    bump_region, constant_disk1, lower_bound_source, radial_bump, Bump, PiecewiseSource, RegionData,
};

use crate::error::{Error, Result};
use crate::geometry::{Disk, Point, RegionTag, TwoDiskConfig};
use crate::images::{ImageSystem, RegionSource};
use crate::series::{Quantity, SeriesPolicy, ValGrad};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::TAU;

/// Converts the `Δ log = 2π δ` potentials into a solution of the equation with unit right-hand side.
pub const SOLUTION_SCALE: f64 = 1.0 / TAU;

const REGIONS: [RegionTag; 3] = [
    RegionTag::Matrix,
    RegionTag::Inclusion1,
    RegionTag::Inclusion2,
];

/// `∫ D_{y_i} log|x - y| f_i dy` over region `tag`, with its gradient in `x`.
pub fn potential_h_grad(
    tag: RegionTag,
    x: Point,
    cfg: &TwoDiskConfig,
    src: &PiecewiseSource,
    grid: &QuadratureGrid,
) -> Result<ValGrad> {
    layer_potential(tag, LayerKind::Divergence, x, cfg, src, grid)
}

/// `∫ log|x - y| f3 dy` over region `tag`, with its gradient in `x`.
pub fn potential_g_grad(
    tag: RegionTag,
    x: Point,
    cfg: &TwoDiskConfig,
    src: &PiecewiseSource,
    grid: &QuadratureGrid,
) -> Result<ValGrad> {
    layer_potential(tag, LayerKind::Volume, x, cfg, src, grid)
}

pub fn potential_h(
    tag: RegionTag,
    x: Point,
    cfg: &TwoDiskConfig,
    src: &PiecewiseSource,
    grid: &QuadratureGrid,
) -> Result<f64> {
    Ok(potential_h_grad(tag, x, cfg, src, grid)?.value)
}

pub fn potential_g(
    tag: RegionTag,
    x: Point,
    cfg: &TwoDiskConfig,
    src: &PiecewiseSource,
    grid: &QuadratureGrid,
) -> Result<f64> {
    Ok(potential_g_grad(tag, x, cfg, src, grid)?.value)
}

fn layer_potential(
    tag: RegionTag,
    kind: LayerKind,
    x: Point,
    cfg: &TwoDiskConfig,
    src: &PiecewiseSource,
    grid: &QuadratureGrid,
) -> Result<ValGrad> {
    let mut acc = ValGrad::zero();
    for data in src.region(tag) {
        acc += RegionLayer::new(cfg, tag.disk(), data, kind, *grid).eval_at(x)?;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport<T> {
    pub value: T,
    /// Largest series length over the source regions.
    pub terms_used: usize,
    pub tail_estimate: f64,
    /// Declared quadrature accuracy propagated through the branch prefactors; approximate.
    pub quad_error: f64,
    pub region: RegionTag,
}

/// Symmetric derivative tensor of order `m`, stored by the number of `x2` derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivTensor {
    pub m: usize,
    /// `components[k] = D1^{m-k} D2^k u`.
    pub components: Vec<f64>,
    /// Richardson error estimate per component.
    pub errors: Vec<f64>,
    pub step: f64,
}

impl DerivTensor {
    /// Frobenius norm of the full tensor.
    pub fn norm(&self) -> f64 {
        let mut binom = 1.0;
        let mut acc = 0.0;
        for (k, c) in self.components.iter().enumerate() {
            acc += binom * c * c;
            binom = binom * (self.m - k) as f64 / (k + 1) as f64;
        }
        acc.sqrt()
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

struct Part {
    tag: RegionTag,
    layer: RegionLayer,
    charge: f64,
}

/// Evaluator of the solution for one configuration, source, policy and quadrature.
pub struct Solver {
    sys: ImageSystem,
    policy: SeriesPolicy,
    parts: Vec<Part>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("cfg", self.sys.cfg())
            .field("policy", &self.policy)
            .finish()
    }
}

/// 1D central difference weights of order `n`, second-order accurate, as `(offset, weight)`.
fn stencil(n: usize) -> &'static [(i32, f64)] {
    match n {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        _ => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    }
}

impl Solver {
    pub fn new(
        cfg: &TwoDiskConfig,
        src: &PiecewiseSource,
        policy: SeriesPolicy,
        grid: QuadratureGrid,
    ) -> Result<Self> {
        policy.validate()?;
        src.validate(cfg)?;
        let mut parts = Vec::new();
        for tag in REGIONS {
            for data in src.region(tag) {
                let layer = RegionLayer::new(cfg, tag.disk(), data, LayerKind::Combined, grid);
                let charge = match tag.disk() {
                    Some(d) => {
                        let c = cfg.contrast_on(d);
                        c / (1.0 - c) * layer.mass()
                    }
                    None => 0.0,
                };
                parts.push(Part { tag, layer, charge });
            }
        }
        Ok(Solver {
            sys: ImageSystem::new(cfg),
            policy,
            parts,
        })
    }

    pub fn cfg(&self) -> &TwoDiskConfig {
        self.sys.cfg()
    }

    pub fn policy(&self) -> &SeriesPolicy {
        &self.policy
    }

    fn region_of(&self, x: Point) -> Result<RegionTag> {
        Ok(self.cfg().region_strict(x)?)
    }

    fn raw(&self, x: Point, tag: RegionTag, quantity: Quantity) -> Result<EvalReport<ValGrad>> {
        let mut total = ValGrad::zero();
        let (mut terms, mut tail, mut quad) = (0, 0.0, 0.0);
        for p in &self.parts {
            let src = RegionSource {
                region: p.tag,
                potential: &p.layer,
                center_charge: p.charge,
            };
            let e = self.sys.evaluate(x, tag, &src, &self.policy, quantity)?;
            total += e.value;
            terms = terms.max(e.terms);
            tail += e.tail;
            let (a, b) = self.cfg().contrast();
            quad += p.layer.error_scale() / (1.0 - (a * b).abs());
        }
        Ok(EvalReport {
            value: total * SOLUTION_SCALE,
            terms_used: terms,
            tail_estimate: tail * SOLUTION_SCALE,
            quad_error: quad * SOLUTION_SCALE,
            region: tag,
        })
    }

    fn map<T, U>(r: EvalReport<T>, f: impl FnOnce(T) -> U) -> EvalReport<U> {
        EvalReport {
            value: f(r.value),
            terms_used: r.terms_used,
            tail_estimate: r.tail_estimate,
            quad_error: r.quad_error,
            region: r.region,
        }
    }

    /// `u(x)` using the branch of region `tag`.
    pub fn solve_u_on(&self, x: Point, tag: RegionTag) -> Result<EvalReport<f64>> {
        Ok(Self::map(self.raw(x, tag, Quantity::Value)?, |v| v.value))
    }

    pub fn solve_u(&self, x: Point) -> Result<EvalReport<f64>> {
        self.solve_u_on(x, self.region_of(x)?)
    }

    pub fn grad_u_on(&self, x: Point, tag: RegionTag) -> Result<EvalReport<[f64; 2]>> {
        Ok(Self::map(self.raw(x, tag, Quantity::Gradient)?, |v| {
            v.gradient()
        }))
    }

    pub fn grad_u(&self, x: Point) -> Result<EvalReport<[f64; 2]>> {
        self.grad_u_on(x, self.region_of(x)?)
    }

    /// Value and gradient together.
    pub fn value_grad_on(&self, x: Point, tag: RegionTag) -> Result<EvalReport<ValGrad>> {
        self.raw(x, tag, Quantity::Both)
    }

    pub fn value_grad(&self, x: Point) -> Result<EvalReport<ValGrad>> {
        self.value_grad_on(x, self.region_of(x)?)
    }

    /// Value and gradient at many points, in parallel.
    pub fn solve_many(&self, xs: &[Point]) -> Vec<Result<EvalReport<ValGrad>>> {
        xs.par_iter().map(|&x| self.value_grad(x)).collect()
    }

    /// Distance from `x` to the nearer interface.
    pub fn interface_distance(&self, x: Point) -> f64 {
        let cfg = self.cfg();
        [Disk::One, Disk::Two]
            .iter()
            .map(|&d| ((x - cfg.center(d)).norm() - cfg.radius(d)).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `D^m u(x)`, `2 <= m <= 4`, by Richardson-extrapolated central differences of the analytic gradient.
    pub fn higher_deriv_u(&self, x: Point, m: usize) -> Result<EvalReport<DerivTensor>> {
        if !(2..=4).contains(&m) {
            return Err(Error::InvalidArgument(format!(
                "derivative order {m} outside 2..=4"
            )));
        }
        let cfg = *self.cfg();
        let tag = self.region_of(x)?;
        let h = (self.interface_distance(x) / 10.0).min(0.05 * cfg.r1().min(cfg.r2()));
        if h < 1e-7 {
            return Err(Error::TooCloseToInterface);
        }
        let mut cache: HashMap<(i32, i32, u8), EvalReport<[f64; 2]>> = HashMap::new();
        let mut grad_at = |i: i32, j: i32, level: u8| -> Result<[f64; 2]> {
            if let Some(r) = cache.get(&(i, j, level)) {
                return Ok(r.value);
            }
            let s = h / f64::from(1u32 << level);
            let r = self.grad_u_on(x + C64::new(i as f64 * s, j as f64 * s), tag)?;
            cache.insert((i, j, level), r);
            Ok(r.value)
        };
        let mut components = Vec::with_capacity(m + 1);
        let mut errors = Vec::with_capacity(m + 1);
        for k in 0..=m {
            // D1^{m-k} D2^k u from one gradient component.
            let (comp, n1, n2) = if m - k >= 1 {
                (0, m - k - 1, k)
            } else {
                (1, 0, k - 1)
            };
            let mut level_values = [0.0; 2];
            for (lv, out) in level_values.iter_mut().enumerate() {
                let s = h / f64::from(1u32 << lv);
                let mut acc = 0.0;
                for &(i, wi) in stencil(n1) {
                    for &(j, wj) in stencil(n2) {
                        acc += wi * wj * grad_at(i, j, lv as u8)?[comp];
                    }
                }
                *out = acc / s.powi((n1 + n2) as i32);
            }
            let [coarse, fine] = level_values;
            components.push((4.0 * fine - coarse) / 3.0);
            errors.push((fine - coarse).abs() / 3.0);
        }
        let any = *cache.values().next().expect("stencil evaluated");
        let terms = cache.values().map(|r| r.terms_used).max().unwrap_or(0);
        let tail = cache.values().map(|r| r.tail_estimate).fold(0.0, f64::max);
        let fd_scale = h.powi(m as i32 - 1);
        Ok(EvalReport {
            value: DerivTensor {
                m,
                components,
                errors,
                step: h,
            },
            terms_used: terms,
            tail_estimate: tail / fd_scale,
            quad_error: any.quad_error / fd_scale,
            region: tag,
        })
    }
}

pub fn solve_u(
    x: Point,
    cfg: &TwoDiskConfig,
    src: &PiecewiseSource,
    policy: &SeriesPolicy,
    grid: &QuadratureGrid,
) -> Result<EvalReport<f64>> {
    Solver::new(cfg, src, *policy, *grid)?.solve_u(x)
}

pub fn grad_u(
    x: Point,
    cfg: &TwoDiskConfig,
    src: &PiecewiseSource,
    policy: &SeriesPolicy,
    grid: &QuadratureGrid,
) -> Result<EvalReport<[f64; 2]>> {
    Solver::new(cfg, src, *policy, *grid)?.grad_u(x)
}

pub fn higher_deriv_u(
    x: Point,
    m: usize,
    cfg: &TwoDiskConfig,
    src: &PiecewiseSource,
    policy: &SeriesPolicy,
    grid: &QuadratureGrid,
) -> Result<EvalReport<DerivTensor>> {
    Solver::new(cfg, src, *policy, *grid)?.higher_deriv_u(x, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pt;
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn solver(cfg: &TwoDiskConfig, src: &PiecewiseSource) -> Solver {
        Solver::new(
            cfg,
            src,
            SeriesPolicy::with_tol(1e-12),
            QuadratureGrid::default(),
        )
        .unwrap()
    }

    fn unit_f3_disk1(cfg: &TwoDiskConfig) -> PiecewiseSource {
        PiecewiseSource::zero().with_region(
            RegionTag::Inclusion1,
            RegionData {
                center: cfg.c1(),
                radius: cfg.r1(),
                field: Arc::new(|_| [0.0, 0.0, 1.0]),
                jacobian: Arc::new(|_| [[0.0; 2]; 2]),
                vanishes_on_boundary: false,
            },
        )
    }

    #[test]
    fn zero_source_gives_zero() {
        let cfg = TwoDiskConfig::unit(0.1, 5.0, 5.0).unwrap();
        let s = solver(&cfg, &PiecewiseSource::zero());
        assert_eq!(s.solve_u(pt(0.0, 0.0)).unwrap().value, 0.0);
        assert_eq!(s.grad_u(pt(0.3, 1.0)).unwrap().value, [0.0, 0.0]);
        let d = s.higher_deriv_u(pt(0.0, 2.5), 3).unwrap().value;
        assert!(d.components.iter().all(|&c| c == 0.0));
        let g = QuadratureGrid::default();
        assert_eq!(
            potential_h(
                RegionTag::Matrix,
                pt(1.0, 1.0),
                &cfg,
                &PiecewiseSource::zero(),
                &g
            )
            .unwrap(),
            0.0
        );
        assert_eq!(
            potential_g(
                RegionTag::Inclusion2,
                pt(1.0, 1.0),
                &cfg,
                &PiecewiseSource::zero(),
                &g
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn g_of_unit_disk_at_its_center() {
        let cfg = TwoDiskConfig::unit(0.1, 5.0, 5.0).unwrap();
        let src = unit_f3_disk1(&cfg);
        let g = QuadratureGrid::default();
        let v = potential_g(RegionTag::Inclusion1, cfg.c1(), &cfg, &src, &g).unwrap();
        assert!((v + PI / 2.0).abs() < 1e-12);
        let far = pt(0.0, 100.0);
        let v = potential_g(RegionTag::Inclusion1, far, &cfg, &src, &g).unwrap();
        let want = PI * far.norm().ln();
        assert!(((v - want) / want).abs() < 1e-3);
    }

    #[test]
    fn h_of_constant_field_far_away() {
        let cfg = TwoDiskConfig::unit(0.1, 5.0, 5.0).unwrap();
        let src = constant_disk1(&cfg, 1.0);
        let g = QuadratureGrid::default();
        let x = C64::from_polar(100.0, PI / 4.0);
        let v = potential_h(RegionTag::Inclusion1, x, &cfg, &src, &g).unwrap();
        let xp = x - cfg.c1();
        // The integral has the kernel's y-derivative, hence the minus sign.
        let want = -PI * xp.re / xp.norm_sqr();
        assert!(((v - want) / want).abs() < 1e-3, "{v} {want}");
        // Independent check: direct product rule of (y - x)·e1/|y - x|^2.
        let rule = quadrature::DiskRule::new(cfg.c1(), 1.0, 100, 200);
        let direct: f64 = rule
            .points
            .iter()
            .map(|&(y, w)| w * (y - x).re / (y - x).norm_sqr())
            .sum();
        assert!(((v - direct) / direct).abs() < 1e-10);
    }

    #[test]
    fn unit_contrast_is_free_space() {
        let cfg = TwoDiskConfig::unit(0.1, 1.0, 1.0).unwrap();
        let src = lower_bound_source(&cfg)
            .combine(
                1.0,
                &radial_bump(&cfg, pt(0.5, 1.6), 0.3, 0.7).unwrap(),
                1.0,
            )
            .combine(1.0, &constant_disk1(&cfg, 0.4), 1.0);
        let s = solver(&cfg, &src);
        let g = QuadratureGrid::default();
        for x in [
            pt(0.0, 0.0),
            pt(-2.9, 0.05),
            cfg.c1() + pt(0.3, 0.1),
            pt(0.5, 1.5),
        ] {
            let mut want = 0.0;
            for tag in REGIONS {
                want += potential_g(tag, x, &cfg, &src, &g).unwrap()
                    - potential_h(tag, x, &cfg, &src, &g).unwrap();
            }
            let got = s.solve_u(x).unwrap().value;
            assert!(
                (got - want * SOLUTION_SCALE).abs() < 1e-11,
                "{x}: {got} {}",
                want * SOLUTION_SCALE
            );
        }
    }

    #[test]
    fn gradient_symmetry_on_axis() {
        let cfg = TwoDiskConfig::unit(0.1, 5.0, 5.0).unwrap();
        let s = solver(&cfg, &lower_bound_source(&cfg));
        for x1 in [-1.5, -0.02, 0.0, 0.04, 0.8, 2.5] {
            let g = s.grad_u(pt(x1, 0.0)).unwrap().value;
            assert!(g[1].abs() < 1e-12 * g[0].abs().max(1.0), "{x1}: {g:?}");
        }
    }

    #[test]
    fn lower_bound_kernel_derivative_on_the_gap() {
        let eps = 0.1;
        let cfg = TwoDiskConfig::unit(eps, 5.0, 5.0).unwrap();
        let src = lower_bound_source(&cfg);
        let g = QuadratureGrid::default();
        let half = eps + eps * eps / 4.0;
        for j in 0..20 {
            let x = pt(-half + 2.0 * half * j as f64 / 19.0, 0.0);
            // The sign-test potential is minus the h of the matrix region.
            let d = -potential_h_grad(RegionTag::Matrix, x, &cfg, &src, &g)
                .unwrap()
                .grad;
            assert!(d.re < -0.05 && d.im.abs() < 1e-14, "{x}: {d}");
        }
    }

    #[test]
    fn gradient_matches_differences_at_high_contrast() {
        let cfg = TwoDiskConfig::unit(0.1, 100.0, 0.01).unwrap();
        let src = lower_bound_source(&cfg).combine(
            1.0,
            &radial_bump(&cfg, cfg.c2() + pt(0.1, 0.2), 0.4, 1.0).unwrap(),
            1.0,
        );
        let s = solver(&cfg, &src);
        let pts = [
            pt(0.0, 0.0),
            pt(0.3, 0.4),
            cfg.c1() + pt(0.2, -0.3),
            cfg.c2() + pt(-0.1, 0.25),
            pt(-2.95, 0.02),
            pt(1.0, 1.5),
        ];
        let h = 1e-5;
        for x in pts {
            let gr = s.grad_u(x).unwrap().value;
            let f = |p: Point| s.solve_u_on(p, s.region_of(x).unwrap()).unwrap().value;
            let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
            let ih = C64::new(0.0, h);
            let d2 = (f(x + ih) - f(x - ih)) / (2.0 * h);
            let tol = 1e-5 * gr[0].abs().max(gr[1].abs()).max(1.0);
            assert!(
                (gr[0] - d1).abs() < tol && (gr[1] - d2).abs() < tol,
                "{x}: {gr:?} {d1} {d2}"
            );
        }
    }

    #[test]
    fn pde_residual_of_the_solution() {
        let cfg = TwoDiskConfig::unit(0.1, 4.0, 0.5).unwrap();
        let bump = Bump::with_mass(pt(0.6, 1.6), 0.4, 1.0);
        let src = PiecewiseSource::zero()
            .with_region(RegionTag::Matrix, bump_region(bump, 2))
            .combine(
                1.0,
                &radial_bump(&cfg, cfg.c1() + pt(0.1, 0.0), 0.5, 2.0).unwrap(),
                1.0,
            );
        let s = solver(&cfg, &src);
        let st = 1e-3;
        for (x, rhs) in [
            (pt(0.6, 1.5), bump.value(pt(0.6, 1.5))),
            (pt(0.5, 1.75), bump.value(pt(0.5, 1.75))),
            (cfg.c1() + pt(0.2, 0.1), {
                let b = Bump::with_mass(cfg.c1() + pt(0.1, 0.0), 0.5, 2.0);
                b.value(cfg.c1() + pt(0.2, 0.1))
            }),
            (pt(0.0, 0.0), 0.0),
        ] {
            let tag = cfg.region_strict(x).unwrap();
            let f = |p: Point| s.solve_u_on(p, tag).unwrap().value;
            let lap = (f(x + st) + f(x - st) + f(x + C64::new(0.0, st)) + f(x - C64::new(0.0, st))
                - 4.0 * f(x))
                / (st * st);
            let a = cfg.coefficient_of(tag);
            assert!(
                (a * lap - rhs).abs() < 1e-2 * rhs.abs().max(1.0),
                "{x}: {} vs {rhs}",
                a * lap
            );
        }
    }

    #[test]
    fn interface_conditions_of_the_solution() {
        let cfg = TwoDiskConfig::unit(0.1, 5.0, 5.0).unwrap();
        let s = solver(&cfg, &lower_bound_source(&cfg));
        for d in [Disk::One, Disk::Two] {
            let k = cfg.conductivity(d);
            for j in 0..6 {
                let nu = C64::from_polar(1.0, TAU * j as f64 / 6.0 + 0.2);
                let b = cfg.center(d) + nu * cfg.radius(d);
                let mut jumps = [[0.0; 3]; 2];
                for (i, h) in [1e-3, 5e-4, 2.5e-4].into_iter().enumerate() {
                    let o = s
                        .value_grad_on(b + nu * h, RegionTag::Matrix)
                        .unwrap()
                        .value;
                    let n = s.value_grad_on(b - nu * h, d.tag()).unwrap().value;
                    jumps[0][i] = o.value - n.value;
                    jumps[1][i] = (nu.conj() * o.grad).re - k * (nu.conj() * n.grad).re;
                }
                for jj in jumps {
                    let r0 = 2.0 * jj[1] - jj[0];
                    let r1 = 2.0 * jj[2] - jj[1];
                    assert!(((4.0 * r1 - r0) / 3.0).abs() < 1e-5, "{d:?} {j}: {jj:?}");
                }
            }
        }
    }

    #[test]
    fn radial_bump_second_derivatives_in_free_space() {
        let cfg = TwoDiskConfig::unit(0.1, 1.0, 1.0).unwrap();
        let (c, rad, mass) = (pt(0.2, 2.0), 0.5, 1.0);
        let src = radial_bump(&cfg, c, rad, mass).unwrap();
        let s = solver(&cfg, &src);
        let bump = Bump::with_mass(c, rad, mass);
        // Radial reduction: u'(r) = m(r)/(2π r) with m(r) the enclosed mass.
        let enclosed = |r: f64| -> f64 {
            if r >= rad {
                return mass;
            }
            let g = quadrature::GaussRule::new(40);
            g.on(0.0, r)
                .map(|(t, w)| w * TAU * t * bump.value(c + t))
                .sum()
        };
        for x in [pt(0.2, 2.8), pt(0.5, 2.2), pt(-0.9, 1.5), pt(0.45, 2.1)] {
            let d = x - c;
            let r = d.norm();
            let up = enclosed(r) / (TAU * r);
            // u'' = f - u'/r from the radial Laplacian.
            let upp = bump.value(x) - up / r;
            let (e1, e2) = (d.re / r, d.im / r);
            let want = [
                upp * e1 * e1 + up / r * e2 * e2,
                (upp - up / r) * e1 * e2,
                upp * e2 * e2 + up / r * e1 * e1,
            ];
            let got = s.higher_deriv_u(x, 2).unwrap().value;
            for k in 0..3 {
                let scale = want.iter().map(|v| v.abs()).fold(0.0, f64::max);
                assert!(
                    (got.components[k] - want[k]).abs() < 1e-3 * scale,
                    "{x} {k}: {:?} {want:?}",
                    got.components
                );
            }
        }
    }

    #[test]
    fn higher_derivatives_refuse_points_on_interfaces() {
        let cfg = TwoDiskConfig::unit(0.1, 5.0, 5.0).unwrap();
        let s = solver(&cfg, &lower_bound_source(&cfg));
        let b = cfg.c1() + pt(1.0 + 1e-8, 0.0);
        assert!(matches!(
            s.higher_deriv_u(b, 2),
            Err(Error::TooCloseToInterface)
        ));
        assert!(matches!(
            s.higher_deriv_u(pt(0.0, 0.0), 5),
            Err(Error::InvalidArgument(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn solution_is_linear_in_the_source(a in -3.0f64..3.0, b in -3.0f64..3.0, x1 in -2.0f64..2.0, x2 in 0.2f64..2.0) {
            let cfg = TwoDiskConfig::unit(0.1, 5.0, 0.2).unwrap();
            let p = lower_bound_source(&cfg);
            let q = radial_bump(&cfg, cfg.c2() + pt(0.1, 0.1), 0.3, 1.0).unwrap();
            let x = pt(x1, x2);
            prop_assume!(cfg.region_strict(x).is_ok());
            let u = |src: &PiecewiseSource| solver(&cfg, src).value_grad(x).unwrap().value;
            let (up, uq, us) = (u(&p), u(&q), u(&p.combine(a, &q, b)));
            let lin = up * a + uq * b;
            let scale = up.value.abs().max(uq.value.abs()).max(1.0) * (a.abs() + b.abs() + 1.0);
            prop_assert!((us.value - lin.value).abs() < 1e-9 * scale);
            prop_assert!((us.grad - lin.grad).norm() < 1e-8 * scale);
        }
    }
}
