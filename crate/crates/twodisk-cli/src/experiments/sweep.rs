//! Gap and contrast sweeps of the probe gradients.

use crate::config::{SourcePreset, SweepSpec};
use crate::experiments::Settings;
use crate::fit::{band_ratio, fit_loglog, variation, RateFit};
use anyhow::{bail, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use twodisk::potentials::{PiecewiseSource, Solver};
use twodisk::{Point, RegionTag, TwoDiskConfig};

/// `1 - (1 - sqrt(eps)) |alpha beta|`.
pub fn compensating_factor(cfg: &TwoDiskConfig) -> f64 {
    1.0 - (1.0 - cfg.eps().sqrt()) * (cfg.alpha() * cfg.beta()).abs()
}

/// `sqrt(2 (1/r1 + 1/r2) eps)`.
pub fn effective_tau(eps: f64, r1: f64, r2: f64) -> f64 {
    (2.0 * (1.0 / r1 + 1.0 / r2) * eps).sqrt()
}

/// Gap giving the effective parameter `tau` for radii `(r1, r2)`.
pub fn eps_for_tau(tau: f64, r1: f64, r2: f64) -> f64 {
    tau * tau / (2.0 * (1.0 / r1 + 1.0 / r2))
}

/// Preset source scaled by `min(1, k)` of the region it lives in.
pub fn sweep_source(preset: &SourcePreset, cfg: &TwoDiskConfig) -> Result<PiecewiseSource> {
    let src = preset.build(cfg)?;
    let k = [RegionTag::Inclusion1, RegionTag::Inclusion2]
        .iter()
        .filter(|t| !src.region(**t).is_empty())
        .map(|t| cfg.coefficient_of(*t))
        .fold(1.0f64, f64::min);
    Ok(if k < 1.0 {
        src.combine(k, &PiecewiseSource::zero(), 0.0)
    } else {
        src
    })
}

/// Matrix probe at the origin; inclusion probes half a radius from each center toward the gap.
pub fn probe_points(cfg: &TwoDiskConfig) -> [Point; 3] {
    [
        C64::new(0.0, 0.0),
        cfg.c1() + C64::new(cfg.r1() / 2.0, 0.0),
        cfg.c2() - C64::new(cfg.r2() / 2.0, 0.0),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub eps: f64,
    pub k1: f64,
    pub k2: f64,
    pub r1: f64,
    pub r2: f64,
    pub tau: f64,
    pub comp_factor: f64,
    pub du0: f64,
    pub du0_comp: f64,
    pub d1u0: f64,
    pub du_incl1: f64,
    pub du_incl1_comp: f64,
    pub du_incl2: f64,
    pub du_incl2_comp: f64,
    pub terms_used: usize,
    pub tail_estimate: f64,
    pub quad_error: f64,
}

impl ProbeRow {
    /// Tail estimate small enough for the row to enter a fit.
    pub fn usable(&self) -> bool {
        self.tail_estimate < 0.01 * self.du0
    }
}

fn norm2(g: [f64; 2]) -> f64 {
    g[0].hypot(g[1])
}

pub fn probe(cfg: &TwoDiskConfig, preset: &SourcePreset, settings: &Settings) -> Result<ProbeRow> {
    let src = sweep_source(preset, cfg)?;
    let solver = Solver::new(cfg, &src, settings.policy, settings.grid)?;
    let [p0, p1, p2] = probe_points(cfg);
    let g0 = solver.grad_u(p0)?;
    let g1 = solver.grad_u_on(p1, RegionTag::Inclusion1)?;
    let g2 = solver.grad_u_on(p2, RegionTag::Inclusion2)?;
    let f = compensating_factor(cfg);
    let (du0, du1, du2) = (norm2(g0.value), norm2(g1.value), norm2(g2.value));
    Ok(ProbeRow {
        eps: cfg.eps(),
        k1: cfg.k1(),
        k2: cfg.k2(),
        r1: cfg.r1(),
        r2: cfg.r2(),
        tau: effective_tau(cfg.eps(), cfg.r1(), cfg.r2()),
        comp_factor: f,
        du0,
        du0_comp: du0 * f,
        d1u0: g0.value[0],
        du_incl1: du1,
        du_incl1_comp: du1 * f * (cfg.k1() + 1.0),
        du_incl2: du2,
        du_incl2_comp: du2 * f * (cfg.k2() + 1.0),
        terms_used: g0.terms_used.max(g1.terms_used).max(g2.terms_used),
        tail_estimate: g0.tail_estimate,
        quad_error: g0.quad_error.max(g1.quad_error).max(g2.quad_error),
    })
}

fn order(a: &ProbeRow, b: &ProbeRow) -> Ordering {
    a.r1.total_cmp(&b.r1)
        .then(a.r2.total_cmp(&b.r2))
        .then(a.k1.total_cmp(&b.k1))
        .then(a.k2.total_cmp(&b.k2))
        .then(b.eps.total_cmp(&a.eps))
}

/// Probe rows for a list of configurations, sorted by radii, contrasts, then decreasing gap.
pub fn probe_all(
    cfgs: &[TwoDiskConfig],
    preset: &SourcePreset,
    settings: &Settings,
) -> Result<Vec<ProbeRow>> {
    let mut rows = settings.install(|| {
        cfgs.par_iter()
            .map(|c| probe(c, preset, settings))
            .collect::<Result<Vec<_>>>()
    })??;
    rows.sort_by(order);
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContrastRow {
    pub k1: f64,
    pub k2: f64,
    pub du0_min: f64,
    pub du0_max: f64,
    /// `max/min - 1` of `|Du(0)|` across the gaps.
    pub du0_variation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateSweepReport {
    /// Slope of `|Du(0)|` against `eps` on the largest-contrast row.
    pub fit: Option<RateFit>,
    pub fit_k1: f64,
    pub fit_k2: f64,
    pub rows_used: usize,
    pub contrasts: Vec<ContrastRow>,
    pub band_matrix: f64,
    pub band_incl1: f64,
    pub band_incl2: f64,
}

fn contrast_rows(rows: &[ProbeRow], value: impl Fn(&ProbeRow) -> f64) -> Vec<ContrastRow> {
    let mut keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.k1, r.k2)).collect();
    keys.dedup();
    keys.iter()
        .map(|&(k1, k2)| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| (r.k1, r.k2) == (k1, k2))
                .map(&value)
                .collect();
            ContrastRow {
                k1,
                k2,
                du0_min: v.iter().copied().fold(f64::INFINITY, f64::min),
                du0_max: v.iter().copied().fold(0.0, f64::max),
                du0_variation: variation(&v),
            }
        })
        .collect()
}

fn largest_contrast(rows: &[ProbeRow]) -> Option<(f64, f64)> {
    rows.iter()
        .map(|r| (r.k1, r.k2))
        .max_by(|a, b| (a.0 * a.1).total_cmp(&(b.0 * b.1)))
}

pub fn rate_sweep(
    spec: &SweepSpec,
    settings: &Settings,
) -> Result<(Vec<ProbeRow>, RateSweepReport)> {
    if spec.source != SourcePreset::LowerBound {
        bail!("rate-sweep runs on the lower_bound source");
    }
    let cfgs = spec.configs().into_iter().collect::<Result<Vec<_>>>()?;
    let rows = probe_all(&cfgs, &spec.source, settings)?;
    let (fit_k1, fit_k2) = largest_contrast(&rows).unwrap_or((f64::NAN, f64::NAN));
    let top: Vec<&ProbeRow> = rows
        .iter()
        .filter(|r| (r.k1, r.k2) == (fit_k1, fit_k2) && r.usable())
        .collect();
    let fit = if top.len() >= 2 {
        let xs: Vec<f64> = top.iter().map(|r| r.eps).collect();
        let ys: Vec<f64> = top.iter().map(|r| r.du0).collect();
        let comp: Vec<f64> = top.iter().map(|r| r.du0_comp).collect();
        Some(fit_loglog(&xs, &ys, &comp)?)
    } else {
        None
    };
    let pick = |f: fn(&ProbeRow) -> f64| band_ratio(&rows.iter().map(f).collect::<Vec<_>>());
    let report = RateSweepReport {
        fit,
        fit_k1,
        fit_k2,
        rows_used: top.len(),
        contrasts: contrast_rows(&rows, |r| r.du0),
        band_matrix: pick(|r| r.du0_comp),
        band_incl1: pick(|r| r.du_incl1_comp),
        band_incl2: pick(|r| r.du_incl2_comp),
    };
    Ok((rows, report))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseSpec {
    pub radii: Vec<(f64, f64)>,
    pub tau_list: Vec<f64>,
    pub k: f64,
    pub source: SourcePreset,
}

impl Default for CollapseSpec {
    fn default() -> Self {
        CollapseSpec {
            radii: vec![(1.0, 1.0), (2.0, 0.5), (5.0, 5.0)],
            tau_list: vec![0.2, 0.3, 0.4, 0.5, 0.6],
            k: 1e4,
            source: SourcePreset::LowerBound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauRow {
    pub tau: f64,
    pub du0_min: f64,
    pub du0_max: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseReport {
    pub per_tau: Vec<TauRow>,
    pub max_ratio: f64,
    /// `|Du(0)|` decreases with `tau` along every radii pair.
    pub monotone: bool,
    pub factor: f64,
    pub passed: bool,
}

pub const COLLAPSE_FACTOR: f64 = 3.0;

pub fn radii_collapse(
    spec: &CollapseSpec,
    settings: &Settings,
) -> Result<(Vec<ProbeRow>, CollapseReport)> {
    if spec.radii.is_empty() || spec.tau_list.is_empty() {
        bail!("radii and tau lists must be non-empty");
    }
    let mut cfgs = Vec::new();
    for &(r1, r2) in &spec.radii {
        for &t in &spec.tau_list {
            cfgs.push(TwoDiskConfig::new(
                eps_for_tau(t, r1, r2),
                r1,
                r2,
                spec.k,
                spec.k,
            )?);
        }
    }
    let rows = probe_all(&cfgs, &spec.source, settings)?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b;
    let per_tau: Vec<TauRow> = spec
        .tau_list
        .iter()
        .map(|&t| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| close(r.tau, t))
                .map(|r| r.du0)
                .collect();
            TauRow {
                tau: t,
                du0_min: v.iter().copied().fold(f64::INFINITY, f64::min),
                du0_max: v.iter().copied().fold(0.0, f64::max),
                ratio: band_ratio(&v),
            }
        })
        .collect();
    let max_ratio = per_tau.iter().map(|t| t.ratio).fold(0.0, f64::max);
    let monotone = spec.radii.iter().all(|&(r1, r2)| {
        // Rows are sorted by decreasing eps, hence decreasing tau.
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| (r.r1, r.r2) == (r1, r2))
            .map(|r| r.du0)
            .collect();
        v.windows(2).all(|w| w[0] <= w[1])
    });
    let report = CollapseReport {
        per_tau,
        max_ratio,
        monotone,
        factor: COLLAPSE_FACTOR,
        passed: max_ratio <= COLLAPSE_FACTOR,
    };
    Ok((rows, report))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivRow {
    pub eps: f64,
    pub k1: f64,
    pub k2: f64,
    pub r1: f64,
    pub r2: f64,
    pub m: usize,
    pub norm: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: Option<f64>,
    pub d4: Option<f64>,
    pub fd_error: f64,
    pub step: f64,
    pub terms_used: usize,
    pub tail_estimate: f64,
    pub quad_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivReport {
    pub m: usize,
    pub fit: Option<RateFit>,
    pub fit_k1: f64,
    pub fit_k2: f64,
    pub contrasts: Vec<ContrastRow>,
}

fn deriv_row(
    cfg: &TwoDiskConfig,
    preset: &SourcePreset,
    settings: &Settings,
    m: usize,
) -> Result<DerivRow> {
    let src = sweep_source(preset, cfg)?;
    let solver = Solver::new(cfg, &src, settings.policy, settings.grid)?;
    let r = solver.higher_deriv_u(C64::new(0.0, 0.0), m)?;
    let c = &r.value.components;
    Ok(DerivRow {
        eps: cfg.eps(),
        k1: cfg.k1(),
        k2: cfg.k2(),
        r1: cfg.r1(),
        r2: cfg.r2(),
        m,
        norm: r.value.norm(),
        d0: c[0],
        d1: c[1],
        d2: c[2],
        d3: c.get(3).copied(),
        d4: c.get(4).copied(),
        fd_error: r.value.max_error(),
        step: r.value.step,
        terms_used: r.terms_used,
        tail_estimate: r.tail_estimate,
        quad_error: r.quad_error,
    })
}

/// `|D^m u(0)|` across the sweep with a slope fit on the largest-contrast row.
pub fn higher_deriv(
    spec: &SweepSpec,
    m: usize,
    settings: &Settings,
) -> Result<(Vec<DerivRow>, DerivReport)> {
    if !(2..=3).contains(&m) {
        bail!("derivative order must be 2 or 3, got {m}");
    }
    let cfgs = spec.configs().into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = settings.install(|| {
        cfgs.par_iter()
            .map(|c| deriv_row(c, &spec.source, settings, m))
            .collect::<Result<Vec<_>>>()
    })??;
    rows.sort_by(|a, b| {
        a.r1.total_cmp(&b.r1)
            .then(a.r2.total_cmp(&b.r2))
            .then(a.k1.total_cmp(&b.k1))
            .then(a.k2.total_cmp(&b.k2))
            .then(b.eps.total_cmp(&a.eps))
    });
    let (fit_k1, fit_k2) = rows
        .iter()
        .map(|r| (r.k1, r.k2))
        .max_by(|a, b| (a.0 * a.1).total_cmp(&(b.0 * b.1)))
        .unwrap_or((f64::NAN, f64::NAN));
    let top: Vec<&DerivRow> = rows
        .iter()
        .filter(|r| (r.k1, r.k2) == (fit_k1, fit_k2) && r.tail_estimate < 0.01 * r.norm)
        .collect();
    let fit = if top.len() >= 2 {
        let xs: Vec<f64> = top.iter().map(|r| r.eps).collect();
        let ys: Vec<f64> = top.iter().map(|r| r.norm).collect();
        let comp: Vec<f64> = top
            .iter()
            .map(|r| {
                let cfg = TwoDiskConfig::new(r.eps, r.r1, r.r2, r.k1, r.k2)
                    .expect("row came from a valid config");
                r.norm * compensating_factor(&cfg).powi(m as i32)
            })
            .collect();
        Some(fit_loglog(&xs, &ys, &comp)?)
    } else {
        None
    };
    let mut keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.k1, r.k2)).collect();
    keys.dedup();
    let contrasts = keys
        .iter()
        .map(|&(k1, k2)| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| (r.k1, r.k2) == (k1, k2))
                .map(|r| r.norm)
                .collect();
            ContrastRow {
                k1,
                k2,
                du0_min: v.iter().copied().fold(f64::INFINITY, f64::min),
                du0_max: v.iter().copied().fold(0.0, f64::max),
                du0_variation: variation(&v),
            }
        })
        .collect();
    Ok((
        rows,
        DerivReport {
            m,
            fit,
            fit_k1,
            fit_k2,
            contrasts,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundRow {
    pub eps: f64,
    pub k1: f64,
    pub k2: f64,
    pub d1u0: f64,
    /// `|D1 u(0)| (1 - (1 - sqrt(eps)) alpha beta)`.
    pub compensated: f64,
    pub tail_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub rows: Vec<LowerBoundRow>,
    pub all_negative: bool,
    /// Sweep minimum of the compensated quantity.
    pub c_min: f64,
    pub passed: bool,
}

pub fn lower_bound(spec: &SweepSpec, settings: &Settings) -> Result<LowerBoundReport> {
    if spec.k1_list.iter().chain(&spec.k2_list).any(|&k| k < 1.0) {
        bail!("the lower-bound experiment needs k1, k2 >= 1");
    }
    let cfgs = spec.configs().into_iter().collect::<Result<Vec<_>>>()?;
    let probes = probe_all(&cfgs, &SourcePreset::LowerBound, settings)?;
    let rows: Vec<LowerBoundRow> = probes
        .iter()
        .map(|p| {
            let ab = TwoDiskConfig::new(p.eps, p.r1, p.r2, p.k1, p.k2)
                .map(|c| c.alpha() * c.beta())
                .unwrap_or(0.0);
            LowerBoundRow {
                eps: p.eps,
                k1: p.k1,
                k2: p.k2,
                d1u0: p.d1u0,
                compensated: p.d1u0.abs() * (1.0 - (1.0 - p.eps.sqrt()) * ab),
                tail_estimate: p.tail_estimate,
            }
        })
        .collect();
    let all_negative = rows.iter().all(|r| r.d1u0 < 0.0);
    let c_min = rows
        .iter()
        .map(|r| r.compensated)
        .fold(f64::INFINITY, f64::min);
    Ok(LowerBoundReport {
        passed: all_negative && c_min > 0.0,
        all_negative,
        c_min,
        rows,
    })
}
