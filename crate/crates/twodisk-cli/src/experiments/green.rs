//! Point evaluations of the Green's function, transmission audits and degenerate limits.

use anyhow::Result;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use twodisk::greens::GreenFunction;
use twodisk::moebius::inversion;
use twodisk::series::SeriesPolicy;
use twodisk::{Disk, Point, RegionTag, TwoDiskConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenRow {
    pub x1: f64,
    pub x2: f64,
    pub value: f64,
    pub terms_used: usize,
    pub tail_estimate: f64,
}

/// `G(x, y)` at every `x`; rows at singular points carry `NaN`.
pub fn green_eval(
    cfg: &TwoDiskConfig,
    policy: SeriesPolicy,
    y: Point,
    xs: &[Point],
) -> Vec<GreenRow> {
    let g = GreenFunction::new(cfg, policy);
    xs.par_iter()
        .map(|&x| match g.eval(x, y) {
            Ok(e) => GreenRow {
                x1: x.re,
                x2: x.im,
                value: e.value,
                terms_used: e.terms_used,
                tail_estimate: e.tail_estimate,
            },
            Err(_) => GreenRow {
                x1: x.re,
                x2: x.im,
                value: f64::NAN,
                terms_used: 0,
                tail_estimate: f64::NAN,
            },
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpRow {
    pub source_region: String,
    pub disk: String,
    pub samples: usize,
    pub max_value_jump: f64,
    pub max_flux_jump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxRow {
    pub source_region: String,
    pub radius: f64,
    pub flux: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpAudit {
    pub jumps: Vec<JumpRow>,
    pub fluxes: Vec<FluxRow>,
    /// Largest `|G(c_i + d, y) - G(c_i, y)|` with `|d| = 1e-7`.
    pub center_limit_error: f64,
    pub jump_tol: f64,
    pub flux_tol: f64,
    pub center_tol: f64,
    pub passed: bool,
}

pub const JUMP_TOL: f64 = 1e-5;
pub const CENTER_TOL: f64 = 1e-6;

/// One representative source point per region.
pub fn audit_sources(cfg: &TwoDiskConfig) -> [(RegionTag, Point); 3] {
    let r = cfg.r1().min(cfg.r2());
    [
        (RegionTag::Matrix, C64::new(0.0, r)),
        (
            RegionTag::Inclusion1,
            cfg.c1() + C64::new(0.3 * cfg.r1(), 0.2 * cfg.r1()),
        ),
        (
            RegionTag::Inclusion2,
            cfg.c2() + C64::new(-0.3 * cfg.r2(), 0.2 * cfg.r2()),
        ),
    ]
}

pub fn jump_audit(cfg: &TwoDiskConfig, policy: SeriesPolicy, samples: usize) -> Result<JumpAudit> {
    let g = GreenFunction::new(cfg, policy);
    let h = (cfg.eps() / 20.0).min(1e-3);
    let mut jumps = Vec::new();
    let mut fluxes = Vec::new();
    for (tag, y) in audit_sources(cfg) {
        for d in [Disk::One, Disk::Two] {
            let reports: Vec<_> = (0..samples)
                .into_par_iter()
                .map(|j| {
                    let s = cfg.center(d)
                        + C64::from_polar(cfg.radius(d), TAU * (j as f64 + 0.25) / samples as f64);
                    g.interface_jump(y, d, s, h)
                })
                .collect::<twodisk::Result<_>>()?;
            jumps.push(JumpRow {
                source_region: tag.name().into(),
                disk: d.tag().name().into(),
                samples,
                max_value_jump: reports.iter().map(|r| r.value_jump).fold(0.0, f64::max),
                max_flux_jump: reports.iter().map(|r| r.flux_jump).fold(0.0, f64::max),
            });
        }
        let mut reach = [Disk::One, Disk::Two]
            .iter()
            .map(|&d| ((y - cfg.center(d)).norm() - cfg.radius(d)).abs())
            .fold(f64::INFINITY, f64::min);
        if let Some(d) = tag.disk() {
            reach = reach.min((y - cfg.center(d)).norm());
        }
        let rho = 0.45 * reach;
        let flux = g.flux_around_source(y, rho)?;
        fluxes.push(FluxRow {
            source_region: tag.name().into(),
            radius: rho,
            flux,
            error: (flux - TAU).abs(),
        });
    }
    let mut center_limit_error = 0.0f64;
    for d in [Disk::One, Disk::Two] {
        for (tag, y) in audit_sources(cfg) {
            if tag == d.tag() {
                continue;
            }
            let at = g.eval(cfg.center(d), y)?.value;
            for k in 0..4 {
                let near = cfg.center(d) + C64::from_polar(1e-7, PI * k as f64 / 2.0 + 0.3);
                center_limit_error = center_limit_error.max((g.eval(near, y)?.value - at).abs());
            }
        }
    }
    let passed = jumps
        .iter()
        .all(|j| j.max_value_jump <= JUMP_TOL && j.max_flux_jump <= JUMP_TOL)
        && fluxes.iter().all(|f| f.error <= JUMP_TOL)
        && center_limit_error <= CENTER_TOL;
    Ok(JumpAudit {
        jumps,
        fluxes,
        center_limit_error,
        jump_tol: JUMP_TOL,
        flux_tol: JUMP_TOL,
        center_tol: CENTER_TOL,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseReport {
    pub pairs: usize,
    /// `alpha = beta = 0` against `log|x - y|`.
    pub free_space_error: f64,
    /// `beta = 0` against the single-disk image formula, both points outside `B1`.
    pub single_disk_error: f64,
}

fn random_point(rng: &mut ChaCha8Rng, avoid: &dyn Fn(Point) -> bool) -> Point {
    loop {
        let p = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        if !avoid(p) {
            return p;
        }
    }
}

/// Degenerate contrasts at `pairs` random point pairs with relative errors per value.
pub fn degenerate_collapse(
    eps: f64,
    k1: f64,
    pairs: usize,
    seed: u64,
    policy: SeriesPolicy,
) -> Result<CollapseReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free = TwoDiskConfig::unit(eps, 1.0, 1.0)?;
    let near_center = |p: Point| (p - free.c1()).norm() < 1e-3 || (p - free.c2()).norm() < 1e-3;
    let g0 = GreenFunction::new(&free, policy);
    let mut free_space_error = 0.0f64;
    for _ in 0..pairs {
        let x = random_point(&mut rng, &near_center);
        let y = random_point(&mut rng, &near_center);
        let want = (x - y).norm().ln();
        for v in [g0.eval_aux(x, y)?.value, g0.eval(x, y)?.value] {
            free_space_error = free_space_error.max((v - want).abs() / want.abs().max(1.0));
        }
    }
    let one = TwoDiskConfig::unit(eps, k1, 1.0)?;
    let outside =
        |p: Point| (p - one.c1()).norm() <= one.r1() + 1e-3 || (p - one.c2()).norm() < 1e-3;
    let g1 = GreenFunction::new(&one, policy);
    let p1 = inversion(Disk::One, &one);
    let a = one.alpha();
    let mut single_disk_error = 0.0f64;
    for _ in 0..pairs {
        let x = random_point(&mut rng, &outside);
        let y = random_point(&mut rng, &outside);
        let want = (x - y).norm().ln() - a * (p1.apply(x)? - y).norm().ln();
        let v = g1.eval_aux(x, y)?.value;
        single_disk_error = single_disk_error.max((v - want).abs() / want.abs().max(1.0));
    }
    Ok(CollapseReport {
        pairs,
        free_space_error,
        single_disk_error,
    })
}
