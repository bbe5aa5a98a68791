//! Invariant suite for the inversion maps and their composites.

use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::TAU;
use twodisk::moebius::{
    decay_certificate, fixed_points, inversion, iterate_closed_form, ConjMoebius, IterateFamily,
    Pair,
};
use twodisk::{Disk, Point, TwoDiskConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, worst: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            worst,
            tol,
            passed: worst <= tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapsReport {
    pub eps: f64,
    pub r1: f64,
    pub r2: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub const MAP_TOL: f64 = 1e-9;
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const PRODUCT_TOL: f64 = 1e-10;
pub const MAX_ITERATE: u64 = 20;

fn rel(a: Point, b: Point) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Points of a coarse grid kept away from both centers.
fn sample_points(cfg: &TwoDiskConfig) -> Vec<Point> {
    let scale = 2.0 * cfg.r1().max(cfg.r2()) + 1.0;
    let mut out = Vec::new();
    for i in -6..=6 {
        for j in -6..=6 {
            let z = C64::new(
                scale * (i as f64 + 0.13) / 6.0,
                scale * (j as f64 + 0.29) / 6.0,
            );
            if (z - cfg.c1()).norm() > 0.05 * cfg.r1() && (z - cfg.c2()).norm() > 0.05 * cfg.r2() {
                out.push(z);
            }
        }
    }
    out
}

/// Suite on the true inversions.
pub fn maps_check(cfg: &TwoDiskConfig) -> MapsReport {
    maps_check_with(cfg, [inversion(Disk::One, cfg), inversion(Disk::Two, cfg)])
}

/// Inversion matrix of disk 1 with its leading entry perturbed, a negative control.
pub fn corrupted_inversions(cfg: &TwoDiskConfig, delta: f64) -> [ConjMoebius; 2] {
    let (a, b, c, d) = inversion(Disk::One, cfg).entries();
    let bad = ConjMoebius::new(a + delta, b, c, d, true).expect("small perturbation stays regular");
    [bad, inversion(Disk::Two, cfg)]
}

/// Suite with caller-supplied inversion maps standing in for `Phi1`, `Phi2`.
pub fn maps_check_with(cfg: &TwoDiskConfig, phi: [ConjMoebius; 2]) -> MapsReport {
    let pts = sample_points(cfg);
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for p in &phi {
        for &z in &pts {
            if let Ok(w) = p.apply(z).and_then(|w| p.apply(w)) {
                worst = worst.max(rel(w, z));
            } else {
                worst = f64::INFINITY;
            }
        }
    }
    checks.push(Check::new("involution", worst, MAP_TOL));

    let mut worst = 0.0f64;
    for (k, d) in [Disk::One, Disk::Two].into_iter().enumerate() {
        for j in 0..64 {
            let s = cfg.center(d) + C64::from_polar(cfg.radius(d), TAU * (j as f64 + 0.5) / 64.0);
            worst = worst.max(phi[k].apply(s).map_or(f64::INFINITY, |w| rel(w, s)));
        }
    }
    checks.push(Check::new("boundary_fixed", worst, MAP_TOL));

    // Words of length 1..=6: anti-holomorphic exactly for odd length.
    let mut bad = 0.0;
    for len in 1..=6u32 {
        for bits in 0..(1u32 << len) {
            let mut m = ConjMoebius::identity();
            for i in 0..len {
                m = phi[((bits >> i) & 1) as usize]
                    .compose(&m)
                    .expect("maps compose");
            }
            if m.conj() != (len % 2 == 1) {
                bad += 1.0;
            }
        }
    }
    checks.push(Check::new("parity", bad, 0.0));

    let mut worst = 0.0f64;
    for pair in [Pair::TwoOne, Pair::OneTwo] {
        let (first, second) = match pair {
            Pair::TwoOne => (&phi[0], &phi[1]),
            Pair::OneTwo => (&phi[1], &phi[0]),
        };
        let start = match pair {
            Pair::TwoOne => Disk::One,
            Pair::OneTwo => Disk::Two,
        };
        for &z in pts
            .iter()
            .filter(|&&z| (z - cfg.center(start)).norm() > cfg.radius(start))
        {
            let mut w = z;
            for l in 1..=MAX_ITERATE {
                w = match first.apply(w).and_then(|v| second.apply(v)) {
                    Ok(v) => v,
                    Err(_) => {
                        worst = f64::INFINITY;
                        break;
                    }
                };
                let closed = iterate_closed_form(pair, l, cfg).apply(z);
                worst = worst.max(closed.map_or(f64::INFINITY, |c| rel(c, w)));
            }
        }
    }
    checks.push(Check::new("closed_form_vs_brute_force", worst, MAP_TOL));

    let mut worst = 0.0f64;
    let mut prod = 0.0f64;
    for pair in [Pair::TwoOne, Pair::OneTwo] {
        let (first, second) = match pair {
            Pair::TwoOne => (&phi[0], &phi[1]),
            Pair::OneTwo => (&phi[1], &phi[0]),
        };
        let (p1, p2) = fixed_points(pair, cfg);
        for p in [p1, p2] {
            let image = first.apply(p).and_then(|v| second.apply(v));
            worst = worst.max(image.map_or(f64::INFINITY, |w| rel(w, p)));
        }
        let fam = IterateFamily::new(pair, cfg);
        let s2 = (cfg.r1() * cfg.r2()).powi(2);
        prod = prod.max((fam.lambda_att * fam.lambda_rep / s2 - 1.0).abs());
    }
    checks.push(Check::new("fixed_point_residual", worst, FIXED_POINT_TOL));
    checks.push(Check::new("fixed_point_product", prod, PRODUCT_TOL));

    let mut excess = 0.0f64;
    for pair in [Pair::TwoOne, Pair::OneTwo] {
        let cert = decay_certificate(pair, cfg, 1, 200);
        excess = excess.max(cert.limsup / cert.bound);
    }
    checks.push(Check::new("decay_certificate", excess, 1.0));

    let passed = checks.iter().all(|c| c.passed);
    MapsReport {
        eps: cfg.eps(),
        r1: cfg.r1(),
        r2: cfg.r2(),
        checks,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_and_unequal_radii_pass() {
        for cfg in [
            TwoDiskConfig::unit(0.1, 1.0, 1.0).unwrap(),
            TwoDiskConfig::new(0.01, 2.0, 0.5, 1.0, 1.0).unwrap(),
        ] {
            let r = maps_check(&cfg);
            assert!(r.passed, "{:#?}", r.checks);
        }
    }

    #[test]
    fn corrupted_map_fails_involution() {
        let cfg = TwoDiskConfig::unit(0.1, 1.0, 1.0).unwrap();
        let r = maps_check_with(&cfg, corrupted_inversions(&cfg, 1e-3));
        assert!(!r.passed);
        assert!(
            !r.checks
                .iter()
                .find(|c| c.name == "involution")
                .unwrap()
                .passed
        );
    }
}
