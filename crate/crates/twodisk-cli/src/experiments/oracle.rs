//! Finite-volume cross-check of the series solution.

use crate::config::SourcePreset;
use crate::experiments::Settings;
use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;
use twodisk::oracle::{compare, comparison_mask, fv_solve, BoundaryCondition, FvBox, FvOptions};
use twodisk::potentials::Solver;
use twodisk::TwoDiskConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleSpec {
    pub n: usize,
    /// Half-width of the square box.
    pub half: f64,
    #[serde(skip)]
    pub bc: BoundaryCondition,
    pub exclude_cells: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            n: 600,
            half: 3.0,
            bc: BoundaryCondition::DirichletFromSeries,
            exclude_cells: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub l2_rel: f64,
    pub linf_rel: f64,
    pub n: usize,
    pub runtime_s: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub cells_compared: usize,
    pub bc: String,
}

pub fn oracle_compare(
    cfg: &TwoDiskConfig,
    preset: &SourcePreset,
    spec: &OracleSpec,
    settings: &Settings,
) -> Result<OracleReport> {
    let start = Instant::now();
    let src = preset.build(cfg)?;
    let solver = Solver::new(cfg, &src, settings.policy, settings.grid)?;
    let grid = settings.install(|| {
        fv_solve(
            cfg,
            &src,
            FvBox::centered(spec.half),
            spec.n,
            spec.bc,
            Some(&solver),
            &FvOptions::default(),
        )
    })??;
    let mask = comparison_mask(cfg, &grid.op, spec.exclude_cells);
    let centers = grid.op.centers();
    let series = settings.install(|| {
        centers
            .par_iter()
            .zip(&mask)
            .map(|(&p, &keep)| {
                if keep {
                    solver.solve_u(p).map(|r| r.value)
                } else {
                    Ok(0.0)
                }
            })
            .collect::<twodisk::Result<Vec<f64>>>()
    })??;
    let rep = compare(&series, &grid.u, &mask)?;
    Ok(OracleReport {
        l2_rel: rep.l2_rel,
        linf_rel: rep.linf_rel,
        n: spec.n,
        runtime_s: start.elapsed().as_secs_f64(),
        cg_iterations: grid.iterations,
        cg_residual: grid.residual,
        cells_compared: rep.cells,
        bc: match spec.bc {
            BoundaryCondition::DirichletFromSeries => "series".into(),
            BoundaryCondition::ZeroDirichlet => "zero".into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_run_agrees() {
        let cfg = TwoDiskConfig::unit(0.3, 5.0, 5.0).unwrap();
        let spec = OracleSpec {
            n: 128,
            ..Default::default()
        };
        let r =
            oracle_compare(&cfg, &SourcePreset::LowerBound, &spec, &Settings::default()).unwrap();
        assert!(r.l2_rel < 0.05, "{r:?}");
        assert_eq!(r.n, 128);
    }
}
