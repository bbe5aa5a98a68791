//! The computations behind each subcommand, returning plain rows and reports.

pub mod green;
pub mod maps;
pub mod oracle;
pub mod sweep;

use anyhow::Result;
use twodisk::potentials::QuadratureGrid;
use twodisk::series::SeriesPolicy;

/// Numerical settings shared by all experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub policy: SeriesPolicy,
    pub grid: QuadratureGrid,
    /// Worker threads for sweeps; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            policy: SeriesPolicy::with_tol(1e-10),
            grid: QuadratureGrid::default(),
            workers: None,
        }
    }
}

impl Settings {
    /// Runs `f` on a pool of `workers` threads.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        match self.workers {
            None => Ok(f()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()?;
                Ok(pool.install(f))
            }
        }
    }
}
