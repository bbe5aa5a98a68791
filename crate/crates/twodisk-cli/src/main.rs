use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use twodisk::oracle::BoundaryCondition;
use twodisk::potentials::Solver;
use twodisk::series::SeriesPolicy;
use twodisk::{Point, TwoDiskConfig};
use twodisk_cli::config::{ConfigFile, SweepSpec, DEFAULT_EPS};
use twodisk_cli::experiments::sweep::{self, CollapseSpec};
use twodisk_cli::experiments::{green, maps, oracle, Settings};
use twodisk_cli::output::{csv_string, emit, json_string};

#[derive(Parser, Debug)]
#[command(
    name = "twodisk",
    version,
    about = "Two-disk conductivity problem: Green's function, solutions and sweeps"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Configuration file (`key = value` lines or a JSON object).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Series tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Hard cap on series terms.
    #[arg(long, global = true)]
    max_terms: Option<usize>,
    /// Directory for CSV and JSON artifacts; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print the JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Bc {
    Series,
    Zero,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariant suite of the inversion maps; nonzero exit on failure.
    MapsCheck {
        /// Perturb the first inversion matrix (negative control).
        #[arg(long)]
        corrupt: bool,
    },
    /// G(x, y) at points or on a grid.
    GreenEval {
        /// Source point `x1,x2`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        y: Point,
        #[command(flatten)]
        points: Points,
    },
    /// Transmission, flux and center-limit audits of G.
    JumpAudit {
        #[arg(long, default_value_t = 40)]
        samples: usize,
    },
    /// u and its gradient at points or on a grid.
    Solve {
        #[command(flatten)]
        points: Points,
    },
    /// |Du| probes over the gap and contrast sweep with slope fit.
    RateSweep,
    /// |Du(0)| against the effective gap parameter for several radii pairs.
    RadiiCollapse,
    /// |D^m u(0)| over the gap sweep with slope fit.
    HigherDeriv {
        #[arg(long, default_value_t = 2)]
        m: usize,
    },
    /// Sign and compensated size of D1 u(0).
    LowerBound,
    /// Finite-volume cross-check of the series solution.
    OracleCompare {
        #[arg(long, default_value_t = 600)]
        n: usize,
        /// Half-width of the square box.
        #[arg(long = "box", default_value_t = 3.0)]
        half: f64,
        #[arg(long, value_enum, default_value = "series")]
        bc: Bc,
        #[arg(long, default_value_t = 2.0)]
        exclude_cells: f64,
    },
}

#[derive(Args, Debug)]
struct Points {
    /// Evaluation point `x1,x2`; repeatable.
    #[arg(long = "at", value_parser = parse_point, allow_hyphen_values = true)]
    at: Vec<Point>,
    /// Grid box `lo1,lo2,hi1,hi2`.
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true)]
    grid: Option<[f64; 4]>,
    /// Grid points per side.
    #[arg(long, default_value_t = 21)]
    n: usize,
}

fn parse_numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

fn parse_point(s: &str) -> Result<Point, String> {
    match parse_numbers(s)?.as_slice() {
        [a, b] => Ok(C64::new(*a, *b)),
        _ => Err("expected x1,x2".into()),
    }
}

fn parse_box(s: &str) -> Result<[f64; 4], String> {
    parse_numbers(s)?
        .try_into()
        .map_err(|_| "expected lo1,lo2,hi1,hi2".to_string())
}

impl Points {
    fn list(&self) -> Result<Vec<Point>> {
        let mut out = self.at.clone();
        if let Some([a, b, c, d]) = self.grid {
            if self.n < 2 {
                bail!("--n must be at least 2");
            }
            let m = (self.n - 1) as f64;
            for j in 0..self.n {
                for i in 0..self.n {
                    out.push(C64::new(
                        a + (c - a) * i as f64 / m,
                        b + (d - b) * j as f64 / m,
                    ));
                }
            }
        }
        if out.is_empty() {
            bail!("give --at points or a --grid");
        }
        Ok(out)
    }
}

struct Ctx {
    file: ConfigFile,
    settings: Settings,
    out: Option<PathBuf>,
    json: bool,
}

impl Ctx {
    fn cfg(&self) -> Result<TwoDiskConfig> {
        let n = |k: &str, d: f64| -> Result<f64> { Ok(self.file.num(k)?.unwrap_or(d)) };
        Ok(TwoDiskConfig::new(
            n("eps", 0.1)?,
            n("r1", 1.0)?,
            n("r2", 1.0)?,
            n("k1", 5.0)?,
            n("k2", 5.0)?,
        )?)
    }

    /// Writes `<name>.csv` and `<name>.json`; stdout gets the JSON with `--json`, else the CSV.
    fn finish<R: Serialize, B: Serialize>(
        &self,
        name: &str,
        rows: Option<&[R]>,
        report: &B,
    ) -> Result<()> {
        let json = json_string(name, report)?;
        let csv = rows.map(csv_string).transpose()?;
        match &self.out {
            Some(dir) => {
                if let Some(c) = &csv {
                    emit(Some(dir), &format!("{name}.csv"), c)?;
                }
                emit(Some(dir), &format!("{name}.json"), &json)?;
                if self.json {
                    emit(None, "", &json)?;
                }
            }
            None => match (&csv, self.json) {
                (Some(c), false) => emit(None, "", c)?,
                _ => emit(None, "", &json)?,
            },
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct SolveRow {
    x1: f64,
    x2: f64,
    u: f64,
    du1: f64,
    du2: f64,
    region: String,
    terms_used: usize,
    tail_estimate: f64,
    quad_error: f64,
}

#[derive(Serialize)]
struct RowsReport<'a, T: Serialize> {
    config: ConfigEcho,
    rows: &'a [T],
}

#[derive(Serialize)]
struct SweepReport<'a, S: Serialize, R: Serialize> {
    spec: &'a S,
    #[serde(flatten)]
    report: &'a R,
}

#[derive(Serialize)]
struct ConfigEcho {
    eps: f64,
    r1: f64,
    r2: f64,
    k1: f64,
    k2: f64,
}

impl From<&TwoDiskConfig> for ConfigEcho {
    fn from(c: &TwoDiskConfig) -> Self {
        ConfigEcho {
            eps: c.eps(),
            r1: c.r1(),
            r2: c.r2(),
            k1: c.k1(),
            k2: c.k2(),
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let g = cli.global;
    let file = match &g.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut policy = SeriesPolicy::with_tol(g.tol);
    if let Some(m) = g.max_terms {
        policy.max_terms = m;
    }
    policy.validate()?;
    let settings = Settings {
        policy,
        workers: g.workers,
        ..Default::default()
    };
    let ctx = Ctx {
        file,
        settings,
        out: g.out,
        json: g.json,
    };
    match cli.cmd {
        Command::MapsCheck { corrupt } => {
            let cfg = ctx.cfg()?;
            let rep = if corrupt {
                maps::maps_check_with(&cfg, maps::corrupted_inversions(&cfg, 1e-3))
            } else {
                maps::maps_check(&cfg)
            };
            ctx.finish::<(), _>("maps_check", None, &rep)?;
            Ok(rep.passed)
        }
        Command::GreenEval { y, points } => {
            let cfg = ctx.cfg()?;
            let rows = green::green_eval(&cfg, policy, y, &points.list()?);
            ctx.finish(
                "green_eval",
                Some(&rows),
                &RowsReport {
                    config: (&cfg).into(),
                    rows: &rows,
                },
            )?;
            Ok(true)
        }
        Command::JumpAudit { samples } => {
            let cfg = ctx.cfg()?;
            let rep = green::jump_audit(&cfg, policy, samples)?;
            ctx.finish("jump_audit", Some(&rep.jumps), &rep)?;
            Ok(rep.passed)
        }
        Command::Solve { points } => {
            let cfg = ctx.cfg()?;
            let src = ctx.file.source()?.build(&cfg)?;
            let solver = Solver::new(&cfg, &src, policy, ctx.settings.grid)?;
            let pts = points.list()?;
            let evals = ctx.settings.install(|| solver.solve_many(&pts))?;
            let mut rows = Vec::with_capacity(pts.len());
            for (p, e) in pts.iter().zip(evals) {
                let e = e.with_context(|| format!("at ({}, {})", p.re, p.im))?;
                rows.push(SolveRow {
                    x1: p.re,
                    x2: p.im,
                    u: e.value.value,
                    du1: e.value.grad.re,
                    du2: e.value.grad.im,
                    region: e.region.name().into(),
                    terms_used: e.terms_used,
                    tail_estimate: e.tail_estimate,
                    quad_error: e.quad_error,
                });
            }
            ctx.finish(
                "solve",
                Some(&rows),
                &RowsReport {
                    config: (&cfg).into(),
                    rows: &rows,
                },
            )?;
            Ok(true)
        }
        Command::RateSweep => {
            let defaults = SweepSpec::new(&DEFAULT_EPS, &[1.0, 2.0, 10.0, 1e2, 1e3, 1e4]);
            let spec = SweepSpec::from_file(&ctx.file, defaults)?;
            let (rows, rep) = sweep::rate_sweep(&spec, &ctx.settings)?;
            ctx.finish(
                "rate_sweep",
                Some(&rows),
                &SweepReport {
                    spec: &spec,
                    report: &rep,
                },
            )?;
            Ok(true)
        }
        Command::RadiiCollapse => {
            let mut spec = CollapseSpec::default();
            if let (Some(a), Some(b)) = (ctx.file.list("r1_list")?, ctx.file.list("r2_list")?) {
                if a.len() != b.len() {
                    bail!("r1_list and r2_list must have equal lengths");
                }
                spec.radii = a.into_iter().zip(b).collect();
            }
            if let Some(t) = ctx.file.list("tau_list")? {
                spec.tau_list = t;
            }
            if let Some(k) = ctx.file.list("k1_list")?.and_then(|v| v.first().copied()) {
                spec.k = k;
            }
            let (rows, rep) = sweep::radii_collapse(&spec, &ctx.settings)?;
            ctx.finish(
                "radii_collapse",
                Some(&rows),
                &SweepReport {
                    spec: &spec,
                    report: &rep,
                },
            )?;
            Ok(rep.passed)
        }
        Command::HigherDeriv { m } => {
            let spec = SweepSpec::from_file(&ctx.file, SweepSpec::new(&DEFAULT_EPS, &[1.0, 1e4]))?;
            let (rows, rep) = sweep::higher_deriv(&spec, m, &ctx.settings)?;
            ctx.finish(
                "higher_deriv",
                Some(&rows),
                &SweepReport {
                    spec: &spec,
                    report: &rep,
                },
            )?;
            Ok(true)
        }
        Command::LowerBound => {
            let spec =
                SweepSpec::from_file(&ctx.file, SweepSpec::new(&[0.1, 0.01], &[1.0, 10.0, 1e3]))?;
            let rep = sweep::lower_bound(&spec, &ctx.settings)?;
            ctx.finish("lower_bound", Some(&rep.rows), &rep)?;
            Ok(rep.passed)
        }
        Command::OracleCompare {
            n,
            half,
            bc,
            exclude_cells,
        } => {
            let cfg = ctx.cfg()?;
            let bc = match bc {
                Bc::Series => BoundaryCondition::DirichletFromSeries,
                Bc::Zero => BoundaryCondition::ZeroDirichlet,
            };
            let spec = oracle::OracleSpec {
                n,
                half,
                bc,
                exclude_cells,
            };
            let rep = oracle::oracle_compare(&cfg, &ctx.file.source()?, &spec, &ctx.settings)?;
            ctx.finish::<(), _>("oracle_compare", None, &rep)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
