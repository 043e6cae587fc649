//! Command-line surface. All file I/O lives here; the library below it is
//! pure. JSON output is deterministic: stable key order, fixed float
//! formatting through serde_json's default shortest-round-trip encoding.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::blowup::Blowup;
use crate::bounce::{extend_through_singularity, BounceConfig, SignRule};
use crate::checks;
use crate::cosmo::{
    coefficient_report, momentum_on_level, physical_energy, reduce, CoefficientComparison,
    CosmologyParams, ReducedModel,
};
use crate::flow::{integrate_physical, Diagnostics, Direction, IntegratorOptions, StopReason};
use crate::ratnum::{classify, Rational};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "bigbang", version, about = "Exact classification, blown-up integration, and bounce continuation for anisotropic collapse models")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Toward,
    Away,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

/// Flags shared by every verb that needs a parameter set. --w overrides the
/// equation of state from the file; with no file the built-in defaults are
/// used (unit densities and anisotropy, flat space, coupling scaled so the
/// reduced constants come out clean).
#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Parameter file (JSON).
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    /// Equation of state as an exact rational P/Q. Floats are rejected.
    #[arg(long, value_name = "P/Q")]
    pub w: Option<String>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<CosmologyParams> {
        let w = match &self.w {
            Some(s) => Some(s.parse::<Rational>()?),
            None => None,
        };
        match (&self.params, w) {
            (Some(path), Some(w)) => Ok(CosmologyParams::from_json_file(path)?.with_w(w)),
            (Some(path), None) => CosmologyParams::from_json_file(path),
            (None, Some(w)) => Ok(CosmologyParams::default_with_w(w)),
            (None, None) => Err(Error::InvalidInput(
                "either --params or --w is required".into(),
            )),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Decide branch-regularizability of an equation of state, exactly.
    Classify {
        /// Equation of state as an exact rational P/Q. Floats are rejected.
        #[arg(long, value_name = "P/Q")]
        w: String,
    },
    /// Print the reduced central-force model and its coefficient report.
    Reduce {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Integrate the reduced system and write trajectory + diagnostics.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        /// Initial scale factor.
        #[arg(long, default_value_t = 1.0)]
        a0: f64,
        #[arg(long, value_enum, default_value_t = DirectionArg::Toward)]
        direction: DirectionArg,
        /// Smallest scale factor chased in the physical chart.
        #[arg(long, default_value_t = 1e-3)]
        a_min: f64,
        /// Largest scale factor when running away from the singularity.
        #[arg(long, default_value_t = 1.0)]
        a_max: f64,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Continue a collapsing solution through the singularity.
    Bounce {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        a0: f64,
        /// Time-to-singularity of the branch match point.
        #[arg(long, default_value_t = 1e-8)]
        match_tau: f64,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Classify and bounce a grid of w values concurrently.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated list of exact rationals.
        #[arg(long = "w-list", value_name = "LIST", required = true)]
        w_list: String,
        /// Worker count; defaults to available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the internal-consistency suite and print a pass/fail table.
    Verify,
}

#[derive(Debug, Serialize)]
struct ReduceReport {
    model: ReducedModel,
    physical_energy: f64,
    coefficients: Vec<CoefficientComparison>,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    w: Rational,
    h_level: f64,
    stop: StopReason,
    samples: usize,
    trajectory: String,
    diagnostics: Diagnostics,
}

#[derive(Debug, Serialize)]
struct BounceReport {
    w: Rational,
    gamma: Rational,
    regularizable: bool,
    sign_rule: SignRule,
    psi0: f64,
    match_tau: f64,
    continuity_gap: f64,
    tau_star: f64,
    pre_csv: String,
    post_csv: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_hat_pre: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_hat_post: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SweepRow {
    w: Rational,
    regularizable: bool,
    gamma: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    parity: Option<crate::ratnum::Parity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    continuity_gap: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SweepFailure {
    w: Rational,
    reason: String,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    grid: Vec<Rational>,
    rows: Vec<SweepRow>,
    failures: Vec<SweepFailure>,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run_simulate(
    params: &CosmologyParams,
    a0: f64,
    direction: DirectionArg,
    a_min: f64,
    a_max: f64,
    out: &Path,
    format: FormatArg,
) -> Result<()> {
    if !(a0 > 0.0) || !(a_min > 0.0) || a_min >= a_max {
        return Err(Error::InvalidInput(
            "need a0 > 0 and 0 < a_min < a_max".into(),
        ));
    }
    let model = reduce(params);
    let blow = Blowup::new(&model);
    let h = physical_energy(params, &model);
    let (dir, sign) = match direction {
        DirectionArg::Toward => (Direction::Toward, -1.0),
        DirectionArg::Away => (Direction::Away, 1.0),
    };
    let p0 = momentum_on_level(&model, a0, h, sign)?;
    let opts = IntegratorOptions {
        stop_a_min: Some(a_min),
        stop_a_max: Some(a_max),
        direction: dir,
        ..Default::default()
    };
    let traj = integrate_physical(&model, &blow, a0, p0, h, &opts)?;
    std::fs::create_dir_all(out)?;
    let traj_path = out.join("trajectory.csv");
    match format {
        FormatArg::Csv => traj.write_csv(&traj_path)?,
        FormatArg::Json => {
            // JSON trajectory keeps the same columns as the CSV.
            let rows: Vec<serde_json::Value> = traj
                .samples
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "tau": s.tau, "s": s.s, "a": s.a, "P": s.p_mom,
                        "r": s.r, "v": s.v,
                        "H_residual": s.h_res, "M_residual": s.m_res,
                    })
                })
                .collect();
            std::fs::write(
                out.join("trajectory.json"),
                serde_json::to_string_pretty(&rows)?,
            )?;
        }
    }
    let report = SimulateReport {
        w: params.w.clone(),
        h_level: h,
        stop: traj.stop,
        samples: traj.samples.len(),
        trajectory: match format {
            FormatArg::Csv => traj_path.display().to_string(),
            FormatArg::Json => out.join("trajectory.json").display().to_string(),
        },
        diagnostics: traj.diagnostics.clone(),
    };
    std::fs::write(
        out.join("diagnostics.json"),
        serde_json::to_string_pretty(&report.diagnostics)?,
    )?;
    print_json(&report)
}

fn run_bounce(params: &CosmologyParams, a0: f64, match_tau: f64, out: &Path) -> Result<()> {
    let cfg = BounceConfig {
        a0,
        match_tau,
        ..Default::default()
    };
    let res = extend_through_singularity(params, &cfg)?;
    std::fs::create_dir_all(out)?;
    let pre_path = out.join("bounce_pre.csv");
    let post_path = out.join("bounce_post.csv");
    res.pre.write_csv(&pre_path)?;
    res.post.write_csv(&post_path)?;
    let report = BounceReport {
        w: res.w,
        gamma: res.gamma,
        regularizable: true,
        sign_rule: res.sign_rule,
        psi0: res.psi0,
        match_tau: res.match_tau,
        continuity_gap: res.continuity_gap,
        tau_star: res.tau_star,
        pre_csv: pre_path.display().to_string(),
        post_csv: post_path.display().to_string(),
        gamma_hat_pre: res.gamma_hat_pre,
        gamma_hat_post: res.gamma_hat_post,
    };
    print_json(&report)
}

/// One row per grid point, always; failures carry the reason alongside.
fn sweep_row(params: &CosmologyParams) -> (SweepRow, Option<SweepFailure>) {
    let class = classify(&params.w);
    let mut row = SweepRow {
        w: params.w.clone(),
        regularizable: class.is_regularizable(),
        gamma: class.gamma.clone(),
        parity: class.p_parity,
        gamma_hat: None,
        psi0: None,
        continuity_gap: None,
    };
    if !class.is_regularizable() {
        let f = SweepFailure {
            w: params.w.clone(),
            reason: class.reason,
        };
        return (row, Some(f));
    }
    match extend_through_singularity(params, &BounceConfig::default()) {
        Ok(res) => {
            row.gamma_hat = res.gamma_hat_pre;
            row.psi0 = Some(res.psi0);
            row.continuity_gap = Some(res.continuity_gap);
            (row, None)
        }
        Err(e) => {
            let f = SweepFailure {
                w: params.w.clone(),
                reason: e.to_string(),
            };
            (row, Some(f))
        }
    }
}

fn run_sweep(base: &CosmologyParams, w_list: &str, jobs: Option<usize>) -> Result<i32> {
    let grid: Vec<Rational> = w_list
        .split(',')
        .map(|s| s.parse::<Rational>())
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty w list".into()));
    }
    let jobs = jobs
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);
    // Fixed fan-out over indices; rows land in input order regardless of
    // which worker finishes first.
    let mut results: Vec<Option<(SweepRow, Option<SweepFailure>)>> =
        (0..grid.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut chunks: Vec<_> = results.chunks_mut(1).collect();
        let mut handles = Vec::new();
        for worker in 0..jobs.min(grid.len()) {
            let mut slots: Vec<_> = Vec::new();
            let mut idxs = Vec::new();
            for (i, c) in chunks.iter_mut().enumerate() {
                if i % jobs == worker {
                    idxs.push(i);
                    slots.push(std::mem::take(c));
                }
            }
            let grid = &grid;
            let base = base.clone();
            handles.push(scope.spawn(move || {
                for (i, slot) in idxs.into_iter().zip(slots) {
                    let p = base.with_w(grid[i].clone());
                    slot[0] = Some(sweep_row(&p));
                }
            }));
        }
        for h in handles {
            h.join().expect("sweep worker panicked");
        }
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (row, failure) in results.into_iter().flatten() {
        rows.push(row);
        if let Some(f) = failure {
            failures.push(f);
        }
    }
    let report = SweepReport {
        grid,
        rows,
        failures,
    };
    print_json(&report)?;
    Ok(0)
}

fn run_verify() -> i32 {
    let results = checks::run_all();
    let width = results.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut ok = true;
    for c in &results {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:width$}  {}", c.name, c.detail);
        ok &= c.passed;
    }
    if ok {
        println!("verify: {} checks passed", results.len());
        0
    } else {
        eprintln!("verify: consistency failure");
        4
    }
}

/// Executes a parsed command; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let outcome: Result<i32> = match cli.verb {
        Verb::Classify { w } => w
            .parse::<Rational>()
            .map(|w| classify(&w))
            .and_then(|c| print_json(&c).map(|_| 0)),
        Verb::Reduce { params } => params.resolve().and_then(|p| {
            let model = reduce(&p);
            let report = ReduceReport {
                physical_energy: physical_energy(&p, &model),
                coefficients: coefficient_report(&p, &model),
                model,
            };
            print_json(&report).map(|_| 0)
        }),
        Verb::Simulate {
            params,
            a0,
            direction,
            a_min,
            a_max,
            out,
            format,
        } => params
            .resolve()
            .and_then(|p| run_simulate(&p, a0, direction, a_min, a_max, &out, format).map(|_| 0)),
        Verb::Bounce {
            params,
            a0,
            match_tau,
            out,
        } => params
            .resolve()
            .and_then(|p| run_bounce(&p, a0, match_tau, &out).map(|_| 0)),
        Verb::Sweep {
            params,
            w_list,
            jobs,
        } => {
            let base = match (&params.params, &params.w) {
                (None, None) => Ok(CosmologyParams::default_with_w(Rational::one())),
                _ => params.resolve(),
            };
            base.and_then(|p| run_sweep(&p, &w_list, jobs))
        }
        Verb::Verify => Ok(run_verify()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bigbang: {e}");
            e.exit_code()
        }
    }
}

/// Entry point shared by the binary and the integration tests.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(cli),
        Err(e) => {
            // clap handles --help/--version with success exits; map genuine
            // usage errors to the documented code.
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            code
        }
    }
}
