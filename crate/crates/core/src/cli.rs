//! Command-line front end. [`run`] parses arguments, dispatches and returns
//! the process exit code:
//!
//! | code | meaning                          |
//! |------|----------------------------------|
//! | 0    | success                          |
//! | 1    | usage, configuration or I/O error |
//! | 2    | synthesis program infeasible     |
//! | 3    | verification failure             |

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::benchmark;
use crate::config::{ConfigError, ProblemConfig, SynthesisArtifact};
use crate::simulation::{self, SimulationError};
use crate::synthesis::{self, SynthesisError, SynthesisMode, SynthesisResult};
use crate::verification::{self, SamplingOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Overrides the backend's feasibility and gap tolerances.
pub const SOLVER_TOL_ENV: &str = "NUIO_SOLVER_TOL";

#[derive(Debug, Parser)]
#[command(name = "nuio", version, about = "Unknown input observer synthesis, simulation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the observer program for a TOML config or a benchmark preset.
    Synthesize {
        /// Config path or preset (benchmark:robot-arm:sensor, benchmark:robot-arm:actuator).
        config: String,
        /// Artifact output path.
        #[arg(short, long, default_value = "synthesis.json")]
        out: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Fault model order.
        #[arg(long)]
        r: Option<usize>,
        /// full, iss_only, l2_only or decoupled.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Simulate plant and observer from a synthesis artifact.
    Simulate {
        result: PathBuf,
        /// Fault scenario from a preset or TOML config (defaults to the artifact's).
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        tf: Option<f64>,
        /// Trace CSV path; without it the CSV goes to stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Directory for actual/estimated fault series.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Re-check a synthesis artifact.
    Verify {
        result: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Synthesize, simulate and verify both benchmark cases.
    Benchmark {
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Directory for artifacts and traces.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<SimulationError> for Failure {
    fn from(e: SimulationError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<SynthesisError> for Failure {
    fn from(e: SynthesisError) -> Self {
        match &e {
            SynthesisError::Infeasible { hint, .. } => Self {
                code: EXIT_INFEASIBLE,
                message: match hint {
                    Some(h) => format!("{e}\nhint: {h}"),
                    None => e.to_string(),
                },
            },
            _ => Self::usage(e.to_string()),
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Parse `args` (including the program name) and run.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let res = match cli.command {
        Command::Synthesize {
            config,
            out: path,
            epsilon,
            r,
            mode,
        } => cmd_synthesize(&config, &path, epsilon, r, mode.as_deref(), out),
        Command::Simulate {
            result,
            scenario,
            dt,
            tf,
            csv,
            plot_data,
        } => cmd_simulate(
            &result,
            scenario.as_deref(),
            dt,
            tf,
            csv.as_deref(),
            plot_data.as_deref(),
            out,
        ),
        Command::Verify {
            result,
            samples,
            seed,
        } => cmd_verify(&result, samples, seed, out),
        Command::Benchmark {
            r,
            out_dir,
            samples,
        } => cmd_benchmark(r, out_dir.as_deref(), samples, out),
    };
    match res {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn solver_tol_override() -> Result<Option<f64>, Failure> {
    match std::env::var(SOLVER_TOL_ENV) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0 && t.is_finite())
            .map(Some)
            .ok_or_else(|| Failure::usage(format!("{SOLVER_TOL_ENV}={v:?} is not a positive number"))),
        Err(_) => Ok(None),
    }
}

fn apply_overrides(
    cfg: &mut ProblemConfig,
    epsilon: Option<f64>,
    mode: Option<&str>,
) -> Result<(), Failure> {
    if let Some(eps) = epsilon {
        cfg.solver.epsilon = eps;
    }
    if let Some(m) = mode {
        cfg.solver.mode = m.parse::<SynthesisMode>().map_err(Failure::usage)?;
    }
    if let Some(tol) = solver_tol_override()? {
        cfg.solver.solver.feas_tol = tol;
        cfg.solver.solver.gap_tol = tol;
    }
    Ok(())
}

fn synthesize_config(cfg: &ProblemConfig) -> Result<SynthesisResult, Failure> {
    let (plant, aug) = cfg.build()?;
    Ok(synthesis::synthesize(&aug, plant.alpha(), &cfg.solver)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.6e}"))
}

fn print_summary(res: &SynthesisResult, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{:<24} {:?}", "status", res.status)?;
    writeln!(out, "{:<24} {:?}", "mode", res.mode)?;
    writeln!(out, "{:<24} {}", "rho*", fmt_opt(res.rho))?;
    writeln!(out, "{:<24} {}", "L2 bound = sqrt(2·ρ★)", fmt_opt(res.l2_gain_bound))?;
    writeln!(out, "{:<24} {:.6e}", "ISS bound 2|PMD_a|/eps", res.iss_gain_bound)?;
    writeln!(out, "{:<24} {}", "solver iterations", res.diagnostics.iterations)?;
    writeln!(
        out,
        "{:<24} iss {} / l2 {}",
        "max eig of blocks",
        fmt_opt(res.certificate.iss_max_eigenvalue),
        fmt_opt(res.certificate.l2_max_eigenvalue)
    )
}

fn cmd_synthesize(
    source: &str,
    path: &Path,
    epsilon: Option<f64>,
    r: Option<usize>,
    mode: Option<&str>,
    out: &mut dyn Write,
) -> CmdResult {
    let mut cfg = ProblemConfig::resolve(source, r)?;
    apply_overrides(&mut cfg, epsilon, mode)?;
    let res = synthesize_config(&cfg)?;
    print_summary(&res, out)?;
    let art = SynthesisArtifact::new(Some(source.to_string()), cfg, res);
    std::fs::write(path, art.to_json()?)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(EXIT_OK)
}

fn cmd_simulate(
    result: &Path,
    scenario: Option<&str>,
    dt: Option<f64>,
    tf: Option<f64>,
    csv: Option<&Path>,
    plot_data: Option<&Path>,
    out: &mut dyn Write,
) -> CmdResult {
    let art = SynthesisArtifact::load(result)?;
    let (plant, aug) = art.build()?;
    let scen = match scenario {
        Some(src) => ProblemConfig::resolve(src, Some(aug.r))?.scenario.ok_or_else(|| {
            Failure::usage(format!("{src} has no [scenario] section"))
        })?,
        None => art
            .problem
            .scenario
            .clone()
            .unwrap_or_else(|| simulation::FaultScenario::zero(aug.dims.n_f)),
    };
    let spec = art.problem.simulation.clone().ok_or_else(|| {
        Failure::usage("the artifact's problem has no [simulation] section")
    })?;
    let mut cfg = spec.to_config(aug.n_z);
    if let Some(dt) = dt {
        cfg.dt = dt;
    }
    if let Some(tf) = tf {
        cfg.tf = tf;
    }
    let trace = simulation::simulate(&plant, &aug, &art.result.observer, &scen, &cfg)?;
    match csv {
        Some(p) => {
            let file = std::io::BufWriter::new(std::fs::File::create(p)?);
            simulation::write_csv(&trace, file)?;
            writeln!(out, "wrote {} ({} rows)", p.display(), trace.len())?;
            writeln!(
                out,
                "terminal |fhat - f| = {:.6e}, max |e| after t = {} : {:.6e}, empirical L2 = {}",
                trace.summary.terminal_fault_error,
                trace.summary.transient_end,
                trace.summary.max_error_after_transient,
                fmt_opt(trace.summary.empirical_l2)
            )?;
        }
        None => simulation::write_csv(&trace, &mut *out)?,
    }
    if let Some(dir) = plot_data {
        simulation::write_plot_data(&trace, dir)?;
    }
    Ok(EXIT_OK)
}

fn cmd_verify(result: &Path, samples: usize, seed: Option<u64>, out: &mut dyn Write) -> CmdResult {
    if samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    let art = SynthesisArtifact::load(result)?;
    let (_, aug) = art.build()?;
    let mut opts = SamplingOptions {
        samples,
        ..SamplingOptions::default()
    };
    if let Some(s) = seed {
        opts.seed = s;
    }
    let suite = verification::verify_result(&aug, &art.result, &opts);
    write!(out, "{suite}")?;
    let recheck = verification::recheck_certificate(&aug, &art.result);
    writeln!(
        out,
        "recomputed blocks: iss max eig {}, l2 max eig {}, P min eig {:.6e}",
        fmt_opt(recheck.iss_max_eigenvalue),
        fmt_opt(recheck.l2_max_eigenvalue),
        recheck.p_min_eigenvalue
    )?;
    Ok(if suite.passed() { EXIT_OK } else { EXIT_VERIFY })
}

struct CaseOutcome {
    code: i32,
    lines: Vec<String>,
}

fn benchmark_case(
    case: benchmark::FaultCase,
    r: usize,
    out_dir: Option<&Path>,
    samples: usize,
) -> Result<CaseOutcome, Failure> {
    let name = case.preset();
    let mut cfg = ProblemConfig::resolve(name, Some(r))?;
    apply_overrides(&mut cfg, None, None)?;
    let (plant, aug) = cfg.build()?;
    let res = synthesis::synthesize(&aug, plant.alpha(), &cfg.solver)?;
    let scen = cfg.scenario.clone().expect("presets carry a scenario");
    let sim = cfg.simulation.clone().expect("presets carry a simulation").to_config(aug.n_z);
    let trace = simulation::simulate(&plant, &aug, &res.observer, &scen, &sim)?;
    let opts = SamplingOptions {
        samples,
        ..SamplingOptions::default()
    };
    let suite = verification::verify_result(&aug, &res, &opts);
    let mut lines = vec![format!(
        "{name}: rho* = {}, L2 bound = {}, ISS bound = {:.4e}, terminal |fhat - f| = {:.3e}, max |e| on [{}, {}] = {:.3e}",
        fmt_opt(res.rho),
        fmt_opt(res.l2_gain_bound),
        res.iss_gain_bound,
        trace.summary.terminal_fault_error,
        trace.summary.transient_end,
        sim.tf,
        trace.summary.max_error_after_transient
    )];
    lines.extend(suite.to_string().lines().map(|l| format!("  {l}")));
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let stem = name.replace(':', "_");
        let art = SynthesisArtifact::new(Some(name.into()), cfg.clone(), res);
        std::fs::write(dir.join(format!("{stem}.json")), art.to_json()?)?;
        let file = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}.csv")))?);
        simulation::write_csv(&trace, file)?;
        simulation::write_plot_data(&trace, &dir.join(&stem))?;
    }
    Ok(CaseOutcome {
        code: if suite.passed() { EXIT_OK } else { EXIT_VERIFY },
        lines,
    })
}

fn cmd_benchmark(r: usize, out_dir: Option<&Path>, samples: usize, out: &mut dyn Write) -> CmdResult {
    if samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    let outcomes: Vec<Result<CaseOutcome, Failure>> =
        [benchmark::FaultCase::Sensor, benchmark::FaultCase::Actuator]
            .into_par_iter()
            .map(|c| benchmark_case(c, r, out_dir, samples))
            .collect();
    let mut code = EXIT_OK;
    for o in outcomes {
        let o = o?;
        for l in &o.lines {
            writeln!(out, "{l}")?;
        }
        code = code.max(o.code);
    }
    Ok(code)
}
