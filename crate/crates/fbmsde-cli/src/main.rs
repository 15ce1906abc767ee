//! Command-line runner: `simulate` produces one seeded scheme/oracle pair
//! with a self-describing manifest, `converge` runs the rate study, and
//! `verify` runs the bound suite. Exit codes: 0 success, 1 a numeric claim
//! failed (reports are still written), 2 unusable configuration.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use fbmsde::builtin_family;
use fbmsde::error::Error as LibError;
use fbmsde::flow::{build_partition, PiecewiseFlow};
use fbmsde::harness::{check_taylor_lemma, kink_spec, run_convergence, run_lemma_suite, smooth_spec, taylor_spec_from_flow, TaylorReport};
use fbmsde::scheme::{solve_x_reference_on_path, solve_x_scheme_on_path, RunManifest};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "fbmsde", about = "Taylor-flow scheme for SDEs driven by fractional Brownian motion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded scheme + reference pair and write trajectories and a
    /// manifest.
    Simulate(CommonArgs),
    /// Run the convergence grid; exit 0 only if every pathwise bound holds
    /// and the median order clears its threshold.
    Converge(CommonArgs),
    /// Run the bound-verification suites; exit 0 only if every ratio is
    /// at most one.
    Verify(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config; 0 = machine parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Replace the configured base seed.
    #[arg(long)]
    seed_override: Option<u64>,
}

enum CliError {
    /// Unusable input: exit 2.
    Usage(String),
    /// A numeric computation or claim failed: exit 1.
    Numeric(String),
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        match e {
            LibError::Domain(_) | LibError::Precondition(_) => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => run(args, cmd_simulate),
        Command::Converge(args) => run(args, cmd_converge),
        Command::Verify(args) => run(args, cmd_verify),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(args: CommonArgs, body: fn(RunConfig, &Path) -> Result<(), CliError>) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed_override {
        cfg.seed = seed;
        cfg.lemma_path_seed = seed;
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if cfg.workers > 0 {
        // Ignore the error if a pool already exists (tests call run twice).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    let out_dir = args.out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    fs::create_dir_all(&out_dir)?;
    body(cfg, &out_dir)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)?;
    Ok(())
}

fn cmd_simulate(cfg: RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let scheme_cfg = cfg.scheme_config();
    for w in scheme_cfg.validate()? {
        eprintln!("warning: {w}");
    }
    let path = scheme_cfg.generate_path()?;
    let scheme = solve_x_scheme_on_path(&scheme_cfg, &path)?;
    let reference = solve_x_reference_on_path(&scheme_cfg, &path)?;

    let mut outputs = Vec::new();
    if cfg.emit_trajectories {
        for (name, traj) in [
            ("x_scheme.csv", &scheme.x),
            ("x_reference.csv", &reference.x),
            ("y_scheme.csv", &scheme.y),
        ] {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)?;
            write(&out_dir.join(name), std::str::from_utf8(&buf).expect("ascii"))?;
            outputs.push(name.to_string());
        }
    }
    if cfg.emit_paths {
        let mut buf = Vec::new();
        path.write_csv(&mut buf)?;
        write(&out_dir.join("path.csv"), std::str::from_utf8(&buf).expect("ascii"))?;
        outputs.push("path.csv".to_string());
    }
    let manifest = RunManifest {
        config: scheme_cfg,
        stats: scheme.stats,
        constants: scheme.constants,
        outputs,
    };
    write(&out_dir.join("manifest.json"), &manifest.to_json_pretty()?)?;
    println!("simulate: wrote {}", out_dir.display());
    Ok(())
}

fn cmd_converge(cfg: RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let conv_cfg = cfg.convergence_config();
    for w in conv_cfg.validate()? {
        eprintln!("warning: {w}");
    }
    let report = run_convergence(&conv_cfg)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write(&out_dir.join("convergence.csv"), std::str::from_utf8(&csv).expect("ascii"))?;
    write(&out_dir.join("convergence_summary.json"), &report.to_json_pretty()?)?;

    for s in &report.summaries {
        match s.median_order {
            Some(m) => println!(
                "H = {}: median order {m:.4} (target {:.4}, threshold {:.4}) {}",
                s.hurst,
                s.target_order,
                s.threshold,
                if s.slope_pass { "ok" } else { "FAIL" }
            ),
            None => println!("H = {}: exact family, order fit skipped", s.hurst),
        }
    }
    if !report.all_bounds_ok {
        let bad = report.records.iter().filter(|r| !r.bound_ok).count();
        return Err(CliError::Numeric(format!(
            "{bad} runs exceeded the pathwise bound (see convergence.csv)"
        )));
    }
    if !report.passed {
        return Err(CliError::Numeric("median order below threshold".into()));
    }
    println!("converge: wrote {}", out_dir.display());
    Ok(())
}

fn cmd_verify(cfg: RunConfig, out_dir: &Path) -> Result<(), CliError> {
    if cfg.taylor_samples == 0 {
        return Err(CliError::Usage("taylor_samples must be positive".into()));
    }
    let lemma_cfg = cfg.lemma_config();
    let report = run_lemma_suite(&lemma_cfg)?;

    let taylor_reports = taylor_checks(&cfg)?;

    #[derive(serde::Serialize)]
    struct VerifyReport<'a> {
        lemmas: &'a fbmsde::harness::LemmaReport,
        taylor: &'a [TaylorReport],
        pass: bool,
    }
    let taylor_pass = taylor_reports.iter().all(|t| t.pass);
    let pass = report.pass && taylor_pass;
    let doc = VerifyReport { lemmas: &report, taylor: &taylor_reports, pass };
    write(
        &out_dir.join("verify_report.json"),
        &serde_json::to_string_pretty(&doc)
            .map_err(|e| CliError::Numeric(format!("report serialization failed: {e}")))?,
    )?;

    for e in &report.entries {
        println!(
            "{}: worst ratio {:.3e} over {} samples{} {}",
            e.lemma,
            e.worst_ratio,
            e.samples,
            if e.vacuous { " (vacuous)" } else { "" },
            if e.pass { "ok" } else { "FAIL" }
        );
    }
    for t in &taylor_reports {
        println!(
            "taylor [{}]: worst ratio {:.6} over {} samples {}",
            t.label,
            t.worst_ratio,
            t.samples,
            if t.pass { "ok" } else { "FAIL" }
        );
    }
    if !pass {
        let mut failing: Vec<String> = report
            .entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| format!("{} ({})", e.lemma, e.witness.as_deref().unwrap_or("no witness")))
            .collect();
        failing.extend(
            taylor_reports
                .iter()
                .filter(|t| !t.pass)
                .map(|t| format!("taylor {} ({})", t.label, t.witness.as_deref().unwrap_or(""))),
        );
        return Err(CliError::Numeric(format!("violated: {}", failing.join("; "))));
    }
    println!("verify: wrote {}", out_dir.display());
    Ok(())
}

fn taylor_checks(cfg: &RunConfig) -> Result<Vec<TaylorReport>, CliError> {
    let mut reports = Vec::new();
    reports.push(check_taylor_lemma(&kink_spec(1.5)?, cfg.taylor_samples, 101)?);
    reports.push(check_taylor_lemma(&smooth_spec(2.0, 8)?, cfg.taylor_samples, 202)?);
    let pair = builtin_family(cfg.coeffs)?;
    let level = cfg.levels.last().copied().unwrap_or(64);
    let flow = Arc::new(PiecewiseFlow::new(
        build_partition(1.2, level)?,
        pair,
        12.0,
    ));
    let spec = taylor_spec_from_flow(flow, cfg.x0.clamp(-1.0, 1.0))?;
    reports.push(check_taylor_lemma(&spec, cfg.taylor_samples, 303)?);
    Ok(reports)
}
