mod compare;
mod config;
mod io;
mod stages;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use ovals_core::{Error, Result};
use serde::Serialize;
use stages::{Check, Outcome};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ancient-ovals", version, about = "Numerics for compact rotationally symmetric ancient Ricci flows on S³")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario preset: cylinder, sphere or oval-tau10
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory (default: $ANCIENT_OVALS_OUT, then ./ancient-ovals-out)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override, e.g. --tol shoot_tol=1e-6
    #[arg(long = "tol", value_name = "KEY=VAL")]
    tol: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the scenario and write profiles and history
    Evolve(Common),
    /// Evolve and analyse the rescaled profile spectrally
    Spectral(Common),
    /// Solve the steady soliton and report its constants
    Bryant(Common),
    /// Build and verify barriers, and check them along the trajectory
    Barrier(Common),
    /// Heat-kernel constants and the second-derivative bound
    Heatkernel(Common),
    /// Regime fits along the trajectory
    Regimes(Common),
    /// Every stage into one report
    RunAll(Common),
    /// Compare a run tree against a golden tree
    Compare {
        golden: PathBuf,
        run: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct Summary {
    command: &'static str,
    out: String,
    checks: Vec<Check>,
    pass: bool,
}

fn load(c: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut text = match &c.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    if let Some(s) = &c.scenario {
        text.push_str(&format!("\nscenario = {s}\n"));
    }
    let mut cfg = RunConfig::from_text(&text)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    for t in &c.tol {
        cfg.set_tolerance(t)?;
    }
    cfg.validate()?;
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let out = c
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os("ANCIENT_OVALS_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ancient-ovals-out"));
    ensure_dir(&out)?;
    Ok((cfg, out))
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Config(format!("cannot create {}: {e}", out.display())))?;
    let probe = out.join(".write-probe");
    std::fs::write(&probe, b"").map_err(|e| Error::Config(format!("{} is not writable: {e}", out.display())))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

fn check(name: &str, pass: bool) -> Check {
    Check { name: name.into(), pass }
}

fn run(cli: &Cli) -> Result<Summary> {
    let (name, common) = match &cli.command {
        Command::Evolve(c) => ("evolve", c),
        Command::Spectral(c) => ("spectral", c),
        Command::Bryant(c) => ("bryant", c),
        Command::Barrier(c) => ("barrier", c),
        Command::Heatkernel(c) => ("heatkernel", c),
        Command::Regimes(c) => ("regimes", c),
        Command::RunAll(c) => ("run-all", c),
        Command::Compare { golden, run, rel_tol, out } => {
            let report = compare::compare(golden, run, *rel_tol)?;
            if let Some(o) = out {
                ensure_dir(o)?;
                io::write_json(&o.join("compare.json"), &report)?;
            }
            let mut checks: Vec<Check> = report.differences.iter().map(|d| check(&d.field, false)).collect();
            checks.truncate(50);
            let s = Summary { command: "compare", out: String::new(), checks, pass: report.pass };
            return Ok(s);
        }
    };
    let (cfg, out) = load(common)?;
    let mut checks = Vec::new();
    match name {
        "bryant" => {
            checks.push(check("bryant_constants", stages::bryant_stage(&out)?.pass));
        }
        "heatkernel" => {
            checks.push(check("heat_kernel_bound", stages::heat_stage(&cfg, &out)?.pass));
        }
        "run-all" => {
            checks = stages::run_all(&cfg, &out)?.checks;
        }
        _ => {
            let tr = stages::trajectory(&cfg)?;
            let ev = stages::evolve_stage(&cfg, &out, &tr)?;
            if let Some(e) = ev.exact {
                checks.push(check("exact_solution", e.pass));
            }
            match name {
                "spectral" => {
                    if let Outcome::Value(s) = stages::spectral_stage(&out, &tr)? {
                        let c = s.neutral_dynamics.checks;
                        checks.push(check("mode_dominance", c.classification));
                        checks.push(check("alpha_ode", c.kappa));
                        checks.push(check("neutral_source", c.source));
                        checks.push(check("profile_tracking", c.tracking));
                    }
                }
                "barrier" => {
                    for b in stages::barrier_stage(&cfg, &out, &tr)?.barrier_checks {
                        checks.push(check(&format!("barrier_a{}_properties", b.a), b.properties.all_ok()));
                        if let Outcome::Value(o) = b.ordering {
                            checks.push(check(&format!("barrier_a{}_ordering", b.a), o.pass));
                        }
                    }
                }
                "regimes" => {
                    if let Some(t) = stages::regimes_stage(&cfg, &out, &tr)?.trends {
                        checks.push(check("ansatz_residuals_decay", t.residuals_improve()));
                        checks.push(check("ansatz_widths_improve", t.widths_improve()));
                        checks.push(check("ansatz_tips_improve", t.tips_improve()));
                    }
                }
                _ => {}
            }
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    let summary = Summary { command: name, out: out.display().to_string(), checks, pass };
    Ok(summary)
}

fn exit_code(e: &Error) -> (u8, &'static str) {
    match e {
        Error::Config(_) | Error::InvalidInput(_) => (2, "configuration"),
        Error::Incompatible(_) => (1, "incompatible"),
        _ => (3, "numerical"),
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    variant: String,
    message: String,
    exit_code: u8,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            match io::to_json(&summary) {
                Ok(s) => print!("{s}"),
                Err(e) => eprintln!("{e}"),
            }
            ExitCode::from(if summary.pass { 0 } else { 1 })
        }
        Err(e) => {
            let (code, kind) = exit_code(&e);
            let variant = format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("").to_string();
            let report = ErrorReport { error: ErrorBody { kind, variant, message: e.to_string(), exit_code: code } };
            let text = io::to_json(&report).unwrap_or_else(|_| format!("{{\"error\": \"{e}\"}}\n"));
            eprint!("{text}");
            ExitCode::from(code)
        }
    }
}
