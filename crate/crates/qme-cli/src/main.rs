//! `qme` binary: efficiency sweeps, single-cycle ledgers, measurement-axiom
//! reports, and dissipative-reset trajectories for the two-qubit
//! measurement engine.

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use qme::measurement::{axiom_report, build_u_corr, correlate, OutcomeProjectors};
use qme::model::thermal_state;
use qme::scenario::{
    eme_entangle, eme_initial, lindblad_evolve, sweep, tcme_state, EngineKind, SweepRow,
};

/// Exact sweep CSV header; column order is part of the output contract.
const SWEEP_HEADER: &str =
    "scheme,engine,P,beta_prime,E_prep,E_cool,E_corr,W,E_reset,E_reset_clamped,E_meas,eta,C_max,error";

/// Trajectory CSV header of the `lindblad` command.
const LINDBLAD_HEADER: &str = "t,p00,p01,p10,p11,abs_coh,trace";

#[derive(Parser)]
#[command(
    name = "qme",
    version,
    about = "Simulate bipartite quantum measurement engines with non-ideal pointer readout"
)]
struct Cli {
    /// Config file with one `key = value` per line; `#` starts a comment.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override single config keys, applied in order after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Measurement scheme: `noninvasive` or `unbiased`.
    #[arg(long, global = true, value_name = "SCHEME")]
    scheme: Option<String>,

    /// Engine selection: `eme`, `tcme`, or `both`.
    #[arg(long, global = true, value_name = "ENGINE")]
    engine: Option<String>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the pointer purity grid and emit one CSV row per cycle.
    Sweep,
    /// Run one cycle at purity `p` and print its energy ledger.
    Cycle,
    /// Report bias, invasiveness, and decoding confidence at purity `p`.
    Axioms,
    /// Integrate the dissipative reset from a thermal start and emit the
    /// population trajectory as CSV.
    Lindblad,
}

#[derive(Parser)]
#[command(
    name = "qme",
    version,
    about = "Simulate bipartite quantum measurement engines with non-ideal pointer readout"
)]
struct CliWithCommand {
    #[command(flatten)]
    common: Cli,
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = CliWithCommand::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Execute the selected command. `Ok(true)` means a fully clean run;
/// `Ok(false)` means the output was written but some rows carry error tags.
fn run(cli: CliWithCommand) -> Result<bool> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.common.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        cfg.apply_text(&text, &path.display().to_string())?;
    }
    for assignment in &cli.common.set {
        cfg.apply_line(assignment)
            .with_context(|| format!("--set {assignment}"))?;
    }
    if let Some(scheme) = &cli.common.scheme {
        cfg.set("scheme", scheme).context("--scheme")?;
    }
    if let Some(engine) = &cli.common.engine {
        cfg.set("engine", engine).context("--engine")?;
    }
    if let Some(output) = &cli.common.output {
        cfg.output = Some(output.clone());
    }
    cfg.validate_stepping()?;

    let (content, clean) = match cli.command {
        Command::Sweep => cmd_sweep(&cfg)?,
        Command::Cycle => (cmd_cycle(&cfg)?, true),
        Command::Axioms => (cmd_axioms(&cfg)?, true),
        Command::Lindblad => (cmd_lindblad(&cfg)?, true),
    };

    match &cfg.output {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("cannot write output file {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(clean)
}

/// Scientific notation with 12 significant digits, locale independent.
fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

/// Error tags embed in a CSV field: commas and newlines must not survive.
fn sanitize_tag(tag: &str) -> String {
    tag.replace(',', ";").replace('\n', " ")
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(String, bool)> {
    let two = cfg.two_qubit()?;
    let bath = cfg.bath()?;
    let grid = cfg.grid()?;
    let rows = sweep(&two, &bath, &grid, &cfg.engine.kinds(), cfg.swap_rule);

    let mut out = String::with_capacity(rows.len() * 220 + SWEEP_HEADER.len() + 1);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    let mut clean = true;
    for row in &rows {
        clean &= row.error.is_none();
        write_sweep_row(&mut out, row);
    }
    Ok((out, clean))
}

fn write_sweep_row(out: &mut String, row: &SweepRow) {
    out.push_str(row.scheme.as_str());
    out.push(',');
    out.push_str(row.engine.as_str());
    out.push(',');
    out.push_str(&fmt(row.p));
    out.push(',');
    if let Some(beta_prime) = row.beta_prime {
        out.push_str(&fmt(beta_prime));
    }
    match (&row.ledger, &row.error) {
        (Some(ledger), None) => {
            for value in [
                ledger.e_prep,
                ledger.e_cool,
                ledger.e_corr,
                ledger.w,
                ledger.e_reset,
                ledger.e_reset_clamped,
                ledger.e_meas,
            ] {
                out.push(',');
                out.push_str(&fmt(value));
            }
            out.push(',');
            if let Some(eta) = ledger.eta {
                out.push_str(&fmt(eta));
            }
            out.push(',');
            out.push_str(&fmt(ledger.c_max));
            out.push_str(",\n");
        }
        (_, Some(error)) => {
            // Nine empty ledger columns, then the stage-tagged error.
            out.push_str(&",".repeat(9));
            out.push(',');
            out.push_str(&sanitize_tag(error));
            out.push('\n');
        }
        (None, None) => unreachable!("sweep rows carry a ledger or an error"),
    }
}

fn cmd_cycle(cfg: &RunConfig) -> Result<String> {
    let engine = cfg.engine.single()?;
    let two = cfg.two_qubit()?;
    let bath = cfg.bath()?;
    let rows = sweep(&two, &bath, &[cfg.p], &[engine], cfg.swap_rule);
    let row = rows.into_iter().next().expect("one grid point, one engine");
    if let Some(error) = row.error {
        bail!(error);
    }
    let ledger = row.ledger.expect("clean row carries a ledger");

    let mut out = String::new();
    let _ = writeln!(out, "scheme = {}", row.scheme.as_str());
    let _ = writeln!(out, "engine = {}", row.engine.as_str());
    let _ = writeln!(out, "P = {}", fmt(row.p));
    let _ = writeln!(
        out,
        "beta_prime = {}",
        fmt(row.beta_prime.expect("clean row has a valid purity"))
    );
    let _ = writeln!(out, "E_prep = {}", fmt(ledger.e_prep));
    let _ = writeln!(out, "E_cool = {}", fmt(ledger.e_cool));
    let _ = writeln!(out, "E_corr = {}", fmt(ledger.e_corr));
    let _ = writeln!(out, "W = {}", fmt(ledger.w));
    let _ = writeln!(out, "E_reset = {}", fmt(ledger.e_reset));
    let _ = writeln!(out, "E_reset_clamped = {}", fmt(ledger.e_reset_clamped));
    let _ = writeln!(out, "E_meas = {}", fmt(ledger.e_meas));
    match ledger.eta {
        Some(eta) => {
            let _ = writeln!(out, "eta = {}", fmt(eta));
        }
        None => {
            let _ = writeln!(out, "eta = null");
        }
    }
    let _ = writeln!(out, "C_max = {}", fmt(ledger.c_max));
    Ok(out)
}

fn cmd_axioms(cfg: &RunConfig) -> Result<String> {
    let two = cfg.two_qubit()?;
    let bath = cfg.bath()?;
    let pointer = two.pointer(cfg.p).context("config key `p`")?;
    let system = two.system();
    let scheme = two.correlation_scheme();
    let u_corr = build_u_corr(&scheme, &system, &pointer)?;
    let projectors = OutcomeProjectors::new(scheme.n_s(), scheme.n_p())?;

    let mut out = String::new();
    let _ = writeln!(out, "scheme = {}", two.scheme().as_str());
    let _ = writeln!(out, "P = {}", fmt(cfg.p));
    for engine in cfg.engine.kinds() {
        let rho_s = match engine {
            EngineKind::Eme => eme_entangle(&two, &eme_initial(&two)?)?,
            EngineKind::Tcme => tcme_state(&two, &bath)?,
        };
        let (rho_sp, _) = correlate(&rho_s, &system, &pointer, &u_corr)?;
        let report = axiom_report(&rho_s, &rho_sp, &projectors)?;
        let _ = writeln!(out);
        let _ = writeln!(out, "engine = {}", engine.as_str());
        let _ = writeln!(out, "bias_residual = {}", fmt(report.bias_residual));
        let _ = writeln!(out, "invasive_residual = {}", fmt(report.invasive_residual));
        let _ = writeln!(out, "c_max = {}", fmt(report.c_max));
    }
    Ok(out)
}

fn cmd_lindblad(cfg: &RunConfig) -> Result<String> {
    let two = cfg.two_qubit()?;
    let bath = cfg.bath()?;
    let system = two.system();
    let rho0 = thermal_state(&system.h_loc(), two.beta(), &system.layout())?;
    let trajectory = lindblad_evolve(&two, &bath, &rho0, cfg.rk4_dt, cfg.rk4_tmax)
        .context("config keys `rk4_dt`, `rk4_tmax`")?;

    let mut out = String::new();
    out.push_str(LINDBLAD_HEADER);
    out.push('\n');
    let last = trajectory.len() - 1;
    for (index, point) in trajectory.iter().enumerate() {
        if index % cfg.sample_every != 0 && index != last {
            continue;
        }
        let pops = point.state.diag_real();
        let coherence = point.state.mat()[(1, 2)].norm();
        let trace = point.state.mat().trace().re;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt(point.t),
            fmt(pops[0]),
            fmt(pops[1]),
            fmt(pops[2]),
            fmt(pops[3]),
            fmt(coherence),
            fmt(trace)
        );
    }
    Ok(out)
}
