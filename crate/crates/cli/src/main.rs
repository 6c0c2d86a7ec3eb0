//! `bellbound` command-line front end. Each subcommand prints one JSON report
//! on stdout; logs go to stderr (`RUST_LOG` controls the level).
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad input, 3 solver failure.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellbound::bell::{
    analytic_violation_closed_form, behavior, build_analytic_measurements, evaluate, local_bound, BellFunctional,
};
use bellbound::hierarchy::{guessing_probability_with, tsirelson_check, upper_bound, HierarchyOptions, PptPlacement};
use bellbound::robustness::analytic_noise_threshold;
use bellbound::seesaw::{self, SeesawConfig};
use bellbound::state::{build_counterexample_state, counterexample_eigenvalues, verify_state};
use bellbound::{Error, Party};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use report::Report;

#[derive(Parser, Debug)]
#[command(name = "bellbound", version, about = "Bell violations of PPT entangled states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify the bound entangled two-qutrit state.
    VerifyState {
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Also write the state as JSON.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Violation of the built-in inequality with the analytic measurements.
    Violation,
    /// Local bound of a functional by deterministic enumeration.
    LocalBound {
        #[arg(long)]
        functional: Option<PathBuf>,
    },
    /// See-saw search over PPT states.
    Seesaw {
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Round-over-round improvement that ends a restart.
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_rounds: usize,
        #[arg(long)]
        functional: Option<PathBuf>,
        /// Start one run from the analytic measurements (d = 3 only).
        #[arg(long)]
        warm_start: bool,
        /// Write the best state and measurements here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moment-hierarchy upper bound on the functional over PPT states.
    UpperBound {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        level: u8,
        #[arg(long)]
        functional: Option<PathBuf>,
        /// Drop the partial-transpose block.
        #[arg(long)]
        no_ppt: bool,
        #[arg(long)]
        real_moments: bool,
    },
    /// Guessing probability and min-entropy of one measurement's outcome.
    Randomness {
        #[arg(long, default_value_t = 0)]
        setting: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        level: u8,
        #[arg(long, value_enum, default_value_t = PartyArg::B)]
        party: PartyArg,
        #[arg(long, value_enum, default_value_t = PlacementArg::None)]
        ppt_placement: PlacementArg,
    },
    /// White-noise threshold of the analytic violation.
    Robustness,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PartyArg {
    A,
    B,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PlacementArg {
    None,
    PerBranch,
    Sum,
}

enum Failure {
    Input(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver { .. } | Error::Inconsistent(_) => Failure::Solver(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = Result<Report, Failure>;

fn load_functional(path: Option<&Path>) -> Result<BellFunctional, Failure> {
    match path {
        None => Ok(BellFunctional::builtin_i()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            BellFunctional::parse_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn verify_state_cmd(tol: f64, export: Option<&Path>) -> CmdResult {
    let mut rep = Report::new("verify-state", json!({ "tol": tol }));
    let rho = build_counterexample_state();
    let r = rep.time("verify", || verify_state(&rho));
    let mut nonzero: Vec<f64> = r.eigenvalues.iter().copied().filter(|v| v.abs() > 1e-9).collect();
    nonzero.sort_by(f64::total_cmp);
    let mut expected = counterexample_eigenvalues().to_vec();
    expected.sort_by(f64::total_cmp);
    let spectrum_dev = if nonzero.len() == expected.len() {
        nonzero.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    rep.check(r.is_valid_ppt(tol) && r.pt_invariance_dev <= tol && spectrum_dev <= tol);
    rep.set("trace_dev", r.trace_dev);
    rep.set("hermiticity_dev", r.hermiticity_dev);
    rep.set("min_eig", r.min_eig);
    rep.set("pt_invariance_dev", r.pt_invariance_dev);
    rep.set("pt_min_eig", r.pt_min_eig);
    rep.set("nonzero_eigenvalues", &nonzero);
    rep.set("spectrum_dev", spectrum_dev);
    if let Some(p) = export {
        write_file(p, &rho.export_json()?)?;
        rep.set("exported", p.display().to_string());
    }
    Ok(rep)
}

fn violation_cmd() -> CmdResult {
    let mut rep = Report::new("violation", json!({}));
    let f = BellFunctional::builtin_i();
    let (ma, mb) = build_analytic_measurements();
    let value = rep.time("evaluate", || -> Result<f64, Error> {
        evaluate(&f, &behavior(&build_counterexample_state(), &ma, &mb)?)
    })?;
    let lb = rep.time("local_bound", || local_bound(&f))?;
    let closed = analytic_violation_closed_form();
    rep.check((value - closed).abs() <= 1e-12 && lb.value == 0.0 && value > 1e-4);
    rep.set("violation", value);
    rep.set("closed_form", closed);
    rep.set("difference", value - closed);
    rep.set("local_bound", lb.value);
    Ok(rep)
}

fn local_bound_cmd(functional: Option<&Path>) -> CmdResult {
    let f = load_functional(functional)?;
    let mut rep = Report::new("local-bound", json!({ "functional": functional.map(|p| p.display().to_string()) }));
    let lb = rep.time("enumerate", || local_bound(&f))?;
    rep.set("local_bound", lb.value);
    rep.set("exact", lb.exact);
    rep.set("maximizer_count", lb.maximizer_count.to_string());
    rep.set("maximizers", &lb.maximizers);
    Ok(rep)
}

#[allow(clippy::too_many_arguments)]
fn seesaw_cmd(
    restarts: usize,
    seed: u64,
    dim: usize,
    tol: f64,
    max_rounds: usize,
    functional: Option<&Path>,
    warm_start: bool,
    out: Option<&Path>,
) -> CmdResult {
    let f = load_functional(functional)?;
    let mut rep = Report::new(
        "seesaw",
        json!({
            "restarts": restarts,
            "seed": seed,
            "dim": dim,
            "tol": tol,
            "max_rounds": max_rounds,
            "functional": functional.map(|p| p.display().to_string()),
            "warm_start": warm_start,
        }),
    );
    let cfg = SeesawConfig { dim, restarts, seed, convergence_tol: tol, max_rounds, ..Default::default() };
    cfg.validate()?;
    let rec = if warm_start {
        if dim != 3 || f.scenario != bellbound::bell::Scenario::counterexample() {
            return Err(Failure::Input("--warm-start needs --dim 3 and the built-in scenario".into()));
        }
        rep.time("seesaw", || seesaw::run_from(&f, build_analytic_measurements(), &cfg, 0))?
    } else {
        rep.time("seesaw", || seesaw::run(&f, &cfg))?
    };
    rep.check(rec.max_trace_decrease() == 0.0);
    rep.set("best_value", rec.best_value);
    rep.set("restart_index", rec.restart_index);
    rep.set("rounds_used", rec.rounds_used);
    rep.set("value_trace", &rec.value_trace);
    rep.set("max_trace_decrease", rec.max_trace_decrease());
    rep.set("max_state_violation", rec.max_state_violation);
    rep.set("max_step_decrease", rec.max_step_decrease);
    let doc = rec.to_json();
    match out {
        Some(p) => {
            write_file(p, &bellbound::json::to_string_sig17(&doc).map_err(|e| Failure::Input(e.to_string()))?)?;
            rep.set("output", p.display().to_string());
        }
        None => {
            rep.set("state", &doc.state);
            rep.set("alice", &doc.alice);
            rep.set("bob", &doc.bob);
        }
    }
    Ok(rep)
}

fn upper_bound_cmd(level: usize, functional: Option<&Path>, no_ppt: bool, real_moments: bool) -> CmdResult {
    let f = load_functional(functional)?;
    let mut rep = Report::new(
        "upper-bound",
        json!({
            "level": level,
            "functional": functional.map(|p| p.display().to_string()),
            "ppt": !no_ppt,
            "real_moments": real_moments,
        }),
    );
    let opts = HierarchyOptions { ppt: !no_ppt, real_moments, ..Default::default() };
    let r = rep.time("solve", || upper_bound(&f, level, &opts))?;
    rep.set("bound", r.bound);
    rep.set("attained", r.attained);
    rep.set("status", r.status);
    rep.set("iterations", r.iterations);
    rep.set("matrix_size", r.matrix_size);
    rep.set("num_variables", r.num_variables);
    if functional.is_none() {
        rep.check(r.bound >= analytic_violation_closed_form() - 1e-9);
        if !no_ppt && level == 1 {
            // Logged probe; a bound above 2 would be a red flag, not a failure.
            let chsh = rep.time("chsh_probe", || upper_bound(&BellFunctional::chsh(), 1, &opts))?;
            if chsh.bound > 2.0 + 1e-7 {
                log::warn!("CHSH with PT block exceeds the local bound: {:.10}", chsh.bound);
            }
            rep.set("chsh_ppt_probe", chsh.bound);
            let tsirelson = rep.time("tsirelson", tsirelson_check)?;
            rep.set("tsirelson_check", tsirelson);
        }
    }
    Ok(rep)
}

fn randomness_cmd(setting: usize, level: usize, party: PartyArg, placement: PlacementArg) -> CmdResult {
    let mut rep = Report::new(
        "randomness",
        json!({
            "setting": setting,
            "level": level,
            "party": format!("{party:?}"),
            "ppt_placement": format!("{placement:?}"),
        }),
    );
    let mut opts = HierarchyOptions::guessing();
    match placement {
        PlacementArg::None => {}
        PlacementArg::PerBranch => {
            opts.ppt = true;
            opts.ppt_placement = PptPlacement::PerBranch;
        }
        PlacementArg::Sum => {
            opts.ppt = true;
            opts.ppt_placement = PptPlacement::Sum;
        }
    }
    let party = match party {
        PartyArg::A => Party::A,
        PartyArg::B => Party::B,
    };
    let (ma, mb) = build_analytic_measurements();
    let beh = behavior(&build_counterexample_state(), &ma, &mb)?;
    let r = rep.time("solve", || guessing_probability_with(&beh, party, setting, level, &opts))?;
    rep.set("p_guess", r.p_guess);
    rep.set("h_min", r.h_min);
    rep.set("status", r.status);
    rep.set("iterations", r.iterations);
    Ok(rep)
}

fn robustness_cmd() -> CmdResult {
    let mut rep = Report::new("robustness", json!({}));
    let r = rep.time("bisect", analytic_noise_threshold)?;
    rep.check(r.eps_star > 0.0 && (r.eps_star - r.eps_closed_form).abs() <= 1e-10);
    rep.set("violation", r.violation);
    rep.set("noise_value", r.noise_value);
    rep.set("eps_star", r.eps_star);
    rep.set("eps_closed_form", r.eps_closed_form);
    rep.set("bisection_steps", r.bisection_steps);
    Ok(rep)
}

fn configure_threads() {
    let Ok(v) = std::env::var("BELLBOUND_THREADS") else { return };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring BELLBOUND_THREADS={v:?}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();

    let result = match &cli.command {
        Command::VerifyState { tol, export } => verify_state_cmd(*tol, export.as_deref()),
        Command::Violation => violation_cmd(),
        Command::LocalBound { functional } => local_bound_cmd(functional.as_deref()),
        Command::Seesaw { restarts, seed, dim, tol, max_rounds, functional, warm_start, out } => seesaw_cmd(
            *restarts,
            *seed,
            *dim,
            *tol,
            *max_rounds,
            functional.as_deref(),
            *warm_start,
            out.as_deref(),
        ),
        Command::UpperBound { level, functional, no_ppt, real_moments } => {
            upper_bound_cmd(*level as usize, functional.as_deref(), *no_ppt, *real_moments)
        }
        Command::Randomness { setting, level, party, ppt_placement } => {
            randomness_cmd(*setting, *level as usize, *party, *ppt_placement)
        }
        Command::Robustness => robustness_cmd(),
    };

    match result {
        Ok(rep) => {
            println!("{}", rep.to_json());
            if rep.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(3)
        }
    }
}
