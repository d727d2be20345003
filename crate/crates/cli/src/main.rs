//! Command-line front end for the measurement toolkit.
//!
//! Three command families are exposed:
//!
//! * `povm` — validate a POVM file, maximally refine it into rank-1
//!   outcomes, or test informational completeness;
//! * `ebcheck` — run the Monte-Carlo entanglement-breaking certifier on an
//!   instrument file and print the certificate;
//! * `scenario` — run a built-in worked example (the discretized
//!   spin-position measurement or the repeated-measurement Zeno chain) with
//!   its own pass/fail assertions.
//!
//! Stdout carries exactly one machine-readable JSON document per run;
//! diagnostics go to stderr. Exit codes are `0` for success (validation
//! passed, certification consistent, scenario assertions hold), `1` for a
//! semantic failure (invalid POVM, counterexample found, failed scenario
//! assertion), and `2` for usage or parse errors. Reruns with identical
//! inputs and flags produce byte-identical output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use povmkit::entanglement::certify_entanglement_breaking;
use povmkit::measurement::Instrument;
use povmkit::povm::{is_informationally_complete, maximally_refine, validate_povm, Povm};
use povmkit::scenarios::{
    build_position_spin_example, canonical_zeno_config, run_position_example, zeno_simulate,
    Grid, PositionReport, ZenoConfig, ZenoMode,
};

/// Default number of Monte-Carlo probe states for `ebcheck`.
const DEFAULT_TRIALS: usize = 200;

/// Default RNG seed for `ebcheck`.
const DEFAULT_SEED: u64 = 42;

/// Negativity below which a scenario declares entanglement broken.
const SCENARIO_NEGATIVITY_TOL: f64 = 1e-7;

#[derive(Parser)]
#[command(
    name = "povmkit",
    version,
    about = "Finite-dimensional quantum measurement toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect or transform a POVM stored as JSON
    Povm {
        #[command(subcommand)]
        action: PovmAction,
    },
    /// Certify that an instrument (JSON file) breaks entanglement
    Ebcheck {
        /// Path to an instrument JSON file
        input: PathBuf,
        /// Number of random entangled probe states
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// RNG seed for probe-state sampling
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Environment dimension for probes (default: instrument input dimension)
        #[arg(long)]
        env_dim: Option<usize>,
        /// Override the instrument's numerical tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// Also write the certificate JSON to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in worked scenario
    Scenario {
        #[command(subcommand)]
        which: ScenarioCommand,
    },
}

#[derive(Subcommand)]
enum PovmAction {
    /// Check positivity and normalization; print a validation report
    Validate {
        /// Path to a POVM JSON file
        input: PathBuf,
        /// Override the POVM's numerical tolerance
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Spectrally decompose every effect into rank-1 outcomes
    Refine {
        /// Path to a POVM JSON file
        input: PathBuf,
        /// Override the POVM's numerical tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// Also write the refined POVM JSON to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test informational completeness; print the effect span dimension
    Ic {
        /// Path to a POVM JSON file
        input: PathBuf,
        /// Override the POVM's numerical tolerance
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Rank-2 position measurement on a spin-1/2 particle with a Bell probe
    PositionExample {
        /// Number of grid points for the discretized line
        #[arg(long, default_value_t = 64)]
        grid_points: usize,
        /// Half-width of the symmetric grid interval
        #[arg(long, default_value_t = 6.0)]
        grid_halfwidth: f64,
        /// Directory for position.json and position.csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated measurements on one half of an entangled pair
    Zeno {
        /// Path to a full simulation config JSON file
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of measurement steps
        #[arg(long)]
        steps: Option<usize>,
        /// Total evolution time (built-in config only)
        #[arg(long)]
        time: Option<f64>,
        /// Measurement mode per step
        #[arg(long, value_enum)]
        mode: Option<CliZenoMode>,
        /// Directory for zeno.json and zeno.csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CliZenoMode {
    /// Lüders update for the coarse observable only
    Incomplete,
    /// Maximal refinement followed by pointer preparation
    Complete,
}

impl From<CliZenoMode> for ZenoMode {
    fn from(mode: CliZenoMode) -> Self {
        match mode {
            CliZenoMode::Incomplete => ZenoMode::Incomplete,
            CliZenoMode::Complete => ZenoMode::Complete,
        }
    }
}

/// A failed command: `code` is the process exit code (2 usage/parse,
/// 1 semantic), `message` goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn semantic(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    // Clap itself exits with code 2 on unknown flags or subcommands.
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Povm { action } => match action {
            PovmAction::Validate { input, tol } => cmd_povm_validate(&input, tol),
            PovmAction::Refine { input, tol, out } => cmd_povm_refine(&input, tol, out.as_deref()),
            PovmAction::Ic { input, tol } => cmd_povm_ic(&input, tol),
        },
        Command::Ebcheck { input, trials, seed, env_dim, tol, out } => {
            cmd_ebcheck(&input, trials, seed, env_dim, tol, out.as_deref())
        }
        Command::Scenario { which } => match which {
            ScenarioCommand::PositionExample { grid_points, grid_halfwidth, out } => {
                cmd_position_example(grid_points, grid_halfwidth, out.as_deref())
            }
            ScenarioCommand::Zeno { config, steps, time, mode, out } => {
                cmd_zeno(config.as_deref(), steps, time, mode, out.as_deref())
            }
        },
    }
}

// ---------------------------------------------------------------------------
// povm subcommands
// ---------------------------------------------------------------------------

fn cmd_povm_validate(input: &Path, tol: Option<f64>) -> CmdResult {
    let povm = read_povm(input, tol)?;
    let report = validate_povm(&povm);
    print_json(&report)?;
    Ok(if report.passes() { 0 } else { 1 })
}

fn cmd_povm_refine(input: &Path, tol: Option<f64>, out: Option<&Path>) -> CmdResult {
    let povm = read_povm(input, tol)?;
    let refined = maximally_refine(&povm).map_err(|e| Failure::semantic(e.to_string()))?;
    emit_json(&refined, out)?;
    Ok(0)
}

fn cmd_povm_ic(input: &Path, tol: Option<f64>) -> CmdResult {
    let povm = read_povm(input, tol)?;
    povm.require_valid().map_err(|e| Failure::semantic(e.to_string()))?;
    let (ic, span) = is_informationally_complete(&povm);
    // serde_json::Value orders keys alphabetically, so output is stable.
    print_json(&serde_json::json!({ "ic": ic, "span": span }))?;
    Ok(0)
}

/// Loads a POVM file, optionally rebuilding it with an overridden tolerance.
fn read_povm(path: &Path, tol: Option<f64>) -> Result<Povm, Failure> {
    let povm: Povm = read_json(path)?;
    match tol {
        None => Ok(povm),
        Some(t) => {
            check_tol(t)?;
            Povm::with_labels(povm.effects().to_vec(), povm.labels().to_vec(), t)
                .map_err(|e| Failure::semantic(e.to_string()))
        }
    }
}

// ---------------------------------------------------------------------------
// ebcheck
// ---------------------------------------------------------------------------

fn cmd_ebcheck(
    input: &Path,
    trials: usize,
    seed: u64,
    env_dim: Option<usize>,
    tol: Option<f64>,
    out: Option<&Path>,
) -> CmdResult {
    let mut instrument: Instrument = read_json(input)?;
    if let Some(t) = tol {
        check_tol(t)?;
        instrument = rebuild_instrument(&instrument, t)?;
    }
    let env = env_dim.unwrap_or_else(|| instrument.input_dim());
    // Dimension problems are argument errors, not counterexamples.
    let certificate = certify_entanglement_breaking(&instrument, env, trials, seed)
        .map_err(|e| Failure::usage(e.to_string()))?;
    emit_json(&certificate, out)?;
    Ok(if certificate.is_consistent() { 0 } else { 1 })
}

/// Re-validates an instrument under a different tolerance.
fn rebuild_instrument(instrument: &Instrument, tol: f64) -> Result<Instrument, Failure> {
    let outcomes = instrument
        .outcomes()
        .iter()
        .map(|o| (o.label().to_owned(), o.kraus().to_vec()))
        .collect();
    let rebuilt =
        Instrument::new(outcomes, tol).map_err(|e| Failure::semantic(e.to_string()))?;
    Ok(match instrument.name() {
        Some(name) => rebuilt.named(name),
        None => rebuilt,
    })
}

// ---------------------------------------------------------------------------
// scenario position-example
// ---------------------------------------------------------------------------

/// Summary document for the spin-position scenario: the full-line run must
/// preserve the Bell probe, the half-line run must break it.
#[derive(Serialize)]
struct PositionSummary {
    grid_points: usize,
    grid_halfwidth: f64,
    all_bins: PositionReport,
    half_line: PositionReport,
    passes: bool,
}

fn cmd_position_example(
    grid_points: usize,
    grid_halfwidth: f64,
    out: Option<&Path>,
) -> CmdResult {
    // Grid parameters come straight from flags, so rejection is a usage error.
    let grid = Grid::uniform(grid_points, grid_halfwidth)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let example = build_position_spin_example(&grid, 1.0)
        .map_err(|e| Failure::semantic(e.to_string()))?;

    let all: Vec<usize> = (0..grid.len()).collect();
    let all_bins =
        run_position_example(&example, &all).map_err(|e| Failure::semantic(e.to_string()))?;
    let half_line = run_position_example(&example, &grid.nonnegative_bins())
        .map_err(|e| Failure::semantic(e.to_string()))?;

    let passes = all_bins.passes() && half_line.passes();
    let summary =
        PositionSummary { grid_points, grid_halfwidth, all_bins, half_line, passes };

    let mut csv = String::from("bin,position,weight,vacuum_mass\n");
    for (j, (&x, &w)) in grid.points().iter().zip(grid.weights()).enumerate() {
        let mass = example.vacuum().data()[j].norm_sqr();
        csv.push_str(&format!("{j},{},{},{}\n", fmt_f64(x), fmt_f64(w), fmt_f64(mass)));
    }

    finish_scenario("position", &summary, &csv, out)?;
    Ok(if passes { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// scenario zeno
// ---------------------------------------------------------------------------

/// Summary document for the repeated-measurement scenario.
#[derive(Serialize)]
struct ZenoSummary {
    mode: ZenoMode,
    steps: usize,
    total_time: f64,
    branch: String,
    final_survival: f64,
    max_negativity: f64,
    final_fidelity: f64,
    survival_monotone: bool,
    /// Only meaningful in complete mode; omitted otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    entanglement_broken: Option<bool>,
    passes: bool,
}

fn cmd_zeno(
    config: Option<&Path>,
    steps: Option<usize>,
    time: Option<f64>,
    mode: Option<CliZenoMode>,
    out: Option<&Path>,
) -> CmdResult {
    let cfg = match config {
        Some(path) => {
            if time.is_some() {
                return Err(Failure::usage(
                    "--time applies only to the built-in configuration; \
                     edit the config file's generator and total_time instead",
                ));
            }
            let mut cfg: ZenoConfig = read_json(path)?;
            if let Some(n) = steps {
                cfg = cfg.with_steps(n);
            }
            if let Some(m) = mode {
                cfg = cfg.with_mode(m.into());
            }
            cfg
        }
        None => {
            let n = steps.unwrap_or(100);
            let t = time.unwrap_or(1.0);
            if n == 0 {
                return Err(Failure::usage("--steps must be at least 1"));
            }
            if !t.is_finite() || t <= 0.0 {
                return Err(Failure::usage("--time must be positive and finite"));
            }
            canonical_zeno_config(n, t, mode.map_or(ZenoMode::Complete, Into::into))
        }
    };

    // Config-level problems (commutant violations, dimension mismatches in a
    // parsed file) are semantic failures: the file was well-formed JSON but
    // describes an inadmissible simulation.
    let result = zeno_simulate(&cfg).map_err(|e| Failure::semantic(e.to_string()))?;

    let survival_monotone = result
        .survival()
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12);
    let entanglement_broken = match cfg.mode() {
        ZenoMode::Complete => Some(result.max_negativity() < SCENARIO_NEGATIVITY_TOL),
        ZenoMode::Incomplete => None,
    };
    let passes = survival_monotone && entanglement_broken.unwrap_or(true);

    let summary = ZenoSummary {
        mode: cfg.mode(),
        steps: cfg.steps(),
        total_time: cfg.total_time(),
        branch: result.branch().to_owned(),
        final_survival: result.final_survival(),
        max_negativity: result.max_negativity(),
        final_fidelity: result.final_fidelity(),
        survival_monotone,
        entanglement_broken,
        passes,
    };

    let mut csv = String::from("step,survival,negativity\n");
    for (k, (&s, &v)) in result.survival().iter().zip(result.negativity()).enumerate() {
        csv.push_str(&format!("{},{},{}\n", k + 1, fmt_f64(s), fmt_f64(v)));
    }

    finish_scenario("zeno", &summary, &csv, out)?;
    Ok(if passes { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// I/O helpers
// ---------------------------------------------------------------------------

/// Shortest lossless decimal for CSV cells, matching the JSON encoding
/// (exponent notation for very small or large magnitudes).
fn fmt_f64(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Failure::usage("--tol must be positive and finite"))
    }
}

/// Reads and parses a JSON file; both I/O and syntax errors exit with 2.
fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("cannot parse {}: {e}", path.display())))
}

fn to_json(payload: &impl Serialize) -> Result<String, Failure> {
    serde_json::to_string(payload)
        .map_err(|e| Failure::semantic(format!("cannot serialize result: {e}")))
}

/// Prints one JSON document to stdout.
fn print_json(payload: &impl Serialize) -> Result<(), Failure> {
    println!("{}", to_json(payload)?);
    Ok(())
}

/// Prints the document to stdout and, if requested, also writes it to a file.
fn emit_json(payload: &impl Serialize, out: Option<&Path>) -> Result<(), Failure> {
    let json = to_json(payload)?;
    println!("{json}");
    if let Some(path) = out {
        write_file(path, &format!("{json}\n"))?;
    }
    Ok(())
}

/// Prints the scenario summary to stdout and, given `--out DIR`, writes
/// `<name>.json` and `<name>.csv` into the directory.
fn finish_scenario(
    name: &str,
    summary: &impl Serialize,
    csv: &str,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let json = to_json(summary)?;
    println!("{json}");
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| {
            Failure::usage(format!("cannot create {}: {e}", dir.display()))
        })?;
        write_file(&dir.join(format!("{name}.json")), &format!("{json}\n"))?;
        write_file(&dir.join(format!("{name}.csv")), csv)?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}
