use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use discordium::circuit::{run_classical_input_cycle, run_demon_cycle, CycleOutcome};
use discordium::factory::{self, NestedSpec};
use discordium::info::discord_at_basis;
use discordium::ledger::ledger_at_basis;
use discordium::locc::{run_protocol, ProtocolTrace, Strategy};
use discordium::optimize::least_discord;
use discordium::state::StateJson;
use discordium::sweep::sweep_werner;
use discordium::{DensityOperator, DiscordError, InfoReport, MeasurementBasis, OptimizationResult, OptimizerConfig, SCHEMA};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Amplitudes whose squared norm is this close to 1 are rescaled, so that
/// rounded inputs such as 0.7071 are accepted.
const AMPLITUDE_SLACK: f64 = 1e-3;

#[derive(Parser)]
#[command(name = "discordium", version, about = "Quantum discord and Maxwell-demon work accounting")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for the optimizer's start points and for `gen random`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Bath temperature times Boltzmann's constant; work is reported in these units.
    #[arg(long, global = true, default_value_t = 1.0)]
    kt: f64,
    /// Optimizer starts per search.
    #[arg(long, global = true, default_value_t = 32)]
    starts: usize,
    /// Simplex diameter at which a start counts as converged.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Objective evaluations allowed per start.
    #[arg(long, global = true, default_value_t = 2000)]
    max_evals: usize,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Global {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            seed: self.seed,
            n_starts: self.starts,
            max_evals: self.max_evals,
            tol: self.tol,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Entropies, least discord and work ledger of one state.
    Analyze {
        /// State JSON file.
        state: PathBuf,
        /// Subsystem the classical demon measures; defaults to the second part.
        #[arg(long)]
        measured: Option<String>,
    },
    /// Werner-family sweep as CSV.
    SweepWerner {
        #[arg(long, default_value_t = 0.0)]
        z_min: f64,
        #[arg(long, default_value_t = 1.0)]
        z_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// One c-not demon cycle.
    Demon(DemonArgs),
    /// Multi-round conditional measurement protocol.
    Locc(LoccArgs),
    /// Write a state from the factory as JSON.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
}

#[derive(Args)]
struct DemonArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha_im: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta_im: f64,
    /// Couple the demon memory to an environment qubit after the copy.
    #[arg(long)]
    decohere: bool,
    /// Run on the classical mixture instead of α|00⟩ + β|11⟩.
    #[arg(long, conflicts_with_all = ["alpha", "beta", "alpha_im", "beta_im", "scenario"])]
    classical: bool,
    /// Scenario JSON `{alpha_re, alpha_im, beta_re, beta_im, decohere}`; overrides the amplitude flags.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    #[serde(default)]
    schema: Option<String>,
    alpha_re: f64,
    #[serde(default)]
    alpha_im: f64,
    beta_re: f64,
    #[serde(default)]
    beta_im: f64,
    #[serde(default)]
    decohere: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyKind {
    Greedy,
    Fixed,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Args)]
struct LoccArgs {
    /// Built-in nested state, e.g. `staircase-2`.
    #[arg(long, group = "input")]
    preset: Option<String>,
    /// Nested-state spec JSON.
    #[arg(long, group = "input")]
    spec: Option<PathBuf>,
    /// Arbitrary state JSON; requires `--order`.
    #[arg(long, group = "input")]
    state: Option<PathBuf>,
    /// Comma-separated sides in measurement order; defaults to the nesting order.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "greedy")]
    strategy: StrategyKind,
    /// JSON array of bases, one per side in order; required for `--strategy fixed`.
    #[arg(long)]
    bases: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum GenKind {
    /// (|00⟩ + |11⟩)/√2.
    Bell,
    /// (|00⟩⟨00| + |11⟩⟨11|)/2.
    Mixture,
    /// (1 − z) I/4 + z |Φ⁺⟩⟨Φ⁺|.
    Werner {
        #[arg(long)]
        z: f64,
    },
    /// Seeded random mixed state.
    Random {
        /// Comma-separated part dimensions.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 2])]
        dims: Vec<usize>,
    },
    /// Nested preset such as `staircase-3`.
    Preset { name: String },
}

/// Failure mapped to an exit code: 2 for bad input, 3 when the optimizer
/// missed its tolerance after the results were written.
enum Failure {
    Input { kind: String, message: String },
    NotConverged(String),
}

impl From<DiscordError> for Failure {
    fn from(e: DiscordError) -> Self {
        let debug = format!("{e:?}");
        let kind = debug
            .split(|c: char| !c.is_alphanumeric())
            .next()
            .unwrap_or("Error")
            .to_owned();
        Failure::Input {
            kind,
            message: e.to_string(),
        }
    }
}

fn input(kind: &str, message: impl Into<String>) -> Failure {
    Failure::Input {
        kind: kind.into(),
        message: message.into(),
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        input("Io", e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        input("Json", e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        input("Csv", e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> std::result::Result<T, Failure> {
    let file = File::open(path).map_err(|e| input("Io", format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Parses the interchange form first so validation failures keep their kind.
fn read_state(path: &Path) -> std::result::Result<DensityOperator, Failure> {
    let json: StateJson = read_json(path)?;
    Ok(DensityOperator::try_from(json)?)
}

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &Option<PathBuf>, value: &impl Serialize) -> Outcome {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    schema: &'static str,
    measured: String,
    converged: bool,
    report: InfoReport,
    optimization: OptimizationResult,
    ledger: discordium::ledger::WorkLedger,
}

fn analyze(g: &Global, path: &Path, measured: Option<String>) -> Outcome {
    let rho = read_state(path)?;
    let measured = match measured {
        Some(m) => m,
        None if rho.layout().len() == 2 => rho.layout().labels().nth(1).expect("two parts").to_owned(),
        None => return Err(input("NotBipartite", "state has more than two parts; pass --measured")),
    };
    let rho = rho.bipartition(&measured)?;
    let (best, converged) = match least_discord(&rho, &measured, &g.config()) {
        Ok(best) => (best, true),
        Err(DiscordError::NoConvergence { best }) => (*best, false),
        Err(e) => return Err(e.into()),
    };
    let report = AnalyzeReport {
        schema: SCHEMA,
        converged,
        report: discord_at_basis(&rho, &best.best_basis)?,
        ledger: ledger_at_basis(&rho, &best.best_basis, g.kt)?,
        optimization: best,
        measured,
    };
    write_json(&g.out, &report)?;
    if converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "no start met tol {:e}; reporting the best of {} starts",
            g.tol, report.optimization.starts_run
        )))
    }
}

fn sweep(g: &Global, z_min: f64, z_max: f64, steps: usize) -> Outcome {
    if steps < 2 {
        return Err(input("BadRange", format!("steps must be at least 2, got {steps}")));
    }
    let rows = sweep_werner(z_min, z_max, steps, &g.config())?;
    let mut w = csv::Writer::from_writer(sink(&g.out)?);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn amplitudes(re_a: f64, im_a: f64, re_b: f64, im_b: f64) -> std::result::Result<(Complex64, Complex64), Failure> {
    let (a, b) = (Complex64::new(re_a, im_a), Complex64::new(re_b, im_b));
    let norm_sqr = a.norm_sqr() + b.norm_sqr();
    if (norm_sqr - 1.0).abs() > AMPLITUDE_SLACK {
        return Err(DiscordError::NotNormalized(norm_sqr).into());
    }
    let n = norm_sqr.sqrt();
    Ok((a / n, b / n))
}

#[derive(Serialize)]
struct DemonReport<'a> {
    schema: &'static str,
    input: serde_json::Value,
    outcome: &'a CycleOutcome,
}

fn demon(g: &Global, args: &DemonArgs) -> Outcome {
    let (outcome, input_desc) = if args.classical {
        (run_classical_input_cycle(args.decohere, g.kt)?, json!({ "classical": true, "decohere": args.decohere }))
    } else {
        let s = match &args.scenario {
            Some(path) => {
                let s: Scenario = read_json(path)?;
                if let Some(tag) = &s.schema {
                    if tag != SCHEMA {
                        return Err(input("Schema", format!("unsupported schema `{tag}`")));
                    }
                }
                s
            }
            None => Scenario {
                schema: None,
                alpha_re: args.alpha,
                alpha_im: args.alpha_im,
                beta_re: args.beta,
                beta_im: args.beta_im,
                decohere: args.decohere,
            },
        };
        let (a, b) = amplitudes(s.alpha_re, s.alpha_im, s.beta_re, s.beta_im)?;
        let desc = json!({
            "alpha_re": a.re, "alpha_im": a.im, "beta_re": b.re, "beta_im": b.im, "decohere": s.decohere
        });
        (run_demon_cycle(a, b, s.decohere, g.kt)?, desc)
    };
    write_json(
        &g.out,
        &DemonReport {
            schema: SCHEMA,
            input: input_desc,
            outcome: &outcome,
        },
    )
}

#[derive(Serialize)]
struct LoccReport {
    schema: &'static str,
    order: Vec<String>,
    rounds_to_exhaust: Option<usize>,
    trace: ProtocolTrace,
}

fn render_table(report: &LoccReport, w: &mut dyn Write) -> io::Result<()> {
    let t = &report.trace;
    writeln!(w, "H(rho) = {:.9} bits, kT = {}", t.von_neumann_entropy, t.kt)?;
    writeln!(w, "{:>5}  {:<6} {:>18} {:>14}", "round", "side", "accessible (bits)", "work (kT)")?;
    for (r, (h, work)) in t.accessible_entropy_by_round.iter().zip(&t.work_by_round).enumerate() {
        let side = if r == 0 { "-" } else { t.rounds[r - 1].side.as_str() };
        writeln!(w, "{r:>5}  {side:<6} {h:>18.9} {:>14.9}", work / t.kt)?;
    }
    match report.rounds_to_exhaust {
        Some(r) => writeln!(w, "exhausted after {r} round(s), {} exchange(s)", t.exchanges),
        None => writeln!(
            w,
            "not exhausted; excess {:.9} bits",
            t.accessible_entropy_by_round.last().copied().unwrap_or(f64::NAN) - t.von_neumann_entropy
        ),
    }
}

fn locc(g: &Global, args: &LoccArgs) -> Outcome {
    let (rho, default_order) = match (&args.preset, &args.spec, &args.state) {
        (Some(name), _, _) => {
            let spec = factory::preset(name)?;
            (factory::nested(&spec)?, Some(spec.sides()))
        }
        (_, Some(path), _) => {
            let spec: NestedSpec = read_json(path)?;
            (factory::nested(&spec)?, Some(spec.sides()))
        }
        (_, _, Some(path)) => (read_state(path)?, None),
        _ => return Err(input("MissingInput", "one of --preset, --spec or --state is required")),
    };
    let order = args
        .order
        .clone()
        .or(default_order)
        .ok_or_else(|| input("MissingInput", "--order is required with --state"))?;
    let strategy = match args.strategy {
        StrategyKind::Greedy => Strategy::Greedy,
        StrategyKind::Fixed => {
            let path = args
                .bases
                .as_ref()
                .ok_or_else(|| input("MissingInput", "--bases is required with --strategy fixed"))?;
            Strategy::Fixed(read_json::<Vec<MeasurementBasis>>(path)?)
        }
    };
    let trace = run_protocol(&rho, &order, &strategy, g.kt, &g.config())?;
    let report = LoccReport {
        schema: SCHEMA,
        rounds_to_exhaust: trace.rounds_to_exhaust(),
        order,
        trace,
    };
    match args.format {
        Format::Json => write_json(&g.out, &report),
        Format::Table => {
            let mut w = sink(&g.out)?;
            render_table(&report, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn gen(g: &Global, kind: &GenKind) -> Outcome {
    let rho = match kind {
        GenKind::Bell => factory::bell("S", "A"),
        GenKind::Mixture => factory::classical_mixture("S", "A"),
        GenKind::Werner { z } => factory::werner(*z, "S", "A")?,
        GenKind::Random { dims } => {
            if dims.len() == 2 {
                factory::random_density(dims, g.seed).relabel(&["S", "A"])?
            } else {
                factory::random_density(dims, g.seed)
            }
        }
        GenKind::Preset { name } => factory::nested(&factory::preset(name)?)?,
    };
    write_json(&g.out, &rho)
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    if !(g.kt > 0.0 && g.kt.is_finite()) {
        return Err(input("BadParameter", format!("--kt must be positive, got {}", g.kt)));
    }
    match &cli.command {
        Command::Analyze { state, measured } => analyze(g, state, measured.clone()),
        Command::SweepWerner { z_min, z_max, steps } => sweep(g, *z_min, *z_max, *steps),
        Command::Demon(args) => demon(g, args),
        Command::Locc(args) => locc(g, args),
        Command::Gen { kind } => gen(g, kind),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input { kind, message }) => {
            eprintln!("{}", json!({ "schema": SCHEMA, "error": { "kind": kind, "message": message } }));
            ExitCode::from(2)
        }
        Err(Failure::NotConverged(message)) => {
            eprintln!("{}", json!({ "schema": SCHEMA, "warning": { "kind": "NoConvergence", "message": message } }));
            ExitCode::from(3)
        }
    }
}
