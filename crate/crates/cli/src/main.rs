//! `uvd`: decompose demonstrations into subgoals and work with the results.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage or
//! validation error.

mod batch;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use uvd::inference::{relay_init, relay_transcript, RelayConfig, RelayGoal};
use uvd::labeler::{random_subgoals, relabel, uniform_labels};
use uvd::synth::bench::{run_baseline_comparison, BenchSettings, Suite};
use uvd::synth::chain::{ChainExperiment, RewardMode};
use uvd::synth::generator::{generate_synthetic, SynthConfig};
use uvd::{
    decompose, final_goal_reward_trace, save_trajectory, shaped_reward_trace, DecomposerConfig,
    DecompositionRecord, Format, RewardWeights, SubgoalDecomposition,
};

const AFTER_HELP: &str = "Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.";

#[derive(Parser)]
#[command(name = "uvd", version, about = "Subgoal discovery and reward shaping for embedding trajectories", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find subgoal frames; writes one JSON object per trajectory.
    Decompose(DecomposeArgs),
    /// Assign each frame its goal frame.
    Relabel(RelabelArgs),
    /// Per-transition shaped rewards for each trajectory.
    Reward(RewardArgs),
    /// Replay observations through the goal-relay automaton.
    Relay(RelayArgs),
    /// Generate a synthetic trajectory with known segment ends.
    Synth(SynthArgs),
    /// Compare boundary recovery against heuristic labelings.
    Bench(BenchArgs),
    /// Train tabular learners on the chain world under both rewards.
    EnvDemo(EnvDemoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Binary,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => Format::Binary,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Trajectory file, or a directory of .uvdt/.csv files.
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    /// File listing one trajectory path per line (relative to the manifest).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Input format; inferred from the extension when omitted (.csv is CSV, anything else UVDT).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl InputArgs {
    fn paths(&self) -> Result<Vec<PathBuf>> {
        batch::collect_inputs(self.input.as_deref(), self.manifest.as_deref())
    }

    fn format(&self) -> Option<Format> {
        self.format.map(Format::from)
    }
}

#[derive(Args, Clone, Copy)]
struct DecomposerArgs {
    /// Minimum frames between consecutive subgoals (at least 1).
    #[arg(long, default_value_t = 20, value_parser = parse_positive)]
    min_interval: usize,
    /// Kernel bandwidth on the normalized time axis, where the curve spans [0, 1].
    #[arg(long, default_value_t = 0.08, value_parser = parse_positive_f64)]
    bandwidth: f64,
}

impl DecomposerArgs {
    fn config(&self) -> DecomposerConfig {
        DecomposerConfig::new(self.min_interval, self.bandwidth)
    }
}

#[derive(Args, Clone, Copy)]
struct WeightArgs {
    /// Weight of the progress term; the term is clipped to [-alpha, alpha].
    #[arg(long, default_value_t = 5.0, value_parser = parse_nonneg_f64)]
    alpha: f64,
    /// Bonus paid when a subgoal is reached.
    #[arg(long, default_value_t = 3.0, value_parser = parse_nonneg_f64)]
    beta: f64,
    /// Bonus paid on every step spent at the final goal.
    #[arg(long, default_value_t = 6.0, value_parser = parse_nonneg_f64)]
    gamma: f64,
    /// Reach threshold on the normalized distance, in (0, 1).
    #[arg(long = "reach-epsilon", default_value_t = 0.2, value_parser = parse_unit_open)]
    epsilon: f64,
}

impl WeightArgs {
    fn weights(&self) -> RewardWeights {
        RewardWeights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    decomposer: DecomposerArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelMethod {
    /// Goals from the decomposition.
    Uvd,
    /// 3 to 5 random frames plus the last.
    Random,
    /// A random frame within --window steps ahead.
    Uniform,
}

#[derive(Args)]
struct RelabelArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    decomposer: DecomposerArgs,
    #[arg(long, value_enum, default_value_t = LabelMethod::Uvd)]
    method: LabelMethod,
    /// Look-ahead window of the uniform method; required with --method uniform.
    #[arg(long, value_parser = parse_positive)]
    window: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum RewardModeArg {
    /// Subgoals from the decomposition (or --subgoals).
    Uvd,
    /// A single goal at the last frame, no reach bonus.
    FinalGoal,
}

#[derive(Args)]
struct RewardArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    decomposer: DecomposerArgs,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, value_enum, default_value_t = RewardModeArg::Uvd)]
    mode: RewardModeArg,
    /// Explicit comma-separated subgoal frames instead of decomposing.
    #[arg(long, value_delimiter = ',')]
    subgoals: Option<Vec<usize>>,
}

#[derive(Args)]
struct RelayArgs {
    /// Demonstration whose subgoals drive the relay.
    #[arg(long)]
    demo: PathBuf,
    /// Observations to replay; defaults to the demonstration itself.
    #[arg(long = "observations")]
    observations: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    decomposer: DecomposerArgs,
    /// Switch distance in embedding units.
    #[arg(long, default_value_t = 0.2, value_parser = parse_positive_f64)]
    epsilon: f64,
    /// Allowed deviation from the subgoal budget, in steps.
    #[arg(long, default_value_t = 2, value_parser = parse_positive)]
    delta: usize,
    /// Switch on distance alone, ignoring budgets.
    #[arg(long)]
    no_budget_check: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of segments of equal length.
    #[arg(long, default_value_t = 3, value_parser = parse_positive)]
    segments: usize,
    /// Frames per segment.
    #[arg(long, default_value_t = 50, value_parser = parse_positive)]
    length: usize,
    /// Embedding width (at least 2).
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Standard deviation of isotropic Gaussian noise.
    #[arg(long, default_value_t = 0.0, value_parser = parse_nonneg_f64)]
    noise: f64,
    /// Distance between consecutive anchors.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive_f64)]
    anchor_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Full generator config as JSON; overrides the shape flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trajectory output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite JSON: {"entries": [{"id": ..., "config": {...}}, ...]}.
    #[arg(long)]
    suite: PathBuf,
    #[command(flatten)]
    decomposer: DecomposerArgs,
    /// Match tolerance in frames.
    #[arg(long, default_value_t = 2)]
    tolerance: usize,
    /// Look-ahead window of the uniform baseline (no default).
    #[arg(long, value_parser = parse_positive)]
    uniform_window: usize,
    /// Number of runs per config, seeded 0..N.
    #[arg(long, default_value_t = 10, value_parser = parse_positive)]
    seeds: usize,
    /// Override every config's noise level.
    #[arg(long, value_parser = parse_nonneg_f64)]
    noise: Option<f64>,
    /// Per-run CSV (method, config_id, seed, precision, recall, f1); standard output when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON summary of mean scores per config and method.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvMode {
    Uvd,
    FinalGoal,
    Both,
}

#[derive(Args)]
struct EnvDemoArgs {
    /// Experiment JSON with "env", "learner" and "seeds".
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = EnvMode::Both)]
    mode: EnvMode,
    /// Override the seed list with 0..N.
    #[arg(long, value_parser = parse_positive)]
    seeds: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

fn parse_positive_f64(s: &str) -> Result<f64, String> {
    parse_f64(s).and_then(|v| {
        if v > 0.0 {
            Ok(v)
        } else {
            Err("must be positive".into())
        }
    })
}

fn parse_nonneg_f64(s: &str) -> Result<f64, String> {
    parse_f64(s).and_then(|v| {
        if v >= 0.0 {
            Ok(v)
        } else {
            Err("must be non-negative".into())
        }
    })
}

fn parse_unit_open(s: &str) -> Result<f64, String> {
    parse_f64(s).and_then(|v| {
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err("must lie strictly between 0 and 1".into())
        }
    })
}

/// Raised for invalid argument combinations that clap cannot express.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn to_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<()> {
    let paths = args.io.paths()?;
    let config = args.decomposer.config();
    let format = args.io.format();
    let mut out = open_out(args.io.out.as_deref())?;
    batch::run_jsonl(&paths, &mut out, |path| {
        let traj = batch::load(path, format)?;
        let decomp = decompose(&traj, &config)?;
        to_line(&DecompositionRecord::new(
            batch::record_id(path),
            &decomp,
            &config,
        ))
    })
}

#[derive(Serialize)]
struct LabelRecord {
    id: String,
    #[serde(rename = "T")]
    frames: usize,
    method: &'static str,
    labels: Vec<usize>,
}

fn cmd_relabel(args: &RelabelArgs) -> Result<()> {
    if matches!(args.method, LabelMethod::Uniform) && args.window.is_none() {
        return Err(usage("--method uniform requires --window"));
    }
    let paths = args.io.paths()?;
    let config = args.decomposer.config();
    let format = args.io.format();
    let mut out = open_out(args.io.out.as_deref())?;
    batch::run_jsonl(&paths, &mut out, |path| {
        let traj = batch::load(path, format)?;
        let frames = traj.len();
        let (method, labels) = match args.method {
            LabelMethod::Uvd => (
                "uvd",
                relabel(&decompose(&traj, &config)?, frames)?.into_vec(),
            ),
            LabelMethod::Random => (
                "random",
                relabel(&random_subgoals(frames, args.seed)?, frames)?.into_vec(),
            ),
            LabelMethod::Uniform => (
                "uniform",
                uniform_labels(frames, args.window.expect("checked above"), args.seed)?,
            ),
        };
        to_line(&LabelRecord {
            id: batch::record_id(path),
            frames,
            method,
            labels,
        })
    })
}

#[derive(Serialize)]
struct RewardRecord {
    id: String,
    subgoals: Vec<usize>,
    #[serde(flatten)]
    trace: uvd::RewardTrace,
}

fn cmd_reward(args: &RewardArgs) -> Result<()> {
    if args.subgoals.is_some() && matches!(args.mode, RewardModeArg::FinalGoal) {
        return Err(usage(
            "--subgoals cannot be combined with --mode final-goal",
        ));
    }
    let weights = args.weights.weights();
    let paths = args.io.paths()?;
    let config = args.decomposer.config();
    let format = args.io.format();
    let mut out = open_out(args.io.out.as_deref())?;
    batch::run_jsonl(&paths, &mut out, |path| {
        let traj = batch::load(path, format)?;
        let (subgoals, trace) = match args.mode {
            RewardModeArg::FinalGoal => (
                vec![traj.len() - 1],
                final_goal_reward_trace(&traj, weights)?,
            ),
            RewardModeArg::Uvd => {
                let decomp = match &args.subgoals {
                    Some(s) => SubgoalDecomposition::new(s.clone(), traj.len())?,
                    None => decompose(&traj, &config)?,
                };
                (
                    decomp.subgoals().to_vec(),
                    shaped_reward_trace(&traj, &decomp, weights)?,
                )
            }
        };
        to_line(&RewardRecord {
            id: batch::record_id(path),
            subgoals,
            trace,
        })
    })
}

#[derive(Serialize)]
struct RelaySummary {
    subgoals: Vec<usize>,
    switches: Vec<usize>,
    finished: bool,
}

fn cmd_relay(args: &RelayArgs) -> Result<()> {
    let format = args.format.map(Format::from);
    let demo = batch::load(&args.demo, format)?;
    let observations = match &args.observations {
        Some(p) => batch::load(p, format)?,
        None => demo.clone(),
    };
    let decomp = decompose(&demo, &args.decomposer.config())?;
    let goals = RelayGoal::from_decomposition(&demo, &decomp)?;
    let config = RelayConfig {
        epsilon: args.epsilon,
        delta: args.delta,
        budget_check: !args.no_budget_check,
    };
    let mut state = relay_init(goals, config)?;
    let steps = relay_transcript(&mut state, &observations)?;
    let mut out = open_out(args.out.as_deref())?;
    for step in &steps {
        writeln!(out, "{}", to_line(step)?)?;
    }
    let summary = RelaySummary {
        subgoals: decomp.subgoals().to_vec(),
        switches: steps.iter().filter(|s| s.switched).map(|s| s.t).collect(),
        finished: state.is_finished(),
    };
    writeln!(out, "{}", to_line(&summary)?)?;
    out.flush()?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<SynthConfig>(&text)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => SynthConfig {
            anchor_scale: args.anchor_scale,
            ..SynthConfig::equal_segments(args.segments, args.length, args.dim, args.seed)
                .with_noise(args.noise)
        },
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let (traj, truth) = generate_synthetic(&cfg)?;
    let format = args
        .format
        .map(Format::from)
        .unwrap_or_else(|| Format::from_path(&args.out));
    save_trajectory(&traj, &args.out, format)?;
    println!(
        "{}",
        serde_json::json!({ "path": args.out, "T": traj.len(), "K": traj.dim(), "boundaries": truth })
    );
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.suite)
        .with_context(|| format!("reading {}", args.suite.display()))?;
    let mut suite: Suite =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.suite.display()))?;
    if let Some(sigma) = args.noise {
        suite = suite.with_noise(sigma);
    }
    let settings = BenchSettings {
        decomposer: args.decomposer.config(),
        tolerance: args.tolerance,
        uniform_window: args.uniform_window,
        seeds: (0..args.seeds as u64).collect(),
    };
    let report = run_baseline_comparison(&suite, &settings)?;
    let mut csv = csv::Writer::from_writer(open_out(args.csv.as_deref())?);
    for row in &report.rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    if let Some(p) = &args.summary {
        let summary = serde_json::json!({
            "tolerance": report.tolerance,
            "uniform_window": report.uniform_window,
            "seeds": report.seeds,
            "means": report.means,
        });
        std::fs::write(p, serde_json::to_string_pretty(&summary)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_env_demo(args: &EnvDemoArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut experiment: ChainExperiment = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(n) = args.seeds {
        experiment.seeds = (0..n as u64).collect();
    }
    experiment
        .env
        .validate()
        .map_err(|e| usage(e.to_string()))?;
    experiment
        .learner
        .validate()
        .map_err(|e| usage(e.to_string()))?;
    let modes: &[RewardMode] = match args.mode {
        EnvMode::Uvd => &[RewardMode::Uvd],
        EnvMode::FinalGoal => &[RewardMode::FinalGoal],
        EnvMode::Both => &[RewardMode::Uvd, RewardMode::FinalGoal],
    };
    let mut out = open_out(args.out.as_deref())?;
    for &mode in modes {
        writeln!(out, "{}", to_line(&experiment.run(mode)?)?)?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Decompose(a) => cmd_decompose(a),
        Command::Relabel(a) => cmd_relabel(a),
        Command::Reward(a) => cmd_reward(a),
        Command::Relay(a) => cmd_relay(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
        Command::EnvDemo(a) => cmd_env_demo(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn numeric_parsers() {
        assert!(parse_positive("0").is_err());
        assert_eq!(parse_positive("3"), Ok(3));
        assert!(parse_positive_f64("0").is_err());
        assert!(parse_positive_f64("nan").is_err());
        assert!(parse_unit_open("1").is_err());
        assert_eq!(parse_unit_open("0.2"), Ok(0.2));
        assert!(parse_nonneg_f64("-1").is_err());
    }
}
