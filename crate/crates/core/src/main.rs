//! Command-line front end: single simulations, preset suites, and scenario
//! validation. Exit codes: 0 success, 1 bad configuration or usage, 2
//! internal invariant failure during a run.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use questsim::cards::bundled_library;
use questsim::harness::summarize;
use questsim::presets;
use questsim::{
    build_scenario, load_scenario_config, run_experiment, validate_scenario, AgentAssignment,
    AgentKind, Difficulty, ExperimentConfig, PolicyKind, ResultsDoc, Scenario, SearchBudget,
    Summary,
};

#[derive(Parser)]
#[command(
    name = "questsim",
    about = "Cooperative card-game simulator and agent benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment with an explicit agent assignment.
    Simulate(SimulateArgs),
    /// Winrate versus search budget on the medium scenario (24 experiments).
    SweepBudget(PresetArgs),
    /// Mixed agent assignments on the medium scenario (16 experiments).
    GridAgents(PresetArgs),
    /// Headline assignments on the hard scenario (7 experiments).
    FinalComp(PresetArgs),
    /// Check a scenario file against the bundled card library.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file; defaults to the bundled scenario of --difficulty.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Bundled difficulty, or a cross-check when --scenario is also given.
    #[arg(long, value_parser = parse_difficulty)]
    difficulty: Option<Difficulty>,
    /// Agent for the planning stage: 1 random, 2 expert, 3 flat-mc, 4 mcts.
    #[arg(long, default_value = "2", value_parser = AgentKind::from_str)]
    planning: AgentKind,
    /// Agent for the quest-commitment stage (same numbering).
    #[arg(long, default_value = "2", value_parser = AgentKind::from_str)]
    questing: AgentKind,
    /// Agent for the defense stage (same numbering).
    #[arg(long, default_value = "2", value_parser = AgentKind::from_str)]
    defense: AgentKind,
    /// Search budget in playouts.
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u32).range(1..))]
    budget: u32,
    /// Playout policy used inside searches.
    #[arg(long, default_value = "expert", value_parser = parse_policy)]
    playouts: PolicyKind,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct PresetArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Games per experiment.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,
    /// Master seed; everything downstream derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Write the results CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file to check.
    #[arg(long)]
    scenario: PathBuf,
}

/// A failure with its exit code already decided.
enum Failure {
    Config(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> ExitCode {
        match self {
            Failure::Config(_) => ExitCode::from(1),
            Failure::Internal(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) | Failure::Internal(msg) => f.write_str(msg),
        }
    }
}

fn parse_difficulty(s: &str) -> Result<Difficulty, String> {
    s.parse().map_err(|()| format!("unknown difficulty {s:?} (use easy, medium, or hard)"))
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|()| format!("unknown playout policy {s:?} (use random or expert)"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; everything else is a
            // usage problem and must exit 1, not clap's default 2.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::SweepBudget(args) => {
            preset(presets::sweep_budget(args.run.trials, args.run.seed, args.run.workers), &args.run)
        }
        Command::GridAgents(args) => {
            preset(presets::grid_agents(args.run.trials, args.run.seed, args.run.workers), &args.run)
        }
        Command::FinalComp(args) => {
            preset(presets::final_comp(args.run.trials, args.run.seed, args.run.workers), &args.run)
        }
        Command::Validate(args) => validate(&args.scenario),
    }
}

fn load_scenario_file(path: &Path) -> Result<Scenario, Failure> {
    let doc = fs::read_to_string(path)
        .map_err(|err| Failure::Config(format!("cannot read {}: {err}", path.display())))?;
    let config = load_scenario_config(&doc)
        .map_err(|err| Failure::Config(format!("{}: {err}", path.display())))?;
    build_scenario(&config, &bundled_library()).map_err(|err| {
        let lines: Vec<String> = err.violations.iter().map(ToString::to_string).collect();
        Failure::Config(format!("{} is not playable:\n  {}", path.display(), lines.join("\n  ")))
    })
}

fn resolve_scenario(
    path: Option<&Path>,
    difficulty: Option<Difficulty>,
) -> Result<Scenario, Failure> {
    match (path, difficulty) {
        (None, None) => Err(Failure::Config(
            "pass --scenario <file>, --difficulty <level>, or both".to_owned(),
        )),
        (None, Some(level)) => Ok(questsim::bundled_scenario(level)),
        (Some(path), requested) => {
            let scenario = load_scenario_file(path)?;
            if let Some(level) = requested {
                if scenario.difficulty != level {
                    return Err(Failure::Config(format!(
                        "{} declares difficulty {}, but --difficulty {} was given",
                        path.display(),
                        scenario.difficulty,
                        level
                    )));
                }
            }
            Ok(scenario)
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let scenario = resolve_scenario(args.scenario.as_deref(), args.difficulty)?;
    let assignment = AgentAssignment::new(args.planning, args.questing, args.defense);
    let config = ExperimentConfig {
        scenario: Arc::new(scenario),
        assignment,
        budget: SearchBudget::new(args.budget),
        playout_policy: args.playouts,
        trials: args.run.trials,
        master_seed: args.run.seed,
        workers: args.run.workers,
    };
    let label = assignment.label();
    let entries = run_all(vec![(label, config)])?;
    report(&entries, &args.run)
}

fn preset(
    configured: Vec<(String, ExperimentConfig)>,
    run: &RunArgs,
) -> Result<(), Failure> {
    let entries = run_all(configured)?;
    report(&entries, run)
}

fn run_all(
    configured: Vec<(String, ExperimentConfig)>,
) -> Result<Vec<(String, ExperimentConfig, Summary)>, Failure> {
    let total = configured.len();
    let mut entries = Vec::with_capacity(total);
    for (i, (label, config)) in configured.into_iter().enumerate() {
        eprint!("[{}/{total}] {label} ... ", i + 1);
        let _ = std::io::stderr().flush();
        let (summary, _records) = run_experiment(&config)
            .map_err(|err| Failure::Internal(err.to_string()))?;
        eprintln!(
            "{:.1}% in {:.1}s",
            summary.winrate * 100.0,
            summary.mean_game_seconds * f64::from(summary.trials)
        );
        entries.push((label, config, summary));
    }
    Ok(entries)
}

fn report(
    entries: &[(String, ExperimentConfig, Summary)],
    run: &RunArgs,
) -> Result<(), Failure> {
    let ResultsDoc { csv, table } = summarize(entries);
    print!("{table}");
    if let Some(path) = &run.out {
        fs::write(path, csv)
            .map_err(|err| Failure::Config(format!("cannot write {}: {err}", path.display())))?;
    }
    Ok(())
}

fn validate(path: &Path) -> Result<(), Failure> {
    let doc = fs::read_to_string(path)
        .map_err(|err| Failure::Config(format!("cannot read {}: {err}", path.display())))?;
    let config = load_scenario_config(&doc)
        .map_err(|err| Failure::Config(format!("{}: {err}", path.display())))?;
    let violations = validate_scenario(&config, &bundled_library());
    if violations.is_empty() {
        println!(
            "ok: {} scenario, {} heroes, quest target {}",
            config.difficulty,
            config.heroes.len(),
            config.quest_target
        );
        Ok(())
    } else {
        for violation in &violations {
            println!("{violation}");
        }
        Err(Failure::Config(format!(
            "{} has {} violation(s)",
            path.display(),
            violations.len()
        )))
    }
}
