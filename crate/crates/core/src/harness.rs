//! Seeded, parallel experiment runs and result summaries.
//!
//! Every trial derives its own seed from the experiment's master seed, so the
//! result multiset is a pure function of the configuration — worker count and
//! scheduling cannot change it. Timing is recorded per game but excluded from
//! all determinism guarantees.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::actions::legal_actions;
use crate::agents::{expert_choose, random_choose, PolicyKind};
use crate::cards::Scenario;
use crate::engine::{init_game, EngineError, StageId, TerminalStatus};
use crate::search::{flat_mc_decide, mcts_decide, SearchBudget};

/// Stream tag separating the agents' randomness from the game's shuffle
/// stream for the same trial seed.
const AGENT_STREAM: u64 = 0xA6E7;

/// The four playable agents. The numbering is the one used on the command
/// line and in result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Random,
    Expert,
    FlatMc,
    Mcts,
}

impl AgentKind {
    pub fn number(self) -> u8 {
        match self {
            AgentKind::Random => 1,
            AgentKind::Expert => 2,
            AgentKind::FlatMc => 3,
            AgentKind::Mcts => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<AgentKind> {
        match n {
            1 => Some(AgentKind::Random),
            2 => Some(AgentKind::Expert),
            3 => Some(AgentKind::FlatMc),
            4 => Some(AgentKind::Mcts),
            _ => None,
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AgentKind::Random => "random",
            AgentKind::Expert => "expert",
            AgentKind::FlatMc => "flat-mc",
            AgentKind::Mcts => "mcts",
        };
        f.write_str(name)
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" | "1" => Ok(AgentKind::Random),
            "expert" | "2" => Ok(AgentKind::Expert),
            "flat-mc" | "3" => Ok(AgentKind::FlatMc),
            "mcts" | "4" => Ok(AgentKind::Mcts),
            other => Err(format!("unknown agent {other:?} (use 1-4)")),
        }
    }
}

/// Which agent plays each configurable decision stage. Travel and attack
/// declarations always use the expert rules; only planning, questing
/// (commitment) and defense vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentAssignment {
    pub planning: AgentKind,
    pub questing: AgentKind,
    pub defense: AgentKind,
}

impl AgentAssignment {
    pub fn new(planning: AgentKind, questing: AgentKind, defense: AgentKind) -> Self {
        AgentAssignment { planning, questing, defense }
    }

    /// Uniform assignment: the same agent at all three slots.
    pub fn uniform(agent: AgentKind) -> Self {
        AgentAssignment::new(agent, agent, agent)
    }

    /// The agent responsible for a decision stage.
    pub fn agent_for(&self, stage: StageId) -> AgentKind {
        match stage {
            StageId::Planning => self.planning,
            StageId::CommitCharacters => self.questing,
            StageId::DeclareDefenders => self.defense,
            StageId::Travel | StageId::DeclareAttackers => AgentKind::Expert,
            other => unreachable!("no agent owns the ruled stage {other}"),
        }
    }

    /// The `planning-questing-defense` triple as printed in tables, e.g.
    /// `4-2-4`.
    pub fn label(&self) -> String {
        format!("{}-{}-{}", self.planning.number(), self.questing.number(), self.defense.number())
    }
}

/// Everything one experiment needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Arc<Scenario>,
    pub assignment: AgentAssignment,
    pub budget: SearchBudget,
    pub playout_policy: PolicyKind,
    pub trials: u32,
    pub master_seed: u64,
    /// Worker threads; 0 lets the runtime pick.
    pub workers: usize,
}

/// One finished game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameRecord {
    pub outcome: TerminalStatus,
    pub rounds: u32,
    pub seconds: f64,
}

/// Aggregated experiment results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub wins: u32,
    pub trials: u32,
    pub winrate: f64,
    pub ci_halfwidth: f64,
    pub mean_game_seconds: f64,
    pub stdev_game_seconds: f64,
}

/// A trial failed; the seed pins down the exact game for replay.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("trial {trial} (seed {seed:#018x}) aborted: {source}")]
    Trial {
        trial: u32,
        seed: u64,
        #[source]
        source: EngineError,
    },
}

/// 64-bit avalanche mix of a master seed and an index. Nearby inputs land on
/// statistically unrelated outputs (splitmix-style finalizer), which keeps
/// per-trial streams independent.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Half-width of the 95% binomial confidence interval around a winrate.
pub fn confidence_interval(p: f64, n: u32) -> f64 {
    1.96 * (p * (1.0 - p) / f64::from(n)).sqrt()
}

/// Plays one full game under the given stage assignment and returns its
/// record. The outcome is a pure function of (scenario, assignment, budget,
/// playout policy, seed); wall time is measured but carries no guarantees.
pub fn run_game(
    scenario: &Arc<Scenario>,
    assignment: AgentAssignment,
    budget: SearchBudget,
    playout_policy: PolicyKind,
    seed: u64,
) -> Result<GameRecord, EngineError> {
    let start = Instant::now();
    let mut state = init_game(Arc::clone(scenario), seed);
    let mut agent_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, AGENT_STREAM));
    loop {
        let status = state.advance_to_decision()?;
        if status != TerminalStatus::Ongoing {
            return Ok(GameRecord {
                outcome: status,
                rounds: state.round_number(),
                seconds: start.elapsed().as_secs_f64(),
            });
        }
        let action = match assignment.agent_for(state.stage()) {
            AgentKind::Random => {
                let actions = legal_actions(&state);
                random_choose(&state, &actions, &mut agent_rng)
            }
            AgentKind::Expert => {
                let actions = legal_actions(&state);
                expert_choose(&state, &actions)
            }
            AgentKind::FlatMc => flat_mc_decide(&state, budget, playout_policy, &mut agent_rng),
            AgentKind::Mcts => mcts_decide(&state, budget, playout_policy, &mut agent_rng),
        };
        state.step(Some(&action))?;
    }
}

/// Runs all trials of an experiment across up to `workers` threads and
/// aggregates. Trial `i` always plays with seed `mix_seed(master_seed, i)`,
/// so records (and the summary) are identical for any worker count.
pub fn run_experiment(
    config: &ExperimentConfig,
) -> Result<(Summary, Vec<GameRecord>), HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("worker pool construction cannot fail with these settings");
    let records: Result<Vec<GameRecord>, HarnessError> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = mix_seed(config.master_seed, u64::from(trial));
                run_game(
                    &config.scenario,
                    config.assignment,
                    config.budget,
                    config.playout_policy,
                    seed,
                )
                .map_err(|source| HarnessError::Trial { trial, seed, source })
            })
            .collect()
    });
    let records = records?;
    Ok((summary_of(&records), records))
}

/// Builds the summary for a batch of records.
pub fn summary_of(records: &[GameRecord]) -> Summary {
    let trials = records.len() as u32;
    let wins = records.iter().filter(|r| r.outcome == TerminalStatus::Win).count() as u32;
    let winrate = if trials == 0 { 0.0 } else { f64::from(wins) / f64::from(trials) };
    let ci_halfwidth = if trials == 0 { 0.0 } else { confidence_interval(winrate, trials) };
    let mean = if trials == 0 {
        0.0
    } else {
        records.iter().map(|r| r.seconds).sum::<f64>() / f64::from(trials)
    };
    let stdev = if trials > 1 {
        let var = records.iter().map(|r| (r.seconds - mean).powi(2)).sum::<f64>()
            / f64::from(trials - 1);
        var.sqrt()
    } else {
        0.0
    };
    Summary {
        wins,
        trials,
        winrate,
        ci_halfwidth,
        mean_game_seconds: mean,
        stdev_game_seconds: stdev,
    }
}

/// The two rendered result views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultsDoc {
    /// Machine-readable CSV, rows in input order.
    pub csv: String,
    /// Aligned text table sorted by winrate (descending, ties by label).
    pub table: String,
}

pub const CSV_HEADER: &str = "label,planning,questing,defense,difficulty,budget,playout_policy,\
trials,wins,winrate_pct,ci_pct,mean_s,stdev_s";

/// Renders experiment results as CSV plus a readable table. The CSV keeps
/// the input order; the table sorts by winrate descending with ties broken
/// by label so equal rows land in a stable order.
pub fn summarize(entries: &[(String, ExperimentConfig, Summary)]) -> ResultsDoc {
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for (label, config, summary) in entries {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:.1},{:.2},{:.6},{:.6}\n",
            label,
            config.assignment.planning.number(),
            config.assignment.questing.number(),
            config.assignment.defense.number(),
            config.scenario.difficulty,
            config.budget.playouts,
            config.playout_policy,
            summary.trials,
            summary.wins,
            summary.winrate * 100.0,
            summary.ci_halfwidth * 100.0,
            summary.mean_game_seconds,
            summary.stdev_game_seconds,
        ));
    }

    let label_width = entries.iter().map(|(l, _, _)| l.len()).chain([5]).max().unwrap();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        let (la, _, sa) = &entries[a];
        let (lb, _, sb) = &entries[b];
        sb.winrate.partial_cmp(&sa.winrate).expect("winrates are finite").then_with(|| la.cmp(lb))
    });
    let mut table = format!(
        "{:<label_width$}  {:<6} {:<8} {:>6}  {:<8} {}\n",
        "label", "agents", "diff", "budget", "playouts", "winrate"
    );
    for &i in &order {
        let (label, config, summary) = &entries[i];
        table.push_str(&format!(
            "{:<label_width$}  {:<6} {:<8} {:>6}  {:<8} {:.1} ± {:.2}\n",
            label,
            config.assignment.label(),
            config.scenario.difficulty.to_string(),
            config.budget.playouts,
            config.playout_policy.to_string(),
            summary.winrate * 100.0,
            summary.ci_halfwidth * 100.0,
        ));
    }
    ResultsDoc { csv, table }
}

/// Drops the two timing columns from a results CSV, leaving only the
/// deterministic part. Used by reproducibility checks.
pub fn strip_timing_columns(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            fields[..fields.len().saturating_sub(2)].join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::{bundled_scenario, Difficulty};

    fn quick_config(trials: u32, workers: usize) -> ExperimentConfig {
        ExperimentConfig {
            scenario: Arc::new(bundled_scenario(Difficulty::Medium)),
            assignment: AgentAssignment::uniform(AgentKind::Expert),
            budget: SearchBudget::new(1),
            playout_policy: PolicyKind::Expert,
            trials,
            master_seed: 2024,
            workers,
        }
    }

    #[test]
    fn confidence_interval_matches_hand_computed_values() {
        assert!((confidence_interval(0.981, 1000) - 0.008_462).abs() < 1e-5);
        assert!((confidence_interval(0.204, 1000) - 0.024_976).abs() < 1e-5);
        assert_eq!(confidence_interval(0.0, 1000), 0.0);
        assert_eq!(confidence_interval(1.0, 7), 0.0);
    }

    #[test]
    fn confidence_interval_is_symmetric_in_p() {
        for i in 0..=1000 {
            let p = f64::from(i) / 1000.0;
            let diff = (confidence_interval(p, 123) - confidence_interval(1.0 - p, 123)).abs();
            assert!(diff < 1e-12, "asymmetric at p={p}: {diff}");
        }
    }

    #[test]
    fn mix_seed_scatters_nearby_inputs() {
        let a = mix_seed(0, 0);
        let b = mix_seed(0, 1);
        let c = mix_seed(1, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
        assert_eq!(mix_seed(99, 7), mix_seed(99, 7));
        // A one-bit input change should flip roughly half the output bits.
        let flips = (mix_seed(42, 0) ^ mix_seed(42, 1)).count_ones();
        assert!((16..=48).contains(&flips), "weak avalanche: {flips} flipped bits");
    }

    #[test]
    fn run_game_is_deterministic_in_outcome_and_rounds() {
        let scenario = Arc::new(bundled_scenario(Difficulty::Medium));
        let assignment = AgentAssignment::uniform(AgentKind::Expert);
        let a = run_game(&scenario, assignment, SearchBudget::new(1), PolicyKind::Expert, 7)
            .unwrap();
        let b = run_game(&scenario, assignment, SearchBudget::new(1), PolicyKind::Expert, 7)
            .unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.rounds, b.rounds);
    }

    #[test]
    fn random_assignment_games_terminate() {
        let scenario = Arc::new(bundled_scenario(Difficulty::Easy));
        let assignment = AgentAssignment::uniform(AgentKind::Random);
        for seed in 0..10 {
            let record =
                run_game(&scenario, assignment, SearchBudget::new(1), PolicyKind::Random, seed)
                    .unwrap();
            assert_ne!(record.outcome, TerminalStatus::Ongoing);
            assert!(record.rounds <= 32, "game ran implausibly long");
        }
    }

    #[test]
    fn experiments_are_worker_count_independent() {
        let serial = run_experiment(&quick_config(24, 1)).unwrap();
        let parallel = run_experiment(&quick_config(24, 4)).unwrap();
        assert_eq!(serial.0.wins, parallel.0.wins);
        let outcomes = |records: &[GameRecord]| -> Vec<TerminalStatus> {
            records.iter().map(|r| r.outcome).collect()
        };
        assert_eq!(outcomes(&serial.1), outcomes(&parallel.1));
    }

    #[test]
    fn summary_counts_wins_exactly() {
        let (summary, records) = run_experiment(&quick_config(30, 0)).unwrap();
        assert_eq!(summary.trials, 30);
        assert_eq!(records.len(), 30);
        let wins = records.iter().filter(|r| r.outcome == TerminalStatus::Win).count() as u32;
        assert_eq!(summary.wins, wins);
        assert!((summary.winrate - f64::from(wins) / 30.0).abs() < 1e-12);
    }

    #[test]
    fn single_trial_summaries_sit_at_the_extremes() {
        let (summary, _) = run_experiment(&quick_config(1, 1)).unwrap();
        assert!(summary.winrate == 0.0 || summary.winrate == 1.0);
        assert_eq!(summary.ci_halfwidth, 0.0);
    }

    #[test]
    fn summarize_renders_the_documented_formats() {
        let config = quick_config(1000, 1);
        let summary = Summary {
            wins: 981,
            trials: 1000,
            winrate: 0.981,
            ci_halfwidth: confidence_interval(0.981, 1000),
            mean_game_seconds: 0.25,
            stdev_game_seconds: 0.125,
        };
        let doc = summarize(&[("headline".to_owned(), config, summary)]);
        let mut lines = doc.csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(
            lines.next(),
            Some("headline,2,2,2,medium,1,expert,1000,981,98.1,0.85,0.250000,0.125000")
        );
        assert!(doc.table.contains("98.1 ± 0.85"), "table was:\n{}", doc.table);
    }

    #[test]
    fn summarize_of_nothing_is_header_only() {
        let doc = summarize(&[]);
        assert_eq!(doc.csv, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn summarize_sorts_by_winrate_then_label() {
        let config = quick_config(10, 1);
        let mk = |wins: u32| Summary {
            wins,
            trials: 10,
            winrate: f64::from(wins) / 10.0,
            ci_halfwidth: 0.0,
            mean_game_seconds: 0.0,
            stdev_game_seconds: 0.0,
        };
        let doc = summarize(&[
            ("bravo".to_owned(), config.clone(), mk(5)),
            ("alpha".to_owned(), config.clone(), mk(5)),
            ("charlie".to_owned(), config, mk(9)),
        ]);
        let rows: Vec<&str> = doc.table.lines().skip(1).collect();
        assert!(rows[0].starts_with("charlie"));
        assert!(rows[1].starts_with("alpha"));
        assert!(rows[2].starts_with("bravo"));
    }

    #[test]
    fn strip_timing_columns_drops_exactly_two_fields() {
        let stripped = strip_timing_columns("a,b,c,d\n1,2,0.5,0.25\n");
        assert_eq!(stripped, "a,b\n1,2");
        assert_eq!(strip_timing_columns("x,y,z"), "x");
    }

    #[test]
    fn agent_numbers_round_trip() {
        for kind in [AgentKind::Random, AgentKind::Expert, AgentKind::FlatMc, AgentKind::Mcts] {
            assert_eq!(AgentKind::from_number(kind.number()), Some(kind));
        }
        assert_eq!(AgentKind::from_number(0), None);
        assert_eq!(AgentKind::from_number(5), None);
    }

    #[test]
    fn assignment_routes_fixed_stages_to_the_expert() {
        let assignment = AgentAssignment::new(AgentKind::Mcts, AgentKind::FlatMc, AgentKind::Random);
        assert_eq!(assignment.agent_for(StageId::Planning), AgentKind::Mcts);
        assert_eq!(assignment.agent_for(StageId::CommitCharacters), AgentKind::FlatMc);
        assert_eq!(assignment.agent_for(StageId::DeclareDefenders), AgentKind::Random);
        assert_eq!(assignment.agent_for(StageId::Travel), AgentKind::Expert);
        assert_eq!(assignment.agent_for(StageId::DeclareAttackers), AgentKind::Expert);
        assert_eq!(assignment.label(), "4-3-1");
    }
}
