//! Canned experiment suites.
//!
//! Each preset expands to a fixed, ordered list of experiment configurations.
//! The order is part of the output contract: experiment `i` runs with master
//! seed `mix_seed(master_seed, i)`, and the CSV rows appear in list order.

use std::sync::Arc;

use crate::agents::PolicyKind;
use crate::cards::{bundled_scenario, Difficulty, Scenario};
use crate::harness::{mix_seed, AgentAssignment, AgentKind, ExperimentConfig};
use crate::search::SearchBudget;

/// The playout budgets exercised by the budget sweep.
pub const SWEEP_BUDGETS: [u32; 6] = [1, 5, 10, 20, 40, 80];

/// Agent triples compared by the mixed-assignment grid, beyond the two
/// uniform baselines.
const GRID_TRIPLES: [(u8, u8, u8); 14] = [
    (3, 2, 2),
    (4, 2, 2),
    (4, 2, 4),
    (2, 2, 4),
    (3, 3, 2),
    (2, 3, 2),
    (4, 4, 4),
    (4, 4, 2),
    (2, 4, 4),
    (2, 4, 2),
    (3, 2, 3),
    (2, 2, 3),
    (2, 3, 3),
    (3, 3, 3),
];

/// Assignments rerun on the hard scenario for the final comparison.
const FINAL_TRIPLES: [(u8, u8, u8); 7] = [
    (1, 1, 1),
    (2, 2, 2),
    (3, 3, 3),
    (4, 4, 4),
    (3, 2, 2),
    (4, 2, 2),
    (4, 2, 4),
];

fn assignment_from(triple: (u8, u8, u8)) -> AgentAssignment {
    let agent = |n| AgentKind::from_number(n).expect("preset tables only use agents 1-4");
    AgentAssignment::new(agent(triple.0), agent(triple.1), agent(triple.2))
}

fn seeded(
    entries: Vec<(String, Arc<Scenario>, AgentAssignment, u32, PolicyKind)>,
    trials: u32,
    master_seed: u64,
    workers: usize,
) -> Vec<(String, ExperimentConfig)> {
    entries
        .into_iter()
        .enumerate()
        .map(|(index, (label, scenario, assignment, budget, playout_policy))| {
            let config = ExperimentConfig {
                scenario,
                assignment,
                budget: SearchBudget::new(budget),
                playout_policy,
                trials,
                master_seed: mix_seed(master_seed, index as u64),
                workers,
            };
            (label, config)
        })
        .collect()
}

/// Winrate versus playout budget for both search agents under both playout
/// policies, on the medium scenario. 24 experiments.
pub fn sweep_budget(trials: u32, master_seed: u64, workers: usize) -> Vec<(String, ExperimentConfig)> {
    let scenario = Arc::new(bundled_scenario(Difficulty::Medium));
    let searchers = [
        ("flat", AgentAssignment::uniform(AgentKind::FlatMc)),
        ("mcts", AgentAssignment::uniform(AgentKind::Mcts)),
    ];
    let mut entries = Vec::new();
    for budget in SWEEP_BUDGETS {
        for (name, assignment) in searchers {
            for policy in [PolicyKind::Random, PolicyKind::Expert] {
                entries.push((
                    format!("sweep-{name}-b{budget}-{policy}"),
                    Arc::clone(&scenario),
                    assignment,
                    budget,
                    policy,
                ));
            }
        }
    }
    seeded(entries, trials, master_seed, workers)
}

/// Mixed stage assignments on the medium scenario at budget 40 with expert
/// playouts, bracketed by the uniform random and uniform expert baselines.
/// 16 experiments.
pub fn grid_agents(trials: u32, master_seed: u64, workers: usize) -> Vec<(String, ExperimentConfig)> {
    let scenario = Arc::new(bundled_scenario(Difficulty::Medium));
    let mut triples = vec![(1, 1, 1), (2, 2, 2)];
    triples.extend(GRID_TRIPLES);
    let entries = triples
        .into_iter()
        .map(|triple| {
            let assignment = assignment_from(triple);
            (
                format!("grid-{}", assignment.label()),
                Arc::clone(&scenario),
                assignment,
                40,
                PolicyKind::Expert,
            )
        })
        .collect();
    seeded(entries, trials, master_seed, workers)
}

/// Headline assignments rerun on the hard scenario at budget 40 with expert
/// playouts. 7 experiments.
pub fn final_comp(trials: u32, master_seed: u64, workers: usize) -> Vec<(String, ExperimentConfig)> {
    let scenario = Arc::new(bundled_scenario(Difficulty::Hard));
    let entries = FINAL_TRIPLES
        .into_iter()
        .map(|triple| {
            let assignment = assignment_from(triple);
            (
                format!("final-{}", assignment.label()),
                Arc::clone(&scenario),
                assignment,
                40,
                PolicyKind::Expert,
            )
        })
        .collect();
    seeded(entries, trials, master_seed, workers)
}
