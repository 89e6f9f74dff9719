use std::sync::Arc;

use questsim::{
    bundled_scenario, run_game, AgentAssignment, AgentKind, Difficulty, PolicyKind, SearchBudget,
    TerminalStatus,
};

fn cell(assignment: AgentAssignment, budget: u32, policy: PolicyKind, n: u64) -> usize {
    let scenario = Arc::new(bundled_scenario(Difficulty::Medium));
    let results: Vec<_> = {
        use rayon::prelude::*;
        rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| {
                (0..n)
                    .into_par_iter()
                    .map(|seed| {
                        run_game(&scenario, assignment, SearchBudget::new(budget), policy, seed)
                            .unwrap()
                    })
                    .collect()
            })
    };
    results.iter().filter(|r| r.outcome == TerminalStatus::Win).count()
}

#[test]
fn sweep() {
    let mcts = AgentAssignment::uniform(AgentKind::Mcts);
    let flat = AgentAssignment::uniform(AgentKind::FlatMc);
    for b in [1u32, 5, 10, 20, 40, 80] {
        let w = cell(mcts, b, PolicyKind::Expert, 64);
        println!("mcts b{b}: {w}/64");
    }
    for b in [1u32, 40] {
        let w = cell(flat, b, PolicyKind::Expert, 64);
        println!("flat b{b}: {w}/64");
    }
}
