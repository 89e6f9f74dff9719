use std::sync::Arc;

use questsim::{
    bundled_scenario, run_game, AgentAssignment, AgentKind, Difficulty, PolicyKind, SearchBudget,
    TerminalStatus,
};

fn shape(difficulty: Difficulty, agent: AgentKind, n: u64) {
    let scenario = Arc::new(bundled_scenario(difficulty));
    let assignment = AgentAssignment::uniform(agent);
    let mut wins = 0;
    let mut win_rounds = Vec::new();
    let mut loss_rounds = Vec::new();
    let mut threat_outs = 0;
    let mut hero_deaths = 0;
    for seed in 0..n {
        let rec = run_game(&scenario, assignment, SearchBudget::new(1), PolicyKind::Expert, seed)
            .unwrap();
        match rec.outcome {
            TerminalStatus::Win => {
                wins += 1;
                win_rounds.push(rec.rounds);
            }
            TerminalStatus::Loss(reason) => {
                loss_rounds.push(rec.rounds);
                match reason {
                    questsim::LossReason::ThreatLimit => threat_outs += 1,
                    questsim::LossReason::HeroesDead => hero_deaths += 1,
                }
            }
            TerminalStatus::Ongoing => unreachable!(),
        }
    }
    let mean = |v: &[u32]| {
        if v.is_empty() { 0.0 } else { v.iter().sum::<u32>() as f64 / v.len() as f64 }
    };
    println!(
        "{difficulty:?} {agent:?}: {wins}/{n} wins (mean win r{:.1}), losses: {threat_outs} threat / {hero_deaths} heroes (mean loss r{:.1})",
        mean(&win_rounds),
        mean(&loss_rounds),
    );
}

#[test]
fn game_shapes() {
    for agent in [AgentKind::Random, AgentKind::Expert] {
        for difficulty in [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard] {
            shape(difficulty, agent, 60);
        }
    }
}
