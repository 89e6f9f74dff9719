//! Deterministic simulator for a small cooperative quest card game, the
//! decision agents that play it, and a seeded experiment harness.
//!
//! The crate is organised bottom-up:
//!
//! * [`cards`] — card definitions, the card library file format and scenario
//!   configuration (validation + deck materialisation).
//! * [`engine`] — the game state and the thirteen-stage round state machine.
//! * [`actions`] — legal action enumeration and the expert expansion filter.
//! * [`agents`] — the constrained-random and expert rule policies.
//! * [`search`] — flat Monte-Carlo and UCT tree search built on the policies.
//! * [`harness`] — seeded, parallel experiment runs and result summaries.
//! * [`presets`] — the canned experiment suites exposed by the CLI.
//!
//! Everything is deterministic given a seed: games carry their own RNG stream,
//! agents only consume randomness handed to them by the caller, and the
//! harness derives per-trial seeds from the master seed so results do not
//! depend on the worker count.

pub mod actions;
pub mod agents;
pub mod cards;
pub mod engine;
pub mod harness;
pub mod presets;
pub mod search;

#[cfg(test)]
pub(crate) mod testrig;

pub use actions::{expert_expansion_filter, legal_actions, Action};
pub use agents::{expert_choose, random_choose, PolicyKind};
pub use cards::{
    build_scenario, bundled_library, bundled_scenario, bundled_scenario_config, load_card_library,
    load_scenario_config, validate_scenario, CardDef, CardKind, CardLibrary, DeckSpec, DefId,
    Difficulty, InvalidScenario, ParseError, Scenario, ScenarioConfig, Sphere, Violation,
};
pub use engine::{
    init_game, GameState, LossReason, StageId, TerminalStatus, THREAT_LIMIT,
};
pub use harness::{
    confidence_interval, mix_seed, run_experiment, run_game, strip_timing_columns, summarize,
    AgentAssignment, AgentKind, ExperimentConfig, GameRecord, HarnessError, ResultsDoc, Summary,
};
pub use search::{
    flat_mc_decide, flat_mc_search, mcts_decide, mcts_search, simulate_playout, uct_value,
    FlatReport, MctsReport, PlayoutOutcome, SearchBudget,
};
