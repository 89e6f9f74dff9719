//! Flat Monte-Carlo and UCT tree search over the engine.
//!
//! Budget semantics differ deliberately: flat search runs `budget.playouts`
//! rollouts from **each** child of the decision, while the tree search runs
//! `budget.playouts` iterations **total**. At equal nominal budget flat
//! search therefore spends more compute; experiment reports carry the raw
//! numbers so the asymmetry stays visible.
//!
//! Chance is handled open-loop: the tree branches only on player decisions.
//! Every iteration re-randomises the face-down decks before walking the tree,
//! so node statistics average over the hidden-information distribution
//! instead of peeking at the real game's card order. Nodes are identified by
//! their action; no game states are stored in the tree.

use rand::Rng;

use crate::actions::{expert_expansion_filter, legal_actions, Action};
use crate::agents::{playout_choose, PolicyKind};
use crate::engine::{GameState, TerminalStatus};

/// How many rollouts a search may spend (per child for flat search, total
/// for tree search).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub playouts: u32,
}

impl SearchBudget {
    pub fn new(playouts: u32) -> Self {
        assert!(playouts >= 1, "a search budget needs at least one playout");
        SearchBudget { playouts }
    }
}

/// Result of a single rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlayoutOutcome {
    Win,
    Loss,
}

/// Upper-confidence score for a child: winrate plus the exploration bonus
/// `sqrt(2 ln n / n_j)` where `n` counts playouts through the parent and
/// `n_j` through the child.
pub fn uct_value(x_j: f64, n: u32, n_j: u32) -> f64 {
    debug_assert!(n_j >= 1, "unvisited children are expanded, never scored");
    debug_assert!(n >= n_j, "a child cannot outvisit its parent");
    x_j + (2.0 * (n as f64).ln() / n_j as f64).sqrt()
}

/// Rolls a copy of the game to a terminal state under the given policy and
/// reports the result. The copy's face-down decks are re-randomised first
/// (from the caller's stream), so repeated calls sample different hidden
/// worlds; the input state is never touched.
pub fn simulate_playout(
    state: &GameState,
    policy: PolicyKind,
    rng: &mut impl Rng,
) -> PlayoutOutcome {
    let mut state = state.clone();
    let world_seed = rng.gen::<u64>();
    state.reseed_and_reshuffle(world_seed);
    loop {
        let status = state.advance_to_decision().expect("ruled stages step cleanly");
        match status {
            TerminalStatus::Win => return PlayoutOutcome::Win,
            TerminalStatus::Loss(_) => return PlayoutOutcome::Loss,
            TerminalStatus::Ongoing => {}
        }
        let action = playout_choose(policy, &state, rng);
        state.step(Some(&action)).expect("policy actions are legal");
    }
}

/// Flat search outcome plus the bookkeeping tests care about.
#[derive(Debug, Clone)]
pub struct FlatReport {
    pub action: Action,
    pub playouts_run: u32,
    /// Wins recorded per child, in enumeration order.
    pub children: Vec<(Action, u32)>,
}

/// Depth-one search: every legal action (unfiltered) becomes a child,
/// `budget.playouts` rollouts are run from each, and the child with the most
/// wins is chosen (ties to the earlier child). A singleton decision
/// short-circuits without any rollouts.
pub fn flat_mc_search(
    state: &GameState,
    budget: SearchBudget,
    policy: PolicyKind,
    rng: &mut impl Rng,
) -> FlatReport {
    let actions = legal_actions(state);
    assert!(!actions.is_empty(), "flat search called away from a decision");
    if actions.len() == 1 {
        let action = actions.into_iter().next().unwrap();
        return FlatReport { action: action.clone(), playouts_run: 0, children: vec![(action, 0)] };
    }
    let mut children = Vec::with_capacity(actions.len());
    let mut playouts_run = 0;
    for action in actions {
        let mut child_state = state.clone();
        child_state.step(Some(&action)).expect("enumerated actions are legal");
        let mut wins = 0;
        for _ in 0..budget.playouts {
            if simulate_playout(&child_state, policy, rng) == PlayoutOutcome::Win {
                wins += 1;
            }
            playouts_run += 1;
        }
        children.push((action, wins));
    }
    let mut best = 0;
    for (i, child) in children.iter().enumerate() {
        if child.1 > children[best].1 {
            best = i;
        }
    }
    FlatReport { action: children[best].0.clone(), playouts_run, children }
}

/// See [`flat_mc_search`]; this drops the report.
pub fn flat_mc_decide(
    state: &GameState,
    budget: SearchBudget,
    policy: PolicyKind,
    rng: &mut impl Rng,
) -> Action {
    flat_mc_search(state, budget, policy, rng).action
}

struct Node {
    action: Action,
    visits: u32,
    wins: u32,
    children: Vec<usize>,
}

/// Tree search outcome plus root statistics for tests.
#[derive(Debug, Clone)]
pub struct MctsReport {
    pub action: Action,
    pub root_visits: u32,
    /// Root children as (action, visits, wins), in creation order (which
    /// equals enumeration order at the root).
    pub root_children: Vec<(Action, u32, u32)>,
}

/// UCT tree search: `budget.playouts` iterations of select / expand /
/// simulate / backpropagate.
///
/// Each iteration samples a fresh hidden-deck world, then walks down from the
/// root re-deriving the expert-filtered candidate list at every node (chance
/// along the way differs between worlds, so candidates may too). The first
/// candidate without a node is expanded; otherwise the highest-UCT child
/// among this world's candidates is followed (ties to the earliest candidate).
/// The final move is the root child with the most visits, ties to the
/// earliest. A singleton decision short-circuits with zero iterations.
pub fn mcts_search(
    state: &GameState,
    budget: SearchBudget,
    policy: PolicyKind,
    rng: &mut impl Rng,
) -> MctsReport {
    let root_actions = legal_actions(state);
    assert!(!root_actions.is_empty(), "tree search called away from a decision");
    if root_actions.len() == 1 {
        return MctsReport {
            action: root_actions.into_iter().next().unwrap(),
            root_visits: 0,
            root_children: Vec::new(),
        };
    }

    let mut arena: Vec<Node> = Vec::new();
    let mut root_children: Vec<usize> = Vec::new();
    let mut root_visits = 0u32;

    for _ in 0..budget.playouts {
        let mut world = state.clone();
        world.reseed_and_reshuffle(rng.gen::<u64>());
        let mut path: Vec<usize> = Vec::new();

        let outcome = loop {
            let status = world.advance_to_decision().expect("ruled stages step cleanly");
            match status {
                TerminalStatus::Win => break PlayoutOutcome::Win,
                TerminalStatus::Loss(_) => break PlayoutOutcome::Loss,
                TerminalStatus::Ongoing => {}
            }
            let candidates = expert_expansion_filter(&world, legal_actions(&world));
            let child_ixs: Vec<usize> = match path.last() {
                None => root_children.clone(),
                Some(&p) => arena[p].children.clone(),
            };
            let node_of = |action: &Action, arena: &[Node]| {
                child_ixs.iter().copied().find(|&ix| arena[ix].action == *action)
            };

            let untried = candidates.iter().find(|c| node_of(c, &arena).is_none()).cloned();
            if let Some(action) = untried {
                world.step(Some(&action)).expect("filtered actions are legal");
                let ix = arena.len();
                arena.push(Node { action, visits: 0, wins: 0, children: Vec::new() });
                match path.last() {
                    None => root_children.push(ix),
                    Some(&p) => arena[p].children.push(ix),
                }
                path.push(ix);
                break simulate_playout(&world, policy, rng);
            }

            let parent_visits = match path.last() {
                None => root_visits,
                Some(&p) => arena[p].visits,
            };
            let mut best: Option<(usize, f64)> = None;
            for candidate in &candidates {
                let Some(ix) = node_of(candidate, &arena) else { continue };
                let node = &arena[ix];
                let score =
                    uct_value(node.wins as f64 / node.visits as f64, parent_visits, node.visits);
                if best.map_or(true, |(_, s)| score > s) {
                    best = Some((ix, score));
                }
            }
            let (choice, _) = best.expect("every candidate tried implies a scorable child");
            let action = arena[choice].action.clone();
            world.step(Some(&action)).expect("tree actions are legal in their world");
            path.push(choice);
        };

        root_visits += 1;
        let won = outcome == PlayoutOutcome::Win;
        for &ix in &path {
            arena[ix].visits += 1;
            if won {
                arena[ix].wins += 1;
            }
        }
    }

    let mut best = root_children[0];
    for &ix in &root_children {
        if arena[ix].visits > arena[best].visits {
            best = ix;
        }
    }
    MctsReport {
        action: arena[best].action.clone(),
        root_visits,
        root_children: root_children
            .iter()
            .map(|&ix| (arena[ix].action.clone(), arena[ix].visits, arena[ix].wins))
            .collect(),
    }
}

/// See [`mcts_search`]; this drops the report.
pub fn mcts_decide(
    state: &GameState,
    budget: SearchBudget,
    policy: PolicyKind,
    rng: &mut impl Rng,
) -> Action {
    mcts_search(state, budget, policy, rng).action
}
