//! The two fixed per-decision policies: constrained random and expert rules.
//!
//! Both take the already-enumerated legal action list and always return one of
//! its members. They also serve as the playout policies for the search module.
//! The random policy consumes randomness only from the stream handed in; the
//! expert policy is a pure function of state and list.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::actions::{
    canonical_payment, mask_willpower, spread_mask, Action, FULL_COMMIT_LIMIT, MAX_ENUMERATED,
};
use crate::cards::DefId;
use crate::engine::{attack_damage, GameState, StageId};

/// Commit-stage rejection sampling gives up after this many draws and falls
/// back to the empty commitment. Unbounded redraws could spin forever when no
/// subset qualifies.
pub const COMMIT_REJECTION_CAP: usize = 32;

/// Which playout policy to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Random,
    Expert,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Random => "random",
            PolicyKind::Expert => "expert",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "random" => Ok(PolicyKind::Random),
            "expert" => Ok(PolicyKind::Expert),
            _ => Err(()),
        }
    }
}

/// Dispatches to the policy of the given kind.
pub fn policy_choose(
    policy: PolicyKind,
    state: &GameState,
    actions: &[Action],
    rng: &mut impl Rng,
) -> Action {
    match policy {
        PolicyKind::Random => random_choose(state, actions, rng),
        PolicyKind::Expert => expert_choose(state, actions),
    }
}

/// Constrained random policy.
///
/// Most stages pick uniformly from the list. Commitment instead draws uniform
/// character subsets and keeps the first non-empty one whose willpower beats
/// the staging threat (capped at [`COMMIT_REJECTION_CAP`] draws, then the
/// empty commitment); defense samples one untapped defender per enemy without
/// reuse, going undefended once characters run out.
pub fn random_choose(state: &GameState, actions: &[Action], rng: &mut impl Rng) -> Action {
    debug_assert!(!actions.is_empty(), "random_choose needs a non-empty action list");
    match state.stage() {
        StageId::CommitCharacters => random_commit(state, actions, rng),
        StageId::DeclareDefenders => random_defense(state, actions, rng),
        _ => actions[rng.gen_range(0..actions.len())].clone(),
    }
}

fn random_commit(state: &GameState, actions: &[Action], rng: &mut impl Rng) -> Action {
    let untapped = state.untapped_refs();
    let k = untapped.len();
    let threshold = state.staging_threat();
    // Enumeration only lists a reduced subset family beyond the full-commit
    // limit (or after truncation), so membership needs an explicit check
    // there; below it every qualifying subset is in the list by construction.
    let must_check = k > FULL_COMMIT_LIMIT || actions.len() >= MAX_ENUMERATED;
    if k > 0 {
        for _ in 0..COMMIT_REJECTION_CAP {
            let compact = rng.gen::<u64>() & ((1u64 << k) - 1);
            if compact == 0 {
                continue;
            }
            let mask = spread_mask(&untapped, compact);
            if mask_willpower(state, mask) <= threshold {
                continue;
            }
            let candidate = Action::CommitSubset { mask };
            if !must_check || actions.contains(&candidate) {
                return candidate;
            }
        }
    }
    Action::CommitSubset { mask: 0 }
}

fn random_defense(state: &GameState, actions: &[Action], rng: &mut impl Rng) -> Action {
    let mut available = state.untapped_refs();
    let mut assignment = Vec::with_capacity(state.engagement().len());
    for _ in 0..state.engagement().len() {
        if available.is_empty() {
            assignment.push(None);
        } else {
            let i = rng.gen_range(0..available.len());
            assignment.push(Some(available.swap_remove(i)));
        }
    }
    let candidate = Action::AssignDefenders { assignment };
    // A truncated product may be missing the sampled combination; the
    // all-undefended assignment heads the list and is always present.
    if actions.len() >= MAX_ENUMERATED && !actions.contains(&candidate) {
        return actions[0].clone();
    }
    candidate
}

/// Expert rule policy: one fixed rule per decision stage.
///
/// * Planning — buy the affordable card with the highest willpower (ties:
///   lower cost, then lower card id) using the canonical payment; end
///   planning when nothing is affordable.
/// * Commitment — the qualifying subset with the smallest total willpower
///   (ties: smallest mask); empty when none qualifies.
/// * Travel — the staged location with the highest threat (ties: lower id)
///   when no location is active; otherwise stay.
/// * Defense — enemies in descending attack order each get the untapped,
///   unused character with the lowest defense that survives the hit;
///   undefended when no candidate survives.
/// * Attack — against the strongest-attack enemy that can be killed, the
///   smallest attacker set (fewest characters, then lowest mask) whose total
///   attack meets defense plus remaining hitpoints; pass when nothing dies.
pub fn expert_choose(state: &GameState, actions: &[Action]) -> Action {
    debug_assert!(!actions.is_empty(), "expert_choose needs a non-empty action list");
    match state.stage() {
        StageId::Planning => expert_planning(state, actions),
        StageId::CommitCharacters => expert_commit(state, actions),
        StageId::Travel => expert_travel(state, actions),
        StageId::DeclareDefenders => expert_defense(state, actions),
        StageId::DeclareAttackers => expert_attack(state, actions),
        _ => actions[0].clone(),
    }
}

fn expert_planning(state: &GameState, actions: &[Action]) -> Action {
    let mut best: Option<DefId> = None;
    for action in actions {
        if let Action::PlayCard { card, .. } = action {
            let rank = |id: DefId| {
                let def = state.def(id);
                (def.willpower, Reverse(def.cost), Reverse(id))
            };
            if best.map_or(true, |b| rank(*card) > rank(b)) {
                best = Some(*card);
            }
        }
    }
    let Some(card) = best else {
        return Action::EndPlanning;
    };
    if let Some(payment) = canonical_payment(state, card) {
        let candidate = Action::PlayCard { card, payment };
        if actions.contains(&candidate) {
            return candidate;
        }
    }
    // Truncated enumeration can lack the canonical split; any listed split
    // for the chosen card will do.
    actions
        .iter()
        .find(|a| matches!(a, Action::PlayCard { card: c, .. } if *c == card))
        .cloned()
        .unwrap_or(Action::EndPlanning)
}

fn expert_commit(state: &GameState, actions: &[Action]) -> Action {
    let mut best: Option<(u32, u64)> = None;
    for action in actions {
        if let Action::CommitSubset { mask } = action {
            if *mask == 0 {
                continue;
            }
            let key = (mask_willpower(state, *mask), *mask);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
    }
    Action::CommitSubset { mask: best.map_or(0, |(_, mask)| mask) }
}

fn expert_travel(state: &GameState, actions: &[Action]) -> Action {
    let mut best: Option<DefId> = None;
    for action in actions {
        if let Action::TravelTo { location: Some(def) } = action {
            let rank = |id: DefId| (state.def(id).threat, Reverse(id));
            if best.map_or(true, |b| rank(*def) > rank(b)) {
                best = Some(*def);
            }
        }
    }
    Action::TravelTo { location: best }
}

fn expert_defense(state: &GameState, actions: &[Action]) -> Action {
    let enemies = state.engagement();
    let mut order: Vec<usize> = (0..enemies.len()).collect();
    order.sort_by_key(|&i| Reverse(state.def(enemies[i].def).attack));

    let mut assignment = vec![None; enemies.len()];
    let mut used = 0u64;
    for i in order {
        let attack = state.def(enemies[i].def).attack;
        let survivor = state
            .untapped_refs()
            .into_iter()
            .filter(|&r| used & (1 << r) == 0)
            .filter(|&r| {
                let defense = state.def(state.char_at(r).def).defense;
                attack_damage(attack, Some(defense)) < state.remaining_hitpoints(r)
            })
            .min_by_key(|&r| (state.def(state.char_at(r).def).defense, r));
        if let Some(r) = survivor {
            used |= 1 << r;
            assignment[i] = Some(r);
        }
    }
    let candidate = Action::AssignDefenders { assignment };
    if actions.len() >= MAX_ENUMERATED && !actions.contains(&candidate) {
        return actions[0].clone();
    }
    candidate
}

fn expert_attack(state: &GameState, actions: &[Action]) -> Action {
    let untapped = state.untapped_refs();
    let k = untapped.len();
    if k == 0 {
        return Action::Pass;
    }
    let attack_of = |r: u8| state.def(state.char_at(r).def).attack;

    let enemies = state.engagement();
    let mut order: Vec<usize> = (0..enemies.len()).collect();
    order.sort_by_key(|&i| Reverse(state.def(enemies[i].def).attack));

    for i in order {
        let enemy = &enemies[i];
        let remaining = state.enemy_remaining_hitpoints(enemy);
        if remaining == 0 {
            continue; // already dead, waiting for the refresh sweep
        }
        let needed = state.def(enemy.def).defense + remaining;
        let mask = if k <= FULL_COMMIT_LIMIT {
            // Exhaustive: smallest killing set by (size, mask).
            let mut best: Option<(u32, u64)> = None;
            for compact in 1u64..(1 << k) {
                let total: u32 = (0..k)
                    .filter(|&b| compact & (1 << b) != 0)
                    .map(|b| attack_of(untapped[b]))
                    .sum();
                if total >= needed {
                    let key = (compact.count_ones(), compact);
                    if best.map_or(true, |b| key < b) {
                        best = Some(key);
                    }
                }
            }
            best.map(|(_, compact)| spread_mask(&untapped, compact))
        } else {
            // Too wide to scan: greedily stack the hardest hitters.
            let mut by_attack = untapped.clone();
            by_attack.sort_by_key(|&r| (Reverse(attack_of(r)), r));
            let mut mask = 0u64;
            let mut total = 0u32;
            for &r in &by_attack {
                mask |= 1 << r;
                total += attack_of(r);
                if total >= needed {
                    break;
                }
            }
            (total >= needed).then_some(mask)
        };
        if let Some(attackers) = mask {
            let candidate = Action::DeclareAttack { enemy: i as u8, attackers };
            if (k <= FULL_COMMIT_LIMIT && actions.len() < MAX_ENUMERATED)
                || actions.contains(&candidate)
            {
                return candidate;
            }
        }
    }
    Action::Pass
}

/// Same decision `policy_choose` would make over `legal_actions(state)`, but
/// computed straight from the state whenever the enumerated list is provably
/// untruncated — which is the overwhelmingly common case. Rollouts run this
/// thousands of times per search decision, so skipping the enumeration (and
/// its subset blow-ups) is what keeps search budgets affordable. The rare
/// wide states fall back to the enumerating path, and randomness is consumed
/// in exactly the same pattern either way, so the two entry points are
/// interchangeable stream-for-stream.
pub fn playout_choose(policy: PolicyKind, state: &GameState, rng: &mut impl Rng) -> Action {
    let fast = match state.stage() {
        StageId::Planning => fast_planning(policy, state, rng),
        StageId::CommitCharacters => fast_commit(policy, state, rng),
        StageId::DeclareDefenders => fast_defense(policy, state, rng),
        StageId::DeclareAttackers => fast_attack(policy, state, rng),
        // Travel lists are a handful of entries; enumerating is already cheap.
        StageId::Travel => None,
        _ => None,
    };
    fast.unwrap_or_else(|| {
        let actions = crate::actions::legal_actions(state);
        policy_choose(policy, state, &actions, rng)
    })
}

/// Distinct ally cards in hand, ascending, with their canonical payment.
/// `None` when some card has several eligible payers: the enumeration then
/// lists every split and the uniform choice weights cards by split count,
/// which this shortcut cannot reproduce.
fn affordable_plays(state: &GameState) -> Option<Vec<(DefId, Vec<(u8, u32)>)>> {
    let mut cards: Vec<DefId> = state.hand().to_vec();
    cards.sort_unstable();
    cards.dedup();
    let mut plays = Vec::new();
    for card in cards {
        if state.def(card).kind != crate::cards::CardKind::Ally {
            continue;
        }
        let pools = crate::actions::payer_pools(state, card);
        if pools.len() > 1 {
            return None;
        }
        let cost = state.def(card).cost;
        match pools.first() {
            Some(&(slot, pool)) if pool >= cost => {
                let payment = if cost == 0 { Vec::new() } else { vec![(slot, cost)] };
                plays.push((card, payment));
            }
            None if cost == 0 => plays.push((card, Vec::new())),
            _ => {}
        }
    }
    Some(plays)
}

fn fast_planning(policy: PolicyKind, state: &GameState, rng: &mut impl Rng) -> Option<Action> {
    let plays = affordable_plays(state)?;
    match policy {
        PolicyKind::Expert => {
            let best = plays.into_iter().max_by_key(|&(card, _)| {
                let def = state.def(card);
                (def.willpower, Reverse(def.cost), Reverse(card))
            });
            Some(match best {
                Some((card, payment)) => Action::PlayCard { card, payment },
                None => Action::EndPlanning,
            })
        }
        PolicyKind::Random => {
            let i = rng.gen_range(0..plays.len() + 1);
            Some(match plays.into_iter().nth(i) {
                Some((card, payment)) => Action::PlayCard { card, payment },
                None => Action::EndPlanning,
            })
        }
    }
}

/// Minimal qualifying commitment by (total willpower, mask); 0 when nothing
/// beats the threshold. Knapsack over exact sums, keeping the lowest mask
/// that reaches each one — characters with zero willpower never help, so the
/// winner matches the scan over the full subset family.
fn minimal_commit_mask(state: &GameState) -> u64 {
    let untapped = state.untapped_refs();
    let threshold = state.staging_threat();
    let total: u32 =
        untapped.iter().map(|&r| state.def(state.char_at(r).def).willpower).sum();
    if total <= threshold {
        return 0;
    }
    let mut best_mask_for_sum: Vec<Option<u64>> = vec![None; total as usize + 1];
    best_mask_for_sum[0] = Some(0);
    for &r in &untapped {
        let wp = state.def(state.char_at(r).def).willpower as usize;
        if wp == 0 {
            continue;
        }
        for sum in (0..=total as usize - wp).rev() {
            if let Some(mask) = best_mask_for_sum[sum] {
                let extended = mask | (1 << r);
                let slot = &mut best_mask_for_sum[sum + wp];
                if slot.map_or(true, |m| extended < m) {
                    *slot = Some(extended);
                }
            }
        }
    }
    (threshold as usize + 1..=total as usize)
        .find_map(|sum| best_mask_for_sum[sum])
        .unwrap_or(0)
}

fn fast_commit(policy: PolicyKind, state: &GameState, rng: &mut impl Rng) -> Option<Action> {
    let untapped = state.untapped_refs();
    let k = untapped.len();
    // At 12 characters the full family reaches the enumeration cap and the
    // list-based paths start checking membership; defer to them.
    if k >= FULL_COMMIT_LIMIT {
        return None;
    }
    match policy {
        PolicyKind::Expert => Some(Action::CommitSubset { mask: minimal_commit_mask(state) }),
        PolicyKind::Random => {
            let threshold = state.staging_threat();
            if k > 0 {
                for _ in 0..COMMIT_REJECTION_CAP {
                    let compact = rng.gen::<u64>() & ((1u64 << k) - 1);
                    if compact == 0 {
                        continue;
                    }
                    let mask = spread_mask(&untapped, compact);
                    if mask_willpower(state, mask) > threshold {
                        return Some(Action::CommitSubset { mask });
                    }
                }
            }
            Some(Action::CommitSubset { mask: 0 })
        }
    }
}

/// Number of injective defender assignments (every enemy gets a distinct
/// untapped character or goes undefended), clamped to the enumeration cap.
fn defense_assignment_count(enemies: usize, untapped: usize) -> usize {
    // Sum over j of C(enemies, j) * untapped! / (untapped - j)!.
    let mut sum = 0usize;
    let mut term = 1usize; // j = 0
    for j in 0..=enemies.min(untapped) {
        if j > 0 {
            term = term
                .saturating_mul(enemies - j + 1)
                .saturating_mul(untapped - j + 1)
                / j;
        }
        sum = sum.saturating_add(term);
        if sum >= MAX_ENUMERATED {
            return MAX_ENUMERATED;
        }
    }
    sum
}

fn fast_defense(policy: PolicyKind, state: &GameState, rng: &mut impl Rng) -> Option<Action> {
    let enemies = state.engagement().len();
    let untapped = state.untapped_refs();
    if defense_assignment_count(enemies, untapped.len()) >= MAX_ENUMERATED {
        return None;
    }
    match policy {
        PolicyKind::Expert => {
            let mut order: Vec<usize> = (0..enemies).collect();
            order.sort_by_key(|&i| Reverse(state.def(state.engagement()[i].def).attack));
            let mut assignment = vec![None; enemies];
            let mut used = 0u64;
            for i in order {
                let attack = state.def(state.engagement()[i].def).attack;
                let survivor = untapped
                    .iter()
                    .copied()
                    .filter(|&r| used & (1 << r) == 0)
                    .filter(|&r| {
                        let defense = state.def(state.char_at(r).def).defense;
                        attack_damage(attack, Some(defense)) < state.remaining_hitpoints(r)
                    })
                    .min_by_key(|&r| (state.def(state.char_at(r).def).defense, r));
                if let Some(r) = survivor {
                    used |= 1 << r;
                    assignment[i] = Some(r);
                }
            }
            Some(Action::AssignDefenders { assignment })
        }
        PolicyKind::Random => {
            let mut available = untapped;
            let mut assignment = Vec::with_capacity(enemies);
            for _ in 0..enemies {
                if available.is_empty() {
                    assignment.push(None);
                } else {
                    let i = rng.gen_range(0..available.len());
                    assignment.push(Some(available.swap_remove(i)));
                }
            }
            Some(Action::AssignDefenders { assignment })
        }
    }
}

fn fast_attack(policy: PolicyKind, state: &GameState, rng: &mut impl Rng) -> Option<Action> {
    let untapped = state.untapped_refs();
    let k = untapped.len();
    let enemies = state.engagement().len();
    match policy {
        PolicyKind::Expert => {
            if k > FULL_COMMIT_LIMIT {
                return None; // greedy path wants the real list for its check
            }
            // The exhaustive candidate is trusted exactly when the list could
            // not have been truncated; otherwise an index bound against the
            // cut-off reproduces the membership test without materialising
            // anything.
            let per_enemy = if k == 0 { 0u64 } else { (1u64 << k) - 1 };
            let listed_pairs = (enemies as u64).saturating_mul(per_enemy);
            Some(expert_attack_direct(state, &untapped, |enemy, compact| {
                listed_pairs < MAX_ENUMERATED as u64 - 1
                    || enemy as u64 * per_enemy + compact - 1 < MAX_ENUMERATED as u64 - 1
            }))
        }
        PolicyKind::Random => {
            // per_enemy = 0 (no untapped attackers) degenerates to the lone
            // Pass entry, taking the same single draw the list path would.
            let per_enemy = (1u64 << k) - 1;
            let full = (enemies as u64).saturating_mul(per_enemy).saturating_add(1);
            let listed = full.min(MAX_ENUMERATED as u64);
            let i = rng.gen_range(0..listed);
            Some(if i == listed - 1 && (full > listed || i == full - 1) {
                Action::Pass
            } else {
                let enemy = (i / per_enemy) as u8;
                let compact = i % per_enemy + 1;
                Action::DeclareAttack { enemy, attackers: spread_mask(&untapped, compact) }
            })
        }
    }
}

/// The expert attack rule with the list membership test abstracted into a
/// predicate over (enemy index, compact subset id).
fn expert_attack_direct(
    state: &GameState,
    untapped: &[u8],
    listed: impl Fn(u8, u64) -> bool,
) -> Action {
    let k = untapped.len();
    if k == 0 {
        return Action::Pass;
    }
    let attack_of = |r: u8| state.def(state.char_at(r).def).attack;
    let enemies = state.engagement();
    let mut order: Vec<usize> = (0..enemies.len()).collect();
    order.sort_by_key(|&i| Reverse(state.def(enemies[i].def).attack));
    for i in order {
        let enemy = &enemies[i];
        let remaining = state.enemy_remaining_hitpoints(enemy);
        if remaining == 0 {
            continue;
        }
        let needed = state.def(enemy.def).defense + remaining;
        let mut best: Option<(u32, u64)> = None;
        for compact in 1u64..(1 << k) {
            let total: u32 = (0..k)
                .filter(|&b| compact & (1 << b) != 0)
                .map(|b| attack_of(untapped[b]))
                .sum();
            if total >= needed {
                let key = (compact.count_ones(), compact);
                if best.map_or(true, |b| key < b) {
                    best = Some(key);
                }
            }
        }
        if let Some((_, compact)) = best {
            if listed(i as u8, compact) {
                return Action::DeclareAttack {
                    enemy: i as u8,
                    attackers: spread_mask(untapped, compact),
                };
            }
        }
    }
    Action::Pass
}
