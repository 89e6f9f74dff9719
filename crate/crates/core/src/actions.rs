//! Legal action enumeration and the expert expansion filter.
//!
//! Every decision stage exposes a finite action list in a fixed, deterministic
//! order: actions sort first by their variant's declaration position in
//! [`Action`], then by the variant-specific tiebreaks documented on
//! [`legal_actions`]. Search relies on this ordering (first-untried expansion,
//! first-index tie breaks), so it is part of the module contract, not an
//! implementation detail.
//!
//! Pathologically wide decisions (large commit or defense products) are
//! truncated at [`MAX_ENUMERATED`] entries, always keeping the stage's
//! do-nothing action so play can proceed.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt;

use crate::cards::{CardKind, DefId};
use crate::engine::{attack_damage, GameState, StageId, StagingCard};

/// Upper bound on the number of actions a single enumeration may return.
pub const MAX_ENUMERATED: usize = 4096;

/// Beyond this many untapped characters, commit enumeration switches from all
/// qualifying subsets (exponential) to the reduced form described on
/// [`legal_actions`].
pub(crate) const FULL_COMMIT_LIMIT: usize = 12;

/// One player decision. Variant declaration order doubles as the primary
/// enumeration sort key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    /// Play an ally from hand. `payment` lists `(hero_slot, amount)` pairs,
    /// ascending by slot, positive amounts only, summing to the card's cost.
    PlayCard { card: DefId, payment: Vec<(u8, u32)> },
    EndPlanning,
    /// Commit the characters in `mask` (canonical character-order bits) to
    /// the quest. The empty mask commits nobody.
    CommitSubset { mask: u64 },
    /// Travel to a staged location, or `None` to stay.
    TravelTo { location: Option<DefId> },
    /// One defender choice per engaged enemy, in engagement order; `None`
    /// leaves that enemy's attack undefended.
    AssignDefenders { assignment: Vec<Option<u8>> },
    /// Send the `attackers` (canonical character-order bits) against one
    /// engaged enemy. Resolves immediately; the stage continues.
    DeclareAttack { enemy: u8, attackers: u64 },
    /// Stop declaring attacks.
    Pass,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::PlayCard { card, payment } => {
                let pay: Vec<String> =
                    payment.iter().map(|(slot, amt)| format!("{slot}:{amt}")).collect();
                write!(f, "play #{} [{}]", card.0, pay.join(","))
            }
            Action::EndPlanning => f.write_str("end planning"),
            Action::CommitSubset { mask } => write!(f, "commit {mask:#b}"),
            Action::TravelTo { location: None } => f.write_str("stay"),
            Action::TravelTo { location: Some(def) } => write!(f, "travel to #{}", def.0),
            Action::AssignDefenders { assignment } => {
                let entries: Vec<String> = assignment
                    .iter()
                    .map(|e| match e {
                        Some(r) => r.to_string(),
                        None => "-".to_owned(),
                    })
                    .collect();
                write!(f, "defend [{}]", entries.join(","))
            }
            Action::DeclareAttack { enemy, attackers } => {
                write!(f, "attack enemy {enemy} with {attackers:#b}")
            }
            Action::Pass => f.write_str("pass"),
        }
    }
}

/// Enumerates every legal action at the current decision stage, in canonical
/// order. Returns an empty list at non-decision stages.
///
/// * Planning — `PlayCard` for each distinct affordable ally in hand (card
///   ids ascending), one action per payment split. Splits range over
///   per-hero amounts from matching-sphere heroes, in ascending lexicographic
///   order of the amount vector. `EndPlanning` closes the list.
/// * Commit — `CommitSubset` masks in ascending numeric order: the empty
///   mask, then every untapped subset whose willpower exceeds the staging
///   threat. With more than [`FULL_COMMIT_LIMIT`](MAX_ENUMERATED) untapped
///   characters only subsets whose highest member is necessary to clear the
///   threshold are kept (still ascending).
/// * Travel — `TravelTo(None)` first, then each distinct staged location
///   (ids ascending) while no location is active.
/// * Defense — the full defender product in lexicographic order, `None`
///   before candidates, candidates ascending, no character reused. The
///   all-undefended assignment comes first.
/// * Attack — `DeclareAttack` for every (enemy index ascending, non-empty
///   untapped attacker mask ascending) pair, then `Pass`.
pub fn legal_actions(state: &GameState) -> Vec<Action> {
    match state.stage() {
        StageId::Planning => planning_actions(state),
        StageId::CommitCharacters => commit_actions(state),
        StageId::Travel => travel_actions(state),
        StageId::DeclareDefenders => defender_actions(state),
        StageId::DeclareAttackers => attack_actions(state),
        _ => Vec::new(),
    }
}

/// Eligible payer slots and their pools for a card: heroes whose sphere
/// matches, in slot order.
pub(crate) fn payer_pools(state: &GameState, card: DefId) -> Vec<(u8, u32)> {
    let sphere = state.def(card).sphere;
    state
        .heroes()
        .iter()
        .enumerate()
        .filter(|(_, h)| state.def(h.def).sphere == sphere)
        .map(|(slot, h)| (slot as u8, h.resources))
        .collect()
}

fn planning_actions(state: &GameState) -> Vec<Action> {
    let mut out = Vec::new();
    let mut cards: Vec<DefId> = state.hand().to_vec();
    cards.sort_unstable();
    cards.dedup();
    for card in cards {
        if state.def(card).kind != CardKind::Ally {
            continue;
        }
        let pools = payer_pools(state, card);
        let mut amounts = vec![0u32; pools.len()];
        splits(&pools, 0, state.def(card).cost, &mut amounts, &mut |payment| {
            if out.len() < MAX_ENUMERATED - 1 {
                out.push(Action::PlayCard { card, payment });
            }
        });
        if out.len() >= MAX_ENUMERATED - 1 {
            break;
        }
    }
    out.push(Action::EndPlanning);
    out
}

/// Walks payment splits in ascending lexicographic order of the per-slot
/// amount vector, reporting each complete split as `(slot, amount)` pairs
/// with the zero entries dropped.
fn splits(
    pools: &[(u8, u32)],
    i: usize,
    remaining: u32,
    amounts: &mut Vec<u32>,
    emit: &mut impl FnMut(Vec<(u8, u32)>),
) {
    if i == pools.len() {
        if remaining == 0 {
            let payment = pools
                .iter()
                .zip(amounts.iter())
                .filter(|(_, &a)| a > 0)
                .map(|(&(slot, _), &a)| (slot, a))
                .collect();
            emit(payment);
        }
        return;
    }
    let cap = pools[i].1.min(remaining);
    for a in 0..=cap {
        amounts[i] = a;
        splits(pools, i + 1, remaining - a, amounts, emit);
    }
    amounts[i] = 0;
}

/// Canonical-order mask for the characters selected by `compact` bits over
/// the `untapped` list. Monotone: larger compact values map to larger masks.
pub(crate) fn spread_mask(untapped: &[u8], compact: u64) -> u64 {
    let mut mask = 0;
    for (i, &r) in untapped.iter().enumerate() {
        if compact & (1 << i) != 0 {
            mask |= 1 << r;
        }
    }
    mask
}

/// Total willpower of the characters selected by a canonical mask.
pub(crate) fn mask_willpower(state: &GameState, mask: u64) -> u32 {
    (0..state.char_count() as u8)
        .filter(|&r| mask & (1 << r) != 0)
        .map(|r| state.def(state.char_at(r).def).willpower)
        .sum()
}

fn commit_actions(state: &GameState) -> Vec<Action> {
    let untapped = state.untapped_refs();
    let threshold = state.staging_threat();
    let wp: Vec<u32> =
        untapped.iter().map(|&r| state.def(state.char_at(r).def).willpower).collect();
    let k = untapped.len();
    let mut out = Vec::new();
    if k <= FULL_COMMIT_LIMIT {
        for compact in 0u64..(1 << k) {
            if out.len() >= MAX_ENUMERATED {
                break;
            }
            if compact != 0 {
                let total: u32 =
                    (0..k).filter(|&i| compact & (1 << i) != 0).map(|i| wp[i]).sum();
                if total <= threshold {
                    continue;
                }
            }
            out.push(Action::CommitSubset { mask: spread_mask(&untapped, compact) });
        }
    } else {
        out.push(Action::CommitSubset { mask: 0 });
        let mut masks = Vec::new();
        necessary_top_subsets(&untapped, &wp, threshold, 0, 0, 0, &mut masks);
        masks.sort_unstable();
        masks.truncate(MAX_ENUMERATED - 1);
        out.extend(masks.into_iter().map(|mask| Action::CommitSubset { mask }));
    }
    out
}

/// Collects masks that clear the willpower threshold but would not without
/// their highest-indexed member. Such subsets are the frontier of the
/// monotone "qualifies" predicate along index order; everything larger merely
/// restates one of them plus dead weight.
fn necessary_top_subsets(
    untapped: &[u8],
    wp: &[u32],
    threshold: u32,
    start: usize,
    mask: u64,
    total: u32,
    out: &mut Vec<u64>,
) {
    for i in start..untapped.len() {
        if out.len() >= MAX_ENUMERATED {
            return;
        }
        let extended = mask | (1 << untapped[i]);
        let raised = total + wp[i];
        if raised > threshold {
            out.push(extended);
        } else {
            necessary_top_subsets(untapped, wp, threshold, i + 1, extended, raised, out);
        }
    }
}

fn travel_actions(state: &GameState) -> Vec<Action> {
    let mut out = vec![Action::TravelTo { location: None }];
    if state.active_location().is_none() {
        let mut locations: Vec<DefId> = state
            .staging()
            .iter()
            .filter_map(|card| match card {
                StagingCard::Location(l) => Some(l.def),
                _ => None,
            })
            .collect();
        locations.sort_unstable();
        locations.dedup();
        out.extend(locations.into_iter().map(|def| Action::TravelTo { location: Some(def) }));
    }
    out
}

fn defender_actions(state: &GameState) -> Vec<Action> {
    let untapped = state.untapped_refs();
    let enemies = state.engagement().len();
    let mut out = Vec::new();
    let mut assignment = Vec::with_capacity(enemies);
    let mut used = 0u64;
    assignment_product(&untapped, enemies, &mut assignment, &mut used, &mut out);
    out
}

fn assignment_product(
    untapped: &[u8],
    enemies: usize,
    assignment: &mut Vec<Option<u8>>,
    used: &mut u64,
    out: &mut Vec<Action>,
) {
    if out.len() >= MAX_ENUMERATED {
        return;
    }
    if assignment.len() == enemies {
        out.push(Action::AssignDefenders { assignment: assignment.clone() });
        return;
    }
    assignment.push(None);
    assignment_product(untapped, enemies, assignment, used, out);
    assignment.pop();
    for &r in untapped {
        if out.len() >= MAX_ENUMERATED {
            return; // unwind instead of walking the rest of the capped tree
        }
        if *used & (1 << r) != 0 {
            continue;
        }
        *used |= 1 << r;
        assignment.push(Some(r));
        assignment_product(untapped, enemies, assignment, used, out);
        assignment.pop();
        *used &= !(1 << r);
    }
}

fn attack_actions(state: &GameState) -> Vec<Action> {
    let untapped = state.untapped_refs();
    let k = untapped.len();
    let mut out = Vec::new();
    'enemies: for enemy in 0..state.engagement().len() as u8 {
        for compact in 1u64..(1 << k) {
            if out.len() >= MAX_ENUMERATED - 1 {
                break 'enemies;
            }
            out.push(Action::DeclareAttack {
                enemy,
                attackers: spread_mask(&untapped, compact),
            });
        }
    }
    out.push(Action::Pass);
    out
}

/// The one payment the expert would make for a card: drain the
/// matching-sphere hero with the largest pool first (lowest slot on ties),
/// then the next, until the cost is covered. `None` when unaffordable.
/// Entries come back sorted by slot, matching the enumeration format.
pub fn canonical_payment(state: &GameState, card: DefId) -> Option<Vec<(u8, u32)>> {
    let mut pools = payer_pools(state, card);
    let mut remaining = state.def(card).cost;
    let mut payment = Vec::new();
    while remaining > 0 {
        let best = pools.iter_mut().filter(|p| p.1 > 0).max_by_key(|p| (p.1, Reverse(p.0)))?;
        let take = remaining.min(best.1);
        payment.push((best.0, take));
        best.1 = 0;
        remaining -= take;
    }
    payment.sort_unstable_by_key(|&(slot, _)| slot);
    Some(payment)
}

/// Prunes an action list down to the moves the expert rules consider worth a
/// look. Order is preserved and the stage's do-nothing action always
/// survives, so the result is never empty.
///
/// * Planning — keeps one `PlayCard` per card: the canonical payment split.
/// * Commit — keeps the empty commitment and minimal qualifying subsets
///   (dropping any character would fall to or below the staging threat).
/// * Defense — drops assignments that chump-block: a declared defender must
///   survive the hit unless no untapped character could.
/// * Travel and attack declarations pass through unchanged.
pub fn expert_expansion_filter(state: &GameState, actions: Vec<Action>) -> Vec<Action> {
    match state.stage() {
        StageId::Planning => {
            let mut canonical: BTreeMap<DefId, Option<Vec<(u8, u32)>>> = BTreeMap::new();
            actions
                .into_iter()
                .filter(|action| match action {
                    Action::PlayCard { card, payment } => {
                        let entry = canonical
                            .entry(*card)
                            .or_insert_with(|| canonical_payment(state, *card));
                        entry.as_ref() == Some(payment)
                    }
                    _ => true,
                })
                .collect()
        }
        StageId::CommitCharacters => {
            // Minimal qualifying subsets first (preferred expansion order),
            // the empty commitment as a last resort.
            let threshold = state.staging_threat();
            let mut kept = Vec::new();
            let mut fallback = None;
            for action in actions {
                match action {
                    Action::CommitSubset { mask: 0 } => fallback = Some(action),
                    Action::CommitSubset { mask } => {
                        let total = mask_willpower(state, mask);
                        let minimal = total > threshold
                            && (0..state.char_count() as u8)
                                .filter(|&r| mask & (1 << r) != 0)
                                .all(|r| {
                                    let wp = state.def(state.char_at(r).def).willpower;
                                    total - wp <= threshold
                                });
                        if minimal {
                            kept.push(action);
                        }
                    }
                    _ => kept.push(action),
                }
            }
            kept.extend(fallback);
            kept
        }
        StageId::DeclareDefenders => {
            let untapped = state.untapped_refs();
            let survivable: Vec<(u32, bool)> = state
                .engagement()
                .iter()
                .map(|enemy| {
                    let attack = state.def(enemy.def).attack;
                    let someone_survives = untapped.iter().any(|&r| {
                        let defense = state.def(state.char_at(r).def).defense;
                        attack_damage(attack, Some(defense)) < state.remaining_hitpoints(r)
                    });
                    (attack, someone_survives)
                })
                .collect();
            actions
                .into_iter()
                .filter(|action| match action {
                    Action::AssignDefenders { assignment } => {
                        assignment.iter().zip(&survivable).all(|(entry, &(attack, any))| {
                            match entry {
                                None => true,
                                Some(r) => {
                                    let defense = state.def(state.char_at(*r).def).defense;
                                    attack_damage(attack, Some(defense))
                                        < state.remaining_hitpoints(*r)
                                        || !any
                                }
                            }
                        })
                    }
                    _ => true,
                })
                .collect()
        }
        _ => actions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{init_game, EnemyInPlay, LocationInPlay, StageId};
    use crate::testrig::scenario_from;

    const CARDS: &str = "\
id=hero_one
kind=Hero
sphere=Spirit
threat_cost=9
willpower=2
attack=1
defense=2
hitpoints=4

id=hero_two
kind=Hero
sphere=Spirit
threat_cost=10
willpower=1
attack=2
defense=1
hitpoints=4

id=hero_three
kind=Hero
sphere=Lore
threat_cost=11
willpower=2
attack=1
defense=0
hitpoints=3

id=ally_pair
kind=Ally
sphere=Spirit
cost=2
willpower=1
attack=1
defense=0
hitpoints=1

id=ally_solo
kind=Ally
sphere=Lore
cost=1
willpower=2
attack=0
defense=1
hitpoints=2

id=bug
kind=Enemy
engagement_cost=20
threat=1
attack=1
defense=0
hitpoints=1

id=brute
kind=Enemy
engagement_cost=25
threat=2
attack=3
defense=1
hitpoints=5

id=glade
kind=Location
threat=1
quest_points=2

id=ruin
kind=Location
threat=2
quest_points=3
";

    fn small_state(stage: StageId) -> crate::engine::GameState {
        let scenario = scenario_from(
            CARDS,
            ["hero_one", "hero_two", "hero_three"],
            &["ally_pair", "ally_solo"],
            &["bug", "brute", "glade", "ruin"],
            &[],
            8,
        );
        let mut state = init_game(scenario, 1);
        state.hand.clear();
        state.player_deck.clear();
        state.stage = stage;
        state
    }

    #[test]
    fn planning_enumerates_split_payments_in_lex_order() {
        let mut state = small_state(StageId::Planning);
        let pair = state.scenario().find("ally_pair").unwrap();
        state.hand = vec![pair, pair]; // duplicates collapse to one card id
        state.heroes[0].resources = 2;
        state.heroes[1].resources = 2;
        let actions = legal_actions(&state);
        assert_eq!(
            actions,
            vec![
                Action::PlayCard { card: pair, payment: vec![(1, 2)] },
                Action::PlayCard { card: pair, payment: vec![(0, 1), (1, 1)] },
                Action::PlayCard { card: pair, payment: vec![(0, 2)] },
                Action::EndPlanning,
            ]
        );
    }

    #[test]
    fn planning_orders_cards_by_id_and_skips_unaffordable_ones() {
        let mut state = small_state(StageId::Planning);
        let pair = state.scenario().find("ally_pair").unwrap();
        let solo = state.scenario().find("ally_solo").unwrap();
        state.hand = vec![solo, pair];
        state.heroes[2].resources = 1; // lore hero can pay for ally_solo only
        let actions = legal_actions(&state);
        // ally_pair sorts before ally_solo but no spirit hero has resources.
        assert_eq!(
            actions,
            vec![
                Action::PlayCard { card: solo, payment: vec![(2, 1)] },
                Action::EndPlanning,
            ]
        );
    }

    #[test]
    fn commit_subsets_match_a_brute_force_oracle() {
        let mut state = small_state(StageId::CommitCharacters);
        let glade = state.scenario().find("glade").unwrap();
        let ruin = state.scenario().find("ruin").unwrap();
        state.staging.push(StagingCard::Location(LocationInPlay { def: glade, progress: 0 }));
        state.staging.push(StagingCard::Location(LocationInPlay { def: ruin, progress: 0 }));
        state.heroes[1].tapped = true;
        let threshold = state.staging_threat();
        assert_eq!(threshold, 3);

        let mut expected = Vec::new();
        for mask in 0u64..(1 << state.char_count()) {
            let untapped_only = (0..state.char_count() as u8)
                .all(|r| mask & (1 << r) == 0 || !state.char_at(r).tapped);
            let qualifies = mask == 0 || mask_willpower(&state, mask) > threshold;
            if untapped_only && qualifies {
                expected.push(Action::CommitSubset { mask });
            }
        }
        // hero_one (2) + hero_three (2) is the only subset beating 3.
        assert_eq!(
            expected,
            vec![
                Action::CommitSubset { mask: 0 },
                Action::CommitSubset { mask: 0b101 },
            ]
        );
        assert_eq!(legal_actions(&state), expected);
    }

    #[test]
    fn commit_masks_come_out_in_ascending_order() {
        let state = small_state(StageId::CommitCharacters);
        let masks: Vec<u64> = legal_actions(&state)
            .into_iter()
            .map(|a| match a {
                Action::CommitSubset { mask } => mask,
                other => panic!("unexpected action {other}"),
            })
            .collect();
        assert!(masks.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(masks[0], 0);
    }

    #[test]
    fn travel_lists_stay_first_then_distinct_locations_ascending() {
        let mut state = small_state(StageId::Travel);
        let glade = state.scenario().find("glade").unwrap();
        let ruin = state.scenario().find("ruin").unwrap();
        let bug = state.scenario().find("bug").unwrap();
        state.staging.push(StagingCard::Location(LocationInPlay { def: ruin, progress: 0 }));
        state.staging.push(StagingCard::Enemy(EnemyInPlay { def: bug, damage: 0 }));
        state.staging.push(StagingCard::Location(LocationInPlay { def: glade, progress: 0 }));
        state.staging.push(StagingCard::Location(LocationInPlay { def: ruin, progress: 0 }));
        assert_eq!(
            legal_actions(&state),
            vec![
                Action::TravelTo { location: None },
                Action::TravelTo { location: Some(glade) },
                Action::TravelTo { location: Some(ruin) },
            ]
        );
        state.active_location = Some(LocationInPlay { def: glade, progress: 0 });
        assert_eq!(legal_actions(&state), vec![Action::TravelTo { location: None }]);
    }

    #[test]
    fn defender_product_counts_and_starts_all_undefended() {
        let mut state = small_state(StageId::DeclareDefenders);
        let bug = state.scenario().find("bug").unwrap();
        let brute = state.scenario().find("brute").unwrap();
        state.engagement.push(EnemyInPlay { def: bug, damage: 0 });
        state.engagement.push(EnemyInPlay { def: brute, damage: 0 });
        let actions = legal_actions(&state);
        // 2 enemies, 3 untapped characters, no reuse:
        // sum over j defenders of C(2,j) * P(3,j) = 1 + 6 + 6 = 13.
        assert_eq!(actions.len(), 13);
        assert_eq!(actions[0], Action::AssignDefenders { assignment: vec![None, None] });
        assert_eq!(actions[1], Action::AssignDefenders { assignment: vec![None, Some(0)] });
        // No assignment uses a character twice.
        for action in &actions {
            let Action::AssignDefenders { assignment } = action else {
                panic!("unexpected action {action}")
            };
            let mut seen = 0u64;
            for r in assignment.iter().flatten() {
                assert_eq!(seen & (1 << r), 0, "reused defender in {action}");
                seen |= 1 << r;
            }
        }
    }

    #[test]
    fn attack_enumeration_orders_by_enemy_then_mask_and_ends_with_pass() {
        let mut state = small_state(StageId::DeclareAttackers);
        let bug = state.scenario().find("bug").unwrap();
        let brute = state.scenario().find("brute").unwrap();
        state.engagement.push(EnemyInPlay { def: bug, damage: 0 });
        state.engagement.push(EnemyInPlay { def: brute, damage: 0 });
        state.heroes[2].tapped = true; // two untapped characters remain
        let actions = legal_actions(&state);
        assert_eq!(
            actions,
            vec![
                Action::DeclareAttack { enemy: 0, attackers: 0b01 },
                Action::DeclareAttack { enemy: 0, attackers: 0b10 },
                Action::DeclareAttack { enemy: 0, attackers: 0b11 },
                Action::DeclareAttack { enemy: 1, attackers: 0b01 },
                Action::DeclareAttack { enemy: 1, attackers: 0b10 },
                Action::DeclareAttack { enemy: 1, attackers: 0b11 },
                Action::Pass,
            ]
        );
    }

    #[test]
    fn pass_survives_even_when_attack_enumeration_is_truncated() {
        let mut state = small_state(StageId::DeclareAttackers);
        let bug = state.scenario().find("bug").unwrap();
        for _ in 0..3 {
            state.engagement.push(EnemyInPlay { def: bug, damage: 0 });
        }
        let scout = state.scenario().find("ally_pair").unwrap();
        for _ in 0..11 {
            state.allies.push(crate::engine::CharacterInPlay {
                def: scout,
                damage: 0,
                tapped: false,
                committed: false,
                resources: 0,
            });
        }
        // 14 untapped characters: 3 * (2^14 - 1) pairs overflow the cap.
        let actions = legal_actions(&state);
        assert_eq!(actions.len(), MAX_ENUMERATED);
        assert_eq!(*actions.last().unwrap(), Action::Pass);
    }

    #[test]
    fn wide_commit_keeps_only_necessary_top_subsets() {
        let mut state = small_state(StageId::CommitCharacters);
        let glade = state.scenario().find("glade").unwrap();
        state.staging.push(StagingCard::Location(LocationInPlay { def: glade, progress: 0 }));
        let pair = state.scenario().find("ally_pair").unwrap(); // willpower 1
        for _ in 0..10 {
            state.allies.push(crate::engine::CharacterInPlay {
                def: pair,
                damage: 0,
                tapped: false,
                committed: false,
                resources: 0,
            });
        }
        assert_eq!(state.char_count(), 13);
        let threshold = state.staging_threat();
        let actions = legal_actions(&state);

        // Oracle: empty, plus subsets that qualify but would not without
        // their highest member, enumerated the slow way.
        let mut expected = vec![0u64];
        for mask in 1u64..(1 << 13) {
            let total = mask_willpower(&state, mask);
            let top = 63 - mask.leading_zeros() as u8;
            let top_wp = state.def(state.char_at(top).def).willpower;
            if total > threshold && total - top_wp <= threshold {
                expected.push(mask);
            }
        }
        let masks: Vec<u64> = actions
            .iter()
            .map(|a| match a {
                Action::CommitSubset { mask } => *mask,
                other => panic!("unexpected action {other}"),
            })
            .collect();
        assert_eq!(masks, expected);
        assert!(masks.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn canonical_payment_drains_the_largest_pool_first() {
        let mut state = small_state(StageId::Planning);
        let pair = state.scenario().find("ally_pair").unwrap();
        state.heroes[0].resources = 1;
        state.heroes[1].resources = 3;
        assert_eq!(canonical_payment(&state, pair), Some(vec![(1, 2)]));
        state.heroes[1].resources = 1;
        // Equal pools of 1: the lower slot breaks the tie, then the rest
        // comes from the next pool; entries sort by slot.
        assert_eq!(canonical_payment(&state, pair), Some(vec![(0, 1), (1, 1)]));
        state.heroes[0].resources = 0;
        assert_eq!(canonical_payment(&state, pair), None);
    }

    #[test]
    fn filter_keeps_one_canonical_split_per_card() {
        let mut state = small_state(StageId::Planning);
        let pair = state.scenario().find("ally_pair").unwrap();
        state.hand = vec![pair];
        state.heroes[0].resources = 2;
        state.heroes[1].resources = 2;
        let filtered = expert_expansion_filter(&state, legal_actions(&state));
        assert_eq!(
            filtered,
            vec![
                Action::PlayCard { card: pair, payment: vec![(0, 2)] },
                Action::EndPlanning,
            ]
        );
    }

    #[test]
    fn filter_commit_keeps_empty_and_minimal_subsets_only() {
        let mut state = small_state(StageId::CommitCharacters);
        let glade = state.scenario().find("glade").unwrap(); // threat 1
        state.staging.push(StagingCard::Location(LocationInPlay { def: glade, progress: 0 }));
        let threshold = state.staging_threat();
        let actions = legal_actions(&state);
        let filtered = expert_expansion_filter(&state, actions.clone());

        // Oracle: minimality by single removal, checked exhaustively.
        let expected: Vec<Action> = actions
            .into_iter()
            .filter(|a| {
                let Action::CommitSubset { mask } = a else { return true };
                if *mask == 0 {
                    return true;
                }
                let total = mask_willpower(&state, *mask);
                (0..state.char_count() as u8)
                    .filter(|&r| mask & (1 << r) != 0)
                    .all(|r| {
                        total - state.def(state.char_at(r).def).willpower <= threshold
                    })
            })
            .collect();
        assert_eq!(filtered, expected);
        // Spot check: both heroes with willpower 2 alone are minimal, the
        // pair of them (total 4) is not.
        assert!(filtered.contains(&Action::CommitSubset { mask: 0b001 }));
        assert!(filtered.contains(&Action::CommitSubset { mask: 0b100 }));
        assert!(!filtered.contains(&Action::CommitSubset { mask: 0b101 }));
    }

    #[test]
    fn filter_defense_drops_chump_blocks_when_a_survivor_exists() {
        let mut state = small_state(StageId::DeclareDefenders);
        let brute = state.scenario().find("brute").unwrap(); // attack 3
        state.engagement.push(EnemyInPlay { def: brute, damage: 0 });
        let filtered = expert_expansion_filter(&state, legal_actions(&state));
        // hero_one (defense 2, hitpoints 4) survives: 3 - 2 = 1 < 4.
        // hero_two takes 3 - 1 = 2 < 4: survives. hero_three takes 3 - 0 = 3
        // against 3 hitpoints: dies, so defending with it is pruned.
        assert_eq!(
            filtered,
            vec![
                Action::AssignDefenders { assignment: vec![None] },
                Action::AssignDefenders { assignment: vec![Some(0)] },
                Action::AssignDefenders { assignment: vec![Some(1)] },
            ]
        );
    }

    #[test]
    fn filter_defense_allows_chumps_when_nobody_survives() {
        let mut state = small_state(StageId::DeclareDefenders);
        let brute = state.scenario().find("brute").unwrap(); // attack 3
        state.engagement.push(EnemyInPlay { def: brute, damage: 0 });
        state.heroes[0].damage = 3; // 1 hitpoint left: 1 damage kills
        state.heroes[1].damage = 3;
        state.heroes[2].damage = 2;
        let actions = legal_actions(&state);
        let filtered = expert_expansion_filter(&state, actions.clone());
        assert_eq!(filtered, actions);
    }

    #[test]
    fn filter_output_is_never_empty_on_legal_input() {
        for stage in [
            StageId::Planning,
            StageId::CommitCharacters,
            StageId::Travel,
            StageId::DeclareDefenders,
            StageId::DeclareAttackers,
        ] {
            let state = small_state(stage);
            let filtered = expert_expansion_filter(&state, legal_actions(&state));
            assert!(!filtered.is_empty(), "empty filter output at {stage}");
        }
    }

    #[test]
    fn every_enumerated_action_is_accepted_by_the_engine() {
        for stage in [
            StageId::Planning,
            StageId::CommitCharacters,
            StageId::Travel,
            StageId::DeclareDefenders,
            StageId::DeclareAttackers,
        ] {
            let mut state = small_state(stage);
            let pair = state.scenario().find("ally_pair").unwrap();
            let bug = state.scenario().find("bug").unwrap();
            let ruin = state.scenario().find("ruin").unwrap();
            state.hand = vec![pair];
            state.heroes[0].resources = 2;
            state.engagement.push(EnemyInPlay { def: bug, damage: 0 });
            state.staging.push(StagingCard::Location(LocationInPlay { def: ruin, progress: 0 }));
            for action in legal_actions(&state) {
                let mut probe = state.clone();
                probe
                    .step(Some(&action))
                    .unwrap_or_else(|e| panic!("enumerated action rejected at {stage}: {e}"));
            }
        }
    }
}
