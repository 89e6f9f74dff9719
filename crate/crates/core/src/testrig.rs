//! Hand-built scenarios for unit tests. Bypasses the deck-shape validation so
//! tests can set up tiny, fully controlled tables.

use std::sync::Arc;

use crate::cards::{load_card_library, DefId, Difficulty, Scenario};

/// Builds a scenario straight from card text and explicit deck lists.
pub(crate) fn scenario_from(
    cards: &str,
    heroes: [&str; 3],
    player_deck: &[&str],
    encounter_deck: &[&str],
    pre_staged: &[&str],
    quest_target: u32,
) -> Arc<Scenario> {
    let library = load_card_library(cards).expect("test card text parses");
    let table: Vec<_> = library.iter().cloned().collect();
    let find = |id: &str| {
        let index = table
            .iter()
            .position(|def| def.id == id)
            .unwrap_or_else(|| panic!("unknown test card {id}"));
        DefId(index as u16)
    };
    Arc::new(Scenario {
        difficulty: Difficulty::Medium,
        quest_target,
        heroes: [find(heroes[0]), find(heroes[1]), find(heroes[2])],
        player_deck: player_deck.iter().map(|s| find(s)).collect(),
        encounter_deck: encounter_deck.iter().map(|s| find(s)).collect(),
        pre_staged: pre_staged.iter().map(|s| find(s)).collect(),
        cards: table,
    })
}
