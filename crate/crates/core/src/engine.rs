//! Game state and the thirteen-stage round state machine.
//!
//! A round walks the stage cursor through resource collection, drawing,
//! planning, quest commitment, the encounter reveal, quest resolution,
//! travel, the engagement check, both combat halves and refresh. Five stages
//! are decision stages and expect an [`Action`]; the rest advance on
//! [`GameState::step`] with no action. The resource stage grants tokens and
//! immediately performs the draw, so the cursor never rests on
//! [`StageId::Draw`].
//!
//! States own their RNG stream: cloning a state forks the stream, and two
//! clones evolve identically when stepped identically.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::actions::Action;
use crate::cards::{CardDef, CardKind, DefId, Scenario};

/// The game is lost the moment the threat level reaches this value.
pub const THREAT_LIMIT: u32 = 50;

/// Cards drawn during setup.
pub const OPENING_HAND: usize = 6;

/// The thirteen stages of a round, in play order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageId {
    Resource,
    Draw,
    Planning,
    CommitCharacters,
    StagingReveal,
    QuestResolution,
    Travel,
    EncounterCheck,
    DeclareDefenders,
    ResolveEnemyAttacks,
    DeclareAttackers,
    ResolvePlayerAttacks,
    Refresh,
}

impl StageId {
    /// Decision stages rest the cursor and wait for a player action.
    pub fn is_decision(self) -> bool {
        matches!(
            self,
            StageId::Planning
                | StageId::CommitCharacters
                | StageId::Travel
                | StageId::DeclareDefenders
                | StageId::DeclareAttackers
        )
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StageId::Resource => "Resource",
            StageId::Draw => "Draw",
            StageId::Planning => "Planning",
            StageId::CommitCharacters => "CommitCharacters",
            StageId::StagingReveal => "StagingReveal",
            StageId::QuestResolution => "QuestResolution",
            StageId::Travel => "Travel",
            StageId::EncounterCheck => "EncounterCheck",
            StageId::DeclareDefenders => "DeclareDefenders",
            StageId::ResolveEnemyAttacks => "ResolveEnemyAttacks",
            StageId::DeclareAttackers => "DeclareAttackers",
            StageId::ResolvePlayerAttacks => "ResolvePlayerAttacks",
            StageId::Refresh => "Refresh",
        };
        f.write_str(name)
    }
}

/// A hero or ally on the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharacterInPlay {
    pub def: DefId,
    pub damage: u32,
    pub tapped: bool,
    pub committed: bool,
    /// Resource tokens; meaningful for heroes only, allies keep 0.
    pub resources: u32,
}

impl CharacterInPlay {
    fn new(def: DefId) -> Self {
        CharacterInPlay { def, damage: 0, tapped: false, committed: false, resources: 0 }
    }
}

/// An enemy instance, in the staging or engagement area.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnemyInPlay {
    pub def: DefId,
    pub damage: u32,
}

/// A location instance; progress only accrues while it is the active location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocationInPlay {
    pub def: DefId,
    pub progress: u32,
}

/// A card sitting in the staging area.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StagingCard {
    Enemy(EnemyInPlay),
    Location(LocationInPlay),
}

impl StagingCard {
    pub fn def(&self) -> DefId {
        match self {
            StagingCard::Enemy(e) => e.def,
            StagingCard::Location(l) => l.def,
        }
    }
}

/// Why a finished game was lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossReason {
    ThreatLimit,
    HeroesDead,
}

/// Outcome query for a state. Loss checks take precedence over the win check,
/// so a simultaneous threat-out and quest completion counts as a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminalStatus {
    Ongoing,
    Win,
    Loss(LossReason),
}

/// Errors from stepping the state machine.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("stage {stage} is not a decision stage but an action was supplied")]
    UnexpectedAction { stage: StageId },
    #[error("stage {stage} is a decision stage but no action was supplied")]
    MissingDecision { stage: StageId },
    #[error("illegal action at stage {stage}: {action} ({reason})")]
    IllegalAction { stage: StageId, action: String, reason: &'static str },
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
}

/// Damage dealt by a single attack. A defended attack is reduced by the
/// defender's defense; an undefended attack ignores defense entirely.
pub fn attack_damage(attack: u32, defense: Option<u32>) -> u32 {
    match defense {
        Some(d) => attack.saturating_sub(d),
        None => attack,
    }
}

/// Complete game state. Cheap to clone; the clone owns an independent copy of
/// the RNG stream position.
#[derive(Debug, Clone)]
pub struct GameState {
    scenario: Arc<Scenario>,
    pub(crate) round: u32,
    pub(crate) stage: StageId,
    pub(crate) threat_level: u32,
    pub(crate) quest_progress: u32,
    pub(crate) heroes: Vec<CharacterInPlay>,
    pub(crate) allies: Vec<CharacterInPlay>,
    pub(crate) hand: Vec<DefId>,
    pub(crate) player_deck: Vec<DefId>,
    pub(crate) player_discard: Vec<DefId>,
    pub(crate) encounter_deck: Vec<DefId>,
    pub(crate) encounter_discard: Vec<DefId>,
    pub(crate) staging: Vec<StagingCard>,
    pub(crate) engagement: Vec<EnemyInPlay>,
    pub(crate) active_location: Option<LocationInPlay>,
    /// Defender choice recorded at DeclareDefenders, consumed when enemy
    /// attacks resolve. Parallel to `engagement`.
    pub(crate) pending_defense: Vec<Option<u8>>,
    rng: ChaCha8Rng,
}

/// Sets up a game: shuffles both decks with the seeded stream (player deck
/// first), draws the opening hand, places pre-staged cards and leaves the
/// cursor at the first Resource stage.
pub fn init_game(scenario: Arc<Scenario>, seed: u64) -> GameState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut player_deck = scenario.player_deck.clone();
    let mut encounter_deck = scenario.encounter_deck.clone();
    player_deck.shuffle(&mut rng);
    encounter_deck.shuffle(&mut rng);

    let mut hand = Vec::with_capacity(OPENING_HAND);
    for _ in 0..OPENING_HAND {
        match player_deck.pop() {
            Some(card) => hand.push(card),
            None => break,
        }
    }

    let staging = scenario
        .pre_staged
        .iter()
        .map(|&def| match scenario.def(def).kind {
            CardKind::Enemy => StagingCard::Enemy(EnemyInPlay { def, damage: 0 }),
            CardKind::Location => StagingCard::Location(LocationInPlay { def, progress: 0 }),
            kind => unreachable!("pre-staged card of kind {kind} passed validation"),
        })
        .collect();

    GameState {
        round: 1,
        stage: StageId::Resource,
        threat_level: scenario.starting_threat(),
        quest_progress: 0,
        heroes: scenario.heroes.iter().map(|&def| CharacterInPlay::new(def)).collect(),
        allies: Vec::new(),
        hand,
        player_deck,
        player_discard: Vec::new(),
        encounter_deck,
        encounter_discard: Vec::new(),
        staging,
        engagement: Vec::new(),
        active_location: None,
        pending_defense: Vec::new(),
        scenario,
        rng,
    }
}

impl GameState {
    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn round_number(&self) -> u32 {
        self.round
    }

    pub fn stage(&self) -> StageId {
        self.stage
    }

    pub fn threat_level(&self) -> u32 {
        self.threat_level
    }

    pub fn quest_progress(&self) -> u32 {
        self.quest_progress
    }

    pub fn heroes(&self) -> &[CharacterInPlay] {
        &self.heroes
    }

    pub fn allies(&self) -> &[CharacterInPlay] {
        &self.allies
    }

    pub fn hand(&self) -> &[DefId] {
        &self.hand
    }

    pub fn staging(&self) -> &[StagingCard] {
        &self.staging
    }

    pub fn engagement(&self) -> &[EnemyInPlay] {
        &self.engagement
    }

    pub fn active_location(&self) -> Option<&LocationInPlay> {
        self.active_location.as_ref()
    }

    pub fn player_deck_len(&self) -> usize {
        self.player_deck.len()
    }

    pub fn encounter_deck_len(&self) -> usize {
        self.encounter_deck.len()
    }

    pub fn def(&self, id: DefId) -> &CardDef {
        self.scenario.def(id)
    }

    /// Characters in canonical order: hero slots first, then allies in play
    /// order. Commit masks and defender references index this order.
    pub fn char_count(&self) -> usize {
        self.heroes.len() + self.allies.len()
    }

    pub fn char_at(&self, r: u8) -> &CharacterInPlay {
        let r = r as usize;
        if r < self.heroes.len() {
            &self.heroes[r]
        } else {
            &self.allies[r - self.heroes.len()]
        }
    }

    fn char_mut(&mut self, r: u8) -> &mut CharacterInPlay {
        let r = r as usize;
        let heroes = self.heroes.len();
        if r < heroes {
            &mut self.heroes[r]
        } else {
            &mut self.allies[r - heroes]
        }
    }

    pub fn is_hero_ref(&self, r: u8) -> bool {
        (r as usize) < self.heroes.len()
    }

    pub fn remaining_hitpoints(&self, r: u8) -> u32 {
        let c = self.char_at(r);
        self.def(c.def).hitpoints.saturating_sub(c.damage)
    }

    pub fn enemy_remaining_hitpoints(&self, e: &EnemyInPlay) -> u32 {
        self.def(e.def).hitpoints.saturating_sub(e.damage)
    }

    /// References of all untapped characters, canonical order.
    pub fn untapped_refs(&self) -> Vec<u8> {
        (0..self.char_count() as u8).filter(|&r| !self.char_at(r).tapped).collect()
    }

    /// Total threat of every card in the staging area.
    pub fn staging_threat(&self) -> u32 {
        self.staging.iter().map(|c| self.def(c.def()).threat).sum()
    }

    /// Total willpower of all committed characters.
    pub fn committed_willpower(&self) -> u32 {
        (0..self.char_count() as u8)
            .map(|r| self.char_at(r))
            .filter(|c| c.committed)
            .map(|c| self.def(c.def).willpower)
            .sum()
    }

    /// Win/loss query. Checked by drivers after every step; the state machine
    /// itself keeps stepping as long as it is asked to.
    pub fn terminal_status(&self) -> TerminalStatus {
        if self.threat_level >= THREAT_LIMIT {
            TerminalStatus::Loss(LossReason::ThreatLimit)
        } else if self.heroes.is_empty() {
            TerminalStatus::Loss(LossReason::HeroesDead)
        } else if self.quest_progress >= self.scenario.quest_target {
            TerminalStatus::Win
        } else {
            TerminalStatus::Ongoing
        }
    }

    /// Card instance counts per definition across every zone. Steps never
    /// create or destroy instances, only move them, so this census is
    /// invariant over a game.
    pub fn zone_census(&self) -> std::collections::BTreeMap<DefId, u32> {
        let mut census = std::collections::BTreeMap::new();
        let mut add = |def: DefId| *census.entry(def).or_insert(0) += 1;
        for c in &self.heroes {
            add(c.def);
        }
        for c in &self.allies {
            add(c.def);
        }
        for &d in self.hand.iter().chain(&self.player_deck).chain(&self.player_discard) {
            add(d);
        }
        for &d in self.encounter_deck.iter().chain(&self.encounter_discard) {
            add(d);
        }
        for c in &self.staging {
            add(c.def());
        }
        for e in &self.engagement {
            add(e.def);
        }
        if let Some(loc) = &self.active_location {
            add(loc.def);
        }
        census
    }

    /// Replaces the RNG stream and reshuffles the face-down decks. Search
    /// uses this so every iteration samples an independent possible world
    /// instead of replaying the real game's hidden card order.
    pub fn reseed_and_reshuffle(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let mut player_deck = std::mem::take(&mut self.player_deck);
        let mut encounter_deck = std::mem::take(&mut self.encounter_deck);
        player_deck.shuffle(&mut self.rng);
        encounter_deck.shuffle(&mut self.rng);
        self.player_deck = player_deck;
        self.encounter_deck = encounter_deck;
    }

    /// Applies one stage transition. Ruled stages take `None`; decision
    /// stages take `Some(action)` where the action must be legal.
    pub fn step(&mut self, action: Option<&Action>) -> Result<(), EngineError> {
        match action {
            None => {
                if self.stage.is_decision() {
                    return Err(EngineError::MissingDecision { stage: self.stage });
                }
                self.ruled_step()
            }
            Some(a) => {
                if !self.stage.is_decision() {
                    return Err(EngineError::UnexpectedAction { stage: self.stage });
                }
                self.apply_decision(a)
            }
        }
    }

    /// Steps through ruled stages until the cursor rests on a decision stage
    /// or the game is over. Returns the status at the stopping point.
    pub fn advance_to_decision(&mut self) -> Result<TerminalStatus, EngineError> {
        loop {
            let status = self.terminal_status();
            if status != TerminalStatus::Ongoing || self.stage.is_decision() {
                return Ok(status);
            }
            self.step(None)?;
        }
    }

    fn ruled_step(&mut self) -> Result<(), EngineError> {
        match self.stage {
            StageId::Resource => {
                for hero in &mut self.heroes {
                    hero.resources += 1;
                }
                // The draw stage fires immediately as part of the ruled
                // sequence; the cursor lands directly on Planning.
                self.draw_one();
                self.stage = StageId::Planning;
            }
            StageId::Draw => {
                // Not reachable through normal play (Resource performs the
                // draw), but kept total for robustness.
                self.draw_one();
                self.stage = StageId::Planning;
            }
            StageId::StagingReveal => {
                self.staging_reveal();
                self.stage = StageId::QuestResolution;
            }
            StageId::QuestResolution => {
                self.quest_resolution();
                self.stage = StageId::Travel;
            }
            StageId::EncounterCheck => {
                self.engagement_check();
                self.stage = StageId::DeclareDefenders;
            }
            StageId::ResolveEnemyAttacks => {
                self.resolve_enemy_attacks();
                self.stage = StageId::DeclareAttackers;
            }
            StageId::ResolvePlayerAttacks => {
                // Player attacks resolve as they are declared.
                self.stage = StageId::Refresh;
            }
            StageId::Refresh => {
                self.refresh();
                self.stage = StageId::Resource;
                self.round += 1;
            }
            s => {
                return Err(EngineError::InternalInvariant(format!(
                    "ruled_step called at decision stage {s}"
                )));
            }
        }
        Ok(())
    }

    /// Draws one card; silently skipped when the player deck is empty.
    fn draw_one(&mut self) {
        if let Some(card) = self.player_deck.pop() {
            self.hand.push(card);
        }
    }

    /// Reveals the top encounter card into the staging area. An empty
    /// encounter deck is rebuilt by shuffling the discard pile back in; if
    /// both are empty (every encounter card is on the table) the reveal is
    /// skipped.
    fn staging_reveal(&mut self) {
        if self.encounter_deck.is_empty() && !self.encounter_discard.is_empty() {
            let mut deck = std::mem::take(&mut self.encounter_discard);
            deck.shuffle(&mut self.rng);
            self.encounter_deck = deck;
        }
        let Some(def) = self.encounter_deck.pop() else {
            return;
        };
        let card = match self.def(def).kind {
            CardKind::Enemy => StagingCard::Enemy(EnemyInPlay { def, damage: 0 }),
            CardKind::Location => StagingCard::Location(LocationInPlay { def, progress: 0 }),
            kind => unreachable!("encounter deck card of kind {kind} passed validation"),
        };
        self.staging.push(card);
    }

    /// Compares committed willpower against staging threat. A surplus becomes
    /// progress (active location first, then the quest track, capped at the
    /// quest target); a shortfall raises the threat level by the difference.
    fn quest_resolution(&mut self) {
        let willpower = self.committed_willpower() as i64;
        let staging = self.staging_threat() as i64;
        let d = willpower - staging;
        if d > 0 {
            let mut remaining = d as u32;
            if let Some(loc) = &mut self.active_location {
                let quest_points = self.scenario.def(loc.def).quest_points;
                let needed = quest_points - loc.progress;
                let applied = remaining.min(needed);
                loc.progress += applied;
                remaining -= applied;
                if loc.progress == quest_points {
                    let def = loc.def;
                    self.active_location = None;
                    self.encounter_discard.push(def);
                }
            }
            let room = self.scenario.quest_target - self.quest_progress;
            self.quest_progress += remaining.min(room);
        } else if d < 0 {
            self.threat_level += (-d) as u32;
        }
    }

    /// Moves every staged enemy whose engagement cost is at or below the
    /// threat level into the engagement area, preserving staging order.
    fn engagement_check(&mut self) {
        let threat = self.threat_level;
        let mut staying = Vec::with_capacity(self.staging.len());
        for card in self.staging.drain(..) {
            match card {
                StagingCard::Enemy(e) if self.scenario.def(e.def).engagement_cost <= threat => {
                    self.engagement.push(e);
                }
                other => staying.push(other),
            }
        }
        self.staging = staying;
    }

    /// Enemies attack in engagement order. A declared defender takes
    /// attack-minus-defense damage; an undefended attack strikes the hero
    /// with the most remaining hitpoints (lowest slot on ties), ignoring
    /// defense.
    fn resolve_enemy_attacks(&mut self) {
        let attacks: Vec<(u32, Option<u8>)> = self
            .engagement
            .iter()
            .enumerate()
            .map(|(i, enemy)| {
                let attack = self.scenario.def(enemy.def).attack;
                let defender = self.pending_defense.get(i).copied().flatten();
                (attack, defender)
            })
            .collect();
        self.pending_defense.clear();

        for (attack, defender) in attacks {
            match defender {
                Some(r) => {
                    let defense = self.def(self.char_at(r).def).defense;
                    let damage = attack_damage(attack, Some(defense));
                    self.char_mut(r).damage += damage;
                }
                None => {
                    let Some(target) = (0..self.heroes.len() as u8)
                        .max_by_key(|&r| (self.remaining_hitpoints(r), std::cmp::Reverse(r)))
                    else {
                        continue; // no hero left standing; the game is already decided
                    };
                    let damage = attack_damage(attack, None);
                    self.char_mut(target).damage += damage;
                }
            }
        }
    }

    /// Sweeps dead cards, readies everything and raises threat by one.
    fn refresh(&mut self) {
        let scenario = Arc::clone(&self.scenario);
        let dead =
            |c: &CharacterInPlay| c.damage >= scenario.def(c.def).hitpoints;

        let mut discard = std::mem::take(&mut self.player_discard);
        self.heroes.retain(|c| {
            if dead(c) {
                discard.push(c.def);
                false
            } else {
                true
            }
        });
        self.allies.retain(|c| {
            if dead(c) {
                discard.push(c.def);
                false
            } else {
                true
            }
        });
        self.player_discard = discard;

        let mut encounter_discard = std::mem::take(&mut self.encounter_discard);
        self.engagement.retain(|e| {
            if e.damage >= scenario.def(e.def).hitpoints {
                encounter_discard.push(e.def);
                false
            } else {
                true
            }
        });
        self.encounter_discard = encounter_discard;

        for c in self.heroes.iter_mut().chain(self.allies.iter_mut()) {
            c.tapped = false;
            c.committed = false;
        }
        self.pending_defense.clear();
        self.threat_level += 1;
    }

    fn illegal(&self, action: &Action, reason: &'static str) -> EngineError {
        EngineError::IllegalAction {
            stage: self.stage,
            action: format!("{action}"),
            reason,
        }
    }

    fn apply_decision(&mut self, action: &Action) -> Result<(), EngineError> {
        match (self.stage, action) {
            (StageId::Planning, Action::PlayCard { card, payment }) => {
                self.apply_play_card(action, *card, payment)
            }
            (StageId::Planning, Action::EndPlanning) => {
                self.stage = StageId::CommitCharacters;
                Ok(())
            }
            (StageId::CommitCharacters, Action::CommitSubset { mask }) => {
                self.apply_commit(action, *mask)
            }
            (StageId::Travel, Action::TravelTo { location }) => {
                self.apply_travel(action, *location)
            }
            (StageId::DeclareDefenders, Action::AssignDefenders { assignment }) => {
                self.apply_defenders(action, assignment)
            }
            (StageId::DeclareAttackers, Action::DeclareAttack { enemy, attackers }) => {
                self.apply_attack(action, *enemy, *attackers)
            }
            (StageId::DeclareAttackers, Action::Pass) => {
                self.stage = StageId::ResolvePlayerAttacks;
                Ok(())
            }
            _ => Err(self.illegal(action, "action does not belong to this stage")),
        }
    }

    fn apply_play_card(
        &mut self,
        action: &Action,
        card: DefId,
        payment: &[(u8, u32)],
    ) -> Result<(), EngineError> {
        let Some(hand_index) = self.hand.iter().position(|&c| c == card) else {
            return Err(self.illegal(action, "card is not in hand"));
        };
        let def = self.scenario.def(card).clone();
        if def.kind != CardKind::Ally {
            return Err(self.illegal(action, "only allies can be played"));
        }
        let mut paid = 0u32;
        let mut seen = 0u64;
        for &(slot, amount) in payment {
            if slot as usize >= self.heroes.len() {
                return Err(self.illegal(action, "payment names a missing hero slot"));
            }
            if seen & (1 << slot) != 0 {
                return Err(self.illegal(action, "payment names a hero slot twice"));
            }
            seen |= 1 << slot;
            if amount == 0 {
                return Err(self.illegal(action, "payment amounts must be positive"));
            }
            let hero = &self.heroes[slot as usize];
            if self.scenario.def(hero.def).sphere != def.sphere {
                return Err(self.illegal(action, "paying hero is of the wrong sphere"));
            }
            if hero.resources < amount {
                return Err(self.illegal(action, "paying hero lacks the resources"));
            }
            paid += amount;
        }
        if paid != def.cost {
            return Err(self.illegal(action, "payment does not match the card cost"));
        }
        for &(slot, amount) in payment {
            self.heroes[slot as usize].resources -= amount;
        }
        self.hand.swap_remove(hand_index);
        self.allies.push(CharacterInPlay::new(card));
        Ok(())
    }

    fn apply_commit(&mut self, action: &Action, mask: u64) -> Result<(), EngineError> {
        let count = self.char_count();
        if mask >> count != 0 {
            return Err(self.illegal(action, "commit mask names a missing character"));
        }
        for r in 0..count as u8 {
            if mask & (1 << r) != 0 && self.char_at(r).tapped {
                return Err(self.illegal(action, "committed characters must be untapped"));
            }
        }
        if mask != 0 {
            let willpower: u32 = (0..count as u8)
                .filter(|&r| mask & (1 << r) != 0)
                .map(|r| self.def(self.char_at(r).def).willpower)
                .sum();
            if willpower <= self.staging_threat() {
                return Err(self.illegal(
                    action,
                    "non-empty commitments must out-will the staging area",
                ));
            }
        }
        for r in 0..count as u8 {
            if mask & (1 << r) != 0 {
                let c = self.char_mut(r);
                c.committed = true;
                c.tapped = true;
            }
        }
        self.stage = StageId::StagingReveal;
        Ok(())
    }

    fn apply_travel(&mut self, action: &Action, location: Option<DefId>) -> Result<(), EngineError> {
        if let Some(def) = location {
            if self.active_location.is_some() {
                return Err(self.illegal(action, "a location is already active"));
            }
            let position = self.staging.iter().position(
                |card| matches!(card, StagingCard::Location(l) if l.def == def),
            );
            let Some(position) = position else {
                return Err(self.illegal(action, "no such location in the staging area"));
            };
            let StagingCard::Location(loc) = self.staging.remove(position) else {
                unreachable!("position found above is a location");
            };
            self.active_location = Some(loc);
        }
        self.stage = StageId::EncounterCheck;
        Ok(())
    }

    fn apply_defenders(
        &mut self,
        action: &Action,
        assignment: &[Option<u8>],
    ) -> Result<(), EngineError> {
        if assignment.len() != self.engagement.len() {
            return Err(self.illegal(action, "assignment must cover every engaged enemy"));
        }
        let mut used = 0u64;
        for entry in assignment {
            let Some(r) = entry else { continue };
            if *r as usize >= self.char_count() {
                return Err(self.illegal(action, "assignment names a missing character"));
            }
            if self.char_at(*r).tapped {
                return Err(self.illegal(action, "defenders must be untapped"));
            }
            if used & (1 << r) != 0 {
                return Err(self.illegal(action, "a character can only defend one enemy"));
            }
            used |= 1 << r;
        }
        for entry in assignment {
            if let Some(r) = entry {
                self.char_mut(*r).tapped = true;
            }
        }
        self.pending_defense = assignment.to_vec();
        self.stage = StageId::ResolveEnemyAttacks;
        Ok(())
    }

    fn apply_attack(&mut self, action: &Action, enemy: u8, attackers: u64) -> Result<(), EngineError> {
        if enemy as usize >= self.engagement.len() {
            return Err(self.illegal(action, "no such engaged enemy"));
        }
        if attackers == 0 {
            return Err(self.illegal(action, "an attack needs at least one attacker"));
        }
        let count = self.char_count();
        if attackers >> count != 0 {
            return Err(self.illegal(action, "attack mask names a missing character"));
        }
        for r in 0..count as u8 {
            if attackers & (1 << r) != 0 && self.char_at(r).tapped {
                return Err(self.illegal(action, "attackers must be untapped"));
            }
        }
        let total_attack: u32 = (0..count as u8)
            .filter(|&r| attackers & (1 << r) != 0)
            .map(|r| self.def(self.char_at(r).def).attack)
            .sum();
        for r in 0..count as u8 {
            if attackers & (1 << r) != 0 {
                self.char_mut(r).tapped = true;
            }
        }
        let defense = self.def(self.engagement[enemy as usize].def).defense;
        self.engagement[enemy as usize].damage += attack_damage(total_attack, Some(defense));
        Ok(())
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "round {} | stage {} | threat {} | quest {}/{}",
            self.round, self.stage, self.threat_level, self.quest_progress,
            self.scenario.quest_target
        )?;
        let char_line = |c: &CharacterInPlay| {
            let def = self.scenario.def(c.def);
            format!(
                "{} (dmg {}/{}{}{}{})",
                def.id,
                c.damage,
                def.hitpoints,
                if c.tapped { ", tapped" } else { "" },
                if c.committed { ", committed" } else { "" },
                if def.kind == CardKind::Hero { format!(", res {}", c.resources) } else { String::new() },
            )
        };
        writeln!(
            f,
            "heroes: {}",
            self.heroes.iter().map(char_line).collect::<Vec<_>>().join("; ")
        )?;
        writeln!(
            f,
            "allies: {}",
            self.allies.iter().map(char_line).collect::<Vec<_>>().join("; ")
        )?;
        writeln!(
            f,
            "hand: {} | deck {} | discard {}",
            self.hand.iter().map(|&d| self.def(d).id.as_str()).collect::<Vec<_>>().join(", "),
            self.player_deck.len(),
            self.player_discard.len()
        )?;
        writeln!(
            f,
            "staging: {} | encounter deck {} | discard {}",
            self.staging
                .iter()
                .map(|c| match c {
                    StagingCard::Enemy(e) =>
                        format!("{} (dmg {})", self.def(e.def).id, e.damage),
                    StagingCard::Location(l) =>
                        format!("{} (prog {})", self.def(l.def).id, l.progress),
                })
                .collect::<Vec<_>>()
                .join(", "),
            self.encounter_deck.len(),
            self.encounter_discard.len()
        )?;
        writeln!(
            f,
            "engaged: {}",
            self.engagement
                .iter()
                .map(|e| format!("{} (dmg {})", self.def(e.def).id, e.damage))
                .collect::<Vec<_>>()
                .join(", ")
        )?;
        write!(
            f,
            "active location: {}",
            match &self.active_location {
                Some(l) => format!("{} (prog {})", self.def(l.def).id, l.progress),
                None => "none".to_owned(),
            }
        )
    }
}
