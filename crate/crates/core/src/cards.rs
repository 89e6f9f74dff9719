//! Card definitions, the card library file format and scenario configuration.
//!
//! Card data lives in a line-oriented text format: one `key=value` pair per
//! line, records separated by a single blank line, integers in base 10 and
//! enum names case-sensitive. Scenario files use the same line grammar inside
//! three sections — `[scenario]`, `[player_deck]` and `[encounter_deck]` —
//! where deck lines read `card_id xN`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Resource affiliation of a player card. A card can only be paid for with
/// resource tokens held by heroes of the same sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sphere {
    Spirit,
    Tactics,
    Lore,
    Leadership,
}

impl fmt::Display for Sphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Sphere::Spirit => "Spirit",
            Sphere::Tactics => "Tactics",
            Sphere::Lore => "Lore",
            Sphere::Leadership => "Leadership",
        };
        f.write_str(name)
    }
}

impl FromStr for Sphere {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "Spirit" => Ok(Sphere::Spirit),
            "Tactics" => Ok(Sphere::Tactics),
            "Lore" => Ok(Sphere::Lore),
            "Leadership" => Ok(Sphere::Leadership),
            _ => Err(()),
        }
    }
}

/// The four card kinds the simulator knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CardKind {
    Hero,
    Ally,
    Enemy,
    Location,
}

impl CardKind {
    /// Heroes and allies act as characters: they quest, attack and defend.
    pub fn is_character(self) -> bool {
        matches!(self, CardKind::Hero | CardKind::Ally)
    }
}

impl fmt::Display for CardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CardKind::Hero => "Hero",
            CardKind::Ally => "Ally",
            CardKind::Enemy => "Enemy",
            CardKind::Location => "Location",
        };
        f.write_str(name)
    }
}

impl FromStr for CardKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "Hero" => Ok(CardKind::Hero),
            "Ally" => Ok(CardKind::Ally),
            "Enemy" => Ok(CardKind::Enemy),
            "Location" => Ok(CardKind::Location),
            _ => Err(()),
        }
    }
}

/// A printed card. Fields that do not apply to the card's kind stay zeroed
/// (or `None` for [`CardDef::sphere`]) and are never read by the engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardDef {
    pub id: String,
    pub name: String,
    pub kind: CardKind,
    /// Heroes and allies only.
    pub sphere: Option<Sphere>,
    /// Allies only: resources needed to play the card.
    pub cost: u32,
    /// Heroes only: contribution to the starting threat level.
    pub threat_cost: u32,
    /// Characters only.
    pub willpower: u32,
    /// Characters and enemies.
    pub attack: u32,
    /// Characters and enemies.
    pub defense: u32,
    /// Characters and enemies; at least 1.
    pub hitpoints: u32,
    /// Enemies only: the enemy engages once the threat level reaches this.
    pub engagement_cost: u32,
    /// Enemies and locations: threat contributed while in the staging area.
    pub threat: u32,
    /// Locations only: progress needed to explore the location; at least 1.
    pub quest_points: u32,
}

/// Field names a record may carry, in the order `emit` writes them.
const FIELD_ORDER: [&str; 13] = [
    "id",
    "name",
    "kind",
    "sphere",
    "cost",
    "threat_cost",
    "willpower",
    "attack",
    "defense",
    "hitpoints",
    "engagement_cost",
    "threat",
    "quest_points",
];

/// Required numeric/enum fields per kind (besides `id` and `kind`).
fn required_fields(kind: CardKind) -> &'static [&'static str] {
    match kind {
        CardKind::Hero => &[
            "sphere",
            "threat_cost",
            "willpower",
            "attack",
            "defense",
            "hitpoints",
        ],
        CardKind::Ally => &["sphere", "cost", "willpower", "attack", "defense", "hitpoints"],
        CardKind::Enemy => &["engagement_cost", "threat", "attack", "defense", "hitpoints"],
        CardKind::Location => &["threat", "quest_points"],
    }
}

fn field_applies(kind: CardKind, key: &str) -> bool {
    matches!(key, "id" | "name" | "kind") || required_fields(kind).contains(&key)
}

/// Errors raised while reading a card library or scenario file.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: expected `key=value`, got `{text}`")]
    MalformedLine { line: usize, text: String },
    #[error("record at line {line}: missing `id`")]
    MissingId { line: usize },
    #[error("record `{id}`: duplicate card id")]
    DuplicateId { id: String },
    #[error("record `{id}`: duplicate key `{key}`")]
    DuplicateKey { id: String, key: String },
    #[error("record `{id}`: unknown key `{key}`")]
    UnknownKey { id: String, key: String },
    #[error("record `{id}`: missing `kind`")]
    MissingKind { id: String },
    #[error("record `{id}`: unknown kind `{value}`")]
    UnknownKind { id: String, value: String },
    #[error("record `{id}`: unknown sphere `{value}`")]
    UnknownSphere { id: String, value: String },
    #[error("record `{id}`: `{key}` is not a base-10 non-negative integer: `{value}`")]
    InvalidInteger { id: String, key: String, value: String },
    #[error("record `{id}`: missing mandatory field `{key}` for kind {kind}")]
    MissingField { id: String, key: &'static str, kind: CardKind },
    #[error("record `{id}`: field `{key}` does not apply to kind {kind}")]
    InapplicableField { id: String, key: String, kind: CardKind },
    #[error("record `{id}`: `{key}` must be at least 1")]
    ZeroStat { id: String, key: &'static str },
    #[error("line {line}: unknown section `[{name}]`")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: content before any section header")]
    ContentOutsideSection { line: usize },
    #[error("line {line}: `{text}` is not a `card_id xN` deck line")]
    MalformedDeckLine { line: usize, text: String },
    #[error("line {line}: copy count must be at least 1")]
    ZeroCopyCount { line: usize },
    #[error("[scenario] section: missing `{key}`")]
    MissingScenarioKey { key: &'static str },
    #[error("[scenario] section: duplicate `{key}`")]
    DuplicateScenarioKey { key: &'static str },
    #[error("[scenario] section: unknown difficulty `{value}`")]
    UnknownDifficulty { value: String },
    #[error("missing `[{name}]` section")]
    MissingSection { name: &'static str },
}

/// An immutable set of card definitions keyed by card id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CardLibrary {
    cards: BTreeMap<String, CardDef>,
}

impl CardLibrary {
    pub fn get(&self, id: &str) -> Option<&CardDef> {
        self.cards.get(id)
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CardDef> {
        self.cards.values()
    }

    /// Writes the library back out in the card file format, records in id
    /// order. `load_card_library(emit(lib))` reproduces `lib` exactly.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (i, def) in self.cards.values().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            emit_record(&mut out, def);
        }
        out
    }
}

fn emit_record(out: &mut String, def: &CardDef) {
    use fmt::Write;

    for key in FIELD_ORDER {
        if !field_applies(def.kind, key) {
            continue;
        }
        match key {
            "id" => writeln!(out, "id={}", def.id),
            "name" => writeln!(out, "name={}", def.name),
            "kind" => writeln!(out, "kind={}", def.kind),
            "sphere" => writeln!(out, "sphere={}", def.sphere.expect("sphere applies")),
            "cost" => writeln!(out, "cost={}", def.cost),
            "threat_cost" => writeln!(out, "threat_cost={}", def.threat_cost),
            "willpower" => writeln!(out, "willpower={}", def.willpower),
            "attack" => writeln!(out, "attack={}", def.attack),
            "defense" => writeln!(out, "defense={}", def.defense),
            "hitpoints" => writeln!(out, "hitpoints={}", def.hitpoints),
            "engagement_cost" => writeln!(out, "engagement_cost={}", def.engagement_cost),
            "threat" => writeln!(out, "threat={}", def.threat),
            "quest_points" => writeln!(out, "quest_points={}", def.quest_points),
            _ => unreachable!(),
        }
        .expect("writing to String cannot fail");
    }
}

/// Splits a document into records: runs of `key=value` lines separated by
/// blank lines. Returns `(line_number, key, value)` triples per record.
fn split_records(doc: &str) -> Result<Vec<Vec<(usize, String, String)>>, ParseError> {
    let mut records = Vec::new();
    let mut current: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in doc.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() {
            if !current.is_empty() {
                records.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (key, value) = text.split_once('=').ok_or_else(|| ParseError::MalformedLine {
            line,
            text: text.to_owned(),
        })?;
        current.push((line, key.trim().to_owned(), value.trim().to_owned()));
    }
    if !current.is_empty() {
        records.push(current);
    }
    Ok(records)
}

fn build_card(fields: Vec<(usize, String, String)>) -> Result<CardDef, ParseError> {
    let first_line = fields.first().map(|(l, _, _)| *l).unwrap_or(0);
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let id = fields
        .iter()
        .find(|(_, k, _)| k == "id")
        .map(|(_, _, v)| v.clone())
        .ok_or(ParseError::MissingId { line: first_line })?;
    for (_, key, value) in fields {
        if !FIELD_ORDER.contains(&key.as_str()) {
            return Err(ParseError::UnknownKey { id, key });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ParseError::DuplicateKey { id, key });
        }
    }

    let kind_text = map.remove("kind").ok_or_else(|| ParseError::MissingKind { id: id.clone() })?;
    let kind: CardKind = kind_text.parse().map_err(|()| ParseError::UnknownKind {
        id: id.clone(),
        value: kind_text,
    })?;

    for key in map.keys() {
        if !field_applies(kind, key) {
            return Err(ParseError::InapplicableField {
                id,
                key: key.clone(),
                kind,
            });
        }
    }
    for &key in required_fields(kind) {
        if !map.contains_key(key) {
            return Err(ParseError::MissingField { id, key, kind });
        }
    }

    let name = map.remove("name").unwrap_or_else(|| id.clone());
    let sphere = match map.remove("sphere") {
        Some(text) => Some(text.parse::<Sphere>().map_err(|()| ParseError::UnknownSphere {
            id: id.clone(),
            value: text,
        })?),
        None => None,
    };

    let mut int_field = |key: &str| -> Result<u32, ParseError> {
        match map.remove(key) {
            None => Ok(0),
            Some(text) => text.parse::<u32>().map_err(|_| ParseError::InvalidInteger {
                id: id.clone(),
                key: key.to_owned(),
                value: text,
            }),
        }
    };

    let def = CardDef {
        cost: int_field("cost")?,
        threat_cost: int_field("threat_cost")?,
        willpower: int_field("willpower")?,
        attack: int_field("attack")?,
        defense: int_field("defense")?,
        hitpoints: int_field("hitpoints")?,
        engagement_cost: int_field("engagement_cost")?,
        threat: int_field("threat")?,
        quest_points: int_field("quest_points")?,
        id,
        name,
        kind,
        sphere,
    };

    if kind.is_character() || kind == CardKind::Enemy {
        if def.hitpoints == 0 {
            return Err(ParseError::ZeroStat { id: def.id, key: "hitpoints" });
        }
    }
    if kind == CardKind::Location && def.quest_points == 0 {
        return Err(ParseError::ZeroStat { id: def.id, key: "quest_points" });
    }
    Ok(def)
}

/// Parses a card library document. An empty document yields an empty library.
pub fn load_card_library(doc: &str) -> Result<CardLibrary, ParseError> {
    let mut cards = BTreeMap::new();
    for record in split_records(doc)? {
        let def = build_card(record)?;
        let id = def.id.clone();
        if cards.insert(id.clone(), def).is_some() {
            return Err(ParseError::DuplicateId { id });
        }
    }
    Ok(CardLibrary { cards })
}

/// Scenario difficulty; selects the encounter deck shape and setup rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    /// Expected encounter deck size and number of distinct card types.
    pub fn encounter_shape(self) -> (u32, usize) {
        match self {
            Difficulty::Easy => (28, 7),
            Difficulty::Medium | Difficulty::Hard => (29, 15),
        }
    }

    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        };
        f.write_str(name)
    }
}

impl FromStr for Difficulty {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "Easy" | "easy" => Ok(Difficulty::Easy),
            "Medium" | "medium" => Ok(Difficulty::Medium),
            "Hard" | "hard" => Ok(Difficulty::Hard),
            _ => Err(()),
        }
    }
}

/// A deck as declared in a scenario file: `(card id, copies)` entries.
/// Duplicate entries for the same id are allowed and simply add up.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DeckSpec {
    pub entries: Vec<(String, u32)>,
}

impl DeckSpec {
    pub fn total_copies(&self) -> u32 {
        self.entries.iter().map(|(_, n)| n).sum()
    }

    pub fn distinct_ids(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|(id, _)| id.as_str()).collect()
    }
}

/// A scenario as read from a scenario file, before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub difficulty: Difficulty,
    pub quest_target: u32,
    pub heroes: Vec<String>,
    pub pre_staged: Vec<String>,
    pub player_deck: DeckSpec,
    pub encounter_deck: DeckSpec,
}

/// Parses a scenario file. Structural problems (bad lines, missing sections)
/// are errors; semantic problems are reported later by [`validate_scenario`].
pub fn load_scenario_config(doc: &str) -> Result<ScenarioConfig, ParseError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Scenario,
        PlayerDeck,
        EncounterDeck,
    }

    let mut section = Section::None;
    let mut seen_scenario = false;
    let mut difficulty: Option<Difficulty> = None;
    let mut quest_target: Option<u32> = None;
    let mut heroes = Vec::new();
    let mut pre_staged = Vec::new();
    let mut player_deck = DeckSpec::default();
    let mut encounter_deck = DeckSpec::default();
    let mut seen_player = false;
    let mut seen_encounter = false;

    for (idx, raw) in doc.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(name) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            section = match name {
                "scenario" => {
                    seen_scenario = true;
                    Section::Scenario
                }
                "player_deck" => {
                    seen_player = true;
                    Section::PlayerDeck
                }
                "encounter_deck" => {
                    seen_encounter = true;
                    Section::EncounterDeck
                }
                _ => {
                    return Err(ParseError::UnknownSection { line, name: name.to_owned() });
                }
            };
            continue;
        }
        match section {
            Section::None => return Err(ParseError::ContentOutsideSection { line }),
            Section::Scenario => {
                let (key, value) = text.split_once('=').ok_or_else(|| ParseError::MalformedLine {
                    line,
                    text: text.to_owned(),
                })?;
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "difficulty" => {
                        if difficulty.is_some() {
                            return Err(ParseError::DuplicateScenarioKey { key: "difficulty" });
                        }
                        difficulty = Some(value.parse().map_err(|()| {
                            ParseError::UnknownDifficulty { value: value.to_owned() }
                        })?);
                    }
                    "quest_target" => {
                        if quest_target.is_some() {
                            return Err(ParseError::DuplicateScenarioKey { key: "quest_target" });
                        }
                        quest_target =
                            Some(value.parse::<u32>().map_err(|_| ParseError::InvalidInteger {
                                id: "[scenario]".to_owned(),
                                key: "quest_target".to_owned(),
                                value: value.to_owned(),
                            })?);
                    }
                    "hero" => heroes.push(value.to_owned()),
                    "pre_staged" => pre_staged.push(value.to_owned()),
                    _ => {
                        return Err(ParseError::UnknownKey {
                            id: "[scenario]".to_owned(),
                            key: key.to_owned(),
                        });
                    }
                }
            }
            Section::PlayerDeck | Section::EncounterDeck => {
                let entry = parse_deck_line(line, text)?;
                if section == Section::PlayerDeck {
                    player_deck.entries.push(entry);
                } else {
                    encounter_deck.entries.push(entry);
                }
            }
        }
    }

    if !seen_scenario {
        return Err(ParseError::MissingSection { name: "scenario" });
    }
    if !seen_player {
        return Err(ParseError::MissingSection { name: "player_deck" });
    }
    if !seen_encounter {
        return Err(ParseError::MissingSection { name: "encounter_deck" });
    }

    Ok(ScenarioConfig {
        difficulty: difficulty.ok_or(ParseError::MissingScenarioKey { key: "difficulty" })?,
        // Quest target defaults to 8 when the file does not override it.
        quest_target: quest_target.unwrap_or(8),
        heroes,
        pre_staged,
        player_deck,
        encounter_deck,
    })
}

fn parse_deck_line(line: usize, text: &str) -> Result<(String, u32), ParseError> {
    let mut parts = text.split_whitespace();
    let (id, count_text) = match (parts.next(), parts.next(), parts.next()) {
        (Some(id), Some(count), None) => (id, count),
        _ => {
            return Err(ParseError::MalformedDeckLine { line, text: text.to_owned() });
        }
    };
    let digits = count_text.strip_prefix('x').ok_or_else(|| ParseError::MalformedDeckLine {
        line,
        text: text.to_owned(),
    })?;
    let count: u32 = digits.parse().map_err(|_| ParseError::MalformedDeckLine {
        line,
        text: text.to_owned(),
    })?;
    if count == 0 {
        return Err(ParseError::ZeroCopyCount { line });
    }
    Ok((id.to_owned(), count))
}

/// Where a rejected card reference appeared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardPlace {
    Heroes,
    PlayerDeck,
    EncounterDeck,
    PreStaged,
}

impl fmt::Display for CardPlace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CardPlace::Heroes => "heroes",
            CardPlace::PlayerDeck => "player deck",
            CardPlace::EncounterDeck => "encounter deck",
            CardPlace::PreStaged => "pre-staged cards",
        };
        f.write_str(name)
    }
}

/// A single problem found while validating a scenario against a card library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnresolvedCard { place: CardPlace, id: String },
    HeroCount { found: usize },
    DuplicateHero { id: String },
    NotAHero { id: String },
    PlayerDeckKind { id: String },
    EncounterDeckKind { id: String },
    EncounterDeckSize { expected: u32, found: u32 },
    EncounterTypeCount { expected: usize, found: usize },
    ScenarioSetup { difficulty: Difficulty, reason: &'static str },
    PreStagedKind { id: String },
    QuestTarget,
}

impl Violation {
    /// Stable machine-readable code for the violation class.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::UnresolvedCard { .. } => "unresolved-card",
            Violation::HeroCount { .. } => "hero-count",
            Violation::DuplicateHero { .. } => "duplicate-hero",
            Violation::NotAHero { .. } => "not-a-hero",
            Violation::PlayerDeckKind { .. } => "player-deck-kind",
            Violation::EncounterDeckKind { .. } => "encounter-deck-kind",
            Violation::EncounterDeckSize { .. } => "encounter-deck-size",
            Violation::EncounterTypeCount { .. } => "encounter-type-count",
            Violation::ScenarioSetup { .. } => "scenario-setup",
            Violation::PreStagedKind { .. } => "pre-staged-kind",
            Violation::QuestTarget => "quest-target",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.code())?;
        match self {
            Violation::UnresolvedCard { place, id } => {
                write!(f, "`{id}` in {place} is not in the card library")
            }
            Violation::HeroCount { found } => write!(f, "expected exactly 3 heroes, found {found}"),
            Violation::DuplicateHero { id } => write!(f, "hero `{id}` listed more than once"),
            Violation::NotAHero { id } => write!(f, "`{id}` is not a Hero card"),
            Violation::PlayerDeckKind { id } => write!(f, "`{id}` is not an Ally card"),
            Violation::EncounterDeckKind { id } => {
                write!(f, "`{id}` is neither an Enemy nor a Location card")
            }
            Violation::EncounterDeckSize { expected, found } => {
                write!(f, "encounter deck has {found} cards, expected {expected}")
            }
            Violation::EncounterTypeCount { expected, found } => {
                write!(f, "encounter deck has {found} distinct card types, expected {expected}")
            }
            Violation::ScenarioSetup { difficulty, reason } => {
                write!(f, "{difficulty} scenario {reason}")
            }
            Violation::PreStagedKind { id } => {
                write!(f, "pre-staged `{id}` is neither an Enemy nor a Location card")
            }
            Violation::QuestTarget => write!(f, "quest_target must be at least 1"),
        }
    }
}

/// Checks a scenario configuration against a card library. Returns an empty
/// list exactly when [`build_scenario`] would succeed.
pub fn validate_scenario(config: &ScenarioConfig, library: &CardLibrary) -> Vec<Violation> {
    let mut out = Vec::new();

    if config.quest_target == 0 {
        out.push(Violation::QuestTarget);
    }

    if config.heroes.len() != 3 {
        out.push(Violation::HeroCount { found: config.heroes.len() });
    } else {
        let mut seen = BTreeSet::new();
        for id in &config.heroes {
            match library.get(id) {
                None => out.push(Violation::UnresolvedCard {
                    place: CardPlace::Heroes,
                    id: id.clone(),
                }),
                Some(def) if def.kind != CardKind::Hero => {
                    out.push(Violation::NotAHero { id: id.clone() });
                }
                Some(_) => {
                    if !seen.insert(id) {
                        out.push(Violation::DuplicateHero { id: id.clone() });
                    }
                }
            }
        }
    }

    for (id, _) in &config.player_deck.entries {
        match library.get(id) {
            None => out.push(Violation::UnresolvedCard {
                place: CardPlace::PlayerDeck,
                id: id.clone(),
            }),
            Some(def) if def.kind != CardKind::Ally => {
                out.push(Violation::PlayerDeckKind { id: id.clone() });
            }
            Some(_) => {}
        }
    }

    for (id, _) in &config.encounter_deck.entries {
        match library.get(id) {
            None => out.push(Violation::UnresolvedCard {
                place: CardPlace::EncounterDeck,
                id: id.clone(),
            }),
            Some(def) if !matches!(def.kind, CardKind::Enemy | CardKind::Location) => {
                out.push(Violation::EncounterDeckKind { id: id.clone() });
            }
            Some(_) => {}
        }
    }

    let (expected_size, expected_types) = config.difficulty.encounter_shape();
    let found_size = config.encounter_deck.total_copies();
    if found_size != expected_size {
        out.push(Violation::EncounterDeckSize { expected: expected_size, found: found_size });
    }
    let found_types = config.encounter_deck.distinct_ids().len();
    if found_types != expected_types {
        out.push(Violation::EncounterTypeCount { expected: expected_types, found: found_types });
    }

    match config.difficulty {
        Difficulty::Easy | Difficulty::Medium => {
            if !config.pre_staged.is_empty() {
                out.push(Violation::ScenarioSetup {
                    difficulty: config.difficulty,
                    reason: "must not pre-stage any cards",
                });
            }
        }
        Difficulty::Hard => {
            if config.pre_staged.is_empty() {
                out.push(Violation::ScenarioSetup {
                    difficulty: config.difficulty,
                    reason: "must pre-stage its setup cards",
                });
            }
        }
    }
    for id in &config.pre_staged {
        match library.get(id) {
            None => out.push(Violation::UnresolvedCard {
                place: CardPlace::PreStaged,
                id: id.clone(),
            }),
            Some(def) if !matches!(def.kind, CardKind::Enemy | CardKind::Location) => {
                out.push(Violation::PreStagedKind { id: id.clone() });
            }
            Some(_) => {}
        }
    }

    out
}

/// Index of a card definition inside a built [`Scenario`]'s card table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DefId(pub u16);

/// A validated, materialised scenario: the card table plus ordered
/// (unshuffled) deck lists. Built scenarios are immutable and shared between
/// games via `Arc`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub difficulty: Difficulty,
    pub quest_target: u32,
    /// Distinct cards used by this scenario, sorted by card id so that
    /// `DefId` order equals lexicographic id order.
    pub cards: Vec<CardDef>,
    /// Hero slots in configuration order.
    pub heroes: [DefId; 3],
    pub player_deck: Vec<DefId>,
    pub encounter_deck: Vec<DefId>,
    pub pre_staged: Vec<DefId>,
}

impl Scenario {
    pub fn def(&self, id: DefId) -> &CardDef {
        &self.cards[id.0 as usize]
    }

    /// Looks a card up by textual id. Handy in tests and diagnostics.
    pub fn find(&self, card_id: &str) -> Option<DefId> {
        self.cards
            .binary_search_by(|def| def.id.as_str().cmp(card_id))
            .ok()
            .map(|i| DefId(i as u16))
    }

    pub fn starting_threat(&self) -> u32 {
        self.heroes.iter().map(|&h| self.def(h).threat_cost).sum()
    }
}

/// Building a scenario failed because validation found problems.
#[derive(Debug, Error)]
#[error("invalid scenario: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidScenario {
    pub violations: Vec<Violation>,
}

/// Validates and materialises a scenario. Deck lists keep the declared entry
/// order with each entry expanded to its copy count; nothing is shuffled here.
pub fn build_scenario(
    config: &ScenarioConfig,
    library: &CardLibrary,
) -> Result<Scenario, InvalidScenario> {
    let violations = validate_scenario(config, library);
    if !violations.is_empty() {
        return Err(InvalidScenario { violations });
    }

    let mut ids: BTreeSet<&str> = BTreeSet::new();
    ids.extend(config.heroes.iter().map(String::as_str));
    ids.extend(config.player_deck.entries.iter().map(|(id, _)| id.as_str()));
    ids.extend(config.encounter_deck.entries.iter().map(|(id, _)| id.as_str()));
    ids.extend(config.pre_staged.iter().map(String::as_str));

    let cards: Vec<CardDef> =
        ids.iter().map(|id| library.get(id).expect("validated above").clone()).collect();
    let index: BTreeMap<&str, DefId> = cards
        .iter()
        .enumerate()
        .map(|(i, def)| (def.id.as_str(), DefId(i as u16)))
        .collect();

    let resolve = |id: &str| index[id];
    let expand = |spec: &DeckSpec| {
        let mut deck = Vec::with_capacity(spec.total_copies() as usize);
        for (id, count) in &spec.entries {
            deck.extend(std::iter::repeat(resolve(id)).take(*count as usize));
        }
        deck
    };

    Ok(Scenario {
        difficulty: config.difficulty,
        quest_target: config.quest_target,
        heroes: [
            resolve(&config.heroes[0]),
            resolve(&config.heroes[1]),
            resolve(&config.heroes[2]),
        ],
        player_deck: expand(&config.player_deck),
        encounter_deck: expand(&config.encounter_deck),
        pre_staged: config.pre_staged.iter().map(|id| resolve(id)).collect(),
        cards,
    })
}

const BUNDLED_CARDS: &str = include_str!("../data/cards.txt");
const BUNDLED_EASY: &str = include_str!("../data/scenario_easy.txt");
const BUNDLED_MEDIUM: &str = include_str!("../data/scenario_medium.txt");
const BUNDLED_HARD: &str = include_str!("../data/scenario_hard.txt");

/// The card library shipped with the crate.
pub fn bundled_library() -> CardLibrary {
    load_card_library(BUNDLED_CARDS).expect("bundled card data is well-formed")
}

/// The scenario configuration shipped for the given difficulty.
pub fn bundled_scenario_config(difficulty: Difficulty) -> ScenarioConfig {
    let doc = match difficulty {
        Difficulty::Easy => BUNDLED_EASY,
        Difficulty::Medium => BUNDLED_MEDIUM,
        Difficulty::Hard => BUNDLED_HARD,
    };
    load_scenario_config(doc).expect("bundled scenario data is well-formed")
}

/// Builds the bundled scenario for the given difficulty.
pub fn bundled_scenario(difficulty: Difficulty) -> Scenario {
    build_scenario(&bundled_scenario_config(difficulty), &bundled_library())
        .expect("bundled scenarios validate against the bundled library")
}

#[cfg(test)]
mod tests {
    use super::*;

    const EOWYN: &str = "id=eowyn\nname=Eowyn\nkind=Hero\nsphere=Spirit\nthreat_cost=9\nwillpower=4\nattack=1\ndefense=1\nhitpoints=3\n";

    #[test]
    fn parses_a_hero_record() {
        let lib = load_card_library(EOWYN).unwrap();
        let def = lib.get("eowyn").unwrap();
        assert_eq!(def.kind, CardKind::Hero);
        assert_eq!(def.sphere, Some(Sphere::Spirit));
        assert_eq!(def.threat_cost, 9);
        assert_eq!(def.willpower, 4);
        assert_eq!(def.attack, 1);
        assert_eq!(def.defense, 1);
        assert_eq!(def.hitpoints, 3);
    }

    #[test]
    fn empty_document_is_an_empty_library() {
        let lib = load_card_library("").unwrap();
        assert!(lib.is_empty());
    }

    #[test]
    fn enemy_with_sphere_is_rejected() {
        let doc = "id=bad_wolf\nkind=Enemy\nsphere=Spirit\nengagement_cost=30\nthreat=1\nattack=1\ndefense=0\nhitpoints=2\n";
        let err = load_card_library(doc).unwrap_err();
        assert!(matches!(err, ParseError::InapplicableField { ref id, ref key, .. }
            if id == "bad_wolf" && key == "sphere"));
    }

    #[test]
    fn missing_mandatory_field_is_rejected() {
        let doc = "id=thin_wolf\nkind=Enemy\nengagement_cost=30\nthreat=1\nattack=1\ndefense=0\n";
        let err = load_card_library(doc).unwrap_err();
        assert!(matches!(err, ParseError::MissingField { ref id, key: "hitpoints", .. }
            if id == "thin_wolf"));
    }

    #[test]
    fn negative_stat_is_rejected() {
        let doc = "id=odd_wolf\nkind=Enemy\nengagement_cost=30\nthreat=-1\nattack=1\ndefense=0\nhitpoints=2\n";
        let err = load_card_library(doc).unwrap_err();
        assert!(matches!(err, ParseError::InvalidInteger { ref id, ref key, .. }
            if id == "odd_wolf" && key == "threat"));
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let doc = format!("{EOWYN}\n{EOWYN}");
        let err = load_card_library(&doc).unwrap_err();
        assert!(matches!(err, ParseError::DuplicateId { ref id } if id == "eowyn"));
    }

    #[test]
    fn zero_hitpoints_is_rejected() {
        let doc = "id=ghost\nkind=Ally\nsphere=Lore\ncost=1\nwillpower=1\nattack=0\ndefense=0\nhitpoints=0\n";
        let err = load_card_library(doc).unwrap_err();
        assert!(matches!(err, ParseError::ZeroStat { key: "hitpoints", .. }));
    }

    #[test]
    fn emit_round_trips_the_bundled_library() {
        let lib = bundled_library();
        let reparsed = load_card_library(&lib.emit()).unwrap();
        assert_eq!(lib, reparsed);
    }

    #[test]
    fn bundled_scenarios_validate() {
        let lib = bundled_library();
        for difficulty in Difficulty::ALL {
            let config = bundled_scenario_config(difficulty);
            assert_eq!(validate_scenario(&config, &lib), Vec::new(), "{difficulty}");
        }
    }

    #[test]
    fn bundled_decks_match_the_difficulty_table() {
        for (difficulty, size, types) in [
            (Difficulty::Easy, 28, 7),
            (Difficulty::Medium, 29, 15),
            (Difficulty::Hard, 29, 15),
        ] {
            let config = bundled_scenario_config(difficulty);
            assert_eq!(config.encounter_deck.total_copies(), size, "{difficulty} size");
            assert_eq!(config.encounter_deck.distinct_ids().len(), types, "{difficulty} types");
        }
        assert!(bundled_scenario_config(Difficulty::Easy).pre_staged.is_empty());
        assert!(bundled_scenario_config(Difficulty::Medium).pre_staged.is_empty());

        let hard = bundled_scenario(Difficulty::Hard);
        let kinds: Vec<CardKind> =
            hard.pre_staged.iter().map(|&id| hard.def(id).kind).collect();
        assert!(kinds.contains(&CardKind::Enemy));
        assert!(kinds.contains(&CardKind::Location));
    }

    #[test]
    fn built_scenario_resolves_and_orders_cards() {
        let scenario = bundled_scenario(Difficulty::Medium);
        assert_eq!(scenario.player_deck.len(), 30);
        assert_eq!(scenario.encounter_deck.len(), 29);
        // Card table is sorted by id, so `find` can binary-search.
        for window in scenario.cards.windows(2) {
            assert!(window[0].id < window[1].id);
        }
        let eowyn = scenario.find("eowyn").unwrap();
        assert_eq!(scenario.def(eowyn).threat_cost, 9);
        assert!(scenario.heroes.contains(&eowyn));
    }

    /// Every single-field corruption of a valid config yields exactly one
    /// violation, and building fails exactly when validation complains.
    #[test]
    fn single_corruptions_yield_exactly_one_violation() {
        let lib = bundled_library();
        let base = bundled_scenario_config(Difficulty::Medium);
        assert!(validate_scenario(&base, &lib).is_empty());

        let mut corruptions: Vec<(&str, ScenarioConfig)> = Vec::new();

        let mut c = base.clone();
        c.quest_target = 0;
        corruptions.push(("zero quest target", c));

        let mut c = base.clone();
        c.heroes.pop();
        corruptions.push(("missing hero", c));

        let mut c = base.clone();
        c.heroes.push("eowyn".into());
        corruptions.push(("fourth hero", c));

        let mut c = base.clone();
        c.heroes[1] = c.heroes[0].clone();
        corruptions.push(("duplicate hero", c));

        let mut c = base.clone();
        c.heroes[0] = "nobody".into();
        corruptions.push(("unknown hero", c));

        let mut c = base.clone();
        c.heroes[0] = base.player_deck.entries[0].0.clone();
        corruptions.push(("ally as hero", c));

        let mut c = base.clone();
        c.player_deck.entries[0].0 = "nothing".into();
        corruptions.push(("unknown player card", c));

        let mut c = base.clone();
        c.player_deck.entries[0].0 = base.encounter_deck.entries[0].0.clone();
        corruptions.push(("encounter card in player deck", c));

        let mut c = base.clone();
        c.encounter_deck.entries[0].1 += 1;
        corruptions.push(("oversized encounter deck", c));

        // Replacing one encounter entry's id with another existing entry's id
        // keeps the size but drops the distinct type count.
        let mut c = base.clone();
        c.encounter_deck.entries[0].0 = base.encounter_deck.entries[1].0.clone();
        corruptions.push(("merged encounter types", c));

        let mut c = base.clone();
        c.pre_staged.push(base.encounter_deck.entries[0].0.clone());
        corruptions.push(("pre-staged card on medium", c));

        for (label, config) in corruptions {
            let violations = validate_scenario(&config, &lib);
            assert_eq!(violations.len(), 1, "{label}: {violations:?}");
            assert!(build_scenario(&config, &lib).is_err(), "{label}");
        }

        // Hard must pre-stage; clearing the list is the hard-side corruption.
        let mut hard = bundled_scenario_config(Difficulty::Hard);
        hard.pre_staged.clear();
        let violations = validate_scenario(&hard, &lib);
        assert_eq!(violations.len(), 1, "cleared hard setup: {violations:?}");
    }
}
