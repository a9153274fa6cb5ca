use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::TcgError;
use crate::synergy::ElementId;

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

/// Matches a card when its types intersect the tag list; an empty list
/// matches every card.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CardFilter(pub BTreeSet<String>);

impl CardFilter {
    pub fn any() -> Self {
        CardFilter::default()
    }

    pub fn tags<I: IntoIterator<Item = S>, S: Into<String>>(tags: I) -> Self {
        CardFilter(tags.into_iter().map(Into::into).collect())
    }

    pub fn matches(&self, card: &Card) -> bool {
        self.0.is_empty() || self.0.iter().any(|t| card.types.contains(t))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Effect {
    FlatBuff {
        amount: i64,
        #[serde(default)]
        filter: CardFilter,
        #[serde(default = "default_true", skip_serializing_if = "is_true")]
        excludes_self: bool,
    },
    #[serde(rename = "keyword")]
    KeywordGrant {
        keyword: String,
        #[serde(default)]
        filter: CardFilter,
        #[serde(default = "default_true", skip_serializing_if = "is_true")]
        excludes_self: bool,
    },
    #[serde(rename = "state")]
    StateModifier { flag: String, value: bool },
    /// Adds `amount` to matching cards whose printed damage is at most
    /// `stat_cap`.
    ThresholdBuff {
        amount: i64,
        stat_cap: i64,
        #[serde(default)]
        filter: CardFilter,
        #[serde(default = "default_true", skip_serializing_if = "is_true")]
        excludes_self: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Card {
    pub id: ElementId,
    pub name: String,
    pub mana: u32,
    #[serde(default)]
    pub types: BTreeSet<String>,
    pub damage: u32,
    /// Innate keywords such as `islandwalk`.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub keywords: BTreeSet<String>,
    #[serde(default)]
    pub effects: Vec<Effect>,
}

impl Card {
    pub fn vanilla(id: &str, mana: u32, damage: u32) -> Self {
        Card {
            id: ElementId::new(id).expect("non-empty id"),
            name: id.to_owned(),
            mana,
            types: BTreeSet::new(),
            damage,
            keywords: BTreeSet::new(),
            effects: Vec::new(),
        }
    }

    pub fn with_types<I: IntoIterator<Item = S>, S: Into<String>>(mut self, types: I) -> Self {
        self.types = types.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_keyword(mut self, keyword: &str) -> Self {
        self.keywords.insert(keyword.to_owned());
        self
    }

    pub fn with_effect(mut self, effect: Effect) -> Self {
        self.effects.push(effect);
        self
    }
}

#[derive(Serialize, Deserialize)]
struct CardFile {
    cards: Vec<Card>,
}

/// Reads a `{"cards": [...]}` document.
pub fn load_cards<R: Read>(reader: R) -> Result<Vec<Card>, TcgError> {
    let file: CardFile = serde_json::from_reader(reader).map_err(|e| TcgError::Load(e.to_string()))?;
    let mut seen = BTreeSet::new();
    for c in &file.cards {
        if !seen.insert(&c.id) {
            return Err(TcgError::Load(format!("duplicate card id {}", c.id)));
        }
    }
    Ok(file.cards)
}

pub fn cards_to_json(cards: &[Card]) -> String {
    serde_json::to_string_pretty(&CardFile { cards: cards.to_vec() }).expect("cards serialize")
}

/// A change to one field of one card. `field` is a dotted path into the card's
/// JSON form, e.g. `damage` or `effects.0.amount`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardEdit {
    pub card: ElementId,
    pub field: String,
    pub value: Json,
}

impl CardEdit {
    pub fn new(card: &str, field: &str, value: impl Into<Json>) -> Self {
        CardEdit {
            card: ElementId::new(card).expect("non-empty id"),
            field: field.to_owned(),
            value: value.into(),
        }
    }
}

fn apply_edit(card: &Card, edit: &CardEdit) -> Result<Card, TcgError> {
    let invalid = |reason: String| TcgError::InvalidEdit {
        card: edit.card.clone(),
        field: edit.field.clone(),
        reason,
    };
    if edit.field == "id" {
        return Err(invalid("card ids cannot be edited".into()));
    }
    let mut json = serde_json::to_value(card).expect("card serializes");
    let mut slot = &mut json;
    let mut parts = edit.field.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(invalid("empty path segment".into()));
        }
        let next = match slot {
            Json::Object(map) => {
                if !map.contains_key(part) && parts.peek().is_some() {
                    return Err(invalid(format!("no field {part}")));
                }
                map.entry(part.to_owned()).or_insert(Json::Null)
            }
            Json::Array(items) => {
                let i: usize = part.parse().map_err(|_| invalid(format!("{part} is not an index")))?;
                let len = items.len();
                items.get_mut(i).ok_or_else(|| invalid(format!("index {i} out of range ({len} items)")))?
            }
            _ => return Err(invalid(format!("cannot descend into {part}"))),
        };
        slot = next;
    }
    *slot = edit.value.clone();
    serde_json::from_value(json).map_err(|e| invalid(e.to_string()))
}

/// An immutable, numbered version of a card pool. Cards marked new are the
/// ones a scan must include.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardPool {
    version: u32,
    cards: BTreeMap<ElementId, Card>,
    new_ids: BTreeSet<ElementId>,
}

impl CardPool {
    pub fn new(existing: Vec<Card>, new_cards: Vec<Card>) -> Result<Self, TcgError> {
        let new_ids: BTreeSet<ElementId> = new_cards.iter().map(|c| c.id.clone()).collect();
        let mut cards = BTreeMap::new();
        for c in existing.into_iter().chain(new_cards) {
            let id = c.id.clone();
            if cards.insert(id.clone(), c).is_some() {
                return Err(TcgError::Load(format!("duplicate card id {id}")));
            }
        }
        Ok(CardPool {
            version: 1,
            cards,
            new_ids,
        })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn get(&self, id: &ElementId) -> Option<&Card> {
        self.cards.get(id)
    }

    pub fn card(&self, id: &ElementId) -> Result<&Card, TcgError> {
        self.get(id).ok_or_else(|| TcgError::UnknownCard(id.clone()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &ElementId> + '_ {
        self.cards.keys()
    }

    pub fn cards(&self) -> impl Iterator<Item = &Card> + '_ {
        self.cards.values()
    }

    pub fn new_ids(&self) -> &BTreeSet<ElementId> {
        &self.new_ids
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    /// Applies `edits` in order and returns the next version. An empty edit
    /// list returns the pool unchanged, version included.
    pub fn apply_edits(&self, edits: &[CardEdit]) -> Result<CardPool, TcgError> {
        if edits.is_empty() {
            return Ok(self.clone());
        }
        let mut cards = self.cards.clone();
        for edit in edits {
            let card = cards.get(&edit.card).ok_or_else(|| TcgError::UnknownCard(edit.card.clone()))?;
            let edited = apply_edit(card, edit)?;
            cards.insert(edit.card.clone(), edited);
        }
        Ok(CardPool {
            version: self.version + 1,
            cards,
            new_ids: self.new_ids.clone(),
        })
    }
}
