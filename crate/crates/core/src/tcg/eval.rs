use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Card, CardPool, Effect, TcgError};
use crate::synergy::{
    compute_synergy, BaselineKind, ElementId, SynergyError, SynergyScore, SynergySet, Value, ValueFunction,
    ValueScale,
};

pub const COPY_CAP: u32 = 4;
pub const ISLANDWALK: &str = "islandwalk";
pub const OPPONENT_HAS_ISLAND: &str = "opponent_has_island";
/// Extra damage for a card with islandwalk when the opponent has an island.
pub const ISLANDWALK_BONUS: i64 = 2;

/// Opponent-side flags. Missing flags read as false.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardState {
    #[serde(default)]
    pub opponent_flags: BTreeMap<String, bool>,
}

impl BoardState {
    pub fn flag(&self, name: &str) -> bool {
        self.opponent_flags.get(name).copied().unwrap_or(false)
    }

    pub fn with_flag(mut self, name: &str, value: bool) -> Self {
        self.opponent_flags.insert(name.to_owned(), value);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComboEvaluation {
    pub cards: SynergySet,
    pub total_damage: u64,
    pub total_mana: u64,
    /// Damage over `max(total_mana, 1)`.
    pub dpm: Value,
    pub free_combo: bool,
}

fn resolve<'p>(pool: &'p CardPool, cards: &SynergySet) -> Result<Vec<&'p Card>, TcgError> {
    let mut out = Vec::with_capacity(cards.cardinality() as usize);
    for (id, n) in cards.counts() {
        if n > COPY_CAP {
            return Err(TcgError::CopyCapExceeded {
                card: id.clone(),
                copies: n,
            });
        }
        let card = pool.card(id)?;
        out.extend(std::iter::repeat(card).take(n as usize));
    }
    Ok(out)
}

/// State modifiers from every card are applied first. A flag set to true by
/// any card stays true even if another card sets it false, so the result does
/// not depend on play order.
fn final_state(cards: &[&Card], initial: &BoardState) -> BoardState {
    let mut state = initial.clone();
    let mut forced_true = BTreeSet::new();
    for c in cards {
        for e in &c.effects {
            if let Effect::StateModifier { flag, value } = e {
                if *value {
                    forced_true.insert(flag.as_str());
                }
                state.opponent_flags.insert(flag.clone(), *value);
            }
        }
    }
    for flag in forced_true {
        state.opponent_flags.insert(flag.to_owned(), true);
    }
    state
}

fn effective_damage(cards: &[&Card], i: usize, state: &BoardState) -> u64 {
    let target = cards[i];
    let mut damage = target.damage as i64;
    let mut islandwalk = target.keywords.contains(ISLANDWALK);
    for (j, source) in cards.iter().enumerate() {
        for effect in &source.effects {
            match effect {
                Effect::FlatBuff {
                    amount,
                    filter,
                    excludes_self,
                } if (i != j || !excludes_self) && filter.matches(target) => damage += amount,
                Effect::ThresholdBuff {
                    amount,
                    stat_cap,
                    filter,
                    excludes_self,
                } if (i != j || !excludes_self)
                    && filter.matches(target)
                    && (target.damage as i64) <= *stat_cap =>
                {
                    damage += amount
                }
                Effect::KeywordGrant {
                    keyword,
                    filter,
                    excludes_self,
                } if keyword == ISLANDWALK && (i != j || !excludes_self) && filter.matches(target) => {
                    islandwalk = true
                }
                _ => {}
            }
        }
    }
    if islandwalk && state.flag(OPPONENT_HAS_ISLAND) {
        damage += ISLANDWALK_BONUS;
    }
    damage.max(0) as u64
}

/// Damage and mana of playing `cards` together against `initial`.
pub fn evaluate_combo(pool: &CardPool, cards: &SynergySet, initial: &BoardState) -> Result<ComboEvaluation, TcgError> {
    let resolved = resolve(pool, cards)?;
    let state = final_state(&resolved, initial);
    let total_damage: u64 = (0..resolved.len()).map(|i| effective_damage(&resolved, i, &state)).sum();
    let total_mana: u64 = resolved.iter().map(|c| c.mana as u64).sum();
    Ok(ComboEvaluation {
        cards: cards.clone(),
        total_damage,
        total_mana,
        dpm: Value::ratio(total_damage as f64, total_mana.max(1) as f64),
        free_combo: total_mana == 0,
    })
}

/// Damage per mana of a card played alone on an empty board.
pub fn card_strength(pool: &CardPool, id: &ElementId) -> Result<Value, TcgError> {
    Ok(evaluate_combo(pool, &SynergySet::singleton(id.clone()), &BoardState::default())?.dpm)
}

/// Ratio-scale value function: damage per mana of a combo.
#[derive(Clone, Debug)]
pub struct DpmValueFunction<'p> {
    pool: &'p CardPool,
    state: BoardState,
    scale: ValueScale,
}

impl<'p> DpmValueFunction<'p> {
    pub fn new(pool: &'p CardPool, state: BoardState) -> Self {
        DpmValueFunction {
            pool,
            state,
            scale: ValueScale::Ratio,
        }
    }
}

impl ValueFunction for DpmValueFunction<'_> {
    fn scale(&self) -> &ValueScale {
        &self.scale
    }

    fn in_pool(&self, element: &ElementId) -> bool {
        self.pool.get(element).is_some()
    }

    fn evaluate(&self, set: &SynergySet) -> Result<Value, SynergyError> {
        evaluate_combo(self.pool, set, &self.state)
            .map(|e| e.dpm)
            .map_err(|e| SynergyError::Evaluation {
                set: set.label(),
                reason: e.to_string(),
            })
    }
}

pub fn combo_synergy(
    pool: &CardPool,
    cards: &SynergySet,
    state: &BoardState,
    baseline: BaselineKind,
) -> Result<SynergyScore, TcgError> {
    let vf = DpmValueFunction::new(pool, state.clone());
    Ok(compute_synergy(cards, &vf, baseline)?)
}
