//! Draft pick recommendations.
//!
//! Each available candidate is scored by its mean pair synergy with the allies
//! already picked and its mean counter score against the enemy picks. Pairs
//! with no data count as zero and mark the recommendation low-confidence.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::empirical::{CounterMatrix, PairSynergyMatrix};
use crate::synergy::ElementId;

pub const MAX_ALLIES: usize = 4;
pub const MAX_ENEMIES: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecommendError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("pair matrix and counter matrix were built from different logs")]
    MatrixLogMismatch,
    #[error("candidate {0} is not available")]
    UnavailableCandidate(ElementId),
    #[error("element {0} is not in the pool")]
    UnknownElement(ElementId),
    #[error("invalid draft: {0}")]
    InvalidDraft(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("k must be at least 1")]
    InvalidK,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftState {
    #[serde(default)]
    pub allies: Vec<ElementId>,
    #[serde(default)]
    pub enemies: Vec<ElementId>,
    /// Bans and picks. Allies and enemies are always treated as unavailable.
    #[serde(default)]
    pub unavailable: BTreeSet<ElementId>,
    #[serde(default)]
    pub pool: Vec<ElementId>,
}

impl DraftState {
    pub fn new(pool: impl IntoIterator<Item = ElementId>) -> Self {
        DraftState {
            pool: pool.into_iter().collect(),
            ..Default::default()
        }
    }

    pub fn is_available(&self, c: &ElementId) -> bool {
        !self.unavailable.contains(c) && !self.allies.contains(c) && !self.enemies.contains(c)
    }

    fn validate(&self) -> Result<BTreeSet<&ElementId>, RecommendError> {
        if self.pool.is_empty() {
            return Err(RecommendError::EmptyPool);
        }
        let pool: BTreeSet<&ElementId> = self.pool.iter().collect();
        if self.allies.len() > MAX_ALLIES {
            return Err(RecommendError::InvalidDraft(format!(
                "at most {MAX_ALLIES} allies, got {}",
                self.allies.len()
            )));
        }
        if self.enemies.len() > MAX_ENEMIES {
            return Err(RecommendError::InvalidDraft(format!(
                "at most {MAX_ENEMIES} enemies, got {}",
                self.enemies.len()
            )));
        }
        let mut picked = BTreeSet::new();
        for e in self.allies.iter().chain(&self.enemies) {
            if !pool.contains(e) {
                return Err(RecommendError::UnknownElement(e.clone()));
            }
            if !picked.insert(e) {
                return Err(RecommendError::InvalidDraft(format!("{e} picked more than once")));
            }
        }
        Ok(pool)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub ally_weight: f64,
    pub counter_weight: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            ally_weight: 1.0,
            counter_weight: 0.5,
        }
    }
}

impl Weights {
    pub fn new(ally_weight: f64, counter_weight: f64) -> Result<Self, RecommendError> {
        let w = Weights {
            ally_weight,
            counter_weight,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), RecommendError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.ally_weight) || !ok(self.counter_weight) {
            return Err(RecommendError::InvalidWeights("weights must be finite and non-negative".into()));
        }
        if self.ally_weight == 0.0 && self.counter_weight == 0.0 {
            return Err(RecommendError::InvalidWeights("weights cannot both be zero".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub candidate: ElementId,
    pub total_score: f64,
    pub ally_component: f64,
    pub counter_component: f64,
    pub low_confidence: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Ally,
    Enemy,
}

/// One ally pairing or enemy matchup feeding a candidate's score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub role: Role,
    pub other: ElementId,
    /// Pair synergy for allies, counter score for enemies; `None` without data.
    pub score: Option<f64>,
    pub games: u64,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub recommendation: Recommendation,
    pub contributions: Vec<Contribution>,
}

fn check_matrices(matrix: &PairSynergyMatrix, counters: &CounterMatrix) -> Result<(), RecommendError> {
    if matrix.log_digest != counters.log_digest {
        return Err(RecommendError::MatrixLogMismatch);
    }
    Ok(())
}

fn contributions(
    matrix: &PairSynergyMatrix,
    counters: &CounterMatrix,
    state: &DraftState,
    c: &ElementId,
) -> Vec<Contribution> {
    let allies = state.allies.iter().map(|a| match matrix.get(c, a) {
        Some(e) => Contribution {
            role: Role::Ally,
            other: a.clone(),
            score: Some(e.score.synergy),
            games: e.joint.games,
            low_confidence: !e.sufficient,
        },
        None => Contribution {
            role: Role::Ally,
            other: a.clone(),
            score: None,
            games: 0,
            low_confidence: true,
        },
    });
    let enemies = state.enemies.iter().map(|e| match counters.get(c, e) {
        Some(entry) => Contribution {
            role: Role::Enemy,
            other: e.clone(),
            score: Some(entry.score),
            games: entry.vs.games,
            low_confidence: !entry.sufficient,
        },
        None => Contribution {
            role: Role::Enemy,
            other: e.clone(),
            score: None,
            games: 0,
            low_confidence: true,
        },
    });
    allies.chain(enemies).collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn score(c: &ElementId, parts: &[Contribution], weights: &Weights) -> Recommendation {
    // Allies and enemies are summed in sorted order so list order cannot
    // change the floating-point result.
    let sorted = |role: Role| {
        let mut v: Vec<f64> = parts
            .iter()
            .filter(|p| p.role == role)
            .map(|p| p.score.unwrap_or(0.0))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let ally_component = mean(sorted(Role::Ally).into_iter());
    let counter_component = mean(sorted(Role::Enemy).into_iter());
    Recommendation {
        candidate: c.clone(),
        total_score: weights.ally_weight * ally_component + weights.counter_weight * counter_component,
        ally_component,
        counter_component,
        low_confidence: parts.iter().any(|p| p.low_confidence),
    }
}

/// The `k` best available candidates, by total score descending and then
/// candidate id.
pub fn recommend(
    matrix: &PairSynergyMatrix,
    counters: &CounterMatrix,
    state: &DraftState,
    k: usize,
    weights: &Weights,
) -> Result<Vec<Recommendation>, RecommendError> {
    check_matrices(matrix, counters)?;
    weights.validate()?;
    if k == 0 {
        return Err(RecommendError::InvalidK);
    }
    let pool = state.validate()?;
    let mut recs: Vec<Recommendation> = pool
        .into_iter()
        .filter(|c| state.is_available(c))
        .map(|c| score(c, &contributions(matrix, counters, state, c), weights))
        .collect();
    recs.sort_by(|a, b| {
        b.total_score
            .total_cmp(&a.total_score)
            .then_with(|| a.candidate.cmp(&b.candidate))
    });
    recs.truncate(k);
    Ok(recs)
}

/// Score breakdown for a single candidate.
pub fn what_if(
    matrix: &PairSynergyMatrix,
    counters: &CounterMatrix,
    state: &DraftState,
    candidate: &ElementId,
    weights: &Weights,
) -> Result<WhatIf, RecommendError> {
    check_matrices(matrix, counters)?;
    weights.validate()?;
    let pool = state.validate()?;
    if !pool.contains(candidate) {
        return Err(RecommendError::UnknownElement(candidate.clone()));
    }
    if !state.is_available(candidate) {
        return Err(RecommendError::UnavailableCandidate(candidate.clone()));
    }
    let contributions = contributions(matrix, counters, state, candidate);
    Ok(WhatIf {
        recommendation: score(candidate, &contributions, weights),
        contributions,
    })
}
