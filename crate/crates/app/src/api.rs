//! Draft queries shared by the CLI and the HTTP service, so both surfaces give
//! identical answers for the same snapshot and parameters.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use synergy_core::recommend::{self, Contribution, DraftState, Recommendation, RecommendError, Weights};
use synergy_core::ElementId;

use crate::snapshot::AnalysisSnapshot;

pub const DEFAULT_K: usize = 5;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraftRequest {
    #[serde(default)]
    pub allies: Vec<ElementId>,
    #[serde(default)]
    pub enemies: Vec<ElementId>,
    #[serde(default)]
    pub unavailable: Vec<ElementId>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub candidate: Option<ElementId>,
    /// Overrides the snapshot's configured weights.
    #[serde(default)]
    pub weights: Option<Weights>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub snapshot_version: u64,
    pub recommendations: Vec<Recommendation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub snapshot_version: u64,
    pub recommendation: Recommendation,
    pub contributions: Vec<Contribution>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub detail: String,
}

pub fn error_code(e: &RecommendError) -> &'static str {
    match e {
        RecommendError::EmptyPool => "empty_pool",
        RecommendError::MatrixLogMismatch => "matrix_log_mismatch",
        RecommendError::UnavailableCandidate(_) => "unavailable_candidate",
        RecommendError::UnknownElement(_) => "unknown_element",
        RecommendError::InvalidDraft(_) => "invalid_draft",
        RecommendError::InvalidWeights(_) => "invalid_weights",
        RecommendError::InvalidK => "invalid_k",
    }
}

impl DraftRequest {
    fn state(&self, snap: &AnalysisSnapshot) -> DraftState {
        DraftState {
            allies: self.allies.clone(),
            enemies: self.enemies.clone(),
            unavailable: self.unavailable.iter().cloned().collect::<BTreeSet<_>>(),
            pool: snap.pool.clone(),
        }
    }

    fn weights(&self, snap: &AnalysisSnapshot) -> Weights {
        self.weights.unwrap_or(snap.config.weights)
    }
}

pub fn recommend(snap: &AnalysisSnapshot, req: &DraftRequest) -> Result<RecommendResponse, RecommendError> {
    let recommendations = recommend::recommend(
        &snap.pair_matrix,
        &snap.counter_matrix,
        &req.state(snap),
        req.k.unwrap_or(DEFAULT_K),
        &req.weights(snap),
    )?;
    Ok(RecommendResponse {
        snapshot_version: snap.version,
        recommendations,
    })
}

pub fn what_if(snap: &AnalysisSnapshot, req: &DraftRequest, candidate: &ElementId) -> Result<WhatIfResponse, RecommendError> {
    let w = recommend::what_if(
        &snap.pair_matrix,
        &snap.counter_matrix,
        &req.state(snap),
        candidate,
        &req.weights(snap),
    )?;
    Ok(WhatIfResponse {
        snapshot_version: snap.version,
        recommendation: w.recommendation,
        contributions: w.contributions,
    })
}
