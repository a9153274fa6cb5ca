//! Candidate generation and search over synergy sets.
//!
//! A [`CandidateSpace`] describes every multiset of a pool within a size range
//! and a per-element copy cap. Spaces are counted exactly with big integers,
//! enumerated in canonical order, or sampled uniformly by unranking random
//! indices. [`top_k_synergy`] and [`detect_outliers`] consume the resulting
//! scores.

mod outlier;
mod space;
mod topk;

use thiserror::Error;

use crate::synergy::SynergyError;

pub use outlier::{
    detect_outliers, median_sorted, quantile_sorted, FlaggedScore, OutlierMethod, OutlierReport, PopulationStats,
    DEFAULT_IQR_THRESHOLD, DEFAULT_MADZ_THRESHOLD, MAD_SCALE,
};
pub use space::{count_sets, enumerate_sets, sample_sets, CandidateSpace, SetFilter, SetStream, SpaceIndex};
pub use topk::{score_space, top_k_synergy, top_k_synergy_parallel, SearchStrategy, TopKResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid candidate space: {0}")]
    InvalidSpace(String),
    #[error("candidate space is empty")]
    EmptySpace,
    #[error("set {0} is not in the candidate space")]
    NotInSpace(String),
    #[error("index is outside the candidate space")]
    IndexOutOfRange,
    #[error("filter rejected {attempts} consecutive draws")]
    FilterTooSelective { attempts: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("invalid strategy {0:?} (expected exhaustive or sample:<n>)")]
    InvalidStrategy(String),
    #[error("invalid outlier settings: {0}")]
    InvalidThreshold(String),
    #[error("outlier detection needs at least {needed} scores, got {got}")]
    TooFewScores { needed: usize, got: usize },
    #[error("could not start worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Synergy(#[from] SynergyError),
}
