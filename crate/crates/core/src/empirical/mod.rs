//! Value functions estimated from observed matches.
//!
//! A [`MatchLog`] is ingested from newline-delimited JSON. Win rates are
//! counted per side: an element's solo rate covers every side it played on,
//! and a set's joint rate covers the sides that fielded all of its elements.
//! Piece-usage sequences are turned into bigram elements and counted the same
//! way.

mod estimate;
mod log;
mod matrix;
mod sequence;
pub mod synth;

use thiserror::Error;

use crate::synergy::{ElementId, SynergyError};

pub use estimate::{
    joint_win_rate, joint_win_rate_z, solo_win_rate, solo_win_rate_z, wilson_interval, winrate_value_function,
    WinRateEstimate, WinRateValueFunction, DEFAULT_MIN_GAMES, DEFAULT_Z,
};
pub use log::{ingest_match_log, Ingested, MatchLog, MatchRecord, MoveEvent, Rejection, SideTable, MAX_REJECT_FRACTION};
pub use matrix::{
    counter_matrix, counter_matrix_z, counter_score, counter_score_z, pair_synergy_matrix, pair_synergy_matrix_z,
    CounterEntry, CounterMatrix, PairEntry, PairSynergyMatrix,
};
pub use sequence::{
    extract_sequence_elements, sequence_table, sequence_value_function, sequence_win_rates, SEQUENCE_PREFIX,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmpiricalError {
    #[error("malformed input at line {line}: {reason}")]
    MalformedStream { line: usize, reason: String },
    #[error("{rejected} of {total} lines rejected (limit 10%)")]
    TooManyRejects {
        rejected: usize,
        total: usize,
        rejects: Vec<Rejection>,
    },
    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },
    #[error("match log is empty")]
    EmptyLog,
    #[error("element {0} never appears in the log")]
    UnknownElement(ElementId),
    #[error("elements of {0} never appeared on the same side")]
    NeverCoOccurred(String),
    #[error("{0} never faced {1}")]
    NeverOpposed(ElementId, ElementId),
    #[error("match {0} has no move log")]
    NoMoveLog(String),
    #[error("side must be 0 or 1, got {0}")]
    InvalidSide(usize),
    #[error("no record carries a move log")]
    NoSequencedRecords,
    #[error(transparent)]
    Synergy(#[from] SynergyError),
}
