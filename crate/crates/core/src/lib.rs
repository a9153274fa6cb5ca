//! Synergy analysis for game elements.
//!
//! A synergy set is a multiset of two or more game elements. Its synergy is the
//! difference between the value a [`ValueFunction`](synergy::ValueFunction)
//! assigns to the whole set and the value expected if the elements did not
//! interact, obtained by combining the values of each element measured alone.
//!
//! The crate is split by concern:
//!
//! - [`synergy`]: elements, multisets, value scales, baselines and the synergy
//!   computation itself.
//! - [`search`]: candidate-space counting, enumeration, uniform sampling,
//!   top-K search and outlier flagging.
//! - [`empirical`]: value functions built from match logs (win rates, pair
//!   matrices, counters, piece-usage sequences).
//! - [`tcg`]: a simplified card-combo evaluator using damage per mana.
//! - [`recommend`]: draft pick recommendations from pair and counter matrices.

pub mod empirical;
pub mod recommend;
pub mod search;
pub mod synergy;
pub mod tcg;

pub use synergy::{
    batch_synergy, compute_synergy, ordinal_rank, rank_sets, BaselineKind, ElementId, ScaleKind,
    SynergyError, SynergyScore, SynergySet, Value, ValueFunction, ValueScale,
};
