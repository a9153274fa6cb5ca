//! A simplified card-combo evaluator.
//!
//! A combo's value is the damage it deals per mana spent. Cards can buff other
//! cards by type, grant keywords, or change the opponent's board state; all
//! effects are resolved in a single order-independent pass. New card sets are
//! checked by scanning every combo that includes a new card and flagging
//! synergy outliers.

mod card;
mod eval;
mod scan;

use thiserror::Error;

use crate::search::SearchError;
use crate::synergy::{ElementId, SynergyError};

pub use card::{cards_to_json, load_cards, Card, CardEdit, CardFilter, CardPool, Effect};
pub use eval::{
    card_strength, combo_synergy, evaluate_combo, BoardState, ComboEvaluation, DpmValueFunction, COPY_CAP,
    ISLANDWALK, ISLANDWALK_BONUS, OPPONENT_HAS_ISLAND,
};
pub use scan::{rebalance_iterate, scan_new_set, scan_space, ScanArgs, ScanReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TcgError {
    #[error("invalid card set: {0}")]
    Load(String),
    #[error("unknown card {0}")]
    UnknownCard(ElementId),
    #[error("{copies} copies of {card} exceed the limit of 4")]
    CopyCapExceeded { card: ElementId, copies: u32 },
    #[error("invalid edit of {card}.{field}: {reason}")]
    InvalidEdit {
        card: ElementId,
        field: String,
        reason: String,
    },
    #[error("pool has no new cards to scan")]
    NoNewCards,
    #[error(transparent)]
    Synergy(#[from] SynergyError),
    #[error(transparent)]
    Scan(#[from] SearchError),
}
