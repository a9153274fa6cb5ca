use std::collections::BTreeMap;

use super::estimate::{WinRateEstimate, WinRateValueFunction, DEFAULT_Z};
use super::{EmpiricalError, MatchLog, MatchRecord, SideTable};
use crate::synergy::ElementId;

pub const SEQUENCE_PREFIX: &str = "seq:";

/// Bigram elements for one side's piece usage, in order of occurrence. The
/// side's first `skip_first` moves are dropped before pairing.
pub fn extract_sequence_elements(
    record: &MatchRecord,
    side: usize,
    skip_first: usize,
) -> Result<Vec<ElementId>, EmpiricalError> {
    let moves = record
        .moves
        .as_ref()
        .ok_or_else(|| EmpiricalError::NoMoveLog(record.match_id.clone()))?;
    if side > 1 {
        return Err(EmpiricalError::InvalidSide(side));
    }
    let pieces: Vec<&str> = moves
        .iter()
        .filter(|m| m.side as usize == side)
        .skip(skip_first)
        .map(|m| m.piece.as_str())
        .collect();
    Ok(pieces
        .windows(2)
        .map(|w| ElementId::new(format!("{SEQUENCE_PREFIX}{}->{}", w[0], w[1])).expect("non-empty"))
        .collect())
}

/// One observation per side of every record that carries a move log; the
/// side's elements are its distinct bigrams.
pub fn sequence_table(log: &MatchLog, skip_first: usize) -> Result<SideTable, EmpiricalError> {
    let mut table = SideTable::new();
    let mut sequenced = 0;
    for r in log.records().iter().filter(|r| r.moves.is_some()) {
        sequenced += 1;
        for side in 0..2 {
            table.push(extract_sequence_elements(r, side, skip_first)?, r.won(side));
        }
    }
    if sequenced == 0 {
        return Err(EmpiricalError::NoSequencedRecords);
    }
    Ok(table)
}

pub fn sequence_win_rates(
    log: &MatchLog,
    skip_first: usize,
) -> Result<BTreeMap<ElementId, WinRateEstimate>, EmpiricalError> {
    let table = sequence_table(log, skip_first)?;
    Ok(table
        .elements()
        .map(|e| {
            let (wins, games) = table.tally([e]);
            (e.clone(), WinRateEstimate::new(wins, games, DEFAULT_Z).expect("seen"))
        })
        .collect())
}

/// Win-rate value function over bigram sets, so sequence combinations can be
/// scored like any other synergy set.
pub fn sequence_value_function(table: &SideTable, min_games: u64) -> Result<WinRateValueFunction<'_>, EmpiricalError> {
    WinRateValueFunction::over(table, min_games, DEFAULT_Z)
}
