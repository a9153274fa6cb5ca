use serde::{Deserialize, Serialize};

use super::eval::{BoardState, DpmValueFunction, COPY_CAP};
use super::{CardEdit, CardPool, TcgError};
use crate::search::{detect_outliers, score_space, CandidateSpace, OutlierMethod, OutlierReport, SearchStrategy, SetFilter};
use crate::synergy::BaselineKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanArgs {
    pub size_min: u32,
    pub size_max: u32,
    pub copy_cap: u32,
    pub strategy: SearchStrategy,
    pub method: OutlierMethod,
    /// Method default when absent.
    pub threshold: Option<f64>,
    pub baseline: BaselineKind,
    pub state: BoardState,
    #[serde(skip)]
    pub workers: usize,
}

impl Default for ScanArgs {
    fn default() -> Self {
        ScanArgs {
            size_min: 2,
            size_max: 3,
            copy_cap: COPY_CAP,
            strategy: SearchStrategy::Exhaustive,
            method: OutlierMethod::MadZ,
            threshold: None,
            baseline: BaselineKind::PooledRatio,
            state: BoardState::default(),
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub pool_version: u32,
    pub strategy: SearchStrategy,
    pub baseline: BaselineKind,
    pub sets_examined: u64,
    pub sets_skipped: u64,
    pub outliers: OutlierReport,
}

/// The candidate space a scan walks: every combo of the pool within the size
/// range that includes at least one new card.
pub fn scan_space(pool: &CardPool, args: &ScanArgs) -> Result<CandidateSpace, TcgError> {
    if args.copy_cap > COPY_CAP {
        return Err(TcgError::Scan(crate::search::SearchError::InvalidSpace(format!(
            "copy cap {} exceeds {COPY_CAP}",
            args.copy_cap
        ))));
    }
    if pool.new_ids().is_empty() {
        return Err(TcgError::NoNewCards);
    }
    let space = CandidateSpace::new(pool.ids().cloned(), args.size_min, args.size_max, args.copy_cap)?
        .with_filter(SetFilter::MustContainAny(pool.new_ids().clone()))?;
    Ok(space)
}

/// Scores every candidate combo and flags the ones whose synergy is an
/// outlier in that population.
pub fn scan_new_set(pool: &CardPool, args: &ScanArgs) -> Result<ScanReport, TcgError> {
    let space = scan_space(pool, args)?;
    let vf = DpmValueFunction::new(pool, args.state.clone());
    let (scores, skipped) = score_space(&space, &vf, args.baseline, args.strategy.clone(), args.workers)?;
    let threshold = args.threshold.unwrap_or_else(|| args.method.default_threshold());
    let outliers = detect_outliers(&scores, args.method, threshold)?;
    Ok(ScanReport {
        pool_version: pool.version(),
        strategy: args.strategy.clone(),
        baseline: args.baseline,
        sets_examined: scores.len() as u64,
        sets_skipped: skipped,
        outliers,
    })
}

/// Applies `edits` to a new pool version and rescans it.
pub fn rebalance_iterate(
    pool: &CardPool,
    edits: &[CardEdit],
    args: &ScanArgs,
) -> Result<(CardPool, ScanReport), TcgError> {
    let next = pool.apply_edits(edits)?;
    let report = scan_new_set(&next, args)?;
    Ok((next, report))
}
