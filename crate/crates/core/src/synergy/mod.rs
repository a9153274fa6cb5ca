//! Elements, value scales, baselines and the synergy computation.
//!
//! The synergy of a set `S` under a value function `v` is
//! `v(S) - baseline({v({e}) : e in S})`, where the baseline combines singleton
//! values once per copy of each element. Which combiner is used is part of the
//! result ([`SynergyScore::baseline`]), so scores computed under different
//! baselines are never silently compared.

mod functions;
mod set;
mod value;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use functions::{AdditiveValueFunction, FnValueFunction, TableValueFunction};
pub use set::{ElementId, SynergySet};
pub use value::{ordinal_rank, BaselineKind, ScaleKind, Value, ValueScale};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynergyError {
    #[error("element id must not be empty")]
    EmptyElementId,
    #[error("a synergy set needs at least one element")]
    EmptySet,
    #[error("element {0} has a zero count")]
    ZeroCount(ElementId),
    #[error("invalid scale: {0}")]
    InvalidScale(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("scale mismatch: {0}")]
    ScaleMismatch(String),
    #[error("unknown ordinal label {0:?}")]
    UnknownLabel(String),
    #[error("unknown baseline {0:?} (expected sum, mean, independent or pooled)")]
    UnknownBaseline(String),
    #[error("element {0} is not in the value function's pool")]
    UnknownElement(ElementId),
    #[error("synergy needs at least two elements, got {got}")]
    Cardinality { got: u32 },
    /// The value function has no data for this set. Searches skip such sets.
    #[error("no value for {set}: {reason}")]
    EvaluationGap { set: String, reason: String },
    #[error("evaluating {set} failed: {reason}")]
    Evaluation { set: String, reason: String },
    #[error("cannot rank scores from different scales or baselines")]
    MixedScales,
    #[error("set #{index}: {source}")]
    InBatch {
        index: usize,
        #[source]
        source: Box<SynergyError>,
    },
}

/// Assigns values to synergy sets.
///
/// Implementations must be deterministic and free of observable side effects,
/// and must accept singletons as well as larger sets.
pub trait ValueFunction: Sync {
    fn scale(&self) -> &ValueScale;

    fn in_pool(&self, element: &ElementId) -> bool;

    fn evaluate(&self, set: &SynergySet) -> Result<Value, SynergyError>;

    /// Whether the value for `set` rests on too little data to be trusted.
    fn low_confidence(&self, _set: &SynergySet) -> bool {
        false
    }
}

impl<V: ValueFunction + ?Sized> ValueFunction for &V {
    fn scale(&self) -> &ValueScale {
        (**self).scale()
    }

    fn in_pool(&self, element: &ElementId) -> bool {
        (**self).in_pool(element)
    }

    fn evaluate(&self, set: &SynergySet) -> Result<Value, SynergyError> {
        (**self).evaluate(set)
    }

    fn low_confidence(&self, set: &SynergySet) -> bool {
        (**self).low_confidence(set)
    }
}

/// Synergy of one set.
///
/// `synergy == set_value.as_real() - baseline_value.as_real()` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynergyScore {
    pub set: SynergySet,
    pub set_value: Value,
    pub baseline_value: Value,
    pub synergy: f64,
    pub baseline: BaselineKind,
    pub scale: ScaleKind,
    pub low_confidence: bool,
}

/// Computes the synergy of `set` under `vf`, combining singleton values with
/// `baseline`.
pub fn compute_synergy<V>(
    set: &SynergySet,
    vf: &V,
    baseline: BaselineKind,
) -> Result<SynergyScore, SynergyError>
where
    V: ValueFunction + ?Sized,
{
    if set.cardinality() < 2 {
        return Err(SynergyError::Cardinality {
            got: set.cardinality(),
        });
    }
    let scale = vf.scale();
    if !baseline.supports(scale.kind()) {
        return Err(SynergyError::ScaleMismatch(format!(
            "{baseline} baseline is not defined on a {} scale",
            scale.kind()
        )));
    }
    if let Some(e) = set.elements().find(|e| !vf.in_pool(e)) {
        return Err(SynergyError::UnknownElement(e.clone()));
    }

    let set_value = vf.evaluate(set)?;
    scale.check(&set_value)?;

    let mut low_confidence = vf.low_confidence(set);
    let mut singles = Vec::with_capacity(set.distinct());
    for (e, n) in set.counts() {
        let single = SynergySet::singleton(e.clone());
        let v = vf.evaluate(&single)?;
        scale.check(&v)?;
        low_confidence |= vf.low_confidence(&single);
        singles.push((v, n));
    }

    let baseline_value = combine(baseline, scale.kind(), &singles, set.cardinality())?;
    let synergy = set_value.as_real() - baseline_value.as_real();
    Ok(SynergyScore {
        set: set.clone(),
        set_value,
        baseline_value,
        synergy,
        baseline,
        scale: scale.kind(),
        low_confidence,
    })
}

/// Combines singleton values (each with its multiplicity) into a baseline.
fn combine(
    baseline: BaselineKind,
    scale: ScaleKind,
    singles: &[(Value, u32)],
    cardinality: u32,
) -> Result<Value, SynergyError> {
    let copies = || {
        singles
            .iter()
            .flat_map(|(v, n)| std::iter::repeat_n(v, *n as usize))
    };
    let sum = || copies().fold(0.0, |acc, v| acc + v.as_real());
    let wrap = |x: f64| match scale {
        ScaleKind::Ordinal => Value::RankAggregate { rank: x },
        _ => Value::numeric(x),
    };
    match baseline {
        BaselineKind::Sum => Ok(wrap(sum())),
        BaselineKind::Mean => Ok(wrap(sum() / cardinality as f64)),
        BaselineKind::IndependentUnion => {
            let mut miss = 1.0;
            for v in copies() {
                let p = v.as_real();
                if !(0.0..=1.0).contains(&p) {
                    return Err(SynergyError::ScaleMismatch(format!(
                        "independent baseline needs probabilities in [0, 1], got {p}"
                    )));
                }
                miss *= 1.0 - p;
            }
            Ok(Value::numeric(1.0 - miss))
        }
        BaselineKind::PooledRatio => {
            let (mut num, mut den) = (0.0, 0.0);
            for v in copies() {
                match *v {
                    Value::Ratio {
                        numerator,
                        denominator,
                    } => {
                        num += numerator;
                        den += denominator;
                    }
                    other => {
                        return Err(SynergyError::ScaleMismatch(format!(
                            "pooled baseline needs ratio values, got {other:?}"
                        )))
                    }
                }
            }
            Ok(Value::ratio(num, den))
        }
    }
}

/// [`compute_synergy`] over many sets, preserving order. The first failure is
/// reported with its index.
pub fn batch_synergy<V>(
    sets: &[SynergySet],
    vf: &V,
    baseline: BaselineKind,
) -> Result<Vec<SynergyScore>, SynergyError>
where
    V: ValueFunction + ?Sized,
{
    sets.iter()
        .enumerate()
        .map(|(index, set)| {
            compute_synergy(set, vf, baseline).map_err(|e| SynergyError::InBatch {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Ranking order: higher synergy first, ties by canonical set order.
pub fn rank_order(a: &SynergyScore, b: &SynergyScore) -> Ordering {
    b.synergy
        .total_cmp(&a.synergy)
        .then_with(|| a.set.cmp(&b.set))
}

/// Sorts scores by descending synergy. All scores must share scale and baseline.
pub fn rank_sets(mut scores: Vec<SynergyScore>) -> Result<Vec<SynergyScore>, SynergyError> {
    ensure_comparable(&scores)?;
    scores.sort_by(rank_order);
    Ok(scores)
}

pub(crate) fn ensure_comparable(scores: &[SynergyScore]) -> Result<(), SynergyError> {
    if let Some(first) = scores.first() {
        if scores
            .iter()
            .any(|s| s.scale != first.scale || s.baseline != first.baseline)
        {
            return Err(SynergyError::MixedScales);
        }
    }
    Ok(())
}
