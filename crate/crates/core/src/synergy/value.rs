use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SynergyError;

/// Kind of scale a value function reports on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    Numeric,
    Ratio,
    Ordinal,
}

impl fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleKind::Numeric => "numeric",
            ScaleKind::Ratio => "ratio",
            ScaleKind::Ordinal => "ordinal",
        })
    }
}

/// Declared scale of a value function. Ordinal scales carry their labels,
/// lowest first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueScale {
    Numeric,
    Ratio,
    Ordinal { labels: Vec<String> },
}

impl ValueScale {
    pub fn ordinal<I, S>(labels: I) -> Result<Self, SynergyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(SynergyError::InvalidScale("ordinal scale needs at least one label".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(SynergyError::InvalidScale(format!("duplicate ordinal label {l:?}")));
            }
        }
        Ok(ValueScale::Ordinal { labels })
    }

    pub fn kind(&self) -> ScaleKind {
        match self {
            ValueScale::Numeric => ScaleKind::Numeric,
            ValueScale::Ratio => ScaleKind::Ratio,
            ValueScale::Ordinal { .. } => ScaleKind::Ordinal,
        }
    }

    /// Checks that a value produced by a function declaring this scale fits it.
    pub(crate) fn check(&self, value: &Value) -> Result<(), SynergyError> {
        match (self, value) {
            (ValueScale::Numeric, Value::Numeric { value }) if value.is_finite() => Ok(()),
            (ValueScale::Ratio, Value::Ratio { numerator, denominator })
                if numerator.is_finite() && *numerator >= 0.0 && *denominator > 0.0 && denominator.is_finite() =>
            {
                Ok(())
            }
            (ValueScale::Ordinal { labels }, Value::Ordinal { rank }) if (*rank as usize) < labels.len() => Ok(()),
            (ValueScale::Numeric, Value::Numeric { .. })
            | (ValueScale::Ratio, Value::Ratio { .. })
            | (ValueScale::Ordinal { .. }, Value::Ordinal { .. }) => {
                Err(SynergyError::InvalidValue(format!("{value:?} is out of range for {} scale", self.kind())))
            }
            _ => Err(SynergyError::ScaleMismatch(format!(
                "function declares {} scale but produced {value:?}",
                self.kind()
            ))),
        }
    }
}

/// 0-based rank of `label` on an ordinal scale.
pub fn ordinal_rank(scale: &ValueScale, label: &str) -> Result<u32, SynergyError> {
    match scale {
        ValueScale::Ordinal { labels } => labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u32)
            .ok_or_else(|| SynergyError::UnknownLabel(label.to_string())),
        other => Err(SynergyError::ScaleMismatch(format!(
            "ordinal_rank called on {} scale",
            other.kind()
        ))),
    }
}

/// A measured value.
///
/// `RankAggregate` only appears as a baseline on ordinal scales: sums and means
/// of ranks are not clamped to the label range and may be fractional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Value {
    Numeric { value: f64 },
    Ratio { numerator: f64, denominator: f64 },
    Ordinal { rank: u32 },
    RankAggregate { rank: f64 },
}

impl Value {
    pub fn numeric(value: f64) -> Self {
        Value::Numeric { value }
    }

    pub fn ratio(numerator: f64, denominator: f64) -> Self {
        Value::Ratio {
            numerator,
            denominator,
        }
    }

    pub fn ordinal(rank: u32) -> Self {
        Value::Ordinal { rank }
    }

    /// Canonical real embedding: numeric values as-is, ratios divided out,
    /// ordinal values as their rank.
    pub fn as_real(&self) -> f64 {
        match *self {
            Value::Numeric { value } => value,
            Value::Ratio {
                numerator,
                denominator,
            } => numerator / denominator,
            Value::Ordinal { rank } => rank as f64,
            Value::RankAggregate { rank } => rank,
        }
    }
}

/// How singleton values combine into the expected non-synergic value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Sum of the singleton values.
    Sum,
    /// Sum divided by the set cardinality.
    Mean,
    /// `1 - prod(1 - p)` over singleton probabilities.
    #[serde(rename = "independent")]
    IndependentUnion,
    /// Summed numerators over summed denominators of ratio values.
    #[serde(rename = "pooled")]
    PooledRatio,
}

impl BaselineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineKind::Sum => "sum",
            BaselineKind::Mean => "mean",
            BaselineKind::IndependentUnion => "independent",
            BaselineKind::PooledRatio => "pooled",
        }
    }

    pub fn supports(&self, scale: ScaleKind) -> bool {
        match self {
            BaselineKind::Sum | BaselineKind::Mean => true,
            BaselineKind::IndependentUnion => scale == ScaleKind::Numeric,
            BaselineKind::PooledRatio => scale == ScaleKind::Ratio,
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = SynergyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(BaselineKind::Sum),
            "mean" => Ok(BaselineKind::Mean),
            "independent" => Ok(BaselineKind::IndependentUnion),
            "pooled" => Ok(BaselineKind::PooledRatio),
            other => Err(SynergyError::UnknownBaseline(other.to_string())),
        }
    }
}
