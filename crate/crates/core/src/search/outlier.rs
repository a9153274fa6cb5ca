use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SearchError;
use crate::synergy::{ensure_comparable, rank_order, SynergyScore};

/// Scale factor turning the MAD into a standard-deviation estimate for
/// normally distributed data.
pub const MAD_SCALE: f64 = 1.4826;
pub const DEFAULT_MADZ_THRESHOLD: f64 = 3.5;
pub const DEFAULT_IQR_THRESHOLD: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierMethod {
    /// Modified z-score `|x - median| / (1.4826 * MAD)`.
    #[serde(rename = "madz")]
    MadZ,
    /// Tukey fences `[Q1 - t*IQR, Q3 + t*IQR]`.
    Iqr,
}

impl OutlierMethod {
    pub fn default_threshold(&self) -> f64 {
        match self {
            OutlierMethod::MadZ => DEFAULT_MADZ_THRESHOLD,
            OutlierMethod::Iqr => DEFAULT_IQR_THRESHOLD,
        }
    }

    fn min_scores(&self) -> usize {
        match self {
            OutlierMethod::MadZ => 2,
            OutlierMethod::Iqr => 4,
        }
    }
}

impl fmt::Display for OutlierMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutlierMethod::MadZ => "madz",
            OutlierMethod::Iqr => "iqr",
        })
    }
}

impl FromStr for OutlierMethod {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "madz" => Ok(OutlierMethod::MadZ),
            "iqr" => Ok(OutlierMethod::Iqr),
            other => Err(SearchError::InvalidThreshold(format!("unknown outlier method {other:?}"))),
        }
    }
}

/// A flagged score.
///
/// `deviation` is the method's statistic: the modified z-score for MAD-z, or
/// the distance beyond the nearer fence in IQR units. When the dispersion is
/// zero it is infinite (serialized as `"inf"`). `distance` is the raw
/// `|synergy - median|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlaggedScore {
    pub score: SynergyScore,
    #[serde(serialize_with = "ser_stat", deserialize_with = "de_stat")]
    pub deviation: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub count: usize,
    pub median: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iqr: Option<f64>,
    /// Dispersion was zero; every score off the median is flagged.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub method: OutlierMethod,
    pub threshold: f64,
    /// Sorted by deviation, then distance, then rank order.
    pub flagged: Vec<FlaggedScore>,
    pub population: PopulationStats,
}

fn ser_stat<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*x)
    }
}

fn de_stat<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Stat {
        Num(f64),
        Text(String),
    }
    match Stat::deserialize(d)? {
        Stat::Num(x) => Ok(x),
        Stat::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Stat::Text(t) => Err(serde::de::Error::custom(format!("bad statistic {t:?}"))),
    }
}

/// Median of an already sorted slice.
pub fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Quantile of a sorted slice by linear interpolation between closest ranks
/// (`h = (n - 1) p`).
pub fn quantile_sorted(xs: &[f64], p: f64) -> f64 {
    let h = (xs.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(xs.len() - 1);
    xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo])
}

/// Flags scores whose synergy deviates from the population by more than
/// `threshold`.
pub fn detect_outliers(
    scores: &[SynergyScore],
    method: OutlierMethod,
    threshold: f64,
) -> Result<OutlierReport, SearchError> {
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(SearchError::InvalidThreshold(format!("threshold must be finite and non-negative, got {threshold}")));
    }
    if scores.len() < method.min_scores() {
        return Err(SearchError::TooFewScores {
            needed: method.min_scores(),
            got: scores.len(),
        });
    }
    ensure_comparable(scores)?;

    let mut xs: Vec<f64> = scores.iter().map(|s| s.synergy).collect();
    xs.sort_by(f64::total_cmp);
    let median = median_sorted(&xs);

    let mut flagged = Vec::new();
    let population = match method {
        OutlierMethod::MadZ => {
            let mut abs: Vec<f64> = xs.iter().map(|x| (x - median).abs()).collect();
            abs.sort_by(f64::total_cmp);
            let mad = median_sorted(&abs);
            let degenerate = mad == 0.0;
            for s in scores {
                let distance = (s.synergy - median).abs();
                let deviation = if degenerate {
                    if distance == 0.0 {
                        continue;
                    }
                    f64::INFINITY
                } else {
                    distance / (MAD_SCALE * mad)
                };
                if deviation > threshold {
                    flagged.push(FlaggedScore {
                        score: s.clone(),
                        deviation,
                        distance,
                    });
                }
            }
            PopulationStats {
                count: xs.len(),
                median,
                mad: Some(mad),
                q1: None,
                q3: None,
                iqr: None,
                degenerate,
            }
        }
        OutlierMethod::Iqr => {
            let q1 = quantile_sorted(&xs, 0.25);
            let q3 = quantile_sorted(&xs, 0.75);
            let iqr = q3 - q1;
            let degenerate = iqr == 0.0;
            for s in scores {
                let x = s.synergy;
                let distance = (x - median).abs();
                let deviation = if degenerate {
                    if x == median {
                        continue;
                    }
                    f64::INFINITY
                } else if x > q3 {
                    (x - q3) / iqr
                } else if x < q1 {
                    (q1 - x) / iqr
                } else {
                    0.0
                };
                if deviation > threshold {
                    flagged.push(FlaggedScore {
                        score: s.clone(),
                        deviation,
                        distance,
                    });
                }
            }
            PopulationStats {
                count: xs.len(),
                median,
                mad: None,
                q1: Some(q1),
                q3: Some(q3),
                iqr: Some(iqr),
                degenerate,
            }
        }
    };

    flagged.sort_by(|a, b| {
        b.deviation
            .total_cmp(&a.deviation)
            .then_with(|| b.distance.total_cmp(&a.distance))
            .then_with(|| rank_order(&a.score, &b.score))
    });
    Ok(OutlierReport {
        method,
        threshold,
        flagged,
        population,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synergy::{BaselineKind, ElementId, ScaleKind, SynergySet, Value};

    fn scores(values: &[f64]) -> Vec<SynergyScore> {
        values
            .iter()
            .enumerate()
            .map(|(i, &x)| SynergyScore {
                set: SynergySet::from_elements([
                    ElementId::new(format!("x{i:03}")).unwrap(),
                    ElementId::new("y").unwrap(),
                ])
                .unwrap(),
                set_value: Value::numeric(x),
                baseline_value: Value::numeric(0.0),
                synergy: x,
                baseline: BaselineKind::Sum,
                scale: ScaleKind::Numeric,
                low_confidence: false,
            })
            .collect()
    }

    #[test]
    fn degenerate_mad_flags_off_median() {
        let r = detect_outliers(&scores(&[0.0, 0.0, 0.0, 0.0, 10.0]), OutlierMethod::MadZ, 3.5).unwrap();
        assert!(r.population.degenerate);
        assert_eq!(r.flagged.len(), 1);
        assert_eq!(r.flagged[0].score.synergy, 10.0);
        assert!(r.flagged[0].deviation.is_infinite());
        let json = serde_json::to_string(&r.flagged[0]).unwrap();
        assert!(json.contains(r#""deviation":"inf""#));
        let back: FlaggedScore = serde_json::from_str(&json).unwrap();
        assert!(back.deviation.is_infinite());
    }

    #[test]
    fn constant_population_has_no_flags() {
        for method in [OutlierMethod::MadZ, OutlierMethod::Iqr] {
            let r = detect_outliers(&scores(&[0.4; 6]), method, method.default_threshold()).unwrap();
            assert!(r.flagged.is_empty());
        }
    }

    #[test]
    fn iqr_fixture_flags_only_the_spike() {
        // 100 evenly spaced values in [-0.495, 0.495] plus a spike at 50.
        let mut values: Vec<f64> = (0..100).map(|i| (i as f64 - 49.5) / 100.0).collect();
        values.push(50.0);
        let r = detect_outliers(&scores(&values), OutlierMethod::Iqr, 1.5).unwrap();
        // Linear-interpolation quartiles of the 101 sorted values: positions 25 and 75.
        assert!((r.population.q1.unwrap() - (-0.245)).abs() < 1e-12);
        assert!((r.population.q3.unwrap() - 0.255).abs() < 1e-12);
        assert_eq!(r.flagged.len(), 1);
        assert_eq!(r.flagged[0].score.synergy, 50.0);
        assert!((r.flagged[0].deviation - (50.0 - 0.255) / 0.5).abs() < 1e-9);
    }

    #[test]
    fn madz_statistic_matches_closed_form() {
        let values = [1.0, 2.0, 3.0, 4.0, 100.0];
        let r = detect_outliers(&scores(&values), OutlierMethod::MadZ, 3.5).unwrap();
        // median 3, absolute deviations [2, 1, 0, 1, 97] -> MAD 1.
        assert_eq!(r.population.median, 3.0);
        assert_eq!(r.population.mad, Some(1.0));
        assert_eq!(r.flagged.len(), 1);
        assert!((r.flagged[0].deviation - 97.0 / 1.4826).abs() < 1e-9);
    }

    #[test]
    fn flagged_sorted_by_deviation() {
        let values = [0.0, 0.1, -0.1, 0.05, -0.05, 9.0, -20.0, 12.0];
        let r = detect_outliers(&scores(&values), OutlierMethod::MadZ, 3.5).unwrap();
        let syn: Vec<f64> = r.flagged.iter().map(|f| f.score.synergy).collect();
        assert_eq!(syn, [-20.0, 12.0, 9.0]);
        assert!(r.flagged.iter().all(|f| f.deviation > 3.5));
    }

    #[test]
    fn too_few_scores() {
        assert!(matches!(
            detect_outliers(&scores(&[1.0]), OutlierMethod::MadZ, 3.5),
            Err(SearchError::TooFewScores { needed: 2, got: 1 })
        ));
        assert!(matches!(
            detect_outliers(&scores(&[1.0, 2.0, 3.0]), OutlierMethod::Iqr, 1.5),
            Err(SearchError::TooFewScores { needed: 4, got: 3 })
        ));
        assert!(detect_outliers(&scores(&[1.0, 2.0]), OutlierMethod::MadZ, f64::NAN).is_err());
    }
}
