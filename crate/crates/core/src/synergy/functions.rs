//! Ready-made value functions: explicit tables, additive weights and closures.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{ElementId, SynergyError, SynergySet, Value, ValueFunction, ValueScale};

/// Value function backed by an explicit table of set values.
///
/// Sets missing from the table report an evaluation gap.
#[derive(Clone, Debug)]
pub struct TableValueFunction {
    scale: ValueScale,
    pool: BTreeSet<ElementId>,
    table: HashMap<SynergySet, Value>,
}

impl TableValueFunction {
    pub fn new(scale: ValueScale) -> Self {
        TableValueFunction {
            scale,
            pool: BTreeSet::new(),
            table: HashMap::new(),
        }
    }

    /// Adds (or replaces) the value of `set`; its elements join the pool.
    pub fn insert(&mut self, set: SynergySet, value: Value) -> &mut Self {
        self.pool.extend(set.elements().cloned());
        self.table.insert(set, value);
        self
    }

    pub fn with(mut self, ids: &[&str], value: Value) -> Self {
        let set = SynergySet::of(ids).expect("fixture ids are non-empty");
        self.insert(set, value);
        self
    }
}

impl ValueFunction for TableValueFunction {
    fn scale(&self) -> &ValueScale {
        &self.scale
    }

    fn in_pool(&self, element: &ElementId) -> bool {
        self.pool.contains(element)
    }

    fn evaluate(&self, set: &SynergySet) -> Result<Value, SynergyError> {
        self.table
            .get(set)
            .copied()
            .ok_or_else(|| SynergyError::EvaluationGap {
                set: set.label(),
                reason: "no table entry".into(),
            })
    }
}

/// `v(S) = sum of w(e)` over every copy in `S`, optionally plus bonuses for
/// specific sets.
#[derive(Clone, Debug, Default)]
pub struct AdditiveValueFunction {
    weights: BTreeMap<ElementId, f64>,
    bonuses: HashMap<SynergySet, f64>,
}

impl AdditiveValueFunction {
    pub fn new<I>(weights: I) -> Self
    where
        I: IntoIterator<Item = (ElementId, f64)>,
    {
        AdditiveValueFunction {
            weights: weights.into_iter().collect(),
            bonuses: HashMap::new(),
        }
    }

    /// Adds `bonus` to the value of exactly `set`.
    pub fn with_bonus(mut self, set: SynergySet, bonus: f64) -> Self {
        *self.bonuses.entry(set).or_insert(0.0) += bonus;
        self
    }

    pub fn pool(&self) -> impl Iterator<Item = &ElementId> + '_ {
        self.weights.keys()
    }
}

impl ValueFunction for AdditiveValueFunction {
    fn scale(&self) -> &ValueScale {
        &ValueScale::Numeric
    }

    fn in_pool(&self, element: &ElementId) -> bool {
        self.weights.contains_key(element)
    }

    fn evaluate(&self, set: &SynergySet) -> Result<Value, SynergyError> {
        let mut total = 0.0;
        for e in set.expanded() {
            total += self
                .weights
                .get(e)
                .ok_or_else(|| SynergyError::UnknownElement(e.clone()))?;
        }
        if let Some(bonus) = self.bonuses.get(set) {
            total += bonus;
        }
        Ok(Value::numeric(total))
    }
}

/// Value function from a closure over a fixed pool.
pub struct FnValueFunction<F> {
    scale: ValueScale,
    pool: BTreeSet<ElementId>,
    f: F,
}

impl<F> FnValueFunction<F>
where
    F: Fn(&SynergySet) -> Result<Value, SynergyError> + Sync,
{
    pub fn new<I>(scale: ValueScale, pool: I, f: F) -> Self
    where
        I: IntoIterator<Item = ElementId>,
    {
        FnValueFunction {
            scale,
            pool: pool.into_iter().collect(),
            f,
        }
    }
}

impl<F> ValueFunction for FnValueFunction<F>
where
    F: Fn(&SynergySet) -> Result<Value, SynergyError> + Sync,
{
    fn scale(&self) -> &ValueScale {
        &self.scale
    }

    fn in_pool(&self, element: &ElementId) -> bool {
        self.pool.contains(element)
    }

    fn evaluate(&self, set: &SynergySet) -> Result<Value, SynergyError> {
        (self.f)(set)
    }
}
