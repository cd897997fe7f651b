use std::collections::BTreeMap;

use nalgebra::RowDVector;
use serde::{Deserialize, Serialize};

use super::matrix::TransitionMatrix;
use super::MarkovError;
use crate::curriculum::ModuleCode;
use crate::graph::{StateGraph, StateTag};

/// Expected number of students per state in a given year.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PopulationVector {
    pub year: i32,
    pub values: Vec<f64>,
}

impl PopulationVector {
    pub fn new(year: i32, values: Vec<f64>) -> Result<Self, MarkovError> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(MarkovError::NegativePopulation { index, value });
        }
        Ok(PopulationVector { year, values })
    }

    /// `count` students in state `index`, nobody elsewhere.
    pub fn unit(year: i32, dim: usize, index: usize, count: f64) -> Self {
        let mut values = vec![0.0; dim];
        values[index] = count;
        PopulationVector { year, values }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Annual intake at the start state, keyed by calendar year.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortSchedule {
    pub intakes: BTreeMap<i32, f64>,
}

impl CohortSchedule {
    pub fn new(intakes: impl IntoIterator<Item = (i32, f64)>) -> Self {
        CohortSchedule {
            intakes: intakes.into_iter().collect(),
        }
    }

    /// A single cohort admitted in `year`.
    pub fn single(year: i32, intake: f64) -> Self {
        Self::new([(year, intake)])
    }

    pub fn first_year(&self) -> Option<i32> {
        self.intakes.keys().next().copied()
    }

    pub fn intake(&self, year: i32) -> f64 {
        self.intakes.get(&year).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.intakes.values().sum()
    }

    /// Checks intakes and that every year falls inside `horizon` years from
    /// the first one.
    pub fn validate(&self, horizon: u32) -> Result<(), MarkovError> {
        if horizon == 0 {
            return Err(MarkovError::ZeroHorizon);
        }
        let Some(first) = self.first_year() else {
            return Err(MarkovError::EmptySchedule);
        };
        let last = first + horizon as i32 - 1;
        for (&year, &value) in &self.intakes {
            if !(value.is_finite() && value >= 0.0) {
                return Err(MarkovError::NegativeIntake { year, value });
            }
            if year > last {
                return Err(MarkovError::YearOutOfRange { year, first, last });
            }
        }
        Ok(())
    }
}

/// One year of the chain: `v · P`.
pub fn step(v: &PopulationVector, p: &TransitionMatrix) -> Result<PopulationVector, MarkovError> {
    check_dim(v, p)?;
    let row = RowDVector::from_row_slice(&v.values) * p.matrix();
    Ok(PopulationVector {
        year: v.year + 1,
        values: row.iter().copied().collect(),
    })
}

/// Population in year `n` of a cohort whose first-year vector is `v1`:
/// `v1 · P^(n-1)` by iterated vector-matrix products.
pub fn project(
    v1: &PopulationVector,
    p: &TransitionMatrix,
    n: u32,
) -> Result<PopulationVector, MarkovError> {
    if n == 0 {
        return Err(MarkovError::ZeroHorizon);
    }
    check_dim(v1, p)?;
    let mut v = v1.clone();
    for _ in 1..n {
        v = step(&v, p)?;
    }
    Ok(v)
}

/// Same as [`project`] but through a single matrix power.
pub fn project_by_power(
    v1: &PopulationVector,
    p: &TransitionMatrix,
    n: u32,
) -> Result<PopulationVector, MarkovError> {
    if n == 0 {
        return Err(MarkovError::ZeroHorizon);
    }
    check_dim(v1, p)?;
    let row = RowDVector::from_row_slice(&v1.values) * p.power(n - 1);
    Ok(PopulationVector {
        year: v1.year + n as i32 - 1,
        values: row.iter().copied().collect(),
    })
}

/// One vector per calendar year from the schedule's first year, `horizon`
/// years long. Cohorts are superposed: `v_t = v_(t-1) · P + intake(t) · e_start`.
pub fn project_cohorts(
    s: &CohortSchedule,
    p: &TransitionMatrix,
    horizon: u32,
) -> Result<Vec<PopulationVector>, MarkovError> {
    s.validate(horizon)?;
    let first = s.first_year().expect("validated");
    let entry = p.intake_index();
    let mut out: Vec<PopulationVector> = Vec::with_capacity(horizon as usize);
    for t in 0..horizon as i32 {
        let year = first + t;
        let mut v = match out.last() {
            Some(prev) => step(prev, p)?,
            None => PopulationVector::unit(year, p.dim(), entry, 0.0),
        };
        v.values[entry] += s.intake(year);
        out.push(v);
    }
    Ok(out)
}

/// Expected enrolment per module in one year.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModuleLoads {
    pub year: i32,
    pub loads: BTreeMap<ModuleCode, f64>,
}

/// `load(m, t)` sums the population of active states currently enrolled in
/// `m`. Every module that appears in some state of `g` is reported.
pub fn module_loads(vectors: &[PopulationVector], g: &StateGraph) -> Vec<ModuleLoads> {
    let active: Vec<usize> = g.indices_with(StateTag::Active).collect();
    let mut zero = BTreeMap::new();
    for &i in &active {
        for m in &g.states()[i].current {
            zero.insert(m.clone(), 0.0);
        }
    }
    vectors
        .iter()
        .map(|v| {
            let mut loads = zero.clone();
            for &i in &active {
                let x = v.values.get(i).copied().unwrap_or(0.0);
                for m in &g.states()[i].current {
                    *loads.get_mut(m).expect("seeded") += x;
                }
            }
            ModuleLoads {
                year: v.year,
                loads,
            }
        })
        .collect()
}

fn check_dim(v: &PopulationVector, p: &TransitionMatrix) -> Result<(), MarkovError> {
    if v.values.len() != p.dim() {
        return Err(MarkovError::DimensionMismatch {
            expected: p.dim(),
            found: v.values.len(),
        });
    }
    Ok(())
}
