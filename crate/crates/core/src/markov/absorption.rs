use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::matrix::TransitionMatrix;
use super::MarkovError;
use crate::graph::StateTag;

/// Absorption quantities from one transient state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbsorptionRow {
    pub state: String,
    /// Probability of ending in each absorbing state, keyed by its id.
    pub absorption: BTreeMap<String, f64>,
    /// Total probability of ending in an eligible state.
    pub graduation: f64,
    pub dropout: f64,
    pub expected_years: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbsorptionSummary {
    pub absorbing: Vec<String>,
    pub rows: Vec<AbsorptionRow>,
}

impl AbsorptionSummary {
    pub fn row(&self, state: &str) -> Option<&AbsorptionRow> {
        self.rows.iter().find(|r| r.state == state)
    }
}

/// Solves `(I - Q) B = R` and `(I - Q) t = 1` for every transient state.
///
/// A state is absorbing when its diagonal entry is 1. For unlabelled chains
/// ids are row indices and graduation/dropout stay 0.
pub fn absorption_summary(p: &TransitionMatrix) -> Result<AbsorptionSummary, MarkovError> {
    let n = p.dim();
    let m = p.matrix();
    let id = |i: usize| {
        p.states()
            .get(i)
            .map(|s| s.id())
            .unwrap_or_else(|| i.to_string())
    };
    let tag = |i: usize| p.states().get(i).map(|s| s.tag);

    let absorbing: Vec<usize> = (0..n).filter(|&i| m[(i, i)] == 1.0).collect();
    let transient: Vec<usize> = (0..n).filter(|&i| m[(i, i)] != 1.0).collect();

    // backwards reachability from the absorbing set
    let mut reaches = vec![false; n];
    for &a in &absorbing {
        reaches[a] = true;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !reaches[i] && (0..n).any(|j| reaches[j] && m[(i, j)] > 0.0) {
                reaches[i] = true;
                changed = true;
            }
        }
    }
    if let Some(i) = (0..n).find(|&i| !reaches[i]) {
        return Err(MarkovError::NonAbsorbing(id(i)));
    }

    let k = transient.len();
    let i_minus_q = DMatrix::from_fn(k, k, |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        delta - m[(transient[r], transient[c])]
    });
    let r = DMatrix::from_fn(k, absorbing.len(), |r, c| m[(transient[r], absorbing[c])]);
    let lu = i_minus_q.lu();
    let b = lu.solve(&r).ok_or(MarkovError::Singular)?;
    let t = lu
        .solve(&DVector::from_element(k, 1.0))
        .ok_or(MarkovError::Singular)?;
    if b.iter().chain(t.iter()).any(|x| !x.is_finite()) {
        return Err(MarkovError::Singular);
    }

    let rows = transient
        .iter()
        .enumerate()
        .map(|(ri, &s)| {
            let mut row = AbsorptionRow {
                state: id(s),
                absorption: BTreeMap::new(),
                graduation: 0.0,
                dropout: 0.0,
                expected_years: t[ri],
            };
            for (ci, &a) in absorbing.iter().enumerate() {
                let x = b[(ri, ci)];
                row.absorption.insert(id(a), x);
                match tag(a) {
                    Some(StateTag::Eligible) => row.graduation += x,
                    Some(StateTag::Dropout) => row.dropout += x,
                    _ => {}
                }
            }
            row
        })
        .collect();
    Ok(AbsorptionSummary {
        absorbing: absorbing.into_iter().map(id).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::set;
    use crate::fixtures::{hou, single};
    use crate::graph::{build_state_graph, EnrollmentState, Outcome};
    use crate::markov::{build_matrix, ProbabilityAssignment};

    fn single_chain(repeat: f64, advance: f64, dropout: f64) -> AbsorptionSummary {
        let c = single();
        let g = build_state_graph(&c);
        let code = c.modules[0].code.as_str().to_string();
        let s = EnrollmentState::active(set([code.as_str()]), set([code.as_str()]));
        let mut a = ProbabilityAssignment::uniform(&g);
        a.set(s.clone(), Outcome::Repeat, repeat);
        a.set(s.clone(), Outcome::Advance(set([])), advance);
        a.set(s, Outcome::Dropout, dropout);
        absorption_summary(&build_matrix(&g, &a).unwrap()).unwrap()
    }

    #[test]
    fn one_step_absorption() {
        let sum = single_chain(0.0, 0.7, 0.3);
        let row = sum
            .rows
            .iter()
            .find(|r| r.state.starts_with("active"))
            .unwrap();
        assert!((row.graduation - 0.7).abs() < 1e-12);
        assert!((row.dropout - 0.3).abs() < 1e-12);
        assert!((row.expected_years - 1.0).abs() < 1e-12);
        // start spends one year registering first
        assert!((sum.row("start").unwrap().expected_years - 2.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_repeats() {
        let sum = single_chain(0.2, 0.5, 0.3);
        let row = sum
            .rows
            .iter()
            .find(|r| r.state.starts_with("active"))
            .unwrap();
        assert!((row.graduation - 0.625).abs() < 1e-12);
        assert!((row.dropout - 0.375).abs() < 1e-12);
        assert!((row.expected_years - 1.25).abs() < 1e-12);
    }

    #[test]
    fn no_dropout_means_certain_graduation() {
        let g = build_state_graph(&hou());
        let a = ProbabilityAssignment::from_weights(&g, |_, n| vec![1.0; n]);
        let mut zeroed = ProbabilityAssignment::new();
        for (s, row) in a.rows() {
            let mass: f64 = row
                .iter()
                .filter(|(o, _)| **o != Outcome::Dropout)
                .map(|(_, p)| p)
                .sum();
            for (o, p) in row {
                let q = if *o == Outcome::Dropout {
                    0.0
                } else {
                    p / mass
                };
                zeroed.set(s.clone(), o.clone(), q);
            }
        }
        let sum = absorption_summary(&build_matrix(&g, &zeroed).unwrap()).unwrap();
        for row in &sum.rows {
            assert!((row.graduation - 1.0).abs() < 1e-9, "{}", row.state);
        }
        assert_eq!(sum.absorbing.len(), 4);
    }

    #[test]
    fn rows_sum_to_one() {
        let g = build_state_graph(&hou());
        let sum =
            absorption_summary(&build_matrix(&g, &ProbabilityAssignment::uniform(&g)).unwrap())
                .unwrap();
        for row in &sum.rows {
            let total: f64 = row.absorption.values().sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!((row.graduation + row.dropout - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn trapped_state_is_reported() {
        // 0 -> 1 <-> 2, nothing reaches the absorbing state 3 from 1 or 2
        let p = TransitionMatrix::from_rows(&[
            vec![0.0, 0.5, 0.0, 0.5],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(
            absorption_summary(&p),
            Err(MarkovError::NonAbsorbing("1".into()))
        );
    }
}
