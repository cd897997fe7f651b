use nalgebra::DMatrix;

use super::assignment::{AssignmentIssue, ProbabilityAssignment, ROW_TOLERANCE};
use super::MarkovError;
use crate::graph::{EnrollmentState, StateGraph};

/// Row-stochastic yearly transition matrix over the graph's canonical state
/// order. Matrices built with [`TransitionMatrix::from_rows`] carry no state
/// labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    states: Vec<EnrollmentState>,
    p: DMatrix<f64>,
}

/// `P[s, t]` is the sum of the assignment's probabilities on edges `s -> t`;
/// absorbing states get `P[s, s] = 1`.
pub fn build_matrix(
    g: &StateGraph,
    a: &ProbabilityAssignment,
) -> Result<TransitionMatrix, MarkovError> {
    a.validate(g).map_err(MarkovError::Assignment)?;
    let n = g.len();
    let mut p = DMatrix::zeros(n, n);
    for (i, s) in g.states().iter().enumerate() {
        let out = g.outgoing(i);
        if out.is_empty() {
            p[(i, i)] = 1.0;
            continue;
        }
        for e in out {
            p[(i, e.to)] += a.get(s, &e.label);
        }
    }
    Ok(TransitionMatrix {
        states: g.states().to_vec(),
        p,
    })
}

impl TransitionMatrix {
    /// An unlabelled chain from explicit rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MarkovError> {
        let n = rows.len();
        let mut issues = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MarkovError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            if let Some(&v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                issues.push(AssignmentIssue::OutOfRange {
                    state: i.to_string(),
                    outcome: "row".into(),
                    value: v,
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                issues.push(AssignmentIssue::RowSum {
                    state: i.to_string(),
                    sum,
                });
            }
        }
        if !issues.is_empty() {
            return Err(MarkovError::Assignment(issues));
        }
        Ok(TransitionMatrix {
            states: Vec::new(),
            p: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.p[(from, to)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// State labels in matrix order; empty for unlabelled chains.
    pub fn states(&self) -> &[EnrollmentState] {
        &self.states
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.p.row_iter().map(|r| r.sum()).collect()
    }

    /// Index that receives new intakes: the start state, or row 0 of an
    /// unlabelled chain.
    pub fn intake_index(&self) -> usize {
        self.states
            .iter()
            .position(|s| *s == EnrollmentState::start())
            .unwrap_or(0)
    }

    /// `P^m` by repeated squaring.
    pub fn power(&self, mut m: u32) -> DMatrix<f64> {
        let n = self.dim();
        let mut result = DMatrix::identity(n, n);
        let mut base = self.p.clone();
        while m > 0 {
            if m & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            m >>= 1;
        }
        result
    }
}
