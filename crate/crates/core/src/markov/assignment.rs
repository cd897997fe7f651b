use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{EnrollmentState, Outcome, StateGraph};

/// Tolerance on row sums of assignments and transition matrices.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// A problem with one entry or row of a [`ProbabilityAssignment`].
#[derive(Clone, Debug, PartialEq, Serialize, thiserror::Error)]
#[serde(tag = "code", rename_all = "kebab-case")]
pub enum AssignmentIssue {
    #[error("unknown state {state}")]
    UnknownState { state: String },
    #[error("non-edge: state {state} has no {outcome} transition")]
    NonEdge { state: String, outcome: String },
    #[error("probability {value} for {state} {outcome} is outside [0, 1]")]
    OutOfRange {
        state: String,
        outcome: String,
        value: f64,
    },
    #[error("row {state} sums to {sum}, not 1")]
    RowSum { state: String, sum: f64 },
}

/// How partial overrides are merged into an existing assignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverrideMode {
    /// Overridden entries replace the prior ones; the resulting row must
    /// already sum to one.
    #[default]
    Strict,
    /// Overridden entries are pinned and the remaining outcomes of the row
    /// are scaled proportionally to fill the rest of the mass.
    Renormalize,
}

/// Per-state distributions over outgoing edges. Entries not present are 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbabilityAssignment {
    rows: BTreeMap<EnrollmentState, BTreeMap<Outcome, f64>>,
}

impl ProbabilityAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, state: EnrollmentState, outcome: Outcome, p: f64) {
        self.rows.entry(state).or_default().insert(outcome, p);
    }

    pub fn get(&self, state: &EnrollmentState, outcome: &Outcome) -> f64 {
        self.rows
            .get(state)
            .and_then(|r| r.get(outcome))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn row(&self, state: &EnrollmentState) -> Option<&BTreeMap<Outcome, f64>> {
        self.rows.get(state)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&EnrollmentState, &BTreeMap<Outcome, f64>)> {
        self.rows.iter()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&EnrollmentState, &Outcome, f64)> {
        self.rows
            .iter()
            .flat_map(|(s, r)| r.iter().map(move |(o, p)| (s, o, *p)))
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Uniform distribution over every outgoing edge of every transient
    /// state.
    pub fn uniform(g: &StateGraph) -> Self {
        Self::from_weights(g, |_, edges| vec![1.0; edges])
    }

    /// Builds an assignment from per-state weights (normalised here). The
    /// closure receives the state and its out-degree.
    pub fn from_weights(
        g: &StateGraph,
        mut weights: impl FnMut(&EnrollmentState, usize) -> Vec<f64>,
    ) -> Self {
        let mut a = ProbabilityAssignment::new();
        for (i, s) in g.states().iter().enumerate() {
            let out = g.outgoing(i);
            if out.is_empty() {
                continue;
            }
            let w = weights(s, out.len());
            assert_eq!(w.len(), out.len(), "one weight per outgoing edge");
            let total: f64 = w.iter().sum();
            for (e, wi) in out.iter().zip(&w) {
                a.set(s.clone(), e.label.clone(), wi / total);
            }
        }
        a
    }

    /// Checks that every entry sits on an edge of `g`, lies in [0, 1], and
    /// that every transient state's row sums to one.
    pub fn validate(&self, g: &StateGraph) -> Result<(), Vec<AssignmentIssue>> {
        let mut issues = Vec::new();
        for (state, row) in &self.rows {
            let Some(i) = g.index_of(state) else {
                issues.push(AssignmentIssue::UnknownState { state: state.id() });
                continue;
            };
            let out = g.outgoing(i);
            for (outcome, &p) in row {
                if !out.iter().any(|e| &e.label == outcome) {
                    issues.push(AssignmentIssue::NonEdge {
                        state: state.id(),
                        outcome: outcome.to_string(),
                    });
                } else if !(0.0..=1.0).contains(&p) {
                    issues.push(AssignmentIssue::OutOfRange {
                        state: state.id(),
                        outcome: outcome.to_string(),
                        value: p,
                    });
                }
            }
        }
        for (i, s) in g.states().iter().enumerate() {
            if g.outgoing(i).is_empty() {
                continue;
            }
            let sum: f64 = self.rows.get(s).map(|r| r.values().sum()).unwrap_or(0.0);
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                issues.push(AssignmentIssue::RowSum { state: s.id(), sum });
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    /// Merges `overrides` into a copy of `self`. Rows without overrides are
    /// untouched.
    pub fn with_overrides(
        &self,
        g: &StateGraph,
        overrides: &ProbabilityAssignment,
        mode: OverrideMode,
    ) -> Result<ProbabilityAssignment, Vec<AssignmentIssue>> {
        let mut issues = Vec::new();
        let mut merged = self.clone();
        for (state, pinned) in &overrides.rows {
            let Some(i) = g.index_of(state) else {
                issues.push(AssignmentIssue::UnknownState { state: state.id() });
                continue;
            };
            let edges: Vec<&Outcome> = g.outgoing(i).iter().map(|e| &e.label).collect();
            let mut bad = false;
            for (outcome, &p) in pinned {
                if !edges.contains(&outcome) {
                    issues.push(AssignmentIssue::NonEdge {
                        state: state.id(),
                        outcome: outcome.to_string(),
                    });
                    bad = true;
                } else if !(0.0..=1.0).contains(&p) {
                    issues.push(AssignmentIssue::OutOfRange {
                        state: state.id(),
                        outcome: outcome.to_string(),
                        value: p,
                    });
                    bad = true;
                }
            }
            if bad {
                continue;
            }
            let prior = self.rows.get(state).cloned().unwrap_or_default();
            let row = match mode {
                OverrideMode::Strict => {
                    let mut row = prior;
                    row.extend(pinned.iter().map(|(o, p)| (o.clone(), *p)));
                    row
                }
                OverrideMode::Renormalize => {
                    let fixed: f64 = pinned.values().sum();
                    if fixed > 1.0 + ROW_TOLERANCE {
                        issues.push(AssignmentIssue::RowSum {
                            state: state.id(),
                            sum: fixed,
                        });
                        continue;
                    }
                    renormalize(&edges, &prior, pinned)
                }
            };
            let sum: f64 = row.values().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                issues.push(AssignmentIssue::RowSum {
                    state: state.id(),
                    sum,
                });
                continue;
            }
            merged.rows.insert(state.clone(), row);
        }
        if issues.is_empty() {
            Ok(merged)
        } else {
            Err(issues)
        }
    }

    /// Largest absolute difference between the two assignments over the
    /// states accepted by `filter`.
    pub fn max_abs_diff(
        &self,
        other: &ProbabilityAssignment,
        mut filter: impl FnMut(&EnrollmentState) -> bool,
    ) -> f64 {
        let mut worst: f64 = 0.0;
        for (state, row) in self.rows.iter().chain(other.rows.iter()) {
            if !filter(state) {
                continue;
            }
            for outcome in row.keys() {
                let d = (self.get(state, outcome) - other.get(state, outcome)).abs();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Pinned entries keep their values; the remaining edges share `1 - pinned`
/// in proportion to their prior values (evenly if they had no prior mass).
pub fn renormalize(
    edges: &[&Outcome],
    prior: &BTreeMap<Outcome, f64>,
    pinned: &BTreeMap<Outcome, f64>,
) -> BTreeMap<Outcome, f64> {
    let fixed: f64 = pinned.values().sum();
    let rest: Vec<&Outcome> = edges
        .iter()
        .copied()
        .filter(|o| !pinned.contains_key(o))
        .collect();
    let prior_mass: f64 = rest
        .iter()
        .map(|o| prior.get(o).copied().unwrap_or(0.0))
        .sum();
    let remaining = 1.0 - fixed;
    let mut row: BTreeMap<Outcome, f64> = pinned.clone();
    for o in rest {
        let p = if prior_mass > 0.0 {
            prior.get(o).copied().unwrap_or(0.0) * remaining / prior_mass
        } else {
            remaining / (edges.len() - pinned.len()) as f64
        };
        row.insert(o.clone(), p);
    }
    row
}

impl fmt::Display for ProbabilityAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, o, p) in self.entries() {
            writeln!(f, "{s} {o} {p}")?;
        }
        Ok(())
    }
}
