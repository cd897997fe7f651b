//! Scenarios: a curriculum, an assignment, an intake schedule and a horizon,
//! persisted as versioned documents and run through one shared core used by
//! both the CLI and the HTTP service.

mod core;
mod service;
mod store;

pub use self::core::{
    prepare, run_projection, run_simulation, Overrides, Prepared, ProjectionReport,
    SimulationRequest, YearPopulation,
};
pub use service::{router, serve, AppState};
pub use store::{ScenarioStore, StoreError};

use serde::{Deserialize, Serialize};

use crate::graph::{EnrollmentState, Outcome};
use crate::markov::{CohortSchedule, ProbabilityAssignment};

/// One row of an assignment, laid out like the assignment CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentEntry {
    pub from_state_id: String,
    pub outcome: String,
    #[serde(default)]
    pub target_selection: String,
    pub probability: f64,
}

impl AssignmentEntry {
    pub fn from_assignment(a: &ProbabilityAssignment) -> Vec<AssignmentEntry> {
        a.entries()
            .map(|(s, o, p)| AssignmentEntry {
                from_state_id: s.id(),
                outcome: o.kind().to_string(),
                target_selection: o.selection().map(|d| d.joined(";")).unwrap_or_default(),
                probability: p,
            })
            .collect()
    }

    pub fn to_assignment(
        entries: &[AssignmentEntry],
    ) -> Result<ProbabilityAssignment, ScenarioError> {
        let mut a = ProbabilityAssignment::new();
        let mut details = Vec::new();
        for (i, e) in entries.iter().enumerate() {
            let state = e.from_state_id.parse::<EnrollmentState>();
            let outcome = Outcome::parse(&e.outcome, &e.target_selection);
            match (state, outcome) {
                (Ok(s), Some(o)) => a.set(s, o, e.probability),
                (Err(err), _) => details.push(format!("entry {i}: {err}")),
                (_, None) => details.push(format!(
                    "entry {i}: invalid outcome {:?} / {:?}",
                    e.outcome, e.target_selection
                )),
            }
        }
        if details.is_empty() {
            Ok(a)
        } else {
            Err(
                ScenarioError::new("invalid-assignment", "malformed assignment entries")
                    .with(details),
            )
        }
    }
}

/// Body of create and update requests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInput {
    pub name: String,
    pub curriculum_source: String,
    /// Uniform over every edge when omitted.
    #[serde(default)]
    pub assignment: Option<Vec<AssignmentEntry>>,
    pub schedule: CohortSchedule,
    pub horizon: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub version: u64,
    pub name: String,
    pub curriculum_source: String,
    pub assignment: Vec<AssignmentEntry>,
    pub schedule: CohortSchedule,
    pub horizon: u32,
}

/// Error with a machine-readable code, shared by the CLI and the service.
#[derive(Clone, Debug, PartialEq, Serialize, thiserror::Error)]
#[error("{message}")]
pub struct ScenarioError {
    pub code: String,
    pub message: String,
    pub details: Vec<String>,
}

impl ScenarioError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        ScenarioError {
            code: code.into(),
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn with(mut self, details: Vec<String>) -> Self {
        self.details = details;
        self
    }
}
