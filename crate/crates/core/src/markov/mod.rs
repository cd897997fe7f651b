//! Transition matrices, population projection, absorption quantities and
//! estimation of transition probabilities from enrolment records.

mod absorption;
mod assignment;
mod estimate;
mod matrix;
mod projection;

pub use absorption::{absorption_summary, AbsorptionRow, AbsorptionSummary};
pub use assignment::{
    renormalize, AssignmentIssue, OverrideMode, ProbabilityAssignment, ROW_TOLERANCE,
};
pub use estimate::{
    estimate_probabilities, EnrollmentRecord, EstimationConfig, EstimationReport, ModuleOutcome,
    RejectedStudent,
};
pub use matrix::{build_matrix, TransitionMatrix};
pub use projection::{
    module_loads, project, project_by_power, project_cohorts, step, CohortSchedule, ModuleLoads,
    PopulationVector,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarkovError {
    #[error("invalid assignment: {}", join(.0))]
    Assignment(Vec<AssignmentIssue>),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("cohort schedule is empty")]
    EmptySchedule,
    #[error("intake year {year} is outside the projection window {first}..{last}")]
    YearOutOfRange { year: i32, first: i32, last: i32 },
    #[error("intake for year {year} is negative or not finite ({value})")]
    NegativeIntake { year: i32, value: f64 },
    #[error("population entry {index} is negative or not finite ({value})")]
    NegativePopulation { index: usize, value: f64 },
    #[error("non-absorbing chain: state {0} cannot reach an absorbing state")]
    NonAbsorbing(String),
    #[error("singular system while solving for absorption")]
    Singular,
    #[error("invalid estimation setting: {0}")]
    InvalidSetting(String),
}

fn join(issues: &[AssignmentIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
