use serde::{Deserialize, Serialize};

use super::{AssignmentEntry, ScenarioError};
use crate::curriculum::Curriculum;
use crate::dsl::parse_curriculum;
use crate::graph::{build_state_graph, StateGraph};
use crate::markov::{
    absorption_summary, build_matrix, module_loads, project_cohorts, AbsorptionSummary,
    CohortSchedule, MarkovError, ModuleLoads, OverrideMode, ProbabilityAssignment,
};
use crate::montecarlo::{simulate, SimulationConfig, SimulationError, SimulationResult};

/// A validated scenario ready to run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub curriculum: Curriculum,
    pub graph: StateGraph,
    pub assignment: ProbabilityAssignment,
    pub schedule: CohortSchedule,
    pub horizon: u32,
}

/// Parses and validates everything a run needs. A missing assignment
/// defaults to uniform over each state's edges.
pub fn prepare(
    source: &str,
    assignment: Option<ProbabilityAssignment>,
    schedule: CohortSchedule,
    horizon: u32,
) -> Result<Prepared, ScenarioError> {
    let curriculum = parse_curriculum(source).map_err(|errors| {
        let details: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
        ScenarioError::new("invalid-curriculum", details[0].clone()).with(details)
    })?;
    let graph = build_state_graph(&curriculum);
    if graph.outgoing(graph.start()).is_empty() {
        return Err(ScenarioError::new(
            "no-paths",
            "the curriculum admits no tuition path",
        ));
    }
    let assignment = assignment.unwrap_or_else(|| ProbabilityAssignment::uniform(&graph));
    check_assignment(&assignment, &graph)?;
    check_schedule(&schedule, horizon)?;
    Ok(Prepared {
        curriculum,
        graph,
        assignment,
        schedule,
        horizon,
    })
}

fn check_assignment(a: &ProbabilityAssignment, g: &StateGraph) -> Result<(), ScenarioError> {
    a.validate(g).map_err(|issues| {
        ScenarioError::new(
            "invalid-assignment",
            "assignment does not fit the state graph",
        )
        .with(issues.iter().map(|i| i.to_string()).collect())
    })
}

fn check_schedule(s: &CohortSchedule, horizon: u32) -> Result<(), ScenarioError> {
    s.validate(horizon)
        .map_err(|e| ScenarioError::new("invalid-schedule", e.to_string()))
}

fn markov(e: MarkovError) -> ScenarioError {
    match e {
        MarkovError::Assignment(issues) => ScenarioError::new(
            "invalid-assignment",
            "assignment does not fit the state graph",
        )
        .with(issues.iter().map(|i| i.to_string()).collect()),
        MarkovError::NonAbsorbing(_) | MarkovError::Singular => {
            ScenarioError::new("non-absorbing", e.to_string())
        }
        other => ScenarioError::new("invalid-schedule", other.to_string()),
    }
}

/// What-if changes applied to a run without touching the stored scenario.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(default)]
    pub assignment: Vec<AssignmentEntry>,
    #[serde(default)]
    pub mode: OverrideMode,
    #[serde(default)]
    pub schedule: Option<CohortSchedule>,
    #[serde(default)]
    pub horizon: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YearPopulation {
    pub year: i32,
    /// In the order of `states`.
    pub population: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub states: Vec<String>,
    pub years: Vec<YearPopulation>,
    pub loads: Vec<ModuleLoads>,
    pub absorption: AbsorptionSummary,
    pub effective_assignment: Vec<AssignmentEntry>,
}

/// Projects every cohort of the schedule over the horizon.
pub fn run_projection(p: &Prepared, o: &Overrides) -> Result<ProjectionReport, ScenarioError> {
    let a = effective_assignment(p, o)?;
    let schedule = o.schedule.clone().unwrap_or_else(|| p.schedule.clone());
    let horizon = o.horizon.unwrap_or(p.horizon);
    check_schedule(&schedule, horizon)?;

    let matrix = build_matrix(&p.graph, &a).map_err(markov)?;
    let vectors = project_cohorts(&schedule, &matrix, horizon).map_err(markov)?;
    let absorption = absorption_summary(&matrix).map_err(markov)?;
    Ok(ProjectionReport {
        states: p.graph.states().iter().map(|s| s.id()).collect(),
        loads: module_loads(&vectors, &p.graph),
        years: vectors
            .into_iter()
            .map(|v| YearPopulation {
                year: v.year,
                population: v.values,
            })
            .collect(),
        absorption,
        effective_assignment: AssignmentEntry::from_assignment(&a),
    })
}

fn effective_assignment(
    p: &Prepared,
    o: &Overrides,
) -> Result<ProbabilityAssignment, ScenarioError> {
    if o.assignment.is_empty() {
        return Ok(p.assignment.clone());
    }
    let partial = AssignmentEntry::to_assignment(&o.assignment)?;
    p.assignment
        .with_overrides(&p.graph, &partial, o.mode)
        .map_err(|issues| {
            ScenarioError::new("invalid-overrides", "overrides break the assignment")
                .with(issues.iter().map(|i| i.to_string()).collect())
        })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationRequest {
    pub replicas: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub horizon: Option<u32>,
    #[serde(default)]
    pub schedule: Option<CohortSchedule>,
}

pub fn run_simulation(
    p: &Prepared,
    r: &SimulationRequest,
) -> Result<SimulationResult, ScenarioError> {
    let cfg = SimulationConfig {
        replicas: r.replicas,
        seed: r.seed,
        horizon: r.horizon.unwrap_or(p.horizon),
        schedule: r.schedule.clone().unwrap_or_else(|| p.schedule.clone()),
        traces: false,
    };
    simulate(&p.graph, &p.assignment, &cfg).map_err(|e| match e {
        SimulationError::ZeroReplicas => ScenarioError::new("invalid-simulation", e.to_string()),
        SimulationError::Markov(m) => markov(m),
    })
}
