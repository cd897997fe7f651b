//! Generate synthetic enrolment records from a known assignment and
//! estimate it back, with and without discounting old years.

use coursepop::fixtures::{hou, reference_assignment};
use coursepop::graph::build_state_graph;
use coursepop::markov::{estimate_probabilities, CohortSchedule, EstimationConfig};
use coursepop::montecarlo::{generate_records, SimulationConfig};

fn main() {
    let g = build_state_graph(&hou());
    let truth = reference_assignment(&g);
    let cfg = SimulationConfig {
        replicas: 5_000,
        seed: 3,
        horizon: 12,
        schedule: CohortSchedule::new([(2010, 5_000.0), (2012, 5_000.0)]),
        traces: false,
    };
    let records = generate_records(&g, &truth, &cfg).unwrap();
    println!("{} records", records.len());

    for lambda in [1.0, 0.8] {
        let est = estimate_probabilities(
            &records,
            &g,
            &EstimationConfig {
                lambda,
                reference_year: Some(2023),
                ..Default::default()
            },
        )
        .unwrap();
        let err = truth.max_abs_diff(&est.assignment, |s| est.visits_of(s) >= 100);
        println!(
            "lambda {lambda}: max error {err:.4}, {} rejected, {} fallback rows",
            est.rejected.len(),
            est.fallback_states.len()
        );
    }
}
