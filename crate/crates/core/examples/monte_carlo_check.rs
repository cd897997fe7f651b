//! Compare simulated students against the expected projection.

use coursepop::fixtures::{hou, reference_assignment};
use coursepop::graph::build_state_graph;
use coursepop::markov::{build_matrix, project_cohorts, CohortSchedule};
use coursepop::montecarlo::{simulate, SimulationConfig};

fn main() {
    let g = build_state_graph(&hou());
    let a = reference_assignment(&g);
    let schedule = CohortSchedule::single(2024, 1000.0);
    let exact = project_cohorts(&schedule, &build_matrix(&g, &a).unwrap(), 6).unwrap();
    let cfg = SimulationConfig {
        replicas: 100_000,
        seed: 7,
        horizon: 6,
        schedule,
        traces: false,
    };
    let mc = simulate(&g, &a, &cfg).unwrap();
    let (mut inside, mut cells) = (0, 0);
    for (e, y) in exact.iter().zip(&mc.years) {
        for (s, state) in g.states().iter().enumerate() {
            if e.values[s] == 0.0 {
                continue;
            }
            let z = (y.mean[s] - e.values[s]) / y.se[s];
            cells += 1;
            inside += (z.abs() <= 3.0) as usize;
            println!(
                "{} {:<28} exact {:>8.2} mc {:>8.2} z {:>6.2}",
                y.year,
                state.to_string(),
                e.values[s],
                y.mean[s],
                z
            );
        }
    }
    println!("{inside}/{cells} cells within 3 standard errors");
}
