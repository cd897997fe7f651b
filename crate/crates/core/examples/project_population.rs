//! Project one cohort of 100 students through the HOU program.

use coursepop::fixtures::{hou, reference_assignment};
use coursepop::graph::build_state_graph;
use coursepop::markov::{build_matrix, project, PopulationVector};

fn main() {
    let g = build_state_graph(&hou());
    let p = build_matrix(&g, &reference_assignment(&g)).unwrap();
    let v1 = PopulationVector::unit(2024, p.dim(), p.intake_index(), 100.0);
    for n in 1..=8 {
        let v = project(&v1, &p, n).unwrap();
        let shown: Vec<String> = g
            .states()
            .iter()
            .zip(&v.values)
            .filter(|(_, x)| **x > 0.05)
            .map(|(s, x)| format!("{s}={x:.1}"))
            .collect();
        println!("{}: {}", v.year, shown.join(" "));
    }
}
