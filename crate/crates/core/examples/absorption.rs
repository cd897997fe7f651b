//! Graduation and dropout probabilities and expected time to absorption.

use coursepop::fixtures::{hou, reference_assignment};
use coursepop::graph::build_state_graph;
use coursepop::markov::{absorption_summary, build_matrix};

fn main() {
    let g = build_state_graph(&hou());
    let summary =
        absorption_summary(&build_matrix(&g, &reference_assignment(&g)).unwrap()).unwrap();
    println!("absorbing: {}", summary.absorbing.join(", "));
    println!(
        "{:<28} {:>10} {:>8} {:>8}",
        "state", "graduate", "dropout", "years"
    );
    for r in &summary.rows {
        println!(
            "{:<28} {:>10.4} {:>8.4} {:>8.2}",
            r.state, r.graduation, r.dropout, r.expected_years
        );
    }
}
