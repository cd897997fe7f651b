//! Build the refined and aggregate state graphs and print them as dot.
//!
//! cargo run --example state_graph | dot -Tsvg > hou.svg

use coursepop::fixtures::hou;
use coursepop::graph::{aggregate_graph, build_state_graph};

fn main() {
    let g = build_state_graph(&hou());
    let a = aggregate_graph(&g);
    eprintln!(
        "{} refined states, {} aggregate states",
        g.len(),
        a.states.len()
    );
    if std::env::args().any(|a| a == "--refined") {
        print!("{}", g.to_dot());
    } else {
        print!("{}", a.to_dot());
    }
}
