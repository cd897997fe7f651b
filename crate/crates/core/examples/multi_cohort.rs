//! Superpose three annual intakes and print per-module loads.

use coursepop::fixtures::{hou, reference_assignment, HOU_INTAKES};
use coursepop::formats::{read_intakes, write_loads};
use coursepop::graph::build_state_graph;
use coursepop::markov::{build_matrix, module_loads, project_cohorts};

fn main() {
    let g = build_state_graph(&hou());
    let p = build_matrix(&g, &reference_assignment(&g)).unwrap();
    let schedule = read_intakes(HOU_INTAKES).unwrap();
    let vectors = project_cohorts(&schedule, &p, 8).unwrap();
    for v in &vectors {
        println!("{} enrolled or absorbed: {:.1}", v.year, v.total());
    }
    print!("{}", write_loads(&module_loads(&vectors, &g)));
}
