//! Parse the HOU program, print diagnostics for a broken variant, and write
//! the canonical text back out.

use coursepop::dsl::{parse_curriculum, parse_curriculum_with_warnings, serialize_curriculum};
use coursepop::fixtures::HOU_SOURCE;

fn main() {
    let parsed = parse_curriculum_with_warnings(HOU_SOURCE).expect("fixture parses");
    for w in &parsed.warnings {
        println!("warning {}: {}", w.span, w.message);
    }
    print!("{}", serialize_curriculum(&parsed.curriculum));

    let broken = HOU_SOURCE.replace(
        "rule max_per_year 2",
        "rule max_per_year 2\nconstraint hard 60 -> 50",
    );
    for e in parse_curriculum(&broken).unwrap_err() {
        println!("error {e}");
    }
}
