//! Reference programs used throughout the examples and tests.

use crate::curriculum::{
    set, ChoiceGroup, Curriculum, ModuleDef, PrecedenceConstraint, ProgramRules,
};
use crate::graph::{Outcome, StateGraph, StateTag};
use crate::markov::ProbabilityAssignment;

/// DSL source of the five-module HOU masters program.
pub const HOU_SOURCE: &str = include_str!("../fixtures/hou.cur");

/// Two compulsory modules taken strictly in order, one per year.
pub const TINY_SOURCE: &str = include_str!("../fixtures/tiny.cur");

/// [`reference_assignment`] on the HOU graph, as CSV.
pub const HOU_PROBS: &str = include_str!("../fixtures/hou_probs.csv");

/// Three cohorts of 100, 120 and 90 students.
pub const HOU_INTAKES: &str = include_str!("../fixtures/hou_intakes.csv");

fn module(code: &str, level: &str, compulsory: bool, year: u32) -> ModuleDef {
    ModuleDef {
        code: code.into(),
        level: level.into(),
        compulsory,
        first_marker: false,
        last_marker: false,
        nominal_year: year,
    }
}

/// The HOU program in canonical form, built by hand (independent of the
/// parser).
pub fn hou() -> Curriculum {
    let mut m50 = module("50", "junior", true, 1);
    m50.first_marker = true;
    Curriculum {
        name: "MSC-IS".into(),
        modules: vec![
            m50,
            module("51", "junior", true, 1),
            module("60", "senior", false, 2),
            module("61", "senior", false, 2),
            module("62", "senior", false, 2),
        ],
        constraints: vec![
            PrecedenceConstraint::hard("50", "60"),
            PrecedenceConstraint::hard("50", "61"),
            PrecedenceConstraint::hard("51", "62"),
            PrecedenceConstraint::soft("50", "62"),
            PrecedenceConstraint::soft("51", "60"),
            PrecedenceConstraint::soft("51", "61"),
        ],
        choice_groups: vec![ChoiceGroup {
            members: set(["60", "61", "62"]),
            required: 2,
        }],
        rules: ProgramRules {
            max_modules_per_year: 2,
            modules_required_for_thesis: 4,
        },
    }
}

pub fn tiny() -> Curriculum {
    let mut a = module("A", "junior", true, 1);
    a.first_marker = true;
    Curriculum {
        name: "TINY".into(),
        modules: vec![a, module("B", "junior", true, 2)],
        constraints: vec![PrecedenceConstraint::hard("A", "B")],
        choice_groups: vec![],
        rules: ProgramRules {
            max_modules_per_year: 1,
            modules_required_for_thesis: 2,
        },
    }
}

/// A single compulsory module; the smallest program with a thesis.
pub fn single() -> Curriculum {
    Curriculum {
        name: "ONE".into(),
        modules: vec![module("A", "junior", true, 1)],
        constraints: vec![],
        choice_groups: vec![],
        rules: ProgramRules {
            max_modules_per_year: 1,
            modules_required_for_thesis: 1,
        },
    }
}

/// A plausible assignment for any graph: from each active state 15% drop
/// out, 25% repeat (5 points more per extra module in the year) and the rest
/// advance, split evenly over the admissible next selections. Registration
/// splits evenly over the first-year options.
pub fn reference_assignment(g: &StateGraph) -> ProbabilityAssignment {
    ProbabilityAssignment::from_weights(g, |s, _| {
        let i = g.index_of(s).expect("state of g");
        let out = g.outgoing(i);
        if s.tag != StateTag::Active {
            return vec![1.0; out.len()];
        }
        let dropout = 0.15;
        let repeat = 0.25 + 0.05 * (s.current.len() as f64 - 1.0);
        let advances = out.iter().filter(|e| e.label.selection().is_some()).count();
        out.iter()
            .map(|e| match e.label {
                Outcome::Dropout => dropout,
                Outcome::Repeat => repeat,
                Outcome::Advance(_) => (1.0 - dropout - repeat) / advances as f64,
            })
            .collect()
    })
}
