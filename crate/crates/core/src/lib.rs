//! Student population projection for self-paced degree programs.
//!
//! A curriculum (modules, hard and soft precedences, choice groups, a yearly
//! module cap) is written in a small line-oriented language ([`dsl`]) and
//! checked into a [`curriculum::Curriculum`]. [`paths`] enumerates every
//! admissible yearly sequence of selections, [`graph`] turns those into an
//! enrolment state graph with repeat and dropout edges, and [`markov`] puts
//! probabilities on the edges to project expected populations, per-module
//! loads and absorption statistics. [`montecarlo`] simulates individual
//! students as an independent check and as a source of synthetic records.
//! [`scenario`] stores versioned what-if scenarios and serves them over
//! HTTP; [`cli`] is the command-line front end over the same code.
//!
//! ```
//! use coursepop::fixtures::hou;
//! use coursepop::graph::build_state_graph;
//! use coursepop::markov::{build_matrix, project_cohorts, CohortSchedule, ProbabilityAssignment};
//!
//! let g = build_state_graph(&hou());
//! let p = build_matrix(&g, &ProbabilityAssignment::uniform(&g)).unwrap();
//! let years = project_cohorts(&CohortSchedule::single(2024, 100.0), &p, 5).unwrap();
//! assert!((years[4].total() - 100.0).abs() < 1e-9);
//! ```

pub mod cli;
pub mod curriculum;
pub mod dsl;
pub mod fixtures;
pub mod formats;
pub mod graph;
pub mod markov;
pub mod montecarlo;
pub mod paths;
pub mod scenario;
