//! Per-student simulation over the state graph.
//!
//! Every student draws from their own ChaCha8 stream: the key is the master
//! seed in little-endian order (zero padded to 32 bytes) and the stream id is
//! `(cohort_year as u32) << 32 | replica`. A uniform draw is
//! `(next_u64 >> 11) * 2^-53`, and an outcome is the first outgoing edge (in
//! graph order) whose cumulative probability exceeds the draw. Counts are
//! reduced as integers, so results do not depend on the thread count.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::curriculum::ModuleCode;
use crate::graph::Outcome;
use crate::graph::{StateGraph, StateTag};
use crate::markov::{
    module_loads, CohortSchedule, EnrollmentRecord, MarkovError, ModuleLoads, ModuleOutcome,
    PopulationVector, ProbabilityAssignment,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationConfig {
    /// Simulated students per cohort.
    pub replicas: u32,
    pub seed: u64,
    pub horizon: u32,
    pub schedule: CohortSchedule,
    /// Keep every student's state sequence.
    #[serde(skip)]
    pub traces: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulationError {
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error("replicas must be positive")]
    ZeroReplicas,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YearStats {
    pub year: i32,
    /// Expected students per state, scaled to the intakes.
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    /// Raw simulated students per state, summed over cohorts.
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    pub cohort: i32,
    pub replica: u32,
    /// State ids from the intake year on.
    pub states: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationResult {
    pub seed: u64,
    pub replicas: u32,
    pub states: Vec<String>,
    pub years: Vec<YearStats>,
    pub loads: Vec<ModuleLoads>,
    #[serde(skip)]
    pub traces: Vec<Trace>,
}

impl SimulationResult {
    pub fn means(&self) -> Vec<PopulationVector> {
        self.years
            .iter()
            .map(|y| PopulationVector {
                year: y.year,
                values: y.mean.clone(),
            })
            .collect()
    }

    /// One JSON object per trace, newline terminated.
    pub fn traces_ndjson(&self) -> String {
        let mut out = String::new();
        for t in &self.traces {
            out.push_str(&serde_json::to_string(t).expect("plain data"));
            out.push('\n');
        }
        out
    }

    pub fn load(&self, year: i32, module: &ModuleCode) -> f64 {
        self.loads
            .iter()
            .find(|l| l.year == year)
            .and_then(|l| l.loads.get(module))
            .copied()
            .unwrap_or(0.0)
    }
}

struct Sampler {
    /// Per state: (cumulative probability, target state, edge label).
    rows: Vec<Vec<(f64, usize, Outcome)>>,
}

impl Sampler {
    fn new(g: &StateGraph, a: &ProbabilityAssignment) -> Self {
        let rows = g
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut cum = 0.0;
                g.outgoing(i)
                    .iter()
                    .filter_map(|e| {
                        let p = a.get(s, &e.label);
                        cum += p;
                        (p > 0.0).then(|| (cum, e.to, e.label.clone()))
                    })
                    .collect()
            })
            .collect();
        Sampler { rows }
    }

    fn draw(&self, state: usize, rng: &mut ChaCha8Rng) -> (usize, &Outcome) {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let row = &self.rows[state];
        let (_, to, label) = row
            .iter()
            .find(|(c, _, _)| u < *c)
            .unwrap_or_else(|| row.last().expect("transient state has an edge"));
        (*to, label)
    }
}

/// The random stream of one student.
pub fn student_rng(seed: u64, cohort_year: i32, replica: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((cohort_year as u32 as u64) << 32) | replica as u64);
    rng
}

/// Walks one student from the start state for `years` years (the intake year
/// included). Returns the visited states and the outcome drawn at the end of
/// each year spent in a transient state, plus one extra draw for a final
/// transient year when `extra` is set.
fn walk(
    g: &StateGraph,
    sampler: &Sampler,
    rng: &mut ChaCha8Rng,
    years: usize,
    extra: bool,
) -> (Vec<usize>, Vec<Outcome>) {
    let mut states = Vec::with_capacity(years);
    let mut outcomes = Vec::with_capacity(years);
    let mut s = g.start();
    states.push(s);
    while states.len() < years || (extra && outcomes.len() < states.len()) {
        if g.states()[s].is_absorbing() {
            if states.len() < years {
                states.push(s);
                continue;
            }
            break;
        }
        let (to, label) = sampler.draw(s, rng);
        outcomes.push(label.clone());
        if states.len() < years {
            s = to;
            states.push(s);
        }
    }
    (states, outcomes)
}

fn check(
    g: &StateGraph,
    a: &ProbabilityAssignment,
    cfg: &SimulationConfig,
) -> Result<Vec<(i32, f64)>, SimulationError> {
    a.validate(g).map_err(MarkovError::Assignment)?;
    if cfg.replicas == 0 {
        return Err(SimulationError::ZeroReplicas);
    }
    cfg.schedule.validate(cfg.horizon)?;
    Ok(cfg
        .schedule
        .intakes
        .iter()
        .filter(|(_, x)| **x > 0.0)
        .map(|(y, x)| (*y, *x))
        .collect())
}

/// Simulates `replicas` students for every cohort of the schedule and
/// reports per-year state means and standard errors scaled to the intakes.
pub fn simulate(
    g: &StateGraph,
    a: &ProbabilityAssignment,
    cfg: &SimulationConfig,
) -> Result<SimulationResult, SimulationError> {
    let cohorts = check(g, a, cfg)?;
    let sampler = Sampler::new(g, a);
    let n = g.len();
    let h = cfg.horizon as usize;
    let first = cfg.schedule.first_year().expect("validated");
    let r = cfg.replicas as f64;

    let mut mean = vec![vec![0.0; n]; h];
    let mut var = vec![vec![0.0; n]; h];
    let mut counts = vec![vec![0u64; n]; h];
    let mut traces = Vec::new();

    for &(cohort, intake) in &cohorts {
        let offset = (cohort - first) as usize;
        let years = h - offset;
        let zero = || vec![0u64; years * n];
        let tally = (0..cfg.replicas)
            .into_par_iter()
            .fold(zero, |mut acc, replica| {
                let mut rng = student_rng(cfg.seed, cohort, replica);
                let (states, _) = walk(g, &sampler, &mut rng, years, false);
                for (t, s) in states.into_iter().enumerate() {
                    acc[t * n + s] += 1;
                }
                acc
            })
            .reduce(zero, |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            });
        for t in 0..years {
            for s in 0..n {
                let c = tally[t * n + s];
                let p = c as f64 / r;
                counts[offset + t][s] += c;
                mean[offset + t][s] += intake * p;
                if cfg.replicas > 1 {
                    var[offset + t][s] += intake * intake * p * (1.0 - p) / (r - 1.0);
                }
            }
        }
        if cfg.traces {
            traces.extend((0..cfg.replicas).map(|replica| {
                let mut rng = student_rng(cfg.seed, cohort, replica);
                let (states, _) = walk(g, &sampler, &mut rng, years, false);
                Trace {
                    cohort,
                    replica,
                    states: states.into_iter().map(|s| g.states()[s].id()).collect(),
                }
            }));
        }
    }

    let years: Vec<YearStats> = (0..h)
        .map(|t| YearStats {
            year: first + t as i32,
            mean: mean[t].clone(),
            se: var[t].iter().map(|v| v.sqrt()).collect(),
            counts: counts[t].clone(),
        })
        .collect();
    let vectors: Vec<PopulationVector> = years
        .iter()
        .map(|y| PopulationVector {
            year: y.year,
            values: y.mean.clone(),
        })
        .collect();
    Ok(SimulationResult {
        seed: cfg.seed,
        replicas: cfg.replicas,
        states: g.states().iter().map(|s| s.id()).collect(),
        loads: module_loads(&vectors, g),
        years,
        traces,
    })
}

/// Synthetic enrolment records for the simulated students. The record of a
/// year carries the outcome drawn at its end: advance passes every current
/// module, repeat fails them all, dropout withdraws from them all. A student
/// still enrolled in the last simulated year gets one extra draw for it.
pub fn generate_records(
    g: &StateGraph,
    a: &ProbabilityAssignment,
    cfg: &SimulationConfig,
) -> Result<Vec<EnrollmentRecord>, SimulationError> {
    let cohorts = check(g, a, cfg)?;
    let sampler = Sampler::new(g, a);
    let first = cfg.schedule.first_year().expect("validated");
    let h = cfg.horizon as usize;
    let mut out = Vec::new();
    for &(cohort, _) in &cohorts {
        let years = h - (cohort - first) as usize;
        let per_student: Vec<Vec<EnrollmentRecord>> = (0..cfg.replicas)
            .into_par_iter()
            .map(|replica| {
                let mut rng = student_rng(cfg.seed, cohort, replica);
                let (states, outcomes) = walk(g, &sampler, &mut rng, years, true);
                let student = format!("{cohort}-{replica:06}");
                states
                    .iter()
                    .zip(&outcomes)
                    .enumerate()
                    .filter(|(_, (s, _))| g.states()[**s].tag == StateTag::Active)
                    .map(|(t, (s, o))| {
                        let mark = match o {
                            Outcome::Advance(_) => ModuleOutcome::Pass,
                            Outcome::Repeat => ModuleOutcome::Fail,
                            Outcome::Dropout => ModuleOutcome::Withdraw,
                        };
                        EnrollmentRecord {
                            student: student.clone(),
                            academic_year: cohort + t as i32,
                            outcomes: g.states()[*s]
                                .current
                                .iter()
                                .map(|m| (m.clone(), mark))
                                .collect::<BTreeMap<_, _>>(),
                        }
                    })
                    .collect()
            })
            .collect();
        out.extend(per_student.into_iter().flatten());
    }
    Ok(out)
}
