use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::assignment::ProbabilityAssignment;
use super::MarkovError;
use crate::curriculum::{ModuleCode, ModuleSet};
use crate::graph::{EnrollmentState, Outcome, StateGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModuleOutcome {
    Pass,
    Fail,
    Withdraw,
}

impl ModuleOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            ModuleOutcome::Pass => "pass",
            ModuleOutcome::Fail => "fail",
            ModuleOutcome::Withdraw => "withdraw",
        }
    }
}

impl fmt::Display for ModuleOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModuleOutcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "pass" => Ok(ModuleOutcome::Pass),
            "fail" => Ok(ModuleOutcome::Fail),
            "withdraw" => Ok(ModuleOutcome::Withdraw),
            other => Err(format!("unknown module outcome {other:?}")),
        }
    }
}

/// One student's enrolment in one academic year.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrollmentRecord {
    pub student: String,
    pub academic_year: i32,
    pub outcomes: BTreeMap<ModuleCode, ModuleOutcome>,
}

impl EnrollmentRecord {
    pub fn enrolled(&self) -> ModuleSet {
        self.outcomes.keys().cloned().collect()
    }

    pub fn all_passed(&self) -> bool {
        self.outcomes.values().all(|o| *o == ModuleOutcome::Pass)
    }

    pub fn withdrew(&self) -> bool {
        self.outcomes
            .values()
            .any(|o| *o == ModuleOutcome::Withdraw)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationConfig {
    /// Pseudo-count added to every legal outcome of a state with evidence.
    pub alpha: f64,
    /// Yearly discount, in (0, 1].
    pub lambda: f64,
    /// Year with weight 1; defaults to the latest record year.
    pub reference_year: Option<i32>,
    /// Only the last `window` years up to the reference year are counted.
    pub window: Option<u32>,
    /// Last year the records cover; defaults to the latest record year.
    pub observed_through: Option<i32>,
    /// Used for states without evidence; uniform over edges if absent.
    pub fallback: Option<ProbabilityAssignment>,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            alpha: 1.0,
            lambda: 1.0,
            reference_year: None,
            window: None,
            observed_through: None,
            fallback: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RejectedStudent {
    pub student: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationReport {
    #[serde(skip)]
    pub assignment: ProbabilityAssignment,
    /// Unweighted number of counted transitions out of each state, by id.
    pub visits: BTreeMap<String, u64>,
    pub rejected: Vec<RejectedStudent>,
    /// Ids of states that received the fallback distribution.
    pub fallback_states: Vec<String>,
}

impl EstimationReport {
    pub fn visits_of(&self, s: &EnrollmentState) -> u64 {
        self.visits.get(&s.id()).copied().unwrap_or(0)
    }
}

struct Step {
    state: EnrollmentState,
    outcome: Outcome,
    year: i32,
}

/// Replays each student's records as a walk on `g` and turns the weighted
/// outcome counts into a probability assignment.
///
/// The record of year `y` tells what happened to the student's state at the
/// end of `y`:
/// - the same selection again next year after a fail or withdrawal is a repeat;
/// - all passed and a legal selection next year is an advance;
/// - all passed with the final selection is an advance into eligibility;
/// - absence next year otherwise is a dropout, unless `y` is the last
///   observed year, in which case the step is censored (withdrawals still
///   count as dropout).
///
/// A student whose records break these rules is rejected as a whole.
pub fn estimate_probabilities(
    records: &[EnrollmentRecord],
    g: &StateGraph,
    cfg: &EstimationConfig,
) -> Result<EstimationReport, MarkovError> {
    if !(cfg.alpha.is_finite() && cfg.alpha >= 0.0) {
        return Err(MarkovError::InvalidSetting(format!(
            "alpha must be nonnegative, got {}",
            cfg.alpha
        )));
    }
    if !(cfg.lambda > 0.0 && cfg.lambda <= 1.0) {
        return Err(MarkovError::InvalidSetting(format!(
            "lambda must lie in (0, 1], got {}",
            cfg.lambda
        )));
    }
    if let Some(fb) = &cfg.fallback {
        fb.validate(g).map_err(MarkovError::Assignment)?;
    }

    let latest = records.iter().map(|r| r.academic_year).max().unwrap_or(0);
    let reference = cfg.reference_year.unwrap_or(latest);
    let observed_through = cfg.observed_through.unwrap_or(latest);
    let oldest = cfg.window.map(|w| reference - w as i32 + 1);

    let mut by_student: BTreeMap<&str, Vec<&EnrollmentRecord>> = BTreeMap::new();
    for r in records {
        by_student.entry(&r.student).or_default().push(r);
    }

    let mut weights: BTreeMap<EnrollmentState, BTreeMap<Outcome, f64>> = BTreeMap::new();
    let mut visits: BTreeMap<String, u64> = BTreeMap::new();
    let mut rejected = Vec::new();
    for (student, mut recs) in by_student {
        recs.sort_by_key(|r| r.academic_year);
        match replay(&recs, g, observed_through) {
            Ok(steps) => {
                for st in steps {
                    if st.year > reference || oldest.is_some_and(|o| st.year < o) {
                        continue;
                    }
                    let w = cfg.lambda.powi(reference - st.year);
                    *visits.entry(st.state.id()).or_default() += 1;
                    *weights
                        .entry(st.state)
                        .or_default()
                        .entry(st.outcome)
                        .or_default() += w;
                }
            }
            Err(reason) => rejected.push(RejectedStudent {
                student: student.to_string(),
                reason,
            }),
        }
    }

    let fallback = cfg
        .fallback
        .clone()
        .unwrap_or_else(|| ProbabilityAssignment::uniform(g));
    let mut assignment = ProbabilityAssignment::new();
    let mut fallback_states = Vec::new();
    for (i, s) in g.states().iter().enumerate() {
        let out = g.outgoing(i);
        if out.is_empty() {
            continue;
        }
        let counts = weights.get(s);
        let evidence: f64 = counts.map(|c| c.values().sum()).unwrap_or(0.0);
        if evidence <= 0.0 {
            fallback_states.push(s.id());
            for e in out {
                assignment.set(s.clone(), e.label.clone(), fallback.get(s, &e.label));
            }
            continue;
        }
        let total = evidence + cfg.alpha * out.len() as f64;
        for e in out {
            let c = counts.and_then(|c| c.get(&e.label)).copied().unwrap_or(0.0);
            assignment.set(s.clone(), e.label.clone(), (c + cfg.alpha) / total);
        }
    }

    Ok(EstimationReport {
        assignment,
        visits,
        rejected,
        fallback_states,
    })
}

fn replay(
    recs: &[&EnrollmentRecord],
    g: &StateGraph,
    observed_through: i32,
) -> Result<Vec<Step>, String> {
    let has_edge = |s: &EnrollmentState, o: &Outcome| {
        g.index_of(s)
            .is_some_and(|i| g.outgoing(i).iter().any(|e| &e.label == o))
    };
    for w in recs.windows(2) {
        if w[0].academic_year == w[1].academic_year {
            return Err(format!("two records for year {}", w[0].academic_year));
        }
    }
    if let Some(r) = recs.iter().find(|r| r.outcomes.is_empty()) {
        return Err(format!("empty enrolment in year {}", r.academic_year));
    }

    let first = recs.first().ok_or("no records")?;
    let d1 = first.enrolled();
    let start = EnrollmentState::start();
    let entry = Outcome::Advance(d1.clone());
    if !has_edge(&start, &entry) {
        return Err(format!("first-year selection {d1} is not admissible"));
    }
    let mut steps = vec![Step {
        state: start,
        outcome: entry,
        year: first.academic_year,
    }];

    let mut state = EnrollmentState::active(d1.clone(), d1);
    for (k, rec) in recs.iter().enumerate() {
        if rec.enrolled() != state.current {
            return Err(format!(
                "year {} enrols {} but the walk expects {}",
                rec.academic_year,
                rec.enrolled(),
                state.current
            ));
        }
        let y = rec.academic_year;
        let next = recs.get(k + 1);
        let finish = Outcome::Advance(ModuleSet::new());
        let outcome = match next {
            Some(n) if n.academic_year != y + 1 => {
                return Err(format!("gap between years {y} and {}", n.academic_year));
            }
            Some(n) if n.enrolled() == state.current => {
                if rec.all_passed() {
                    return Err(format!(
                        "year {} repeats modules passed in {y}",
                        n.academic_year
                    ));
                }
                Outcome::Repeat
            }
            Some(n) => {
                if !rec.all_passed() {
                    return Err(format!("changes selection after failing in year {y}"));
                }
                Outcome::Advance(n.enrolled())
            }
            None if rec.all_passed() && has_edge(&state, &finish) => finish,
            None if rec.withdrew() || y < observed_through => Outcome::Dropout,
            None => break,
        };
        if !has_edge(&state, &outcome) {
            return Err(format!(
                "{outcome} is not a transition of {state} in year {y}"
            ));
        }
        let next_state = match &outcome {
            Outcome::Advance(d) if !d.is_empty() => {
                Some(EnrollmentState::active(state.taken.union(d), d.clone()))
            }
            Outcome::Repeat => Some(state.clone()),
            _ => None,
        };
        steps.push(Step {
            state,
            outcome,
            year: y,
        });
        match next_state {
            Some(s) => state = s,
            None => break,
        }
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::set;
    use crate::fixtures::{hou, tiny};
    use crate::graph::build_state_graph;

    fn rec(student: &str, year: i32, outcomes: &[(&str, ModuleOutcome)]) -> EnrollmentRecord {
        EnrollmentRecord {
            student: student.into(),
            academic_year: year,
            outcomes: outcomes
                .iter()
                .map(|(m, o)| (ModuleCode::new(*m), *o))
                .collect(),
        }
    }

    use ModuleOutcome::{Fail, Pass, Withdraw};

    #[test]
    fn all_passing_tiny_students_advance() {
        let g = build_state_graph(&tiny());
        let mut records = Vec::new();
        for i in 0..100 {
            let id = format!("s{i}");
            records.push(rec(&id, 1, &[("A", Pass)]));
            records.push(rec(&id, 2, &[("B", Pass)]));
        }
        let cfg = EstimationConfig {
            alpha: 0.0,
            ..Default::default()
        };
        let rep = estimate_probabilities(&records, &g, &cfg).unwrap();
        assert!(rep.rejected.is_empty());
        let a = EnrollmentState::active(set(["A"]), set(["A"]));
        let ab = EnrollmentState::active(set(["A", "B"]), set(["B"]));
        assert_eq!(rep.assignment.get(&a, &Outcome::Advance(set(["B"]))), 1.0);
        assert_eq!(rep.assignment.get(&ab, &Outcome::Advance(set([]))), 1.0);
        assert_eq!(rep.visits_of(&ab), 100);
        rep.assignment.validate(&g).unwrap();
    }

    #[test]
    fn absence_is_dropout_unless_censored() {
        let g = build_state_graph(&tiny());
        let records = vec![
            rec("x", 1, &[("A", Fail)]),
            rec("y", 1, &[("A", Pass)]),
            rec("y", 2, &[("B", Fail)]),
            rec("z", 1, &[("A", Pass)]),
            rec("z", 2, &[("B", Withdraw)]),
        ];
        let cfg = EstimationConfig {
            alpha: 0.0,
            ..Default::default()
        };
        let rep = estimate_probabilities(&records, &g, &cfg).unwrap();
        let a = EnrollmentState::active(set(["A"]), set(["A"]));
        let ab = EnrollmentState::active(set(["A", "B"]), set(["B"]));
        // x dropped out, y and z advanced
        assert!((rep.assignment.get(&a, &Outcome::Dropout) - 1.0 / 3.0).abs() < 1e-12);
        // y is censored in the last year, z withdrew
        assert_eq!(rep.visits_of(&ab), 1);
        assert_eq!(rep.assignment.get(&ab, &Outcome::Dropout), 1.0);
    }

    #[test]
    fn repeats_are_counted() {
        let g = build_state_graph(&tiny());
        let records = vec![
            rec("x", 1, &[("A", Fail)]),
            rec("x", 2, &[("A", Pass)]),
            rec("x", 3, &[("B", Pass)]),
        ];
        let rep = estimate_probabilities(
            &records,
            &g,
            &EstimationConfig {
                alpha: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        let a = EnrollmentState::active(set(["A"]), set(["A"]));
        assert_eq!(rep.assignment.get(&a, &Outcome::Repeat), 0.5);
        assert_eq!(rep.visits_of(&a), 2);
    }

    #[test]
    fn bad_students_are_rejected_not_fatal() {
        let g = build_state_graph(&hou());
        let records = vec![
            rec("gap", 1, &[("50", Pass)]),
            rec("gap", 3, &[("51", Pass)]),
            rec("order", 1, &[("51", Pass)]),
            rec("ok", 1, &[("50", Pass), ("51", Pass)]),
            rec("ok", 2, &[("60", Pass), ("61", Pass)]),
            rec("mixed", 1, &[("50", Pass), ("51", Fail)]),
            rec("mixed", 2, &[("60", Pass)]),
        ];
        let rep = estimate_probabilities(&records, &g, &EstimationConfig::default()).unwrap();
        let names: Vec<&str> = rep.rejected.iter().map(|r| r.student.as_str()).collect();
        assert_eq!(names, vec!["gap", "mixed", "order"]);
        assert_eq!(rep.visits_of(&EnrollmentState::start()), 1);
        rep.assignment.validate(&g).unwrap();
    }

    #[test]
    fn smoothing_and_fallback() {
        let g = build_state_graph(&tiny());
        let records = vec![rec("x", 1, &[("A", Pass)]), rec("x", 2, &[("B", Pass)])];
        let rep = estimate_probabilities(&records, &g, &EstimationConfig::default()).unwrap();
        let a = EnrollmentState::active(set(["A"]), set(["A"]));
        // one advance plus alpha on each of three edges
        assert_eq!(rep.assignment.get(&a, &Outcome::Advance(set(["B"]))), 0.5);
        assert_eq!(rep.assignment.get(&a, &Outcome::Repeat), 0.25);
        assert!(rep.fallback_states.is_empty());

        let rep = estimate_probabilities(&[], &g, &EstimationConfig::default()).unwrap();
        assert_eq!(rep.fallback_states.len(), 3);
        assert_eq!(rep.assignment, ProbabilityAssignment::uniform(&g));
    }

    #[test]
    fn discount_weights_older_years_less() {
        let g = build_state_graph(&tiny());
        let records = vec![
            rec("old", 1, &[("A", Fail)]),
            rec("new", 2, &[("A", Pass)]),
            rec("new", 3, &[("B", Pass)]),
        ];
        let cfg = EstimationConfig {
            alpha: 0.0,
            lambda: 0.5,
            reference_year: Some(2),
            ..Default::default()
        };
        let rep = estimate_probabilities(&records, &g, &cfg).unwrap();
        let a = EnrollmentState::active(set(["A"]), set(["A"]));
        // dropout weight 0.5 against advance weight 1
        assert!((rep.assignment.get(&a, &Outcome::Dropout) - 1.0 / 3.0).abs() < 1e-12);

        let windowed = EstimationConfig {
            window: Some(1),
            ..cfg
        };
        let rep = estimate_probabilities(&records, &g, &windowed).unwrap();
        assert_eq!(rep.assignment.get(&a, &Outcome::Dropout), 0.0);
    }

    #[test]
    fn settings_are_checked() {
        let g = build_state_graph(&tiny());
        for cfg in [
            EstimationConfig {
                lambda: 0.0,
                ..Default::default()
            },
            EstimationConfig {
                alpha: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                estimate_probabilities(&[], &g, &cfg),
                Err(MarkovError::InvalidSetting(_))
            ));
        }
    }
}
