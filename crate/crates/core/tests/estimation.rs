use coursepop::curriculum::set;
use coursepop::fixtures::{hou, reference_assignment};
use coursepop::graph::{build_state_graph, EnrollmentState, StateGraph};
use coursepop::markov::{
    estimate_probabilities, CohortSchedule, EstimationConfig, EstimationReport,
    ProbabilityAssignment,
};
use coursepop::montecarlo::{generate_records, SimulationConfig};

fn estimate(students: u32, seed: u64) -> (StateGraph, ProbabilityAssignment, EstimationReport) {
    let g = build_state_graph(&hou());
    let truth = reference_assignment(&g);
    let cfg = SimulationConfig {
        replicas: students,
        seed,
        horizon: 15,
        schedule: CohortSchedule::single(2000, students as f64),
        traces: false,
    };
    let records = generate_records(&g, &truth, &cfg).unwrap();
    let est = estimate_probabilities(&records, &g, &EstimationConfig::default()).unwrap();
    assert!(est.rejected.is_empty(), "{:?}", &est.rejected[..1]);
    est.assignment.validate(&g).unwrap();
    (g, truth, est)
}

fn worst_error(truth: &ProbabilityAssignment, est: &EstimationReport, min_visits: u64) -> f64 {
    truth.max_abs_diff(&est.assignment, |s| est.visits_of(s) >= min_visits)
}

/// Every well-visited cell lies within 5 binomial standard errors.
#[test]
fn ten_thousand_students_within_sampling_error() {
    let (_, truth, est) = estimate(10_000, 11);
    let mut cells = 0;
    for (s, row) in truth.rows() {
        let n = est.visits_of(s) as f64;
        if n < 100.0 {
            continue;
        }
        for (o, &p) in row {
            let q = est.assignment.get(s, o);
            let se = (p * (1.0 - p) / n).sqrt();
            let smoothing = row.len() as f64 / (n + row.len() as f64);
            assert!(
                (q - p).abs() <= 5.0 * se + smoothing,
                "{s} {o}: {q} vs {p}, n={n}"
            );
            cells += 1;
        }
    }
    assert!(cells > 50);
}

#[test]
fn module_50_pass_rate_is_recovered() {
    let (_, truth, est) = estimate(10_000, 5);
    let s50 = EnrollmentState::active(set(["50"]), set(["50"]));
    let advance = |a: &ProbabilityAssignment| -> f64 {
        a.row(&s50)
            .unwrap()
            .iter()
            .filter(|(o, _)| o.selection().is_some())
            .map(|(_, p)| p)
            .sum()
    };
    assert!((advance(&truth) - 0.6).abs() < 1e-12);
    assert!((advance(&est.assignment) - 0.6).abs() < 0.02);
}

#[test]
fn large_sample_is_within_two_points() {
    let (_, truth, est) = estimate(300_000, 17);
    let err = worst_error(&truth, &est, 100);
    assert!(err <= 0.02, "L-inf error {err}");
}

#[test]
fn error_shrinks_with_sample_size() {
    let errs: Vec<f64> = [1_000, 10_000, 100_000]
        .into_iter()
        .map(|n| {
            let (_, truth, est) = estimate(n, 3);
            worst_error(&truth, &est, 1)
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}
