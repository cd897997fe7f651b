//! Brute-force oracles shared by the integration tests and the acceptance
//! run. They work on plain strings and know nothing about the library's
//! admissibility code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use coursepop::curriculum::{ConstraintKind, Curriculum};

pub type Year = BTreeSet<String>;
pub type OraclePath = Vec<Year>;

#[derive(Clone, Debug)]
pub struct Program {
    /// (code, compulsory, first marker, last marker)
    pub modules: Vec<(String, bool, bool, bool)>,
    pub hard: Vec<(String, String)>,
    pub soft: Vec<(String, String)>,
    pub groups: Vec<(Vec<String>, usize)>,
    pub max_per_year: usize,
    pub thesis_after: usize,
}

fn s(x: &str) -> String {
    x.to_string()
}

/// The HOU rules written out by hand: 50 first, hard 50->60, 50->61,
/// 51->62, every junior softly before every senior, two of three seniors,
/// two modules a year, four for the thesis.
pub fn hou_program() -> Program {
    let juniors = ["50", "51"];
    let seniors = ["60", "61", "62"];
    let mut soft = Vec::new();
    for j in juniors {
        for sn in seniors {
            soft.push((s(j), s(sn)));
        }
    }
    Program {
        modules: vec![
            (s("50"), true, true, false),
            (s("51"), true, false, false),
            (s("60"), false, false, false),
            (s("61"), false, false, false),
            (s("62"), false, false, false),
        ],
        hard: vec![(s("50"), s("60")), (s("50"), s("61")), (s("51"), s("62"))],
        soft,
        groups: vec![(seniors.iter().map(|x| s(x)).collect(), 2)],
        max_per_year: 2,
        thesis_after: 4,
    }
}

impl Program {
    pub fn from_curriculum(c: &Curriculum) -> Program {
        let pairs = |k: ConstraintKind| {
            c.constraints
                .iter()
                .filter(|x| x.kind == k)
                .map(|x| (x.precedent.to_string(), x.antecedent.to_string()))
                .collect()
        };
        Program {
            modules: c
                .modules
                .iter()
                .map(|m| {
                    (
                        m.code.to_string(),
                        m.compulsory,
                        m.first_marker,
                        m.last_marker,
                    )
                })
                .collect(),
            hard: pairs(ConstraintKind::Hard),
            soft: pairs(ConstraintKind::Soft),
            groups: c
                .choice_groups
                .iter()
                .map(|g| {
                    (
                        g.members.iter().map(|m| m.to_string()).collect(),
                        g.required,
                    )
                })
                .collect(),
            max_per_year: c.rules.max_modules_per_year,
            thesis_after: c.rules.modules_required_for_thesis,
        }
    }

    fn codes(&self) -> Vec<String> {
        self.modules.iter().map(|m| m.0.clone()).collect()
    }

    fn compulsory(&self, m: &str) -> bool {
        self.modules.iter().any(|x| x.0 == m && x.1)
    }

    /// Every module set a student may finish with.
    pub fn completion_sets(&self) -> BTreeSet<Year> {
        let codes = self.codes();
        let mut out = BTreeSet::new();
        for mask in 0u32..(1 << codes.len()) {
            let set: Year = (0..codes.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| codes[i].clone())
                .collect();
            let compulsory_in = self
                .modules
                .iter()
                .filter(|m| m.1)
                .all(|m| set.contains(&m.0));
            let groups_ok = self
                .groups
                .iter()
                .all(|(members, k)| members.iter().filter(|m| set.contains(*m)).count() == *k);
            let no_strays = set.iter().all(|m| {
                self.compulsory(m) || self.groups.iter().any(|(members, _)| members.contains(m))
            });
            if compulsory_in && groups_ok && no_strays && set.len() == self.thesis_after {
                out.insert(set);
            }
        }
        out
    }

    /// Checks a whole path against the rules.
    pub fn admits(&self, path: &[Year], completion: &BTreeSet<Year>) -> bool {
        if path.is_empty() {
            return false;
        }
        let mut union = Year::new();
        for (i, y) in path.iter().enumerate() {
            if y.is_empty() || y.len() > self.max_per_year || !y.is_disjoint(&union) {
                return false;
            }
            union.extend(y.iter().cloned());
            // the path stops as soon as the student is eligible
            if i + 1 < path.len() && completion.contains(&union) {
                return false;
            }
        }
        if !completion.contains(&union) {
            return false;
        }
        let year_of = |m: &str| path.iter().position(|y| y.contains(m));
        for (code, _, first, last) in &self.modules {
            if *first && year_of(code) != Some(0) {
                return false;
            }
            if *last && year_of(code).is_some_and(|i| i + 1 != path.len()) {
                return false;
            }
        }
        for (p, a) in &self.hard {
            if let Some(ya) = year_of(a) {
                match year_of(p) {
                    Some(yp) if yp < ya => {}
                    _ => return false,
                }
            }
        }
        for (p, a) in &self.soft {
            if let Some(ya) = year_of(a) {
                match year_of(p) {
                    Some(yp) if yp <= ya => {}
                    None if !self.compulsory(p) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Every sequence of disjoint nonempty yearly sets, filtered by
    /// [`Program::admits`].
    pub fn paths(&self) -> BTreeSet<OraclePath> {
        let codes = self.codes();
        let completion = self.completion_sets();
        let mut out = BTreeSet::new();
        let mut stack: Vec<OraclePath> = vec![vec![]];
        while let Some(prefix) = stack.pop() {
            if self.admits(&prefix, &completion) {
                out.insert(prefix.clone());
            }
            let used: Year = prefix.iter().flatten().cloned().collect();
            let free: Vec<&String> = codes.iter().filter(|c| !used.contains(*c)).collect();
            for mask in 1u32..(1 << free.len()) {
                let year: Year = (0..free.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| free[i].clone())
                    .collect();
                let mut next = prefix.clone();
                next.push(year);
                stack.push(next);
            }
        }
        out
    }
}

/// Distinct (modules so far, this year's modules) pairs along the paths.
pub fn active_pairs(paths: &BTreeSet<OraclePath>) -> BTreeSet<(Year, Year)> {
    let mut out = BTreeSet::new();
    for p in paths {
        let mut taken = Year::new();
        for y in p {
            taken.extend(y.iter().cloned());
            out.insert((taken.clone(), y.clone()));
        }
    }
    out
}

pub fn library_paths(c: &Curriculum) -> BTreeSet<OraclePath> {
    coursepop::paths::enumerate_paths(c)
        .into_iter()
        .map(|p| {
            p.years
                .iter()
                .map(|y| y.iter().map(|m| m.to_string()).collect())
                .collect()
        })
        .collect()
}

pub mod arb {
    use coursepop::curriculum::{
        validate_curriculum, ChoiceGroup, ConstraintKind, Curriculum, ModuleDef,
        PrecedenceConstraint, ProgramRules,
    };
    use proptest::prelude::*;

    /// Random acyclic programs with up to `max_modules` modules; constraints
    /// only run from lower to higher index. Not all of them validate.
    pub fn raw_curriculum(max_modules: usize) -> impl Strategy<Value = Curriculum> {
        (2..=max_modules)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec(any::<bool>(), n),
                    prop::collection::vec(0u8..2, n),
                    prop::collection::vec(0u8..3, n * (n - 1) / 2),
                    any::<bool>(),
                    prop::option::of(0..n),
                    1usize..=3,
                    (1usize..=3, 1usize..=3),
                    prop::collection::vec(1u32..=3, n),
                )
            })
            .prop_map(|(compulsory, group, pairs, first, last, max, ks, years)| {
                let n = compulsory.len();
                let code = |i: usize| format!("M{i}");
                let mut modules: Vec<ModuleDef> = (0..n)
                    .map(|i| ModuleDef {
                        code: code(i).as_str().into(),
                        level: if years[i] == 1 {
                            "junior".into()
                        } else {
                            "senior".into()
                        },
                        compulsory: compulsory[i],
                        first_marker: false,
                        last_marker: false,
                        nominal_year: years[i],
                    })
                    .collect();
                if first {
                    if let Some(m) = modules.iter_mut().find(|m| m.compulsory) {
                        m.first_marker = true;
                    }
                }
                if let Some(l) = last {
                    if !modules[l].first_marker {
                        modules[l].last_marker = true;
                    }
                }
                let mut constraints = Vec::new();
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        let kind = match pairs[k] {
                            1 => Some(ConstraintKind::Hard),
                            2 => Some(ConstraintKind::Soft),
                            _ => None,
                        };
                        k += 1;
                        if let Some(kind) = kind {
                            constraints.push(PrecedenceConstraint {
                                kind,
                                precedent: code(i).as_str().into(),
                                antecedent: code(j).as_str().into(),
                            });
                        }
                    }
                }
                let mut choice_groups = Vec::new();
                for (g, want) in [(0u8, ks.0), (1u8, ks.1)] {
                    let members: Vec<String> = (0..n)
                        .filter(|&i| !compulsory[i] && group[i] == g)
                        .map(code)
                        .collect();
                    if !members.is_empty() {
                        choice_groups.push(ChoiceGroup {
                            required: want.min(members.len()),
                            members: members.iter().map(|m| m.as_str()).collect(),
                        });
                    }
                }
                let thesis = compulsory.iter().filter(|c| **c).count()
                    + choice_groups.iter().map(|g| g.required).sum::<usize>();
                Curriculum {
                    name: "RANDOM".into(),
                    modules,
                    constraints,
                    choice_groups,
                    rules: ProgramRules {
                        max_modules_per_year: max,
                        modules_required_for_thesis: thesis,
                    },
                }
            })
    }

    /// Random programs that pass validation, in canonical form.
    pub fn curriculum(max_modules: usize) -> impl Strategy<Value = Curriculum> {
        raw_curriculum(max_modules).prop_filter_map("invalid program", |c| {
            validate_curriculum(c).ok().map(|c| c.canonical())
        })
    }
}

/// Random strictly positive rows, reproducible from `seed`.
pub fn random_assignment(
    g: &coursepop::graph::StateGraph,
    seed: u64,
) -> coursepop::markov::ProbabilityAssignment {
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    coursepop::markov::ProbabilityAssignment::from_weights(g, |_, n| {
        (0..n)
            .map(|_| 0.05 + (rng.next_u32() as f64 / u32::MAX as f64))
            .collect()
    })
}
