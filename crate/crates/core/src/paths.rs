//! Enumeration of admissible tuition paths.

use std::fmt;

use serde::Serialize;

use crate::curriculum::{Admissibility, Curriculum, ModuleSet};

/// Yearly enrolment sets from registration to thesis eligibility, assuming
/// every enrolment is passed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TuitionPath {
    pub years: Vec<ModuleSet>,
}

impl TuitionPath {
    pub fn new(years: Vec<ModuleSet>) -> Self {
        TuitionPath { years }
    }

    pub fn completed(&self) -> ModuleSet {
        self.years
            .iter()
            .fold(ModuleSet::new(), |acc, y| acc.union(y))
    }
}

impl fmt::Display for TuitionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, y) in self.years.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{y}")?;
        }
        Ok(())
    }
}

/// Every admissible path of `c`, in lexicographic order.
///
/// Depth-first over admissible selections in set order, so the output is
/// already sorted: no complete path is a prefix of another.
pub fn enumerate_paths(c: &Curriculum) -> Vec<TuitionPath> {
    let rules = Admissibility::new(c);
    let mut out = Vec::new();
    let mut years = Vec::new();
    walk(&rules, &ModuleSet::new(), &mut years, &mut out);
    out
}

fn walk(
    rules: &Admissibility<'_>,
    completed: &ModuleSet,
    years: &mut Vec<ModuleSet>,
    out: &mut Vec<TuitionPath>,
) {
    if !years.is_empty() && rules.is_complete(completed) {
        out.push(TuitionPath::new(years.clone()));
        return;
    }
    let Ok(next) = rules.selections(completed, years.len() + 1) else {
        return;
    };
    for selection in next {
        let after = completed.union(&selection);
        years.push(selection);
        walk(rules, &after, years, out);
        years.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::set;
    use crate::fixtures::{hou, tiny};

    #[test]
    fn tiny_has_one_path() {
        assert_eq!(
            enumerate_paths(&tiny()),
            vec![TuitionPath::new(vec![set(["A"]), set(["B"])])]
        );
    }

    #[test]
    fn hou_contains_narrated_path() {
        let paths = enumerate_paths(&hou());
        let narrated = TuitionPath::new(vec![set(["50"]), set(["51", "60"]), set(["62"])]);
        assert!(paths.contains(&narrated));
        assert_eq!(narrated.to_string(), "{50} -> {51,60} -> {62}");
    }

    #[test]
    fn output_is_sorted_and_unique() {
        let paths = enumerate_paths(&hou());
        assert!(paths.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn unreachable_program_has_no_paths() {
        // B needs A cleared first but both must be taken in year one.
        let mut c = tiny();
        c.modules[1].first_marker = true;
        c.rules.max_modules_per_year = 2;
        assert!(enumerate_paths(&c).is_empty());
    }
}
