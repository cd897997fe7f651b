//! Programs, modules and precedence constraints, and the admissibility rule
//! that decides which module selections a student may enrol in next.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a taught module, e.g. `"50"`.
///
/// Codes order numerically when both sides are plain integers and fall back
/// to string order otherwise (numeric codes sort first).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModuleCode(String);

impl ModuleCode {
    pub fn new(code: impl Into<String>) -> Self {
        ModuleCode(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Codes are restricted to `[A-Za-z0-9_.-]+` so they can be embedded in
    /// state identifiers and CSV cells without quoting.
    pub fn is_well_formed(&self) -> bool {
        is_identifier(&self.0)
    }

    fn numeric(&self) -> Option<u64> {
        if self.0.bytes().all(|b| b.is_ascii_digit()) {
            self.0.parse().ok()
        } else {
            None
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl Ord for ModuleCode {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for ModuleCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModuleCode {
    fn from(s: &str) -> Self {
        ModuleCode::new(s)
    }
}

/// An ordered set of module codes. Sets compare lexicographically over
/// their sorted members.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModuleSet(BTreeSet<ModuleCode>);

impl ModuleSet {
    pub fn new() -> Self {
        ModuleSet(BTreeSet::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, code: &ModuleCode) -> bool {
        self.0.contains(code)
    }

    pub fn insert(&mut self, code: ModuleCode) -> bool {
        self.0.insert(code)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModuleCode> + '_ {
        self.0.iter()
    }

    pub fn union(&self, other: &ModuleSet) -> ModuleSet {
        ModuleSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &ModuleSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &ModuleSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// Members joined with `sep`, e.g. `50;51`.
    pub fn joined(&self, sep: &str) -> String {
        let parts: Vec<&str> = self.0.iter().map(ModuleCode::as_str).collect();
        parts.join(sep)
    }

    /// Inverse of `joined(";")`. The empty string is the empty set.
    pub fn parse_joined(text: &str, sep: char) -> ModuleSet {
        text.split(sep)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(ModuleCode::new)
            .collect()
    }
}

impl FromIterator<ModuleCode> for ModuleSet {
    fn from_iter<I: IntoIterator<Item = ModuleCode>>(iter: I) -> Self {
        ModuleSet(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<&'a str> for ModuleSet {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        ModuleSet(iter.into_iter().map(ModuleCode::new).collect())
    }
}

impl<'a> IntoIterator for &'a ModuleSet {
    type Item = &'a ModuleCode;
    type IntoIter = std::collections::btree_set::Iter<'a, ModuleCode>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for ModuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.joined(","))
    }
}

/// Shorthand for building a [`ModuleSet`] from string codes.
pub fn set<'a>(codes: impl IntoIterator<Item = &'a str>) -> ModuleSet {
    codes.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDef {
    pub code: ModuleCode,
    /// Free-form ordered tag such as `junior` or `senior`.
    pub level: String,
    pub compulsory: bool,
    /// Must be part of the first-year selection.
    pub first_marker: bool,
    /// May only be taken in the year that completes the program (a thesis).
    pub last_marker: bool,
    pub nominal_year: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    /// The precedent must be cleared in an earlier year.
    Hard,
    /// The precedent must have been started no later than the antecedent.
    Soft,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Hard => "hard",
            ConstraintKind::Soft => "soft",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrecedenceConstraint {
    pub kind: ConstraintKind,
    pub precedent: ModuleCode,
    pub antecedent: ModuleCode,
}

impl PrecedenceConstraint {
    pub fn hard(precedent: &str, antecedent: &str) -> Self {
        PrecedenceConstraint {
            kind: ConstraintKind::Hard,
            precedent: precedent.into(),
            antecedent: antecedent.into(),
        }
    }

    pub fn soft(precedent: &str, antecedent: &str) -> Self {
        PrecedenceConstraint {
            kind: ConstraintKind::Soft,
            precedent: precedent.into(),
            antecedent: antecedent.into(),
        }
    }
}

impl fmt::Display for PrecedenceConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} -> {}", self.kind, self.precedent, self.antecedent)
    }
}

/// Select exactly `required` of `members`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChoiceGroup {
    pub members: ModuleSet,
    pub required: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramRules {
    pub max_modules_per_year: usize,
    pub modules_required_for_thesis: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curriculum {
    pub name: String,
    pub modules: Vec<ModuleDef>,
    pub constraints: Vec<PrecedenceConstraint>,
    pub choice_groups: Vec<ChoiceGroup>,
    pub rules: ProgramRules,
}

impl Curriculum {
    pub fn module(&self, code: &ModuleCode) -> Option<&ModuleDef> {
        self.modules.iter().find(|m| &m.code == code)
    }

    pub fn codes(&self) -> ModuleSet {
        self.modules.iter().map(|m| m.code.clone()).collect()
    }

    /// Sorted modules, sorted and de-duplicated constraints (a hard edge
    /// absorbs a soft edge between the same pair), sorted groups.
    pub fn canonical(&self) -> Curriculum {
        let mut modules = self.modules.clone();
        modules.sort_by(|a, b| a.code.cmp(&b.code));

        let mut strongest: BTreeMap<(ModuleCode, ModuleCode), ConstraintKind> = BTreeMap::new();
        for c in &self.constraints {
            let key = (c.precedent.clone(), c.antecedent.clone());
            let kind = strongest.entry(key).or_insert(c.kind);
            *kind = (*kind).min(c.kind);
        }
        let mut constraints: Vec<PrecedenceConstraint> = strongest
            .into_iter()
            .map(|((precedent, antecedent), kind)| PrecedenceConstraint {
                kind,
                precedent,
                antecedent,
            })
            .collect();
        constraints.sort();

        let mut choice_groups = self.choice_groups.clone();
        choice_groups.sort();
        choice_groups.dedup();

        Curriculum {
            name: self.name.clone(),
            modules,
            constraints,
            choice_groups,
            rules: self.rules,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationCode {
    NoModules,
    InvalidIdentifier,
    DuplicateModule,
    UnknownModule,
    SelfPrecedence,
    PrecedenceCycle,
    FirstLastConflict,
    InvalidYear,
    InvalidChoiceGroup,
    InvalidRule,
    CompletionArithmetic,
}

impl ValidationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationCode::NoModules => "no-modules",
            ValidationCode::InvalidIdentifier => "invalid-identifier",
            ValidationCode::DuplicateModule => "duplicate-module",
            ValidationCode::UnknownModule => "unknown-module",
            ValidationCode::SelfPrecedence => "self-precedence",
            ValidationCode::PrecedenceCycle => "precedence-cycle",
            ValidationCode::FirstLastConflict => "first-last-conflict",
            ValidationCode::InvalidYear => "invalid-year",
            ValidationCode::InvalidChoiceGroup => "invalid-choice-group",
            ValidationCode::InvalidRule => "invalid-rule",
            ValidationCode::CompletionArithmetic => "completion-arithmetic",
        }
    }
}

impl fmt::Display for ValidationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The part of a curriculum a validation finding refers to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Element {
    Program,
    Module { code: ModuleCode },
    Constraint { constraint: PrecedenceConstraint },
    ChoiceGroup { index: usize },
    Rules,
    Cycle { modules: Vec<ModuleCode> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{message}")]
pub struct ValidationError {
    pub code: ValidationCode,
    pub element: Element,
    pub message: String,
}

impl ValidationError {
    fn new(code: ValidationCode, element: Element, message: impl Into<String>) -> Self {
        ValidationError {
            code,
            element,
            message: message.into(),
        }
    }
}

/// Non-fatal findings about configurations whose semantics are unusual.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationWarning {
    pub element: Element,
    pub message: String,
}

/// Checks every structural invariant of `raw` and returns it unchanged when
/// all hold, or every violation found.
pub fn validate_curriculum(raw: Curriculum) -> Result<Curriculum, Vec<ValidationError>> {
    use ValidationCode::*;
    let mut errors = Vec::new();

    if raw.modules.is_empty() {
        errors.push(ValidationError::new(
            NoModules,
            Element::Program,
            "no modules",
        ));
    }

    let mut seen: BTreeMap<&ModuleCode, &ModuleDef> = BTreeMap::new();
    for m in &raw.modules {
        let element = Element::Module {
            code: m.code.clone(),
        };
        if !m.code.is_well_formed() {
            errors.push(ValidationError::new(
                InvalidIdentifier,
                element.clone(),
                format!("invalid module code {:?}", m.code.as_str()),
            ));
        }
        if !is_identifier(&m.level) {
            errors.push(ValidationError::new(
                InvalidIdentifier,
                element.clone(),
                format!("invalid level {:?} on module {}", m.level, m.code),
            ));
        }
        if seen.insert(&m.code, m).is_some() {
            errors.push(ValidationError::new(
                DuplicateModule,
                element.clone(),
                format!("duplicate module code {}", m.code),
            ));
        }
        if m.first_marker && m.last_marker {
            errors.push(ValidationError::new(
                FirstLastConflict,
                element.clone(),
                format!("module {} cannot be both first and last", m.code),
            ));
        }
        if m.nominal_year == 0 {
            errors.push(ValidationError::new(
                InvalidYear,
                element,
                format!("module {} has nominal year 0", m.code),
            ));
        }
    }

    for c in &raw.constraints {
        let element = Element::Constraint {
            constraint: c.clone(),
        };
        for code in [&c.precedent, &c.antecedent] {
            if !seen.contains_key(code) {
                errors.push(ValidationError::new(
                    UnknownModule,
                    element.clone(),
                    format!("unknown module {code} in constraint {c}"),
                ));
            }
        }
        if c.precedent == c.antecedent {
            errors.push(ValidationError::new(
                SelfPrecedence,
                element,
                format!("module {} cannot precede itself", c.precedent),
            ));
        }
    }

    for cycle in precedence_cycles(&raw) {
        let names: Vec<&str> = cycle.iter().map(ModuleCode::as_str).collect();
        errors.push(ValidationError::new(
            PrecedenceCycle,
            Element::Cycle {
                modules: cycle.clone(),
            },
            format!("precedence cycle: {}", names.join(",")),
        ));
    }

    for (index, g) in raw.choice_groups.iter().enumerate() {
        let element = Element::ChoiceGroup { index };
        if g.required > g.members.len() {
            errors.push(ValidationError::new(
                InvalidChoiceGroup,
                element.clone(),
                format!(
                    "choose {} of {} has only {} members",
                    g.required,
                    g.members,
                    g.members.len()
                ),
            ));
        }
        for code in &g.members {
            match seen.get(code) {
                None => errors.push(ValidationError::new(
                    UnknownModule,
                    element.clone(),
                    format!("unknown module {code} in choice group {}", g.members),
                )),
                Some(m) if m.compulsory => errors.push(ValidationError::new(
                    InvalidChoiceGroup,
                    element.clone(),
                    format!(
                        "compulsory module {code} listed in choice group {}",
                        g.members
                    ),
                )),
                Some(_) => {}
            }
        }
    }

    let rules = raw.rules;
    if rules.max_modules_per_year == 0 {
        errors.push(ValidationError::new(
            InvalidRule,
            Element::Rules,
            "max_per_year must be at least 1",
        ));
    }
    if rules.modules_required_for_thesis == 0 && !raw.modules.is_empty() {
        errors.push(ValidationError::new(
            InvalidRule,
            Element::Rules,
            "thesis_after must be at least 1",
        ));
    }

    let compulsory = raw.modules.iter().filter(|m| m.compulsory).count();
    let chosen: usize = raw.choice_groups.iter().map(|g| g.required).sum();
    if !raw.modules.is_empty() && compulsory + chosen != rules.modules_required_for_thesis {
        errors.push(ValidationError::new(
            CompletionArithmetic,
            Element::Rules,
            format!(
                "{compulsory} compulsory + {chosen} chosen modules does not equal thesis_after {}",
                rules.modules_required_for_thesis
            ),
        ));
    } else if errors.is_empty() && completion_sets(&raw).is_empty() {
        errors.push(ValidationError::new(
            CompletionArithmetic,
            Element::Rules,
            "overlapping choice groups leave no completion set of the required size",
        ));
    }

    if errors.is_empty() {
        Ok(raw)
    } else {
        Err(errors)
    }
}

/// Findings that do not make a curriculum invalid but deserve attention.
pub fn curriculum_warnings(c: &Curriculum) -> Vec<ValidationWarning> {
    let mut warnings = Vec::new();
    for (i, a) in c.choice_groups.iter().enumerate() {
        for (j, b) in c.choice_groups.iter().enumerate().skip(i + 1) {
            if !a.members.is_disjoint(&b.members) {
                warnings.push(ValidationWarning {
                    element: Element::ChoiceGroup { index: j },
                    message: format!(
                        "choice groups {} and {} overlap (group {i} and {j})",
                        a.members, b.members
                    ),
                });
            }
        }
    }
    for con in &c.constraints {
        let (Some(p), Some(a)) = (c.module(&con.precedent), c.module(&con.antecedent)) else {
            continue;
        };
        if !p.compulsory && a.compulsory && con.kind == ConstraintKind::Hard {
            warnings.push(ValidationWarning {
                element: Element::Constraint { constraint: con.clone() },
                message: format!(
                    "optional module {} is a hard precedent of compulsory {}; it is effectively required",
                    p.code, a.code
                ),
            });
        }
    }
    for m in &c.modules {
        if !m.compulsory && (m.first_marker || m.last_marker) {
            warnings.push(ValidationWarning {
                element: Element::Module {
                    code: m.code.clone(),
                },
                message: format!("optional module {} carries a first/last marker", m.code),
            });
        }
    }
    warnings
}

/// Non-trivial strongly connected components of the constraint graph, each
/// as a sorted list of codes.
fn precedence_cycles(c: &Curriculum) -> Vec<Vec<ModuleCode>> {
    let codes: Vec<&ModuleCode> = {
        let set: BTreeSet<&ModuleCode> = c.modules.iter().map(|m| &m.code).collect();
        set.into_iter().collect()
    };
    let index: BTreeMap<&ModuleCode, usize> =
        codes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut adj = vec![Vec::new(); codes.len()];
    for con in &c.constraints {
        if let (Some(&p), Some(&a)) = (index.get(&con.precedent), index.get(&con.antecedent)) {
            if p != a {
                adj[p].push(a);
            }
        }
    }

    // Tarjan's algorithm, iterative.
    let n = codes.len();
    let mut order = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut components = Vec::new();

    for root in 0..n {
        if order[root] != usize::MAX {
            continue;
        }
        let mut work = vec![(root, 0usize)];
        order[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut next)) = work.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if order[w] == usize::MAX {
                    order[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(order[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == order[v] {
                    let mut component = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        component.push(codes[w].clone());
                        if w == v {
                            break;
                        }
                    }
                    if component.len() > 1 {
                        component.sort();
                        components.push(component);
                    }
                }
            }
        }
    }
    components.sort();
    components
}

/// Every set made of all compulsory modules plus exactly `required` members
/// of each choice group, restricted to sets of the thesis size.
pub fn completion_sets(c: &Curriculum) -> BTreeSet<ModuleSet> {
    let base: ModuleSet = c
        .modules
        .iter()
        .filter(|m| m.compulsory)
        .map(|m| m.code.clone())
        .collect();

    let mut partial = vec![base];
    for group in &c.choice_groups {
        let members: Vec<&ModuleCode> = group.members.iter().collect();
        let picks = combinations(&members, group.required);
        let mut next = Vec::with_capacity(partial.len() * picks.len());
        for done in &partial {
            for pick in &picks {
                let mut s = done.clone();
                for code in pick {
                    s.insert((*code).clone());
                }
                next.push(s);
            }
        }
        partial = next;
    }

    let target = c.rules.modules_required_for_thesis;
    partial.into_iter().filter(|s| s.len() == target).collect()
}

fn combinations<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    fn go<T: Clone>(items: &[T], k: usize, start: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i].clone());
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= items.len() {
        go(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdmissibilityError {
    #[error("completed set contains unknown module {0}")]
    UnknownModule(ModuleCode),
}

/// Precomputed constraint lookups for repeated admissibility queries over
/// one curriculum.
#[derive(Debug, Clone)]
pub struct Admissibility<'a> {
    curriculum: &'a Curriculum,
    completion: Vec<ModuleSet>,
    hard_precedents: BTreeMap<ModuleCode, Vec<ModuleCode>>,
    soft_precedents: BTreeMap<ModuleCode, Vec<ModuleCode>>,
    /// Modules that must not be selected once the keyed module is taken.
    antecedents: BTreeMap<ModuleCode, Vec<ModuleCode>>,
    first_markers: ModuleSet,
    last_markers: ModuleSet,
    optional: ModuleSet,
}

impl<'a> Admissibility<'a> {
    pub fn new(curriculum: &'a Curriculum) -> Self {
        let mut hard_precedents: BTreeMap<ModuleCode, Vec<ModuleCode>> = BTreeMap::new();
        let mut soft_precedents: BTreeMap<ModuleCode, Vec<ModuleCode>> = BTreeMap::new();
        let mut antecedents: BTreeMap<ModuleCode, Vec<ModuleCode>> = BTreeMap::new();
        for con in &curriculum.constraints {
            let map = match con.kind {
                ConstraintKind::Hard => &mut hard_precedents,
                ConstraintKind::Soft => &mut soft_precedents,
            };
            map.entry(con.antecedent.clone())
                .or_default()
                .push(con.precedent.clone());
            antecedents
                .entry(con.precedent.clone())
                .or_default()
                .push(con.antecedent.clone());
        }
        let pick = |f: fn(&ModuleDef) -> bool| -> ModuleSet {
            curriculum
                .modules
                .iter()
                .filter(|m| f(m))
                .map(|m| m.code.clone())
                .collect()
        };
        Admissibility {
            curriculum,
            completion: completion_sets(curriculum).into_iter().collect(),
            hard_precedents,
            soft_precedents,
            antecedents,
            first_markers: pick(|m| m.first_marker),
            last_markers: pick(|m| m.last_marker),
            optional: pick(|m| !m.compulsory),
        }
    }

    pub fn curriculum(&self) -> &Curriculum {
        self.curriculum
    }

    pub fn completion_sets(&self) -> &[ModuleSet] {
        &self.completion
    }

    pub fn is_complete(&self, taken: &ModuleSet) -> bool {
        self.completion.iter().any(|s| s == taken)
    }

    /// All selections `D` a student who has cleared `completed` may enrol in
    /// during path year `year` (1-based).
    pub fn selections(
        &self,
        completed: &ModuleSet,
        year: usize,
    ) -> Result<BTreeSet<ModuleSet>, AdmissibilityError> {
        if let Some(unknown) = completed
            .iter()
            .find(|c| self.curriculum.module(c).is_none())
        {
            return Err(AdmissibilityError::UnknownModule(unknown.clone()));
        }

        let targets: Vec<&ModuleSet> = self
            .completion
            .iter()
            .filter(|t| completed.is_subset(t))
            .collect();
        let candidates: Vec<ModuleCode> = targets
            .iter()
            .flat_map(|t| t.iter())
            .filter(|c| !completed.contains(c))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut out = BTreeSet::new();
        let max = self
            .curriculum
            .rules
            .max_modules_per_year
            .min(candidates.len());
        for size in 1..=max {
            for pick in combinations(&candidates, size) {
                let selection: ModuleSet = pick.into_iter().collect();
                if self.admits(completed, &selection, year, &targets) {
                    out.insert(selection);
                }
            }
        }
        Ok(out)
    }

    fn admits(
        &self,
        completed: &ModuleSet,
        selection: &ModuleSet,
        year: usize,
        targets: &[&ModuleSet],
    ) -> bool {
        if year == 1 && !self.first_markers.is_subset(selection) {
            return false;
        }
        let after = completed.union(selection);
        let threshold = self.curriculum.rules.modules_required_for_thesis;
        if selection.iter().any(|d| self.last_markers.contains(d)) && after.len() != threshold {
            return false;
        }
        for d in selection {
            if let Some(pre) = self.hard_precedents.get(d) {
                if !pre.iter().all(|p| completed.contains(p)) {
                    return false;
                }
            }
            // A precedent may not be started after its antecedent.
            if let Some(ante) = self.antecedents.get(d) {
                if ante.iter().any(|a| completed.contains(a)) {
                    return false;
                }
            }
        }
        targets.iter().any(|target| {
            after.is_subset(target)
                && selection.iter().all(|d| {
                    self.soft_precedents.get(d).is_none_or(|pre| {
                        pre.iter().all(|p| {
                            after.contains(p) || (self.optional.contains(p) && !target.contains(p))
                        })
                    })
                })
        })
    }
}

/// Every nonempty selection admissible after clearing `completed`, in path
/// year `year`.
pub fn admissible_selections(
    completed: &ModuleSet,
    year: usize,
    c: &Curriculum,
) -> Result<BTreeSet<ModuleSet>, AdmissibilityError> {
    Admissibility::new(c).selections(completed, year)
}
