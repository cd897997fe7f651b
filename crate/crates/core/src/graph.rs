//! Enrolment state graph built from the admissible paths, and its quotient
//! onto cumulative module sets.
//!
//! A refined state is `(taken, current)`: every module selected so far and
//! this year's selection. Each active state carries a repeat self-edge
//! (the year's selection is failed and retaken) and a dropout edge. The
//! final year of a path advances to an absorbing eligible state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::curriculum::{Curriculum, ModuleSet};
use crate::paths::{enumerate_paths, TuitionPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateTag {
    Start,
    Active,
    Eligible,
    Dropout,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EnrollmentState {
    pub tag: StateTag,
    pub taken: ModuleSet,
    pub current: ModuleSet,
}

impl EnrollmentState {
    pub fn start() -> Self {
        EnrollmentState {
            tag: StateTag::Start,
            taken: ModuleSet::new(),
            current: ModuleSet::new(),
        }
    }

    pub fn dropout() -> Self {
        EnrollmentState {
            tag: StateTag::Dropout,
            taken: ModuleSet::new(),
            current: ModuleSet::new(),
        }
    }

    pub fn eligible(taken: ModuleSet) -> Self {
        EnrollmentState {
            tag: StateTag::Eligible,
            taken,
            current: ModuleSet::new(),
        }
    }

    pub fn active(taken: ModuleSet, current: ModuleSet) -> Self {
        EnrollmentState {
            tag: StateTag::Active,
            taken,
            current,
        }
    }

    pub fn is_absorbing(&self) -> bool {
        matches!(self.tag, StateTag::Eligible | StateTag::Dropout)
    }

    /// Stable textual identifier: `start`, `dropout`, `eligible:50;51;60;61`
    /// or `active:50;51;60/51;60` (taken, then current).
    pub fn id(&self) -> String {
        match self.tag {
            StateTag::Start => "start".into(),
            StateTag::Dropout => "dropout".into(),
            StateTag::Eligible => format!("eligible:{}", self.taken.joined(";")),
            StateTag::Active => format!(
                "active:{}/{}",
                self.taken.joined(";"),
                self.current.joined(";")
            ),
        }
    }

    fn sort_key(&self) -> (u8, usize, &ModuleSet, &ModuleSet) {
        let group = match self.tag {
            StateTag::Start => 0,
            StateTag::Active | StateTag::Eligible => 1,
            StateTag::Dropout => 2,
        };
        (group, self.taken.len(), &self.taken, &self.current)
    }
}

/// Canonical order: start first, dropout last, everything else by
/// `|taken|`, then `taken`, then `current`.
impl Ord for EnrollmentState {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then(self.tag.cmp(&other.tag))
    }
}

impl PartialOrd for EnrollmentState {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for EnrollmentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            StateTag::Start => f.write_str("start"),
            StateTag::Dropout => f.write_str("dropout"),
            StateTag::Eligible => write!(f, "eligible {}", self.taken),
            StateTag::Active => write!(f, "({};{})", self.taken, self.current),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed state id {0:?}")]
pub struct StateIdError(pub String);

impl FromStr for EnrollmentState {
    type Err = StateIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StateIdError(s.to_string());
        match s {
            "start" => return Ok(EnrollmentState::start()),
            "dropout" => return Ok(EnrollmentState::dropout()),
            _ => {}
        }
        let (tag, rest) = s.split_once(':').ok_or_else(bad)?;
        let state = match tag {
            "eligible" => EnrollmentState::eligible(ModuleSet::parse_joined(rest, ';')),
            "active" => {
                let (taken, current) = rest.split_once('/').ok_or_else(bad)?;
                let taken = ModuleSet::parse_joined(taken, ';');
                let current = ModuleSet::parse_joined(current, ';');
                if current.is_empty() || !current.is_subset(&taken) {
                    return Err(bad());
                }
                EnrollmentState::active(taken, current)
            }
            _ => return Err(bad()),
        };
        if state.taken.iter().any(|c| !c.is_well_formed()) || state.taken.is_empty() {
            return Err(bad());
        }
        Ok(state)
    }
}

impl Serialize for EnrollmentState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            id: String,
            tag: StateTag,
            taken: &'a ModuleSet,
            current: &'a ModuleSet,
        }
        View {
            id: self.id(),
            tag: self.tag,
            taken: &self.taken,
            current: &self.current,
        }
        .serialize(serializer)
    }
}

/// What happens to a student at the end of a year.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    /// Passed everything and enrols in the given selection next year. The
    /// empty selection is the step into thesis eligibility.
    Advance(ModuleSet),
    Repeat,
    Dropout,
}

impl Outcome {
    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Advance(_) => "advance",
            Outcome::Repeat => "repeat",
            Outcome::Dropout => "dropout",
        }
    }

    pub fn selection(&self) -> Option<&ModuleSet> {
        match self {
            Outcome::Advance(s) => Some(s),
            _ => None,
        }
    }

    /// Inverse of `(kind(), selection joined by ';')`.
    pub fn parse(kind: &str, selection: &str) -> Option<Outcome> {
        match (kind, selection.trim()) {
            ("advance", sel) => Some(Outcome::Advance(ModuleSet::parse_joined(sel, ';'))),
            ("repeat", "") => Some(Outcome::Repeat),
            ("dropout", "") => Some(Outcome::Dropout),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Advance(s) if s.is_empty() => f.write_str("advance(eligible)"),
            Outcome::Advance(s) => write!(f, "advance{s}"),
            Outcome::Repeat => f.write_str("repeat"),
            Outcome::Dropout => f.write_str("dropout"),
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            kind: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            selection: Option<&'a ModuleSet>,
        }
        View {
            kind: self.kind(),
            selection: self.selection(),
        }
        .serialize(serializer)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateGraph {
    states: Vec<EnrollmentState>,
    edges: Vec<Edge>,
    #[serde(skip)]
    offsets: Vec<usize>,
}

/// Enumerates the paths of `c` and builds the refined state graph.
pub fn build_state_graph(c: &Curriculum) -> StateGraph {
    StateGraph::from_paths(&enumerate_paths(c))
}

impl StateGraph {
    pub fn from_paths(paths: &[TuitionPath]) -> StateGraph {
        let mut states = BTreeSet::new();
        let mut edges = BTreeSet::new();
        states.insert(EnrollmentState::start());
        states.insert(EnrollmentState::dropout());

        for path in paths {
            let mut from = EnrollmentState::start();
            let mut taken = ModuleSet::new();
            for year in &path.years {
                taken = taken.union(year);
                let to = EnrollmentState::active(taken.clone(), year.clone());
                edges.insert((from, Outcome::Advance(year.clone()), to.clone()));
                states.insert(to.clone());
                from = to;
            }
            let done = EnrollmentState::eligible(taken);
            states.insert(done.clone());
            edges.insert((from, Outcome::Advance(ModuleSet::new()), done));
        }

        for s in states.iter().filter(|s| s.tag == StateTag::Active) {
            edges.insert((s.clone(), Outcome::Repeat, s.clone()));
            edges.insert((s.clone(), Outcome::Dropout, EnrollmentState::dropout()));
        }

        let states: Vec<EnrollmentState> = states.into_iter().collect();
        let index = |s: &EnrollmentState| states.binary_search(s).expect("state registered");
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|(from, label, to)| Edge {
                from: index(&from),
                to: index(&to),
                label,
            })
            .collect();
        edges.sort_by(|a, b| (a.from, &a.label).cmp(&(b.from, &b.label)));

        let mut offsets = vec![0; states.len() + 1];
        for e in &edges {
            offsets[e.from + 1] += 1;
        }
        for i in 0..states.len() {
            offsets[i + 1] += offsets[i];
        }

        StateGraph {
            states,
            edges,
            offsets,
        }
    }

    pub fn states(&self) -> &[EnrollmentState] {
        &self.states
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &EnrollmentState) -> Option<usize> {
        self.states.binary_search(state).ok()
    }

    /// Outgoing edges of state `i`, sorted by label.
    pub fn outgoing(&self, i: usize) -> &[Edge] {
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn start(&self) -> usize {
        0
    }

    pub fn dropout(&self) -> usize {
        self.states.len() - 1
    }

    pub fn indices_with(&self, tag: StateTag) -> impl Iterator<Item = usize> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.tag == tag)
            .map(|(i, _)| i)
    }

    /// Graphviz rendering; repeat and dropout edges are dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph enrolment {\n  rankdir=LR;\n");
        for (i, s) in self.states.iter().enumerate() {
            let shape = if s.is_absorbing() || s.tag == StateTag::Start {
                "doubleoctagon"
            } else {
                "box"
            };
            out.push_str(&format!(
                "  s{i} [label=\"{}\", shape={shape}];\n",
                s.to_string().replace('"', "\\\"")
            ));
        }
        for e in &self.edges {
            let style = match e.label {
                Outcome::Advance(_) => "solid",
                _ => "dashed",
            };
            out.push_str(&format!(
                "  s{} -> s{} [label=\"{}\", style={style}];\n",
                e.from, e.to, e.label
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Node of the cumulative-set view: a student's state reduced to the
/// modules selected so far.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AggregateState {
    Start,
    Modules(ModuleSet),
    Dropout,
}

impl AggregateState {
    pub fn of(state: &EnrollmentState) -> AggregateState {
        match state.tag {
            StateTag::Start => AggregateState::Start,
            StateTag::Dropout => AggregateState::Dropout,
            StateTag::Active | StateTag::Eligible => AggregateState::Modules(state.taken.clone()),
        }
    }

    pub fn id(&self) -> String {
        match self {
            AggregateState::Start => "start".into(),
            AggregateState::Dropout => "dropout".into(),
            AggregateState::Modules(m) => format!("set:{}", m.joined(";")),
        }
    }

    fn sort_key(&self) -> (u8, usize, Option<&ModuleSet>) {
        match self {
            AggregateState::Start => (0, 0, None),
            AggregateState::Modules(m) => (1, m.len(), Some(m)),
            AggregateState::Dropout => (2, 0, None),
        }
    }
}

impl Ord for AggregateState {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for AggregateState {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AggregateState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateState::Start => f.write_str("start"),
            AggregateState::Dropout => f.write_str("dropout"),
            AggregateState::Modules(m) => write!(f, "{m}"),
        }
    }
}

impl Serialize for AggregateState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            id: String,
            tag: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            taken: Option<&'a ModuleSet>,
        }
        let (tag, taken) = match self {
            AggregateState::Start => ("start", None),
            AggregateState::Dropout => ("dropout", None),
            AggregateState::Modules(m) => ("modules", Some(m)),
        };
        View {
            id: self.id(),
            tag,
            taken,
        }
        .serialize(serializer)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AggregateEdge {
    pub from: usize,
    pub to: usize,
    pub labels: Vec<Outcome>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AggregateGraph {
    pub states: Vec<AggregateState>,
    pub edges: Vec<AggregateEdge>,
}

/// Quotient of `g` under `(taken, current) -> taken`; parallel edges are
/// merged and their labels unioned.
pub fn aggregate_graph(g: &StateGraph) -> AggregateGraph {
    let states: Vec<AggregateState> = g
        .states()
        .iter()
        .map(AggregateState::of)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |s: &EnrollmentState| {
        states
            .binary_search(&AggregateState::of(s))
            .expect("image is a quotient state")
    };
    let mut merged: BTreeMap<(usize, usize), BTreeSet<Outcome>> = BTreeMap::new();
    for e in g.edges() {
        merged
            .entry((index(&g.states()[e.from]), index(&g.states()[e.to])))
            .or_default()
            .insert(e.label.clone());
    }
    let edges = merged
        .into_iter()
        .map(|((from, to), labels)| AggregateEdge {
            from,
            to,
            labels: labels.into_iter().collect(),
        })
        .collect();
    AggregateGraph { states, edges }
}

impl AggregateGraph {
    pub fn index_of(&self, state: &AggregateState) -> Option<usize> {
        self.states.binary_search(state).ok()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph enrolment_sets {\n  rankdir=LR;\n");
        for (i, s) in self.states.iter().enumerate() {
            out.push_str(&format!("  s{i} [label=\"{s}\"];\n"));
        }
        for e in &self.edges {
            let advances: Vec<String> = e
                .labels
                .iter()
                .filter_map(|l| l.selection().filter(|s| !s.is_empty()))
                .map(|s| s.joined(","))
                .collect();
            let style = if advances.is_empty() {
                "dashed"
            } else {
                "solid"
            };
            out.push_str(&format!(
                "  s{} -> s{} [label=\"{}\", style={style}];\n",
                e.from,
                e.to,
                advances.join(" | ")
            ));
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::set;
    use crate::fixtures::{hou, tiny};

    #[test]
    fn tiny_graph() {
        let g = build_state_graph(&tiny());
        let ids: Vec<String> = g.states().iter().map(EnrollmentState::id).collect();
        assert_eq!(
            ids,
            [
                "start",
                "active:A/A",
                "eligible:A;B",
                "active:A;B/B",
                "dropout"
            ]
        );
        assert_eq!(g.start(), 0);
        assert_eq!(g.dropout(), 4);
        let labels: Vec<String> = g.outgoing(1).iter().map(|e| e.label.to_string()).collect();
        assert_eq!(labels, ["advance{B}", "repeat", "dropout"]);
        let labels: Vec<String> = g.outgoing(3).iter().map(|e| e.label.to_string()).collect();
        assert_eq!(labels, ["advance(eligible)", "repeat", "dropout"]);
    }

    #[test]
    fn tiny_aggregate_merges_final_year_into_sink() {
        let g = build_state_graph(&tiny());
        let a = aggregate_graph(&g);
        let ids: Vec<String> = a.states.iter().map(AggregateState::id).collect();
        assert_eq!(ids, ["start", "set:A", "set:A;B", "dropout"]);
    }

    #[test]
    fn hou_active_states_have_repeat_and_dropout() {
        let g = build_state_graph(&hou());
        for i in g.indices_with(StateTag::Active) {
            let out = g.outgoing(i);
            assert!(out.len() >= 2);
            assert_eq!(
                out.iter()
                    .filter(|e| e.label == Outcome::Repeat && e.to == i)
                    .count(),
                1
            );
            assert_eq!(
                out.iter()
                    .filter(|e| e.label == Outcome::Dropout && e.to == g.dropout())
                    .count(),
                1
            );
        }
        for i in g.indices_with(StateTag::Eligible).chain([g.dropout()]) {
            assert!(g.outgoing(i).is_empty());
        }
        assert!(g
            .outgoing(g.start())
            .iter()
            .all(|e| matches!(e.label, Outcome::Advance(_))));
    }

    #[test]
    fn hou_aggregate_merges_current_selections() {
        let g = build_state_graph(&hou());
        let a = aggregate_graph(&g);
        let three = AggregateState::Modules(set(["50", "51", "60"]));
        let target = a.index_of(&three).unwrap();
        let sources: Vec<EnrollmentState> = g
            .states()
            .iter()
            .filter(|s| AggregateState::of(s) == three)
            .cloned()
            .collect();
        assert_eq!(
            sources,
            vec![
                EnrollmentState::active(set(["50", "51", "60"]), set(["51", "60"])),
                EnrollmentState::active(set(["50", "51", "60"]), set(["60"])),
            ]
        );
        let from_50 = a.index_of(&AggregateState::Modules(set(["50"]))).unwrap();
        let e = a
            .edges
            .iter()
            .find(|e| e.from == from_50 && e.to == target)
            .unwrap();
        assert_eq!(e.labels, vec![Outcome::Advance(set(["51", "60"]))]);
    }

    #[test]
    fn state_ids_round_trip() {
        let g = build_state_graph(&hou());
        for s in g.states() {
            assert_eq!(&s.id().parse::<EnrollmentState>().unwrap(), s);
        }
        for bad in [
            "",
            "active:50",
            "active:50/51",
            "eligible:",
            "nope:1",
            "active:/",
        ] {
            assert!(bad.parse::<EnrollmentState>().is_err(), "{bad}");
        }
    }

    #[test]
    fn dot_mentions_every_state() {
        let g = build_state_graph(&tiny());
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("shape=").count(), g.len());
    }
}
