//! View functions and the indistinguishability structure they induce.
//!
//! Two points are joined by an edge labelled `p_i` when agent `i` has the same
//! view at both. The index stores, per agent, the partition of all points into
//! these view classes; reachability and connected components over any group
//! of agents are computed from it.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pointset::PointSet;
use crate::runs::{local_history, AgentId, EventKind, LocalHistory, Point, System};

/// A nonempty group of agents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct AgentSet(BTreeSet<AgentId>);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("agent group must be nonempty")]
pub struct EmptyGroup;

impl AgentSet {
    pub fn new(members: impl IntoIterator<Item = AgentId>) -> Result<Self, EmptyGroup> {
        let set: BTreeSet<AgentId> = members.into_iter().collect();
        if set.is_empty() {
            Err(EmptyGroup)
        } else {
            Ok(AgentSet(set))
        }
    }

    pub fn of(indices: &[usize]) -> Result<Self, EmptyGroup> {
        AgentSet::new(indices.iter().copied().map(AgentId))
    }

    pub fn all(system: &System) -> Self {
        AgentSet(system.agents().collect())
    }

    pub fn single(agent: AgentId) -> Self {
        AgentSet(BTreeSet::from([agent]))
    }

    pub fn iter(&self) -> impl Iterator<Item = AgentId> + Clone + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.0.contains(&agent)
    }

    pub fn is_subset(&self, other: &AgentSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn max_agent(&self) -> AgentId {
        *self.0.iter().next_back().expect("nonempty")
    }
}

impl TryFrom<Vec<usize>> for AgentSet {
    type Error = EmptyGroup;
    fn try_from(v: Vec<usize>) -> Result<Self, EmptyGroup> {
        AgentSet::of(&v)
    }
}

impl From<AgentSet> for Vec<usize> {
    fn from(s: AgentSet) -> Self {
        s.0.into_iter().map(|a| a.0).collect()
    }
}

impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

type ProjectionFn = dyn Fn(AgentId, &LocalHistory) -> String + Send + Sync;

/// A named map from local histories to view tokens.
#[derive(Clone)]
pub struct Projection {
    name: String,
    f: Arc<ProjectionFn>,
}

impl fmt::Debug for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Projection({})", self.name)
    }
}

impl Projection {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(AgentId, &LocalHistory) -> String + Send + Sync + 'static,
    ) -> Self {
        Projection { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, agent: AgentId, h: &LocalHistory) -> String {
        (self.f)(agent, h)
    }

    /// Initial state plus the set of received contents, ignoring order and sends.
    pub fn received_set() -> Self {
        Projection::new("received_set", |_, h| match &h.initial_state {
            None => "-".to_string(),
            Some(s) => {
                let got: BTreeSet<String> =
                    h.received().map(|e| format!("{}:{}", e.peer, e.message)).collect();
                format!("{s}|{}", got.into_iter().collect::<Vec<_>>().join(","))
            }
        })
    }

    /// Initial state plus the most recent event.
    pub fn last_event() -> Self {
        Projection::new("last_event", |_, h| match &h.initial_state {
            None => "-".to_string(),
            Some(s) => match h.events.last() {
                None => format!("{s}|"),
                Some(e) => format!("{s}|{:?}:{}:{}", e.event.kind, e.event.peer, e.event.message),
            },
        })
    }

    /// Initial state plus the number of sends and receives.
    pub fn event_count() -> Self {
        Projection::new("event_count", |_, h| match &h.initial_state {
            None => "-".to_string(),
            Some(s) => {
                let recv = h.events.iter().filter(|e| e.event.kind == EventKind::Receive).count();
                format!("{s}|{}|{recv}", h.events.len() - recv)
            }
        })
    }

    /// Initial state and current clock reading only.
    pub fn clock_only() -> Self {
        Projection::new("clock_only", |_, h| match &h.initial_state {
            None => "-".to_string(),
            Some(s) => format!("{s}|{:?}", h.current_clock()),
        })
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "received_set" => Some(Projection::received_set()),
            "last_event" => Some(Projection::last_event()),
            "event_count" => Some(Projection::event_count()),
            "clock_only" => Some(Projection::clock_only()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["received_set", "last_event", "event_count", "clock_only"]
    }
}

#[derive(Clone, Debug)]
pub enum ViewPolicy {
    /// The view is the complete local history.
    CompleteHistory,
    LocalState(Projection),
    /// A single view shared by every point.
    Trivial,
}

impl ViewPolicy {
    /// `complete`, `trivial`, or `local:<projection>`.
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "complete" => Some(ViewPolicy::CompleteHistory),
            "trivial" => Some(ViewPolicy::Trivial),
            other => other
                .strip_prefix("local:")
                .and_then(Projection::by_name)
                .map(ViewPolicy::LocalState),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ViewPolicy::CompleteHistory => "complete".into(),
            ViewPolicy::Trivial => "trivial".into(),
            ViewPolicy::LocalState(p) => format!("local:{}", p.name()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ViewError {
    #[error(
        "view of agent {agent} is not a function of its history: {first} and {second} share a history but get different views"
    )]
    NotFunctionOfHistory { agent: AgentId, first: String, second: String },
}

#[derive(Clone, Debug)]
pub struct Partition {
    class_of: Vec<u32>,
    classes: Vec<Vec<u32>>,
}

impl Partition {
    fn from_keys<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> Self {
        let mut ids: HashMap<K, u32> = HashMap::new();
        let mut class_of = Vec::new();
        let mut classes: Vec<Vec<u32>> = Vec::new();
        for (i, k) in keys.enumerate() {
            let next = ids.len() as u32;
            let c = *ids.entry(k).or_insert(next);
            if c as usize == classes.len() {
                classes.push(Vec::new());
            }
            classes[c as usize].push(i as u32);
            class_of.push(c);
        }
        Partition { class_of, classes }
    }

    pub fn class_of(&self, index: usize) -> u32 {
        self.class_of[index]
    }

    pub fn class(&self, id: u32) -> &[u32] {
        &self.classes[id as usize]
    }

    pub fn classes(&self) -> &[Vec<u32>] {
        &self.classes
    }

    pub fn members_of(&self, index: usize) -> &[u32] {
        self.class(self.class_of(index))
    }
}

/// Per-agent view partitions over every point of a system.
#[derive(Clone, Debug)]
pub struct IndistIndex {
    run_ids: Vec<String>,
    ticks: usize,
    partitions: Vec<Partition>,
}

pub fn build_index(system: &System, policy: &ViewPolicy) -> Result<IndistIndex, ViewError> {
    let n = system.point_count();
    let mut partitions = Vec::with_capacity(system.agent_count());
    for agent in system.agents() {
        let part = match policy {
            ViewPolicy::CompleteHistory => {
                Partition::from_keys((0..n).map(|i| system.history_id(agent, i)))
            }
            ViewPolicy::Trivial => Partition::from_keys((0..n).map(|_| ())),
            ViewPolicy::LocalState(proj) => {
                let mut views = Vec::with_capacity(n);
                let mut by_history: HashMap<u32, (usize, String)> = HashMap::new();
                for i in 0..n {
                    let p = system.point_at(i);
                    let h = local_history(system, agent, p).expect("point of system");
                    let v = proj.apply(agent, &h);
                    let hid = system.history_id(agent, i);
                    match by_history.get(&hid) {
                        Some((j, seen)) if *seen != v => {
                            return Err(ViewError::NotFunctionOfHistory {
                                agent,
                                first: system.label(system.point_at(*j)),
                                second: system.label(p),
                            });
                        }
                        Some(_) => {}
                        None => {
                            by_history.insert(hid, (i, v.clone()));
                        }
                    }
                    views.push(v);
                }
                Partition::from_keys(views.into_iter())
            }
        };
        partitions.push(part);
    }
    Ok(IndistIndex {
        run_ids: system.runs().iter().map(|r| r.id.clone()).collect(),
        ticks: system.ticks(),
        partitions,
    })
}

impl IndistIndex {
    pub fn point_count(&self) -> usize {
        self.run_ids.len() * self.ticks
    }

    pub fn agent_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn partition(&self, agent: AgentId) -> &Partition {
        &self.partitions[agent.0]
    }

    pub fn index_of(&self, p: Point) -> usize {
        p.run * self.ticks + p.time as usize
    }

    pub fn label(&self, index: usize) -> String {
        format!("{}@{}", self.run_ids[index / self.ticks], index % self.ticks)
    }

    pub fn same_view(&self, agent: AgentId, a: usize, b: usize) -> bool {
        let part = &self.partitions[agent.0];
        part.class_of[a] == part.class_of[b]
    }

    /// Class id of every point under the joint view of `group`.
    pub fn joint_classes(&self, group: &AgentSet) -> Partition {
        Partition::from_keys((0..self.point_count()).map(|i| {
            group.iter().map(|a| self.partitions[a.0].class_of[i]).collect::<Vec<u32>>()
        }))
    }

    /// Connected-component label of every point in the graph restricted to
    /// edges labelled by members of `group`.
    pub fn components(&self, group: &AgentSet) -> Vec<usize> {
        let mut uf = UnionFind::<usize>::new(self.point_count());
        for agent in group.iter() {
            for class in &self.partitions[agent.0].classes {
                for w in class.windows(2) {
                    uf.union(w[0] as usize, w[1] as usize);
                }
            }
        }
        uf.into_labeling()
    }

    fn bfs(&self, from: usize, group: &AgentSet, max_steps: Option<usize>, stop_at: Option<usize>) -> PointSet {
        let mut seen = PointSet::empty(self.point_count());
        let mut class_done: Vec<Vec<bool>> =
            self.partitions.iter().map(|p| vec![false; p.classes.len()]).collect();
        let mut queue = VecDeque::from([(from, 0usize)]);
        seen.insert(from);
        while let Some((p, depth)) = queue.pop_front() {
            if Some(p) == stop_at {
                break;
            }
            if max_steps.is_some_and(|m| depth >= m) {
                continue;
            }
            for agent in group.iter() {
                let part = &self.partitions[agent.0];
                let c = part.class_of[p] as usize;
                if class_done[agent.0][c] {
                    continue;
                }
                class_done[agent.0][c] = true;
                for &q in &part.classes[c] {
                    let q = q as usize;
                    if !seen.contains(q) {
                        seen.insert(q);
                        queue.push_back((q, depth + 1));
                    }
                }
            }
        }
        seen
    }
}

/// Is `to` reachable from `from` in at most `max_steps` group-labelled edges?
pub fn g_reachable(
    index: &IndistIndex,
    from: Point,
    to: Point,
    group: &AgentSet,
    max_steps: Option<usize>,
) -> bool {
    let (a, b) = (index.index_of(from), index.index_of(to));
    index.bfs(a, group, max_steps, Some(b)).contains(b)
}

/// Every point reachable from `from` in finitely many group-labelled steps.
pub fn reachable_set(index: &IndistIndex, from: Point, group: &AgentSet) -> PointSet {
    index.bfs(index.index_of(from), group, None, None)
}

/// Graphviz rendering of the indistinguishability graph for `agents`.
pub fn export_graph(index: &IndistIndex, agents: &[AgentId]) -> String {
    let mut agents: Vec<AgentId> = agents.to_vec();
    agents.sort();
    agents.dedup();
    let mut out = String::from("graph indist {\n");
    for i in 0..index.point_count() {
        let _ = writeln!(out, "  \"{}\";", index.label(i));
    }
    for agent in agents {
        let part = &index.partitions[agent.0];
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for class in &part.classes {
            for (k, &a) in class.iter().enumerate() {
                for &b in &class[k + 1..] {
                    edges.push((a, b));
                }
            }
        }
        edges.sort();
        for (a, b) in edges {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [label=\"p{}\"];",
                index.label(a as usize),
                index.label(b as usize),
                agent.0
            );
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runs::Run;

    fn growing() -> System {
        let r = Run::builder("r", 2)
            .message(0, 1, "a", 0, Some(0))
            .message(1, 0, "b", 1, Some(1))
            .message(0, 1, "c", 2, Some(2))
            .perfect_clocks(3)
            .build();
        System::with_default_names(2, 3, vec![r]).unwrap()
    }

    #[test]
    fn trivial_policy_single_class() {
        let idx = build_index(&growing(), &ViewPolicy::Trivial).unwrap();
        for a in 0..2 {
            assert_eq!(idx.partition(AgentId(a)).classes().len(), 1);
        }
    }

    #[test]
    fn complete_history_singletons_when_histories_grow() {
        let sys = growing();
        let idx = build_index(&sys, &ViewPolicy::CompleteHistory).unwrap();
        for a in sys.agents() {
            // brute force: pairwise comparison of histories
            for i in 0..sys.point_count() {
                for j in 0..sys.point_count() {
                    let hi = local_history(&sys, a, sys.point_at(i)).unwrap();
                    let hj = local_history(&sys, a, sys.point_at(j)).unwrap();
                    assert_eq!(hi == hj, idx.same_view(a, i, j));
                }
            }
            assert_eq!(idx.partition(a).classes().len(), sys.point_count());
        }
        let from = Point { run: 0, time: 2 };
        let g = AgentSet::all(&sys);
        assert_eq!(reachable_set(&idx, from, &g), PointSet::from_indices(4, [2]));
    }

    #[test]
    fn impure_projection_is_rejected() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let counter = AtomicUsize::new(0);
        let proj = Projection::new("counter", move |_, _| counter.fetch_add(1, Ordering::SeqCst).to_string());
        let r = Run::builder("r", 2).build();
        let sys = System::with_default_names(2, 2, vec![r]).unwrap();
        let err = build_index(&sys, &ViewPolicy::LocalState(proj)).unwrap_err();
        assert!(matches!(err, ViewError::NotFunctionOfHistory { agent: AgentId(0), .. }));
    }

    #[test]
    fn reachability_steps() {
        // agent 0 cannot tell runs a and b apart, agent 1 cannot tell b and c apart
        let a = Run::builder("a", 2).initial(0, "x").initial(1, "1").build();
        let b = Run::builder("b", 2).initial(0, "x").initial(1, "2").build();
        let c = Run::builder("c", 2).initial(0, "y").initial(1, "2").build();
        let sys = System::with_default_names(2, 0, vec![a, b, c]).unwrap();
        let idx = build_index(&sys, &ViewPolicy::CompleteHistory).unwrap();
        let g = AgentSet::all(&sys);
        let p = |r| Point { run: r, time: 0 };
        assert!(g_reachable(&idx, p(0), p(0), &g, Some(0)));
        assert!(!g_reachable(&idx, p(0), p(1), &g, Some(0)));
        assert!(g_reachable(&idx, p(0), p(1), &g, Some(1)));
        assert!(!g_reachable(&idx, p(0), p(2), &g, Some(1)));
        assert!(g_reachable(&idx, p(0), p(2), &g, Some(2)));
        assert!(g_reachable(&idx, p(0), p(2), &g, None));
        let only0 = AgentSet::of(&[0]).unwrap();
        assert!(!g_reachable(&idx, p(0), p(2), &only0, None));
        assert_eq!(reachable_set(&idx, p(0), &only0), PointSet::from_indices(3, [0, 1]));
        let comps = idx.components(&g);
        assert!(comps.iter().all(|&c| c == comps[0]));
    }

    #[test]
    fn dot_export() {
        let a = Run::builder("a", 2).build();
        let b = Run::builder("b", 2).initial(1, "z").build();
        let sys = System::with_default_names(2, 0, vec![a, b]).unwrap();
        let idx = build_index(&sys, &ViewPolicy::CompleteHistory).unwrap();
        let none = export_graph(&idx, &[]);
        assert!(!none.contains("--"));
        assert!(none.contains("\"a@0\";"));
        let g = export_graph(&idx, &[AgentId(0), AgentId(1)]);
        assert_eq!(g.matches("--").count(), 1);
        assert!(g.contains("\"a@0\" -- \"b@0\" [label=\"p0\"];"));
        assert_eq!(g, export_graph(&idx, &[AgentId(1), AgentId(0)]));
    }

    #[test]
    fn policy_names_round_trip() {
        for name in ["complete", "trivial", "local:received_set", "local:clock_only"] {
            assert_eq!(ViewPolicy::parse(name).unwrap().name(), name);
        }
        assert!(ViewPolicy::parse("local:nope").is_none());
    }
}
