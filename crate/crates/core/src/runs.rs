//! Runs, points, local histories and clocks.
//!
//! Time is discrete: every run is observed on the ticks `0..=horizon` of its
//! enclosing [`System`]. A local history at `(r, t)` holds the agent's initial
//! state and everything it sent or received strictly before `t`, stamped with
//! its clock when the run has clocks. Histories never carry real time, so an
//! agent without a clock cannot tell two instants apart unless something
//! happened in between.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Time = u32;
pub type ClockValue = i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Send,
    Receive,
}

/// Something an agent does or observes. `peer` is the recipient of a send
/// or the origin of a receive; `message` is the content token.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub kind: EventKind,
    pub peer: AgentId,
    pub message: String,
}

impl Event {
    pub fn send(to: AgentId, message: impl Into<String>) -> Self {
        Event { kind: EventKind::Send, peer: to, message: message.into() }
    }

    pub fn receive(from: AgentId, message: impl Into<String>) -> Self {
        Event { kind: EventKind::Receive, peer: from, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimedEvent {
    pub time: Time,
    pub event: Event,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryEntry {
    pub event: Event,
    pub clock_stamp: Option<ClockValue>,
}

/// `h(p_i, r, t)`. `initial_state` is `None` before the agent wakes up, in
/// which case the history is empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalHistory {
    pub initial_state: Option<String>,
    pub events: Vec<HistoryEntry>,
    /// Distinct clock readings from wake-up through the query time, in order.
    pub clock_range: Option<Vec<ClockValue>>,
}

impl LocalHistory {
    pub fn is_empty(&self) -> bool {
        self.initial_state.is_none()
    }

    /// True iff `self` is a prefix of `other`.
    pub fn is_prefix_of(&self, other: &LocalHistory) -> bool {
        if self.is_empty() {
            return true;
        }
        if self.initial_state != other.initial_state {
            return false;
        }
        let events = other.events.len() >= self.events.len()
            && other.events[..self.events.len()] == self.events[..];
        let clocks = match (&self.clock_range, &other.clock_range) {
            (None, None) => true,
            (Some(a), Some(b)) => b.len() >= a.len() && b[..a.len()] == a[..],
            _ => false,
        };
        events && clocks
    }

    pub fn current_clock(&self) -> Option<ClockValue> {
        self.clock_range.as_ref().and_then(|c| c.last().copied())
    }

    pub fn received(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().map(|e| &e.event).filter(|e| e.kind == EventKind::Receive)
    }

    pub fn sent(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().map(|e| &e.event).filter(|e| e.kind == EventKind::Send)
    }
}

/// One execution. Per-agent vectors are indexed by `AgentId`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Run {
    pub id: String,
    pub wake_up: Vec<Time>,
    pub initial_state: Vec<String>,
    /// Per agent, sorted by `(time, event)`.
    pub timeline: Vec<Vec<TimedEvent>>,
    /// Per agent, one optional reading per tick `0..=horizon`.
    pub clock: Option<Vec<Vec<Option<ClockValue>>>>,
}

impl Run {
    pub fn builder(id: impl Into<String>, agents: usize) -> RunBuilder {
        RunBuilder {
            run: Run {
                id: id.into(),
                wake_up: vec![0; agents],
                initial_state: vec![String::new(); agents],
                timeline: vec![Vec::new(); agents],
                clock: None,
            },
        }
    }

    pub fn agents(&self) -> usize {
        self.wake_up.len()
    }

    pub fn clock_at(&self, agent: AgentId, t: Time) -> Option<ClockValue> {
        self.clock
            .as_ref()
            .and_then(|c| c.get(agent.0))
            .and_then(|row| row.get(t as usize).copied().flatten())
    }

    /// Same wake-up times and initial states.
    pub fn same_configuration(&self, other: &Run) -> bool {
        self.wake_up == other.wake_up && self.initial_state == other.initial_state
    }

    pub fn same_clock_readings(&self, other: &Run) -> bool {
        self.clock == other.clock
    }

    /// Times of receive events per agent, sorted.
    pub fn receive_times(&self, agent: AgentId) -> impl Iterator<Item = Time> + '_ {
        self.timeline[agent.0]
            .iter()
            .filter(|e| e.event.kind == EventKind::Receive)
            .map(|e| e.time)
    }

    pub fn has_receive_in(&self, agent: AgentId, from: Time, to_inclusive: Time) -> bool {
        self.receive_times(agent).any(|t| t >= from && t <= to_inclusive)
    }

    pub fn any_receive_in(&self, from: Time, to_inclusive: Time) -> bool {
        (0..self.agents()).any(|a| self.has_receive_in(AgentId(a), from, to_inclusive))
    }

    /// The run's content with the id cleared, used to detect duplicates.
    pub(crate) fn content_key(&self) -> Run {
        Run { id: String::new(), ..self.clone() }
    }

    pub(crate) fn sort_timelines(&mut self) {
        for line in &mut self.timeline {
            line.sort();
        }
    }

    pub(crate) fn history(&self, agent: AgentId, t: Time) -> LocalHistory {
        let a = agent.0;
        let wake = self.wake_up[a];
        if t < wake {
            return LocalHistory::default();
        }
        let events = self.timeline[a]
            .iter()
            .take_while(|e| e.time < t)
            .filter(|e| e.time >= wake)
            .map(|e| HistoryEntry { event: e.event.clone(), clock_stamp: self.clock_at(agent, e.time) })
            .collect();
        let clock_range = self.clock.as_ref().map(|_| {
            let mut range: Vec<ClockValue> = Vec::new();
            for s in wake..=t {
                if let Some(v) = self.clock_at(agent, s) {
                    if range.last() != Some(&v) {
                        range.push(v);
                    }
                }
            }
            range
        });
        LocalHistory { initial_state: Some(self.initial_state[a].clone()), events, clock_range }
    }
}

pub struct RunBuilder {
    run: Run,
}

impl RunBuilder {
    pub fn wake(mut self, agent: usize, t: Time) -> Self {
        self.run.wake_up[agent] = t;
        self
    }

    pub fn initial(mut self, agent: usize, state: impl Into<String>) -> Self {
        self.run.initial_state[agent] = state.into();
        self
    }

    pub fn initial_all(mut self, state: impl Into<String>) -> Self {
        let s = state.into();
        for slot in &mut self.run.initial_state {
            *slot = s.clone();
        }
        self
    }

    pub fn event(mut self, agent: usize, time: Time, event: Event) -> Self {
        self.run.timeline[agent].push(TimedEvent { time, event });
        self
    }

    /// A send from `from` at `sent`, received by `to` at `received` unless lost.
    pub fn message(
        self,
        from: usize,
        to: usize,
        content: &str,
        sent: Time,
        received: Option<Time>,
    ) -> Self {
        let b = self.event(from, sent, Event::send(AgentId(to), content));
        match received {
            Some(t) => b.event(to, t, Event::receive(AgentId(from), content)),
            None => b,
        }
    }

    /// Clock table for one agent; readings before wake-up should be `None`.
    pub fn clock(mut self, agent: usize, readings: Vec<Option<ClockValue>>) -> Self {
        let n = self.run.agents();
        let table = self.run.clock.get_or_insert_with(|| vec![Vec::new(); n]);
        table[agent] = readings;
        self
    }

    /// Every agent's clock reads real time from its wake-up on.
    pub fn perfect_clocks(mut self, horizon: Time) -> Self {
        for a in 0..self.run.agents() {
            let wake = self.run.wake_up[a];
            let readings =
                (0..=horizon).map(|t| (t >= wake).then_some(t as ClockValue)).collect();
            self = self.clock(a, readings);
        }
        self
    }

    pub fn build(mut self) -> Run {
        self.run.sort_timelines();
        self.run
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    /// Index into [`System::runs`].
    pub run: usize,
    pub time: Time,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SystemError {
    #[error("system needs at least one agent")]
    NoAgents,
    #[error("duplicate run id `{0}`")]
    DuplicateRun(String),
    #[error("run `{run}`: {field} has {found} entries, expected {expected}")]
    Shape { run: String, field: &'static str, found: usize, expected: usize },
    #[error("run `{run}`: agent {agent} has an event at time {time} beyond horizon {horizon}")]
    EventBeyondHorizon { run: String, agent: usize, time: Time, horizon: Time },
    #[error("run `{run}`: agent {agent} has an event with unknown peer {peer}")]
    UnknownPeer { run: String, agent: usize, peer: usize },
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error("agent {agent} out of range (system has {count} agents)")]
    UnknownAgent { agent: usize, count: usize },
    #[error("time {time} beyond horizon {horizon}")]
    TimeOutOfRange { time: Time, horizon: Time },
    #[error("malformed point `{0}` (expected run_id@t)")]
    MalformedPoint(String),
    #[error("systems have different agent sets")]
    AgentMismatch,
}

/// Interned complete-history ids, one per agent per point.
#[derive(Debug)]
pub(crate) struct HistoryTable {
    pub(crate) ids: Vec<Vec<u32>>,
}

/// A finite set of runs over a shared agent set and horizon.
///
/// Runs are kept sorted by id; point indices follow `(run, time)` order.
#[derive(Debug)]
pub struct System {
    agent_names: Vec<String>,
    horizon: Time,
    runs: Vec<Run>,
    histories: OnceLock<HistoryTable>,
}

impl Clone for System {
    fn clone(&self) -> Self {
        System {
            agent_names: self.agent_names.clone(),
            horizon: self.horizon,
            runs: self.runs.clone(),
            histories: OnceLock::new(),
        }
    }
}

impl PartialEq for System {
    fn eq(&self, other: &Self) -> bool {
        self.agent_names == other.agent_names
            && self.horizon == other.horizon
            && self.runs == other.runs
    }
}

impl System {
    pub fn new(agent_names: Vec<String>, horizon: Time, mut runs: Vec<Run>) -> Result<Self, SystemError> {
        if agent_names.is_empty() {
            return Err(SystemError::NoAgents);
        }
        let n = agent_names.len();
        runs.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in runs.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(SystemError::DuplicateRun(pair[0].id.clone()));
            }
        }
        for run in &mut runs {
            run.sort_timelines();
            let shape = |field, found| SystemError::Shape { run: run.id.clone(), field, found, expected: n };
            if run.wake_up.len() != n {
                return Err(shape("wake_up", run.wake_up.len()));
            }
            if run.initial_state.len() != n {
                return Err(shape("initial_state", run.initial_state.len()));
            }
            if run.timeline.len() != n {
                return Err(shape("timeline", run.timeline.len()));
            }
            if let Some(clock) = &run.clock {
                if clock.len() != n {
                    return Err(shape("clock", clock.len()));
                }
                for row in clock {
                    if row.len() != horizon as usize + 1 {
                        return Err(SystemError::Shape {
                            run: run.id.clone(),
                            field: "clock row",
                            found: row.len(),
                            expected: horizon as usize + 1,
                        });
                    }
                }
            }
            for (agent, line) in run.timeline.iter().enumerate() {
                for e in line {
                    if e.time > horizon {
                        return Err(SystemError::EventBeyondHorizon {
                            run: run.id.clone(),
                            agent,
                            time: e.time,
                            horizon,
                        });
                    }
                    if e.event.peer.0 >= n {
                        return Err(SystemError::UnknownPeer { run: run.id.clone(), agent, peer: e.event.peer.0 });
                    }
                }
            }
        }
        Ok(System { agent_names, horizon, runs, histories: OnceLock::new() })
    }

    /// Agents named `p0..p{n-1}`.
    pub fn with_default_names(agents: usize, horizon: Time, runs: Vec<Run>) -> Result<Self, SystemError> {
        System::new((0..agents).map(|i| format!("p{i}")).collect(), horizon, runs)
    }

    /// The same runs under new agent names.
    pub fn with_agent_names(self, names: Vec<String>) -> Result<Self, SystemError> {
        if names.len() != self.agent_count() {
            return Err(SystemError::AgentMismatch);
        }
        System::new(names, self.horizon, self.runs)
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agent_names
    }

    pub fn agent_count(&self) -> usize {
        self.agent_names.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + Clone {
        (0..self.agent_names.len()).map(AgentId)
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn run_index(&self, id: &str) -> Option<usize> {
        self.runs.binary_search_by(|r| r.id.as_str().cmp(id)).ok()
    }

    pub fn run(&self, id: &str) -> Option<&Run> {
        self.run_index(id).map(|i| &self.runs[i])
    }

    pub fn has_clocks(&self) -> bool {
        self.runs.iter().any(|r| r.clock.is_some())
    }

    pub fn ticks(&self) -> usize {
        self.horizon as usize + 1
    }

    pub fn point_count(&self) -> usize {
        self.runs.len() * self.ticks()
    }

    pub fn point_index(&self, p: Point) -> usize {
        p.run * self.ticks() + p.time as usize
    }

    pub fn point_at(&self, index: usize) -> Point {
        Point { run: index / self.ticks(), time: (index % self.ticks()) as Time }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.point_count()).map(|i| self.point_at(i))
    }

    pub fn point(&self, run_id: &str, time: Time) -> Result<Point, SystemError> {
        let run = self.run_index(run_id).ok_or_else(|| SystemError::UnknownRun(run_id.to_string()))?;
        if time > self.horizon {
            return Err(SystemError::TimeOutOfRange { time, horizon: self.horizon });
        }
        Ok(Point { run, time })
    }

    /// Parses `run_id@t`.
    pub fn parse_point(&self, text: &str) -> Result<Point, SystemError> {
        let (id, t) = text.rsplit_once('@').ok_or_else(|| SystemError::MalformedPoint(text.to_string()))?;
        let t: Time = t.trim().parse().map_err(|_| SystemError::MalformedPoint(text.to_string()))?;
        self.point(id.trim(), t)
    }

    pub fn label(&self, p: Point) -> String {
        format!("{}@{}", self.runs[p.run].id, p.time)
    }

    pub fn check_agent(&self, agent: AgentId) -> Result<(), SystemError> {
        if agent.0 < self.agent_count() {
            Ok(())
        } else {
            Err(SystemError::UnknownAgent { agent: agent.0, count: self.agent_count() })
        }
    }

    pub(crate) fn history_table(&self) -> &HistoryTable {
        self.histories.get_or_init(|| {
            let mut ids = Vec::with_capacity(self.agent_count());
            for agent in self.agents() {
                let mut interner: HashMap<LocalHistory, u32> = HashMap::new();
                let mut row = Vec::with_capacity(self.point_count());
                for run in &self.runs {
                    for t in 0..=self.horizon {
                        let h = run.history(agent, t);
                        let next = interner.len() as u32;
                        row.push(*interner.entry(h).or_insert(next));
                    }
                }
                ids.push(row);
            }
            HistoryTable { ids }
        })
    }

    /// Complete-history id of `agent` at the point with dense index `index`.
    pub fn history_id(&self, agent: AgentId, index: usize) -> u32 {
        self.history_table().ids[agent.0][index]
    }

    /// Largest `t` such that every agent's history agrees in runs `a` and `b`
    /// at every `t' <= t`; `None` if they already differ at time 0.
    pub fn agreement_horizon(&self, a: usize, b: usize) -> Option<Time> {
        self.agreement_horizon_for(a, b, self.agents())
    }

    pub(crate) fn agreement_horizon_for(
        &self,
        a: usize,
        b: usize,
        agents: impl Iterator<Item = AgentId> + Clone,
    ) -> Option<Time> {
        let table = self.history_table();
        let mut last = None;
        for t in 0..=self.horizon {
            let ia = self.point_index(Point { run: a, time: t });
            let ib = self.point_index(Point { run: b, time: t });
            if agents.clone().all(|ag| table.ids[ag.0][ia] == table.ids[ag.0][ib]) {
                last = Some(t);
            } else {
                break;
            }
        }
        last
    }
}

/// `h(agent, point)` in `system`.
pub fn local_history(system: &System, agent: AgentId, point: Point) -> Result<LocalHistory, SystemError> {
    system.check_agent(agent)?;
    let run = system
        .runs
        .get(point.run)
        .ok_or_else(|| SystemError::UnknownRun(format!("#{}", point.run)))?;
    if point.time > system.horizon {
        return Err(SystemError::TimeOutOfRange { time: point.time, horizon: system.horizon });
    }
    Ok(run.history(agent, point.time))
}

/// Does `candidate` extend `point`: every agent's history agrees at every
/// `t' <= point.time`.
pub fn extends(system: &System, candidate: usize, point: Point) -> Result<bool, SystemError> {
    if candidate >= system.runs.len() || point.run >= system.runs.len() {
        return Err(SystemError::UnknownRun(format!("#{}", candidate.max(point.run))));
    }
    if point.time > system.horizon {
        return Err(SystemError::TimeOutOfRange { time: point.time, horizon: system.horizon });
    }
    Ok(system
        .agreement_horizon(candidate, point.run)
        .is_some_and(|h| h >= point.time))
}

/// Every local history arising in `full` also arises somewhere in `sub`.
pub fn history_cover(full: &System, sub: &System) -> Result<bool, SystemError> {
    if full.agent_count() != sub.agent_count() {
        return Err(SystemError::AgentMismatch);
    }
    for agent in full.agents() {
        let mut available: BTreeSet<LocalHistory> = BTreeSet::new();
        for run in &sub.runs {
            for t in 0..=sub.horizon {
                available.insert(run.history(agent, t));
            }
        }
        for run in &full.runs {
            for t in 0..=full.horizon {
                if !available.contains(&run.history(agent, t)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    ClockNotMonotone,
    ClockBeforeWakeUp,
    ClockMissingAfterWakeUp,
    UnmatchedReceive,
    EventBeforeWakeUp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub run: String,
    pub agent: AgentId,
    pub time: Time,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run `{}`, agent {}, time {}: {}", self.run, self.agent, self.time, self.detail)
    }
}

/// Structural invariants of runs. Violations are data, one entry each.
pub fn validate_system(system: &System) -> Vec<Violation> {
    let mut out = Vec::new();
    for run in &system.runs {
        for agent in system.agents() {
            let a = agent.0;
            let wake = run.wake_up[a];
            if let Some(clock) = &run.clock {
                let row = &clock[a];
                let mut last: Option<ClockValue> = None;
                for (t, reading) in row.iter().enumerate() {
                    let t = t as Time;
                    match (*reading, t < wake) {
                        (Some(v), true) => out.push(Violation {
                            run: run.id.clone(),
                            agent,
                            time: t,
                            kind: ViolationKind::ClockBeforeWakeUp,
                            detail: format!("clock reads {v} before wake-up at {wake}"),
                        }),
                        (None, false) => out.push(Violation {
                            run: run.id.clone(),
                            agent,
                            time: t,
                            kind: ViolationKind::ClockMissingAfterWakeUp,
                            detail: "clock undefined after wake-up".into(),
                        }),
                        (Some(v), false) => {
                            if let Some(prev) = last {
                                if v < prev {
                                    out.push(Violation {
                                        run: run.id.clone(),
                                        agent,
                                        time: t,
                                        kind: ViolationKind::ClockNotMonotone,
                                        detail: format!("clock not monotone: {prev} then {v}"),
                                    });
                                }
                            }
                            last = Some(v);
                        }
                        (None, true) => {}
                    }
                }
            }
            for e in &run.timeline[a] {
                if e.time < wake {
                    out.push(Violation {
                        run: run.id.clone(),
                        agent,
                        time: e.time,
                        kind: ViolationKind::EventBeforeWakeUp,
                        detail: format!("event `{}` before wake-up at {wake}", e.event.message),
                    });
                }
            }
        }
        out.extend(unmatched_receives(run));
    }
    out
}

/// Receives must be covered, in count, by earlier-or-equal sends of the same
/// content on the same link.
fn unmatched_receives(run: &Run) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut sends: HashMap<(usize, usize, &str), Vec<Time>> = HashMap::new();
    for (from, line) in run.timeline.iter().enumerate() {
        for e in line.iter().filter(|e| e.event.kind == EventKind::Send) {
            sends.entry((from, e.event.peer.0, e.event.message.as_str())).or_default().push(e.time);
        }
    }
    let mut receives: Vec<(Time, usize, &TimedEvent)> = Vec::new();
    for (to, line) in run.timeline.iter().enumerate() {
        for e in line.iter().filter(|e| e.event.kind == EventKind::Receive) {
            receives.push((e.time, to, e));
        }
    }
    receives.sort_by_key(|(t, to, _)| (*t, *to));
    let mut used: HashMap<(usize, usize, &str), usize> = HashMap::new();
    for (t, to, e) in receives {
        let key = (e.event.peer.0, to, e.event.message.as_str());
        let available = sends.get(&key).map_or(0, |v| v.iter().filter(|&&s| s <= t).count());
        let consumed = used.entry(key).or_insert(0);
        if *consumed < available {
            *consumed += 1;
        } else {
            out.push(Violation {
                run: run.id.clone(),
                agent: AgentId(to),
                time: t,
                kind: ViolationKind::UnmatchedReceive,
                detail: format!(
                    "receive of `{}` from {} has no matching earlier send",
                    e.event.message, e.event.peer
                ),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_agent(runs: Vec<Run>, horizon: Time) -> System {
        System::with_default_names(2, horizon, runs).unwrap()
    }

    #[test]
    fn history_of_silent_run_is_initial_state_only() {
        let r = Run::builder("r", 2).initial_all("s").build();
        let sys = two_agent(vec![r], 3);
        let h = local_history(&sys, AgentId(1), Point { run: 0, time: 0 }).unwrap();
        assert_eq!(h.initial_state.as_deref(), Some("s"));
        assert!(h.events.is_empty());
        assert!(h.clock_range.is_none());
    }

    #[test]
    fn receive_is_visible_only_after_its_tick() {
        let r = Run::builder("r", 2).message(0, 1, "m", 1, Some(3)).build();
        let sys = two_agent(vec![r], 5);
        let at3 = local_history(&sys, AgentId(1), Point { run: 0, time: 3 }).unwrap();
        let at4 = local_history(&sys, AgentId(1), Point { run: 0, time: 4 }).unwrap();
        assert!(at3.events.is_empty());
        assert_eq!(at4.events.len(), 1);
        assert_eq!(at4.events[0].event, Event::receive(AgentId(0), "m"));
    }

    #[test]
    fn history_empty_before_wake_up() {
        let r = Run::builder("r", 2).wake(1, 2).initial(1, "x").build();
        let sys = two_agent(vec![r], 4);
        assert!(local_history(&sys, AgentId(1), Point { run: 0, time: 1 }).unwrap().is_empty());
        assert!(!local_history(&sys, AgentId(1), Point { run: 0, time: 2 }).unwrap().is_empty());
    }

    #[test]
    fn shared_prefix_gives_identical_histories() {
        let base = |id: &str| {
            Run::builder(id, 2).message(0, 1, "a", 0, Some(2)).message(1, 0, "b", 3, Some(5))
        };
        let r = base("r").build();
        let r2 = base("r2").message(0, 1, "late", 6, Some(7)).build();
        let sys = two_agent(vec![r, r2], 8);
        for t in 0..=6 {
            for a in 0..2 {
                let h1 = local_history(&sys, AgentId(a), Point { run: 0, time: t }).unwrap();
                let h2 = local_history(&sys, AgentId(a), Point { run: 1, time: t }).unwrap();
                assert_eq!(h1, h2, "agent {a} at {t}");
            }
        }
        assert_ne!(
            local_history(&sys, AgentId(0), Point { run: 0, time: 7 }).unwrap(),
            local_history(&sys, AgentId(0), Point { run: 1, time: 7 }).unwrap()
        );
    }

    #[test]
    fn clock_stamps_and_range() {
        let r = Run::builder("r", 2)
            .message(0, 1, "m", 1, Some(2))
            .clock(0, vec![Some(0), Some(0), Some(1), Some(2)])
            .clock(1, vec![Some(5), Some(6), Some(7), Some(8)])
            .build();
        let sys = two_agent(vec![r], 3);
        let h = local_history(&sys, AgentId(0), Point { run: 0, time: 3 }).unwrap();
        assert_eq!(h.clock_range, Some(vec![0, 1, 2]));
        assert_eq!(h.events[0].clock_stamp, Some(0));
        let h1 = local_history(&sys, AgentId(1), Point { run: 0, time: 3 }).unwrap();
        assert_eq!(h1.events[0].clock_stamp, Some(7));
    }

    #[test]
    fn extends_reflexive_and_late_divergence() {
        let r = Run::builder("r", 2).message(0, 1, "m", 2, Some(7)).build();
        let r2 = Run::builder("r2", 2).message(0, 1, "m", 2, None).build();
        let sys = two_agent(vec![r, r2], 9);
        for t in 0..=9 {
            assert!(extends(&sys, 0, Point { run: 0, time: t }).unwrap());
        }
        assert!(extends(&sys, 1, Point { run: 0, time: 5 }).unwrap());
        assert!(extends(&sys, 0, Point { run: 1, time: 5 }).unwrap());
        assert!(extends(&sys, 1, Point { run: 0, time: 7 }).unwrap());
        assert!(!extends(&sys, 1, Point { run: 0, time: 8 }).unwrap());
    }

    #[test]
    fn extends_fails_on_different_initial_states() {
        let r = Run::builder("r", 2).initial(0, "a").build();
        let r2 = Run::builder("r2", 2).initial(0, "b").build();
        let sys = two_agent(vec![r, r2], 2);
        for t in 0..=2 {
            assert!(!extends(&sys, 1, Point { run: 0, time: t }).unwrap());
        }
    }

    #[test]
    fn history_cover_cases() {
        // without clocks the receiver's silent histories also occur early in `d`
        let delivered = Run::builder("d", 2).message(0, 1, "m", 0, Some(1)).perfect_clocks(3).build();
        let dropped = Run::builder("x", 2).message(0, 1, "m", 0, None).perfect_clocks(3).build();
        let full = two_agent(vec![delivered.clone(), dropped.clone()], 3);
        let sub = two_agent(vec![delivered.clone()], 3);
        assert!(history_cover(&full, &full).unwrap());
        assert!(!history_cover(&full, &sub).unwrap());
        let extra = Run::builder("y", 2).initial_all("other").perfect_clocks(3).build();
        let sup = two_agent(vec![delivered, dropped, extra], 3);
        assert!(history_cover(&full, &sup).unwrap());
        let three = System::with_default_names(3, 3, vec![]).unwrap();
        assert_eq!(history_cover(&full, &three), Err(SystemError::AgentMismatch));
    }

    #[test]
    fn validate_reports_each_violation() {
        let ok = Run::builder("a", 2).message(0, 1, "m", 0, Some(1)).perfect_clocks(3).build();
        let ok2 = Run::builder("b", 2).perfect_clocks(3).build();
        assert!(validate_system(&two_agent(vec![ok, ok2], 3)).is_empty());

        let bad_clock = Run::builder("c", 2)
            .clock(0, vec![Some(0), Some(5), Some(3), Some(4)])
            .clock(1, vec![Some(0), Some(1), Some(2), Some(3)])
            .build();
        let v = validate_system(&two_agent(vec![bad_clock], 3));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::ClockNotMonotone);
        assert_eq!(v[0].time, 2);

        let orphan = Run::builder("o", 2).event(1, 2, Event::receive(AgentId(0), "ghost")).build();
        let v = validate_system(&two_agent(vec![orphan], 3));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::UnmatchedReceive);
    }

    #[test]
    fn rejects_malformed_systems() {
        let beyond = Run::builder("r", 2).message(0, 1, "m", 0, Some(9)).build();
        assert!(matches!(
            System::with_default_names(2, 3, vec![beyond]),
            Err(SystemError::EventBeyondHorizon { .. })
        ));
        let a = Run::builder("r", 2).build();
        assert_eq!(
            System::with_default_names(2, 3, vec![a.clone(), a]),
            Err(SystemError::DuplicateRun("r".into()))
        );
    }

    #[test]
    fn point_parsing() {
        let sys = two_agent(vec![Run::builder("c0:1", 2).build()], 3);
        assert_eq!(sys.parse_point("c0:1@2").unwrap(), Point { run: 0, time: 2 });
        assert!(sys.parse_point("c0:1@4").is_err());
        assert!(sys.parse_point("nope@1").is_err());
        assert!(sys.parse_point("c0:1").is_err());
    }
}
