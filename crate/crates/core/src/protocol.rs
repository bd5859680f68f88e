//! Run generation from deterministic joint protocols under delivery
//! adversaries, and the structural conditions on the resulting systems.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::runs::{AgentId, ClockValue, Event, EventKind, LocalHistory, Point, Run, System, SystemError, Time, TimedEvent};

/// One deterministic protocol per agent. Sends at tick `t` are computed from
/// the history at `t`, which holds only events strictly before `t`.
pub trait JointProtocol: Send + Sync {
    fn name(&self) -> String;
    fn sends(&self, agent: AgentId, history: &LocalHistory) -> Vec<(AgentId, String)>;
}

/// Never sends anything.
#[derive(Clone, Copy, Debug, Default)]
pub struct Silent;

impl JointProtocol for Silent {
    fn name(&self) -> String {
        "silent".into()
    }

    fn sends(&self, _: AgentId, _: &LocalHistory) -> Vec<(AgentId, String)> {
        Vec::new()
    }
}

/// Agent 0 sends `m1` to agent 1 on waking; whoever receives `mj` with
/// `j < legs` answers with `m(j+1)`.
#[derive(Clone, Copy, Debug)]
pub struct Handshake {
    pub legs: u32,
}

impl Handshake {
    pub fn leg_content(j: u32) -> String {
        format!("m{j}")
    }
}

impl JointProtocol for Handshake {
    fn name(&self) -> String {
        format!("handshake({})", self.legs)
    }

    fn sends(&self, agent: AgentId, h: &LocalHistory) -> Vec<(AgentId, String)> {
        let peer = AgentId(1 - agent.0.min(1));
        if self.legs == 0 || agent.0 > 1 {
            return Vec::new();
        }
        let sent: BTreeSet<&str> = h.sent().map(|e| e.message.as_str()).collect();
        let mut out = Vec::new();
        if agent.0 == 0 && sent.is_empty() {
            out.push((peer, Handshake::leg_content(1)));
        }
        for e in h.received() {
            let Some(j) = e.message.strip_prefix('m').and_then(|j| j.parse::<u32>().ok()) else { continue };
            let reply = Handshake::leg_content(j + 1);
            if j < self.legs && !sent.contains(reply.as_str()) {
                out.push((e.peer, reply));
            }
        }
        out
    }
}

/// Two agents with synchronized clocks: send `OK` at clock 0, and at clock
/// `k <= last_round` send again iff `k` OKs have arrived by then.
#[derive(Clone, Copy, Debug)]
pub struct OkProtocol {
    pub last_round: ClockValue,
}

impl JointProtocol for OkProtocol {
    fn name(&self) -> String {
        format!("ok_protocol({})", self.last_round)
    }

    fn sends(&self, agent: AgentId, h: &LocalHistory) -> Vec<(AgentId, String)> {
        let Some(k) = h.current_clock() else { return Vec::new() };
        if agent.0 > 1 || k > self.last_round {
            return Vec::new();
        }
        let received = h.received().filter(|e| e.message == "OK").count() as ClockValue;
        let sent = h.sent().count() as ClockValue;
        if sent == k && received == k {
            vec![(AgentId(1 - agent.0), "OK".into())]
        } else {
            Vec::new()
        }
    }
}

/// Agent `sender` sends `m` to every agent, itself included, on waking.
#[derive(Clone, Debug)]
pub struct BroadcastOnce {
    pub sender: AgentId,
    pub agents: usize,
    pub content: String,
}

impl JointProtocol for BroadcastOnce {
    fn name(&self) -> String {
        "broadcast_once".into()
    }

    fn sends(&self, agent: AgentId, h: &LocalHistory) -> Vec<(AgentId, String)> {
        if agent != self.sender || h.sent().next().is_some() {
            return Vec::new();
        }
        (0..self.agents).map(|a| (AgentId(a), self.content.clone())).collect()
    }
}

/// Built-in protocols by name: `silent`, `handshake` (param `legs`),
/// `ok_protocol` (param `last_round`), `broadcast_once` (param `agents`).
pub fn protocol_by_name(name: &str, param: Option<i64>) -> Option<Box<dyn JointProtocol>> {
    match name {
        "silent" => Some(Box::new(Silent)),
        "handshake" => Some(Box::new(Handshake { legs: param.unwrap_or(2).max(0) as u32 })),
        "ok_protocol" => Some(Box::new(OkProtocol { last_round: param.unwrap_or(2) })),
        "broadcast_once" => Some(Box::new(BroadcastOnce {
            sender: AgentId(0),
            agents: param.unwrap_or(2).max(1) as usize,
            content: "m".into(),
        })),
        _ => None,
    }
}

/// How the environment may treat each sent message. Delays are in ticks
/// from the send tick; a delivery at the send tick is visible from the next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeliveryModel {
    /// Delivered after `min_delay..=max_delay` ticks, or never.
    NotGuaranteed { min_delay: Time, max_delay: Time },
    /// Delivered eventually, after at least `min_delay`; deliveries beyond
    /// the horizon are indistinguishable from losses.
    Unbounded { min_delay: Time },
    /// Delay strictly between `low` and `high`, i.e. in `low+1..=high-1`.
    BoundedUncertain { low: Time, high: Time },
    /// Delay in `latency..=latency+spread`, chosen per recipient.
    SynchronousBroadcast { latency: Time, spread: Time },
}

impl DeliveryModel {
    /// Smallest and largest admissible delay; `None` when unbounded.
    pub fn bounds(&self) -> (Time, Option<Time>) {
        match *self {
            DeliveryModel::NotGuaranteed { min_delay, max_delay } => (min_delay, Some(max_delay)),
            DeliveryModel::Unbounded { min_delay } => (min_delay, None),
            DeliveryModel::BoundedUncertain { low, high } => (low + 1, Some(high.saturating_sub(1))),
            DeliveryModel::SynchronousBroadcast { latency, spread } => (latency, Some(latency + spread)),
        }
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        match *self {
            DeliveryModel::NotGuaranteed { min_delay, max_delay } if min_delay > max_delay => {
                Err(GenerateError::BadDelivery(format!("min delay {min_delay} exceeds max delay {max_delay}")))
            }
            DeliveryModel::BoundedUncertain { low, high } if high < low + 2 => Err(GenerateError::BadDelivery(
                format!("open interval ({low}, {high}) contains no integer delay"),
            )),
            _ => Ok(()),
        }
    }

    /// Possible delivery ticks for a message sent at `sent`, within the
    /// horizon; `None` stands for "not delivered by the horizon".
    fn outcomes(&self, sent: Time, horizon: Time) -> Vec<Option<Time>> {
        let (lo, hi) = self.bounds();
        let may_drop = matches!(self, DeliveryModel::NotGuaranteed { .. });
        let first = sent.saturating_add(lo);
        let last = match hi {
            Some(h) => sent.saturating_add(h),
            None => Time::MAX,
        };
        let mut out: Vec<Option<Time>> = (first..=last.min(horizon)).map(Some).collect();
        if may_drop || last > horizon {
            out.push(None);
        }
        out
    }
}

impl fmt::Display for DeliveryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeliveryModel::NotGuaranteed { min_delay, max_delay } => {
                write!(f, "not-guaranteed(delay {min_delay}..={max_delay} or lost)")
            }
            DeliveryModel::Unbounded { min_delay } => write!(f, "unbounded(delay >= {min_delay})"),
            DeliveryModel::BoundedUncertain { low, high } => write!(f, "bounded-uncertain({low}, {high})"),
            DeliveryModel::SynchronousBroadcast { latency, spread } => {
                write!(f, "broadcast(delay {latency}..={})", latency + spread)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InitialConfiguration {
    pub wake_up: Vec<Time>,
    pub initial_state: Vec<String>,
    /// Clock reading at wake-up per agent; clocks then advance one per tick.
    pub clock_offset: Option<Vec<ClockValue>>,
}

impl InitialConfiguration {
    pub fn simple(agents: usize) -> Self {
        InitialConfiguration { wake_up: vec![0; agents], initial_state: vec![String::new(); agents], clock_offset: None }
    }

    pub fn with_states(states: &[&str]) -> Self {
        InitialConfiguration {
            wake_up: vec![0; states.len()],
            initial_state: states.iter().map(|s| s.to_string()).collect(),
            clock_offset: None,
        }
    }

    /// Clocks that read real time.
    pub fn with_perfect_clocks(mut self) -> Self {
        self.clock_offset = Some(self.wake_up.iter().map(|&w| w as ClockValue).collect());
        self
    }

    /// Every combination of starting each agent at its wake-up time or one
    /// tick later.
    pub fn uncertain_starts(&self) -> Vec<InitialConfiguration> {
        let n = self.wake_up.len();
        (0u32..(1 << n))
            .map(|mask| {
                let mut c = self.clone();
                for a in 0..n {
                    if mask & (1 << a) != 0 {
                        c.wake_up[a] += 1;
                    }
                }
                c
            })
            .collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("schedule enumeration exceeded the cap of {cap} runs (reached {reached} before stopping)")]
    TooManyRuns { cap: usize, reached: usize },
    #[error("configuration {index}: {reason}")]
    BadConfiguration { index: usize, reason: String },
    #[error("bad delivery model: {0}")]
    BadDelivery(String),
    #[error("agent {agent} addressed unknown agent {peer}")]
    UnknownRecipient { agent: usize, peer: usize },
    #[error(transparent)]
    System(#[from] SystemError),
}

pub const DEFAULT_RUN_CAP: usize = 4096;

/// Every run of `protocol` from each configuration under every admissible
/// delivery schedule, up to `horizon`.
pub fn generate_runs(
    protocol: &dyn JointProtocol,
    delivery: &DeliveryModel,
    configs: &[InitialConfiguration],
    horizon: Time,
) -> Result<System, GenerateError> {
    generate_runs_capped(protocol, delivery, configs, horizon, DEFAULT_RUN_CAP)
}

pub fn generate_runs_capped(
    protocol: &dyn JointProtocol,
    delivery: &DeliveryModel,
    configs: &[InitialConfiguration],
    horizon: Time,
    cap: usize,
) -> Result<System, GenerateError> {
    delivery.validate()?;
    let n = configs.first().map_or(0, |c| c.wake_up.len());
    let clocked = configs.first().is_some_and(|c| c.clock_offset.is_some());
    for (index, c) in configs.iter().enumerate() {
        let bad = |reason: String| GenerateError::BadConfiguration { index, reason };
        if c.wake_up.len() != n || c.initial_state.len() != n {
            return Err(bad(format!("expected {n} agents")));
        }
        if c.clock_offset.is_some() != clocked {
            return Err(bad("either every configuration has clocks or none does".into()));
        }
        if c.clock_offset.as_ref().is_some_and(|o| o.len() != n) {
            return Err(bad(format!("expected {n} clock offsets")));
        }
        if let Some(w) = c.wake_up.iter().find(|&&w| w > horizon) {
            return Err(bad(format!("wake-up {w} beyond horizon {horizon}")));
        }
    }
    let mut gen = Generator { protocol, delivery, horizon, cap, runs: Vec::new(), seen: HashSet::new() };
    for (ci, config) in configs.iter().enumerate() {
        let mut builder = Run::builder(format!("c{ci}"), n);
        for a in 0..n {
            builder = builder.wake(a, config.wake_up[a]).initial(a, config.initial_state[a].clone());
            if let Some(offsets) = &config.clock_offset {
                let w = config.wake_up[a];
                let readings =
                    (0..=horizon).map(|t| (t >= w).then(|| offsets[a] + (t - w) as ClockValue)).collect();
                builder = builder.clock(a, readings);
            }
        }
        gen.tick(Partial { run: builder.build(), tokens: Vec::new(), config: ci }, 0)?;
    }
    let names = (0..n).map(|i| format!("p{i}")).collect();
    Ok(System::new(names, horizon, gen.runs)?)
}

#[derive(Clone)]
struct Partial {
    run: Run,
    tokens: Vec<String>,
    config: usize,
}

struct Generator<'a> {
    protocol: &'a dyn JointProtocol,
    delivery: &'a DeliveryModel,
    horizon: Time,
    cap: usize,
    runs: Vec<Run>,
    seen: HashSet<Run>,
}

impl Generator<'_> {
    fn tick(&mut self, mut p: Partial, t: Time) -> Result<(), GenerateError> {
        if t > self.horizon {
            p.run.sort_timelines();
            p.run.id = if p.tokens.is_empty() {
                format!("c{}/-", p.config)
            } else {
                format!("c{}/{}", p.config, p.tokens.join("."))
            };
            if self.seen.insert(p.run.content_key()) {
                if self.runs.len() >= self.cap {
                    return Err(GenerateError::TooManyRuns { cap: self.cap, reached: self.runs.len() + 1 });
                }
                self.runs.push(p.run);
            }
            return Ok(());
        }
        p.run.sort_timelines();
        let n = p.run.agents();
        let mut sends: Vec<(usize, AgentId, String)> = Vec::new();
        for a in 0..n {
            if p.run.wake_up[a] > t {
                continue;
            }
            let h = p.run.history(AgentId(a), t);
            let mut seen = HashSet::new();
            for (to, content) in self.protocol.sends(AgentId(a), &h) {
                if to.0 >= n {
                    return Err(GenerateError::UnknownRecipient { agent: a, peer: to.0 });
                }
                if seen.insert((to, content.clone())) {
                    sends.push((a, to, content));
                }
            }
        }
        for (from, to, content) in &sends {
            p.run.timeline[*from].push(TimedEvent { time: t, event: Event::send(*to, content.clone()) });
        }
        self.choose(p, t, &sends, 0)
    }

    fn choose(&mut self, p: Partial, t: Time, sends: &[(usize, AgentId, String)], k: usize) -> Result<(), GenerateError> {
        let Some((from, to, content)) = sends.get(k) else {
            return self.tick(p, t + 1);
        };
        let wake = p.run.wake_up[to.0];
        let mut outcomes: Vec<Option<Time>> = self
            .delivery
            .outcomes(t, self.horizon)
            .into_iter()
            .map(|o| o.filter(|&r| r >= wake))
            .collect();
        let mut dedup = HashSet::new();
        outcomes.retain(|o| dedup.insert(*o));
        for outcome in outcomes {
            let mut next = p.clone();
            match outcome {
                Some(r) => {
                    next.run.timeline[to.0].push(TimedEvent { time: r, event: Event::receive(AgentId(*from), content.clone()) });
                    next.tokens.push(r.to_string());
                }
                None => next.tokens.push("x".into()),
            }
            self.choose(next, t, sends, k + 1)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// structural conditions

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckViolation {
    pub run: String,
    pub time: Time,
    pub agent: Option<AgentId>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub condition: String,
    pub violations: Vec<CheckViolation>,
    /// How the finite horizon limits the check.
    pub note: String,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        writeln!(f, "{}: {verdict} ({} violations)", self.condition, self.violations.len())?;
        for v in &self.violations {
            match v.agent {
                Some(a) => writeln!(f, "  {}@{} agent {}: {}", v.run, v.time, a, v.detail)?,
                None => writeln!(f, "  {}@{}: {}", v.run, v.time, v.detail)?,
            }
        }
        writeln!(f, "  note: {}", self.note)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("condition needs at least two agents, system has {0}")]
    TooFewAgents(usize),
    #[error("shift must be at least one tick")]
    ZeroShift,
}

fn need_two(system: &System) -> Result<(), CheckError> {
    if system.agent_count() < 2 {
        Err(CheckError::TooFewAgents(system.agent_count()))
    } else {
        Ok(())
    }
}

fn extends_at(system: &System, candidate: usize, run: usize, t: Time) -> bool {
    system.agreement_horizon(candidate, run).is_some_and(|h| h >= t)
}

fn same_setup(a: &Run, b: &Run) -> bool {
    a.same_configuration(b) && a.same_clock_readings(b)
}

/// For every point, some run with the same configuration and clocks extends
/// it and has no receives at or after its time.
pub fn check_ng1(system: &System) -> Result<CheckReport, CheckError> {
    need_two(system)?;
    let h = system.horizon();
    let runs = system.runs();
    let mut violations = Vec::new();
    for (ri, r) in runs.iter().enumerate() {
        for t in 0..=h {
            let extensions: Vec<usize> =
                (0..runs.len()).filter(|&c| same_setup(r, &runs[c]) && extends_at(system, c, ri, t)).collect();
            if extensions.iter().any(|&c| !runs[c].any_receive_in(t, h)) {
                continue;
            }
            let detail = if extensions.is_empty() {
                "no run with the same configuration and clocks extends this point".to_string()
            } else {
                format!("all {} extensions receive a message at or after this time", extensions.len())
            };
            violations.push(CheckViolation { run: r.id.clone(), time: t, agent: None, detail });
        }
    }
    Ok(CheckReport {
        condition: "NG1".into(),
        violations,
        note: format!("\"no receives at or after t\" is checked only up to horizon {h}"),
    })
}

/// For every run, agent `i` and interval `(t', t)` in which `i` receives
/// nothing, some run extending `(r, t')` gives `i` the same history up to `t`
/// while no other agent receives anything in `[t', t)`.
pub fn check_ng2(system: &System) -> Result<CheckReport, CheckError> {
    need_two(system)?;
    let h = system.horizon();
    let runs = system.runs();
    let mut violations = Vec::new();
    for (ri, r) in runs.iter().enumerate() {
        for i in system.agents() {
            for t0 in 0..h {
                for t in (t0 + 1)..=h {
                    if t > t0 + 1 && r.has_receive_in(i, t0 + 1, t - 1) {
                        break;
                    }
                    let witness = (0..runs.len()).any(|c| {
                        extends_at(system, c, ri, t0)
                            && (0..=t).all(|s| {
                                system.history_id(i, system.point_index(Point { run: ri, time: s }))
                                    == system.history_id(i, system.point_index(Point { run: c, time: s }))
                            })
                            && system.agents().filter(|&j| j != i).all(|j| !runs[c].has_receive_in(j, t0, t - 1))
                    });
                    if !witness {
                        violations.push(CheckViolation {
                            run: r.id.clone(),
                            time: t0,
                            agent: Some(i),
                            detail: format!(
                                "agent {i} receives nothing in ({t0}, {t}) but no extension keeps its history and silences the others in [{t0}, {t})"
                            ),
                        });
                    }
                }
            }
        }
    }
    Ok(CheckReport {
        condition: "NG2".into(),
        violations,
        note: format!("intervals are checked only up to horizon {h}"),
    })
}

/// For every point `(r, t)` and `u` with `t <= u <= horizon`, some run with
/// the same configuration and clocks extends `(r, t)` with no receives in
/// `[t, u]`.
pub fn check_ng1prime(system: &System) -> Result<CheckReport, CheckError> {
    need_two(system)?;
    let h = system.horizon();
    let runs = system.runs();
    let mut violations = Vec::new();
    for (ri, r) in runs.iter().enumerate() {
        for t in 0..=h {
            let extensions: Vec<usize> =
                (0..runs.len()).filter(|&c| same_setup(r, &runs[c]) && extends_at(system, c, ri, t)).collect();
            for u in t..=h {
                if !extensions.iter().any(|&c| !runs[c].any_receive_in(t, u)) {
                    violations.push(CheckViolation {
                        run: r.id.clone(),
                        time: t,
                        agent: None,
                        detail: format!("every extension receives a message in [{t}, {u}]"),
                    });
                    break;
                }
            }
        }
    }
    Ok(CheckReport {
        condition: "NG1'".into(),
        violations,
        note: format!("u ranges only up to horizon {h}"),
    })
}

/// For every run, time `t` and agents `i != j`, some run gives `i` its history
/// shifted `delta` ticks later and `j` its history unshifted, at every
/// `t' < t` with `t' + delta` inside the horizon. The unshifted case is
/// always witnessed by the run itself.
pub fn check_temporal_imprecision(system: &System, delta: Time) -> Result<CheckReport, CheckError> {
    need_two(system)?;
    if delta == 0 {
        return Err(CheckError::ZeroShift);
    }
    let h = system.horizon();
    let runs = system.runs();
    let id = |agent: AgentId, run: usize, time: Time| system.history_id(agent, system.point_index(Point { run, time }));
    let mut violations = Vec::new();
    for (ri, r) in runs.iter().enumerate() {
        for i in system.agents() {
            for j in system.agents().filter(|&j| j != i) {
                // the condition only gets harder as t grows; report the first t that fails
                let ok_through = |c: usize, t: Time| {
                    (0..t).filter(|&s| s + delta <= h).all(|s| id(i, ri, s) == id(i, c, s + delta) && id(j, ri, s) == id(j, c, s))
                };
                for t in 1..=h {
                    if !(0..runs.len()).any(|c| ok_through(c, t)) {
                        violations.push(CheckViolation {
                            run: r.id.clone(),
                            time: t,
                            agent: Some(i),
                            detail: format!(
                                "no run shifts agent {i} by {delta} while leaving agent {j} unchanged before time {t}"
                            ),
                        });
                        break;
                    }
                }
            }
        }
    }
    Ok(CheckReport {
        condition: format!("temporal imprecision (delta {delta})"),
        violations,
        note: format!("shifted histories are compared only while t'+{delta} <= horizon {h}"),
    })
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShiftError {
    #[error("message `{message}` from {from} to {to} sent at {sent} would take {delay} ticks, below the minimum {min}")]
    BelowMinimum { message: String, from: usize, to: usize, sent: Time, delay: i64, min: Time },
    #[error("message `{message}` from {from} to {to} sent at {sent} would take {delay} ticks, above the maximum {max}")]
    AboveMaximum { message: String, from: usize, to: usize, sent: Time, delay: i64, max: Time },
    #[error("agent {0} out of range")]
    UnknownAgent(usize),
}

/// Starts `agent` `delta` ticks later: its wake-up, clock readings and
/// events all move by `delta`, so messages it sends arrive `delta` sooner
/// relative to their send and messages it receives take `delta` longer.
/// Other agents are untouched. Events pushed past the horizon are dropped.
pub fn shift_run(run: &Run, agent: AgentId, delta: Time, horizon: Time, delivery: &DeliveryModel) -> Result<Run, ShiftError> {
    let a = agent.0;
    if a >= run.agents() {
        return Err(ShiftError::UnknownAgent(a));
    }
    if delta == 0 {
        return Ok(run.clone());
    }
    let (min, max) = delivery.bounds();
    // pair sends and receives on each link in FIFO order per content
    let check = |from: usize, to: usize, message: &str, sent: Time, received: Time| -> Result<(), ShiftError> {
        let (s, r) = (sent as i64, received as i64);
        let (s, r) = match (from == a, to == a) {
            (true, true) => (s, r),
            (true, false) => (s + delta as i64, r),
            (false, true) => (s, r + delta as i64),
            (false, false) => return Ok(()),
        };
        if r > horizon as i64 {
            return Ok(());
        }
        let delay = r - s;
        let err_min = || ShiftError::BelowMinimum { message: message.into(), from, to, sent, delay, min };
        if delay < min as i64 {
            return Err(err_min());
        }
        if let Some(max) = max {
            if delay > max as i64 {
                return Err(ShiftError::AboveMaximum { message: message.into(), from, to, sent, delay, max });
            }
        }
        Ok(())
    };
    for (from, to, message, sent, received) in matched_messages(run) {
        if let Some(r) = received {
            check(from, to, &message, sent, r)?;
        }
    }
    let mut out = run.clone();
    out.wake_up[a] += delta;
    out.timeline[a] = run.timeline[a]
        .iter()
        .filter(|e| e.time + delta <= horizon)
        .map(|e| TimedEvent { time: e.time + delta, event: e.event.clone() })
        .collect();
    if let Some(clock) = &mut out.clock {
        let old = clock[a].clone();
        for t in 0..clock[a].len() {
            clock[a][t] = (t as Time).checked_sub(delta).and_then(|s| old[s as usize]);
        }
    }
    Ok(out)
}

/// `(from, to, content, sent, received)` for every send, matched FIFO per
/// link and content.
fn matched_messages(run: &Run) -> Vec<(usize, usize, String, Time, Option<Time>)> {
    let mut out = Vec::new();
    let mut receives: std::collections::HashMap<(usize, usize, &str), VecDeque<Time>> = Default::default();
    for (to, line) in run.timeline.iter().enumerate() {
        for e in line.iter().filter(|e| e.event.kind == EventKind::Receive) {
            receives.entry((e.event.peer.0, to, e.event.message.as_str())).or_default().push_back(e.time);
        }
    }
    for (from, line) in run.timeline.iter().enumerate() {
        for e in line.iter().filter(|e| e.event.kind == EventKind::Send) {
            let key = (from, e.event.peer.0, e.event.message.as_str());
            let got = receives.get_mut(&key).and_then(|q| q.pop_front());
            out.push((from, e.event.peer.0, e.event.message.clone(), e.time, got));
        }
    }
    out
}

/// Adds every legal `shift_run(., i, delta)` image, repeatedly, until no new
/// runs appear. Agents are never shifted past one tick beyond the horizon.
pub fn shift_closure(system: &System, delta: Time, delivery: &DeliveryModel, cap: usize) -> Result<System, GenerateError> {
    let h = system.horizon();
    let mut runs: Vec<Run> = system.runs().to_vec();
    let mut seen: HashSet<Run> = runs.iter().map(Run::content_key).collect();
    let mut queue: VecDeque<usize> = (0..runs.len()).collect();
    while let Some(k) = queue.pop_front() {
        for agent in system.agents() {
            if runs[k].wake_up[agent.0] > h {
                continue;
            }
            let Ok(mut shifted) = shift_run(&runs[k], agent, delta, h, delivery) else { continue };
            if seen.insert(shifted.content_key()) {
                if runs.len() >= cap {
                    return Err(GenerateError::TooManyRuns { cap, reached: runs.len() + 1 });
                }
                shifted.id = format!("{}+{}", runs[k].id, agent.0);
                runs.push(shifted);
                queue.push_back(runs.len() - 1);
            }
        }
    }
    Ok(System::new(system.agent_names().to_vec(), h, runs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runs::validate_system;

    struct SendOnce;
    impl JointProtocol for SendOnce {
        fn name(&self) -> String {
            "send_once".into()
        }
        fn sends(&self, agent: AgentId, h: &LocalHistory) -> Vec<(AgentId, String)> {
            if agent.0 == 0 && h.sent().next().is_none() {
                vec![(AgentId(1), "m".into())]
            } else {
                vec![]
            }
        }
    }

    #[test]
    fn silent_protocol_one_run_per_config() {
        let configs = vec![InitialConfiguration::with_states(&["a", "b"]), InitialConfiguration::with_states(&["c", "d"])];
        let sys = generate_runs(&Silent, &DeliveryModel::NotGuaranteed { min_delay: 1, max_delay: 1 }, &configs, 3).unwrap();
        assert_eq!(sys.runs().len(), 2);
        assert!(sys.runs().iter().all(|r| r.timeline.iter().all(Vec::is_empty)));
    }

    #[test]
    fn one_message_delivered_or_dropped() {
        let configs = vec![InitialConfiguration::simple(2)];
        let ng = DeliveryModel::NotGuaranteed { min_delay: 1, max_delay: 1 };
        let sys = generate_runs(&SendOnce, &ng, &configs, 3).unwrap();
        let ids: Vec<&str> = sys.runs().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["c0/1", "c0/x"]);
        assert!(validate_system(&sys).is_empty());
        assert!(check_ng1(&sys).unwrap().passed());
        assert!(check_ng2(&sys).unwrap().passed());
        let only = System::with_default_names(2, 3, vec![sys.runs()[0].clone()]).unwrap();
        let r = check_ng1(&only).unwrap();
        assert!(!r.passed());
        assert_eq!(r.violations[0].time, 0);
    }

    #[test]
    fn handshake_run_count() {
        let configs = vec![InitialConfiguration::simple(2)];
        let ng = DeliveryModel::NotGuaranteed { min_delay: 1, max_delay: 1 };
        let sys = generate_runs(&Handshake { legs: 4 }, &ng, &configs, 8).unwrap();
        assert_eq!(sys.runs().len(), 5);
        assert!(check_ng1(&sys).unwrap().passed());
        assert!(check_ng2(&sys).unwrap().passed());
        let again = generate_runs(&Handshake { legs: 4 }, &ng, &configs, 8).unwrap();
        assert_eq!(sys, again);
    }

    #[test]
    fn instant_delivery_breaks_ng2() {
        let configs = vec![InitialConfiguration::simple(2)];
        let sure = DeliveryModel::SynchronousBroadcast { latency: 0, spread: 0 };
        let sys = generate_runs(&Handshake { legs: 3 }, &sure, &configs, 6).unwrap();
        assert_eq!(sys.runs().len(), 1);
        assert!(!check_ng2(&sys).unwrap().passed());
        assert!(!check_ng1(&sys).unwrap().passed());
    }

    #[test]
    fn cap_is_enforced() {
        let configs = vec![InitialConfiguration::simple(2)];
        let ng = DeliveryModel::NotGuaranteed { min_delay: 1, max_delay: 1 };
        let err = generate_runs_capped(&Handshake { legs: 4 }, &ng, &configs, 8, 3).unwrap_err();
        assert!(matches!(err, GenerateError::TooManyRuns { cap: 3, .. }));
    }

    #[test]
    fn single_agent_rejected() {
        let sys = System::with_default_names(1, 2, vec![Run::builder("r", 1).build()]).unwrap();
        assert_eq!(check_ng2(&sys), Err(CheckError::TooFewAgents(1)));
    }

    #[test]
    fn shift_arithmetic() {
        let run = Run::builder("r", 2).message(0, 1, "m", 1, Some(4)).build();
        let unb = DeliveryModel::Unbounded { min_delay: 1 };
        assert_eq!(shift_run(&run, AgentId(0), 0, 6, &unb).unwrap(), run);
        let s = shift_run(&run, AgentId(0), 1, 6, &unb).unwrap();
        assert_eq!(s.timeline[0][0].time, 2);
        assert_eq!(s.timeline[1][0].time, 4);
        assert_eq!(s.wake_up, vec![1, 0]);
        let tight = DeliveryModel::BoundedUncertain { low: 2, high: 9 };
        let err = shift_run(&run, AgentId(0), 1, 6, &tight).unwrap_err();
        assert!(matches!(err, ShiftError::BelowMinimum { delay: 2, min: 3, .. }));
    }

    #[test]
    fn global_clock_defeats_imprecision() {
        let configs = vec![InitialConfiguration::simple(2).with_perfect_clocks()];
        let sys = generate_runs(&Silent, &DeliveryModel::Unbounded { min_delay: 1 }, &configs, 3).unwrap();
        assert!(!check_temporal_imprecision(&sys, 1).unwrap().passed());
        let closed = shift_closure(&sys, 1, &DeliveryModel::Unbounded { min_delay: 1 }, 1000).unwrap();
        assert!(check_temporal_imprecision(&closed, 1).unwrap().passed());
    }

    #[test]
    fn unbounded_generation_passes_ng1prime() {
        let configs = vec![InitialConfiguration::simple(2)];
        let sys = generate_runs(&Handshake { legs: 2 }, &DeliveryModel::Unbounded { min_delay: 1 }, &configs, 5).unwrap();
        assert!(check_ng1prime(&sys).unwrap().passed());
        assert!(check_ng2(&sys).unwrap().passed());
        let bounded = generate_runs(&SendOnce, &DeliveryModel::BoundedUncertain { low: 0, high: 2 }, &configs, 4).unwrap();
        assert!(!check_ng1prime(&bounded).unwrap().passed());
    }
}
