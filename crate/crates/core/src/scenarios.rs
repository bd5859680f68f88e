//! Canonical models, each packaged with the formula outcomes it is expected
//! to produce.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value;
use thiserror::Error;

use crate::eval::{eval, EvalError, Model, ModelError, Valuation, VarEnv};
use crate::logic::{parse, Formula, ParseError};
use crate::protocol::{
    generate_runs, BroadcastOnce, DeliveryModel, GenerateError, Handshake, InitialConfiguration, JointProtocol,
    OkProtocol,
};
use crate::runs::{AgentId, ClockValue, EventKind, LocalHistory, Point, Run, System, SystemError, Time};
use crate::views::{AgentSet, ViewPolicy};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum At {
    All,
    Point(String),
}

impl fmt::Display for At {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            At::All => f.write_str("all"),
            At::Point(p) => f.write_str(p),
        }
    }
}

impl At {
    pub fn parse(text: &str) -> At {
        if text == "all" {
            At::All
        } else {
            At::Point(text.to_string())
        }
    }
}

/// `formula` has truth value `expected` at `at` (at every point for `all`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expectation {
    pub formula: String,
    pub at: At,
    pub expected: bool,
    pub claim: String,
}

impl Expectation {
    pub fn new(formula: impl Into<String>, at: At, expected: bool, claim: impl Into<String>) -> Self {
        Expectation { formula: formula.into(), at, expected, claim: claim.into() }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioManifest {
    pub name: String,
    pub parameters: BTreeMap<String, Value>,
    pub model: Model,
    pub expectations: Vec<Expectation>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectationResult {
    pub expectation: Expectation,
    pub passed: bool,
    /// Why it failed, or the error that stopped evaluation.
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub name: String,
    pub results: Vec<ExpectationResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ExpectationResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed = self.failures().count();
        writeln!(f, "{}: {} expectations, {} failed", self.name, self.results.len(), failed)?;
        for r in self.failures() {
            let e = &r.expectation;
            writeln!(
                f,
                "  FAIL {} at {} expected {}: {}  [{}]",
                e.formula,
                e.at,
                e.expected,
                r.detail.as_deref().unwrap_or(""),
                e.claim
            )?;
        }
        Ok(())
    }
}

/// Evaluates every expectation; errors count as failures.
pub fn verify(manifest: &ScenarioManifest) -> VerifyReport {
    let mut cache: BTreeMap<String, Result<crate::pointset::PointSet, String>> = BTreeMap::new();
    let model = &manifest.model;
    let sys = model.system();
    let results = manifest
        .expectations
        .iter()
        .map(|e| {
            let set = cache
                .entry(e.formula.clone())
                .or_insert_with(|| {
                    let f = parse(&e.formula).map_err(|err| err.to_string())?;
                    eval(model, &f, &VarEnv::new()).map_err(|err| err.to_string())
                })
                .clone();
            let (passed, detail) = match set {
                Err(msg) => (false, Some(msg)),
                Ok(set) => match &e.at {
                    At::All => {
                        let bad = (0..sys.point_count()).find(|&i| set.contains(i) != e.expected);
                        match bad {
                            None => (true, None),
                            Some(i) => (false, Some(format!("differs at {}", sys.label(sys.point_at(i))))),
                        }
                    }
                    At::Point(label) => match sys.parse_point(label) {
                        Err(err) => (false, Some(err.to_string())),
                        Ok(p) => {
                            let actual = set.contains(sys.point_index(p));
                            (actual == e.expected, (actual != e.expected).then(|| format!("got {actual}")))
                        }
                    },
                },
            };
            ExpectationResult { expectation: e.clone(), passed, detail }
        })
        .collect();
    VerifyReport { name: manifest.name.clone(), results }
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn group_text(ids: impl IntoIterator<Item = usize>) -> String {
    let parts: Vec<String> = ids.into_iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// Marks `name` true at every point from the first tick at which
/// `since(run)` says it became true.
fn stable_prop(val: &mut Valuation, sys: &System, name: &str, since: impl Fn(&Run) -> Option<Time>) {
    let starts: Vec<Option<Time>> = sys.runs().iter().map(&since).collect();
    val.insert_where(sys, name, |p| starts[p.run].is_some_and(|s| p.time >= s));
}

// ---------------------------------------------------------------------------
// muddy children

/// Outcome of the question rounds in one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuddyRun {
    pub id: String,
    pub muddy: Vec<bool>,
    /// `yes[q-1][i]`: child `i` said yes in round `q`.
    pub yes: Vec<Vec<bool>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MuddyParams {
    pub n: usize,
    pub announce: bool,
    pub rounds: u32,
    /// One child takes in the announcement a tick late.
    pub staggered: bool,
}

fn muddy_vectors(n: usize) -> Vec<Vec<bool>> {
    (0u32..(1 << n)).map(|mask| (0..n).map(|i| mask & (1 << i) != 0).collect()).collect()
}

fn muddy_id(v: &[bool]) -> String {
    let bits: String = v.iter().map(|&b| if b { '1' } else { '0' }).collect();
    format!("v{bits}")
}

fn muddy_system(p: &MuddyParams, answers: &[Vec<Vec<bool>>], horizon: Time) -> Result<System, SystemError> {
    let n = p.n;
    let father = n;
    let mut runs = Vec::new();
    for (vi, v) in muddy_vectors(n).iter().enumerate() {
        let mut b = Run::builder(muddy_id(v), n + 1);
        for i in 0..n {
            let seen: String = (0..n).map(|j| if j == i { '?' } else if v[j] { '1' } else { '0' }).collect();
            b = b.initial(i, seen);
        }
        b = b.initial(father, muddy_id(v));
        if p.announce {
            let content = if v.iter().any(|&x| x) { "m" } else { "not_m" };
            for i in 0..n {
                let at = if p.staggered && i == 0 { 1 } else { 0 };
                b = b.message(father, i, content, 0, (at <= horizon).then_some(at));
            }
        }
        for (qi, round) in answers.iter().enumerate() {
            let q = qi as Time + 1;
            if q > horizon {
                break;
            }
            for i in 0..n {
                let content = format!("{q}:{}", if round[vi][i] { "yes" } else { "no" });
                for j in (0..=n).filter(|&j| j != i) {
                    b = b.message(i, j, &content, q, Some(q));
                }
            }
        }
        runs.push(b.build());
    }
    let mut names: Vec<String> = (0..n).map(|i| format!("child{i}")).collect();
    names.push("father".into());
    System::new(names, horizon, runs)
}

fn muddy_valuation(p: &MuddyParams, sys: &System) -> Valuation {
    let vectors = muddy_vectors(p.n);
    let by_run: Vec<usize> = sys
        .runs()
        .iter()
        .map(|r| vectors.iter().position(|v| muddy_id(v) == r.id).expect("muddy run id"))
        .collect();
    let mut val = Valuation::new();
    val.insert_where(sys, "m", |pt| vectors[by_run[pt.run]].iter().any(|&x| x));
    for i in 0..p.n {
        val.insert_where(sys, format!("muddy_{i}"), |pt| vectors[by_run[pt.run]][i]);
    }
    let announce = p.announce;
    val.insert_where(sys, "announced", |pt| announce && pt.time >= 1);
    val
}

/// Simulates the question rounds: the answers of round `q` are what each
/// child knows at time `q` in the system that contains all earlier answers.
pub fn muddy_answers(p: &MuddyParams) -> Result<Vec<MuddyRun>, ScenarioError> {
    if p.n == 0 || p.n > 6 {
        return Err(ScenarioError::BadParameter(format!("n must be in 1..=6, got {}", p.n)));
    }
    let vectors = muddy_vectors(p.n);
    let mut answers: Vec<Vec<Vec<bool>>> = Vec::new();
    for q in 1..=p.rounds {
        let sys = muddy_system(p, &answers, q)?;
        let val = muddy_valuation(p, &sys);
        let model = Model::new(sys, val, ViewPolicy::CompleteHistory)?;
        let mut round = Vec::new();
        for v in &vectors {
            let run = model.system().run_index(&muddy_id(v)).expect("run exists");
            let mut said = Vec::new();
            for i in 0..p.n {
                let f = Formula::k(i, Formula::prop(format!("muddy_{i}")));
                let set = eval(&model, &f, &VarEnv::new())?;
                said.push(set.contains(model.system().point_index(Point { run, time: q })));
            }
            round.push(said);
        }
        answers.push(round);
    }
    Ok(vectors
        .iter()
        .enumerate()
        .map(|(vi, v)| MuddyRun { id: muddy_id(v), muddy: v.clone(), yes: answers.iter().map(|r| r[vi].clone()).collect() })
        .collect())
}

pub fn muddy_children(p: &MuddyParams) -> Result<ScenarioManifest, ScenarioError> {
    let outcomes = muddy_answers(p)?;
    let answers: Vec<Vec<Vec<bool>>> =
        (0..p.rounds as usize).map(|q| outcomes.iter().map(|r| r.yes[q].clone()).collect()).collect();
    let horizon = p.rounds + 1;
    let sys = muddy_system(p, &answers, horizon)?;
    let mut val = muddy_valuation(p, &sys);
    for q in 1..=p.rounds {
        for i in 0..p.n {
            let yes_in: BTreeMap<&str, bool> =
                outcomes.iter().map(|r| (r.id.as_str(), r.yes[q as usize - 1][i])).collect();
            let runs: Vec<bool> = sys.runs().iter().map(|r| yes_in[r.id.as_str()]).collect();
            val.insert_where(&sys, format!("said_yes_{i}_{q}"), |pt| runs[pt.run] && pt.time > q);
        }
    }
    let children = group_text(0..p.n);
    let mut ex = Vec::new();
    for r in &outcomes {
        let k = r.muddy.iter().filter(|&&b| b).count() as u32;
        for q in 1..=p.rounds {
            for i in 0..p.n {
                let expected = p.announce && !p.staggered && r.muddy[i] && k >= 1 && q >= k;
                if p.staggered {
                    continue;
                }
                ex.push(Expectation::new(
                    format!("said_yes_{i}_{q}"),
                    At::Point(format!("{}@{}", r.id, q + 1)),
                    expected,
                    if p.announce {
                        "muddy children first answer yes in round k, clean children never"
                    } else {
                        "without the announcement nobody ever answers yes"
                    },
                ));
            }
        }
        if k >= 1 {
            let before = if k == 1 { "m".to_string() } else { format!("E^{}{children} m", k - 1) };
            ex.push(Expectation::new(before, At::Point(format!("{}@0", r.id)), true, "before the announcement E^(k-1) m holds"));
            ex.push(Expectation::new(
                format!("E^{k}{children} m"),
                At::Point(format!("{}@0", r.id)),
                false,
                "before the announcement E^k m fails",
            ));
            if p.announce && horizon >= 1 {
                ex.push(Expectation::new(
                    format!("C{children} m"),
                    At::Point(format!("{}@1", r.id)),
                    !p.staggered,
                    if p.staggered {
                        "a late comprehension of the announcement prevents common knowledge"
                    } else {
                        "the announcement makes m common knowledge"
                    },
                ));
            }
        }
    }
    let model = Model::new(sys, val, ViewPolicy::CompleteHistory)?;
    Ok(ScenarioManifest {
        name: format!("muddy_children_n{}", p.n),
        parameters: params(&[
            ("n", p.n.into()),
            ("announce", p.announce.into()),
            ("rounds", p.rounds.into()),
            ("staggered", p.staggered.into()),
        ]),
        model,
        expectations: ex,
    })
}

// ---------------------------------------------------------------------------
// coordinated attack

/// Handshake that agent 0 only starts when its initial state is `favor`.
struct AttackHandshake(Handshake);

impl JointProtocol for AttackHandshake {
    fn name(&self) -> String {
        self.0.name()
    }

    fn sends(&self, agent: AgentId, h: &LocalHistory) -> Vec<(AgentId, String)> {
        if agent.0 == 0 && h.initial_state.as_deref() != Some("favor") {
            return Vec::new();
        }
        self.0.sends(agent, h)
    }
}

/// `K_recv(j) ... K_B sent_1`: depth 1 is B's knowledge, depth 2 A's
/// knowledge of that, and so on.
pub fn attack_depth_formula(depth: u32) -> Formula {
    let mut f = Formula::prop("sent_1");
    for j in 1..=depth {
        f = Formula::k(if j % 2 == 1 { 1 } else { 0 }, f);
    }
    f
}

/// Tick of the first event of `kind` by `agent` with `content`.
fn event_tick(run: &Run, agent: usize, kind: EventKind, content: &str) -> Option<Time> {
    run.timeline[agent].iter().find(|e| e.event.kind == kind && e.event.message == content).map(|e| e.time)
}

pub fn coordinated_attack(k_legs: u32, horizon: Time) -> Result<ScenarioManifest, ScenarioError> {
    if k_legs == 0 || horizon < 2 * k_legs {
        return Err(ScenarioError::BadParameter(format!(
            "need k_legs >= 1 and horizon >= 2*k_legs (each leg takes two ticks), got k_legs={k_legs}, horizon={horizon}"
        )));
    }
    let configs = vec![InitialConfiguration::with_states(&["favor", ""]), InitialConfiguration::with_states(&["against", ""])];
    let sys = generate_runs(
        &AttackHandshake(Handshake { legs: k_legs }),
        &DeliveryModel::NotGuaranteed { min_delay: 1, max_delay: 1 },
        &configs,
        horizon,
    )?
    .with_agent_names(vec!["A".into(), "B".into()])?;
    let mut val = Valuation::new();
    stable_prop(&mut val, &sys, "sent_1", |r| event_tick(r, 0, EventKind::Send, "m1"));
    for j in 1..=k_legs {
        let receiver = if j % 2 == 1 { 1 } else { 0 };
        let content = Handshake::leg_content(j);
        stable_prop(&mut val, &sys, &format!("delivered_{j}"), |r| event_tick(r, receiver, EventKind::Receive, &content));
    }
    val.insert_where(&sys, "both_attack", |_| false);
    val.insert_where(&sys, "prefav", |p| sys.runs()[p.run].initial_state[0] == "favor");

    let mut ex = vec![Expectation::new("C{0,1} both_attack", At::All, false, "neither general ever attacks")];
    for r in sys.runs() {
        let delivered = (1..=k_legs)
            .take_while(|&j| {
                let receiver = if j % 2 == 1 { 1 } else { 0 };
                event_tick(r, receiver, EventKind::Receive, &Handshake::leg_content(j)).is_some()
            })
            .count() as u32;
        let at = At::Point(format!("{}@{horizon}", r.id));
        let claim = "each delivered message adds exactly one level of knowledge";
        if delivered >= 1 {
            ex.push(Expectation::new(attack_depth_formula(delivered).to_string(), at.clone(), true, claim));
        }
        ex.push(Expectation::new(attack_depth_formula(delivered + 1).to_string(), at, false, claim));
    }
    if let Some(full) = sys.runs().iter().find(|r| r.initial_state[0] == "favor" && !r.id.contains('x')) {
        for k in 1..=k_legs {
            let mut f = "prefav".to_string();
            for _ in 0..k {
                f = format!("Ev{{0,1}} {f}");
            }
            ex.push(Expectation::new(f, At::Point(format!("{}@0", full.id)), true, "iterated eventual knowledge holds at time 0"));
        }
    }
    ex.push(Expectation::new("Cv{0,1} prefav", At::All, false, "eventual common knowledge of prefav is never attained"));
    let model = Model::new(sys, val, ViewPolicy::CompleteHistory)?;
    Ok(ScenarioManifest {
        name: format!("coordinated_attack_k{k_legs}"),
        parameters: params(&[("k_legs", k_legs.into()), ("horizon", horizon.into())]),
        model,
        expectations: ex,
    })
}

/// The run of the same configuration in which nothing is ever received.
pub fn silent_counterpart(sys: &System, run: usize) -> Option<usize> {
    let r = &sys.runs()[run];
    sys.runs().iter().position(|c| {
        c.same_configuration(r) && c.same_clock_readings(r) && !c.any_receive_in(0, sys.horizon())
    })
}

// ---------------------------------------------------------------------------
// R2-D2

pub fn r2d2(eps: Time, t_s: Time, k_max: u32) -> Result<ScenarioManifest, ScenarioError> {
    if eps == 0 || t_s == 0 {
        return Err(ScenarioError::BadParameter("eps and t_S must be at least 1".into()));
    }
    let window = t_s + (k_max + 1) * eps;
    let top = k_max as i64 + 2;
    let horizon = t_s + (k_max + 3) * eps;
    // the send event sits one tick before t_S so that sent_m holds from t_S
    let min = ((t_s - 1) / eps) as i64;
    let mut runs = Vec::new();
    for i in -min..=top {
        let send = (t_s as i64 - 1 + i * eps as i64) as Time;
        // the family is cut off above by a run whose delivery is instant
        let variants: &[bool] = if i == top { &[false] } else { &[false, true] };
        for &late in variants {
            let id = format!("r{i}{}", if late { "'" } else { "" });
            let recv = send + if late { eps } else { 0 };
            runs.push(
                Run::builder(id, 2)
                    .initial(0, "R")
                    .initial(1, "D")
                    .message(0, 1, "m", send, Some(recv))
                    .perfect_clocks(horizon)
                    .build(),
            );
        }
    }
    let sys = System::new(vec!["R".into(), "D".into()], horizon, runs)?;
    let mut val = Valuation::new();
    stable_prop(&mut val, &sys, "sent_m", |r| event_tick(r, 0, EventKind::Send, "m").map(|t| t + 1));
    val.insert_where(&sys, "in_window", |p| p.time <= window);
    let mut ex = vec![Expectation::new(
        "in_window -> ~C{0,1} sent_m",
        At::All,
        true,
        "common knowledge of sent_m is never attained",
    )];
    for k in 1..=k_max {
        let f = (0..k).fold("sent_m".to_string(), |acc, _| format!("K0 K1 {acc}"));
        let first = t_s + k * eps;
        let claim = "each level of R-knows-D-knows costs eps ticks";
        ex.push(Expectation::new(f.clone(), At::Point(format!("r0@{first}")), true, claim));
        ex.push(Expectation::new(f, At::Point(format!("r0@{}", first - 1)), false, claim));
    }
    if eps.is_multiple_of(2) {
        let half = eps / 2;
        let f = format!("Ceps[{half}]{{0,1}} sent_m");
        let claim = "eps/2-common knowledge of sent_m from t_S + eps/2";
        for t in (t_s + half)..=window {
            for run in ["r0", "r0'"] {
                ex.push(Expectation::new(f.clone(), At::Point(format!("{run}@{t}")), true, claim));
            }
        }
        ex.push(Expectation::new(f, At::Point(format!("r0'@{}", t_s + half - 1)), false, claim));
    }
    let model = Model::new(sys, val, ViewPolicy::CompleteHistory)?;
    Ok(ScenarioManifest {
        name: format!("r2d2_eps{eps}"),
        parameters: params(&[("eps", eps.into()), ("t_s", t_s.into()), ("k_max", k_max.into())]),
        model,
        expectations: ex,
    })
}

// ---------------------------------------------------------------------------
// OK protocol

/// The run with no receives and the run in which every send is delivered.
pub fn ok_extreme_runs(sys: &System) -> (Option<usize>, Option<usize>) {
    let silent = sys.runs().iter().position(|r| !r.any_receive_in(0, sys.horizon()));
    let full = sys.runs().iter().position(|r| !r.id.contains('x'));
    (silent, full)
}

pub fn ok_protocol(horizon: Time) -> Result<ScenarioManifest, ScenarioError> {
    if horizon < 3 {
        return Err(ScenarioError::BadParameter(format!("horizon must be at least 3, got {horizon}")));
    }
    let configs = vec![InitialConfiguration::simple(2).with_perfect_clocks()];
    let last = horizon - 1;
    let protocol = OkProtocol { last_round: last as ClockValue };
    // delivery at the send tick stands for "within one time unit"
    let all = generate_runs(&protocol, &DeliveryModel::NotGuaranteed { min_delay: 0, max_delay: 0 }, &configs, horizon)?;
    // The unbounded protocol lets every sender learn of a loss a tick later.
    // Within a horizon the last round has no later round to reveal it, so
    // those messages are always delivered.
    let last_round_delivered = |r: &Run| {
        (0..2).all(|a| {
            r.timeline[a].iter().filter(|e| e.event.kind == EventKind::Send && e.time == last).all(|e| {
                r.timeline[e.event.peer.0].iter().any(|x| x.event.kind == EventKind::Receive && x.time == last)
            })
        })
    };
    let runs: Vec<Run> = all.runs().iter().filter(|r| last_round_delivered(r)).cloned().collect();
    let sys = System::new(vec!["R2".into(), "D2".into()], horizon, runs)?;
    let mut val = Valuation::new();
    let lost: Vec<Option<Time>> = sys
        .runs()
        .iter()
        .map(|r| {
            let mut first: Option<Time> = None;
            for from in 0..2 {
                for e in r.timeline[from].iter().filter(|e| e.event.kind == EventKind::Send) {
                    let got = r.timeline[1 - from].iter().any(|x| x.event.kind == EventKind::Receive && x.time == e.time);
                    if !got {
                        first = Some(first.map_or(e.time, |f| f.min(e.time)));
                    }
                }
            }
            first
        })
        .collect();
    val.insert_where(&sys, "psi", |p| p.time >= 1 && lost[p.run].is_some_and(|s| s < p.time));
    stable_prop(&mut val, &sys, "sent_ok", |r| event_tick(r, 0, EventKind::Send, "OK").map(|t| t + 1));
    let (silent, full) = ok_extreme_runs(&sys);
    let mut ex = vec![
        Expectation::new("psi -> Eeps[1]{0,1} psi", At::All, true, "psi implies E^1 psi everywhere"),
        Expectation::new("psi -> Ceps[1]{0,1} psi", At::All, true, "by induction psi implies C^1 psi"),
    ];
    if let Some(s) = silent {
        let id = &sys.runs()[s].id;
        ex.push(Expectation::new("Ceps[1]{0,1} psi", At::Point(format!("{id}@1")), true, "C^1 psi holds at time 1 when nothing is delivered"));
        ex.push(Expectation::new("Cv{0,1} psi", At::Point(format!("{id}@1")), true, "the same holds for eventual common knowledge"));
    }
    if let Some(f) = full {
        let id = &sys.runs()[f].id;
        ex.push(Expectation::new("Ceps[1]{0,1} psi", At::Point(format!("{id}@1")), false, "C^1 psi fails at time 1 when every message arrives"));
        ex.push(Expectation::new("Cv{0,1} psi", At::Point(format!("{id}@1")), false, "the same holds for eventual common knowledge"));
    }
    let model = Model::new(sys, val, ViewPolicy::CompleteHistory)?;
    Ok(ScenarioManifest {
        name: "ok_protocol".into(),
        parameters: params(&[("horizon", horizon.into())]),
        model,
        expectations: ex,
    })
}

// ---------------------------------------------------------------------------
// synchronous broadcast

pub fn broadcast_channel(latency: Time, eps: Time, n: usize, horizon: Time) -> Result<ScenarioManifest, ScenarioError> {
    if n < 2 {
        return Err(ScenarioError::BadParameter("need at least two agents".into()));
    }
    if horizon < latency + 2 * eps + 1 {
        return Err(ScenarioError::BadParameter(format!(
            "horizon must be at least L + 2*eps + 1 = {}",
            latency + 2 * eps + 1
        )));
    }
    let protocol = BroadcastOnce { sender: AgentId(0), agents: n, content: "m".into() };
    let sys = generate_runs(
        &protocol,
        &DeliveryModel::SynchronousBroadcast { latency, spread: eps },
        &[InitialConfiguration::simple(n)],
        horizon,
    )?;
    let mut val = Valuation::new();
    stable_prop(&mut val, &sys, "sent_m", |r| event_tick(r, 0, EventKind::Send, "m").map(|t| t + 1));
    stable_prop(&mut val, &sys, "psi_recv", |r| {
        r.timeline.iter().flatten().filter(|e| e.event.kind == EventKind::Receive).map(|e| e.time + 1).min()
    });
    let g = group_text(0..n);
    let mut ex = vec![Expectation::new(
        format!("psi_recv -> Eeps[{eps}]{g} psi_recv"),
        At::All,
        true,
        "receipt by anyone implies E^eps of it",
    )];
    // a delivery at tick L is visible from L+1, which is "L after the broadcast"
    for r in sys.runs() {
        for t in (latency + 1)..=horizon {
            ex.push(Expectation::new(
                format!("Ceps[{eps}]{g} sent_m"),
                At::Point(format!("{}@{t}", r.id)),
                true,
                "the broadcast becomes eps-common knowledge L after it is sent",
            ));
        }
    }
    if eps == 0 {
        ex.push(Expectation::new(format!("Ceps[0]{g} sent_m <-> C{g} sent_m"), At::All, true, "zero width is simultaneity"));
    }
    let model = Model::new(sys, val, ViewPolicy::CompleteHistory)?;
    Ok(ScenarioManifest {
        name: "broadcast_channel".into(),
        parameters: params(&[("L", latency.into()), ("eps", eps.into()), ("n", n.into()), ("horizon", horizon.into())]),
        model,
        expectations: ex,
    })
}

// ---------------------------------------------------------------------------
// timestamps

/// Tick at which R's clock reads `t_S`, the send time.
pub const TIMESTAMP_SEND: Time = 1;

pub fn timestamp_t0(delta: Time, eps: Time) -> ClockValue {
    (TIMESTAMP_SEND + eps + delta) as ClockValue
}

/// R sends `m'` (or stays idle) at clock `t_S`; D's clock runs ahead of R's
/// by a skew in `0..=delta`; the message takes `0..=eps` ticks.
pub fn timestamped_demo(delta: Time, eps: Time, horizon: Time) -> Result<ScenarioManifest, ScenarioError> {
    let t0 = timestamp_t0(delta, eps);
    if (horizon as ClockValue) < t0 + delta as ClockValue + 1 {
        return Err(ScenarioError::BadParameter(format!("horizon must be at least T0 + delta + 1 = {}", t0 + delta as ClockValue + 1)));
    }
    let mut runs = Vec::new();
    for skew in 0..=delta {
        for sends in [true, false] {
            let delays: Vec<Option<Time>> = if sends { (0..=eps).map(Some).collect() } else { vec![None] };
            for d in delays {
                let id = match d {
                    Some(d) => format!("s{skew}d{d}"),
                    None => format!("s{skew}idle"),
                };
                let mut b = Run::builder(id, 2).initial(0, if sends { "send" } else { "idle" }).initial(1, "D");
                if let Some(d) = d {
                    let at = TIMESTAMP_SEND - 1;
                    b = b.message(0, 1, "mt", at, Some(at + d));
                }
                b = b.clock(0, (0..=horizon).map(|t| Some(t as ClockValue)).collect());
                b = b.clock(1, (0..=horizon).map(|t| Some((t + skew) as ClockValue)).collect());
                runs.push(b.build());
            }
        }
    }
    let sys = System::new(vec!["R".into(), "D".into()], horizon, runs)?;
    let mut val = Valuation::new();
    stable_prop(&mut val, &sys, "sent_mt", |r| event_tick(r, 0, EventKind::Send, "mt").map(|t| t + 1));
    let mut ex = Vec::new();
    for r in sys.runs().iter().filter(|r| r.initial_state[0] == "send") {
        ex.push(Expectation::new(
            format!("Ct[{t0}]{{0,1}} sent_mt"),
            At::Point(format!("{}@0", r.id)),
            true,
            "timestamped common knowledge of sent_mt with timestamp T0",
        ));
    }
    ex.push(Expectation::new(format!("sent_mt -> Et[{t0}]{{0,1}} sent_mt"), At::All, true, "sent_mt implies E^T0 sent_mt"));
    let model = Model::new(sys, val, ViewPolicy::CompleteHistory)?;
    Ok(ScenarioManifest {
        name: "timestamped_demo".into(),
        parameters: params(&[("delta", delta.into()), ("eps", eps.into()), ("horizon", horizon.into())]),
        model,
        expectations: ex,
    })
}

/// Points at which some agent's clock reads `stamp`.
pub fn clock_points(sys: &System, stamp: ClockValue) -> crate::pointset::PointSet {
    crate::pointset::PointSet::from_indices(
        sys.point_count(),
        sys.points()
            .enumerate()
            .filter(|(_, p)| sys.agents().any(|a| sys.runs()[p.run].clock_at(a, p.time) == Some(stamp)))
            .map(|(i, _)| i),
    )
}

// ---------------------------------------------------------------------------
// weak ε knowledge

/// Two runs with clocks where `p` holds early and fails late, so both
/// `E^eps p` and `E^eps ~p` hold in between.
pub fn staggered_knowledge(eps: Time) -> Result<ScenarioManifest, ScenarioError> {
    let horizon = 2 * eps + 1;
    let runs = ["a", "b"]
        .iter()
        .map(|id| Run::builder(*id, 2).initial(1, *id).perfect_clocks(horizon).build())
        .collect();
    let sys = System::with_default_names(2, horizon, runs)?;
    let mut val = Valuation::new();
    let cut = eps;
    val.insert_where(&sys, "p", |pt| if pt.run == 0 { pt.time < cut } else { pt.time <= cut });
    let ex = vec![Expectation::new(
        format!("Eeps[{eps}]{{0,1}} p & Eeps[{eps}]{{0,1}} ~p"),
        At::Point(format!("a@{cut}")),
        true,
        "E^eps p and E^eps ~p can hold together",
    )];
    let model = Model::new(sys, val, ViewPolicy::CompleteHistory)?;
    Ok(ScenarioManifest { name: "staggered_knowledge".into(), parameters: params(&[("eps", eps.into())]), model, expectations: ex })
}

/// Runs a scenario by name with `key=value` parameters.
pub fn scenario_by_name(name: &str, kv: &BTreeMap<String, String>) -> Result<ScenarioManifest, ScenarioError> {
    let get = |key: &str, default: i64| -> Result<i64, ScenarioError> {
        match kv.get(key) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" => Ok(1),
                "false" => Ok(0),
                _ => v.parse().map_err(|_| ScenarioError::BadParameter(format!("{key}={v} is not an integer"))),
            },
        }
    };
    let nat = |key: &str, default: i64| -> Result<u32, ScenarioError> {
        let v = get(key, default)?;
        u32::try_from(v).map_err(|_| ScenarioError::BadParameter(format!("{key} must be non-negative")))
    };
    let known: &[&str] = match name {
        "muddy_children" => &["n", "announce", "rounds", "staggered"],
        "coordinated_attack" => &["k_legs", "horizon"],
        "r2d2" => &["eps", "t_s", "k_max"],
        "ok_protocol" => &["horizon"],
        "broadcast_channel" => &["L", "eps", "n", "horizon"],
        "timestamped_demo" => &["delta", "eps", "horizon"],
        "staggered_knowledge" => &["eps"],
        other => return Err(ScenarioError::BadParameter(format!("unknown scenario `{other}`"))),
    };
    if let Some(k) = kv.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(ScenarioError::BadParameter(format!("unknown parameter `{k}` for {name}")));
    }
    match name {
        "muddy_children" => {
            let n = nat("n", 3)? as usize;
            muddy_children(&MuddyParams {
                n,
                announce: get("announce", 1)? != 0,
                rounds: nat("rounds", n as i64 + 1)?,
                staggered: get("staggered", 0)? != 0,
            })
        }
        "coordinated_attack" => {
            let k = nat("k_legs", 2)?;
            coordinated_attack(k, nat("horizon", 2 * k as i64)?)
        }
        "r2d2" => r2d2(nat("eps", 2)?, nat("t_s", 2)?, nat("k_max", 3)?),
        "ok_protocol" => ok_protocol(nat("horizon", 5)?),
        "broadcast_channel" => {
            let (l, e) = (nat("L", 1)?, nat("eps", 1)?);
            broadcast_channel(l, e, nat("n", 3)? as usize, nat("horizon", (l + 2 * e + 1) as i64)?)
        }
        "timestamped_demo" => {
            let (d, e) = (nat("delta", 1)?, nat("eps", 1)?);
            timestamped_demo(d, e, nat("horizon", (TIMESTAMP_SEND + e + 2 * d + 1) as i64)?)
        }
        _ => staggered_knowledge(nat("eps", 1)?),
    }
}

pub const SCENARIO_NAMES: &[&str] = &[
    "muddy_children",
    "coordinated_attack",
    "r2d2",
    "ok_protocol",
    "broadcast_channel",
    "timestamped_demo",
    "staggered_knowledge",
];

/// Every group of two or more agents, as used by the invariance checks.
pub fn big_groups(sys: &System) -> Vec<AgentSet> {
    crate::eval::groups_of(sys).into_iter().filter(|g| g.len() >= 2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_verified(m: &ScenarioManifest) {
        let r = verify(m);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn muddy_three_children() {
        for announce in [true, false] {
            let m = muddy_children(&MuddyParams { n: 3, announce, rounds: 4, staggered: false }).unwrap();
            assert_verified(&m);
        }
    }

    #[test]
    fn muddy_staggered() {
        let m = muddy_children(&MuddyParams { n: 2, announce: true, rounds: 2, staggered: true }).unwrap();
        assert_verified(&m);
    }

    #[test]
    fn attack() {
        assert_verified(&coordinated_attack(2, 4).unwrap());
        assert_verified(&coordinated_attack(3, 6).unwrap());
    }

    #[test]
    fn r2d2_ladders() {
        assert_verified(&r2d2(1, 2, 3).unwrap());
        assert_verified(&r2d2(2, 2, 3).unwrap());
    }

    #[test]
    fn ok_and_broadcast() {
        assert_verified(&ok_protocol(5).unwrap());
        assert_verified(&broadcast_channel(1, 1, 3, 4).unwrap());
        assert_verified(&broadcast_channel(1, 0, 2, 3).unwrap());
    }

    #[test]
    fn timestamps_and_staggering() {
        assert_verified(&timestamped_demo(1, 1, 5).unwrap());
        assert_verified(&timestamped_demo(0, 1, 4).unwrap());
        assert_verified(&staggered_knowledge(1).unwrap());
    }
}
