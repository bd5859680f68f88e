//! Set-based semantics: every formula denotes the set of points where it
//! holds. Fixed points are computed by descending iteration from the full
//! point set; common knowledge also has a reachability fast path.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::logic::{check_positivity, Formula, PositivityError};
use crate::pointset::PointSet;
use crate::runs::{AgentId, ClockValue, Point, System, Time};
use crate::views::{build_index, AgentSet, IndistIndex, ViewError, ViewPolicy};

/// Truth of each proposition at each point.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation {
    props: BTreeMap<String, PointSet>,
}

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, set: PointSet) {
        self.props.insert(name.into(), set);
    }

    /// Adds `name`, true exactly where `pred` holds.
    pub fn insert_where(&mut self, system: &System, name: impl Into<String>, pred: impl Fn(Point) -> bool) {
        let set = PointSet::from_indices(
            system.point_count(),
            system.points().enumerate().filter(|(_, p)| pred(*p)).map(|(i, _)| i),
        );
        self.insert(name, set);
    }

    pub fn get(&self, name: &str) -> Option<&PointSet> {
        self.props.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.props.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PointSet)> {
        self.props.iter().map(|(k, v)| (k.as_str(), v))
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    View(#[from] ViewError),
    #[error("proposition `{prop}` covers {found} points, system has {expected}")]
    ValuationShape { prop: String, found: usize, expected: usize },
}

/// A system together with a valuation and a view policy.
#[derive(Clone, Debug)]
pub struct Model {
    system: System,
    valuation: Valuation,
    policy: ViewPolicy,
    index: IndistIndex,
}

impl Model {
    pub fn new(system: System, valuation: Valuation, policy: ViewPolicy) -> Result<Self, ModelError> {
        for (name, set) in valuation.iter() {
            if set.universe() != system.point_count() {
                return Err(ModelError::ValuationShape {
                    prop: name.to_string(),
                    found: set.universe(),
                    expected: system.point_count(),
                });
            }
        }
        let index = build_index(&system, &policy)?;
        Ok(Model { system, valuation, policy, index })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    pub fn policy(&self) -> &ViewPolicy {
        &self.policy
    }

    pub fn index(&self) -> &IndistIndex {
        &self.index
    }

    pub fn all_points(&self) -> PointSet {
        PointSet::full(self.system.point_count())
    }
}

pub type VarEnv = HashMap<String, PointSet>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error(transparent)]
    Positivity(#[from] PositivityError),
    #[error("clock operators need a system with clocks")]
    NoClocks,
    #[error("unknown proposition `{0}`")]
    UnknownProp(String),
    #[error("agent {agent} out of range (system has {count} agents)")]
    AgentOutOfRange { agent: usize, count: usize },
    #[error("fixed-point iteration for `{var}` grew at step {step}")]
    NotMonotone { var: String, step: usize },
}

fn precheck(model: &Model, f: &Formula, env: &VarEnv) -> Result<(), EvalError> {
    check_positivity(f)?;
    if let Some(a) = f.max_agent() {
        if a.0 >= model.system.agent_count() {
            return Err(EvalError::AgentOutOfRange { agent: a.0, count: model.system.agent_count() });
        }
    }
    for p in f.props() {
        if model.valuation.get(&p).is_none() {
            return Err(EvalError::UnknownProp(p));
        }
    }
    if let Some(x) = f.free_vars().into_iter().find(|x| !env.contains_key(x)) {
        return Err(EvalError::UnboundVar(x));
    }
    if f.uses_clocks() && !model.system.has_clocks() {
        return Err(EvalError::NoClocks);
    }
    Ok(())
}

/// The set of points where `f` holds under `env`.
pub fn eval(model: &Model, f: &Formula, env: &VarEnv) -> Result<PointSet, EvalError> {
    precheck(model, f, env)?;
    let mut env = env.clone();
    eval_in(model, f, &mut env)
}

/// Is `f` true at `point`, with no free variables?
pub fn holds(model: &Model, f: &Formula, point: Point) -> Result<bool, EvalError> {
    let set = eval(model, f, &VarEnv::new())?;
    Ok(set.contains(model.system.point_index(point)))
}

/// Greatest fixed point of `X -> body` by descending iteration from all points.
pub fn gfp(model: &Model, var: &str, body: &Formula, env: &VarEnv) -> Result<PointSet, EvalError> {
    let chain = gfp_chain(model, var, body, env)?;
    Ok(chain.into_iter().next_back().expect("chain starts with the full set"))
}

/// The full iteration `A0 = S, A(j+1) = body(Aj)` up to and including the
/// fixed point.
pub fn gfp_chain(model: &Model, var: &str, body: &Formula, env: &VarEnv) -> Result<Vec<PointSet>, EvalError> {
    let wrapped = Formula::nu(var, body.clone());
    precheck(model, &wrapped, env)?;
    let mut env = env.clone();
    iterate(model, var, body, &mut env)
}

fn iterate(model: &Model, var: &str, body: &Formula, env: &mut VarEnv) -> Result<Vec<PointSet>, EvalError> {
    let saved = env.remove(var);
    let mut chain = vec![model.all_points()];
    let result = loop {
        let current = chain.last().expect("nonempty").clone();
        env.insert(var.to_string(), current.clone());
        let next = match eval_in(model, body, env) {
            Ok(s) => s,
            Err(e) => break Err(e),
        };
        if !next.is_subset(&current) {
            break Err(EvalError::NotMonotone { var: var.to_string(), step: chain.len() });
        }
        if next == current {
            break Ok(());
        }
        chain.push(next);
    };
    match saved {
        Some(s) => env.insert(var.to_string(), s),
        None => env.remove(var),
    };
    result.map(|_| chain)
}

/// Common knowledge by reachability: the points whose whole G-component
/// satisfies `f`.
pub fn eval_c_reach(model: &Model, group: &AgentSet, f: &Formula, env: &VarEnv) -> Result<PointSet, EvalError> {
    let inner = eval(model, f, env)?;
    Ok(common_by_components(model, group, &inner))
}

fn common_by_components(model: &Model, group: &AgentSet, inner: &PointSet) -> PointSet {
    let labels = model.index.components(group);
    let mut bad = vec![false; labels.len()];
    for (i, &l) in labels.iter().enumerate() {
        if !inner.contains(i) {
            bad[l] = true;
        }
    }
    PointSet::from_indices(labels.len(), (0..labels.len()).filter(|&i| !bad[labels[i]]))
}

fn knows(model: &Model, agent: AgentId, inner: &PointSet) -> PointSet {
    let part = model.index.partition(agent);
    let mut out = PointSet::empty(inner.universe());
    for class in part.classes() {
        if class.iter().all(|&i| inner.contains(i as usize)) {
            for &i in class {
                out.insert(i as usize);
            }
        }
    }
    out
}

fn everyone(model: &Model, group: &AgentSet, inner: &PointSet) -> PointSet {
    let mut out = model.all_points();
    for a in group.iter() {
        out.intersect_with(&knows(model, a, inner));
    }
    out
}

fn distributed(model: &Model, group: &AgentSet, inner: &PointSet) -> PointSet {
    let joint = model.index.joint_classes(group);
    let mut out = PointSet::empty(inner.universe());
    for class in joint.classes() {
        if class.iter().all(|&i| inner.contains(i as usize)) {
            for &i in class {
                out.insert(i as usize);
            }
        }
    }
    out
}

/// Each member knows at some time in a shared window `[s, s+eps]` around now,
/// with the window inside `[0, horizon]`.
fn everyone_eps(model: &Model, group: &AgentSet, eps: Time, inner: &PointSet) -> PointSet {
    let sys = &model.system;
    let h = sys.horizon();
    let mut out = PointSet::empty(inner.universe());
    if eps > h {
        return out;
    }
    let per_agent: Vec<PointSet> = group.iter().map(|a| knows(model, a, inner)).collect();
    for run in 0..sys.runs().len() {
        let at = |k: &PointSet, t: Time| k.contains(sys.point_index(Point { run, time: t }));
        for s in 0..=(h - eps) {
            let ok = per_agent.iter().all(|k| (s..=s + eps).any(|t| at(k, t)));
            if ok {
                for t in s..=s + eps {
                    out.insert(sys.point_index(Point { run, time: t }));
                }
            }
        }
    }
    out
}

/// Each member knows at some time of the run; a property of whole runs.
fn everyone_eventually(model: &Model, group: &AgentSet, inner: &PointSet) -> PointSet {
    let sys = &model.system;
    let per_agent: Vec<PointSet> = group.iter().map(|a| knows(model, a, inner)).collect();
    let mut out = PointSet::empty(inner.universe());
    for run in 0..sys.runs().len() {
        let ok = per_agent.iter().all(|k| {
            (0..=sys.horizon()).any(|t| k.contains(sys.point_index(Point { run, time: t })))
        });
        if ok {
            for t in 0..=sys.horizon() {
                out.insert(sys.point_index(Point { run, time: t }));
            }
        }
    }
    out
}

/// Run-level: the agent's clock reads `stamp` somewhere in the run and the
/// agent knows `inner` at every such time.
fn knows_at_clock(model: &Model, agent: AgentId, stamp: ClockValue, inner: &PointSet) -> PointSet {
    let sys = &model.system;
    let k = knows(model, agent, inner);
    let mut out = PointSet::empty(inner.universe());
    for (ri, run) in sys.runs().iter().enumerate() {
        let mut seen = false;
        let mut ok = true;
        for t in 0..=sys.horizon() {
            if run.clock_at(agent, t) == Some(stamp) {
                seen = true;
                ok &= k.contains(sys.point_index(Point { run: ri, time: t }));
            }
        }
        if seen && ok {
            for t in 0..=sys.horizon() {
                out.insert(sys.point_index(Point { run: ri, time: t }));
            }
        }
    }
    out
}

fn everyone_at_clock(model: &Model, group: &AgentSet, stamp: ClockValue, inner: &PointSet) -> PointSet {
    let mut out = model.all_points();
    for a in group.iter() {
        out.intersect_with(&knows_at_clock(model, a, stamp, inner));
    }
    out
}

fn eval_in(model: &Model, f: &Formula, env: &mut VarEnv) -> Result<PointSet, EvalError> {
    use Formula::*;
    let n = model.system.point_count();
    Ok(match f {
        True => PointSet::full(n),
        Prop(p) => model.valuation.get(p).cloned().ok_or_else(|| EvalError::UnknownProp(p.clone()))?,
        Var(x) => env.get(x).cloned().ok_or_else(|| EvalError::UnboundVar(x.clone()))?,
        Not(g) => eval_in(model, g, env)?.complement(),
        And(a, b) => eval_in(model, a, env)?.intersection(&eval_in(model, b, env)?),
        K(a, g) => knows(model, *a, &eval_in(model, g, env)?),
        S(gr, g) => {
            let inner = eval_in(model, g, env)?;
            let mut out = PointSet::empty(n);
            for a in gr.iter() {
                out.union_with(&knows(model, a, &inner));
            }
            out
        }
        E(gr, g) => everyone(model, gr, &eval_in(model, g, env)?),
        EPow(gr, k, g) => {
            let mut cur = eval_in(model, g, env)?;
            for _ in 0..*k {
                cur = everyone(model, gr, &cur);
            }
            cur
        }
        D(gr, g) => distributed(model, gr, &eval_in(model, g, env)?),
        C(gr, g) => common_by_components(model, gr, &eval_in(model, g, env)?),
        EEps(gr, e, g) => everyone_eps(model, gr, *e, &eval_in(model, g, env)?),
        EDiamond(gr, g) => everyone_eventually(model, gr, &eval_in(model, g, env)?),
        KTime(a, t, g) => {
            if !model.system.has_clocks() {
                return Err(EvalError::NoClocks);
            }
            knows_at_clock(model, *a, *t, &eval_in(model, g, env)?)
        }
        ETime(gr, t, g) => {
            if !model.system.has_clocks() {
                return Err(EvalError::NoClocks);
            }
            everyone_at_clock(model, gr, *t, &eval_in(model, g, env)?)
        }
        CEps(gr, e, g) => {
            let inner = eval_in(model, g, env)?;
            descend(model, |x| everyone_eps(model, gr, *e, &inner.intersection(x)))
        }
        CDiamond(gr, g) => {
            let inner = eval_in(model, g, env)?;
            descend(model, |x| everyone_eventually(model, gr, &inner.intersection(x)))
        }
        CTime(gr, t, g) => {
            if !model.system.has_clocks() {
                return Err(EvalError::NoClocks);
            }
            let inner = eval_in(model, g, env)?;
            descend(model, |x| everyone_at_clock(model, gr, *t, &inner.intersection(x)))
        }
        Nu(x, body) => iterate(model, x, body, env)?.pop().expect("nonempty"),
    })
}

/// Greatest fixed point of a monotone set function, from the full set.
fn descend(model: &Model, step: impl Fn(&PointSet) -> PointSet) -> PointSet {
    let mut cur = model.all_points();
    loop {
        let next = step(&cur).intersection(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validity {
    pub valid: bool,
    /// The least point (in run-id, time order) where the formula fails.
    pub counterexample: Option<Point>,
}

pub fn check_validity(model: &Model, f: &Formula) -> Result<Validity, EvalError> {
    let set = eval(model, f, &VarEnv::new())?;
    let counterexample = set.first_missing().map(|i| model.system.point_at(i));
    Ok(Validity { valid: counterexample.is_none(), counterexample })
}

/// Which common-knowledge variant an induction check is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommonKind {
    Plain,
    Eps(Time),
    Diamond,
    Time(ClockValue),
}

impl CommonKind {
    pub fn everyone(self, group: &AgentSet, f: Formula) -> Formula {
        let b = Box::new(f);
        match self {
            CommonKind::Plain => Formula::E(group.clone(), b),
            CommonKind::Eps(e) => Formula::EEps(group.clone(), e, b),
            CommonKind::Diamond => Formula::EDiamond(group.clone(), b),
            CommonKind::Time(t) => Formula::ETime(group.clone(), t, b),
        }
    }

    pub fn common(self, group: &AgentSet, f: Formula) -> Formula {
        let b = Box::new(f);
        match self {
            CommonKind::Plain => Formula::C(group.clone(), b),
            CommonKind::Eps(e) => Formula::CEps(group.clone(), e, b),
            CommonKind::Diamond => Formula::CDiamond(group.clone(), b),
            CommonKind::Time(t) => Formula::CTime(group.clone(), t, b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InductionOutcome {
    /// Premise valid and conclusion valid.
    Holds,
    /// Premise not valid; nothing to conclude.
    Vacuous { premise_fails_at: Point },
    /// Premise valid but conclusion fails.
    Violated { conclusion_fails_at: Point },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InductionReport {
    pub premise: Formula,
    pub conclusion: Formula,
    pub outcome: InductionOutcome,
}

/// From `phi -> E(phi & psi)` valid, infer `phi -> C psi` valid.
pub fn check_induction_rule(
    model: &Model,
    phi: &Formula,
    psi: &Formula,
    group: &AgentSet,
    kind: CommonKind,
) -> Result<InductionReport, EvalError> {
    let premise = Formula::implies(phi.clone(), kind.everyone(group, Formula::and(phi.clone(), psi.clone())));
    let conclusion = Formula::implies(phi.clone(), kind.common(group, psi.clone()));
    let p = check_validity(model, &premise)?;
    let outcome = match p.counterexample {
        Some(pt) => InductionOutcome::Vacuous { premise_fails_at: pt },
        None => match check_validity(model, &conclusion)?.counterexample {
            None => InductionOutcome::Holds,
            Some(pt) => InductionOutcome::Violated { conclusion_fails_at: pt },
        },
    };
    Ok(InductionReport { premise, conclusion, outcome })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxiomStatus {
    Pass,
    Fail { counterexample: String },
    /// Not expected to hold in general; recorded for reference only.
    Info { valid: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomCheck {
    pub axiom: String,
    pub formula: String,
    pub status: AxiomStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn failures(&self) -> impl Iterator<Item = &AxiomCheck> {
        self.checks.iter().filter(|c| matches!(c.status, AxiomStatus::Fail { .. }))
    }

    pub fn all_pass(&self) -> bool {
        self.failures().next().is_none()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match &c.status {
                AxiomStatus::Pass => "pass".to_string(),
                AxiomStatus::Fail { counterexample } => format!("FAIL at {counterexample}"),
                AxiomStatus::Info { valid } => format!("info ({})", if *valid { "valid" } else { "not valid" }),
            };
            writeln!(f, "{:<10} {:<12} {}", c.axiom, status, c.formula)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AxiomOptions {
    /// Depth of the `E^k` part of the hierarchy chain.
    pub max_k: u32,
    /// Widths used for the ε-common-knowledge checks.
    pub eps: Vec<Time>,
}

impl Default for AxiomOptions {
    fn default() -> Self {
        AxiomOptions { max_k: 3, eps: vec![0, 1] }
    }
}

/// Nonempty subsets of the agents, singletons first.
pub fn groups_of(system: &System) -> Vec<AgentSet> {
    let n = system.agent_count();
    let mut out: Vec<AgentSet> = (1u32..(1 << n))
        .map(|mask| AgentSet::new((0..n).filter(|i| mask & (1 << i) != 0).map(AgentId)).expect("nonempty mask"))
        .collect();
    out.sort_by_key(|g| (g.len(), g.clone()));
    out
}

struct Suite<'a> {
    model: &'a Model,
    report: AxiomReport,
}

impl Suite<'_> {
    fn assert(&mut self, axiom: &str, f: Formula) -> Result<(), EvalError> {
        let v = check_validity(self.model, &f)?;
        let status = match v.counterexample {
            None => AxiomStatus::Pass,
            Some(p) => AxiomStatus::Fail { counterexample: self.model.system.label(p) },
        };
        self.report.checks.push(AxiomCheck { axiom: axiom.into(), formula: f.to_string(), status });
        Ok(())
    }

    fn inform(&mut self, axiom: &str, f: Formula) -> Result<(), EvalError> {
        let valid = check_validity(self.model, &f)?.valid;
        self.report.checks.push(AxiomCheck { axiom: axiom.into(), formula: f.to_string(), status: AxiomStatus::Info { valid } });
        Ok(())
    }

    fn induction(&mut self, axiom: &str, phi: &Formula, psi: &Formula, g: &AgentSet, kind: CommonKind) -> Result<(), EvalError> {
        let r = check_induction_rule(self.model, phi, psi, g, kind)?;
        let status = match r.outcome {
            InductionOutcome::Violated { conclusion_fails_at } => {
                AxiomStatus::Fail { counterexample: self.model.system.label(conclusion_fails_at) }
            }
            _ => AxiomStatus::Pass,
        };
        self.report.checks.push(AxiomCheck {
            axiom: axiom.into(),
            formula: format!("{}  =>  {}", r.premise, r.conclusion),
            status,
        });
        Ok(())
    }

    /// A1-A4 and R1 for a modal operator given as a constructor.
    fn s5(&mut self, name: &str, m: &dyn Fn(Formula) -> Formula, p: &Formula, q: &Formula, valid: &[Formula]) -> Result<(), EvalError> {
        use Formula as F;
        self.assert(&format!("A1 {name}"), F::implies(m(p.clone()), p.clone()))?;
        self.assert(
            &format!("A2 {name}"),
            F::implies(F::and(m(p.clone()), m(F::implies(p.clone(), q.clone()))), m(q.clone())),
        )?;
        self.assert(&format!("A3 {name}"), F::implies(m(p.clone()), m(m(p.clone()))))?;
        self.assert(&format!("A4 {name}"), F::implies(F::not(m(p.clone())), m(F::not(m(p.clone())))))?;
        for v in valid {
            self.assert(&format!("R1 {name}"), m(v.clone()))?;
        }
        Ok(())
    }
}

/// Checks the S5 properties of K, D and C, the fixed-point axiom and
/// induction rule for C, the hierarchy chain, and the analogues for the
/// ε and eventual variants, over the given propositions.
pub fn axiom_suite(model: &Model, props: &[String], opts: &AxiomOptions) -> Result<AxiomReport, EvalError> {
    use Formula as F;
    let sys = model.system();
    let mut suite = Suite { model, report: AxiomReport::default() };
    let groups = groups_of(sys);
    let everybody = AgentSet::all(sys);
    for (pi, pname) in props.iter().enumerate() {
        let p = F::prop(pname.clone());
        let q = F::prop(props[(pi + 1) % props.len()].clone());
        // valid formulas to feed R1: tautologies plus any valid instance of A1
        let mut valid = vec![F::or(p.clone(), F::not(p.clone()))];
        if check_validity(model, &p)?.valid {
            valid.push(p.clone());
        }
        for a in sys.agents() {
            valid.push(F::implies(F::K(a, Box::new(p.clone())), p.clone()));
        }
        for a in sys.agents() {
            suite.s5(&format!("K{}", a.0), &|f| F::K(a, Box::new(f)), &p, &q, &valid)?;
        }
        for g in &groups {
            suite.s5(&format!("D{g}"), &|f| F::D(g.clone(), Box::new(f)), &p, &q, &valid)?;
            suite.s5(&format!("C{g}"), &|f| F::C(g.clone(), Box::new(f)), &p, &q, &valid)?;
            let c = F::C(g.clone(), Box::new(p.clone()));
            suite.assert(&format!("C1 {g}"), F::iff(c.clone(), F::E(g.clone(), Box::new(F::and(p.clone(), c)))))?;
            suite.induction(&format!("C2 {g}"), &p, &q, g, CommonKind::Plain)?;
            suite.induction(&format!("C2 {g}"), &p, &p, g, CommonKind::Plain)?;
        }

        // C => E^(k+1) => ... => E => S => D => p
        let g = &everybody;
        let mut chain = vec![F::C(g.clone(), Box::new(p.clone()))];
        for k in (2..=opts.max_k + 1).rev() {
            chain.push(F::EPow(g.clone(), k, Box::new(p.clone())));
        }
        chain.push(F::E(g.clone(), Box::new(p.clone())));
        chain.push(F::S(g.clone(), Box::new(p.clone())));
        chain.push(F::D(g.clone(), Box::new(p.clone())));
        chain.push(p.clone());
        for w in chain.windows(2) {
            suite.assert("hierarchy", F::implies(w[0].clone(), w[1].clone()))?;
        }

        let mut kinds: Vec<(String, CommonKind)> =
            opts.eps.iter().filter(|&&e| e <= sys.horizon()).map(|&e| (format!("Ceps[{e}]"), CommonKind::Eps(e))).collect();
        kinds.push(("Cv".into(), CommonKind::Diamond));
        for (name, kind) in kinds {
            for g in groups.iter().filter(|g| g.len() >= 2 || groups.len() == 1) {
                let m = |f: F| kind.common(g, f);
                let c = m(p.clone());
                suite.assert(
                    &format!("C1 {name}{g}"),
                    F::iff(c.clone(), kind.everyone(g, F::and(p.clone(), c.clone()))),
                )?;
                suite.induction(&format!("C2 {name}{g}"), &p, &q, g, kind)?;
                suite.assert(&format!("A3 {name}{g}"), F::implies(c.clone(), m(c.clone())))?;
                for v in &valid {
                    suite.assert(&format!("R1 {name}{g}"), m(v.clone()))?;
                }
                suite.inform(&format!("A1 {name}{g}"), F::implies(c.clone(), p.clone()))?;
                suite.inform(
                    &format!("A2 {name}{g}"),
                    F::implies(F::and(c.clone(), m(F::implies(p.clone(), q.clone()))), m(q.clone())),
                )?;
                suite.inform(&format!("A4 {name}{g}"), F::implies(F::not(c.clone()), m(F::not(c.clone()))))?;
            }
        }
    }
    Ok(suite.report)
}
