//! Seeded random systems and formulas for property tests.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eval::{Model, Valuation};
use crate::logic::Formula;
use crate::pointset::PointSet;
use crate::runs::{AgentId, ClockValue, Run, System, Time};
use crate::views::{AgentSet, ViewPolicy};

#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub max_runs: usize,
    pub max_horizon: Time,
    pub max_agents: usize,
    pub max_props: usize,
    /// Cap on `runs * (horizon + 1)`; larger draws are shrunk.
    pub max_points: usize,
    /// Probability that the system has clocks.
    pub clock_chance: f64,
    /// Clocks read real time plus an offset in `0..=clock_skew`.
    pub clock_skew: ClockValue,
    /// Probability that an agent wakes after time 0.
    pub late_wake_chance: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            max_runs: 4,
            max_horizon: 4,
            max_agents: 3,
            max_props: 3,
            max_points: usize::MAX,
            clock_chance: 0.3,
            clock_skew: 1,
            late_wake_chance: 0.2,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn prop_name(i: usize) -> String {
    ["p", "q", "r", "s1", "s2"].get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("x{i}"))
}

fn random_run<R: Rng>(rng: &mut R, spec: &RandomSpec, id: String, agents: usize, horizon: Time, clocks: bool) -> Run {
    let mut b = Run::builder(id, agents);
    let mut wake = vec![0; agents];
    for (a, w) in wake.iter_mut().enumerate() {
        if rng.gen_bool(spec.late_wake_chance) {
            *w = rng.gen_range(0..=horizon.min(1));
        }
        b = b.wake(a, *w).initial(a, ["a", "b"][rng.gen_range(0..2)]);
    }
    for t in 0..horizon {
        for from in 0..agents {
            if t < wake[from] || agents < 2 || !rng.gen_bool(0.3) {
                continue;
            }
            let mut to = rng.gen_range(0..agents - 1);
            if to >= from {
                to += 1;
            }
            let content = ["m", "n"][rng.gen_range(0..2)];
            let at = rng.gen_range(t..=horizon);
            let received = (rng.gen_bool(0.7) && at >= wake[to]).then_some(at);
            b = b.message(from, to, content, t, received);
        }
    }
    if clocks {
        for (a, &w) in wake.iter().enumerate() {
            let offset: ClockValue = rng.gen_range(0..=spec.clock_skew);
            let readings = (0..=horizon).map(|t| (t >= w).then_some(t as ClockValue + offset)).collect();
            b = b.clock(a, readings);
        }
    }
    b.build()
}

/// A random system with `1..=max_props` random propositions.
pub fn random_model<R: Rng>(rng: &mut R, spec: &RandomSpec, policy: ViewPolicy) -> Model {
    let agents = rng.gen_range(1..=spec.max_agents.max(1));
    let mut horizon = rng.gen_range(0..=spec.max_horizon);
    let mut runs = rng.gen_range(1..=spec.max_runs.max(1));
    while runs * (horizon as usize + 1) > spec.max_points {
        if horizon > 0 {
            horizon -= 1;
        } else {
            runs -= 1;
        }
    }
    let clocks = rng.gen_bool(spec.clock_chance);
    let runs = (0..runs).map(|i| random_run(rng, spec, format!("r{i}"), agents, horizon, clocks)).collect();
    let sys = System::with_default_names(agents, horizon, runs).expect("random system is well formed");
    let mut val = Valuation::new();
    for i in 0..rng.gen_range(1..=spec.max_props.max(1)) {
        let density = rng.gen_range(0.2..0.8);
        let idx: Vec<usize> = (0..sys.point_count()).filter(|_| rng.gen_bool(density)).collect();
        val.insert(prop_name(i), PointSet::from_indices(sys.point_count(), idx));
    }
    Model::new(sys, val, policy).expect("views are functions of history")
}

pub fn random_group<R: Rng>(rng: &mut R, agents: usize) -> AgentSet {
    let mut ids: Vec<usize> = (0..agents).collect();
    ids.shuffle(rng);
    let k = rng.gen_range(1..=agents);
    AgentSet::of(&ids[..k]).expect("group is non-empty")
}

/// Random formula over `props`, using only operators defined on every
/// system (no clock operators unless `clocks`).
pub fn random_formula<R: Rng>(rng: &mut R, depth: u32, agents: usize, props: &[String], clocks: bool) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.1) { Formula::True } else { Formula::prop(props.choose(rng).expect("some prop").clone()) };
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1, agents, props, clocks);
    let pick = rng.gen_range(0..if clocks { 15 } else { 13 });
    match pick {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::K(AgentId(rng.gen_range(0..agents)), Box::new(sub(rng))),
        4 => Formula::E(random_group(rng, agents), Box::new(sub(rng))),
        5 => Formula::S(random_group(rng, agents), Box::new(sub(rng))),
        6 => Formula::D(random_group(rng, agents), Box::new(sub(rng))),
        7 => Formula::C(random_group(rng, agents), Box::new(sub(rng))),
        8 => Formula::EPow(random_group(rng, agents), rng.gen_range(1..=3), Box::new(sub(rng))),
        9 => Formula::EEps(random_group(rng, agents), rng.gen_range(0..=2), Box::new(sub(rng))),
        10 => Formula::CEps(random_group(rng, agents), rng.gen_range(0..=2), Box::new(sub(rng))),
        11 => Formula::EDiamond(random_group(rng, agents), Box::new(sub(rng))),
        12 => Formula::CDiamond(random_group(rng, agents), Box::new(sub(rng))),
        13 => Formula::KTime(AgentId(rng.gen_range(0..agents)), rng.gen_range(0..=4), Box::new(sub(rng))),
        _ => Formula::CTime(random_group(rng, agents), rng.gen_range(0..=4), Box::new(sub(rng))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let spec = RandomSpec { max_points: 12, ..RandomSpec::default() };
        for seed in 0..30 {
            let a = random_model(&mut rng(seed), &spec, ViewPolicy::CompleteHistory);
            let b = random_model(&mut rng(seed), &spec, ViewPolicy::CompleteHistory);
            assert_eq!(a.system(), b.system());
            assert!(a.system().point_count() <= 12);
            assert!(a.system().agent_count() <= 3);
            assert!(crate::runs::validate_system(a.system()).is_empty(), "seed {seed}");
        }
    }
}
