//! Naive reference semantics used as a test oracle.
//!
//! Views are compared directly on local histories, C is the intersection of
//! the powers E^k, and the other fixed points are found either by plain
//! iteration from the full set or by enumerating every subset of points.
#![allow(dead_code)]

use std::collections::HashMap;

use ckmc::eval::{Model, Valuation};
use ckmc::logic::Formula;
use ckmc::runs::{local_history, AgentId, ClockValue, Point, System, Time};
use ckmc::views::{AgentSet, ViewPolicy};
use ckmc::PointSet;

pub type Bits = Vec<bool>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gfp {
    Iterate,
    /// Union of all fixed points, over every subset of the point set.
    Enumerate,
}

pub struct Oracle<'a> {
    pub sys: &'a System,
    pub val: &'a Valuation,
    /// `views[agent][point]`, interned.
    views: Vec<Vec<usize>>,
    points: Vec<Point>,
    pub gfp: Gfp,
}

impl<'a> Oracle<'a> {
    pub fn new(model: &'a Model, gfp: Gfp) -> Self {
        let sys = model.system();
        let points: Vec<Point> = sys.points().collect();
        let views = (0..sys.agent_count())
            .map(|a| {
                let mut ids: HashMap<String, usize> = HashMap::new();
                points
                    .iter()
                    .map(|&p| {
                        let h = local_history(sys, AgentId(a), p).unwrap();
                        let key = match model.policy() {
                            ViewPolicy::CompleteHistory => format!("{h:?}"),
                            ViewPolicy::LocalState(proj) => proj.apply(AgentId(a), &h),
                            ViewPolicy::Trivial => String::new(),
                        };
                        let next = ids.len();
                        *ids.entry(key).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        Oracle { sys, val: model.valuation(), views, points, gfp }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    fn same(&self, a: usize, p: usize, q: usize) -> bool {
        self.views[a][p] == self.views[a][q]
    }

    fn idx(&self, run: usize, t: Time) -> usize {
        run * (self.sys.horizon() as usize + 1) + t as usize
    }

    pub fn knows(&self, a: usize, s: &Bits) -> Bits {
        (0..self.n()).map(|p| (0..self.n()).all(|q| !self.same(a, p, q) || s[q])).collect()
    }

    pub fn everyone(&self, g: &AgentSet, s: &Bits) -> Bits {
        let ks: Vec<Bits> = g.iter().map(|a| self.knows(a.0, s)).collect();
        (0..self.n()).map(|p| ks.iter().all(|k| k[p])).collect()
    }

    fn someone(&self, g: &AgentSet, s: &Bits) -> Bits {
        let ks: Vec<Bits> = g.iter().map(|a| self.knows(a.0, s)).collect();
        (0..self.n()).map(|p| ks.iter().any(|k| k[p])).collect()
    }

    fn distributed(&self, g: &AgentSet, s: &Bits) -> Bits {
        (0..self.n())
            .map(|p| (0..self.n()).all(|q| !g.iter().all(|a| self.same(a.0, p, q)) || s[q]))
            .collect()
    }

    /// Points where E^k holds for every k from 1 to |S| + 1.
    pub fn common(&self, g: &AgentSet, s: &Bits) -> Bits {
        let mut out = vec![true; self.n()];
        let mut cur = s.clone();
        for _ in 0..=self.n() {
            cur = self.everyone(g, &cur);
            out = and(&out, &cur);
        }
        out
    }

    fn everyone_eps(&self, g: &AgentSet, eps: Time, s: &Bits) -> Bits {
        let h = self.sys.horizon();
        let ks: Vec<Bits> = g.iter().map(|a| self.knows(a.0, s)).collect();
        self.points
            .iter()
            .map(|p| {
                (0..=p.time).any(|start| {
                    start + eps >= p.time
                        && start + eps <= h
                        && ks.iter().all(|k| (start..=start + eps).any(|t| k[self.idx(p.run, t)]))
                })
            })
            .collect()
    }

    fn everyone_eventually(&self, g: &AgentSet, s: &Bits) -> Bits {
        let h = self.sys.horizon();
        let ks: Vec<Bits> = g.iter().map(|a| self.knows(a.0, s)).collect();
        self.points.iter().map(|p| ks.iter().all(|k| (0..=h).any(|t| k[self.idx(p.run, t)]))).collect()
    }

    fn knows_at_clock(&self, a: usize, stamp: ClockValue, s: &Bits) -> Bits {
        let k = self.knows(a, s);
        let h = self.sys.horizon();
        self.points
            .iter()
            .map(|p| {
                let run = &self.sys.runs()[p.run];
                let times: Vec<Time> = (0..=h).filter(|&t| run.clock_at(AgentId(a), t) == Some(stamp)).collect();
                !times.is_empty() && times.iter().all(|&t| k[self.idx(p.run, t)])
            })
            .collect()
    }

    fn everyone_at_clock(&self, g: &AgentSet, stamp: ClockValue, s: &Bits) -> Bits {
        let ks: Vec<Bits> = g.iter().map(|a| self.knows_at_clock(a.0, stamp, s)).collect();
        (0..self.n()).map(|p| ks.iter().all(|k| k[p])).collect()
    }

    pub fn greatest(&self, f: &dyn Fn(&Bits) -> Bits) -> Bits {
        match self.gfp {
            Gfp::Iterate => {
                let mut cur = vec![true; self.n()];
                loop {
                    let next = and(&f(&cur), &cur);
                    if next == cur {
                        return cur;
                    }
                    cur = next;
                }
            }
            Gfp::Enumerate => {
                let n = self.n();
                assert!(n <= 16, "subset enumeration over {n} points");
                let mut out = vec![false; n];
                for mask in 0u32..(1 << n) {
                    let b: Bits = (0..n).map(|i| mask & (1 << i) != 0).collect();
                    if f(&b) == b {
                        out = or(&out, &b);
                    }
                }
                out
            }
        }
    }

    pub fn eval(&self, f: &Formula) -> Bits {
        self.eval_in(f, &HashMap::new())
    }

    pub fn eval_in(&self, f: &Formula, env: &HashMap<String, Bits>) -> Bits {
        let n = self.n();
        let sub = |g: &Formula| self.eval_in(g, env);
        match f {
            Formula::True => vec![true; n],
            Formula::Prop(name) => {
                let set = self.val.get(name).expect("known prop");
                (0..n).map(|i| set.contains(i)).collect()
            }
            Formula::Var(x) => env[x].clone(),
            Formula::Not(g) => sub(g).iter().map(|b| !b).collect(),
            Formula::And(a, b) => and(&sub(a), &sub(b)),
            Formula::K(a, g) => self.knows(a.0, &sub(g)),
            Formula::S(g, h) => self.someone(g, &sub(h)),
            Formula::E(g, h) => self.everyone(g, &sub(h)),
            Formula::EPow(g, k, h) => {
                let mut cur = sub(h);
                for _ in 0..*k {
                    cur = self.everyone(g, &cur);
                }
                cur
            }
            Formula::D(g, h) => self.distributed(g, &sub(h)),
            Formula::C(g, h) => self.common(g, &sub(h)),
            Formula::EEps(g, e, h) => self.everyone_eps(g, *e, &sub(h)),
            Formula::EDiamond(g, h) => self.everyone_eventually(g, &sub(h)),
            Formula::KTime(a, t, h) => self.knows_at_clock(a.0, *t, &sub(h)),
            Formula::ETime(g, t, h) => self.everyone_at_clock(g, *t, &sub(h)),
            Formula::CEps(g, e, h) => {
                let inner = sub(h);
                self.greatest(&|x| self.everyone_eps(g, *e, &and(&inner, x)))
            }
            Formula::CDiamond(g, h) => {
                let inner = sub(h);
                self.greatest(&|x| self.everyone_eventually(g, &and(&inner, x)))
            }
            Formula::CTime(g, t, h) => {
                let inner = sub(h);
                self.greatest(&|x| self.everyone_at_clock(g, *t, &and(&inner, x)))
            }
            Formula::Nu(x, body) => self.greatest(&|b| {
                let mut env = env.clone();
                env.insert(x.clone(), b.clone());
                self.eval_in(body, &env)
            }),
        }
    }
}

pub fn and(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

pub fn or(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| *x || *y).collect()
}

pub fn to_bits(s: &PointSet) -> Bits {
    (0..s.universe()).map(|i| s.contains(i)).collect()
}

pub fn labels(sys: &System, b: &Bits) -> Vec<String> {
    sys.points().zip(b).filter(|(_, &x)| x).map(|(p, _)| sys.label(p)).collect()
}
