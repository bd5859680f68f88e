//! JSON files for systems (with propositions and a view policy) and for
//! scenario manifests. Both carry `"schema": 1`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::eval::{Model, Valuation};
use crate::pointset::PointSet;
use crate::runs::{AgentId, ClockValue, Event, EventKind, Run, System, Time, TimedEvent};
use crate::scenarios::{At, Expectation, ScenarioManifest};
use crate::views::ViewPolicy;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl LoadError {
    pub fn path(&self) -> &str {
        match self {
            LoadError::Syntax { path, .. } | LoadError::Invalid { path, .. } => path,
        }
    }
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> LoadError {
    LoadError::Invalid { path: path.into(), message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindFile {
    Send,
    Receive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventFile {
    pub time: Time,
    pub agent: usize,
    pub kind: KindFile,
    pub peer: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub id: String,
    pub wake_up: Vec<Time>,
    pub initial_state: Vec<String>,
    #[serde(default)]
    pub events: Vec<EventFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<Vec<Vec<Option<ClockValue>>>>,
}

/// Agents are given by count or by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgentsFile {
    Count(usize),
    Names(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub schema: u32,
    pub agents: AgentsFile,
    pub horizon: Time,
    pub runs: Vec<RunFile>,
    /// Proposition name to run id to the times at which it holds.
    #[serde(default)]
    pub props: BTreeMap<String, BTreeMap<String, Vec<Time>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectationFile {
    pub formula: String,
    pub at: String,
    pub expected: bool,
    #[serde(default)]
    pub claim: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, Value>,
    pub system: SystemFile,
    pub expectations: Vec<ExpectationFile>,
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        LoadError::Syntax { path: if path == "." { "$".into() } else { path }, message: e.into_inner().to_string() }
    })
}

fn check_schema(version: u32, path: &str) -> Result<(), LoadError> {
    if version != SCHEMA_VERSION {
        return Err(invalid(path, format!("unsupported schema version {version}, expected {SCHEMA_VERSION}")));
    }
    Ok(())
}

impl SystemFile {
    pub fn from_model(model: &Model) -> SystemFile {
        let sys = model.system();
        let runs = sys
            .runs()
            .iter()
            .map(|r| {
                let mut events: Vec<EventFile> = r
                    .timeline
                    .iter()
                    .enumerate()
                    .flat_map(|(agent, line)| {
                        line.iter().map(move |e| EventFile {
                            time: e.time,
                            agent,
                            kind: match e.event.kind {
                                EventKind::Send => KindFile::Send,
                                EventKind::Receive => KindFile::Receive,
                            },
                            peer: e.event.peer.0,
                            message: e.event.message.clone(),
                        })
                    })
                    .collect();
                events.sort_by_key(|e| (e.time, e.agent));
                RunFile {
                    id: r.id.clone(),
                    wake_up: r.wake_up.clone(),
                    initial_state: r.initial_state.clone(),
                    events,
                    clock: r.clock.clone(),
                }
            })
            .collect();
        let props = model
            .valuation()
            .iter()
            .map(|(name, set)| {
                let mut by_run: BTreeMap<String, Vec<Time>> = BTreeMap::new();
                for p in set.points(sys) {
                    by_run.entry(sys.runs()[p.run].id.clone()).or_default().push(p.time);
                }
                (name.to_string(), by_run)
            })
            .collect();
        let view = match model.policy() {
            ViewPolicy::CompleteHistory => None,
            other => Some(other.name()),
        };
        SystemFile {
            schema: SCHEMA_VERSION,
            agents: AgentsFile::Names(sys.agent_names().to_vec()),
            horizon: sys.horizon(),
            runs,
            props,
            view,
        }
    }

    /// Builds the model, reporting problems with the path of the offending
    /// field relative to `base`.
    pub fn to_model(&self, base: &str) -> Result<Model, LoadError> {
        let at = |rest: &str| if base.is_empty() { rest.to_string() } else { format!("{base}.{rest}") };
        check_schema(self.schema, &at("schema"))?;
        let names = match &self.agents {
            AgentsFile::Count(n) => (0..*n).map(|i| format!("p{i}")).collect(),
            AgentsFile::Names(v) => v.clone(),
        };
        let n = names.len();
        if n == 0 {
            return Err(invalid(at("agents"), "system needs at least one agent"));
        }
        let horizon = self.horizon;
        let mut ids = HashSet::new();
        let mut runs = Vec::with_capacity(self.runs.len());
        for (ri, rf) in self.runs.iter().enumerate() {
            let rp = |f: &str| at(&format!("runs[{ri}].{f}"));
            if !ids.insert(rf.id.as_str()) {
                return Err(invalid(rp("id"), format!("duplicate run id `{}`", rf.id)));
            }
            if rf.id.contains('@') {
                return Err(invalid(rp("id"), "run ids may not contain `@`"));
            }
            if rf.wake_up.len() != n {
                return Err(invalid(rp("wake_up"), format!("has {} entries, expected {n}", rf.wake_up.len())));
            }
            if let Some(w) = rf.wake_up.iter().position(|&w| w > horizon) {
                return Err(invalid(rp(&format!("wake_up[{w}]")), format!("beyond horizon {horizon}")));
            }
            if rf.initial_state.len() != n {
                return Err(invalid(rp("initial_state"), format!("has {} entries, expected {n}", rf.initial_state.len())));
            }
            let mut timeline = vec![Vec::new(); n];
            for (ei, e) in rf.events.iter().enumerate() {
                let ep = |f: &str| rp(&format!("events[{ei}].{f}"));
                if e.agent >= n {
                    return Err(invalid(ep("agent"), format!("agent {} out of range (system has {n} agents)", e.agent)));
                }
                if e.peer >= n {
                    return Err(invalid(ep("peer"), format!("agent {} out of range (system has {n} agents)", e.peer)));
                }
                if e.time > horizon {
                    return Err(invalid(ep("time"), format!("{} is beyond horizon {horizon}", e.time)));
                }
                if e.time < rf.wake_up[e.agent] {
                    return Err(invalid(ep("time"), format!("{} is before agent {}'s wake-up", e.time, e.agent)));
                }
                let event = match e.kind {
                    KindFile::Send => Event::send(AgentId(e.peer), e.message.clone()),
                    KindFile::Receive => Event::receive(AgentId(e.peer), e.message.clone()),
                };
                timeline[e.agent].push(TimedEvent { time: e.time, event });
            }
            if let Some(clock) = &rf.clock {
                if clock.len() != n {
                    return Err(invalid(rp("clock"), format!("has {} rows, expected {n}", clock.len())));
                }
                for (a, row) in clock.iter().enumerate() {
                    if row.len() != horizon as usize + 1 {
                        return Err(invalid(
                            rp(&format!("clock[{a}]")),
                            format!("has {} readings, expected {}", row.len(), horizon + 1),
                        ));
                    }
                }
            }
            let mut run = Run::builder(rf.id.clone(), n);
            for a in 0..n {
                run = run.wake(a, rf.wake_up[a]).initial(a, rf.initial_state[a].clone());
            }
            let mut run = run.build();
            run.timeline = timeline;
            run.clock = rf.clock.clone();
            runs.push(run);
        }
        let sys = System::new(names, horizon, runs).map_err(|e| invalid(at("runs"), e.to_string()))?;
        let mut val = Valuation::new();
        for (name, by_run) in &self.props {
            let pp = |f: &str| at(&format!("props.{name}{f}"));
            if crate::logic::is_reserved(name) || !crate::logic::is_identifier(name) {
                return Err(invalid(pp(""), format!("`{name}` is not a valid proposition name")));
            }
            let mut set = PointSet::empty(sys.point_count());
            for (run_id, times) in by_run {
                let Some(run) = sys.run_index(run_id) else {
                    return Err(invalid(pp(&format!(".{run_id}")), format!("unknown run `{run_id}`")));
                };
                for (ti, &t) in times.iter().enumerate() {
                    if t > horizon {
                        return Err(invalid(pp(&format!(".{run_id}[{ti}]")), format!("{t} is beyond horizon {horizon}")));
                    }
                    set.insert(sys.point_index(crate::runs::Point { run, time: t }));
                }
            }
            val.insert(name.clone(), set);
        }
        let policy = match &self.view {
            None => ViewPolicy::CompleteHistory,
            Some(v) => ViewPolicy::parse(v).ok_or_else(|| invalid(at("view"), format!("unknown view policy `{v}`")))?,
        };
        Model::new(sys, val, policy).map_err(|e| invalid(at("view"), e.to_string()))
    }
}

pub fn load_system(text: &str) -> Result<Model, LoadError> {
    let file: SystemFile = from_json(text)?;
    file.to_model("")
}

pub fn system_to_json(model: &Model) -> String {
    serde_json::to_string_pretty(&SystemFile::from_model(model)).expect("system serializes")
}

impl ManifestFile {
    pub fn from_manifest(m: &ScenarioManifest) -> ManifestFile {
        ManifestFile {
            schema: SCHEMA_VERSION,
            name: m.name.clone(),
            parameters: m.parameters.clone(),
            system: SystemFile::from_model(&m.model),
            expectations: m
                .expectations
                .iter()
                .map(|e| ExpectationFile {
                    formula: e.formula.clone(),
                    at: e.at.to_string(),
                    expected: e.expected,
                    claim: e.claim.clone(),
                })
                .collect(),
        }
    }

    pub fn to_manifest(&self) -> Result<ScenarioManifest, LoadError> {
        check_schema(self.schema, "schema")?;
        let model = self.system.to_model("system")?;
        let expectations = self
            .expectations
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let at = At::parse(&e.at);
                if let At::Point(p) = &at {
                    model.system().parse_point(p).map_err(|err| invalid(format!("expectations[{i}].at"), err.to_string()))?;
                }
                Ok(Expectation { formula: e.formula.clone(), at, expected: e.expected, claim: e.claim.clone() })
            })
            .collect::<Result<Vec<_>, LoadError>>()?;
        Ok(ScenarioManifest { name: self.name.clone(), parameters: self.parameters.clone(), model, expectations })
    }
}

pub fn load_manifest(text: &str) -> Result<ScenarioManifest, LoadError> {
    let file: ManifestFile = from_json(text)?;
    file.to_manifest()
}

pub fn manifest_to_json(m: &ScenarioManifest) -> String {
    serde_json::to_string_pretty(&ManifestFile::from_manifest(m)).expect("manifest serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{coordinated_attack, verify};

    const SMALL: &str = r#"{
        "schema": 1,
        "agents": 2,
        "horizon": 2,
        "runs": [
            {"id": "a", "wake_up": [0, 0], "initial_state": ["x", ""],
             "events": [{"time": 0, "agent": 0, "kind": "send", "peer": 1, "message": "m"},
                        {"time": 1, "agent": 1, "kind": "receive", "peer": 0, "message": "m"}]},
            {"id": "b", "wake_up": [0, 0], "initial_state": ["y", ""]}
        ],
        "props": {"p": {"a": [0, 1, 2]}}
    }"#;

    #[test]
    fn round_trip_system() {
        let m = load_system(SMALL).unwrap();
        assert_eq!(m.system().agent_count(), 2);
        assert_eq!(m.valuation().get("p").unwrap().len(), 3);
        let again = load_system(&system_to_json(&m)).unwrap();
        assert_eq!(again.system(), m.system());
        assert_eq!(again.valuation(), m.valuation());
    }

    #[test]
    fn errors_name_the_field() {
        let bad = SMALL.replace(r#""peer": 1"#, r#""peer": 7"#);
        assert_eq!(load_system(&bad).unwrap_err().path(), "runs[0].events[0].peer");
        let bad = SMALL.replace(r#""kind": "send""#, r#""kind": "shout""#);
        assert_eq!(load_system(&bad).unwrap_err().path(), "runs[0].events[0].kind");
        let bad = SMALL.replace(r#""a": [0, 1, 2]"#, r#""a": [0, 9]"#);
        assert_eq!(load_system(&bad).unwrap_err().path(), "props.p.a[1]");
        let bad = SMALL.replace(r#""schema": 1"#, r#""schema": 2"#);
        assert_eq!(load_system(&bad).unwrap_err().path(), "schema");
    }

    #[test]
    fn manifest_round_trip_verifies() {
        let m = coordinated_attack(2, 4).unwrap();
        let loaded = load_manifest(&manifest_to_json(&m)).unwrap();
        assert_eq!(loaded.expectations, m.expectations);
        assert!(verify(&loaded).passed());
    }
}
