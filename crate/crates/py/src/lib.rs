//! Python bindings.

use std::collections::BTreeMap;

use engine::eval::{axiom_suite, eval, AxiomOptions, AxiomStatus, Model, VarEnv};
use engine::logic::{self, Formula};
use engine::protocol::{
    check_ng1, check_ng1prime, check_ng2, check_temporal_imprecision, generate_runs as generate, protocol_by_name,
    DeliveryModel, InitialConfiguration,
};
use engine::runs::{AgentId, Time};
use engine::scenarios::{self, verify, At, MuddyParams, ScenarioManifest};
use engine::schema::{load_manifest, load_system, manifest_to_json, system_to_json};
use engine::views::{export_graph, AgentSet, ViewPolicy};
use engine::PointSet;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse(text: &str) -> PyResult<Formula> {
    logic::parse(text).map_err(|e| err(format!("formula {e}")))
}

/// A system of runs with a valuation and a view policy.
#[pyclass(module = "ckmc", frozen)]
struct System {
    model: Model,
}

impl System {
    fn eval_set(&self, formula: &str) -> PyResult<PointSet> {
        eval(&self.model, &parse(formula)?, &VarEnv::new()).map_err(err)
    }
}

#[pymethods]
impl System {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(System { model: load_system(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        system_to_json(&self.model)
    }

    #[getter]
    fn agents(&self) -> Vec<String> {
        self.model.system().agent_names().to_vec()
    }

    #[getter]
    fn horizon(&self) -> Time {
        self.model.system().horizon()
    }

    #[getter]
    fn run_ids(&self) -> Vec<String> {
        self.model.system().runs().iter().map(|r| r.id.clone()).collect()
    }

    #[getter]
    fn props(&self) -> Vec<String> {
        self.model.valuation().names().map(String::from).collect()
    }

    #[getter]
    fn view(&self) -> String {
        self.model.policy().name()
    }

    /// Every point label, `run_id@t`, in index order.
    fn points(&self) -> Vec<String> {
        let sys = self.model.system();
        sys.points().map(|p| sys.label(p)).collect()
    }

    /// Labels of the points where `formula` holds.
    fn eval(&self, formula: &str) -> PyResult<Vec<String>> {
        Ok(self.eval_set(formula)?.labels(self.model.system()))
    }

    fn holds(&self, formula: &str, point: &str) -> PyResult<bool> {
        let sys = self.model.system();
        let p = sys.parse_point(point).map_err(err)?;
        Ok(self.eval_set(formula)?.contains(sys.point_index(p)))
    }

    /// The same runs and valuation under another view policy.
    fn with_view(&self, policy: &str) -> PyResult<Self> {
        let policy = ViewPolicy::parse(policy).ok_or_else(|| err(format!("unknown view policy `{policy}`")))?;
        let model = Model::new(self.model.system().clone(), self.model.valuation().clone(), policy).map_err(err)?;
        Ok(System { model })
    }

    /// A copy with proposition `name` true exactly at `points`.
    fn with_prop(&self, name: &str, points: Vec<String>) -> PyResult<Self> {
        if !logic::is_identifier(name) || logic::is_reserved(name) {
            return Err(err(format!("`{name}` is not a valid proposition name")));
        }
        let sys = self.model.system();
        let idx = points
            .iter()
            .map(|p| sys.parse_point(p).map(|p| sys.point_index(p)).map_err(err))
            .collect::<PyResult<Vec<_>>>()?;
        let mut val = self.model.valuation().clone();
        val.insert(name, PointSet::from_indices(sys.point_count(), idx));
        let model = Model::new(sys.clone(), val, self.model.policy().clone()).map_err(err)?;
        Ok(System { model })
    }

    #[pyo3(signature = (props=None, max_k=3, eps=vec![0, 1]))]
    fn axioms<'py>(&self, py: Python<'py>, props: Option<Vec<String>>, max_k: u32, eps: Vec<Time>) -> PyResult<Bound<'py, PyList>> {
        let props = props.unwrap_or_else(|| self.props());
        let report = axiom_suite(&self.model, &props, &AxiomOptions { max_k, eps }).map_err(err)?;
        let out = PyList::empty(py);
        for c in &report.checks {
            let d = PyDict::new(py);
            d.set_item("axiom", &c.axiom)?;
            d.set_item("formula", &c.formula)?;
            match &c.status {
                AxiomStatus::Pass => d.set_item("status", "pass")?,
                AxiomStatus::Fail { counterexample } => {
                    d.set_item("status", "fail")?;
                    d.set_item("counterexample", counterexample)?;
                }
                AxiomStatus::Info { valid } => {
                    d.set_item("status", "info")?;
                    d.set_item("valid", valid)?;
                }
            }
            out.append(d)?;
        }
        Ok(out)
    }

    /// Runs a structural check: `ng1`, `ng2`, `ng1prime` or `timp`.
    #[pyo3(signature = (which, delta=1))]
    fn check<'py>(&self, py: Python<'py>, which: &str, delta: Time) -> PyResult<Bound<'py, PyDict>> {
        let sys = self.model.system();
        let report = match which {
            "ng1" => check_ng1(sys),
            "ng2" => check_ng2(sys),
            "ng1prime" => check_ng1prime(sys),
            "timp" => check_temporal_imprecision(sys, delta),
            other => return Err(err(format!("unknown check `{other}`"))),
        }
        .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("condition", &report.condition)?;
        d.set_item("passed", report.passed())?;
        let violations: Vec<(String, Time, Option<usize>, String)> =
            report.violations.iter().map(|v| (v.run.clone(), v.time, v.agent.map(|a| a.0), v.detail.clone())).collect();
        d.set_item("violations", violations)?;
        d.set_item("note", &report.note)?;
        Ok(d)
    }

    /// DOT text of the indistinguishability graph for `group` (all agents by default).
    #[pyo3(signature = (group=None))]
    fn graph(&self, group: Option<Vec<usize>>) -> PyResult<String> {
        let agents: Vec<AgentId> = match group {
            Some(g) => {
                let n = self.model.system().agent_count();
                if let Some(&a) = g.iter().find(|&&a| a >= n) {
                    return Err(err(format!("agent {a} out of range (system has {n} agents)")));
                }
                g.into_iter().map(AgentId).collect()
            }
            None => AgentSet::all(self.model.system()).iter().collect(),
        };
        Ok(export_graph(self.model.index(), &agents))
    }

    fn __repr__(&self) -> String {
        let sys = self.model.system();
        format!(
            "System(agents={}, runs={}, horizon={}, view={})",
            sys.agent_count(),
            sys.runs().len(),
            sys.horizon(),
            self.model.policy().name()
        )
    }
}

/// A system together with expectations about it.
#[pyclass(module = "ckmc", frozen)]
struct Manifest {
    inner: ScenarioManifest,
}

#[pymethods]
impl Manifest {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Manifest { inner: load_manifest(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        manifest_to_json(&self.inner)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn system(&self) -> System {
        System { model: self.inner.model.clone() }
    }

    #[getter]
    fn expectations(&self) -> Vec<(String, String, bool, String)> {
        self.inner.expectations.iter().map(|e| (e.formula.clone(), at_text(&e.at), e.expected, e.claim.clone())).collect()
    }

    /// `{"passed": bool, "total": int, "failures": [(formula, at, expected, detail)]}`.
    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = verify(&self.inner);
        let d = PyDict::new(py);
        d.set_item("passed", report.passed())?;
        d.set_item("total", report.results.len())?;
        let failures: Vec<(String, String, bool, Option<String>)> = report
            .failures()
            .map(|r| (r.expectation.formula.clone(), at_text(&r.expectation.at), r.expectation.expected, r.detail.clone()))
            .collect();
        d.set_item("failures", failures)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Manifest({:?}, {} expectations)", self.inner.name, self.inner.expectations.len())
    }
}

fn at_text(at: &At) -> String {
    match at {
        At::All => "all".into(),
        At::Point(p) => p.clone(),
    }
}

/// Builds a named scenario; keyword arguments become its parameters.
#[pyfunction]
#[pyo3(signature = (name, **params))]
fn scenario(name: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Manifest> {
    let mut kv = BTreeMap::new();
    if let Some(p) = params {
        for (k, v) in p.iter() {
            kv.insert(k.extract::<String>()?, v.str()?.to_string().to_lowercase());
        }
    }
    Ok(Manifest { inner: scenarios::scenario_by_name(name, &kv).map_err(err)? })
}

#[pyfunction]
fn scenario_names() -> Vec<&'static str> {
    scenarios::SCENARIO_NAMES.to_vec()
}

/// Canonical text of a formula.
#[pyfunction]
fn parse_formula(text: &str) -> PyResult<String> {
    Ok(parse(text)?.to_string())
}

/// The formula with every common-knowledge operator written as a fixed point.
#[pyfunction]
fn expand_fixpoints(text: &str) -> PyResult<String> {
    Ok(logic::expand_fixpoints(&parse(text)?).to_string())
}

/// Muddy children answers: `{run_id: [[said yes, per child] per round]}`.
#[pyfunction]
#[pyo3(signature = (n, announce=true, rounds=None, staggered=false))]
fn muddy_answers(n: usize, announce: bool, rounds: Option<u32>, staggered: bool) -> PyResult<BTreeMap<String, Vec<Vec<bool>>>> {
    let p = MuddyParams { n, announce, rounds: rounds.unwrap_or(n as u32 + 1), staggered };
    Ok(scenarios::muddy_answers(&p).map_err(err)?.into_iter().map(|r| (r.id, r.yes)).collect())
}

/// Every run of a built-in protocol under a delivery model, with no
/// propositions. `delivery` is `not_guaranteed` (delays `low..=high`),
/// `unbounded` (at least `low`), `bounded_uncertain` (strictly between) or
/// `broadcast` (`low..=low+high`).
#[pyfunction]
#[pyo3(signature = (protocol, delivery, low, high, agents, horizon, param=None, clocks=false))]
#[allow(clippy::too_many_arguments)]
fn generate_runs(
    protocol: &str,
    delivery: &str,
    low: Time,
    high: Time,
    agents: usize,
    horizon: Time,
    param: Option<i64>,
    clocks: bool,
) -> PyResult<System> {
    let p = protocol_by_name(protocol, param).ok_or_else(|| PyKeyError::new_err(format!("unknown protocol `{protocol}`")))?;
    let d = match delivery {
        "not_guaranteed" => DeliveryModel::NotGuaranteed { min_delay: low, max_delay: high },
        "unbounded" => DeliveryModel::Unbounded { min_delay: low },
        "bounded_uncertain" => DeliveryModel::BoundedUncertain { low, high },
        "broadcast" => DeliveryModel::SynchronousBroadcast { latency: low, spread: high },
        other => return Err(PyKeyError::new_err(format!("unknown delivery model `{other}`"))),
    };
    let mut config = InitialConfiguration::simple(agents);
    if clocks {
        config = config.with_perfect_clocks();
    }
    let sys = generate(p.as_ref(), &d, &[config], horizon).map_err(err)?;
    let model = Model::new(sys, Default::default(), ViewPolicy::CompleteHistory).map_err(err)?;
    Ok(System { model })
}

#[pymodule]
fn ckmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<System>()?;
    m.add_class::<Manifest>()?;
    m.add_function(wrap_pyfunction!(scenario, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(parse_formula, m)?)?;
    m.add_function(wrap_pyfunction!(expand_fixpoints, m)?)?;
    m.add_function(wrap_pyfunction!(muddy_answers, m)?)?;
    m.add_function(wrap_pyfunction!(generate_runs, m)?)?;
    Ok(())
}
