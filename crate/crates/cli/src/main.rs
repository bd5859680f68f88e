use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use ckmc::eval::{axiom_suite, eval, AxiomOptions, AxiomStatus, Model, VarEnv};
use ckmc::logic::parse;
use ckmc::protocol::{check_ng1, check_ng1prime, check_ng2, check_temporal_imprecision, CheckReport};
use ckmc::runs::{AgentId, Time};
use ckmc::scenarios::{scenario_by_name, verify, At, SCENARIO_NAMES};
use ckmc::schema::{load_manifest, load_system, manifest_to_json, system_to_json};
use ckmc::views::{export_graph, AgentSet, ViewPolicy};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "ckmc", version, about = "Knowledge and common knowledge over finite run-based systems")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Leave timing out of the report.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula at the given points, or at every point.
    #[command(group(ArgGroup::new("where").args(["at", "all"])))]
    Eval {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        formula: String,
        /// A point as `run_id@t`. Repeatable.
        #[arg(long)]
        at: Vec<String>,
        /// Every point; the default when no `--at` is given.
        #[arg(long)]
        all: bool,
        /// Override the view policy stored in the system file.
        #[arg(long)]
        view: Option<String>,
    },
    /// Generate a scenario manifest.
    Scenario {
        name: String,
        /// A parameter as `key=value`. Repeatable.
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, String)>,
        /// Directory for `<name>.system.json` and `<name>.manifest.json`; the
        /// manifest goes to standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the S5 axioms and the knowledge hierarchy on a system.
    Axioms {
        #[arg(long)]
        system: PathBuf,
        /// Comma-separated propositions; all of them when omitted.
        #[arg(long, value_delimiter = ',')]
        props: Vec<String>,
        #[arg(long, default_value_t = 3)]
        max_k: u32,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        eps: Vec<Time>,
        #[arg(long)]
        view: Option<String>,
    },
    /// Check a structural condition of the runs.
    Check {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_enum)]
        which: Condition,
        /// Shift used by the temporal-imprecision check.
        #[arg(long, default_value_t = 1)]
        delta: Time,
    },
    /// Export the indistinguishability graph as DOT.
    Graph {
        #[arg(long)]
        system: PathBuf,
        /// Agents as indices or names, e.g. `0,1` or `{A,B}`; all when omitted.
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        view: Option<String>,
    },
    /// Check every expectation of a manifest.
    Verify {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Condition {
    Ng1,
    Ng2,
    Ng1prime,
    Timp,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Exit 1: bad formula or failed check. Exit 2: I/O or schema.
enum Failure {
    Logic(String),
    Input(String),
}

struct Output {
    text: String,
    json: Value,
    ok: bool,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path, view: Option<&str>) -> Result<Model, Failure> {
    let model = load_system(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    match view {
        None => Ok(model),
        Some(v) => {
            let policy = ViewPolicy::parse(v).ok_or_else(|| Failure::Input(format!("unknown view policy `{v}`")))?;
            Model::new(model.system().clone(), model.valuation().clone(), policy).map_err(|e| Failure::Input(e.to_string()))
        }
    }
}

fn parse_group(model: &Model, text: &str) -> Result<AgentSet, Failure> {
    let sys = model.system();
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    let mut agents = Vec::new();
    for tok in inner.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let a = match tok.parse::<usize>() {
            Ok(i) => i,
            Err(_) => sys
                .agent_names()
                .iter()
                .position(|n| n == tok)
                .ok_or_else(|| Failure::Logic(format!("unknown agent `{tok}`")))?,
        };
        if a >= sys.agent_count() {
            return Err(Failure::Logic(format!("agent {a} out of range (system has {} agents)", sys.agent_count())));
        }
        agents.push(AgentId(a));
    }
    AgentSet::new(agents).map_err(|_| Failure::Logic("empty group".into()))
}

fn check_json(r: &CheckReport) -> Value {
    json!({
        "condition": r.condition,
        "passed": r.passed(),
        "violations": r.violations.iter().map(|v| json!({
            "run": v.run, "time": v.time, "agent": v.agent.map(|a| a.0), "detail": v.detail,
        })).collect::<Vec<_>>(),
        "note": r.note,
    })
}

fn run(cmd: Command) -> Result<Output, Failure> {
    match cmd {
        Command::Eval { system, formula, at, all, view } => {
            let model = load(&system, view.as_deref())?;
            let f = parse(&formula).map_err(|e| Failure::Logic(format!("formula {e}")))?;
            let set = eval(&model, &f, &VarEnv::new()).map_err(|e| Failure::Logic(e.to_string()))?;
            let sys = model.system();
            let points = if all || at.is_empty() {
                sys.points().collect::<Vec<_>>()
            } else {
                at.iter()
                    .map(|p| sys.parse_point(p).map_err(|e| Failure::Logic(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let rows: Vec<(String, bool)> =
                points.iter().map(|&p| (sys.label(p), set.contains(sys.point_index(p)))).collect();
            let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(5).max(5);
            let mut text = format!("formula: {f}\n{:<width$}  value\n", "point");
            for (label, v) in &rows {
                let _ = writeln!(text, "{label:<width$}  {v}");
            }
            let holding = rows.iter().filter(|(_, v)| *v).count();
            let _ = writeln!(text, "holds at {holding} of {} points", rows.len());
            let json = json!({
                "formula": f.to_string(),
                "points": rows.iter().map(|(l, v)| json!({"point": l, "holds": v})).collect::<Vec<_>>(),
                "holds_count": holding,
            });
            Ok(Output { text, json, ok: true })
        }
        Command::Scenario { name, params, out } => {
            let kv: BTreeMap<String, String> = params.into_iter().collect();
            let m = scenario_by_name(&name, &kv).map_err(|e| {
                Failure::Logic(format!("{e} (scenarios: {})", SCENARIO_NAMES.join(", ")))
            })?;
            let manifest = manifest_to_json(&m);
            match out {
                None => Ok(Output { text: format!("{manifest}\n"), json: serde_json::from_str(&manifest).expect("valid json"), ok: true }),
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
                    let sys_path = dir.join(format!("{}.system.json", m.name));
                    let man_path = dir.join(format!("{}.manifest.json", m.name));
                    write(&sys_path, &(system_to_json(&m.model) + "\n"))?;
                    write(&man_path, &(manifest + "\n"))?;
                    let text = format!(
                        "{}: {} runs, horizon {}, {} expectations\nwrote {}\nwrote {}\n",
                        m.name,
                        m.model.system().runs().len(),
                        m.model.system().horizon(),
                        m.expectations.len(),
                        sys_path.display(),
                        man_path.display()
                    );
                    let json = json!({
                        "name": m.name,
                        "system": sys_path.display().to_string(),
                        "manifest": man_path.display().to_string(),
                        "expectations": m.expectations.len(),
                    });
                    Ok(Output { text, json, ok: true })
                }
            }
        }
        Command::Axioms { system, props, max_k, eps, view } => {
            let model = load(&system, view.as_deref())?;
            let props = if props.is_empty() { model.valuation().names().map(String::from).collect() } else { props };
            let report = axiom_suite(&model, &props, &AxiomOptions { max_k, eps }).map_err(|e| Failure::Logic(e.to_string()))?;
            let failed = report.failures().count();
            let text = format!("{report}{} checks, {failed} failed\n", report.checks.len());
            let json = json!({
                "checks": report.checks.iter().map(|c| {
                    let (status, extra) = match &c.status {
                        AxiomStatus::Pass => ("pass", Value::Null),
                        AxiomStatus::Fail { counterexample } => ("fail", json!(counterexample)),
                        AxiomStatus::Info { valid } => ("info", json!(valid)),
                    };
                    json!({"axiom": c.axiom, "formula": c.formula, "status": status, "detail": extra})
                }).collect::<Vec<_>>(),
                "failed": failed,
            });
            Ok(Output { text, json, ok: failed == 0 })
        }
        Command::Check { system, which, delta } => {
            let model = load(&system, None)?;
            let sys = model.system();
            let report = match which {
                Condition::Ng1 => check_ng1(sys),
                Condition::Ng2 => check_ng2(sys),
                Condition::Ng1prime => check_ng1prime(sys),
                Condition::Timp => check_temporal_imprecision(sys, delta),
            }
            .map_err(|e| Failure::Logic(e.to_string()))?;
            Ok(Output { text: report.to_string(), json: check_json(&report), ok: report.passed() })
        }
        Command::Graph { system, group, out, view } => {
            let model = load(&system, view.as_deref())?;
            let g = match group {
                Some(g) => parse_group(&model, &g)?,
                None => AgentSet::all(model.system()),
            };
            let agents: Vec<AgentId> = g.iter().collect();
            let dot = export_graph(model.index(), &agents);
            match out {
                None => Ok(Output { json: json!({ "dot": dot }), text: dot, ok: true }),
                Some(path) => {
                    write(&path, &dot)?;
                    Ok(Output {
                        text: format!("wrote {}\n", path.display()),
                        json: json!({ "file": path.display().to_string() }),
                        ok: true,
                    })
                }
            }
        }
        Command::Verify { manifest } => {
            let m = load_manifest(&read(&manifest)?).map_err(|e| Failure::Input(format!("{}: {e}", manifest.display())))?;
            let report = verify(&m);
            let json = json!({
                "name": report.name,
                "passed": report.passed(),
                "total": report.results.len(),
                "failures": report.failures().map(|r| json!({
                    "formula": r.expectation.formula,
                    "at": match &r.expectation.at { At::All => "all".to_string(), At::Point(p) => p.clone() },
                    "expected": r.expectation.expected,
                    "claim": r.expectation.claim,
                    "detail": r.detail,
                })).collect::<Vec<_>>(),
            });
            let mut text = report.to_string();
            if report.passed() {
                text.push_str("all expectations met\n");
            }
            Ok(Output { text, json, ok: report.passed() })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(cli.command) {
        Ok(out) => {
            let ms = start.elapsed().as_secs_f64() * 1000.0;
            match cli.format {
                Format::Text => {
                    print!("{}", out.text);
                    if !cli.no_timing {
                        println!("elapsed: {ms:.1} ms");
                    }
                }
                Format::Json => {
                    let mut v = out.json;
                    if let (false, Value::Object(map)) = (cli.no_timing, &mut v) {
                        map.insert("elapsed_ms".into(), json!(ms));
                    }
                    println!("{}", serde_json::to_string_pretty(&v).expect("json"));
                }
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Logic(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
