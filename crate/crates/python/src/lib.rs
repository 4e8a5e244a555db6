//! Python bindings: games and leader plans as objects, solvers as functions.

use std::fmt::Display;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use safe_sse::blueprint::{compute_blueprint, BlueprintMethod};
use safe_sse::efg::{GameTree, RealizationPlan, SequenceForm};
use safe_sse::gadget::transform_subgame;
use safe_sse::harness::{self, any_unsafe, run_experiment, safe_search, write_csv, ExperimentConfig};
use safe_sse::io::gen::GameSpec;
use safe_sse::io::{parse_game, parse_plan, serialize_game, serialize_plan};
use safe_sse::optim::MilpOptions;
use safe_sse::search::{build_full_milp, PartitionScheme, SearchContext};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A two-player extensive-form game.
#[pyclass(module = "safe_sse_py", frozen)]
pub struct Game {
    tree: GameTree,
}

#[pymethods]
impl Game {
    /// Builds a game from a generator spec such as
    /// `{"family": "goofspiel", "n": 3, "seed": 0}`.
    #[staticmethod]
    fn generate(spec: &str) -> PyResult<Game> {
        let spec: GameSpec = serde_json::from_str(spec).map_err(value_err)?;
        Ok(Game {
            tree: spec.generate().map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Game> {
        Ok(Game {
            tree: parse_game(text).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        serialize_game(&self.tree)
    }

    #[getter]
    fn name(&self) -> String {
        self.tree.name().to_string()
    }

    /// Node, infoset, leader sequence and follower sequence counts.
    fn sizes(&self) -> PyResult<(usize, usize, usize, usize)> {
        let sf = SequenceForm::new(&self.tree).map_err(value_err)?;
        Ok((
            self.tree.num_nodes(),
            self.tree.infosets().len(),
            sf.leader().num_sequences(),
            sf.follower().num_sequences(),
        ))
    }

    fn __repr__(&self) -> String {
        format!("Game({:?}, {} nodes)", self.tree.name(), self.tree.num_nodes())
    }
}

/// A leader realization plan, indexed by leader sequence.
#[pyclass(module = "safe_sse_py", frozen)]
pub struct Plan {
    plan: RealizationPlan,
    text: String,
}

#[pymethods]
impl Plan {
    #[staticmethod]
    fn from_json(game: &Game, text: &str) -> PyResult<Plan> {
        let sf = SequenceForm::new(&game.tree).map_err(value_err)?;
        let plan = parse_plan(text, sf.leader()).map_err(value_err)?;
        Ok(Plan::new(&game.tree, plan))
    }

    fn to_json(&self) -> String {
        self.text.clone()
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.plan.probs.clone()
    }

    fn __len__(&self) -> usize {
        self.plan.len()
    }

    fn __repr__(&self) -> String {
        format!("Plan({} sequences)", self.plan.len())
    }
}

impl Plan {
    fn new(game: &GameTree, plan: RealizationPlan) -> Plan {
        Plan {
            text: serialize_plan(game, &plan),
            plan,
        }
    }
}

fn context(game: &Game, plan: &Plan, scheme: &str, alpha: f64, beta: f64) -> PyResult<SearchContext> {
    let scheme: PartitionScheme = scheme.parse().map_err(value_err)?;
    SearchContext::new(&game.tree, &plan.plan, &scheme, alpha, beta).map_err(value_err)
}

/// Blueprint plan by method (`zerosum`, `stage-sse` or `uniform`) and the
/// value of the problem it solves, if any.
#[pyfunction]
fn blueprint(py: Python<'_>, game: &Game, method: &str) -> PyResult<(Plan, Option<f64>)> {
    let method: BlueprintMethod = method.parse().map_err(value_err)?;
    let bp = py.detach(|| compute_blueprint(&game.tree, method)).map_err(value_err)?;
    Ok((Plan::new(&game.tree, bp.plan), bp.value))
}

/// Leader and follower values of `plan` against the follower's best response.
#[pyfunction]
fn evaluate(game: &Game, plan: &Plan) -> PyResult<(f64, f64)> {
    let sf = SequenceForm::new(&game.tree).map_err(value_err)?;
    let ev = harness::evaluate(&sf, &plan.plan).map_err(value_err)?;
    Ok((ev.leader, ev.follower))
}

/// Refines `plan` in every subgame of `scheme` and returns a dict with the
/// composed plan, both values and per-subgame results.
#[pyfunction]
#[pyo3(signature = (game, plan, scheme = "whole-game", alpha = 0.5, beta = 1.0, time_limit = 10.0))]
fn search<'py>(
    py: Python<'py>,
    game: &Game,
    plan: &Plan,
    scheme: &str,
    alpha: f64,
    beta: f64,
    time_limit: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let ctx = context(game, plan, scheme, alpha, beta)?;
    let opts = MilpOptions::with_time_limit(time_limit);
    let outcome = py.detach(|| safe_search(&ctx, &opts)).map_err(value_err)?;
    let base = harness::evaluate(&ctx.sf, &ctx.blueprint).map_err(value_err)?;
    let refined = harness::evaluate(&ctx.sf, &outcome.plan).map_err(value_err)?;
    let subgames = outcome
        .solutions
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("subgame", s.subgame)?;
            d.set_item("status", format!("{:?}", s.status))?;
            d.set_item("objective", s.objective)?;
            d.set_item("blueprint_objective", s.blueprint_objective)?;
            d.set_item("improved", s.improved)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let out = PyDict::new(py);
    out.set_item("plan", Plan::new(&game.tree, outcome.plan))?;
    out.set_item("blueprint_ev", base.leader)?;
    out.set_item("search_ev", refined.leader)?;
    out.set_item("subgames", subgames)?;
    Ok(out)
}

/// Gadget game of subgame `subgame`.
#[pyfunction]
#[pyo3(signature = (game, plan, subgame, scheme = "whole-game", alpha = 0.5, beta = 1.0, sentinel = None))]
fn gadget(
    game: &Game,
    plan: &Plan,
    subgame: usize,
    scheme: &str,
    alpha: f64,
    beta: f64,
    sentinel: Option<f64>,
) -> PyResult<Game> {
    let ctx = context(game, plan, scheme, alpha, beta)?;
    if subgame >= ctx.num_subgames() {
        return Err(value_err(format!(
            "subgame {subgame} out of range: {} subgames",
            ctx.num_subgames()
        )));
    }
    let g = transform_subgame(&game.tree, &ctx, subgame, sentinel).map_err(value_err)?;
    Ok(Game { tree: g.game })
}

/// Exact strong Stackelberg equilibrium by MILP: value, leader plan and status.
#[pyfunction]
#[pyo3(signature = (game, time_limit = 60.0))]
fn full_game_sse(py: Python<'_>, game: &Game, time_limit: f64) -> PyResult<(f64, Plan, String)> {
    let sf = SequenceForm::new(&game.tree).map_err(value_err)?;
    let opts = MilpOptions::with_time_limit(time_limit);
    let sol = py
        .detach(|| build_full_milp(&sf).solve(&sf, None, &opts))
        .map_err(value_err)?;
    Ok((
        sol.objective,
        Plan::new(&game.tree, sol.plan),
        format!("{:?}", sol.status),
    ))
}

/// Runs an experiment config given as JSON text. Returns the result CSV and
/// whether any run with beta = 1 came out below its blueprint.
#[pyfunction]
fn run_config(py: Python<'_>, config: &str) -> PyResult<(String, bool)> {
    let cfg = ExperimentConfig::parse(config).map_err(value_err)?;
    let results = py.detach(|| run_experiment(&cfg)).map_err(value_err)?;
    let rows: Vec<_> = results.into_iter().map(|r| r.row).collect();
    let mut csv = Vec::new();
    write_csv(&rows, &mut csv).map_err(value_err)?;
    Ok((String::from_utf8(csv).map_err(value_err)?, any_unsafe(&rows)))
}

#[pymodule]
fn safe_sse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Game>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(blueprint, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(gadget, m)?)?;
    m.add_function(wrap_pyfunction!(full_game_sse, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
