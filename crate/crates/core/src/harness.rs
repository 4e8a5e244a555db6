//! End-to-end experiments: blueprint, search over every subgame, composition
//! and exact evaluation.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::blueprint::{compute_blueprint, BlueprintMethod};
use crate::efg::{GameTree, RealizationPlan, SequenceForm, FLOW_TOL};
use crate::error::{Error, Result};
use crate::gadget::naive_subgame_game;
use crate::io::gen::GameSpec;
use crate::io::parse_game;
use crate::optim::{MilpOptions, SolveStatus};
use crate::response::best_response;
use crate::search::{
    build_full_milp, check_params, LocalPlan, PartitionScheme, SearchContext, SubgamePartition, SubgameSolution,
};

pub const SCHEMA_VERSION: u32 = 1;
/// Slack allowed when comparing search against blueprint values.
pub const SAFETY_TOL: f64 = 1e-6;

/// Blueprint probabilities outside the subgames; inside subgame `j` the
/// entry probability times the refined local plan.
pub fn compose_strategy(
    sf: &SequenceForm,
    blueprint: &RealizationPlan,
    partition: &SubgamePartition,
    plans: &[LocalPlan],
) -> Result<RealizationPlan> {
    let t1 = sf.leader();
    let mut probs = blueprint.probs.clone();
    for plan in plans {
        for &(s, p) in &plan.probs {
            if let Some(entry) = partition.seq_entry(sf, crate::efg::Player::Leader, s) {
                probs[s] = blueprint.probs[entry] * p;
            }
        }
    }
    let out = RealizationPlan { owner: t1.owner, probs };
    out.check(t1, FLOW_TOL * 1e3)
        .map_err(|e| Error::PlanMismatch(format!("composed plan fails the flow check: {e}")))?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub leader: f64,
    pub follower: f64,
    pub response: RealizationPlan,
}

/// Leader and follower values against the follower's exact best response.
pub fn evaluate(sf: &SequenceForm, plan: &RealizationPlan) -> Result<Evaluation> {
    let br = best_response(sf, plan)?;
    let (leader, follower) = crate::efg::expected_payoffs(sf, plan, &br.plan)?;
    Ok(Evaluation {
        leader,
        follower,
        response: br.plan,
    })
}

/// Re-solves every subgame as a fresh game without bounds and composes.
pub fn naive_search(
    game: &GameTree,
    blueprint: &RealizationPlan,
    scheme: &PartitionScheme,
    opts: &MilpOptions,
) -> Result<RealizationPlan> {
    let ctx = SearchContext::new(game, blueprint, scheme, 0.5, 1.0)?;
    naive_search_in(game, &ctx, opts)
}

pub fn naive_search_in(game: &GameTree, ctx: &SearchContext, opts: &MilpOptions) -> Result<RealizationPlan> {
    let mut plans = Vec::new();
    for j in 0..ctx.num_subgames() {
        if ctx.quantities[j].eta == 0.0 {
            continue;
        }
        let g = naive_subgame_game(game, ctx, j)?;
        let gsf = SequenceForm::new(&g.game)?;
        let sol = build_full_milp(&gsf).solve(&gsf, None, opts)?;
        plans.push(g.local_plan(ctx, &sol.plan)?);
    }
    compose_strategy(&ctx.sf, &ctx.blueprint, &ctx.partition, &plans)
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub solutions: Vec<SubgameSolution>,
    pub plan: RealizationPlan,
}

pub fn safe_search(ctx: &SearchContext, opts: &MilpOptions) -> Result<SearchOutcome> {
    let solutions = ctx.solve_all(opts)?;
    let plans: Vec<LocalPlan> = solutions.iter().map(|s| s.plan.clone()).collect();
    let plan = compose_strategy(&ctx.sf, &ctx.blueprint, &ctx.partition, &plans)?;
    Ok(SearchOutcome { solutions, plan })
}

/// Leader payoff of `plan` against `response` restricted to each subgame's leaves.
pub fn subgame_contributions(ctx: &SearchContext, plan: &RealizationPlan, response: &RealizationPlan) -> Vec<f64> {
    ctx.partition
        .subgames
        .iter()
        .map(|sg| {
            sg.leaves
                .iter()
                .map(|&l| {
                    let leaf = &ctx.sf.leaves[l];
                    leaf.chance * plan.probs[leaf.seqs[0]] * response.probs[leaf.seqs[1]] * leaf.payoffs[0]
                })
                .sum()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameSource {
    File(PathBuf),
    Generate(GameSpec),
}

fn default_instances() -> usize {
    1
}
fn default_alpha() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    1.0
}
fn default_subgame_limit() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSource,
    /// Generated games use seeds `seed, seed + 1, ...`.
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    pub blueprint: BlueprintMethod,
    pub scheme: PartitionScheme,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Seconds per subgame solve.
    #[serde(default = "default_subgame_limit")]
    pub subgame_time_limit: f64,
    /// Seconds for the full-game MILP; skipped when absent.
    #[serde(default)]
    pub full_game_time_limit: Option<f64>,
    #[serde(default)]
    pub naive: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_params(self.alpha, self.beta)?;
        if self.instances == 0 {
            return Err(Error::InvalidParameter("instances must be positive".into()));
        }
        let limits = std::iter::once(self.subgame_time_limit).chain(self.full_game_time_limit);
        for t in limits {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "time limits must be positive, got {t}"
                )));
            }
        }
        if matches!(self.game, GameSource::File(_)) && self.instances != 1 {
            return Err(Error::InvalidParameter("a game file gives exactly one instance".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn game(&self, instance: usize) -> Result<GameTree> {
        match &self.game {
            GameSource::File(p) => parse_game(&std::fs::read_to_string(p)?),
            GameSource::Generate(spec) => spec.with_seed(self.seed + instance as u64).generate(),
        }
    }
}

fn na(x: &Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// One CSV row. Wall times live in [`Timing`] so rows stay reproducible.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub game: String,
    pub instance: usize,
    pub seed: u64,
    pub blueprint_method: BlueprintMethod,
    pub scheme: String,
    pub alpha: f64,
    pub beta: f64,
    pub subgames: usize,
    pub improved_subgames: usize,
    pub timed_out_subgames: usize,
    pub blueprint_ev: f64,
    pub search_ev: f64,
    pub search_follower_ev: f64,
    #[serde(serialize_with = "ser_na")]
    pub full_ev: Option<f64>,
    pub full_status: String,
    #[serde(serialize_with = "ser_na")]
    pub naive_ev: Option<f64>,
    pub objective_mismatches: usize,
    pub safety_flag: bool,
    pub potentially_unsafe: bool,
}

fn ser_na<S: serde::Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&na(x))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub instance: usize,
    pub blueprint_secs: f64,
    pub search_secs: f64,
    pub max_subgame_secs: f64,
    pub full_game_secs: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct InstanceResult {
    pub row: ResultRow,
    pub timing: Timing,
    pub composed: RealizationPlan,
    pub solutions: Vec<SubgameSolution>,
}

pub fn run_instance(cfg: &ExperimentConfig, instance: usize) -> Result<InstanceResult> {
    let game = cfg.game(instance)?;
    let t0 = Instant::now();
    let bp = compute_blueprint(&game, cfg.blueprint)?;
    let blueprint_secs = t0.elapsed().as_secs_f64();
    let ctx = SearchContext::new(&game, &bp.plan, &cfg.scheme, cfg.alpha, cfg.beta)?;
    let opts = MilpOptions::with_time_limit(cfg.subgame_time_limit);
    let t1 = Instant::now();
    let outcome = safe_search(&ctx, &opts)?;
    let search_secs = t1.elapsed().as_secs_f64();

    let base = evaluate(&ctx.sf, &bp.plan)?;
    let searched = evaluate(&ctx.sf, &outcome.plan)?;
    let realized = subgame_contributions(&ctx, &outcome.plan, &searched.response);
    let objective_mismatches = outcome
        .solutions
        .iter()
        .zip(&realized)
        .filter(|(s, r)| (s.objective - **r).abs() > SAFETY_TOL)
        .count();

    let (full_ev, full_status, full_game_secs) = match cfg.full_game_time_limit {
        None => (None, "skipped".to_string(), None),
        Some(limit) => {
            let sol = build_full_milp(&ctx.sf).solve(&ctx.sf, Some(&bp.plan), &MilpOptions::with_time_limit(limit))?;
            let ev = evaluate(&ctx.sf, &sol.plan)?.leader;
            let status = match sol.status {
                SolveStatus::Optimal => "optimal",
                _ => "time-limit",
            };
            (Some(ev), status.to_string(), Some(sol.wall_time))
        }
    };
    let naive_ev = if cfg.naive {
        let plan = naive_search_in(&game, &ctx, &opts)?;
        Some(evaluate(&ctx.sf, &plan)?.leader)
    } else {
        None
    };
    let scheme = serde_json::to_string(&cfg.scheme)?;
    let row = ResultRow {
        schema_version: SCHEMA_VERSION,
        game: game.name().to_string(),
        instance,
        seed: cfg.seed + instance as u64,
        blueprint_method: cfg.blueprint,
        scheme: scheme.trim_matches('"').to_string(),
        alpha: cfg.alpha,
        beta: cfg.beta,
        subgames: ctx.num_subgames(),
        improved_subgames: outcome.solutions.iter().filter(|s| s.improved).count(),
        timed_out_subgames: outcome
            .solutions
            .iter()
            .filter(|s| s.status == SolveStatus::IncumbentTimeLimit)
            .count(),
        blueprint_ev: base.leader,
        search_ev: searched.leader,
        search_follower_ev: searched.follower,
        full_ev,
        full_status,
        naive_ev,
        objective_mismatches,
        safety_flag: searched.leader >= base.leader - SAFETY_TOL,
        potentially_unsafe: cfg.beta > 1.0,
    };
    let timing = Timing {
        instance,
        blueprint_secs,
        search_secs,
        max_subgame_secs: outcome.solutions.iter().map(|s| s.wall_time).fold(0.0, f64::max),
        full_game_secs,
    };
    Ok(InstanceResult {
        row,
        timing,
        composed: outcome.plan,
        solutions: outcome.solutions,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<InstanceResult>> {
    cfg.validate()?;
    (0..cfg.instances).map(|i| run_instance(cfg, i)).collect()
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings<W: Write>(rows: &[Timing], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "instance",
        "blueprint_secs",
        "search_secs",
        "max_subgame_secs",
        "full_game_secs",
    ])?;
    for t in rows {
        w.write_record([
            t.instance.to_string(),
            t.blueprint_secs.to_string(),
            t.search_secs.to_string(),
            t.max_subgame_secs.to_string(),
            na(&t.full_game_secs),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// True when an unsafe result was produced with slack scaling off.
pub fn any_unsafe(rows: &[ResultRow]) -> bool {
    rows.iter().any(|r| !r.safety_flag && !r.potentially_unsafe)
}
