use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use safe_sse::blueprint::{compute_blueprint, BlueprintMethod};
use safe_sse::efg::{GameTree, Player, RealizationPlan, SequenceForm};
use safe_sse::gadget::{solve_via_gadget, transform_subgame};
use safe_sse::harness::{
    any_unsafe, compose_strategy, evaluate, run_experiment, write_csv, write_timings, ExperimentConfig,
};
use safe_sse::io::gen::{GameSpec, GoofspielSpec, LeducSpec, TwoStageSpec};
use safe_sse::io::{parse_game, parse_plan, serialize_game, serialize_plan};
use safe_sse::optim::MilpOptions;
use safe_sse::search::{build_full_milp, PartitionScheme, SearchContext, SubgameSolution};

#[derive(Parser)]
#[command(
    name = "safe-sse",
    version,
    about = "Stackelberg equilibria with safe subgame search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark or fixture game.
    Generate(GenerateArgs),
    /// Compute a blueprint leader plan.
    Blueprint {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Leader and follower values of a leader plan against the exact best response.
    Evaluate {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        leader_plan: PathBuf,
    },
    /// Refine a blueprint in every subgame.
    Search(SearchArgs),
    /// Write the gadget game of one subgame as a game file.
    Gadget {
        #[command(flatten)]
        base: ContextArgs,
        #[arg(long)]
        subgame: usize,
        /// Payoff standing in for minus infinity.
        #[arg(long)]
        sentinel: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config and write one CSV row per instance.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Wall times per instance, as CSV.
        #[arg(long)]
        timings: Option<PathBuf>,
    },
    /// Dump the full-game MILP, or one subgame's constrained MILP, in LP format.
    Lp {
        #[arg(long)]
        game: PathBuf,
        /// With `--subgame`, the blueprint the bounds come from.
        #[arg(long, requires = "subgame")]
        blueprint: Option<PathBuf>,
        #[arg(long, requires = "blueprint")]
        subgame: Option<usize>,
        #[arg(long, default_value = "whole-game")]
        scheme: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Twostage,
    Goofspiel,
    Leduc,
    Kuhn,
    ExitPair,
    ExitChance,
    BoundsTrace,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Zerosum,
    StageSse,
    Uniform,
}

impl From<Method> for BlueprintMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Zerosum => BlueprintMethod::Zerosum,
            Method::StageSse => BlueprintMethod::StageSse,
            Method::Uniform => BlueprintMethod::Uniform,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    /// Number of secondary games.
    #[arg(long = "M")]
    big_m: Option<usize>,
    /// Secondary matrix size.
    #[arg(long = "m")]
    small_m: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct ContextArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    blueprint: PathBuf,
    /// two-stage, whole-game, leduc-public-round2, goofspiel-last-rounds:M, or
    /// a JSON scheme such as {"explicit-roots": [[3], [9]]}.
    #[arg(long, default_value = "whole-game")]
    scheme: String,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Milp,
    Gadget,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    base: ContextArgs,
    #[arg(long, default_value_t = 10.0)]
    time_limit_per_subgame: f64,
    #[arg(long, value_enum, default_value = "milp")]
    solver: Solver,
    #[arg(long)]
    out: PathBuf,
}

fn read_game(path: &Path) -> Result<GameTree> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_game(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_plan(path: &Path, sf: &SequenceForm) -> Result<RealizationPlan> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_plan(&text, sf.leader()).with_context(|| format!("parsing {}", path.display()))
}

fn game_spec(a: &GenerateArgs) -> Result<GameSpec> {
    let need = |v: Option<usize>, flag: &str| v.with_context(|| format!("--{flag} is required for this family"));
    Ok(match a.family {
        Family::Twostage => GameSpec::Twostage(TwoStageSpec::new(
            need(a.n, "n")?,
            need(a.big_m, "M")?,
            need(a.small_m, "m")?,
            a.kappa.context("--kappa is required for this family")?,
            a.seed,
        )),
        Family::Goofspiel => GameSpec::Goofspiel(GoofspielSpec {
            n: need(a.n, "n")?,
            seed: a.seed,
        }),
        Family::Leduc => GameSpec::Leduc(LeducSpec {
            n: need(a.n, "n")?,
            rho: a.rho.unwrap_or(0.0),
        }),
        Family::Kuhn => GameSpec::Kuhn,
        Family::ExitPair => GameSpec::ExitPair,
        Family::ExitChance => GameSpec::ExitChance,
        Family::BoundsTrace => GameSpec::BoundsTrace,
    })
}

fn context(game: &GameTree, a: &ContextArgs) -> Result<SearchContext> {
    let sf = SequenceForm::new(game)?;
    let bp = read_plan(&a.blueprint, &sf)?;
    Ok(SearchContext::new(
        game,
        &bp,
        &a.scheme.parse::<PartitionScheme>()?,
        a.alpha,
        a.beta,
    )?)
}

fn sequence_label(game: &GameTree, sf: &SequenceForm, player: Player, seq: usize) -> String {
    let tp = if player == Player::Leader {
        sf.leader()
    } else {
        sf.follower()
    };
    match (tp.infoset_of(seq), tp.sequences[seq].action) {
        (Some(i), Some(a)) => {
            let set = game.infoset(tp.infosets[i].infoset);
            format!("{}:{}", set.label, set.actions[a])
        }
        _ => "(empty)".to_string(),
    }
}

fn evaluate_cmd(game: &Path, plan: &Path) -> Result<()> {
    let g = read_game(game)?;
    let sf = SequenceForm::new(&g)?;
    let plan = read_plan(plan, &sf)?;
    let ev = evaluate(&sf, &plan)?;
    println!("leader_ev {}", ev.leader);
    println!("follower_ev {}", ev.follower);
    println!("response");
    for (s, &p) in ev.response.probs.iter().enumerate().skip(1) {
        if p == 1.0 {
            println!("  {s} {}", sequence_label(&g, &sf, Player::Follower, s));
        }
    }
    Ok(())
}

fn subgame_file(game: &GameTree, s: &SubgameSolution) -> serde_json::Value {
    let probs: BTreeMap<usize, f64> = s.plan.probs.iter().copied().collect();
    json!({
        "game": game.name(),
        "subgame": s.subgame,
        "status": format!("{:?}", s.status),
        "objective": s.objective,
        "blueprint_objective": s.blueprint_objective,
        "improved": s.improved,
        "probs": probs,
    })
}

fn search_cmd(a: &SearchArgs) -> Result<()> {
    let game = read_game(&a.base.game)?;
    let ctx = context(&game, &a.base)?;
    let opts = MilpOptions::with_time_limit(a.time_limit_per_subgame);
    let solutions = match a.solver {
        Solver::Milp => ctx.solve_all(&opts)?,
        Solver::Gadget => (0..ctx.num_subgames())
            .map(|j| gadget_solution(&game, &ctx, j, &opts))
            .collect::<Result<_>>()?,
    };
    fs::create_dir_all(&a.out)?;
    for s in &solutions {
        let path = a.out.join(format!("subgame-{}.json", s.subgame));
        fs::write(&path, serde_json::to_string_pretty(&subgame_file(&game, s))? + "\n")?;
    }
    let tp = ctx.sf.follower();
    let bounds: Vec<serde_json::Value> = ctx
        .bounds
        .heads
        .iter()
        .map(|b| {
            let id = tp.infosets[b.infoset].infoset;
            json!({
                "subgame": b.subgame,
                "infoset": id,
                "label": game.infoset(id).label,
                "direction": b.direction,
                "value": if b.is_vacuous() { None } else { Some(b.value) },
                "vacuous": b.is_vacuous(),
            })
        })
        .collect();
    let report = json!({ "alpha": ctx.bounds.alpha, "beta": ctx.bounds.beta, "bounds": bounds });
    fs::write(a.out.join("bounds.json"), serde_json::to_string_pretty(&report)? + "\n")?;

    let plans: Vec<_> = solutions.iter().map(|s| s.plan.clone()).collect();
    let composed = compose_strategy(&ctx.sf, &ctx.blueprint, &ctx.partition, &plans)?;
    fs::write(a.out.join("composed.json"), serialize_plan(&game, &composed))?;
    let base = evaluate(&ctx.sf, &ctx.blueprint)?;
    let refined = evaluate(&ctx.sf, &composed)?;
    println!("subgames {}", solutions.len());
    println!("improved {}", solutions.iter().filter(|s| s.improved).count());
    println!("blueprint_ev {}", base.leader);
    println!("search_ev {}", refined.leader);
    Ok(())
}

fn gadget_solution(game: &GameTree, ctx: &SearchContext, j: usize, opts: &MilpOptions) -> Result<SubgameSolution> {
    let model = ctx.model(j)?;
    let blueprint = model.blueprint_plan(&ctx.sf);
    let keep = SubgameSolution {
        subgame: j,
        plan: blueprint,
        objective: model.blueprint_objective,
        blueprint_objective: model.blueprint_objective,
        status: safe_sse::optim::SolveStatus::Optimal,
        improved: false,
        bound: model.blueprint_objective,
        wall_time: 0.0,
        nodes: 0,
    };
    if ctx.quantities[j].eta == 0.0 {
        return Ok(keep);
    }
    let gadget = transform_subgame(game, ctx, j, None)?;
    let sol = solve_via_gadget(ctx, &gadget, opts)?;
    let tol = 1e-9 * (1.0 + model.blueprint_objective.abs());
    if sol.scaled_value <= model.blueprint_objective + tol {
        return Ok(keep);
    }
    Ok(SubgameSolution {
        plan: sol.plan,
        objective: sol.scaled_value,
        status: sol.status,
        improved: true,
        bound: sol.scaled_value,
        wall_time: sol.wall_time,
        ..keep
    })
}

fn run_cmd(config: &Path, out: &Path, timings: Option<&Path>) -> Result<bool> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let results = run_experiment(&cfg)?;
    let rows: Vec<_> = results.iter().map(|r| r.row.clone()).collect();
    write_csv(&rows, fs::File::create(out)?)?;
    if let Some(t) = timings {
        let ts: Vec<_> = results.iter().map(|r| r.timing.clone()).collect();
        write_timings(&ts, fs::File::create(t)?)?;
    }
    for r in &rows {
        println!(
            "instance {} blueprint_ev {} search_ev {} safe {}",
            r.instance, r.blueprint_ev, r.search_ev, r.safety_flag
        );
    }
    Ok(!any_unsafe(&rows))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: a run with beta = 1 came out below its blueprint");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(a) => {
            let g = game_spec(&a)?.generate()?;
            fs::write(&a.out, serialize_game(&g))?;
        }
        Command::Blueprint { game, method, out } => {
            let g = read_game(&game)?;
            let bp = compute_blueprint(&g, method.into())?;
            fs::write(&out, serialize_plan(&g, &bp.plan))?;
            if let Some(v) = bp.value {
                println!("value {v}");
            }
        }
        Command::Evaluate { game, leader_plan } => evaluate_cmd(&game, &leader_plan)?,
        Command::Search(a) => search_cmd(&a)?,
        Command::Gadget {
            base,
            subgame,
            sentinel,
            out,
        } => {
            let game = read_game(&base.game)?;
            let ctx = context(&game, &base)?;
            if subgame >= ctx.num_subgames() {
                bail!("subgame {subgame} out of range: {} subgames", ctx.num_subgames());
            }
            let gadget = transform_subgame(&game, &ctx, subgame, sentinel)?;
            fs::write(&out, serialize_game(&gadget.game))?;
        }
        Command::Run { config, out, timings } => return run_cmd(&config, &out, timings.as_deref()),
        Command::Lp {
            game,
            blueprint,
            subgame,
            scheme,
            alpha,
            beta,
            out,
        } => {
            let g = read_game(&game)?;
            let sf = SequenceForm::new(&g)?;
            let text = match (blueprint, subgame) {
                (Some(bp), Some(j)) => {
                    let base = ContextArgs {
                        game,
                        blueprint: bp,
                        scheme,
                        alpha,
                        beta,
                    };
                    let ctx = context(&g, &base)?;
                    if j >= ctx.num_subgames() {
                        bail!("subgame {j} out of range: {} subgames", ctx.num_subgames());
                    }
                    ctx.model(j)?.milp.to_lp_string()
                }
                _ => build_full_milp(&sf).milp.to_lp_string(),
            };
            fs::write(&out, text)?;
        }
    }
    Ok(true)
}
