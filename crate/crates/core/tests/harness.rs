use safe_sse::blueprint::BlueprintMethod;
use safe_sse::efg::{GameTree, Player, SequenceForm};
use safe_sse::harness::{
    any_unsafe, compose_strategy, run_experiment, write_csv, write_timings, ExperimentConfig, GameSource, ResultRow,
};
use safe_sse::io::gen::fixtures::{exit_pair, exit_pair_subgame_roots, first_action_plan};
use safe_sse::io::gen::{GameSpec, TwoStageSpec};
use safe_sse::optim::MilpOptions;
use safe_sse::search::{LocalPlan, PartitionScheme, SearchContext};
use safe_sse::Error;

fn exit_pair_ctx(g: &GameTree) -> SearchContext {
    let bp = first_action_plan(SequenceForm::new(g).unwrap().leader());
    SearchContext::new(
        g,
        &bp,
        &PartitionScheme::ExplicitRoots(exit_pair_subgame_roots(g)),
        0.5,
        1.0,
    )
    .unwrap()
}

fn config(spec: GameSpec, scheme: PartitionScheme, blueprint: BlueprintMethod) -> ExperimentConfig {
    ExperimentConfig {
        game: GameSource::Generate(spec),
        instances: 1,
        seed: 0,
        blueprint,
        scheme,
        alpha: 0.5,
        beta: 1.0,
        subgame_time_limit: 30.0,
        full_game_time_limit: None,
        naive: false,
    }
}

fn csv_of(rows: &[ResultRow]) -> String {
    let mut out = Vec::new();
    write_csv(rows, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn blueprint_restrictions_compose_to_blueprint() {
    let g = exit_pair();
    let ctx = exit_pair_ctx(&g);
    let plans: Vec<LocalPlan> = (0..ctx.num_subgames())
        .map(|j| ctx.model(j).unwrap().blueprint_plan(&ctx.sf))
        .collect();
    let composed = compose_strategy(&ctx.sf, &ctx.blueprint, &ctx.partition, &plans).unwrap();
    assert_eq!(composed, ctx.blueprint);
}

#[test]
fn refined_left_box_changes_only_its_sequences() {
    let g = exit_pair();
    let ctx = exit_pair_ctx(&g);
    let t1 = ctx.sf.leader();
    let la = t1.local(g.infoset_by_label(Player::Leader, "LA").unwrap()).unwrap();
    let (bp_seq, alt_seq) = (t1.seq(la, 0), t1.seq(la, 1));
    let mut left = ctx.model(0).unwrap().blueprint_plan(&ctx.sf);
    for p in &mut left.probs {
        if p.0 == bp_seq {
            p.1 = 0.25;
        } else if p.0 == alt_seq {
            p.1 = 0.75;
        }
    }
    let composed = compose_strategy(&ctx.sf, &ctx.blueprint, &ctx.partition, &[left]).unwrap();
    for s in 0..t1.num_sequences() {
        let expected = match s {
            _ if s == bp_seq => 0.25,
            _ if s == alt_seq => 0.75,
            _ => ctx.blueprint.probs[s],
        };
        assert_eq!(composed.probs[s], expected, "sequence {s}");
    }
}

#[test]
fn broken_local_plan_is_refused() {
    let g = exit_pair();
    let ctx = exit_pair_ctx(&g);
    let mut left = ctx.model(0).unwrap().blueprint_plan(&ctx.sf);
    for p in &mut left.probs {
        p.1 *= 0.5;
    }
    assert!(matches!(
        compose_strategy(&ctx.sf, &ctx.blueprint, &ctx.partition, &[left]),
        Err(Error::PlanMismatch(_))
    ));
}

#[test]
fn exit_pair_experiment_row() {
    let mut cfg = config(
        GameSpec::ExitPair,
        PartitionScheme::ExplicitRoots(exit_pair_subgame_roots(&exit_pair())),
        BlueprintMethod::Uniform,
    );
    cfg.naive = true;
    cfg.full_game_time_limit = Some(30.0);
    let res = run_experiment(&cfg).unwrap();
    let row = &res[0].row;
    assert_eq!(row.subgames, 2);
    assert!(row.search_ev >= row.blueprint_ev - 1e-9);
    assert!(row.safety_flag && !row.potentially_unsafe);
    assert_eq!(row.objective_mismatches, 0);
    assert_eq!(row.full_status, "optimal");
    assert!((row.full_ev.unwrap() - 1.75).abs() < 1e-9);
    assert!(row.search_ev <= row.full_ev.unwrap() + 1e-9);
    assert!(row.naive_ev.is_some());
    assert!(!any_unsafe(std::slice::from_ref(row)));
}

#[test]
fn two_stage_sandwich() {
    let mut cfg = config(
        GameSpec::Twostage(TwoStageSpec::new(2, 2, 2, 0.1, 0)),
        PartitionScheme::TwoStage,
        BlueprintMethod::StageSse,
    );
    cfg.instances = 10;
    cfg.seed = 100;
    cfg.full_game_time_limit = Some(60.0);
    let rows: Vec<ResultRow> = run_experiment(&cfg).unwrap().into_iter().map(|r| r.row).collect();
    let mean = |f: &dyn Fn(&ResultRow) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    let bp = mean(&|r| r.blueprint_ev);
    let search = mean(&|r| r.search_ev);
    let full = mean(&|r| r.full_ev.unwrap());
    assert!(bp <= search + 1e-6 && search <= full + 1e-6, "{bp} {search} {full}");
    for r in &rows {
        assert!(r.safety_flag);
        assert_eq!(r.full_status, "optimal");
        assert_eq!(r.objective_mismatches, 0);
    }
}

#[test]
fn csv_is_deterministic_and_versioned() {
    let mut cfg = config(
        GameSpec::Twostage(TwoStageSpec::new(2, 2, 2, 0.9, 0)),
        PartitionScheme::TwoStage,
        BlueprintMethod::StageSse,
    );
    cfg.instances = 3;
    let run = || {
        let rows: Vec<ResultRow> = run_experiment(&cfg).unwrap().into_iter().map(|r| r.row).collect();
        csv_of(&rows)
    };
    let a = run();
    assert_eq!(a, run());
    let header = a.lines().next().unwrap();
    assert!(header.starts_with("schema_version,game,instance,seed,blueprint_method,scheme,alpha,beta"));
    assert!(header.ends_with("safety_flag,potentially_unsafe"));
    assert_eq!(a.lines().count(), 4);
    assert!(a.lines().nth(1).unwrap().starts_with("1,twostage-"));
    assert!(a.contains(",NA,skipped,NA,"));
}

#[test]
fn timings_sidecar() {
    let cfg = config(GameSpec::ExitPair, PartitionScheme::WholeGame, BlueprintMethod::Uniform);
    let res = run_experiment(&cfg).unwrap();
    let mut out = Vec::new();
    write_timings(&[res[0].timing.clone()], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("instance,blueprint_secs,search_secs,max_subgame_secs,full_game_secs\n0,"));
    assert!(res[0].timing.max_subgame_secs <= cfg.subgame_time_limit + 1.0);
}

#[test]
fn beta_above_one_is_labelled() {
    let mut cfg = config(
        GameSpec::Twostage(TwoStageSpec::new(2, 2, 2, 0.1, 3)),
        PartitionScheme::TwoStage,
        BlueprintMethod::StageSse,
    );
    cfg.beta = 16.0;
    let row = &run_experiment(&cfg).unwrap()[0].row;
    assert!(row.potentially_unsafe);
    let mut unsafe_row = row.clone();
    unsafe_row.safety_flag = false;
    assert!(!any_unsafe(std::slice::from_ref(&unsafe_row)));
    unsafe_row.potentially_unsafe = false;
    assert!(any_unsafe(&[unsafe_row]));
}

#[test]
fn config_parsing() {
    let text = r#"{
        "game": {"generate": {"family": "twostage", "n": 2, "M": 2, "m": 2, "kappa": 0.1, "seed": 0}},
        "instances": 4,
        "blueprint": "stage-sse",
        "scheme": "two-stage"
    }"#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    assert_eq!(cfg.instances, 4);
    assert_eq!(cfg.alpha, 0.5);
    assert_eq!(cfg.beta, 1.0);
    assert_eq!(cfg.subgame_time_limit, 10.0);
    assert!(cfg.full_game_time_limit.is_none());
    let g1 = cfg.game(1).unwrap();
    assert!(g1.name().ends_with("-s1"));

    let bad = text.replace("\"instances\"", "\"instancez\"");
    match ExperimentConfig::parse(&bad) {
        Err(Error::Parse { message, .. }) => assert!(message.contains("instancez")),
        other => panic!("unexpected {other:?}"),
    }
    let bad = text.replace("\"instances\": 4", "\"instances\": 4, \"beta\": 0.5");
    assert!(matches!(ExperimentConfig::parse(&bad), Err(Error::InvalidParameter(_))));
    let bad = text.replace("\"instances\": 4", "\"instances\": 4, \"subgame_time_limit\": 0");
    assert!(matches!(ExperimentConfig::parse(&bad), Err(Error::InvalidParameter(_))));
    let bad = text.replace(
        "\"scheme\": \"two-stage\"",
        "\"scheme\": {\"goofspiel-last-rounds\": \"x\"}",
    );
    match ExperimentConfig::parse(&bad) {
        Err(Error::Parse { path, .. }) => assert_eq!(path, "scheme.goofspiel-last-rounds"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn per_subgame_time_limit_respected() {
    let g = exit_pair();
    let ctx = exit_pair_ctx(&g);
    let sols = ctx.solve_all(&MilpOptions::with_time_limit(0.5)).unwrap();
    assert!(sols.iter().all(|s| s.wall_time <= 1.5));
}
