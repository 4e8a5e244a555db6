mod common;

use safe_sse::efg::{GameTree, Player, RealizationPlan, SeqId, SequenceForm};
use safe_sse::harness::{evaluate, naive_search, safe_search};
use safe_sse::io::gen::fixtures::{
    bounds_trace, bounds_trace_subgame_roots, exit_chance, exit_chance_subgame_roots, exit_pair,
    exit_pair_single_subgame_roots, exit_pair_subgame_roots, first_action_plan,
};
use safe_sse::io::gen::{goofspiel, kuhn, GoofspielSpec};
use safe_sse::optim::{MilpOptions, SolveStatus};
use safe_sse::search::{build_full_milp, partition_subgames, Direction, PartitionScheme, SearchContext, TraceItem};
use safe_sse::Error;

fn follower_infoset(g: &GameTree, sf: &SequenceForm, label: &str) -> usize {
    let id = g.infoset_by_label(Player::Follower, label).unwrap();
    sf.follower().local(id).unwrap()
}

fn follower_seq(g: &GameTree, sf: &SequenceForm, label: &str, action: &str) -> SeqId {
    let id = g.infoset_by_label(Player::Follower, label).unwrap();
    let a = g.infoset(id).actions.iter().position(|x| x == action).unwrap();
    sf.follower().seq(sf.follower().local(id).unwrap(), a)
}

fn blueprint(g: &GameTree) -> RealizationPlan {
    first_action_plan(SequenceForm::new(g).unwrap().leader())
}

fn context(g: &GameTree, roots: Vec<Vec<usize>>, alpha: f64) -> SearchContext {
    SearchContext::new(g, &blueprint(g), &PartitionScheme::ExplicitRoots(roots), alpha, 1.0).unwrap()
}

fn opts() -> MilpOptions {
    MilpOptions::with_time_limit(30.0)
}

#[test]
fn bounds_trace_bound_trace() {
    let g = bounds_trace();
    let ctx = context(&g, bounds_trace_subgame_roots(&g), 0.0);
    let sf = &ctx.sf;
    let seq = |l: &str, a: &str| {
        let e = ctx
            .bounds
            .traced(TraceItem::Sequence(follower_seq(&g, sf, l, a)))
            .unwrap();
        (e.direction, e.value)
    };
    let inf = |l: &str| {
        let e = ctx
            .bounds
            .traced(TraceItem::Infoset(follower_infoset(&g, sf, l)))
            .unwrap();
        (e.direction, e.value)
    };
    assert_eq!(seq("B", "C"), (Direction::Lower, 3.0));
    assert_eq!(inf("D"), (Direction::Lower, 1.0));
    assert_eq!(inf("H"), (Direction::Lower, 2.0));
    assert_eq!(seq("D", "E"), (Direction::Lower, 1.0));
    assert_eq!(seq("D", "F"), (Direction::Upper, 1.0));
    assert_eq!(seq("D", "G"), (Direction::Upper, 1.0));
    assert_eq!(seq("H", "I"), (Direction::Lower, 2.5));
    assert_eq!(seq("H", "J"), (Direction::Upper, 2.5));

    let head = |l: &str| {
        let b = ctx.bounds.get(follower_infoset(&g, sf, l)).unwrap();
        (b.direction, b.value)
    };
    assert_eq!(head("E1"), (Direction::Lower, 0.5));
    assert_eq!(head("E2"), (Direction::Lower, 0.5));
    assert_eq!(head("F1"), (Direction::Upper, 1.0));
    assert_eq!(head("G1"), (Direction::Upper, 1.0));
    assert_eq!(head("I1"), (Direction::Lower, 2.5));
    assert_eq!(head("K1"), (Direction::Upper, 1.5));
    assert_eq!(head("L1"), (Direction::Upper, 1.5));
    assert_eq!(ctx.bounds.heads.len(), 7);
}

#[test]
fn bounds_trace_default_alpha_blends() {
    let g = bounds_trace();
    let ctx = context(&g, bounds_trace_subgame_roots(&g), 0.5);
    let i1 = ctx.bounds.get(follower_infoset(&g, &ctx.sf, "I1")).unwrap();
    assert!((i1.value - 2.75).abs() < 1e-12);
}

#[test]
fn exit_pair_quantities_and_bounds() {
    let g = exit_pair();
    let ctx = context(&g, exit_pair_subgame_roots(&g), 0.5);
    let (left, right) = (&ctx.quantities[0], &ctx.quantities[1]);
    assert_eq!(left.omega.len(), 1);
    assert!((left.omega[0].1 - 0.5).abs() < 1e-15);
    assert!((left.mass - 0.5).abs() < 1e-15);
    assert_eq!(right.mass, 0.0);
    let a = ctx.bounds.get(follower_infoset(&g, &ctx.sf, "A")).unwrap();
    let b = ctx.bounds.get(follower_infoset(&g, &ctx.sf, "B")).unwrap();
    assert_eq!((a.direction, a.value), (Direction::Lower, 0.25));
    assert_eq!((b.direction, b.value), (Direction::Upper, 0.5));
}

#[test]
fn whole_game_quantities() {
    let g = kuhn();
    let sf = SequenceForm::new(&g).unwrap();
    let ctx = SearchContext::new(
        &g,
        &RealizationPlan::uniform(sf.leader()),
        &PartitionScheme::WholeGame,
        0.5,
        1.0,
    )
    .unwrap();
    let q = &ctx.quantities[0];
    assert!((q.mass - 1.0).abs() < 1e-12);
    let sg = &ctx.partition.subgames[0];
    for (&l, &c) in sg.leaves.iter().zip(&q.leaf_chance) {
        assert_eq!(c, sf.leaves[l].chance);
    }
}

#[test]
fn alpha_beta_refused() {
    let g = exit_pair();
    let bp = blueprint(&g);
    let scheme = PartitionScheme::ExplicitRoots(exit_pair_subgame_roots(&g));
    for (a, b) in [(-0.1, 1.0), (1.1, 1.0), (0.5, 0.5), (0.5, f64::NAN)] {
        let err = SearchContext::new(&g, &bp, &scheme, a, b).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "{a} {b}: {err}");
    }
}

#[test]
fn blueprint_satisfies_every_model() {
    let cases: Vec<(GameTree, Vec<Vec<usize>>)> = vec![
        (exit_pair(), exit_pair_subgame_roots(&exit_pair())),
        (exit_pair(), exit_pair_single_subgame_roots(&exit_pair())),
        (exit_chance(), exit_chance_subgame_roots(&exit_chance())),
        (bounds_trace(), bounds_trace_subgame_roots(&bounds_trace())),
    ];
    for (g, roots) in cases {
        for alpha in [0.0, 0.5, 1.0] {
            let ctx = context(&g, roots.clone(), alpha);
            for j in 0..ctx.num_subgames() {
                let m = ctx.model(j).unwrap();
                assert!(
                    m.milp.is_feasible(&m.warm_start),
                    "{} subgame {j} alpha {alpha}",
                    g.name()
                );
                assert!(m.bound_violation(&ctx.sf, &m.blueprint_plan(&ctx.sf)) <= 1e-12);
            }
        }
    }
}

#[test]
fn exit_pair_left_model_size() {
    let g = exit_pair();
    let ctx = context(&g, exit_pair_subgame_roots(&g), 0.5);
    let m = ctx.model(0).unwrap();
    // Entry sequence S1 plus the single "go" sequence.
    assert_eq!(m.num_binaries(), 2);
    assert!(m.num_binaries() <= 3);
}

#[test]
fn exit_pair_left_subgame_keeps_blueprint_value() {
    let g = exit_pair();
    let ctx = context(&g, exit_pair_subgame_roots(&g), 0.5);
    let s = ctx.solve(0, &opts()).unwrap();
    assert!(s.objective >= 0.5 - 1e-9);
    let empty = ctx.solve(1, &opts()).unwrap();
    assert!(!empty.improved);
    assert_eq!(empty.objective, 0.0);
}

#[test]
fn exit_pair_demo() {
    let g = exit_pair();
    let bp = blueprint(&g);
    let sf = SequenceForm::new(&g).unwrap();
    assert!((evaluate(&sf, &bp).unwrap().leader - 1.5).abs() < 1e-9);
    for roots in [exit_pair_subgame_roots(&g), exit_pair_single_subgame_roots(&g)] {
        let scheme = PartitionScheme::ExplicitRoots(roots);
        let naive = naive_search(&g, &bp, &scheme, &opts()).unwrap();
        assert!((evaluate(&sf, &naive).unwrap().leader - 0.5).abs() < 1e-9);
        let ctx = SearchContext::new(&g, &bp, &scheme, 0.5, 1.0).unwrap();
        let out = safe_search(&ctx, &opts()).unwrap();
        assert!(evaluate(&sf, &out.plan).unwrap().leader >= 1.5 - 1e-9);
    }
}

#[test]
fn exit_chance_demo() {
    let g = exit_chance();
    let bp = blueprint(&g);
    let sf = SequenceForm::new(&g).unwrap();
    assert!((evaluate(&sf, &bp).unwrap().leader - 1.0).abs() < 1e-9);
    let scheme = PartitionScheme::ExplicitRoots(exit_chance_subgame_roots(&g));
    let naive = naive_search(&g, &bp, &scheme, &opts()).unwrap();
    assert!(evaluate(&sf, &naive).unwrap().leader.abs() < 1e-9);
    let ctx = SearchContext::new(&g, &bp, &scheme, 0.5, 1.0).unwrap();
    let out = safe_search(&ctx, &opts()).unwrap();
    let ev = evaluate(&sf, &out.plan).unwrap().leader;
    assert!(ev >= 1.0 - 1e-9, "{ev}");
}

#[test]
fn whole_game_matches_full_milp() {
    for g in [exit_pair(), exit_chance(), kuhn()] {
        let sf = SequenceForm::new(&g).unwrap();
        let bp = RealizationPlan::uniform(sf.leader());
        let full = build_full_milp(&sf).solve(&sf, Some(&bp), &opts()).unwrap();
        assert_eq!(full.status, SolveStatus::Optimal);
        let ctx = SearchContext::new(&g, &bp, &PartitionScheme::WholeGame, 0.5, 1.0).unwrap();
        let vacuous = ctx.bounds.vacuous();
        let m = ctx.model_with(0, &vacuous).unwrap();
        let s = safe_sse::search::solve_subgame(&ctx.sf, &m, &opts()).unwrap();
        assert!(
            (s.objective - full.objective).abs() < 1e-6,
            "{}: {} vs {}",
            g.name(),
            s.objective,
            full.objective
        );
    }
}

#[test]
fn fixture_full_game_values() {
    // Mixing half-half in both boxes keeps the follower's choices and beats
    // the blueprint's 1.5.
    let g = exit_pair();
    let sf = SequenceForm::new(&g).unwrap();
    let full = build_full_milp(&sf).solve(&sf, None, &opts()).unwrap();
    assert!((full.objective - 1.75).abs() < 1e-6, "{}", full.objective);
    assert!((common::brute_force_sse(&sf).0 - 1.75).abs() < 1e-6);
    let g = exit_chance();
    let sf = SequenceForm::new(&g).unwrap();
    let full = build_full_milp(&sf).solve(&sf, None, &opts()).unwrap();
    assert!(full.objective >= 1.5 - 1e-6);
    assert!((common::brute_force_sse(&sf).0 - full.objective).abs() < 1e-6);
}

#[test]
fn explicit_node_list_checks() {
    let g = exit_pair();
    let sf = SequenceForm::new(&g).unwrap();
    let a = g.infoset(g.infoset_by_label(Player::Follower, "A").unwrap()).members[0];
    // Dropping a leaf breaks closure.
    let mut nodes = g.subtree(a);
    nodes.pop();
    let err = partition_subgames(&g, &sf, &PartitionScheme::ExplicitNodeList(vec![nodes])).unwrap_err();
    assert!(err.to_string().contains("closure"), "{err}");
    // Kuhn: one dealt card's subtree splits the follower's infosets.
    let k = kuhn();
    let ksf = SequenceForm::new(&k).unwrap();
    let child = k.node(k.root()).children[0];
    let err = partition_subgames(&k, &ksf, &PartitionScheme::ExplicitNodeList(vec![k.subtree(child)])).unwrap_err();
    assert!(err.to_string().contains("infoset '"), "{err}");
}

#[test]
fn goofspiel_partition_counts() {
    let g = goofspiel(&GoofspielSpec { n: 3, seed: 0 }).unwrap();
    let sf = SequenceForm::new(&g).unwrap();
    let count = |m| {
        partition_subgames(&g, &sf, &PartitionScheme::GoofspielLastRounds(m))
            .unwrap()
            .len()
    };
    assert_eq!(count(3), 1);
    assert_eq!(count(2), 27);
    assert!(partition_subgames(&g, &sf, &PartitionScheme::GoofspielLastRounds(4)).is_err());
}

#[test]
fn scheme_names_parse() {
    assert_eq!(
        "two-stage".parse::<PartitionScheme>().unwrap(),
        PartitionScheme::TwoStage
    );
    assert_eq!(
        "whole-game".parse::<PartitionScheme>().unwrap(),
        PartitionScheme::WholeGame
    );
    assert_eq!(
        "goofspiel-last-rounds:2".parse::<PartitionScheme>().unwrap(),
        PartitionScheme::GoofspielLastRounds(2)
    );
    assert_eq!(
        r#"{"explicit-roots": [[3], [9]]}"#.parse::<PartitionScheme>().unwrap(),
        PartitionScheme::ExplicitRoots(vec![vec![3], vec![9]])
    );
    for bad in ["nonsense", "goofspiel-last-rounds:x", "{\"two\": 1}"] {
        assert!(
            matches!(bad.parse::<PartitionScheme>(), Err(Error::InvalidParameter(_))),
            "{bad}"
        );
    }
}
