//! Small hand-built games used in demos and tests.
//!
//! In the fixtures the leader's first action at every decision is the blueprint
//! move ("bp"); [`first_action_plan`] builds that plan.

use crate::efg::{
    behavioral_to_realization, BehavioralStrategy, GameBuilder, GameTree, NodeId, Player, RealizationPlan, Treeplex,
};

/// A follower infoset with the single action "go" followed by a leader choice
/// between the blueprint outcome and an alternative.
fn boxed_subgame(
    b: &mut GameBuilder,
    head: &str,
    leader: &str,
    blueprint: (f64, f64),
    alternative: (f64, f64),
) -> NodeId {
    let h = b.decision(Player::Follower, head, vec!["go"]);
    let l = b.decision(Player::Leader, leader, vec!["bp", "alt"]);
    b.attach(h, l);
    let x = b.terminal(blueprint.0, blueprint.1);
    let y = b.terminal(alternative.0, alternative.1);
    b.attach(l, x);
    b.attach(l, y);
    h
}

/// Two chance branches, each a follower choice between exiting and entering a
/// subgame. Blueprint payoff (1.5, 1.5); re-solving both boxes independently
/// lets the follower flip both choices.
pub fn exit_pair() -> GameTree {
    let mut b = GameBuilder::new("exit-pair");
    let root = b.chance(vec![("left", 0.5), ("right", 0.5)]);
    let sides = [
        ("F1", "X1", "S1", (0.0, 0.0), "A", "LA", (1.0, 1.0), (2.0, -1.0)),
        ("F2", "X2", "S2", (2.0, 2.0), "B", "LB", (0.0, 0.0), (1.0, 4.0)),
    ];
    for (f, exit, stay, exit_u, head, leader, bp, alt) in sides {
        let n = b.decision(Player::Follower, f, vec![exit, stay]);
        b.attach(root, n);
        let x = b.terminal(exit_u.0, exit_u.1);
        b.attach(n, x);
        let s = boxed_subgame(&mut b, head, leader, bp, alt);
        b.attach(n, s);
    }
    b.build().expect("exit-pair fixture is valid")
}

/// Follower exits for (0, 0) or enters a chance node over two subgames.
pub fn exit_chance() -> GameTree {
    let mut b = GameBuilder::new("exit-chance");
    let root = b.decision(Player::Follower, "F", vec!["X", "S"]);
    let x = b.terminal(0.0, 0.0);
    b.attach(root, x);
    let c = b.chance(vec![("left", 0.5), ("right", 0.5)]);
    b.attach(root, c);
    for (head, leader) in [("AL", "LL"), ("AR", "LR")] {
        let s = boxed_subgame(&mut b, head, leader, (1.0, 1.0), (2.0, -1.0));
        b.attach(c, s);
    }
    b.build().expect("exit-chance fixture is valid")
}

/// Follower-only game used to trace bounds generation.
pub fn bounds_trace() -> GameTree {
    let mut b = GameBuilder::new("bounds-trace");
    let head = |b: &mut GameBuilder, label: &str, u2: f64| {
        let h = b.decision(Player::Follower, label, vec![label.to_lowercase()]);
        let t = b.terminal(0.0, u2);
        b.attach(h, t);
        h
    };
    let root = b.decision(Player::Follower, "B", vec!["b0", "C"]);
    let t = b.terminal(0.0, 3.0);
    b.attach(root, t);
    let c = b.chance(vec![("d", 0.5), ("h", 0.5)]);
    b.attach(root, c);

    let d = b.decision(Player::Follower, "D", vec!["E", "F", "G"]);
    b.attach(c, d);
    let e = b.chance(vec![("e1", 0.5), ("e2", 0.5)]);
    b.attach(d, e);
    for l in ["E1", "E2"] {
        let h = head(&mut b, l, 4.0);
        b.attach(e, h);
    }
    let f = head(&mut b, "F1", 0.0);
    b.attach(d, f);
    let g = head(&mut b, "G1", -2.0);
    b.attach(d, g);

    let h = b.decision(Player::Follower, "H", vec!["I", "J"]);
    b.attach(c, h);
    let i = head(&mut b, "I1", 6.0);
    b.attach(h, i);
    let j = b.chance(vec![("ja", 0.5), ("jb", 0.5)]);
    b.attach(h, j);
    let inner = b.decision(Player::Follower, "J1", vec!["K", "L"]);
    b.attach(j, inner);
    let k = head(&mut b, "K1", 6.0);
    b.attach(inner, k);
    let l = head(&mut b, "L1", 4.0);
    b.attach(inner, l);
    let t = b.terminal(0.0, 4.0);
    b.attach(j, t);
    b.build().expect("bounds-trace fixture is valid")
}

/// Subgame roots of a fixture, given as groups of follower infoset labels.
pub fn roots_by_label(game: &GameTree, groups: &[&[&str]]) -> Vec<Vec<NodeId>> {
    groups
        .iter()
        .map(|labels| {
            labels
                .iter()
                .flat_map(|l| {
                    let id = game
                        .infoset_by_label(Player::Follower, l)
                        .unwrap_or_else(|| panic!("no follower infoset '{l}'"));
                    game.infoset(id).members.clone()
                })
                .collect()
        })
        .collect()
}

pub fn exit_pair_subgame_roots(game: &GameTree) -> Vec<Vec<NodeId>> {
    roots_by_label(game, &[&["A"], &["B"]])
}

/// Both boxes of the exit-pair game as one subgame.
pub fn exit_pair_single_subgame_roots(game: &GameTree) -> Vec<Vec<NodeId>> {
    roots_by_label(game, &[&["A", "B"]])
}

pub fn exit_chance_subgame_roots(game: &GameTree) -> Vec<Vec<NodeId>> {
    roots_by_label(game, &[&["AL"], &["AR"]])
}

pub fn bounds_trace_subgame_roots(game: &GameTree) -> Vec<Vec<NodeId>> {
    roots_by_label(game, &[&["E1", "E2", "F1"], &["G1", "I1"], &["K1", "L1"]])
}

/// Leader plays the first action everywhere.
pub fn first_action_plan(tp: &Treeplex) -> RealizationPlan {
    let probs = tp
        .infosets
        .iter()
        .map(|s| {
            let mut v = vec![0.0; s.num_actions];
            v[0] = 1.0;
            v
        })
        .collect();
    behavioral_to_realization(tp, &BehavioralStrategy { owner: tp.owner, probs })
}
