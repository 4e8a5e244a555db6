use crate::efg::{GameBuilder, GameTree, NodeId, Player};

const CARDS: [&str; 3] = ["J", "Q", "K"];

/// Kuhn poker with the leader as first player; ante 1, bet 1.
pub fn kuhn() -> GameTree {
    let mut b = GameBuilder::new("kuhn");
    b.metadata("generator", serde_json::json!({ "family": "kuhn" }));
    let root = b.chance(CARDS.iter().map(|c| (*c, 1.0 / 3.0)).collect());
    for c1 in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&c| c != c1).collect();
        let deal = b.chance(others.iter().map(|&c| (CARDS[c], 0.5)).collect());
        b.attach(root, deal);
        for &c2 in &others {
            let n = betting(&mut b, c1, c2);
            b.attach(deal, n);
        }
    }
    b.build().expect("kuhn is valid")
}

fn showdown(b: &mut GameBuilder, c1: usize, c2: usize, stake: f64) -> NodeId {
    let u = if c1 > c2 { stake } else { -stake };
    b.terminal(u, -u)
}

fn betting(b: &mut GameBuilder, c1: usize, c2: usize) -> NodeId {
    let (k1, k2) = (CARDS[c1], CARDS[c2]);
    let p1 = b.decision(Player::Leader, format!("1:{k1}"), vec!["check", "bet"]);

    let p2c = b.decision(Player::Follower, format!("2:{k2}:c"), vec!["check", "bet"]);
    b.attach(p1, p2c);
    let t = showdown(b, c1, c2, 1.0);
    b.attach(p2c, t);
    let p1cb = b.decision(Player::Leader, format!("1:{k1}:cb"), vec!["fold", "call"]);
    b.attach(p2c, p1cb);
    let t = b.terminal(-1.0, 1.0);
    b.attach(p1cb, t);
    let t = showdown(b, c1, c2, 2.0);
    b.attach(p1cb, t);

    let p2b = b.decision(Player::Follower, format!("2:{k2}:b"), vec!["fold", "call"]);
    b.attach(p1, p2b);
    let t = b.terminal(1.0, -1.0);
    b.attach(p2b, t);
    let t = showdown(b, c1, c2, 2.0);
    b.attach(p2b, t);
    p1
}
