use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::efg::{GameBuilder, GameTree, NodeId, Player};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoofspielSpec {
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

struct State {
    n: usize,
    round: usize,
    prizes: Vec<usize>,
    bids: [Vec<usize>; 2],
    won: [usize; 2],
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn remaining(n: usize, used: &[usize]) -> Vec<usize> {
    (0..n).filter(|c| !used.contains(c)).collect()
}

/// Goofspiel with prizes and bid cards valued `0..n`. Each round opens with a
/// chance node revealing the next prize uniformly among those left; the
/// leader bids, then the follower bids without seeing the leader's card.
/// Ties discard the prize. Payoffs are the prize totals won.
pub fn goofspiel(spec: &GoofspielSpec) -> Result<GameTree> {
    if !(1..=6).contains(&spec.n) {
        return Err(Error::InvalidParameter(format!(
            "goofspiel size {} outside 1..=6",
            spec.n
        )));
    }
    let mut b = GameBuilder::new(format!("goofspiel-n{}", spec.n));
    b.metadata("generator", json!({ "family": "goofspiel", "spec": spec }));
    b.metadata("seed", json!(spec.seed));
    let mut s = State {
        n: spec.n,
        round: 0,
        prizes: Vec::new(),
        bids: [Vec::new(), Vec::new()],
        won: [0, 0],
    };
    round_start(&mut b, &mut s);
    b.build()
}

fn round_start(b: &mut GameBuilder, s: &mut State) -> NodeId {
    if s.round == s.n {
        return b.terminal(s.won[0] as f64, s.won[1] as f64);
    }
    let left = remaining(s.n, &s.prizes);
    let p = 1.0 / left.len() as f64;
    let c = b.chance(left.iter().map(|x| (format!("p{x}"), p)).collect());
    for &prize in &left {
        s.prizes.push(prize);
        let l = leader_bid(b, s);
        b.attach(c, l);
        s.prizes.pop();
    }
    c
}

fn leader_bid(b: &mut GameBuilder, s: &mut State) -> NodeId {
    let hand = remaining(s.n, &s.bids[0]);
    let label = format!(
        "L|p:{}|own:{}|opp:{}",
        join(&s.prizes),
        join(&s.bids[0]),
        join(&s.bids[1])
    );
    let node = b.decision(Player::Leader, label, hand.iter().map(|c| format!("c{c}")).collect());
    for &card in &hand {
        let f = follower_bid(b, s, card);
        b.attach(node, f);
    }
    node
}

fn follower_bid(b: &mut GameBuilder, s: &mut State, leader_card: usize) -> NodeId {
    let hand = remaining(s.n, &s.bids[1]);
    let label = format!(
        "F|p:{}|own:{}|opp:{}",
        join(&s.prizes),
        join(&s.bids[1]),
        join(&s.bids[0])
    );
    let node = b.decision(Player::Follower, label, hand.iter().map(|c| format!("c{c}")).collect());
    let prize = *s.prizes.last().expect("prize revealed");
    for &card in &hand {
        let winner = match leader_card.cmp(&card) {
            std::cmp::Ordering::Greater => Some(0),
            std::cmp::Ordering::Less => Some(1),
            std::cmp::Ordering::Equal => None,
        };
        if let Some(w) = winner {
            s.won[w] += prize;
        }
        s.bids[0].push(leader_card);
        s.bids[1].push(card);
        s.round += 1;
        let next = round_start(b, s);
        s.round -= 1;
        s.bids[0].pop();
        s.bids[1].pop();
        if let Some(w) = winner {
            s.won[w] -= prize;
        }
        b.attach(node, next);
    }
    node
}

/// Zero-sum surrogate: tied prizes split evenly, shifted so that payoffs sum to 0.
pub fn goofspiel_surrogate(game: &GameTree) -> GameTree {
    game.map_payoffs(|_, [a, b]| {
        let x = (a - b) / 2.0;
        [x, -x]
    })
}
