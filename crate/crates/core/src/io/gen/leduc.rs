use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::efg::{GameBuilder, GameTree, NodeId, Player};
use crate::error::{Error, Result};

const BET_SIZES: [f64; 2] = [2.0, 4.0];
const MAX_BETS: usize = 5;
const ANTE: f64 = 1.0;

/// Leduc hold'em with `n` ranks in two suits and a rake `rho` on the winnings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeducSpec {
    pub n: usize,
    pub rho: f64,
}

#[derive(Clone)]
struct Hand {
    cards: [usize; 2],
    public: Option<usize>,
    history: String,
    contrib: [f64; 2],
}

fn card_label(c: usize) -> String {
    format!("{}{}", c / 2, if c.is_multiple_of(2) { 'a' } else { 'b' })
}

/// Cards are `0..2n`; rank is `card / 2`.
pub fn leduc(spec: &LeducSpec) -> Result<GameTree> {
    if spec.n < 2 {
        return Err(Error::InvalidParameter("leduc needs at least 2 ranks".into()));
    }
    if !(0.0..1.0).contains(&spec.rho) {
        return Err(Error::InvalidParameter(format!("rake {} not in [0, 1)", spec.rho)));
    }
    let deck = 2 * spec.n;
    let mut b = GameBuilder::new(format!("leduc-n{}-rho{}", spec.n, spec.rho));
    b.metadata("generator", json!({ "family": "leduc", "spec": spec }));
    let root = b.chance((0..deck).map(|c| (card_label(c), 1.0 / deck as f64)).collect());
    for c1 in 0..deck {
        let others: Vec<usize> = (0..deck).filter(|&c| c != c1).collect();
        let p = 1.0 / others.len() as f64;
        let deal = b.chance(others.iter().map(|&c| (card_label(c), p)).collect());
        b.attach(root, deal);
        for &c2 in &others {
            let hand = Hand {
                cards: [c1, c2],
                public: None,
                history: String::new(),
                contrib: [ANTE, ANTE],
            };
            let n = betting(&mut b, spec, hand, 0, 0, false);
            b.attach(deal, n);
        }
    }
    b.build()
}

/// `to_act` is 0 or 1; `bets` counts bets and raises in the current round.
fn betting(b: &mut GameBuilder, spec: &LeducSpec, hand: Hand, to_act: usize, bets: usize, acted: bool) -> NodeId {
    let round = usize::from(hand.public.is_some());
    let facing = hand.contrib[1 - to_act] > hand.contrib[to_act];
    let mut actions: Vec<&str> = if facing { vec!["f", "c"] } else { vec!["k"] };
    if bets < MAX_BETS {
        actions.push(if facing { "r" } else { "b" });
    }
    let card = card_label(hand.cards[to_act]);
    let player = Player::from_index(to_act);
    let node = b.decision(
        player,
        format!("{}|{}|{}", to_act + 1, card, hand.history),
        actions.clone(),
    );
    for a in actions {
        let mut next = hand.clone();
        next.history.push_str(a);
        let child = match a {
            "f" => fold(b, spec, &hand, to_act),
            "k" if acted => end_round(b, spec, next),
            "k" => betting(b, spec, next, 1 - to_act, bets, true),
            "c" => {
                next.contrib[to_act] = next.contrib[1 - to_act];
                end_round(b, spec, next)
            }
            _ => {
                next.contrib[to_act] = next.contrib[1 - to_act] + BET_SIZES[round];
                betting(b, spec, next, 1 - to_act, bets + 1, true)
            }
        };
        b.attach(node, child);
    }
    node
}

fn settle(spec: &LeducSpec, winner: usize, contrib: [f64; 2]) -> [f64; 2] {
    let x = contrib[1 - winner];
    let mut u = [0.0; 2];
    u[winner] = (1.0 - spec.rho) * x;
    u[1 - winner] = -x;
    u
}

fn fold(b: &mut GameBuilder, spec: &LeducSpec, hand: &Hand, folder: usize) -> NodeId {
    let u = settle(spec, 1 - folder, hand.contrib);
    b.terminal(u[0], u[1])
}

fn end_round(b: &mut GameBuilder, spec: &LeducSpec, mut hand: Hand) -> NodeId {
    match hand.public {
        None => {
            let deck = 2 * spec.n;
            let left: Vec<usize> = (0..deck).filter(|c| !hand.cards.contains(c)).collect();
            let p = 1.0 / left.len() as f64;
            let c = b.chance(left.iter().map(|&x| (card_label(x), p)).collect());
            hand.history.push('/');
            for &pc in &left {
                let mut next = hand.clone();
                next.public = Some(pc);
                next.history.push_str(&card_label(pc));
                next.history.push('/');
                let n = betting(b, spec, next, 0, 0, false);
                b.attach(c, n);
            }
            c
        }
        Some(pc) => {
            let rank = |c: usize| c / 2;
            let strength = |c: usize| {
                if rank(c) == rank(pc) {
                    spec.n + 1
                } else {
                    rank(c)
                }
            };
            let (s1, s2) = (strength(hand.cards[0]), strength(hand.cards[1]));
            if s1 == s2 {
                b.terminal(0.0, 0.0)
            } else {
                let u = settle(spec, if s1 > s2 { 0 } else { 1 }, hand.contrib);
                b.terminal(u[0], u[1])
            }
        }
    }
}

/// Unraked zero-sum variant of a raked Leduc tree: the loser's payoff is
/// unscaled, so the winner's surrogate payoff is its negation.
pub fn leduc_surrogate(game: &GameTree) -> GameTree {
    game.map_payoffs(|_, [a, b]| if a > 0.0 { [-b, b] } else { [a, -a] })
}
