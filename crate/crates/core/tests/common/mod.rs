#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safe_sse::efg::{
    behavioral_to_realization, BehavioralStrategy, GameBuilder, GameTree, Player, RealizationPlan, SequenceForm,
    Treeplex, EMPTY,
};
use safe_sse::optim::{solve_lp, LinearProgram, Relation, SolveStatus};

/// Every pure follower realization plan, deduplicated.
pub fn pure_follower_plans(sf: &SequenceForm) -> Vec<Vec<f64>> {
    let tp = sf.follower();
    let mut plans: Vec<Vec<f64>> = vec![{
        let mut v = vec![0.0; tp.num_sequences()];
        v[EMPTY] = 1.0;
        v
    }];
    // Infosets are ordered parents first, so the parent's reach is settled.
    for set in &tp.infosets {
        let mut next = Vec::new();
        for p in plans {
            if p[set.parent_seq] == 0.0 {
                next.push(p);
                continue;
            }
            for s in set.seqs() {
                let mut q = p.clone();
                q[s] = 1.0;
                next.push(q);
            }
        }
        plans = next;
    }
    plans
}

/// Strong Stackelberg value by enumeration: for every pure follower plan, the
/// best leader plan that keeps it a best response.
pub fn brute_force_sse(sf: &SequenceForm) -> (f64, RealizationPlan) {
    let t1 = sf.leader();
    let plans = pure_follower_plans(sf);
    let mut best: Option<(f64, RealizationPlan)> = None;
    for r2 in &plans {
        let mut lp = LinearProgram::new();
        let r: Vec<usize> = (0..t1.num_sequences())
            .map(|s| lp.add_var(format!("r{s}"), if s == EMPTY { 1.0 } else { 0.0 }, 1.0, 0.0))
            .collect();
        for &((s1, s2), g) in &sf.payoff_table {
            lp.objective[r[s1]] += g[0] * r2[s2];
        }
        for (i, set) in t1.infosets.iter().enumerate() {
            let mut row = vec![(r[set.parent_seq], -1.0)];
            row.extend(set.seqs().map(|s| (r[s], 1.0)));
            lp.add_constraint(format!("f{i}"), row, Relation::Eq, 0.0);
        }
        for (k, other) in plans.iter().enumerate() {
            let mut row = vec![(r[EMPTY], 0.0)];
            for &((s1, s2), g) in &sf.payoff_table {
                let d = r2[s2] - other[s2];
                if d != 0.0 && g[1] != 0.0 {
                    row.push((r[s1], g[1] * d));
                }
            }
            lp.add_constraint(format!("ic{k}"), row, Relation::Ge, 0.0);
        }
        let sol = solve_lp(&lp).unwrap();
        if sol.status != SolveStatus::Optimal {
            continue;
        }
        if best.as_ref().is_none_or(|b| sol.objective > b.0 + 1e-9) {
            let x = sol.values.unwrap();
            let plan = RealizationPlan {
                owner: t1.owner,
                probs: r.iter().map(|&v| x[v]).collect(),
            };
            best = Some((sol.objective, plan));
        }
    }
    best.expect("some follower plan is inducible")
}

/// Small imperfect-information game: the leader moves, the follower answers
/// without seeing it, then chance and further moves by both players. At most
/// `(width - 1) + 4` pure follower plans.
pub fn random_game(seed: u64) -> GameTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pay = |rng: &mut ChaCha8Rng| {
        let a: f64 = rng.random_range(-2.0..2.0);
        let b: f64 = rng.random_range(-2.0..2.0);
        ((a * 8.0).round() / 8.0, (b * 8.0).round() / 8.0)
    };
    let n_lead = rng.random_range(2..=3usize);
    let width = rng.random_range(2..=3usize);
    let p: f64 = rng.random_range(0.2..0.8);
    let deep: Vec<bool> = (0..2).map(|_| rng.random_bool(0.7)).collect();
    let mut b = GameBuilder::new(format!("random-{seed}"));
    let root = b.decision(Player::Leader, "L0", (0..n_lead).map(|a| format!("a{a}")).collect());
    for a in 0..n_lead {
        let f = b.decision(Player::Follower, "F0", (0..width).map(|c| format!("b{c}")).collect());
        b.attach(root, f);
        for c in 0..width {
            if c != 0 {
                let (x, y) = pay(&mut rng);
                let t = b.terminal(x, y);
                b.attach(f, t);
                continue;
            }
            let ch = b.chance(vec![("o0", p), ("o1", 1.0 - p)]);
            b.attach(f, ch);
            for (o, &is_deep) in deep.iter().enumerate() {
                if !is_deep {
                    let (x, y) = pay(&mut rng);
                    let t = b.terminal(x, y);
                    b.attach(ch, t);
                    continue;
                }
                let g = b.decision(Player::Follower, format!("F1_{o}"), vec!["l", "r"]);
                b.attach(ch, g);
                for d in ["l", "r"] {
                    let l = b.decision(Player::Leader, format!("L1_{a}_{o}_{d}"), vec!["u", "v"]);
                    b.attach(g, l);
                    for _ in 0..2 {
                        let (x, y) = pay(&mut rng);
                        let t = b.terminal(x, y);
                        b.attach(l, t);
                    }
                }
            }
        }
    }
    b.build().expect("random game is valid")
}

/// Leader plan from independent uniform-random behavior at every infoset.
pub fn random_plan(tp: &Treeplex, rng: &mut ChaCha8Rng) -> RealizationPlan {
    let probs = tp
        .infosets
        .iter()
        .map(|s| {
            let w: Vec<f64> = (0..s.num_actions).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
        .collect();
    behavioral_to_realization(tp, &BehavioralStrategy { owner: tp.owner, probs })
}

/// Follower value of a follower plan against a leader plan.
pub fn follower_value(sf: &SequenceForm, leader: &RealizationPlan, follower: &[f64]) -> f64 {
    sf.leaves
        .iter()
        .map(|l| l.chance * leader.probs[l.seqs[0]] * follower[l.seqs[1]] * l.payoffs[1])
        .sum()
}
