use serde::{Deserialize, Serialize};

use super::game::Player;
use super::treeplex::{SeqId, SequenceForm, Treeplex, EMPTY};
use crate::error::{Error, Result};

pub const FLOW_TOL: f64 = 1e-9;

/// Mixed strategy in sequence form: probability of each sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationPlan {
    pub owner: Player,
    pub probs: Vec<f64>,
}

impl RealizationPlan {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, seq: SeqId) -> f64 {
        self.probs[seq]
    }

    pub fn uniform(tp: &Treeplex) -> Self {
        behavioral_to_realization(tp, &BehavioralStrategy::uniform(tp))
    }

    /// Checks that the plan belongs to `tp` and satisfies the flow constraints.
    pub fn check(&self, tp: &Treeplex, tol: f64) -> Result<()> {
        if self.owner != tp.owner || self.probs.len() != tp.num_sequences() {
            return Err(Error::PlanMismatch(format!(
                "{} plan with {} sequences does not fit {} treeplex with {}",
                self.owner,
                self.probs.len(),
                tp.owner,
                tp.num_sequences()
            )));
        }
        if (self.probs[EMPTY] - 1.0).abs() > tol {
            return Err(Error::PlanMismatch(format!(
                "empty sequence has probability {}",
                self.probs[EMPTY]
            )));
        }
        for (i, set) in tp.infosets.iter().enumerate() {
            let total: f64 = set.seqs().map(|s| self.probs[s]).sum();
            if (total - self.probs[set.parent_seq]).abs() > tol {
                return Err(Error::PlanMismatch(format!(
                    "flow violated at local infoset {i}: {} vs {}",
                    total, self.probs[set.parent_seq]
                )));
            }
        }
        if let Some(p) = self.probs.iter().find(|p| !(-tol..=1.0 + tol).contains(*p)) {
            return Err(Error::PlanMismatch(format!("probability {p} out of range")));
        }
        Ok(())
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.probs.iter().all(|&p| p.abs() <= tol || (p - 1.0).abs() <= tol)
    }
}

/// Action distribution per local infoset.
#[derive(Clone, Debug, PartialEq)]
pub struct BehavioralStrategy {
    pub owner: Player,
    pub probs: Vec<Vec<f64>>,
}

impl BehavioralStrategy {
    pub fn uniform(tp: &Treeplex) -> Self {
        BehavioralStrategy {
            owner: tp.owner,
            probs: tp
                .infosets
                .iter()
                .map(|s| vec![1.0 / s.num_actions as f64; s.num_actions])
                .collect(),
        }
    }
}

/// Zero-reach infosets get the uniform distribution.
pub fn realization_to_behavioral(tp: &Treeplex, plan: &RealizationPlan) -> BehavioralStrategy {
    let probs = tp
        .infosets
        .iter()
        .map(|set| {
            let parent = plan.probs[set.parent_seq];
            if parent > FLOW_TOL {
                set.seqs().map(|s| (plan.probs[s] / parent).max(0.0)).collect()
            } else {
                vec![1.0 / set.num_actions as f64; set.num_actions]
            }
        })
        .collect();
    BehavioralStrategy { owner: tp.owner, probs }
}

pub fn behavioral_to_realization(tp: &Treeplex, bs: &BehavioralStrategy) -> RealizationPlan {
    let mut probs = vec![0.0; tp.num_sequences()];
    probs[EMPTY] = 1.0;
    // Infosets are ordered so that parents come first.
    for (i, set) in tp.infosets.iter().enumerate() {
        let parent = probs[set.parent_seq];
        for (a, s) in set.seqs().enumerate() {
            probs[s] = parent * bs.probs[i][a];
        }
    }
    RealizationPlan { owner: tp.owner, probs }
}

/// Expected utilities `(leader, follower)` of a pair of plans.
pub fn expected_payoffs(sf: &SequenceForm, leader: &RealizationPlan, follower: &RealizationPlan) -> Result<(f64, f64)> {
    leader.check(sf.leader(), 1e-6)?;
    follower.check(sf.follower(), 1e-6)?;
    let mut u = [0.0; 2];
    for leaf in &sf.leaves {
        let w = leaf.chance * leader.probs[leaf.seqs[0]] * follower.probs[leaf.seqs[1]];
        u[0] += w * leaf.payoffs[0];
        u[1] += w * leaf.payoffs[1];
    }
    Ok((u[0], u[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::game::GameBuilder;
    use crate::efg::treeplex::build_treeplex;

    fn two_level() -> Treeplex {
        let mut b = GameBuilder::new("t");
        let r = b.decision(Player::Leader, "a", vec!["x", "y"]);
        let c = b.decision(Player::Leader, "b", vec!["u", "v", "w"]);
        b.attach(r, c);
        let t = b.terminal(0.0, 0.0);
        b.attach(r, t);
        for _ in 0..3 {
            let t = b.terminal(0.0, 0.0);
            b.attach(c, t);
        }
        build_treeplex(&b.build().unwrap(), Player::Leader).unwrap()
    }

    #[test]
    fn behavioral_half() {
        let tp = two_level();
        let plan = RealizationPlan {
            owner: Player::Leader,
            probs: vec![1.0, 0.5, 0.5, 0.5, 0.0, 0.0],
        };
        plan.check(&tp, FLOW_TOL).unwrap();
        let bs = realization_to_behavioral(&tp, &plan);
        assert_eq!(bs.probs[0], vec![0.5, 0.5]);
    }

    #[test]
    fn zero_reach_uniform() {
        let tp = two_level();
        let plan = RealizationPlan {
            owner: Player::Leader,
            probs: vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        };
        assert!(plan.is_pure(FLOW_TOL));
        let bs = realization_to_behavioral(&tp, &plan);
        assert_eq!(bs.probs[1], vec![1.0 / 3.0; 3]);
        let back = behavioral_to_realization(&tp, &bs);
        assert_eq!(back, plan);
    }

    #[test]
    fn flow_violation_detected() {
        let tp = two_level();
        let plan = RealizationPlan {
            owner: Player::Leader,
            probs: vec![1.0, 0.6, 0.5, 0.6, 0.0, 0.0],
        };
        assert!(plan.check(&tp, FLOW_TOL).is_err());
        let short = RealizationPlan {
            owner: Player::Leader,
            probs: vec![1.0],
        };
        assert!(matches!(short.check(&tp, FLOW_TOL), Err(Error::PlanMismatch(_))));
    }
}
