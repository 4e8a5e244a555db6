//! Follower best response, best-response values and the trunk.

use crate::efg::{RealizationPlan, SeqId, SequenceForm, EMPTY, FLOW_TOL};
use crate::error::{Error, Result};

/// Follower values within this tolerance count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Chance-weighted follower values of every follower sequence and infoset
/// against a fixed leader plan. Infoset vectors are indexed by local follower
/// infoset.
#[derive(Clone, Debug, PartialEq)]
pub struct BrvTable {
    pub brv_seq: Vec<f64>,
    pub brv_inf: Vec<f64>,
    /// Leader values under the chosen response, same indexing.
    pub leader_seq: Vec<f64>,
    pub leader_inf: Vec<f64>,
    pub best_action: Vec<SeqId>,
    /// Best value among the other actions; `-inf` for single-action infosets.
    pub second_value: Vec<f64>,
}

impl BrvTable {
    pub fn root_value(&self) -> f64 {
        self.brv_seq[EMPTY]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    pub plan: RealizationPlan,
    pub follower_value: f64,
    pub leader_value: f64,
    pub brvs: BrvTable,
}

pub fn compute_brvs(sf: &SequenceForm, leader: &RealizationPlan) -> Result<BrvTable> {
    leader.check(sf.leader(), 1e-6)?;
    let tp = sf.follower();
    let mut f = vec![0.0; tp.num_sequences()];
    let mut l = vec![0.0; tp.num_sequences()];
    for leaf in &sf.leaves {
        let w = leaf.chance * leader.probs[leaf.seqs[0]];
        if w != 0.0 {
            f[leaf.seqs[1]] += w * leaf.payoffs[1];
            l[leaf.seqs[1]] += w * leaf.payoffs[0];
        }
    }
    let n = tp.num_infosets();
    let mut brv_inf = vec![0.0; n];
    let mut leader_inf = vec![0.0; n];
    let mut best_action = vec![0; n];
    let mut second_value = vec![f64::NEG_INFINITY; n];
    // Children have larger indices, so a reverse sweep is bottom-up.
    for i in (0..n).rev() {
        let set = &tp.infosets[i];
        for s in set.seqs() {
            for &c in &tp.children[s] {
                f[s] += brv_inf[c];
                l[s] += leader_inf[c];
            }
        }
        let fmax = set.seqs().map(|s| f[s]).fold(f64::NEG_INFINITY, f64::max);
        let mut pick = set.first_seq;
        let mut pick_l = f64::NEG_INFINITY;
        for s in set.seqs() {
            if f[s] >= fmax - TIE_TOL && l[s] > pick_l + 1e-12 {
                pick = s;
                pick_l = l[s];
            }
        }
        best_action[i] = pick;
        brv_inf[i] = f[pick];
        leader_inf[i] = l[pick];
        second_value[i] = set
            .seqs()
            .filter(|&s| s != pick)
            .map(|s| f[s])
            .fold(f64::NEG_INFINITY, f64::max);
    }
    for &c in &tp.children[EMPTY] {
        f[EMPTY] += brv_inf[c];
        l[EMPTY] += leader_inf[c];
    }
    Ok(BrvTable {
        brv_seq: f,
        brv_inf,
        leader_seq: l,
        leader_inf,
        best_action,
        second_value,
    })
}

/// Pure follower best response with ties broken toward the leader, then toward
/// the lowest action.
pub fn best_response(sf: &SequenceForm, leader: &RealizationPlan) -> Result<BestResponse> {
    let brvs = compute_brvs(sf, leader)?;
    let tp = sf.follower();
    let mut probs = vec![0.0; tp.num_sequences()];
    probs[EMPTY] = 1.0;
    for (i, set) in tp.infosets.iter().enumerate() {
        if probs[set.parent_seq] == 1.0 {
            probs[brvs.best_action[i]] = 1.0;
        }
    }
    Ok(BestResponse {
        plan: RealizationPlan { owner: tp.owner, probs },
        follower_value: brvs.brv_seq[EMPTY],
        leader_value: brvs.leader_seq[EMPTY],
        brvs,
    })
}

/// Follower infosets reached with probability one by a pure response.
#[derive(Clone, Debug, PartialEq)]
pub struct Trunk {
    /// Indexed by local follower infoset.
    pub members: Vec<bool>,
    pub response: RealizationPlan,
}

impl Trunk {
    pub fn contains(&self, local: usize) -> bool {
        self.members[local]
    }
}

pub fn compute_trunk(sf: &SequenceForm, response: &RealizationPlan) -> Result<Trunk> {
    let tp = sf.follower();
    response.check(tp, FLOW_TOL)?;
    if !response.is_pure(FLOW_TOL) {
        return Err(Error::PlanMismatch("trunk needs a pure follower plan".into()));
    }
    let members = tp
        .infosets
        .iter()
        .map(|set| response.probs[set.parent_seq] > 0.5)
        .collect();
    Ok(Trunk {
        members,
        response: response.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::{GameBuilder, Player};

    #[test]
    fn leader_favoured_tie() {
        let mut b = GameBuilder::new("tie");
        let r = b.decision(Player::Follower, "I", vec!["a", "b"]);
        let x = b.terminal(0.0, 1.0);
        let y = b.terminal(2.0, 1.0);
        b.attach(r, x);
        b.attach(r, y);
        let g = b.build().unwrap();
        let sf = SequenceForm::new(&g).unwrap();
        let br = best_response(&sf, &RealizationPlan::uniform(sf.leader())).unwrap();
        assert_eq!(br.plan.probs, vec![1.0, 0.0, 1.0]);
        assert_eq!(br.leader_value, 2.0);
        assert_eq!(br.brvs.second_value[0], 1.0);
    }

    #[test]
    fn leaf_terms_sum() {
        let mut b = GameBuilder::new("sum");
        let r = b.chance(vec![("x", 0.3), ("y", 0.2), ("z", 0.5)]);
        let f = b.decision(Player::Follower, "I", vec!["only"]);
        b.attach(r, f);
        let t = b.terminal(0.0, 1.0);
        b.attach(f, t);
        for _ in 0..2 {
            let d = b.decision(Player::Follower, "J", vec!["s"]);
            b.attach(r, d);
            let t = b.terminal(0.0, 0.0);
            b.attach(d, t);
        }
        let g = b.build().unwrap();
        let sf = SequenceForm::new(&g).unwrap();
        let brv = compute_brvs(&sf, &RealizationPlan::uniform(sf.leader())).unwrap();
        assert!((brv.brv_seq[1] - 0.3).abs() < 1e-12);
        assert_eq!(brv.second_value[0], f64::NEG_INFINITY);
    }

    #[test]
    fn mixed_plan_refused_for_trunk() {
        let mut b = GameBuilder::new("mix");
        let r = b.decision(Player::Follower, "I", vec!["a", "b"]);
        for _ in 0..2 {
            let t = b.terminal(0.0, 0.0);
            b.attach(r, t);
        }
        let sf = SequenceForm::new(&b.build().unwrap()).unwrap();
        let mixed = RealizationPlan::uniform(sf.follower());
        assert!(compute_trunk(&sf, &mixed).is_err());
    }
}
