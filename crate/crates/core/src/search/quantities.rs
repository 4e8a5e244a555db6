use crate::efg::{NodeId, RealizationPlan, SequenceForm};

use super::partition::{Subgame, SubgamePartition};

/// Blueprint-derived weights of one subgame.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgameQuantities {
    pub subgame: usize,
    /// Leader-and-chance reach of each initial state, in `Subgame::roots` order.
    pub omega: Vec<(NodeId, f64)>,
    /// Total probability of entering the subgame under blueprint and response.
    pub mass: f64,
    /// Chance times leader reach up to entry, per entry of `Subgame::leaves`.
    pub leaf_weight: Vec<f64>,
    /// `leaf_weight` times the follower's blueprint reach of the entry.
    pub leaf_chance: Vec<f64>,
    /// Normalizer over initial states; zero when no state is reachable.
    pub eta: f64,
}

impl SubgameQuantities {
    pub fn omega_of(&self, node: NodeId) -> f64 {
        self.omega.iter().find(|(h, _)| *h == node).map_or(0.0, |&(_, w)| w)
    }

    /// Chance-weighted follower payoff of each subgame leaf, for the follower
    /// values inside the subgame.
    pub fn follower_table(&self, sf: &SequenceForm, sg: &Subgame) -> Vec<f64> {
        sg.leaves
            .iter()
            .zip(&self.leaf_weight)
            .map(|(&l, w)| w * sf.leaves[l].payoffs[1])
            .collect()
    }
}

pub fn compute_subgame_quantities(
    sf: &SequenceForm,
    partition: &SubgamePartition,
    leader: &RealizationPlan,
    response: &RealizationPlan,
) -> Vec<SubgameQuantities> {
    partition
        .subgames
        .iter()
        .map(|sg| {
            let omega: Vec<(NodeId, f64)> = sg
                .roots
                .iter()
                .map(|&h| (h, sf.node_chance[h] * leader.probs[sf.node_seqs[h][0]]))
                .collect();
            let total: f64 = omega.iter().map(|w| w.1).sum();
            let mut leaf_weight = Vec::with_capacity(sg.leaves.len());
            let mut leaf_chance = Vec::with_capacity(sg.leaves.len());
            let mut mass = 0.0;
            for &l in &sg.leaves {
                let leaf = &sf.leaves[l];
                let root = partition.node_root[leaf.node].expect("leaf inside subgame");
                let [e1, e2] = sf.node_seqs[root];
                let w = leaf.chance * leader.probs[e1];
                leaf_weight.push(w);
                leaf_chance.push(w * response.probs[e2]);
                mass += leaf.chance * leader.probs[leaf.seqs[0]] * response.probs[leaf.seqs[1]];
            }
            SubgameQuantities {
                subgame: sg.id,
                omega,
                mass,
                leaf_weight,
                leaf_chance,
                eta: if total > 0.0 { 1.0 / total } else { 0.0 },
            }
        })
        .collect()
}
