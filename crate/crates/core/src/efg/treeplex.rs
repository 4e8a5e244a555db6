use std::collections::BTreeMap;

use super::game::{validate_game, GameTree, InfosetId, NodeId, NodeKind, Player};
use crate::error::{Error, Result};

pub type SeqId = usize;

/// The empty sequence always has id 0.
pub const EMPTY: SeqId = 0;

#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub id: SeqId,
    /// Local infoset index (into `Treeplex::infosets`) this sequence extends; `None` for the empty sequence.
    pub parent_infoset: Option<usize>,
    pub action: Option<usize>,
    pub parent_sequence: Option<SeqId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeplexInfoset {
    pub infoset: InfosetId,
    pub parent_seq: SeqId,
    /// Sequences of this infoset are `first_seq .. first_seq + num_actions`.
    pub first_seq: SeqId,
    pub num_actions: usize,
}

impl TreeplexInfoset {
    pub fn seqs(&self) -> std::ops::Range<SeqId> {
        self.first_seq..self.first_seq + self.num_actions
    }
}

/// Per-player sequence/infoset tree rooted at the empty sequence.
/// Child infosets always have larger local indices than their ancestors.
#[derive(Clone, Debug, PartialEq)]
pub struct Treeplex {
    pub owner: Player,
    pub sequences: Vec<Sequence>,
    pub infosets: Vec<TreeplexInfoset>,
    /// Local infosets whose parent sequence is the key.
    pub children: Vec<Vec<usize>>,
    local: Vec<Option<usize>>,
}

impl Treeplex {
    pub fn num_sequences(&self) -> usize {
        self.sequences.len()
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.len()
    }

    pub fn local(&self, infoset: InfosetId) -> Option<usize> {
        self.local.get(infoset).copied().flatten()
    }

    pub fn seq(&self, local: usize, action: usize) -> SeqId {
        self.infosets[local].first_seq + action
    }

    pub fn infoset_of(&self, seq: SeqId) -> Option<usize> {
        self.sequences[seq].parent_infoset
    }

    pub fn parent_of(&self, seq: SeqId) -> Option<SeqId> {
        self.sequences[seq].parent_sequence
    }

    /// `true` if `anc` is a (non-strict) prefix of `seq`.
    pub fn is_prefix(&self, anc: SeqId, seq: SeqId) -> bool {
        let mut s = Some(seq);
        while let Some(x) = s {
            if x == anc {
                return true;
            }
            s = self.sequences[x].parent_sequence;
        }
        false
    }
}

/// Builds the treeplex of `player` (leader or follower).
pub fn build_treeplex(game: &GameTree, player: Player) -> Result<Treeplex> {
    if player == Player::Chance {
        return Err(Error::InvalidParameter("chance has no treeplex".into()));
    }
    let report = validate_game(game);
    if !report.is_valid() {
        return Err(Error::InvalidGame(report));
    }
    Ok(build_unvalidated(game, player).0)
}

fn build_unvalidated(game: &GameTree, player: Player) -> (Treeplex, Vec<SeqId>) {
    let mut tp = Treeplex {
        owner: player,
        sequences: vec![Sequence {
            id: EMPTY,
            parent_infoset: None,
            action: None,
            parent_sequence: None,
        }],
        infosets: Vec::new(),
        children: vec![Vec::new()],
        local: vec![None; game.infosets().len()],
    };
    let mut node_seq = vec![EMPTY; game.num_nodes()];
    for id in 0..game.num_nodes() {
        let node = game.node(id);
        if let Some((p, a)) = node.parent {
            node_seq[id] = match game.node(p).kind {
                NodeKind::Decision { player: q, infoset } if q == player => {
                    let l = tp.local[infoset].expect("parent infoset registered");
                    tp.seq(l, a)
                }
                _ => node_seq[p],
            };
        }
        if let NodeKind::Decision { player: q, infoset } = node.kind {
            if q == player && tp.local[infoset].is_none() {
                let local = tp.infosets.len();
                let parent_seq = node_seq[id];
                let first_seq = tp.sequences.len();
                let n = game.infoset(infoset).actions.len();
                tp.infosets.push(TreeplexInfoset {
                    infoset,
                    parent_seq,
                    first_seq,
                    num_actions: n,
                });
                tp.children[parent_seq].push(local);
                for a in 0..n {
                    tp.sequences.push(Sequence {
                        id: first_seq + a,
                        parent_infoset: Some(local),
                        action: Some(a),
                        parent_sequence: Some(parent_seq),
                    });
                    tp.children.push(Vec::new());
                }
                tp.local[infoset] = Some(local);
            }
        }
    }
    (tp, node_seq)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    pub node: NodeId,
    /// Leader and follower sequences leading to the leaf.
    pub seqs: [SeqId; 2],
    /// Product of chance probabilities on the path.
    pub chance: f64,
    pub payoffs: [f64; 2],
}

/// Both treeplexes of a game plus per-node sequences, chance reach and the
/// payoff table summing chance-weighted leaf payoffs per sequence pair.
#[derive(Clone, Debug)]
pub struct SequenceForm {
    pub treeplexes: [Treeplex; 2],
    pub node_seqs: Vec<[SeqId; 2]>,
    pub node_chance: Vec<f64>,
    pub leaves: Vec<Leaf>,
    pub leaf_of_node: Vec<Option<usize>>,
    pub payoff_table: Vec<((SeqId, SeqId), [f64; 2])>,
}

impl SequenceForm {
    pub fn new(game: &GameTree) -> Result<Self> {
        let report = validate_game(game);
        if !report.is_valid() {
            return Err(Error::InvalidGame(report));
        }
        let (t1, s1) = build_unvalidated(game, Player::Leader);
        let (t2, s2) = build_unvalidated(game, Player::Follower);
        let mut node_chance = vec![1.0; game.num_nodes()];
        let mut leaves = Vec::new();
        let mut leaf_of_node = vec![None; game.num_nodes()];
        let mut table: BTreeMap<(SeqId, SeqId), [f64; 2]> = BTreeMap::new();
        for id in 0..game.num_nodes() {
            let node = game.node(id);
            if let Some((p, a)) = node.parent {
                node_chance[id] = match &game.node(p).kind {
                    NodeKind::Chance { probs, .. } => node_chance[p] * probs[a],
                    _ => node_chance[p],
                };
            }
            if let NodeKind::Terminal { payoffs } = node.kind {
                let seqs = [s1[id], s2[id]];
                leaf_of_node[id] = Some(leaves.len());
                leaves.push(Leaf {
                    node: id,
                    seqs,
                    chance: node_chance[id],
                    payoffs,
                });
                let e = table.entry((seqs[0], seqs[1])).or_insert([0.0; 2]);
                e[0] += payoffs[0] * node_chance[id];
                e[1] += payoffs[1] * node_chance[id];
            }
        }
        let node_seqs = s1.into_iter().zip(s2).map(|(a, b)| [a, b]).collect();
        Ok(SequenceForm {
            treeplexes: [t1, t2],
            node_seqs,
            node_chance,
            leaves,
            leaf_of_node,
            payoff_table: table.into_iter().collect(),
        })
    }

    pub fn leader(&self) -> &Treeplex {
        &self.treeplexes[0]
    }

    pub fn follower(&self) -> &Treeplex {
        &self.treeplexes[1]
    }

    pub fn treeplex(&self, player: Player) -> &Treeplex {
        &self.treeplexes[player.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::game::GameBuilder;

    #[test]
    fn single_terminal() {
        let mut b = GameBuilder::new("leaf");
        b.terminal(1.0, 2.0);
        let g = b.build().unwrap();
        let tp = build_treeplex(&g, Player::Leader).unwrap();
        assert_eq!(tp.num_sequences(), 1);
        assert_eq!(tp.num_infosets(), 0);
        let sf = SequenceForm::new(&g).unwrap();
        assert_eq!(sf.payoff_table, vec![((0, 0), [1.0, 2.0])]);
    }

    #[test]
    fn stacked_infosets() {
        let mut b = GameBuilder::new("stack");
        let r = b.decision(Player::Leader, "a", vec!["x", "y"]);
        let c = b.decision(Player::Leader, "b", vec!["u", "v"]);
        b.attach(r, c);
        let t = b.terminal(0.0, 0.0);
        b.attach(r, t);
        for _ in 0..2 {
            let t = b.terminal(1.0, 0.0);
            b.attach(c, t);
        }
        let g = b.build().unwrap();
        let tp = build_treeplex(&g, Player::Leader).unwrap();
        assert_eq!(tp.num_sequences(), 5);
        assert_eq!(tp.infosets[1].parent_seq, 1);
        assert!(tp.is_prefix(1, 3));
        assert!(!tp.is_prefix(2, 3));
        assert!(build_treeplex(&g, Player::Chance).is_err());
    }
}
