use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::efg::{GameTree, NodeId, NodeKind, Player, SeqId, SequenceForm, EMPTY};
use crate::error::{Error, Result};

/// How a game is cut into subgames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionScheme {
    /// One subgame per first-stage action pair and secondary game.
    TwoStage,
    /// Subgames cover the last `m` rounds; one per public history before them.
    GoofspielLastRounds(usize),
    /// One subgame per first-round betting history and public card.
    LeducPublicRound2,
    WholeGame,
    /// Each subgame given by its initial states; members are their subtrees.
    ExplicitRoots(Vec<Vec<NodeId>>),
    /// Each subgame given by its full member list.
    ExplicitNodeList(Vec<Vec<NodeId>>),
}

/// Accepts `two-stage`, `whole-game`, `leduc-public-round2`,
/// `goofspiel-last-rounds:M`, or the JSON form of any scheme.
impl std::str::FromStr for PartitionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unknown scheme '{s}'"));
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("scheme '{s}': {e}")));
        }
        if let Some(m) = s.strip_prefix("goofspiel-last-rounds:") {
            return m.parse().map(PartitionScheme::GoofspielLastRounds).map_err(|_| bad());
        }
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| bad())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subgame {
    pub id: usize,
    /// Initial states: members whose parent is outside the subgame.
    pub roots: Vec<NodeId>,
    pub nodes: Vec<NodeId>,
    /// Local treeplex infoset indices per player.
    pub infosets: [Vec<usize>; 2],
    pub heads: [Vec<usize>; 2],
    /// Indices into `SequenceForm::leaves`.
    pub leaves: Vec<usize>,
    /// Distinct sequences of each player at the initial states.
    pub entries: [Vec<SeqId>; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubgamePartition {
    pub subgames: Vec<Subgame>,
    pub node_subgame: Vec<Option<usize>>,
    /// Initial state above every member node.
    pub node_root: Vec<Option<NodeId>>,
    /// Subgame of each local infoset, per player.
    pub infoset_subgame: [Vec<Option<usize>>; 2],
}

impl SubgamePartition {
    pub fn len(&self) -> usize {
        self.subgames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgames.is_empty()
    }

    /// Sequence of `player` at the initial state above `node`.
    pub fn entry_seq(&self, sf: &SequenceForm, node: NodeId, player: Player) -> Option<SeqId> {
        self.node_root[node].map(|r| sf.node_seqs[r][player.index()])
    }

    /// For a sequence of `player` inside a subgame, the sequence it extends at entry.
    pub fn seq_entry(&self, sf: &SequenceForm, player: Player, seq: SeqId) -> Option<SeqId> {
        let tp = sf.treeplex(player);
        let sets = &self.infoset_subgame[player.index()];
        let j = sets[tp.infoset_of(seq)?]?;
        let mut s = seq;
        loop {
            match tp.infoset_of(s) {
                Some(i) if sets[i] == Some(j) => s = tp.infosets[i].parent_seq,
                _ => return Some(s),
            }
        }
    }
}

fn children_of_chance(game: &GameTree, depth_filter: impl Fn(usize) -> bool) -> Vec<NodeId> {
    let mut chance_depth = vec![0usize; game.num_nodes()];
    let mut out = Vec::new();
    for id in 0..game.num_nodes() {
        if let Some((p, _)) = game.node(id).parent {
            let is_chance = matches!(game.node(p).kind, NodeKind::Chance { .. });
            chance_depth[id] = chance_depth[p] + usize::from(is_chance);
            if is_chance && depth_filter(chance_depth[p]) {
                out.push(id);
            }
        }
    }
    out
}

/// Number of chance nodes on the longest root-to-leaf path.
fn chance_rounds(game: &GameTree) -> usize {
    let mut depth = vec![0usize; game.num_nodes()];
    let mut best = 0;
    for id in 0..game.num_nodes() {
        let here = usize::from(matches!(game.node(id).kind, NodeKind::Chance { .. }));
        let d = game.node(id).parent.map_or(0, |(p, _)| depth[p]) + here;
        depth[id] = d;
        best = best.max(d);
    }
    best
}

fn scheme_roots(game: &GameTree, scheme: &PartitionScheme) -> Result<Vec<Vec<NodeId>>> {
    Ok(match scheme {
        PartitionScheme::TwoStage => {
            let roots = children_of_chance(game, |_| true);
            if roots.is_empty() {
                return Err(Error::InvalidPartition(
                    "two-stage scheme: game has no chance node".into(),
                ));
            }
            roots.into_iter().map(|r| vec![r]).collect()
        }
        PartitionScheme::GoofspielLastRounds(m) => {
            let n = chance_rounds(game);
            if *m == 0 || *m > n {
                return Err(Error::InvalidPartition(format!("need 1 <= m <= {n}, got {m}")));
            }
            let split = n - m;
            let roots: Vec<NodeId> = (0..game.num_nodes())
                .filter(|&id| {
                    matches!(game.node(id).kind, NodeKind::Chance { .. }) && {
                        let mut k = 0;
                        let mut cur = game.node(id).parent;
                        while let Some((p, _)) = cur {
                            k += usize::from(matches!(game.node(p).kind, NodeKind::Chance { .. }));
                            cur = game.node(p).parent;
                        }
                        k == split
                    }
                })
                .collect();
            roots.into_iter().map(|r| vec![r]).collect()
        }
        PartitionScheme::LeducPublicRound2 => {
            let mut groups: BTreeMap<String, (NodeId, Vec<NodeId>)> = BTreeMap::new();
            for r in children_of_chance(game, |d| d == 2) {
                // Public key: every action label on the path except the two private deals.
                let mut labels = Vec::new();
                let mut cur = r;
                while let Some((p, _)) = game.node(cur).parent {
                    labels.push(game.incoming_action(cur).unwrap_or_default().to_string());
                    cur = p;
                }
                labels.reverse();
                let key = labels[2..].join(" ");
                groups.entry(key).or_insert((r, Vec::new())).1.push(r);
            }
            let mut v: Vec<(NodeId, Vec<NodeId>)> = groups.into_values().collect();
            v.sort_by_key(|g| g.0);
            v.into_iter().map(|g| g.1).collect()
        }
        PartitionScheme::WholeGame => vec![vec![game.root()]],
        PartitionScheme::ExplicitRoots(r) => r.clone(),
        PartitionScheme::ExplicitNodeList(_) => unreachable!("handled by caller"),
    })
}

pub fn partition_subgames(game: &GameTree, sf: &SequenceForm, scheme: &PartitionScheme) -> Result<SubgamePartition> {
    let sets: Vec<Vec<NodeId>> = match scheme {
        PartitionScheme::ExplicitNodeList(sets) => sets.clone(),
        _ => scheme_roots(game, scheme)?
            .into_iter()
            .map(|roots| {
                let mut nodes: Vec<NodeId> = roots.iter().flat_map(|&r| game.subtree(r)).collect();
                nodes.sort_unstable();
                nodes
            })
            .collect(),
    };
    from_node_sets(game, sf, sets)
}

/// Checks disjointness, closure and infoset containment, then derives heads,
/// leaves and entry sequences.
pub fn from_node_sets(game: &GameTree, sf: &SequenceForm, sets: Vec<Vec<NodeId>>) -> Result<SubgamePartition> {
    let n = game.num_nodes();
    let mut node_subgame: Vec<Option<usize>> = vec![None; n];
    for (j, set) in sets.iter().enumerate() {
        for &id in set {
            if id >= n {
                return Err(Error::InvalidPartition(format!("subgame {j}: unknown node {id}")));
            }
            if let Some(k) = node_subgame[id] {
                return Err(Error::InvalidPartition(format!("node {id} is in subgames {k} and {j}")));
            }
            node_subgame[id] = Some(j);
        }
    }
    for (id, sub) in node_subgame.iter().enumerate() {
        if let Some(j) = sub {
            for &c in &game.node(id).children {
                if node_subgame[c] != Some(*j) {
                    return Err(Error::InvalidPartition(format!(
                        "closure: child {c} of node {id} leaves subgame {j}"
                    )));
                }
            }
        }
    }
    let mut infoset_subgame: [Vec<Option<usize>>; 2] = [
        vec![None; sf.leader().num_infosets()],
        vec![None; sf.follower().num_infosets()],
    ];
    for (p, sets_p) in infoset_subgame.iter_mut().enumerate() {
        let tp = &sf.treeplexes[p];
        for (local, ti) in tp.infosets.iter().enumerate() {
            let set = game.infoset(ti.infoset);
            let first = node_subgame[set.members[0]];
            if let Some(&bad) = set.members.iter().find(|&&m| node_subgame[m] != first) {
                return Err(Error::InvalidPartition(format!(
                    "infoset '{}' of the {} is split across subgames (node {bad})",
                    set.label, set.owner
                )));
            }
            sets_p[local] = first;
        }
    }

    let mut node_root: Vec<Option<NodeId>> = vec![None; n];
    let mut subgames: Vec<Subgame> = sets
        .iter()
        .enumerate()
        .map(|(j, _)| Subgame {
            id: j,
            roots: Vec::new(),
            nodes: Vec::new(),
            infosets: [Vec::new(), Vec::new()],
            heads: [Vec::new(), Vec::new()],
            leaves: Vec::new(),
            entries: [Vec::new(), Vec::new()],
        })
        .collect();
    for id in 0..n {
        let Some(j) = node_subgame[id] else { continue };
        let sg = &mut subgames[j];
        sg.nodes.push(id);
        let parent_inside = game.node(id).parent.is_some_and(|(p, _)| node_subgame[p] == Some(j));
        if parent_inside {
            node_root[id] = node_root[game.node(id).parent.expect("has parent").0];
        } else {
            node_root[id] = Some(id);
            sg.roots.push(id);
            for p in 0..2 {
                let s = sf.node_seqs[id][p];
                if !sg.entries[p].contains(&s) {
                    sg.entries[p].push(s);
                }
            }
        }
        if let Some(l) = sf.leaf_of_node[id] {
            sg.leaves.push(l);
        }
    }
    for (p, sets_p) in infoset_subgame.iter().enumerate() {
        let tp = &sf.treeplexes[p];
        for (local, sub) in sets_p.iter().enumerate() {
            let Some(j) = *sub else { continue };
            subgames[j].infosets[p].push(local);
            let parent = tp.infosets[local].parent_seq;
            let is_head = parent == EMPTY || tp.infoset_of(parent).is_none_or(|pi| sets_p[pi] != Some(j));
            if is_head {
                subgames[j].heads[p].push(local);
            }
        }
    }
    for sg in &mut subgames {
        sg.entries[0].sort_unstable();
        sg.entries[1].sort_unstable();
        if sg.nodes.is_empty() {
            return Err(Error::InvalidPartition(format!("subgame {} is empty", sg.id)));
        }
    }
    Ok(SubgamePartition {
        subgames,
        node_subgame,
        node_root,
        infoset_subgame,
    })
}
