use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type InfosetId = usize;

/// Leader is player 1, Follower is player 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Leader,
    Follower,
    Chance,
}

impl Player {
    /// 0 for the leader, 1 for the follower.
    pub fn index(self) -> usize {
        match self {
            Player::Leader => 0,
            Player::Follower => 1,
            Player::Chance => panic!("chance has no player index"),
        }
    }

    pub fn from_index(i: usize) -> Player {
        match i {
            0 => Player::Leader,
            1 => Player::Follower,
            _ => panic!("player index out of range: {i}"),
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Player::Leader => "leader",
            Player::Follower => "follower",
            Player::Chance => "chance",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Chance { actions: Vec<String>, probs: Vec<f64> },
    Decision { player: Player, infoset: InfosetId },
    Terminal { payoffs: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    /// Parent node and the index of the action leading here.
    pub parent: Option<(NodeId, usize)>,
    pub children: Vec<NodeId>,
}

impl Node {
    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Terminal { .. })
    }

    pub fn player(&self) -> Option<Player> {
        match self.kind {
            NodeKind::Chance { .. } => Some(Player::Chance),
            NodeKind::Decision { player, .. } => Some(player),
            NodeKind::Terminal { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfoSet {
    pub owner: Player,
    pub label: String,
    pub actions: Vec<String>,
    pub members: Vec<NodeId>,
}

/// Immutable game tree. Node ids follow depth-first preorder with the root at 0;
/// infoset ids follow the order in which their first member appears.
#[derive(Clone, Debug, PartialEq)]
pub struct GameTree {
    name: String,
    metadata: BTreeMap<String, serde_json::Value>,
    nodes: Vec<Node>,
    infosets: Vec<InfoSet>,
}

impl GameTree {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn metadata(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: &str, value: serde_json::Value) {
        self.metadata.insert(key.to_string(), value);
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn infoset(&self, id: InfosetId) -> &InfoSet {
        &self.infosets[id]
    }

    pub fn infosets(&self) -> &[InfoSet] {
        &self.infosets
    }

    pub fn actions(&self, id: NodeId) -> &[String] {
        match &self.nodes[id].kind {
            NodeKind::Chance { actions, .. } => actions,
            NodeKind::Decision { infoset, .. } => &self.infosets[*infoset].actions,
            NodeKind::Terminal { .. } => &[],
        }
    }

    /// Label of the action leading into `id`, if any.
    pub fn incoming_action(&self, id: NodeId) -> Option<&str> {
        let (p, a) = self.nodes[id].parent?;
        Some(self.actions(p)[a].as_str())
    }

    pub fn terminals(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_terminal())
    }

    pub fn infoset_by_label(&self, owner: Player, label: &str) -> Option<InfosetId> {
        self.infosets.iter().position(|s| s.owner == owner && s.label == label)
    }

    /// All nodes in the subtree rooted at `id`, in preorder.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            for &c in self.nodes[n].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn max_abs_payoff(&self, player: Player) -> f64 {
        let i = player.index();
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Terminal { payoffs } => Some(payoffs[i].abs()),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    /// Same tree with every terminal payoff replaced by `f(node, payoffs)`.
    pub fn map_payoffs(&self, mut f: impl FnMut(NodeId, [f64; 2]) -> [f64; 2]) -> GameTree {
        let mut g = self.clone();
        for (i, n) in g.nodes.iter_mut().enumerate() {
            if let NodeKind::Terminal { payoffs } = &mut n.kind {
                *payoffs = f(i, *payoffs);
            }
        }
        g
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Structure,
    ChanceNormalization,
    InfosetOwner,
    InfosetActions,
    PerfectRecall,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub nodes: Vec<NodeId>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, nodes: Vec<NodeId>, message: String) {
        self.violations.push(Violation { kind, nodes, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        let msgs: Vec<&str> = self.violations.iter().map(|v| v.message.as_str()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

pub const CHANCE_TOL: f64 = 1e-12;

/// Checks chance normalization, infoset consistency and perfect recall.
pub fn validate_game(game: &GameTree) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (id, node) in game.nodes.iter().enumerate() {
        match &node.kind {
            NodeKind::Chance { actions, probs } => {
                if probs.len() != actions.len() || node.children.len() != actions.len() {
                    report.push(
                        ViolationKind::Structure,
                        vec![id],
                        format!("node {id}: chance action/probability/children counts differ"),
                    );
                    continue;
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > CHANCE_TOL || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    report.push(
                        ViolationKind::ChanceNormalization,
                        vec![id],
                        format!("chance normalization: node {id} probabilities sum to {sum}"),
                    );
                }
            }
            NodeKind::Decision { player, infoset } => {
                if *player == Player::Chance {
                    report.push(
                        ViolationKind::Structure,
                        vec![id],
                        format!("node {id}: decision node owned by chance"),
                    );
                }
                let set = &game.infosets[*infoset];
                if set.owner != *player {
                    report.push(
                        ViolationKind::InfosetOwner,
                        vec![id],
                        format!("node {id}: owner differs from infoset '{}'", set.label),
                    );
                }
                if node.children.len() != set.actions.len() || set.actions.is_empty() {
                    report.push(
                        ViolationKind::Structure,
                        vec![id],
                        format!("node {id}: children do not match actions of '{}'", set.label),
                    );
                }
            }
            NodeKind::Terminal { payoffs } => {
                if !node.children.is_empty() {
                    report.push(
                        ViolationKind::Structure,
                        vec![id],
                        format!("terminal node {id} has children"),
                    );
                }
                if !payoffs.iter().all(|u| u.is_finite()) {
                    report.push(
                        ViolationKind::Structure,
                        vec![id],
                        format!("terminal node {id} has non-finite payoffs"),
                    );
                }
            }
        }
    }
    if !report.is_valid() {
        return report;
    }

    // Owner-sequence of every node for both players.
    let mut own: Vec<[Vec<(InfosetId, usize)>; 2]> = vec![[Vec::new(), Vec::new()]; game.nodes.len()];
    for id in 0..game.nodes.len() {
        if let Some((p, a)) = game.nodes[id].parent {
            let mut seqs = own[p].clone();
            if let NodeKind::Decision { player, infoset } = game.nodes[p].kind {
                seqs[player.index()].push((infoset, a));
            }
            own[id] = seqs;
        }
    }
    for (sid, set) in game.infosets.iter().enumerate() {
        let Some(&first) = set.members.first() else {
            continue;
        };
        let pi = set.owner.index();
        for &m in &set.members[1..] {
            if own[m][pi] != own[first][pi] {
                report.push(
                    ViolationKind::PerfectRecall,
                    vec![first, m],
                    format!(
                        "perfect recall: infoset {sid} '{}' joins nodes {first} and {m} reached by different {} sequences",
                        set.label, set.owner
                    ),
                );
            }
        }
    }
    report
}

#[derive(Clone, Debug)]
enum RawKind {
    Chance {
        actions: Vec<String>,
        probs: Vec<f64>,
    },
    Decision {
        player: Player,
        label: String,
        actions: Vec<String>,
    },
    Terminal {
        payoffs: [f64; 2],
    },
}

#[derive(Clone, Debug)]
struct RawNode {
    kind: RawKind,
    children: Vec<NodeId>,
    has_parent: bool,
}

/// Incremental construction of a [`GameTree`]. Ids handed out by the builder are
/// provisional; `build` renumbers nodes into preorder.
#[derive(Clone, Debug, Default)]
pub struct GameBuilder {
    name: String,
    metadata: BTreeMap<String, serde_json::Value>,
    nodes: Vec<RawNode>,
}

impl GameBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        GameBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn metadata(&mut self, key: &str, value: serde_json::Value) -> &mut Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn chance<S: Into<String>>(&mut self, outcomes: Vec<(S, f64)>) -> NodeId {
        let (actions, probs) = outcomes.into_iter().map(|(a, p)| (a.into(), p)).unzip();
        self.push(RawKind::Chance { actions, probs })
    }

    pub fn decision<S: Into<String>>(&mut self, player: Player, infoset: impl Into<String>, actions: Vec<S>) -> NodeId {
        self.push(RawKind::Decision {
            player,
            label: infoset.into(),
            actions: actions.into_iter().map(Into::into).collect(),
        })
    }

    pub fn terminal(&mut self, leader: f64, follower: f64) -> NodeId {
        self.push(RawKind::Terminal {
            payoffs: [leader, follower],
        })
    }

    pub fn attach(&mut self, parent: NodeId, child: NodeId) {
        self.nodes[parent].children.push(child);
        self.nodes[child].has_parent = true;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, kind: RawKind) -> NodeId {
        self.nodes.push(RawNode {
            kind,
            children: Vec::new(),
            has_parent: false,
        });
        self.nodes.len() - 1
    }

    /// Builds and validates.
    pub fn build(self) -> Result<GameTree> {
        let (game, mut report) = self.assemble()?;
        report.violations.extend(validate_game(&game).violations);
        if report.is_valid() {
            Ok(game)
        } else {
            Err(Error::InvalidGame(report))
        }
    }

    /// Builds without semantic validation; only structural errors are reported.
    pub fn build_unchecked(self) -> Result<GameTree> {
        Ok(self.assemble()?.0)
    }

    fn assemble(self) -> Result<(GameTree, ValidationReport)> {
        let mut report = ValidationReport::default();
        let roots: Vec<NodeId> = (0..self.nodes.len()).filter(|&i| !self.nodes[i].has_parent).collect();
        if roots.len() != 1 {
            report.push(
                ViolationKind::Structure,
                roots.clone(),
                format!("expected exactly one root, found {}", roots.len()),
            );
            return Err(Error::InvalidGame(report));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let expected = match &n.kind {
                RawKind::Chance { actions, .. } | RawKind::Decision { actions, .. } => actions.len(),
                RawKind::Terminal { .. } => 0,
            };
            if n.children.len() != expected {
                report.push(
                    ViolationKind::Structure,
                    vec![i],
                    format!("node {i}: {} children for {expected} actions", n.children.len()),
                );
            }
        }
        if !report.is_valid() {
            return Err(Error::InvalidGame(report));
        }

        let mut order = Vec::with_capacity(self.nodes.len());
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        let mut stack = vec![roots[0]];
        while let Some(n) = stack.pop() {
            if new_id[n] != usize::MAX {
                report.push(ViolationKind::Structure, vec![n], format!("node {n} reached twice"));
                return Err(Error::InvalidGame(report));
            }
            new_id[n] = order.len();
            order.push(n);
            for &c in self.nodes[n].children.iter().rev() {
                stack.push(c);
            }
        }
        if order.len() != self.nodes.len() {
            report.push(
                ViolationKind::Structure,
                vec![],
                "unreachable nodes in builder".to_string(),
            );
            return Err(Error::InvalidGame(report));
        }

        let mut nodes: Vec<Node> = Vec::with_capacity(order.len());
        let mut infosets: Vec<InfoSet> = Vec::new();
        let mut by_label: HashMap<(Player, String), InfosetId> = HashMap::new();
        let mut parent_of = vec![None; order.len()];
        for &old in &order {
            let id = new_id[old];
            let raw = &self.nodes[old];
            let children: Vec<NodeId> = raw.children.iter().map(|&c| new_id[c]).collect();
            for (a, &c) in children.iter().enumerate() {
                parent_of[c] = Some((id, a));
            }
            let kind = match &raw.kind {
                RawKind::Chance { actions, probs } => NodeKind::Chance {
                    actions: actions.clone(),
                    probs: probs.clone(),
                },
                RawKind::Terminal { payoffs } => NodeKind::Terminal { payoffs: *payoffs },
                RawKind::Decision { player, label, actions } => {
                    let key = (*player, label.clone());
                    let sid = match by_label.get(&key) {
                        Some(&s) => {
                            if infosets[s].actions != *actions {
                                report.push(
                                    ViolationKind::InfosetActions,
                                    vec![infosets[s].members[0], id],
                                    format!("infoset '{label}': members have different action lists"),
                                );
                            }
                            s
                        }
                        None => {
                            infosets.push(InfoSet {
                                owner: *player,
                                label: label.clone(),
                                actions: actions.clone(),
                                members: Vec::new(),
                            });
                            by_label.insert(key, infosets.len() - 1);
                            infosets.len() - 1
                        }
                    };
                    infosets[sid].members.push(id);
                    NodeKind::Decision {
                        player: *player,
                        infoset: sid,
                    }
                }
            };
            nodes.push(Node {
                kind,
                parent: None,
                children,
            });
        }
        for (i, p) in parent_of.into_iter().enumerate() {
            nodes[i].parent = p;
        }
        Ok((
            GameTree {
                name: self.name,
                metadata: self.metadata,
                nodes,
                infosets,
            },
            report,
        ))
    }
}
