use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::efg::{GameBuilder, GameTree, NodeKind, Player, RealizationPlan, Treeplex};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// On-disk game description. Fields are declared in alphabetical order so the
/// serialized keys come out sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub metadata: BTreeMap<String, Value>,
    pub nodes: Vec<NodeRecord>,
    pub players: Vec<Player>,
    pub version: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRecordKind {
    Chance,
    Decision,
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chance_probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<usize>,
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infoset: Option<String>,
    pub kind: NodeRecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoffs: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<Player>,
}

impl GameFile {
    pub fn from_game(game: &GameTree) -> GameFile {
        let mut metadata = game.metadata().clone();
        metadata.insert("name".into(), Value::String(game.name().to_string()));
        let nodes = game
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, n)| {
                let mut rec = NodeRecord {
                    actions: None,
                    chance_probs: None,
                    children: n.children.clone(),
                    id,
                    infoset: None,
                    kind: NodeRecordKind::Terminal,
                    payoffs: None,
                    player: None,
                };
                match &n.kind {
                    NodeKind::Chance { actions, probs } => {
                        rec.kind = NodeRecordKind::Chance;
                        rec.actions = Some(actions.clone());
                        rec.chance_probs = Some(probs.clone());
                    }
                    NodeKind::Decision { player, infoset } => {
                        let set = game.infoset(*infoset);
                        rec.kind = NodeRecordKind::Decision;
                        rec.player = Some(*player);
                        rec.infoset = Some(set.label.clone());
                        rec.actions = Some(set.actions.clone());
                    }
                    NodeKind::Terminal { payoffs } => rec.payoffs = Some(*payoffs),
                }
                rec
            })
            .collect();
        GameFile {
            metadata,
            nodes,
            players: vec![Player::Leader, Player::Follower],
            version: FORMAT_VERSION,
        }
    }

    pub fn into_game(self) -> Result<GameTree> {
        let err = |path: String, message: &str| Error::Parse {
            path,
            message: message.to_string(),
        };
        if self.version != FORMAT_VERSION {
            return Err(err("version".into(), "unsupported version"));
        }
        if self.players != [Player::Leader, Player::Follower] {
            return Err(err("players".into(), "expected [\"leader\", \"follower\"]"));
        }
        let name = match self.metadata.get("name") {
            Some(Value::String(s)) => s.clone(),
            _ => return Err(err("metadata.name".into(), "missing string field")),
        };
        let n = self.nodes.len();
        if n == 0 {
            return Err(err("nodes".into(), "empty node list"));
        }
        let mut seen = HashSet::new();
        for (i, rec) in self.nodes.iter().enumerate() {
            if rec.id >= n || !seen.insert(rec.id) {
                return Err(err(format!("nodes[{i}].id"), "ids must be unique and dense"));
            }
        }
        let mut b = GameBuilder::new(name);
        for (k, v) in &self.metadata {
            if k != "name" {
                b.metadata(k, v.clone());
            }
        }
        // Builder ids equal record ids because records are inserted in id order.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| self.nodes[i].id);
        for &i in &order {
            let rec = &self.nodes[i];
            let p = |f: &str| format!("nodes[{i}].{f}");
            match rec.kind {
                NodeRecordKind::Chance => {
                    let actions = rec.actions.clone().ok_or_else(|| err(p("actions"), "required"))?;
                    let probs = rec
                        .chance_probs
                        .clone()
                        .ok_or_else(|| err(p("chance_probs"), "required"))?;
                    if probs.len() != actions.len() {
                        return Err(err(p("chance_probs"), "length differs from actions"));
                    }
                    if rec.player.is_some() || rec.infoset.is_some() || rec.payoffs.is_some() {
                        return Err(err(p("kind"), "chance node with decision/terminal fields"));
                    }
                    b.chance(actions.into_iter().zip(probs).collect());
                }
                NodeRecordKind::Decision => {
                    let actions = rec.actions.clone().ok_or_else(|| err(p("actions"), "required"))?;
                    let player = rec.player.ok_or_else(|| err(p("player"), "required"))?;
                    if player == Player::Chance {
                        return Err(err(p("player"), "decision nodes belong to leader or follower"));
                    }
                    let infoset = rec.infoset.clone().ok_or_else(|| err(p("infoset"), "required"))?;
                    if rec.chance_probs.is_some() || rec.payoffs.is_some() {
                        return Err(err(p("kind"), "decision node with chance/terminal fields"));
                    }
                    b.decision(player, infoset, actions);
                }
                NodeRecordKind::Terminal => {
                    let payoffs = rec.payoffs.ok_or_else(|| err(p("payoffs"), "required"))?;
                    if rec.actions.is_some() || !rec.children.is_empty() {
                        return Err(err(p("actions"), "terminal nodes have no actions"));
                    }
                    b.terminal(payoffs[0], payoffs[1]);
                }
            }
        }
        for &i in &order {
            let rec = &self.nodes[i];
            for (k, &c) in rec.children.iter().enumerate() {
                if c >= n {
                    return Err(err(format!("nodes[{i}].children[{k}]"), "unknown node id"));
                }
                b.attach(rec.id, c);
            }
        }
        b.build()
    }
}

/// Parses a game from JSON and validates it.
pub fn parse_game(text: &str) -> Result<GameTree> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: GameFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    file.into_game()
}

/// Deterministic JSON: sorted keys, shortest round-trip float formatting.
pub fn serialize_game(game: &GameTree) -> String {
    let mut s = serde_json::to_string_pretty(&GameFile::from_game(game)).expect("serializable");
    s.push('\n');
    s
}

/// Realization plan on disk: sequence id to probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub game: String,
    pub owner: Player,
    pub probs: BTreeMap<usize, f64>,
    pub sequences: usize,
}

impl PlanFile {
    pub fn new(game: &GameTree, plan: &RealizationPlan) -> PlanFile {
        PlanFile {
            game: game.name().to_string(),
            owner: plan.owner,
            probs: plan.probs.iter().copied().enumerate().collect(),
            sequences: plan.len(),
        }
    }

    pub fn into_plan(self, tp: &Treeplex) -> Result<RealizationPlan> {
        if self.sequences != tp.num_sequences() || self.owner != tp.owner {
            return Err(Error::PlanMismatch(format!(
                "plan for {} sequences of the {} does not fit this game ({} sequences)",
                self.sequences,
                self.owner,
                tp.num_sequences()
            )));
        }
        let mut probs = vec![0.0; self.sequences];
        for (s, p) in self.probs {
            if s >= probs.len() {
                return Err(Error::PlanMismatch(format!("unknown sequence id {s}")));
            }
            probs[s] = p;
        }
        let plan = RealizationPlan {
            owner: self.owner,
            probs,
        };
        plan.check(tp, 1e-6)?;
        Ok(plan)
    }
}

pub fn serialize_plan(game: &GameTree, plan: &RealizationPlan) -> String {
    let mut s = serde_json::to_string_pretty(&PlanFile::new(game, plan)).expect("serializable");
    s.push('\n');
    s
}

pub fn parse_plan(text: &str, tp: &Treeplex) -> Result<RealizationPlan> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: PlanFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    file.into_plan(tp)
}
