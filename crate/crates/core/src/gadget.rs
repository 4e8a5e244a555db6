//! Bounded subgame refinement recast as a standalone Stackelberg game.

use std::collections::BTreeMap;

use log::warn;

use crate::efg::{
    behavioral_to_realization, realization_to_behavioral, BehavioralStrategy, GameBuilder, GameTree, NodeId, NodeKind,
    Player, RealizationPlan, SeqId, SequenceForm,
};
use crate::error::{Error, Result};
use crate::optim::{MilpOptions, SolveStatus};
use crate::search::{build_full_milp, Direction, LocalPlan, SearchContext};

/// Head infosets of one subgame that share the follower's entry sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadGroup {
    pub id: usize,
    pub parent_seq: SeqId,
    /// Local follower head infosets.
    pub heads: Vec<usize>,
    /// Initial states whose follower sequence is `parent_seq`.
    pub initial_states: Vec<NodeId>,
    /// Sum of the member bounds; `-inf` if any member is vacuous.
    pub bound: f64,
    pub trunk: bool,
}

pub fn group_heads(ctx: &SearchContext, j: usize) -> Vec<HeadGroup> {
    let sf = &ctx.sf;
    let sg = &ctx.partition.subgames[j];
    let mut by_parent: BTreeMap<SeqId, HeadGroup> = BTreeMap::new();
    for &h in &sg.roots {
        let e = sf.node_seqs[h][1];
        let n = by_parent.len();
        by_parent
            .entry(e)
            .or_insert_with(|| HeadGroup {
                id: n,
                parent_seq: e,
                heads: Vec::new(),
                initial_states: Vec::new(),
                bound: 0.0,
                trunk: ctx.response.plan.probs[e] > 0.5,
            })
            .initial_states
            .push(h);
    }
    for &i in &sg.heads[1] {
        let parent = sf.follower().infosets[i].parent_seq;
        let g = by_parent.get_mut(&parent).expect("head parent is an entry sequence");
        g.heads.push(i);
        let b = ctx.bounds.get(i).map_or(f64::NEG_INFINITY, |b| b.value);
        g.bound += b;
    }
    let mut groups: Vec<HeadGroup> = by_parent.into_values().collect();
    groups.sort_by_key(|g| g.id);
    groups
}

/// Default magnitude standing in for an infinitely bad payoff.
pub fn default_sentinel(game: &GameTree) -> f64 {
    1e6 * (1.0 + game.max_abs_payoff(Player::Leader) + game.max_abs_payoff(Player::Follower))
}

#[derive(Clone, Debug)]
pub struct GadgetGame {
    pub game: GameTree,
    pub subgame: usize,
    pub eta: f64,
    pub sentinel: f64,
    pub groups: Vec<HeadGroup>,
    /// Original initial state and its root chance probability.
    pub roots: Vec<(NodeId, f64)>,
    /// Aux infoset label per group, where one was inserted.
    pub aux_labels: Vec<Option<String>>,
    /// Original local leader infosets of the subgame with their labels.
    leader_infosets: Vec<(usize, String)>,
    bounded: bool,
}

fn leader_labels(game: &GameTree, ctx: &SearchContext, j: usize) -> Vec<(usize, String)> {
    let t1 = ctx.sf.leader();
    ctx.partition.subgames[j].infosets[0]
        .iter()
        .map(|&i| (i, game.infoset(t1.infosets[i].infoset).label.clone()))
        .collect()
}

const AUX_ACTIONS: [&str; 2] = ["terminate", "continue"];

struct Copier<'a> {
    game: &'a GameTree,
    sf: &'a SequenceForm,
    b: GameBuilder,
}

impl Copier<'_> {
    /// Copies the subtree under `node`. `leader` maps the original leader
    /// payoff; follower payoffs of leaves the follower cannot influence inside
    /// the subgame are zeroed when `entry` is given.
    fn copy(&mut self, node: NodeId, leader: &dyn Fn(f64) -> f64, entry: Option<SeqId>) -> NodeId {
        let n = self.game.node(node);
        let id = match &n.kind {
            NodeKind::Terminal { payoffs } => {
                let own = Some(self.sf.node_seqs[node][1]) == entry;
                let f = if own { 0.0 } else { payoffs[1] };
                return self.b.terminal(leader(payoffs[0]), f);
            }
            NodeKind::Chance { actions, probs } => self
                .b
                .chance(actions.iter().cloned().zip(probs.iter().copied()).collect()),
            NodeKind::Decision { player, infoset } => {
                let set = self.game.infoset(*infoset);
                self.b.decision(*player, set.label.clone(), set.actions.clone())
            }
        };
        for &c in &n.children {
            let cid = self.copy(c, leader, entry);
            self.b.attach(id, cid);
        }
        id
    }
}

fn root_states(ctx: &SearchContext, j: usize) -> Result<(Vec<(NodeId, f64)>, f64)> {
    let q = &ctx.quantities[j];
    let mut roots = Vec::new();
    for &(h, w) in &q.omega {
        if w > 0.0 {
            roots.push((h, w * q.eta));
        } else {
            warn!("subgame {j}: initial state {h} is unreachable under the blueprint and left out");
        }
    }
    if roots.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "subgame {j} has no initial state reachable under the blueprint"
        )));
    }
    Ok((roots, q.eta))
}

/// Gadget enforcing the context's bounds on subgame `j`.
pub fn transform_subgame(game: &GameTree, ctx: &SearchContext, j: usize, sentinel: Option<f64>) -> Result<GadgetGame> {
    let sentinel = sentinel.unwrap_or_else(|| default_sentinel(game));
    let groups = group_heads(ctx, j);
    let (roots, eta) = root_states(ctx, j)?;
    let omega = |h: NodeId| ctx.quantities[j].omega_of(h);
    let mut c = Copier {
        game,
        sf: &ctx.sf,
        b: GameBuilder::new(format!("{}-gadget-{j}", game.name())),
    };
    let root = c.b.chance(roots.iter().map(|&(h, p)| (format!("h{h}"), p)).collect());
    let mut aux_labels = vec![None; groups.len()];
    for &(h, _) in &roots {
        let e = ctx.sf.node_seqs[h][1];
        let g = groups
            .iter()
            .find(|g| g.parent_seq == e)
            .expect("every initial state has a group");
        let keep = |u: f64| u;
        let zero = |_: f64| 0.0;
        let bad = |_: f64| -sentinel;
        let leader: &dyn Fn(f64) -> f64 = match (g.trunk, g.heads.is_empty()) {
            (true, _) => &keep,
            (false, true) => &zero,
            (false, false) => &bad,
        };
        let sub = c.copy(h, leader, Some(e));
        // A vacuous group's terminate option is dominated; leaving it out
        // keeps follower payoffs free of the sentinel.
        if g.heads.is_empty() || g.bound == f64::NEG_INFINITY {
            c.b.attach(root, sub);
            continue;
        }
        let reachable = g.initial_states.iter().filter(|&&s| omega(s) > 0.0).count() as f64;
        let share = g.bound / (omega(h) * reachable);
        let (lead, follow) = (if g.trunk { -sentinel } else { 0.0 }, share);
        let label = format!("aux:{}:{}", j, g.parent_seq);
        aux_labels[g.id] = Some(label.clone());
        let aux = c.b.decision(Player::Follower, label, AUX_ACTIONS.to_vec());
        let stop = c.b.terminal(lead, follow);
        c.b.attach(aux, stop);
        c.b.attach(aux, sub);
        c.b.attach(root, aux);
    }
    let mut g = c.b.build()?;
    g.set_metadata(
        "gadget_of",
        serde_json::json!({ "game": game.name(), "subgame": j, "eta": eta }),
    );
    Ok(GadgetGame {
        game: g,
        subgame: j,
        eta,
        sentinel,
        groups,
        roots,
        aux_labels,
        leader_infosets: leader_labels(game, ctx, j),
        bounded: true,
    })
}

/// Unconstrained re-solve of subgame `j`: initial states in proportion to
/// their blueprint reach, original payoffs, no bounds.
pub fn naive_subgame_game(game: &GameTree, ctx: &SearchContext, j: usize) -> Result<GadgetGame> {
    let (roots, eta) = root_states(ctx, j)?;
    let mut c = Copier {
        game,
        sf: &ctx.sf,
        b: GameBuilder::new(format!("{}-resolve-{j}", game.name())),
    };
    let root = c.b.chance(roots.iter().map(|&(h, p)| (format!("h{h}"), p)).collect());
    for &(h, _) in &roots {
        let sub = c.copy(h, &|u| u, None);
        c.b.attach(root, sub);
    }
    Ok(GadgetGame {
        game: c.b.build()?,
        subgame: j,
        eta,
        sentinel: 0.0,
        groups: Vec::new(),
        roots,
        aux_labels: Vec::new(),
        leader_infosets: leader_labels(game, ctx, j),
        bounded: false,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetSolution {
    pub plan: LocalPlan,
    /// Leader value of the gadget itself.
    pub gadget_value: f64,
    /// `gadget_value / eta`: comparable with the subgame MILP objective.
    pub scaled_value: f64,
    pub status: SolveStatus,
    pub wall_time: f64,
}

impl GadgetGame {
    /// Gadget leader plan playing `local` inside the subgame.
    pub fn leader_plan(&self, ctx: &SearchContext, local: &LocalPlan) -> Result<RealizationPlan> {
        let gsf = SequenceForm::new(&self.game)?;
        let (t1, g1) = (ctx.sf.leader(), gsf.leader());
        let mut bs = BehavioralStrategy::uniform(g1);
        for (gi, set) in g1.infosets.iter().enumerate() {
            let label = &self.game.infoset(set.infoset).label;
            let orig = self
                .leader_infosets
                .iter()
                .find(|(_, l)| l == label)
                .map(|&(i, _)| i)
                .ok_or_else(|| Error::PlanMismatch(format!("gadget infoset '{label}' has no original")))?;
            let oset = &t1.infosets[orig];
            let parent = local.get(oset.parent_seq).unwrap_or(0.0);
            if parent > 1e-12 {
                bs.probs[gi] = oset.seqs().map(|s| local.get(s).unwrap_or(0.0) / parent).collect();
            }
        }
        Ok(behavioral_to_realization(g1, &bs))
    }

    /// Local subgame plan from a gadget leader plan. Infosets the gadget lacks
    /// keep the blueprint's behavior.
    pub fn local_plan(&self, ctx: &SearchContext, plan: &RealizationPlan) -> Result<LocalPlan> {
        let gsf = SequenceForm::new(&self.game)?;
        let g1 = gsf.leader();
        let t1 = ctx.sf.leader();
        let gb = realization_to_behavioral(g1, plan);
        let bp = realization_to_behavioral(t1, &ctx.blueprint);
        let sg = &ctx.partition.subgames[self.subgame];
        let mut probs: BTreeMap<SeqId, f64> = sg.entries[0].iter().map(|&e| (e, 1.0)).collect();
        for (i, label) in &self.leader_infosets {
            let (i, oset) = (*i, &t1.infosets[*i]);
            let behavior = self
                .game
                .infoset_by_label(Player::Leader, label)
                .and_then(|gid| g1.local(gid))
                .map_or_else(|| bp.probs[i].clone(), |gi| gb.probs[gi].clone());
            let parent = probs[&oset.parent_seq];
            for (a, s) in oset.seqs().enumerate() {
                probs.insert(s, parent * behavior[a]);
            }
        }
        Ok(LocalPlan {
            subgame: self.subgame,
            probs: probs.into_iter().collect(),
        })
    }

    /// Solves the gadget with the full-game MILP and maps the leader plan back.
    pub fn solve(&self, ctx: &SearchContext, opts: &MilpOptions) -> Result<GadgetSolution> {
        let gsf = SequenceForm::new(&self.game)?;
        let model = build_full_milp(&gsf);
        let sol = model.solve(&gsf, None, opts)?;
        if self.bounded {
            let bad: f64 = gsf
                .leaves
                .iter()
                .filter(|l| l.payoffs[0] <= -self.sentinel)
                .map(|l| l.chance * sol.plan.probs[l.seqs[0]] * sol.response.probs[l.seqs[1]])
                .sum();
            if bad > 1e-9 {
                return Err(Error::BoundViolation(format!(
                    "gadget of subgame {} realizes a sentinel payoff with probability {bad:e}",
                    self.subgame
                )));
            }
        }
        Ok(GadgetSolution {
            plan: self.local_plan(ctx, &sol.plan)?,
            gadget_value: sol.objective,
            scaled_value: sol.objective / self.eta,
            status: sol.status,
            wall_time: sol.wall_time,
        })
    }

    /// Whether the follower terminates at the group's aux infoset under `plan`.
    pub fn terminates(&self, group: usize, response: &RealizationPlan) -> Result<bool> {
        let Some(label) = &self.aux_labels[group] else {
            return Ok(false);
        };
        let gsf = SequenceForm::new(&self.game)?;
        let id = self
            .game
            .infoset_by_label(Player::Follower, label)
            .ok_or_else(|| Error::PlanMismatch(format!("no aux infoset '{label}'")))?;
        let local = gsf.follower().local(id).expect("follower infoset");
        Ok(response.probs[gsf.follower().seq(local, 0)] > 0.5)
    }

    pub fn group_direction(&self, group: usize) -> Direction {
        if self.groups[group].trunk {
            Direction::Lower
        } else {
            Direction::Upper
        }
    }
}

pub fn solve_via_gadget(ctx: &SearchContext, gadget: &GadgetGame, opts: &MilpOptions) -> Result<GadgetSolution> {
    gadget.solve(ctx, opts)
}
