use std::time::Instant;

use serde::Serialize;

use crate::efg::{realization_to_behavioral, RealizationPlan, SeqId, SequenceForm};
use crate::error::{Error, Result};
use crate::optim::{solve_milp, LinearProgram, MilpOptions, MilpProblem, Relation, SolveStatus};
use crate::response::BrvTable;

use super::bounds::{BoundsMap, Direction, HeadBound};
use super::partition::SubgamePartition;
use super::quantities::SubgameQuantities;

/// Refinement MILP of one subgame over its local sequences.
#[derive(Clone, Debug)]
pub struct SubgameModel {
    pub subgame: usize,
    pub milp: MilpProblem,
    pub big_m: f64,
    /// Local leader sequences (entries first) and their variables.
    pub leader_seqs: Vec<(SeqId, usize)>,
    pub follower_seqs: Vec<(SeqId, usize)>,
    /// Local follower infoset and its value variable.
    pub value_vars: Vec<(usize, usize)>,
    /// Leaf index and its joint-probability variable.
    pub leaf_vars: Vec<(usize, usize)>,
    pub slack_vars: Vec<(SeqId, usize)>,
    /// Bounds present in the model.
    pub bounds: Vec<HeadBound>,
    pub warm_start: Vec<f64>,
    pub blueprint_objective: f64,
    /// Leader infosets of the subgame, ascending.
    leader_infosets: Vec<usize>,
    follower_infosets: Vec<usize>,
    /// (leaf index, leaf weight) for every subgame leaf.
    leaf_weight: Vec<(usize, f64)>,
}

/// Leader realization probabilities of one subgame's local sequences. Entry
/// sequences carry probability one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalPlan {
    pub subgame: usize,
    pub probs: Vec<(SeqId, f64)>,
}

impl LocalPlan {
    pub fn get(&self, seq: SeqId) -> Option<f64> {
        self.probs
            .binary_search_by_key(&seq, |p| p.0)
            .ok()
            .map(|k| self.probs[k].1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubgameSolution {
    pub subgame: usize,
    pub plan: LocalPlan,
    /// Leader payoff contributed by the subgame's leaves.
    pub objective: f64,
    pub blueprint_objective: f64,
    pub status: SolveStatus,
    /// False when the blueprint restriction was kept.
    pub improved: bool,
    pub bound: f64,
    pub wall_time: f64,
    pub nodes: usize,
}

/// Default big-M: twice the weighted payoff range of the subgame plus one.
pub fn default_big_m(sf: &SequenceForm, leaves: &[usize], weights: &[f64]) -> f64 {
    2.0 * leaves
        .iter()
        .zip(weights)
        .map(|(&l, w)| (sf.leaves[l].payoffs[1] * w).abs())
        .sum::<f64>()
        + 1.0
}

pub fn build_constrained_milp(
    sf: &SequenceForm,
    partition: &SubgamePartition,
    q: &SubgameQuantities,
    bounds: &BoundsMap,
    blueprint: &RealizationPlan,
    brvs: &BrvTable,
    big_m: Option<f64>,
) -> Result<SubgameModel> {
    let j = q.subgame;
    let sg = &partition.subgames[j];
    let (t1, t2) = (sf.leader(), sf.follower());
    let big_m = big_m.unwrap_or_else(|| default_big_m(sf, &sg.leaves, &q.leaf_weight));
    if !(big_m.is_finite() && big_m > 0.0) {
        return Err(Error::InvalidParameter(format!("big-M must be positive, got {big_m}")));
    }
    let mut lp = LinearProgram::new();
    let mut r1 = vec![usize::MAX; t1.num_sequences()];
    let mut r2 = vec![usize::MAX; t2.num_sequences()];
    let mut leader_seqs = Vec::new();
    let mut follower_seqs = Vec::new();
    let mut binaries = Vec::new();
    for &e in &sg.entries[0] {
        r1[e] = lp.add_var(format!("r1_{e}"), 1.0, 1.0, 0.0);
        leader_seqs.push((e, r1[e]));
    }
    for &i in &sg.infosets[0] {
        for s in t1.infosets[i].seqs() {
            r1[s] = lp.add_var(format!("r1_{s}"), 0.0, 1.0, 0.0);
            leader_seqs.push((s, r1[s]));
        }
    }
    for &e in &sg.entries[1] {
        r2[e] = lp.add_var(format!("r2_{e}"), 1.0, 1.0, 0.0);
        follower_seqs.push((e, r2[e]));
        binaries.push(r2[e]);
    }
    for &i in &sg.infosets[1] {
        for s in t2.infosets[i].seqs() {
            r2[s] = lp.add_var(format!("r2_{s}"), 0.0, 1.0, 0.0);
            follower_seqs.push((s, r2[s]));
            binaries.push(r2[s]);
        }
    }
    let mut v = vec![usize::MAX; t2.num_infosets()];
    let mut value_vars = Vec::new();
    for &i in &sg.infosets[1] {
        v[i] = lp.add_var(format!("v_{i}"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
        value_vars.push((i, v[i]));
    }

    for &i in &sg.infosets[0] {
        let set = &t1.infosets[i];
        let mut row = vec![(r1[set.parent_seq], -1.0)];
        row.extend(set.seqs().map(|s| (r1[s], 1.0)));
        lp.add_constraint(format!("flow1_{i}"), row, Relation::Eq, 0.0);
    }
    for &i in &sg.infosets[1] {
        let set = &t2.infosets[i];
        let mut row = vec![(r2[set.parent_seq], -1.0)];
        row.extend(set.seqs().map(|s| (r2[s], 1.0)));
        lp.add_constraint(format!("flow2_{i}"), row, Relation::Eq, 0.0);
    }

    // Per follower sequence: infoset value = slack + child infoset values + weighted leaf payoffs.
    let mut slack_vars = Vec::new();
    let mut leaf_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); t2.num_sequences()];
    for (&l, &w) in sg.leaves.iter().zip(&q.leaf_weight) {
        let leaf = &sf.leaves[l];
        let c = w * leaf.payoffs[1];
        if c != 0.0 {
            leaf_terms[leaf.seqs[1]].push((r1[leaf.seqs[0]], c));
        }
    }
    for &i in &sg.infosets[1] {
        for s in t2.infosets[i].seqs() {
            let slack = lp.add_var(format!("s_{s}"), 0.0, f64::INFINITY, 0.0);
            slack_vars.push((s, slack));
            let mut row = vec![(v[i], 1.0), (slack, -1.0)];
            row.extend(t2.children[s].iter().map(|&c| (v[c], -1.0)));
            row.extend(leaf_terms[s].iter().map(|&(var, c)| (var, -c)));
            lp.add_constraint(format!("value_{s}"), row, Relation::Eq, 0.0);
            lp.add_constraint(
                format!("bigm_{s}"),
                vec![(slack, 1.0), (r2[s], big_m)],
                Relation::Le,
                big_m,
            );
        }
    }

    let mut leaf_vars = Vec::new();
    let mut mass_row = Vec::new();
    for (&l, &c) in sg.leaves.iter().zip(&q.leaf_chance) {
        if c <= 0.0 {
            continue;
        }
        let leaf = &sf.leaves[l];
        let p = lp.add_var(format!("p_{}", leaf.node), 0.0, 1.0, c * leaf.payoffs[0]);
        lp.add_constraint(
            format!("cap1_{}", leaf.node),
            vec![(p, 1.0), (r1[leaf.seqs[0]], -1.0)],
            Relation::Le,
            0.0,
        );
        lp.add_constraint(
            format!("cap2_{}", leaf.node),
            vec![(p, 1.0), (r2[leaf.seqs[1]], -1.0)],
            Relation::Le,
            0.0,
        );
        mass_row.push((p, c));
        leaf_vars.push((l, p));
    }
    if !mass_row.is_empty() {
        lp.add_constraint("mass", mass_row, Relation::Eq, q.mass);
    }

    let mut model_bounds = Vec::new();
    for b in bounds.for_subgame(j) {
        if b.is_vacuous() {
            continue;
        }
        let rel = match b.direction {
            Direction::Lower => Relation::Ge,
            Direction::Upper => Relation::Le,
        };
        lp.add_constraint(format!("bound_{}", b.infoset), vec![(v[b.infoset], 1.0)], rel, b.value);
        model_bounds.push(*b);
    }

    let mut model = SubgameModel {
        subgame: j,
        milp: MilpProblem { lp, binaries },
        big_m,
        leader_seqs,
        follower_seqs,
        value_vars,
        leaf_vars,
        slack_vars,
        bounds: model_bounds,
        warm_start: Vec::new(),
        blueprint_objective: 0.0,
        leader_infosets: sg.infosets[0].clone(),
        follower_infosets: sg.infosets[1].clone(),
        leaf_weight: sg.leaves.iter().copied().zip(q.leaf_weight.iter().copied()).collect(),
    };
    model.warm_start = blueprint_start(sf, &model, blueprint, brvs, &r1, &r2, &leaf_terms);
    model.blueprint_objective = model.milp.lp.objective_value(&model.warm_start);
    Ok(model)
}

/// Blueprint restricted to the subgame with the blueprint's best response.
fn blueprint_start(
    sf: &SequenceForm,
    m: &SubgameModel,
    blueprint: &RealizationPlan,
    brvs: &BrvTable,
    r1: &[usize],
    r2: &[usize],
    leaf_terms: &[Vec<(usize, f64)>],
) -> Vec<f64> {
    let (t1, t2) = (sf.leader(), sf.follower());
    let mut x: Vec<f64> = m.milp.lp.variables.iter().map(|v| v.lower.max(0.0)).collect();
    let behavior = realization_to_behavioral(t1, blueprint);
    for &i in &m.leader_infosets {
        let set = &t1.infosets[i];
        for (a, s) in set.seqs().enumerate() {
            x[r1[s]] = x[r1[set.parent_seq]] * behavior.probs[i][a];
        }
    }
    for &i in &m.follower_infosets {
        let set = &t2.infosets[i];
        for s in set.seqs() {
            x[r2[s]] = if s == brvs.best_action[i] {
                x[r2[set.parent_seq]]
            } else {
                0.0
            };
        }
    }
    // Local follower values under the local leader plan, bottom-up.
    let mut seq_val = vec![0.0; t2.num_sequences()];
    let mut inf_val = vec![0.0; t2.num_infosets()];
    for &i in m.follower_infosets.iter().rev() {
        let set = &t2.infosets[i];
        let mut best = f64::NEG_INFINITY;
        for s in set.seqs() {
            let mut val: f64 = leaf_terms[s].iter().map(|&(var, c)| c * x[var]).sum();
            val += t2.children[s].iter().map(|&c| inf_val[c]).sum::<f64>();
            seq_val[s] = val;
            best = best.max(val);
        }
        inf_val[i] = best;
    }
    for &(i, var) in &m.value_vars {
        x[var] = inf_val[i];
    }
    for &(s, var) in &m.slack_vars {
        let i = t2.infoset_of(s).expect("slack of a non-empty sequence");
        x[var] = (inf_val[i] - seq_val[s]).max(0.0);
    }
    for &(l, var) in &m.leaf_vars {
        let leaf = &sf.leaves[l];
        x[var] = x[r1[leaf.seqs[0]]] * x[r2[leaf.seqs[1]]];
    }
    x
}

impl SubgameModel {
    /// Flow-exact local leader plan read from a model assignment.
    pub fn extract_plan(&self, sf: &SequenceForm, x: &[f64]) -> LocalPlan {
        let t1 = sf.leader();
        let mut probs: Vec<(SeqId, f64)> = self
            .leader_seqs
            .iter()
            .map(|&(s, var)| (s, x[var].clamp(0.0, 1.0)))
            .collect();
        probs.sort_by_key(|p| p.0);
        let index = |s: SeqId, probs: &[(SeqId, f64)]| probs.binary_search_by_key(&s, |p| p.0).expect("local sequence");
        for &i in &self.leader_infosets {
            let set = &t1.infosets[i];
            let parent = probs[index(set.parent_seq, &probs)].1;
            let idx: Vec<usize> = set.seqs().map(|s| index(s, &probs)).collect();
            let total: f64 = idx.iter().map(|&k| probs[k].1).sum();
            for &k in &idx {
                probs[k].1 = if total > 1e-12 {
                    parent * probs[k].1 / total
                } else {
                    parent / idx.len() as f64
                };
            }
        }
        LocalPlan {
            subgame: self.subgame,
            probs,
        }
    }

    /// Follower values of the subgame's infosets against a local leader plan,
    /// computed from the leaves rather than from model variables.
    pub fn follower_values(&self, sf: &SequenceForm, plan: &LocalPlan) -> Vec<(usize, f64)> {
        let t2 = sf.follower();
        let mut seq_val = vec![0.0; t2.num_sequences()];
        for &(l, w) in &self.leaf_weight {
            let leaf = &sf.leaves[l];
            if t2
                .infoset_of(leaf.seqs[1])
                .is_some_and(|i| self.follower_infosets.binary_search(&i).is_ok())
            {
                seq_val[leaf.seqs[1]] += w * leaf.payoffs[1] * plan.get(leaf.seqs[0]).unwrap_or(0.0);
            }
        }
        let mut inf_val = vec![0.0; t2.num_infosets()];
        for &i in self.follower_infosets.iter().rev() {
            let set = &t2.infosets[i];
            inf_val[i] = set
                .seqs()
                .map(|s| seq_val[s] + t2.children[s].iter().map(|&c| inf_val[c]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
        }
        self.follower_infosets.iter().map(|&i| (i, inf_val[i])).collect()
    }

    /// Largest amount by which a local plan violates the model's bounds.
    pub fn bound_violation(&self, sf: &SequenceForm, plan: &LocalPlan) -> f64 {
        let vals = self.follower_values(sf, plan);
        self.bounds
            .iter()
            .map(|b| {
                let v = vals.iter().find(|p| p.0 == b.infoset).map_or(0.0, |p| p.1);
                match b.direction {
                    Direction::Lower => b.value - v,
                    Direction::Upper => v - b.value,
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn blueprint_plan(&self, sf: &SequenceForm) -> LocalPlan {
        self.extract_plan(sf, &self.warm_start)
    }

    pub fn num_binaries(&self) -> usize {
        self.milp.binaries.len()
    }

    pub fn leader_value_of(&self, x: &[f64]) -> f64 {
        self.milp.lp.objective_value(x)
    }
}

/// Tolerance for bound checks on a returned incumbent.
pub const BOUND_TOL: f64 = 1e-6;

/// Solves a subgame model, keeping the blueprint restriction unless the solver
/// finds something strictly better.
pub fn solve_subgame(sf: &SequenceForm, model: &SubgameModel, opts: &MilpOptions) -> Result<SubgameSolution> {
    let start = Instant::now();
    let fallback = |status, bound, nodes| SubgameSolution {
        subgame: model.subgame,
        plan: model.blueprint_plan(sf),
        objective: model.blueprint_objective,
        blueprint_objective: model.blueprint_objective,
        status,
        improved: false,
        bound,
        wall_time: start.elapsed().as_secs_f64(),
        nodes,
    };
    if model.leaf_vars.is_empty() {
        return Ok(fallback(SolveStatus::Optimal, 0.0, 0));
    }
    let sol = solve_milp(&model.milp, Some(&model.warm_start), opts)?;
    let Some(x) = sol.values.as_ref() else {
        return Err(Error::Solver(format!(
            "subgame {}: solver lost the blueprint incumbent ({:?})",
            model.subgame, sol.status
        )));
    };
    if sol.objective <= model.blueprint_objective + 1e-9 * (1.0 + model.blueprint_objective.abs()) {
        return Ok(fallback(sol.status, sol.bound, sol.nodes));
    }
    let plan = model.extract_plan(sf, x);
    let worst = model.bound_violation(sf, &plan);
    if worst > BOUND_TOL {
        return Err(Error::BoundViolation(format!(
            "subgame {}: incumbent violates a bound by {worst:e}",
            model.subgame
        )));
    }
    Ok(SubgameSolution {
        subgame: model.subgame,
        plan,
        objective: sol.objective,
        blueprint_objective: model.blueprint_objective,
        status: sol.status,
        improved: true,
        bound: sol.bound,
        wall_time: start.elapsed().as_secs_f64(),
        nodes: sol.nodes,
    })
}
