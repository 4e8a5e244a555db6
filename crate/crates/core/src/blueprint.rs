//! Offline leader strategies that safe search refines.

use serde::{Deserialize, Serialize};

use crate::efg::{
    behavioral_to_realization, realization_to_behavioral, BehavioralStrategy, GameTree, NodeKind, RealizationPlan,
    SequenceForm, Treeplex, EMPTY,
};
use crate::error::{Error, Result};
use crate::io::gen::{goofspiel_surrogate, leduc_surrogate, stage_one_matrices};
use crate::optim::{solve_lp, LinearProgram, Relation, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ZeroSumNe,
    StageSse,
    Uniform,
    /// Loaded from a file or supplied by a fixture.
    External,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Blueprint {
    pub plan: RealizationPlan,
    pub provenance: Provenance,
    pub source: String,
    /// Value of the auxiliary problem the plan solves (surrogate game value or
    /// first-stage SSE value), if any.
    pub value: Option<f64>,
}

impl Blueprint {
    pub fn external(game: &GameTree, plan: RealizationPlan) -> Blueprint {
        Blueprint {
            plan,
            provenance: Provenance::External,
            source: game.name().to_string(),
            value: None,
        }
    }
}

/// Flow-exact copy of an LP plan.
pub(crate) fn clean(tp: &Treeplex, probs: Vec<f64>) -> RealizationPlan {
    let raw = RealizationPlan {
        owner: tp.owner,
        probs: probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect(),
    };
    let mut bs = realization_to_behavioral(tp, &raw);
    for row in &mut bs.probs {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|p| *p /= total);
        } else {
            let n = row.len() as f64;
            row.iter_mut().for_each(|p| *p = 1.0 / n);
        }
    }
    behavioral_to_realization(tp, &bs)
}

fn same_shape(a: &GameTree, b: &GameTree) -> bool {
    a.num_nodes() == b.num_nodes()
        && a.nodes().iter().zip(b.nodes()).all(|(x, y)| {
            x.children == y.children
                && match (&x.kind, &y.kind) {
                    (NodeKind::Terminal { .. }, NodeKind::Terminal { .. }) => true,
                    (k1, k2) => k1 == k2,
                }
        })
        && a.infosets() == b.infosets()
}

/// Leader part of a Nash equilibrium of the zero-sum `surrogate`, which must
/// share the tree of `game`. The plan applies unchanged to `game`.
pub fn zero_sum_blueprint(game: &GameTree, surrogate: &GameTree) -> Result<Blueprint> {
    if !same_shape(game, surrogate) {
        return Err(Error::InvalidParameter("surrogate tree differs from the game".into()));
    }
    for z in surrogate.terminals() {
        if let NodeKind::Terminal { payoffs } = surrogate.node(z).kind {
            if (payoffs[0] + payoffs[1]).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "surrogate is not zero-sum at node {z}: {payoffs:?}"
                )));
            }
        }
    }
    let sf = SequenceForm::new(surrogate)?;
    let (value, probs) = zero_sum_lp(&sf)?;
    Ok(Blueprint {
        plan: clean(sf.leader(), probs),
        provenance: Provenance::ZeroSumNe,
        source: game.name().to_string(),
        value: Some(value),
    })
}

/// Maximin sequence-form LP: returns the game value and leader plan.
pub fn zero_sum_lp(sf: &SequenceForm) -> Result<(f64, Vec<f64>)> {
    let t1 = sf.leader();
    let t2 = sf.follower();
    let mut lp = LinearProgram::new();
    let r: Vec<usize> = (0..t1.num_sequences())
        .map(|s| {
            let lo = if s == EMPTY { 1.0 } else { 0.0 };
            lp.add_var(format!("r1_{s}"), lo, 1.0, 0.0)
        })
        .collect();
    // w[I]: leader value once the follower is at I and responds adversarially.
    let w: Vec<usize> = (0..t2.num_infosets())
        .map(|i| lp.add_var(format!("w_{i}"), f64::NEG_INFINITY, f64::INFINITY, 0.0))
        .collect();
    let mut terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); t2.num_sequences()];
    for &((s1, s2), g) in &sf.payoff_table {
        if g[0] != 0.0 {
            terms[s2].push((r[s1], g[0]));
        }
    }
    for &(v, c) in &terms[EMPTY] {
        lp.objective[v] += c;
    }
    for &c in &t2.children[EMPTY] {
        lp.objective[w[c]] += 1.0;
    }
    for (i, set) in t2.infosets.iter().enumerate() {
        for s in set.seqs() {
            let mut row = vec![(w[i], 1.0)];
            row.extend(terms[s].iter().map(|&(v, c)| (v, -c)));
            row.extend(t2.children[s].iter().map(|&c| (w[c], -1.0)));
            lp.add_constraint(format!("br_{s}"), row, Relation::Le, 0.0);
        }
    }
    for (i, set) in t1.infosets.iter().enumerate() {
        let mut row = vec![(r[set.parent_seq], -1.0)];
        row.extend(set.seqs().map(|s| (r[s], 1.0)));
        lp.add_constraint(format!("flow_{i}"), row, Relation::Eq, 0.0);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!("zero-sum LP ended {:?}", sol.status)));
    }
    let x = sol.values.expect("optimal LP has values");
    Ok((sol.objective, r.iter().map(|&v| x[v]).collect()))
}

/// SSE of a bimatrix game by one LP per follower action.
/// Returns `(leader value, leader mixed strategy, follower action)`.
pub fn multiple_lp_sse(leader: &[Vec<f64>], follower: &[Vec<f64>]) -> Result<(f64, Vec<f64>, usize)> {
    let rows = leader.len();
    let cols = leader.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 || follower.len() != rows || follower.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParameter(
            "payoff matrices must be non-empty and equal-shaped".into(),
        ));
    }
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    for j in 0..cols {
        let mut lp = LinearProgram::new();
        let x: Vec<usize> = (0..rows)
            .map(|i| lp.add_var(format!("x{i}"), 0.0, 1.0, leader[i][j]))
            .collect();
        lp.add_constraint("simplex", x.iter().map(|&v| (v, 1.0)).collect(), Relation::Eq, 1.0);
        for k in (0..cols).filter(|&k| k != j) {
            let row = (0..rows).map(|i| (x[i], follower[i][j] - follower[i][k])).collect();
            lp.add_constraint(format!("ic{k}"), row, Relation::Ge, 0.0);
        }
        let sol = solve_lp(&lp)?;
        if sol.status != SolveStatus::Optimal {
            continue;
        }
        let v = sol.values.expect("optimal LP has values");
        let mix: Vec<f64> = x.iter().map(|&i| v[i].clamp(0.0, 1.0)).collect();
        let total: f64 = mix.iter().sum();
        let mix: Vec<f64> = mix.iter().map(|p| p / total).collect();
        if best.as_ref().is_none_or(|b| sol.objective > b.0 + 1e-9) {
            best = Some((sol.objective, mix, j));
        }
    }
    best.ok_or_else(|| Error::Solver("no follower action is inducible".into()))
}

/// First-stage SSE mixed with uniform play in the second stage.
pub fn stage_sse_blueprint(game: &GameTree) -> Result<Blueprint> {
    let [a1, a2] = stage_one_matrices(game)
        .ok_or_else(|| Error::InvalidParameter("not a two-stage game: no first-stage matrices".into()))?;
    let sf = SequenceForm::new(game)?;
    let tp = sf.leader();
    let root = match game.node(game.root()).kind {
        NodeKind::Decision { infoset, .. } => tp.local(infoset),
        _ => None,
    }
    .ok_or_else(|| Error::InvalidParameter("not a two-stage game: root is not a leader move".into()))?;
    if tp.infosets[root].num_actions != a1.len() {
        return Err(Error::InvalidParameter(
            "first-stage matrix does not match the root".into(),
        ));
    }
    let (value, mix, _) = multiple_lp_sse(&a1, &a2)?;
    let mut bs = BehavioralStrategy::uniform(tp);
    bs.probs[root] = mix;
    Ok(Blueprint {
        plan: behavioral_to_realization(tp, &bs),
        provenance: Provenance::StageSse,
        source: game.name().to_string(),
        value: Some(value),
    })
}

/// Zero-sum game on the same tree used to derive a blueprint: the family's own
/// surrogate where one exists, otherwise the leader's payoffs made zero-sum.
pub fn surrogate_for(game: &GameTree) -> GameTree {
    let family = game
        .metadata()
        .get("generator")
        .and_then(|g| g.get("family"))
        .and_then(|f| f.as_str())
        .unwrap_or_default();
    match family {
        "goofspiel" => goofspiel_surrogate(game),
        "leduc" => leduc_surrogate(game),
        _ => game.map_payoffs(|_, u| [u[0], -u[0]]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlueprintMethod {
    Zerosum,
    StageSse,
    Uniform,
}

impl std::str::FromStr for BlueprintMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidParameter(format!("unknown blueprint method '{s}'")))
    }
}

pub fn compute_blueprint(game: &GameTree, method: BlueprintMethod) -> Result<Blueprint> {
    match method {
        BlueprintMethod::Zerosum => zero_sum_blueprint(game, &surrogate_for(game)),
        BlueprintMethod::StageSse => stage_sse_blueprint(game),
        BlueprintMethod::Uniform => uniform_blueprint(game),
    }
}

pub fn uniform_blueprint(game: &GameTree) -> Result<Blueprint> {
    let sf = SequenceForm::new(game)?;
    Ok(Blueprint {
        plan: RealizationPlan::uniform(sf.leader()),
        provenance: Provenance::Uniform,
        source: game.name().to_string(),
        value: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_first_stage_action() {
        let l = vec![vec![3.0, 3.0], vec![0.0, 0.0]];
        let f = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (v, x, j) = multiple_lp_sse(&l, &f).unwrap();
        assert!((v - 3.0).abs() < 1e-9);
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert_eq!(j, 0);
    }

    #[test]
    fn commitment_beats_nash() {
        // Leader commits to a half-half mix to induce the follower's right column.
        let l = vec![vec![1.0, 3.0], vec![0.0, 2.0]];
        let f = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (v, x, j) = multiple_lp_sse(&l, &f).unwrap();
        assert_eq!(j, 1);
        assert!((v - 2.5).abs() < 1e-9);
        assert!((x[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ragged_matrix_rejected() {
        assert!(multiple_lp_sse(&[vec![1.0]], &[vec![1.0, 2.0]]).is_err());
    }
}
