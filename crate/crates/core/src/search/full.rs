use crate::blueprint::clean;
use crate::efg::{RealizationPlan, SequenceForm, EMPTY};
use crate::error::{Error, Result};
use crate::optim::{solve_milp, LinearProgram, MilpOptions, MilpProblem, Relation, SolveStatus};
use crate::response::best_response;

/// Whole-game SSE MILP over both treeplexes.
#[derive(Clone, Debug)]
pub struct FullModel {
    pub milp: MilpProblem,
    pub big_m: f64,
    /// Variable of each leader sequence, indexed by sequence.
    pub r1: Vec<usize>,
    pub r2: Vec<usize>,
    /// Value variable per follower infoset.
    pub v: Vec<usize>,
    /// Slack variable per follower sequence; unused for the empty sequence.
    pub s: Vec<usize>,
    pub p: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullSolution {
    pub plan: RealizationPlan,
    pub response: RealizationPlan,
    pub objective: f64,
    pub bound: f64,
    pub status: SolveStatus,
    pub wall_time: f64,
    pub nodes: usize,
}

pub fn build_full_milp(sf: &SequenceForm) -> FullModel {
    let (t1, t2) = (sf.leader(), sf.follower());
    let big_m = 2.0 * sf.leaves.iter().map(|l| (l.chance * l.payoffs[1]).abs()).sum::<f64>() + 1.0;
    let mut lp = LinearProgram::new();
    let r1: Vec<usize> = (0..t1.num_sequences())
        .map(|q| {
            let lo = if q == EMPTY { 1.0 } else { 0.0 };
            lp.add_var(format!("r1_{q}"), lo, 1.0, 0.0)
        })
        .collect();
    let r2: Vec<usize> = (0..t2.num_sequences())
        .map(|q| {
            let lo = if q == EMPTY { 1.0 } else { 0.0 };
            lp.add_var(format!("r2_{q}"), lo, 1.0, 0.0)
        })
        .collect();
    let v: Vec<usize> = (0..t2.num_infosets())
        .map(|i| lp.add_var(format!("v_{i}"), f64::NEG_INFINITY, f64::INFINITY, 0.0))
        .collect();
    let s: Vec<usize> = (0..t2.num_sequences())
        .map(|q| {
            if q == EMPTY {
                usize::MAX
            } else {
                lp.add_var(format!("s_{q}"), 0.0, f64::INFINITY, 0.0)
            }
        })
        .collect();

    for (tp, vars, tag) in [(t1, &r1, "flow1"), (t2, &r2, "flow2")] {
        for (i, set) in tp.infosets.iter().enumerate() {
            let mut row = vec![(vars[set.parent_seq], -1.0)];
            row.extend(set.seqs().map(|q| (vars[q], 1.0)));
            lp.add_constraint(format!("{tag}_{i}"), row, Relation::Eq, 0.0);
        }
    }
    let mut g2: Vec<Vec<(usize, f64)>> = vec![Vec::new(); t2.num_sequences()];
    for &((s1, s2), g) in &sf.payoff_table {
        if g[1] != 0.0 {
            g2[s2].push((r1[s1], g[1]));
        }
    }
    for (i, set) in t2.infosets.iter().enumerate() {
        for q in set.seqs() {
            let mut row = vec![(v[i], 1.0), (s[q], -1.0)];
            row.extend(t2.children[q].iter().map(|&c| (v[c], -1.0)));
            row.extend(g2[q].iter().map(|&(var, c)| (var, -c)));
            lp.add_constraint(format!("value_{q}"), row, Relation::Eq, 0.0);
            lp.add_constraint(
                format!("bigm_{q}"),
                vec![(s[q], 1.0), (r2[q], big_m)],
                Relation::Le,
                big_m,
            );
        }
    }
    let mut p = Vec::new();
    let mut mass = Vec::new();
    for (k, leaf) in sf.leaves.iter().enumerate() {
        if leaf.chance <= 0.0 {
            continue;
        }
        let var = lp.add_var(format!("p_{}", leaf.node), 0.0, 1.0, leaf.chance * leaf.payoffs[0]);
        lp.add_constraint(
            format!("cap1_{}", leaf.node),
            vec![(var, 1.0), (r1[leaf.seqs[0]], -1.0)],
            Relation::Le,
            0.0,
        );
        lp.add_constraint(
            format!("cap2_{}", leaf.node),
            vec![(var, 1.0), (r2[leaf.seqs[1]], -1.0)],
            Relation::Le,
            0.0,
        );
        mass.push((var, leaf.chance));
        p.push((k, var));
    }
    lp.add_constraint("mass", mass, Relation::Eq, 1.0);
    let binaries = r2.clone();
    FullModel {
        milp: MilpProblem { lp, binaries },
        big_m,
        r1,
        r2,
        v,
        s,
        p,
    }
}

impl FullModel {
    /// Assignment for a leader plan and its best response.
    pub fn warm_start(&self, sf: &SequenceForm, leader: &RealizationPlan) -> Result<Vec<f64>> {
        let br = best_response(sf, leader)?;
        let t2 = sf.follower();
        let mut x: Vec<f64> = vec![0.0; self.milp.lp.num_vars()];
        for (q, &var) in self.r1.iter().enumerate() {
            x[var] = leader.probs[q];
        }
        for (q, &var) in self.r2.iter().enumerate() {
            x[var] = br.plan.probs[q];
        }
        for (i, &var) in self.v.iter().enumerate() {
            x[var] = br.brvs.brv_inf[i];
        }
        for (i, set) in t2.infosets.iter().enumerate() {
            for q in set.seqs() {
                x[self.s[q]] = (br.brvs.brv_inf[i] - br.brvs.brv_seq[q]).max(0.0);
            }
        }
        for &(k, var) in &self.p {
            let [s1, s2] = sf.leaves[k].seqs;
            x[var] = leader.probs[s1] * br.plan.probs[s2];
        }
        Ok(x)
    }

    pub fn solve(&self, sf: &SequenceForm, warm: Option<&RealizationPlan>, opts: &MilpOptions) -> Result<FullSolution> {
        let start = match warm {
            Some(plan) => Some(self.warm_start(sf, plan)?),
            None => None,
        };
        let sol = solve_milp(&self.milp, start.as_deref(), opts)?;
        let x = sol
            .values
            .as_ref()
            .ok_or_else(|| Error::Solver(format!("full-game MILP ended {:?} without a solution", sol.status)))?;
        let plan = clean(sf.leader(), self.r1.iter().map(|&v| x[v]).collect());
        let response = RealizationPlan {
            owner: sf.follower().owner,
            probs: self.r2.iter().map(|&v| x[v].round()).collect(),
        };
        Ok(FullSolution {
            plan,
            response,
            objective: sol.objective,
            bound: sol.bound,
            status: sol.status,
            wall_time: sol.wall_time,
            nodes: sol.nodes,
        })
    }
}
