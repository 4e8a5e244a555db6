use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use microlp::Solution;

use super::lp::{solve_lp, to_microlp, LinearProgram, MilpSolution, SolveStatus, FEAS_TOL, GAP_TOL, INT_TOL};
use crate::error::{Error, Result};

/// An LP with a subset of variables restricted to {0, 1}.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

impl MilpProblem {
    pub fn validate(&self) -> Result<()> {
        self.lp.validate()?;
        for &b in &self.binaries {
            let v = self
                .lp
                .variables
                .get(b)
                .ok_or_else(|| Error::InvalidParameter(format!("binary id {b} out of range")))?;
            if v.lower < 0.0 || v.upper > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "binary {} has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
        }
        Ok(())
    }

    /// Feasible within tolerance, including integrality.
    pub fn is_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.lp.num_vars()
            && self.lp.max_violation(x) <= FEAS_TOL
            && self
                .binaries
                .iter()
                .all(|&b| x[b].abs() <= INT_TOL || (x[b] - 1.0).abs() <= INT_TOL)
    }

    pub fn to_lp_string(&self) -> String {
        self.lp.to_lp_string(&self.binaries)
    }
}

#[derive(Clone, Debug, Default)]
pub struct MilpOptions {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
}

impl MilpOptions {
    pub fn with_time_limit(secs: f64) -> Self {
        MilpOptions {
            time_limit: Some(Duration::from_secs_f64(secs)),
            node_limit: None,
        }
    }
}

struct OpenNode {
    bound: f64,
    depth: usize,
    order: usize,
    fixings: Vec<(usize, f64)>,
    lp: Option<Solution>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    /// Best bound first, then deeper, then older.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.order.cmp(&self.order))
    }
}

/// Open nodes keep their parent's LP state only while the queue is small.
const STORED_LP_STATES: usize = 64;

fn gap_tol(obj: f64) -> f64 {
    if obj.is_finite() {
        GAP_TOL * (1.0 + obj.abs())
    } else {
        0.0
    }
}

/// Branch and bound over the binary variables. `warm`, if feasible, seeds the
/// incumbent.
pub fn solve_milp(p: &MilpProblem, warm: Option<&[f64]>, opts: &MilpOptions) -> Result<MilpSolution> {
    p.validate()?;
    let start = Instant::now();
    if p.binaries.is_empty() {
        return solve_lp(&p.lp);
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut incumbents = Vec::new();
    if let Some(w) = warm {
        if p.is_feasible(w) {
            let mut x = w.to_vec();
            snap(&mut x, &p.binaries);
            let obj = p.lp.objective_value(&x);
            incumbents.push(obj);
            best = Some((obj, x));
        } else {
            log::warn!(
                "warm start infeasible (violation {:.3e}); ignored",
                p.lp.max_violation(w)
            );
        }
    }

    let (problem, vars) = to_microlp(&p.lp);
    let root = match problem.solve() {
        Ok(o) => o
            .into_solution()
            .map_err(|_| Error::Solver("root LP interrupted".into()))?,
        Err(microlp::Error::Infeasible) => {
            return Ok(finish(
                best,
                incumbents,
                SolveStatus::Infeasible,
                f64::NEG_INFINITY,
                0,
                start,
            ));
        }
        Err(microlp::Error::Unbounded) => {
            return Ok(MilpSolution::failed(
                SolveStatus::Unbounded,
                start.elapsed().as_secs_f64(),
            ));
        }
        Err(e) => return Err(Error::Solver(e.to_string())),
    };

    let mut heap = BinaryHeap::new();
    let mut order = 0usize;
    let mut dive: Option<OpenNode> = Some(OpenNode {
        bound: root.objective(),
        depth: 0,
        order,
        fixings: Vec::new(),
        lp: Some(root.clone()),
    });
    let mut nodes = 0usize;
    let mut limited = false;

    loop {
        let inc = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
        let out_of_budget =
            opts.time_limit.is_some_and(|t| start.elapsed() >= t) || opts.node_limit.is_some_and(|n| nodes >= n);
        let node = match dive.take() {
            Some(n) => n,
            None => match heap.pop() {
                Some(n) => n,
                None => break,
            },
        };
        if node.bound <= inc + gap_tol(inc) {
            continue;
        }
        if out_of_budget {
            heap.push(node);
            limited = true;
            break;
        }
        nodes += 1;
        let sol = match node.lp {
            Some(s) => Some(s),
            None => replay(&root, &vars, &node.fixings)?,
        };
        let Some(sol) = sol else { continue };
        let obj = sol.objective();
        if obj <= inc + gap_tol(inc) {
            continue;
        }
        let x: Vec<f64> = vars.iter().map(|&v| sol.var_value_raw(v)).collect();
        match most_fractional(&x, &p.binaries) {
            None => {
                let mut x = x;
                snap(&mut x, &p.binaries);
                let value = p.lp.objective_value(&x);
                if p.lp.max_violation(&x) > FEAS_TOL {
                    log::warn!("integral LP point violates constraints; node skipped");
                    continue;
                }
                if value > inc {
                    incumbents.push(value);
                    best = Some((value, x));
                }
            }
            Some(b) => {
                let first = if x[b] >= 0.5 { 1.0 } else { 0.0 };
                let mut fix_first = node.fixings.clone();
                fix_first.push((b, first));
                let mut fix_second = node.fixings;
                fix_second.push((b, 1.0 - first));
                order += 1;
                // With room in the queue the sibling is solved now, which also tightens its bound.
                let sibling = if heap.len() < STORED_LP_STATES {
                    fix(sol.clone(), vars[b], 1.0 - first)?.map(|s| (s.objective(), Some(s)))
                } else {
                    Some((obj, None))
                };
                if let Some((bound, lp)) = sibling {
                    heap.push(OpenNode {
                        bound,
                        depth: fix_second.len(),
                        order,
                        fixings: fix_second,
                        lp,
                    });
                }
                order += 1;
                if let Some(s) = fix(sol, vars[b], first)? {
                    dive = Some(OpenNode {
                        bound: obj,
                        depth: fix_first.len(),
                        order,
                        fixings: fix_first,
                        lp: Some(s),
                    });
                }
            }
        }
    }

    let inc = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
    if limited && open_bound > inc + gap_tol(inc) {
        Ok(finish(
            best,
            incumbents,
            SolveStatus::IncumbentTimeLimit,
            open_bound,
            nodes,
            start,
        ))
    } else if best.is_some() {
        Ok(finish(best, incumbents, SolveStatus::Optimal, inc, nodes, start))
    } else {
        Ok(finish(
            None,
            incumbents,
            SolveStatus::Infeasible,
            f64::NEG_INFINITY,
            nodes,
            start,
        ))
    }
}

fn finish(
    best: Option<(f64, Vec<f64>)>,
    incumbents: Vec<f64>,
    status: SolveStatus,
    bound: f64,
    nodes: usize,
    start: Instant,
) -> MilpSolution {
    let wall_time = start.elapsed().as_secs_f64();
    match best {
        Some((obj, x)) => {
            let bound = bound.max(obj);
            MilpSolution {
                status,
                objective: obj,
                values: Some(x),
                bound,
                gap: (bound - obj) / (1.0 + obj.abs()),
                wall_time,
                nodes,
                incumbents,
            }
        }
        None => {
            let mut s = MilpSolution::failed(status, wall_time);
            s.bound = bound;
            s.nodes = nodes;
            s
        }
    }
}

fn fix(sol: Solution, var: microlp::Variable, val: f64) -> Result<Option<Solution>> {
    match sol.fix_var(var, val) {
        Ok(o) => match o.into_solution() {
            Ok(s) => Ok(Some(s)),
            Err(_) => Err(Error::Solver("LP re-solve interrupted".into())),
        },
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => {
            log::warn!("LP re-solve failed ({e}); node pruned");
            Ok(None)
        }
    }
}

fn replay(root: &Solution, vars: &[microlp::Variable], fixings: &[(usize, f64)]) -> Result<Option<Solution>> {
    let mut sol = root.clone();
    for &(v, val) in fixings {
        match fix(sol, vars[v], val)? {
            Some(s) => sol = s,
            None => return Ok(None),
        }
    }
    Ok(Some(sol))
}

fn most_fractional(x: &[f64], binaries: &[usize]) -> Option<usize> {
    let mut pick: Option<(usize, f64)> = None;
    for &b in binaries {
        let f = x[b] - x[b].floor();
        let dist = f.min(1.0 - f);
        if dist > INT_TOL {
            let score = (x[b] - 0.5).abs();
            match pick {
                Some((pb, ps)) if score > ps || (score == ps && b > pb) => {}
                _ => pick = Some((b, score)),
            }
        }
    }
    pick.map(|p| p.0)
}

fn snap(x: &mut [f64], binaries: &[usize]) {
    for &b in binaries {
        x[b] = x[b].round();
    }
}
