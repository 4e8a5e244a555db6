use std::fmt::Write as _;
use std::time::Instant;

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-6;
pub const INT_TOL: f64 = 1e-6;
pub const GAP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A maximization LP over bounded or free variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, obj: f64) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(obj);
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.variables.iter().enumerate() {
            if v.lower > v.upper || v.lower.is_nan() || v.upper.is_nan() {
                return Err(Error::InvalidParameter(format!(
                    "variable {i} ({}) has empty bounds",
                    v.name
                )));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite objective coefficient".into()));
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() || c.coeffs.iter().any(|&(v, a)| !a.is_finite() || v >= self.num_vars()) {
                return Err(Error::InvalidParameter(format!("constraint {} is malformed", c.name)));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or constraint violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &val) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - val).max(val - v.upper);
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(v, a)| a * x[v]).sum();
            let d = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(d);
        }
        worst
    }

    /// Fixed-format text dump in CPLEX LP style.
    pub fn to_lp_string(&self, binaries: &[usize]) -> String {
        let name = |i: usize| sanitize(&self.variables[i].name, i);
        let term = |out: &mut String, a: f64, v: String, first: bool| {
            if a < 0.0 {
                let _ = write!(out, " - {} {}", fmt_num(-a), v);
            } else if first {
                let _ = write!(out, " {} {}", fmt_num(a), v);
            } else {
                let _ = write!(out, " + {} {}", fmt_num(a), v);
            }
        };
        let mut out = String::from("Maximize\n obj:");
        let mut first = true;
        for (i, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                term(&mut out, c, name(i), first);
                first = false;
            }
        }
        if first {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (k, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " {}:", sanitize(&c.name, k));
            let mut first = true;
            for &(v, a) in &c.coeffs {
                term(&mut out, a, name(v), first);
                first = false;
            }
            if first {
                out.push_str(" 0");
            }
            let op = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, " {op} {}", fmt_num(c.rhs));
        }
        out.push_str("Bounds\n");
        for (i, v) in self.variables.iter().enumerate() {
            let lo = if v.lower == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                fmt_num(v.lower)
            };
            let hi = if v.upper == f64::INFINITY {
                "+inf".to_string()
            } else {
                fmt_num(v.upper)
            };
            let _ = writeln!(out, " {lo} <= {} <= {hi}", name(i));
        }
        if !binaries.is_empty() {
            out.push_str("Binaries\n");
            for &b in binaries {
                let _ = writeln!(out, " {}", name(b));
            }
        }
        out.push_str("End\n");
        out
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:.12e}")
}

fn sanitize(name: &str, i: usize) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        format!("x{i}_{s}")
    } else {
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    IncumbentTimeLimit,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    /// `None` when no feasible assignment is known.
    pub values: Option<Vec<f64>>,
    /// Best proven upper bound on the optimum.
    pub bound: f64,
    pub gap: f64,
    pub wall_time: f64,
    pub nodes: usize,
    /// Objective of every incumbent in the order they were found.
    pub incumbents: Vec<f64>,
}

impl MilpSolution {
    pub(crate) fn failed(status: SolveStatus, wall_time: f64) -> Self {
        MilpSolution {
            status,
            objective: f64::NEG_INFINITY,
            values: None,
            bound: if status == SolveStatus::Unbounded {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            gap: f64::INFINITY,
            wall_time,
            nodes: 0,
            incumbents: Vec::new(),
        }
    }
}

pub(crate) fn to_microlp(lp: &LinearProgram) -> (Problem, Vec<microlp::Variable>) {
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<microlp::Variable> = lp
        .variables
        .iter()
        .zip(&lp.objective)
        .map(|(v, &c)| p.add_var(c, (v.lower, v.upper)))
        .collect();
    for c in &lp.constraints {
        let mut merged: Vec<(usize, f64)> = c.coeffs.clone();
        merged.sort_by_key(|&(v, _)| v);
        merged.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let op = match c.relation {
            Relation::Le => ComparisonOp::Le,
            Relation::Eq => ComparisonOp::Eq,
            Relation::Ge => ComparisonOp::Ge,
        };
        let expr: Vec<(microlp::Variable, f64)> = merged
            .into_iter()
            .filter(|&(_, a)| a != 0.0)
            .map(|(v, a)| (vars[v], a))
            .collect();
        p.add_constraint(expr, op, c.rhs);
    }
    (p, vars)
}

/// Solves an LP to optimality.
pub fn solve_lp(lp: &LinearProgram) -> Result<MilpSolution> {
    lp.validate()?;
    let start = Instant::now();
    let (p, vars) = to_microlp(lp);
    match p.solve() {
        Ok(outcome) => {
            let sol = outcome
                .into_solution()
                .map_err(|_| Error::Solver("LP solve interrupted".into()))?;
            let values: Vec<f64> = vars.iter().map(|&v| sol.var_value_raw(v)).collect();
            let objective = lp.objective_value(&values);
            Ok(MilpSolution {
                status: SolveStatus::Optimal,
                objective,
                values: Some(values),
                bound: objective,
                gap: 0.0,
                wall_time: start.elapsed().as_secs_f64(),
                nodes: 1,
                incumbents: vec![objective],
            })
        }
        Err(microlp::Error::Infeasible) => Ok(MilpSolution::failed(
            SolveStatus::Infeasible,
            start.elapsed().as_secs_f64(),
        )),
        Err(microlp::Error::Unbounded) => Ok(MilpSolution::failed(
            SolveStatus::Unbounded,
            start.elapsed().as_secs_f64(),
        )),
        Err(e) => Err(Error::Solver(e.to_string())),
    }
}
