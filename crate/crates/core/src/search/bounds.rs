use serde::{Deserialize, Serialize};

use crate::efg::{SeqId, SequenceForm, EMPTY};
use crate::error::{Error, Result};
use crate::response::{BrvTable, Trunk};

use super::partition::SubgamePartition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

/// Bound on the follower value of a head infoset, on the same chance-weighted
/// scale as the BRVs. `-inf` marks a vacuous bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeadBound {
    pub subgame: usize,
    /// Local follower infoset.
    pub infoset: usize,
    pub direction: Direction,
    pub value: f64,
}

impl HeadBound {
    pub fn is_vacuous(&self) -> bool {
        self.value == f64::NEG_INFINITY
    }

    pub fn satisfied_by(&self, v: f64, tol: f64) -> bool {
        match self.direction {
            _ if self.is_vacuous() => true,
            Direction::Lower => v >= self.value - tol,
            Direction::Upper => v <= self.value + tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceItem {
    Sequence(SeqId),
    Infoset(usize),
}

/// Every bound passed down during generation, in visiting order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub item: TraceItem,
    pub direction: Direction,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsMap {
    pub alpha: f64,
    pub beta: f64,
    /// Sorted by local infoset.
    pub heads: Vec<HeadBound>,
    pub trace: Vec<TraceEntry>,
}

impl BoundsMap {
    pub fn for_subgame(&self, j: usize) -> impl Iterator<Item = &HeadBound> + '_ {
        self.heads.iter().filter(move |b| b.subgame == j)
    }

    pub fn get(&self, infoset: usize) -> Option<&HeadBound> {
        self.heads
            .binary_search_by_key(&infoset, |b| b.infoset)
            .ok()
            .map(|i| &self.heads[i])
    }

    pub fn traced(&self, item: TraceItem) -> Option<&TraceEntry> {
        self.trace.iter().find(|t| t.item == item)
    }

    /// Same heads with every bound made vacuous.
    pub fn vacuous(&self) -> BoundsMap {
        BoundsMap {
            heads: self
                .heads
                .iter()
                .map(|b| HeadBound {
                    value: f64::NEG_INFINITY,
                    ..*b
                })
                .collect(),
            trace: Vec::new(),
            ..*self
        }
    }
}

pub fn check_params(alpha: f64, beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if beta.is_nan() || beta < 1.0 || beta.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite and >= 1, got {beta}"
        )));
    }
    Ok(())
}

struct Walk<'a> {
    sf: &'a SequenceForm,
    brv: &'a BrvTable,
    part: &'a SubgamePartition,
    alpha: f64,
    beta: f64,
    heads: Vec<HeadBound>,
    trace: Vec<TraceEntry>,
}

impl Walk<'_> {
    fn note(&mut self, item: TraceItem, direction: Direction, value: f64) {
        self.trace.push(TraceEntry { item, direction, value });
    }

    fn head(&mut self, i: usize, direction: Direction, value: f64) -> bool {
        match self.part.infoset_subgame[1][i] {
            Some(j) if self.part.subgames[j].heads[1].contains(&i) => {
                self.heads.push(HeadBound {
                    subgame: j,
                    infoset: i,
                    direction,
                    value,
                });
                true
            }
            _ => false,
        }
    }

    fn seq_trunk(&mut self, s: SeqId, lb: f64) {
        self.note(TraceItem::Sequence(s), Direction::Lower, lb);
        let kids = &self.sf.follower().children[s];
        if kids.is_empty() {
            return;
        }
        let share = self.beta * (self.brv.brv_seq[s] - lb) / kids.len() as f64;
        for &c in kids.clone().iter() {
            let child_lb = if lb == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                self.brv.brv_inf[c] - share
            };
            self.inf_trunk(c, child_lb);
        }
    }

    fn inf_trunk(&mut self, i: usize, lb: f64) {
        self.note(TraceItem::Infoset(i), Direction::Lower, lb);
        if self.head(i, Direction::Lower, lb) {
            return;
        }
        let best = self.brv.best_action[i];
        let top = self.brv.brv_seq[best];
        let second = self.brv.second_value[i];
        let blend = if second == f64::NEG_INFINITY {
            if self.alpha == 1.0 {
                top
            } else {
                f64::NEG_INFINITY
            }
        } else {
            self.alpha * top + (1.0 - self.alpha) * second
        };
        let bound = blend.max(lb);
        for s in self.sf.follower().infosets[i].seqs() {
            if s == best {
                self.seq_trunk(s, bound);
            } else {
                self.seq_non_trunk(s, bound);
            }
        }
    }

    fn seq_non_trunk(&mut self, s: SeqId, ub: f64) {
        self.note(TraceItem::Sequence(s), Direction::Upper, ub);
        let kids = &self.sf.follower().children[s];
        if kids.is_empty() {
            return;
        }
        let share = (ub - self.brv.brv_seq[s]) / kids.len() as f64;
        for &c in kids.clone().iter() {
            let child_ub = if ub == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                self.brv.brv_inf[c] + share
            };
            self.inf_non_trunk(c, child_ub);
        }
    }

    fn inf_non_trunk(&mut self, i: usize, ub: f64) {
        self.note(TraceItem::Infoset(i), Direction::Upper, ub);
        if self.head(i, Direction::Upper, ub) {
            return;
        }
        for s in self.sf.follower().infosets[i].seqs() {
            self.seq_non_trunk(s, ub);
        }
    }
}

/// Safety bounds on every follower head infoset. Trunk heads get lower bounds,
/// the rest upper bounds. `alpha` blends the best and second-best action values;
/// `beta` scales the slack handed down the trunk.
pub fn compute_bounds(
    sf: &SequenceForm,
    brvs: &BrvTable,
    trunk: &Trunk,
    partition: &SubgamePartition,
    alpha: f64,
    beta: f64,
) -> Result<BoundsMap> {
    check_params(alpha, beta)?;
    let mut w = Walk {
        sf,
        brv: brvs,
        part: partition,
        alpha,
        beta,
        heads: Vec::new(),
        trace: Vec::new(),
    };
    w.seq_trunk(EMPTY, f64::NEG_INFINITY);
    let mut heads = w.heads;
    heads.sort_by_key(|b| b.infoset);
    for b in &heads {
        let expect = if trunk.contains(b.infoset) {
            Direction::Lower
        } else {
            Direction::Upper
        };
        if b.direction != expect {
            return Err(Error::BoundViolation(format!(
                "bound direction of follower infoset {} disagrees with the trunk",
                b.infoset
            )));
        }
    }
    Ok(BoundsMap {
        alpha,
        beta,
        heads,
        trace: w.trace,
    })
}
