//! Subgame decomposition, safety bounds and the refinement MILPs.

mod bounds;
mod full;
mod model;
mod partition;
mod quantities;

pub use bounds::{check_params, compute_bounds, BoundsMap, Direction, HeadBound, TraceEntry, TraceItem};
pub use full::{build_full_milp, FullModel, FullSolution};
pub use model::{
    build_constrained_milp, default_big_m, solve_subgame, LocalPlan, SubgameModel, SubgameSolution, BOUND_TOL,
};
pub use partition::{from_node_sets, partition_subgames, PartitionScheme, Subgame, SubgamePartition};
pub use quantities::{compute_subgame_quantities, SubgameQuantities};

use rayon::prelude::*;

use crate::efg::{GameTree, RealizationPlan, SequenceForm};
use crate::error::Result;
use crate::optim::MilpOptions;
use crate::response::{best_response, compute_trunk, BestResponse, Trunk};

/// Everything derived from a game, a blueprint and a partition before any
/// subgame is solved.
#[derive(Clone, Debug)]
pub struct SearchContext {
    pub sf: SequenceForm,
    pub blueprint: RealizationPlan,
    pub response: BestResponse,
    pub trunk: Trunk,
    pub partition: SubgamePartition,
    pub quantities: Vec<SubgameQuantities>,
    pub bounds: BoundsMap,
}

impl SearchContext {
    pub fn new(
        game: &GameTree,
        blueprint: &RealizationPlan,
        scheme: &PartitionScheme,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let sf = SequenceForm::new(game)?;
        Self::with_partition(
            game,
            sf,
            blueprint,
            |g, sf| partition_subgames(g, sf, scheme),
            alpha,
            beta,
        )
    }

    pub fn with_partition(
        game: &GameTree,
        sf: SequenceForm,
        blueprint: &RealizationPlan,
        partition: impl FnOnce(&GameTree, &SequenceForm) -> Result<SubgamePartition>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        check_params(alpha, beta)?;
        blueprint.check(sf.leader(), 1e-6)?;
        let partition = partition(game, &sf)?;
        let response = best_response(&sf, blueprint)?;
        let trunk = compute_trunk(&sf, &response.plan)?;
        let quantities = compute_subgame_quantities(&sf, &partition, blueprint, &response.plan);
        let bounds = compute_bounds(&sf, &response.brvs, &trunk, &partition, alpha, beta)?;
        Ok(SearchContext {
            sf,
            blueprint: blueprint.clone(),
            response,
            trunk,
            partition,
            quantities,
            bounds,
        })
    }

    pub fn num_subgames(&self) -> usize {
        self.partition.len()
    }

    pub fn model(&self, j: usize) -> Result<SubgameModel> {
        self.model_with(j, &self.bounds)
    }

    /// Model of subgame `j` under other bounds, e.g. vacuous ones.
    pub fn model_with(&self, j: usize, bounds: &BoundsMap) -> Result<SubgameModel> {
        build_constrained_milp(
            &self.sf,
            &self.partition,
            &self.quantities[j],
            bounds,
            &self.blueprint,
            &self.response.brvs,
            None,
        )
    }

    pub fn solve(&self, j: usize, opts: &MilpOptions) -> Result<SubgameSolution> {
        solve_subgame(&self.sf, &self.model(j)?, opts)
    }

    /// Solves every subgame in parallel; results are in subgame order.
    pub fn solve_all(&self, opts: &MilpOptions) -> Result<Vec<SubgameSolution>> {
        (0..self.num_subgames())
            .into_par_iter()
            .map(|j| self.solve(j, opts))
            .collect()
    }
}
