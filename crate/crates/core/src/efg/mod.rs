//! Extensive-form games, treeplexes and strategies.

mod game;
mod plan;
mod treeplex;

pub use game::{
    validate_game, GameBuilder, GameTree, InfoSet, InfosetId, Node, NodeId, NodeKind, Player, ValidationReport,
    Violation, ViolationKind, CHANCE_TOL,
};
pub use plan::{
    behavioral_to_realization, expected_payoffs, realization_to_behavioral, BehavioralStrategy, RealizationPlan,
    FLOW_TOL,
};
pub use treeplex::{build_treeplex, Leaf, SeqId, Sequence, SequenceForm, Treeplex, TreeplexInfoset, EMPTY};
