//! Benchmark and fixture game generators.

pub mod fixtures;
mod goofspiel;
mod kuhn;
mod leduc;
mod two_stage;

use serde::{Deserialize, Serialize};

pub use goofspiel::{goofspiel, goofspiel_surrogate, GoofspielSpec};
pub use kuhn::kuhn;
pub use leduc::{leduc, leduc_surrogate, LeducSpec};
pub use two_stage::{draw_two_stage, stage_one_matrices, two_stage, MatrixPair, TwoStageDraw, TwoStageSpec};

use crate::efg::GameTree;
use crate::error::Result;

/// Any generator together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GameSpec {
    Twostage(TwoStageSpec),
    Goofspiel(GoofspielSpec),
    Leduc(LeducSpec),
    Kuhn,
    ExitPair,
    ExitChance,
    BoundsTrace,
}

impl GameSpec {
    pub fn generate(&self) -> Result<GameTree> {
        match self {
            GameSpec::Twostage(s) => two_stage(s),
            GameSpec::Goofspiel(s) => goofspiel(s),
            GameSpec::Leduc(s) => leduc(s),
            GameSpec::Kuhn => Ok(kuhn()),
            GameSpec::ExitPair => Ok(fixtures::exit_pair()),
            GameSpec::ExitChance => Ok(fixtures::exit_chance()),
            GameSpec::BoundsTrace => Ok(fixtures::bounds_trace()),
        }
    }

    /// Same family with a different seed, where the family is seeded.
    pub fn with_seed(&self, seed: u64) -> GameSpec {
        match self {
            GameSpec::Twostage(s) => GameSpec::Twostage(TwoStageSpec { seed, ..s.clone() }),
            GameSpec::Goofspiel(s) => GameSpec::Goofspiel(GoofspielSpec { seed, ..s.clone() }),
            other => other.clone(),
        }
    }
}
