//! Game file format and generators.

mod format;
pub mod gen;

pub use format::{
    parse_game, parse_plan, serialize_game, serialize_plan, GameFile, NodeRecord, NodeRecordKind, PlanFile,
    FORMAT_VERSION,
};
