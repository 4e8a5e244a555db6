//! Strong Stackelberg equilibria of two-player extensive-form games, with
//! blueprint strategies refined by safe subgame search.

pub mod blueprint;
pub mod efg;
pub mod error;
pub mod gadget;
pub mod harness;
pub mod io;
pub mod optim;
pub mod response;
pub mod search;

pub use error::{Error, Result};
