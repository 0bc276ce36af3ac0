//! Robust controlled invariant sets for monotone continuous-time control
//! systems under lower-closed safety constraints.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod feasibility;
pub mod models;
pub mod monotonicity;
pub mod order;
pub mod persist;
pub mod plot;
pub mod solver;

pub use error::{Error, Result};
