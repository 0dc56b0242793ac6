//! Average-value allocation: bundle LPs, offline and online rounding,
//! exact oracles and the named instance families.

pub mod bundling;
pub mod cli;
pub mod error;
pub mod exact;
pub mod gap;
pub mod genava;
pub mod generators;
pub mod harness;
pub mod iid;
pub mod lp;
pub mod lp_models;
pub mod model;
pub mod rational;
pub mod rounding;

pub use error::{AvaError, Result};
pub use model::{Allocation, BuyerId, EdgeClass, Instance, InstanceBuilder, ItemId};
pub use rational::Rational;
