//! Decentralized separation assurance for corridor air traffic with an
//! attention-equipped discrete soft actor-critic.

pub mod attention;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod harness;
pub mod mdp;
pub mod nn;
pub mod policy;
pub mod sacd;
pub mod sim;

pub use error::{Error, Result};
