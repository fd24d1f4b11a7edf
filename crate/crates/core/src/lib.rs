//! Learning approximate correlated equilibria of convex games.
//!
//! A distribution over `N` basis joint actions is tuned by Bayesian
//! optimization so that the players' average correlated regret, evaluated by
//! Frank–Wolfe best responses, is as small as possible. The bundled example
//! is a congestion game on a road network with BPR link costs.

pub mod basis;
pub mod bayesopt;
pub mod error;
pub mod game;
pub mod harness;
pub mod polytope;
pub mod regret;
pub mod tntp;

pub use error::{Error, Result};
