//! Linear-quadratic network formation game: payoffs, equilibrium solvers,
//! exhaustive Nash verification, structural classification, behavioral
//! session simulation and analysis, and session file IO.

pub mod analysis;
pub mod atlas;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod io;
pub mod model;
pub mod structure;
pub mod treatment;
pub mod verifier;

pub use error::{Error, Result};
pub use model::{
    Architecture, EffortProfile, GameParams, IntentProfile, Network, PayoffBreakdown,
    StrategyProfile,
};
pub use treatment::Treatment;
