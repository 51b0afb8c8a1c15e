//! Replicator dynamics as a host for polynomial and generalized
//! Lotka-Volterra flows, the multiplicative-weights discretization with
//! its error bounds, and Turing-machine configurations encoded as
//! reachability targets.
//!
//! Module map:
//! - [`poly`]: polynomials, polynomial vector fields, monomial counts.
//! - [`ode`]: RK4 and Dormand-Prince integration, trajectories, reachability.
//! - [`game`]: matrix games, the replicator field, the logit map.
//! - [`glv`]: GLV systems and their embedding into replicator dynamics.
//! - [`sphere`]: sphere-tangent fields made globally attracting and moved
//!   into the positive orthant.
//! - [`mwu`]: multiplicative weights, local/global error bounds, step sizes.
//! - [`turing`]: Turing machines and their integer configuration encoding.
//! - [`presets`]: ready-made systems (Lorenz, rotations, logistic).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod game;
pub mod glv;
pub mod mwu;
pub mod ode;
pub mod poly;
pub mod presets;
pub mod sphere;
pub mod turing;

pub use error::{Error, Result};
