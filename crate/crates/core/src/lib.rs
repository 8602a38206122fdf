//! Preference identification for multi-attribute hedonic markets.
//!
//! Consumers of observable type `x` and unobserved taste `eps` buy goods of
//! quality `z` at price `p(z)`. Given the distribution of traded qualities and
//! the price schedule in a single market, the consumer potential
//! `V(x, z) = p(z) - Ubar(x, z)` is recovered as the dual solution of an
//! optimal-transport problem between the taste distribution and the quality
//! distribution. The crate provides:
//!
//! * [`measures`]: discrete measures, market datasets and conditioning on `x`;
//! * [`surplus`]: closed families for the taste surplus `zeta(x, eps, z)`,
//!   base utility and cost, with analytic derivatives and a twist diagnostic;
//! * [`ot`]: exact and entropic discrete Kantorovich solvers with duals;
//! * [`conjugate`]: grid zeta-conjugation and Legendre transforms;
//! * [`identify`]: quantile, Brenier and general identification pipelines;
//! * [`equilibrium`]: a discrete hedonic equilibrium simulator;
//! * [`cli`]: the command-line front end used by the `hedonic` binary.

pub mod cli;
pub mod conjugate;
pub mod equilibrium;
pub mod error;
pub mod identify;
pub mod io;
pub mod measures;
pub mod ot;
pub mod surplus;

pub use error::{Error, Result};
