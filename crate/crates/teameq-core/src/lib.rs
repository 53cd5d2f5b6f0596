//! Equilibrium assignment of worker teams to heterogeneous firms under a
//! submodular production technology.
//!
//! Output of a firm with project value `z` and a team of workers with failure
//! probabilities `x_i` is `z * (1 - x_1 * ... * x_n)`; maximizing aggregate
//! output is a multimarginal transport problem that minimizes aggregate
//! expected losses `x_1 * ... * x_n * z`. With a common type distribution for
//! workers and firms the optimum has a closed form: countermonotonic branches
//! pair extreme percentiles, and a completely mixed middle holds losses at a
//! constant. This crate computes that solution and everything around it:
//!
//! - [`dist`]: type distributions on `[0,1]` (uniform, beta, piecewise
//!   inverse-CDF) with regularity checks;
//! - [`discrete`]: finite sample problems, an exact permutation oracle, the
//!   rearrangement heuristic, and stability/mixing checkers;
//! - [`equilibrium`]: cutoff percentiles, the loss constant, marginal
//!   products, wages, and firm values;
//! - [`matchset`]: the support of an optimal assignment and a constructive
//!   sampler for it;
//! - [`verify`]: dual-feasibility certificates, duality gaps, and cumulative
//!   log-loss (Karamata) curves;
//! - [`inference`]: recovery of the type distribution from an
//!   earnings-by-percentile profile, with an independent ODE cross-check;
//! - [`empirics`]: simulated matched panels, within/between-firm variance
//!   decomposition, coworker tables, and distribution-swap counterfactuals.
//!
//! The crate is `no_std` (with `alloc`); all floating-point transcendentals
//! go through `libm` so results are identical across targets.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod num;

pub mod dist;
pub mod discrete;
pub mod equilibrium;
pub mod matchset;
pub mod verify;
pub mod inference;
pub mod empirics;

pub use dist::TypeDistribution;
pub use discrete::{DiscreteAssignment, DiscreteProblem};
pub use equilibrium::EquilibriumSolution;
pub use matchset::AssignmentSample;
