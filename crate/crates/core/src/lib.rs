//! Desk-scale interactive molecular dynamics and imitation learning.
//!
//! This crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats, the session service and the command-line tool live
//! in the `demoforge` companion crate.
//!
//! - [`md`]: force field, integrator, interactive forces and the two benchmark systems.
//! - [`env`]: reset/step task environments, success predicate, scripted expert, rollouts.
//! - [`nn`]: MLP with analytic gradients, Adam, diagonal-Gaussian policy.
//! - [`il`]: behavioral cloning, max-entropy IRL, GAIL, DAgger, crowd aggregation.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod env;
pub mod il;
pub mod math;
pub mod md;
pub mod nn;
pub mod rng;

pub use math::Vec3;
