//! Confidential reconstruction accuracy (CRA) for remote estimation of a
//! binary Markov source over a wiretap erasure channel.
//!
//! The crate covers the whole analysis pipeline:
//!
//! * [`model`]: source, channel and randomized stationary policy primitives.
//! * [`stationary`]: the 8-state joint chain `(X, X̂, X̂ᵉ)` and three
//!   independent routes to its stationary distribution (linear solve,
//!   resolvent closed form, truncated age series).
//! * [`metrics`]: average CRA, its rational form in the transmission
//!   probability, and the marginal accuracy / confidentiality baselines.
//! * [`optimizer`]: the closed-form optimal transmission probability and a
//!   brute-force grid oracle.
//! * [`sim`]: a seeded slot-level Monte Carlo simulator.
//! * [`geofence`]: UMi path-loss maps, pointwise optimization and the
//!   threshold contour.
//! * [`validate`]: the cross-check battery behind `cra validate`.
//!
//! Data-parallel loops (replications, sweeps, map cells) go through
//! [`Execution`]; with the default `parallel` feature they run on rayon,
//! otherwise they fall back to a plain sequential loop. Results are
//! bit-identical either way.

// `!(x <= tol)` is the NaN-rejecting form; index loops mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod exec;
pub mod geofence;
pub mod mat2;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod sim;
pub mod stationary;
pub mod validate;

pub use exec::Execution;
pub use metrics::{CraRational, MetricReport};
pub use model::{ChannelPair, CorrelationClass, LambdaSet, ModelError, Policy, SourceModel};
pub use optimizer::{Branch, FeasibleInterval, OptimizerResult};
pub use sim::{SimConfig, SimEstimate};
pub use stationary::{JointKernel, JointState, JointStationary};
