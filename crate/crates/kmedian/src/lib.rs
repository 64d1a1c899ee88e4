//! A k-median solver toolkit built around a randomized LP-rounding
//! pipeline with per-cluster leader guessing.
//!
//! The pieces, bottom to top:
//!
//! - [`metric`]: weighted (semi-)metric instances, validation, cost
//!   accounting, and rescaling to minimum distance 1.
//! - [`coreset`]: the identity coreset (exact) and a sensitivity-sampling
//!   heuristic for larger inputs.
//! - [`guessing`]: enumeration of per-cluster (leader, radius) guesses and
//!   the disjoint candidate sets they induce.
//! - [`relaxation`]: the assignment LP over candidate sets, an embedded
//!   dense simplex, and the center-splitting post-process.
//! - [`rounding`]: randomized opening, the assignment rule with its
//!   analysis cost labels, and the end-to-end [`rounding::solve`] pipeline.
//! - [`oracle`]: exact brute-force baselines for k-median and maximum
//!   coverage, plus greedy coverage.
//! - [`bounds`]: numerical reproduction of the factor-revealing analysis
//!   (the 1.546 algorithmic constant and the 1.417 hardness constant).
//! - [`gadgets`]: coverage hardness gadgets — planted and random
//!   hypergraphs, the incidence-graph reduction to k-median,
//!   pairwise-independent distributions, and the dictatorship test.
//!
//! All randomness flows from explicit seeds through counter-based
//! substreams; every pipeline output is reproducible bit-for-bit.

// Indexed loops over square matrices and parallel arrays are the
// deliberate style in the numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod coreset;
pub mod error;
pub mod gadgets;
pub mod guessing;
pub mod metric;
pub mod oracle;
pub mod relaxation;
pub mod rng;
pub mod rounding;
pub mod simplex;

pub use error::{Error, Result};
pub use metric::{MetricInstance, SolutionReport};
pub use rounding::{solve, CoresetMode, SolveMode, SolveParams};
