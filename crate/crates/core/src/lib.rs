//! Numerical toolkit for the representation gap of a prediction space with
//! respect to a data manifold.
//!
//! The gap is the mean squared distance from a point drawn on the manifold to
//! the nearest point a model can produce. This crate provides the pieces
//! needed to measure it and to check its `n^{-2/d}` decay:
//!
//! - [`manifolds`]: synthetic manifolds with uniform samplers and projections.
//! - [`groups`]: isometric group actions with closed-form orbit distances.
//! - [`nnindex`]: exact kd-tree nearest-neighbor search.
//! - [`quantize`]: k-means++ and on-manifold Lloyd iterations (optimal datasets).
//! - [`repgap`]: Monte Carlo gap estimators, conditional gaps and predictors.
//! - [`scaling`]: Zador constants, log-log fits and intrinsic dimension.
//! - [`diffusion`]: an analytic-score DDIM sampler over a dataset orbit.

pub mod cloud;
pub mod diffusion;
mod error;
pub mod groups;
pub mod io;
pub mod manifolds;
pub mod nnindex;
pub mod quantize;
pub mod repgap;
pub mod rng;
pub mod scaling;

pub use cloud::PointCloud;
pub use diffusion::{Schedule, ScoreField};
pub use error::{Error, Result};
pub use groups::{GroupKind, GroupSpec, OrbitCloud};
pub use manifolds::{ManifoldKind, ManifoldSpec};
pub use nnindex::NnIndex;
pub use quantize::QuantizerResult;
pub use repgap::{GapEstimate, GapMetric, GapMode, PredictionSpace, Predictor};
pub use scaling::{ScalingFit, ZadorConstants};

/// Squared Euclidean distance, summed in coordinate order.
///
/// Every distance in the crate goes through this function so that the kd-tree,
/// brute-force scans and test oracles agree bit for bit.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}
