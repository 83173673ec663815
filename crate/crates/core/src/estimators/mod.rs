//! Second-order-statistics channel estimators and their scoring helpers.

pub mod align;
pub mod correlation;
pub mod covariance;
pub mod subspace;

pub use align::{oracle_align_phase, oracle_align_scalar};
pub use correlation::{estimate_bin_magnitudes, precoding_estimate};
pub use covariance::{CovarianceAccumulator, CovarianceEstimate};
pub use subspace::{
    build_conv_matrix, composite_blocks, composite_len, composite_slices, estimate_noise_variance,
    subspace_estimate,
};

use crate::Cf64;

/// Which residual ambiguity an estimate still carries. Scoring may only apply
/// the oracle correction this tag permits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ambiguity {
    /// Channel known up to an arbitrary complex scalar (subspace method).
    ComplexScalar,
    /// Channel known up to a common phase (precoding method).
    PhaseOnly,
    /// Fully resolved; no correction is legal (completely blind hybrid).
    Resolved,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Smallest eigenvalue of the tap quadratic form (subspace) — zero in
    /// exact statistics.
    pub residual_eigenvalue: Option<f64>,
    /// Iterations spent in iterative stages (power iteration, MPD refinement).
    pub iterations: Option<usize>,
}

/// An estimated channel frequency response plus provenance metadata.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h_freq: Vec<Cf64>,
    /// Time-domain taps when the estimator produces them.
    pub h_taps: Option<Vec<Cf64>>,
    pub ambiguity: Ambiguity,
    pub diagnostics: Diagnostics,
}

/// Normalized mean square error between an estimate and the true response.
pub fn nmse(estimate: &[Cf64], truth: &[Cf64]) -> f64 {
    let num: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let den: f64 = truth.iter().map(|v| v.norm_sqr()).sum();
    num / den
}
