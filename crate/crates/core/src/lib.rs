//! Blind channel estimation laboratory for SISO-OFDM.
//!
//! Implements the full transmit/channel/receive chain (constellation mapping with
//! optional region splitting, linear precoding, unitary OFDM modulation with cyclic
//! prefix, frequency-selective Rayleigh fading with AWGN) together with three
//! channel estimators driven purely by second-order statistics of the received
//! signal:
//!
//! - a CP-induced **subspace** estimator working on composite time-domain blocks
//!   (channel recovered up to a complex-scalar ambiguity),
//! - a **precoding**-induced correlation estimator working on frequency-domain
//!   blocks (channel recovered up to a common phase ambiguity),
//! - a completely blind **hybrid** estimator that resolves both ambiguities from
//!   the signal itself, using precoding statistics for the amplitude and a
//!   modified phase-directed resolver over known constellation regions for the
//!   phase.
//!
//! The [`harness`] module runs seeded Monte-Carlo sweeps over block count and SNR
//! and writes NMSE results as CSV plus a gnuplot script.

pub mod channel;
pub mod constellation;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod mpd;
pub mod ofdm;
pub mod precoding;
pub mod system;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type Cf64 = num_complex::Complex64;
