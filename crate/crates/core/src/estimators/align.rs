//! Oracle ambiguity correction for semi-blind scoring.
//!
//! These stand in for the pilot-based correction of the residual ambiguity:
//! the scalar oracle may only be applied to complex-scalar-ambiguous
//! estimates, the phase oracle only to phase-ambiguous ones.

use crate::{Cf64, Error, Result};

fn inner(a: &[Cf64], b: &[Cf64]) -> Cf64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Least-squares scalar alignment: alpha minimizing ||alpha*est - truth||.
pub fn oracle_align_scalar(est: &[Cf64], truth: &[Cf64]) -> Result<(Vec<Cf64>, Cf64)> {
    if est.len() != truth.len() {
        return Err(Error::Dimension("length mismatch".into()));
    }
    let norm2: f64 = est.iter().map(|v| v.norm_sqr()).sum();
    if norm2 == 0.0 {
        return Err(Error::Estimator("zero estimate vector".into()));
    }
    let alpha = inner(est, truth) / norm2;
    Ok((est.iter().map(|&v| v * alpha).collect(), alpha))
}

/// Phase-only alignment: theta = arg<est, truth>, correction est * e^{j theta}.
pub fn oracle_align_phase(est: &[Cf64], truth: &[Cf64]) -> Result<(Vec<Cf64>, f64)> {
    if est.len() != truth.len() {
        return Err(Error::Dimension("length mismatch".into()));
    }
    let ip = inner(est, truth);
    if ip.norm() == 0.0 && est.iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(Error::Estimator("zero estimate vector".into()));
    }
    let theta = ip.arg();
    let rot = Cf64::new(theta.cos(), theta.sin());
    Ok((est.iter().map(|&v| v * rot).collect(), theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn resid(a: &[Cf64], b: &[Cf64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn exact_scalar_multiple() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth: Vec<Cf64> = (0..8).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let est: Vec<Cf64> = truth.iter().map(|&v| v * Cf64::new(0.0, 2.0)).collect();
        let (aligned, alpha) = oracle_align_scalar(&est, &truth).unwrap();
        assert!((alpha - Cf64::new(0.0, -0.5)).norm() < 1e-12);
        assert!(resid(&aligned, &truth) < 1e-12);
    }

    #[test]
    fn exact_phase_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let truth: Vec<Cf64> = (0..8).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let rot = Cf64::new(1.1f64.cos(), 1.1f64.sin());
        let est: Vec<Cf64> = truth.iter().map(|&v| v * rot).collect();
        let (aligned, theta) = oracle_align_phase(&est, &truth).unwrap();
        assert!((theta + 1.1).abs() < 1e-12);
        assert!(resid(&aligned, &truth) < 1e-12);
    }

    #[test]
    fn scalar_alignment_is_optimal() {
        // Grid-search oracle: no alpha on a grid beats the closed form.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth: Vec<Cf64> = (0..8).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let est: Vec<Cf64> = truth
            .iter()
            .map(|&v| v + complex_gaussian(&mut rng, 0.1))
            .collect();
        let (aligned, _) = oracle_align_scalar(&est, &truth).unwrap();
        let best = resid(&aligned, &truth);
        for i in -10i32..=10 {
            for j in -10i32..=10 {
                let alpha = Cf64::new(i as f64 * 0.2, j as f64 * 0.2);
                let cand: Vec<Cf64> = est.iter().map(|&v| v * alpha).collect();
                assert!(resid(&cand, &truth) + 1e-12 >= best);
            }
        }
    }

    #[test]
    fn zero_estimate_rejected() {
        let z = vec![Cf64::new(0.0, 0.0); 4];
        let t = vec![Cf64::new(1.0, 0.0); 4];
        assert!(oracle_align_scalar(&z, &t).is_err());
        assert!(oracle_align_phase(&z, &t).is_err());
    }
}
