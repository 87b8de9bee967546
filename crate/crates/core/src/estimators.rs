//! Linear shrinkage estimators `α·S + β·Σ₀`.
//!
//! Everything here reduces to four trace functionals of the sample matrix
//! `S`, the target `Σ₀` and (for the oracle) the true covariance `Σ`:
//! `||S||²_F`, `(tr S)²`, `tr(SΣ₀)` and `||Σ₀||²_F`. The bona fide weights
//! replace the unknown `||Σ||²_F` by its bias-corrected sample counterpart,
//! which makes them fully data driven. They are not clamped to `[0, 1]`.

use serde::Serialize;

use crate::asymptotics::SpectrumSpec;
use crate::error::{Error, Result};
use crate::matrix::{frobenius_norm_sq, is_spd, trace_norm_sq, trace_product, DataMatrix, SymMatrix};
use crate::simulation::covariance_from_spectrum;
use crate::tolerance::Tolerances;

/// Which formula produced a pair of shrinkage intensities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// Uses the true covariance; only available in simulation.
    Oracle,
    /// Deterministic large-dimensional limit of the oracle.
    Asymptotic,
    /// Data-driven estimate of the oracle.
    BonaFide,
    /// Ledoit–Wolf intensity toward `(tr S / p)·I`.
    Lw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShrinkageWeights {
    /// Weight on the sample covariance.
    pub alpha: f64,
    /// Weight on the target.
    pub beta: f64,
    pub kind: WeightKind,
}

impl ShrinkageWeights {
    pub fn alpha_in_unit_interval(&self) -> bool {
        (0.0..=1.0).contains(&self.alpha)
    }
}

/// A shrinkage estimate together with the weights and target that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub matrix: SymMatrix,
    pub weights: ShrinkageWeights,
    pub target: SymMatrix,
    pub n: usize,
    /// Set when the (unconstrained) `alpha` fell outside `[0, 1]`.
    pub alpha_outside_unit: bool,
}

/// `Σ₀ = I/p`.
pub fn identity_target(p: usize) -> SymMatrix {
    SymMatrix::scaled_identity(p, 1.0 / p as f64)
}

/// Diagonal target whose eigenvalue blocks follow `h`.
pub fn spectrum_target(h: &SpectrumSpec, p: usize) -> Result<SymMatrix> {
    covariance_from_spectrum(h, p)
}

/// Sample covariance with divisor `n`, optionally after removing row means.
pub fn sample_covariance(y: &DataMatrix, center: bool) -> Result<SymMatrix> {
    let (p, n) = (y.p(), y.n());
    if center && n < 2 {
        return Err(Error::InsufficientData { required: 2, actual: n });
    }
    let rows = working_rows(y, center);
    let inv_n = 1.0 / n as f64;
    let mut data = vec![0.0; p * p];
    for i in 0..p {
        let ri = &rows[i * n..(i + 1) * n];
        for j in i..p {
            let rj = &rows[j * n..(j + 1) * n];
            let s = dot(ri, rj) * inv_n;
            data[i * p + j] = s;
            data[j * p + i] = s;
        }
    }
    Ok(SymMatrix::from_symmetric_unchecked(p, data))
}

/// Row-major copy of the data, mean-centered per variable when asked.
fn working_rows(y: &DataMatrix, center: bool) -> Vec<f64> {
    let mut rows = y.as_slice().to_vec();
    if center {
        let n = y.n();
        for row in rows.chunks_mut(n) {
            let mean = row.iter().sum::<f64>() / n as f64;
            row.iter_mut().for_each(|v| *v -= mean);
        }
    }
    rows
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `||αS + βΣ₀ − Σ||²_F`, expanded into trace functionals.
pub fn glse_loss(alpha: f64, beta: f64, s: &SymMatrix, target: &SymMatrix, sigma: &SymMatrix) -> Result<f64> {
    let s_t = trace_product(s, target)?;
    let s_sigma = trace_product(s, sigma)?;
    let sigma_t = trace_product(sigma, target)?;
    let loss =
        alpha * alpha * frobenius_norm_sq(s) + 2.0 * alpha * beta * s_t + beta * beta * frobenius_norm_sq(target)
            - 2.0 * alpha * s_sigma
            - 2.0 * beta * sigma_t
            + frobenius_norm_sq(sigma);
    Ok(loss.max(0.0))
}

fn require_spd_target(target: &SymMatrix) -> Result<()> {
    if !is_spd(target, &Tolerances::DEFAULT)? {
        return Err(Error::ArgError(
            "target matrix must be symmetric positive definite".into(),
        ));
    }
    Ok(())
}

/// Determinant of the loss Hessian, or `DegenerateTarget` when it is not
/// safely positive.
fn hessian_determinant(frob_s: f64, frob_target: f64, s_target: f64, tol: &Tolerances) -> Result<f64> {
    let scale = frob_s * frob_target;
    let det = scale - s_target * s_target;
    if !(det > tol.degeneracy_rel * scale) {
        return Err(Error::DegenerateTarget(format!(
            "Hessian determinant {det:e} is not positive relative to scale {scale:e}; \
             the sample matrix is (numerically) proportional to the target"
        )));
    }
    Ok(det)
}

/// Loss-minimizing intensities given the true covariance `sigma`.
pub fn oracle_weights(s: &SymMatrix, sigma: &SymMatrix, target: &SymMatrix) -> Result<ShrinkageWeights> {
    require_spd_target(target)?;
    let frob_s = frobenius_norm_sq(s);
    let frob_t = frobenius_norm_sq(target);
    let s_t = trace_product(s, target)?;
    let s_sigma = trace_product(s, sigma)?;
    let sigma_t = trace_product(sigma, target)?;
    let det = hessian_determinant(frob_s, frob_t, s_t, &Tolerances::DEFAULT)?;
    Ok(ShrinkageWeights {
        alpha: (s_sigma * frob_t - sigma_t * s_t) / det,
        beta: (sigma_t * frob_s - s_sigma * s_t) / det,
        kind: WeightKind::Oracle,
    })
}

/// Deterministic limit of the oracle intensities at concentration `c`.
pub fn asymptotic_oracle_weights(sigma: &SymMatrix, target: &SymMatrix, c: f64) -> Result<ShrinkageWeights> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::ArgError(format!(
            "concentration must be finite and >= 0, got {c}"
        )));
    }
    require_spd_target(target)?;
    let p = sigma.dim() as f64;
    let frob_t = frobenius_norm_sq(target);
    let sigma_t = trace_product(sigma, target)?;
    let shift = c / p * trace_norm_sq(sigma);
    let det = hessian_determinant(frobenius_norm_sq(sigma) + shift, frob_t, sigma_t, &Tolerances::DEFAULT)?;
    let alpha = 1.0 - shift * frob_t / det;
    Ok(ShrinkageWeights {
        alpha,
        beta: sigma_t / frob_t * (1.0 - alpha),
        kind: WeightKind::Asymptotic,
    })
}

/// Data-driven intensities from `S`, the target and the sample size.
pub fn bona_fide_weights(s: &SymMatrix, target: &SymMatrix, n: usize) -> Result<ShrinkageWeights> {
    if n == 0 {
        return Err(Error::ArgError("sample size must be positive".into()));
    }
    require_spd_target(target)?;
    let frob_s = frobenius_norm_sq(s);
    let frob_t = frobenius_norm_sq(target);
    let s_t = trace_product(s, target)?;
    let det = hessian_determinant(frob_s, frob_t, s_t, &Tolerances::DEFAULT)?;
    let alpha = 1.0 - trace_norm_sq(s) / n as f64 * frob_t / det;
    Ok(ShrinkageWeights {
        alpha,
        beta: s_t / frob_t * (1.0 - alpha),
        kind: WeightKind::BonaFide,
    })
}

/// `α·S + β·target` with the weights attached.
pub fn assemble(s: &SymMatrix, target: &SymMatrix, weights: ShrinkageWeights, n: usize) -> Result<EstimateResult> {
    let matrix = s.linear_combination(weights.alpha, target, weights.beta)?;
    Ok(EstimateResult {
        matrix,
        weights,
        target: target.clone(),
        n,
        alpha_outside_unit: !weights.alpha_in_unit_interval(),
    })
}

/// The bona fide optimal linear shrinkage estimator.
pub fn olse(s: &SymMatrix, target: &SymMatrix, n: usize) -> Result<EstimateResult> {
    let weights = bona_fide_weights(s, target, n)?;
    assemble(s, target, weights, n)
}

/// Bias-corrected estimate of `(1/p)||Σ||²_F`.
pub fn frobenius_estimator(s: &SymMatrix, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::ArgError("sample size must be positive".into()));
    }
    let p = s.dim() as f64;
    Ok(frobenius_norm_sq(s) / p - trace_norm_sq(s) / (n as f64 * p))
}

/// The `(d², b²)` pair behind the Ledoit–Wolf intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LwStatistics {
    pub d2: f64,
    pub b2: f64,
}

/// Dispersion `d²` of `S` around `(tr S/p)·I` and the sampling noise `b²`
/// of the rank-one terms `yᵢyᵢᵀ`.
///
/// `Σᵢ ||yᵢyᵢᵀ − S||²_F = Σᵢ ||yᵢ||⁴ − n||S||²_F` because `S` is the mean of
/// the `yᵢyᵢᵀ`, so `b²` costs `O(pn)` once `S` is known.
pub fn lw_statistics(y: &DataMatrix, s: &SymMatrix, center: bool) -> LwStatistics {
    let (p, n) = (y.p() as f64, y.n());
    let frob_s = frobenius_norm_sq(s);
    let mean_diag = s.trace() / p;
    let d2 = frob_s / p - mean_diag * mean_diag;

    let rows = working_rows(y, center);
    let mut col_norm_sq = vec![0.0; n];
    for row in rows.chunks(n) {
        for (acc, v) in col_norm_sq.iter_mut().zip(row) {
            *acc += v * v;
        }
    }
    let fourth: f64 = col_norm_sq.iter().map(|v| v * v).sum();
    let nf = n as f64;
    let b2 = ((fourth - nf * frob_s) / (p * nf * nf)).max(0.0);
    LwStatistics { d2, b2 }
}

/// Ledoit–Wolf shrinkage toward `(tr S/p)·I`.
///
/// The stored target is `I` and `beta = (1 − α)·tr S/p`. Columns are centered
/// exactly when `S` is.
pub fn lw_estimator(y: &DataMatrix, center: bool) -> Result<EstimateResult> {
    let s = sample_covariance(y, center)?;
    lw_from_sample(y, &s, center)
}

/// As [`lw_estimator`], reusing an already computed `S`.
pub fn lw_from_sample(y: &DataMatrix, s: &SymMatrix, center: bool) -> Result<EstimateResult> {
    let p = s.dim();
    let LwStatistics { d2, b2 } = lw_statistics(y, s, center);
    let scale = frobenius_norm_sq(s) / p as f64;
    if !(d2 > Tolerances::DEFAULT.degeneracy_rel * scale) {
        return Err(Error::DegenerateTarget(format!(
            "sample covariance is a multiple of the identity (d2 = {d2:e})"
        )));
    }
    let alpha = if b2 >= d2 { 0.0 } else { 1.0 - b2 / d2 };
    let mu = s.trace() / p as f64;
    let weights = ShrinkageWeights {
        alpha,
        beta: (1.0 - alpha) * mu,
        kind: WeightKind::Lw,
    };
    assemble(s, &SymMatrix::identity(p), weights, y.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> SymMatrix {
        SymMatrix::from_diagonal(v)
    }

    #[test]
    fn sample_covariance_examples() {
        let y = DataMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        assert_eq!(sample_covariance(&y, false).unwrap().get(0, 0), 1.0);
        let y = DataMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert_eq!(sample_covariance(&y, true).unwrap().get(0, 0), 0.0);
        let y = DataMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(
            sample_covariance(&y, true),
            Err(Error::InsufficientData { required: 2, actual: 1 })
        ));
        assert!(sample_covariance(&y, false).is_ok());
    }

    #[test]
    fn glse_loss_examples() {
        let s = diag(&[1.0, 2.0]);
        let t = SymMatrix::identity(2);
        assert_eq!(glse_loss(1.0, 0.0, &s, &t, &s).unwrap(), 0.0);
        assert_eq!(glse_loss(0.0, 0.0, &s, &t, &s).unwrap(), 5.0);
    }

    #[test]
    fn oracle_weights_perfect_sample() {
        let s = diag(&[1.0, 2.0]);
        let w = oracle_weights(&s, &s, &SymMatrix::identity(2)).unwrap();
        assert_abs_diff_eq!(w.alpha, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.beta, 0.0, epsilon = 1e-14);
        assert_eq!(w.kind, WeightKind::Oracle);
    }

    #[test]
    fn oracle_weights_proportional_is_degenerate() {
        let i = SymMatrix::identity(2);
        assert!(matches!(oracle_weights(&i, &i, &i), Err(Error::DegenerateTarget(_))));
    }

    #[test]
    fn target_must_be_spd() {
        let s = diag(&[1.0, 2.0]);
        let bad = diag(&[1.0, -1.0]);
        assert!(matches!(bona_fide_weights(&s, &bad, 10), Err(Error::ArgError(_))));
        assert!(matches!(oracle_weights(&s, &s, &bad), Err(Error::ArgError(_))));
    }

    #[test]
    fn asymptotic_examples() {
        let sigma = diag(&[1.0, 2.0]);
        let t = SymMatrix::identity(2);
        let w = asymptotic_oracle_weights(&sigma, &t, 0.0).unwrap();
        assert_eq!((w.alpha, w.beta), (1.0, 0.0));
        let w = asymptotic_oracle_weights(&sigma, &t, 1.0).unwrap();
        assert_abs_diff_eq!(w.alpha, 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(w.beta, 1.35, epsilon = 1e-13);
        assert!(asymptotic_oracle_weights(&sigma, &t, -1.0).is_err());
        assert!(matches!(
            asymptotic_oracle_weights(&t, &t, 0.0),
            Err(Error::DegenerateTarget(_))
        ));
    }

    #[test]
    fn bona_fide_unconstrained_example() {
        let s = diag(&[1.0, 2.0]);
        let t = SymMatrix::scaled_identity(2, 0.5);
        let w = bona_fide_weights(&s, &t, 4).unwrap();
        assert_abs_diff_eq!(w.alpha, -3.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w.beta, 13.5, epsilon = 1e-11);
        let est = olse(&s, &t, 4).unwrap();
        assert!(est.alpha_outside_unit);
        assert!(matches!(
            bona_fide_weights(&SymMatrix::identity(2), &t, 4),
            Err(Error::DegenerateTarget(_))
        ));
    }

    #[test]
    fn olse_assembly_identity() {
        let s = SymMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let t = identity_target(2);
        let w = ShrinkageWeights {
            alpha: 0.5,
            beta: 2.0,
            kind: WeightKind::BonaFide,
        };
        let est = assemble(&s, &t, w, 10).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = 0.5 * s.get(i, j) + if i == j { 2.0 / 2.0 } else { 0.0 };
                assert_abs_diff_eq!(est.matrix.get(i, j), expect, epsilon = 1e-15);
            }
        }
        assert!(!est.alpha_outside_unit);
    }

    #[test]
    fn olse_large_n_is_close_to_sample() {
        let s = diag(&[1.0, 2.0, 3.0]);
        let est = olse(&s, &identity_target(3), 10_000_000).unwrap();
        assert_abs_diff_eq!(est.weights.alpha, 1.0, epsilon = 1e-5);
        for i in 0..3 {
            assert_abs_diff_eq!(est.matrix.get(i, i), s.get(i, i), epsilon = 1e-4);
        }
    }

    #[test]
    fn frobenius_estimator_examples() {
        assert_eq!(frobenius_estimator(&SymMatrix::identity(2), 2).unwrap(), 0.0);
        assert_abs_diff_eq!(
            frobenius_estimator(&diag(&[1.0, 2.0]), 4).unwrap(),
            1.375,
            epsilon = 1e-15
        );
    }

    #[test]
    fn lw_noiseless_columns_keep_sample() {
        // y y^T == S for every column: b2 = 0
        let y = DataMatrix::from_rows(&[vec![1.0, -1.0, 1.0], vec![2.0, -2.0, 2.0]]).unwrap();
        let est = lw_estimator(&y, false).unwrap();
        let s = sample_covariance(&y, false).unwrap();
        assert_eq!(est.weights.alpha, 1.0);
        assert_eq!(est.matrix, s);
    }

    #[test]
    fn lw_full_shrinkage_when_noise_dominates() {
        let y = DataMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = sample_covariance(&y, false).unwrap();
        let stats = lw_statistics(&y, &s, false);
        assert_abs_diff_eq!(stats.d2, 0.5625, epsilon = 1e-15);
        assert_abs_diff_eq!(stats.b2, 1.0625, epsilon = 1e-15);
        let est = lw_estimator(&y, false).unwrap();
        assert_eq!(est.weights.alpha, 0.0);
        assert_eq!(est.matrix, SymMatrix::scaled_identity(2, 1.25));
    }

    #[test]
    fn lw_identity_sample_is_degenerate() {
        let y = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(lw_estimator(&y, false), Err(Error::DegenerateTarget(_))));
    }
}
