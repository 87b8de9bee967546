//! Large-dimensional limits of the Frobenius functionals of `S`.
//!
//! Population spectra are discrete: a finite list of eigenvalue atoms with
//! probability masses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{frobenius_norm_sq, trace_norm_sq, trace_product, SymMatrix};
use crate::tolerance::Tolerances;

/// One atom of a discrete spectral distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub tau: f64,
    pub mass: f64,
}

/// Discrete spectral distribution `H = Σ mass·δ_tau`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSpec {
    atoms: Vec<Atom>,
}

impl SpectrumSpec {
    /// Masses must be positive and sum to one; eigenvalues must be positive.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::ArgError("spectrum needs at least one atom".into()));
        }
        for &(tau, mass) in &atoms {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(Error::ArgError(format!(
                    "spectrum eigenvalue must be positive, got {tau}"
                )));
            }
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::ArgError(format!("spectrum mass must be positive, got {mass}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > Tolerances::DEFAULT.mass_sum {
            return Err(Error::ArgError(format!("spectrum masses sum to {total}, not 1")));
        }
        Ok(Self {
            atoms: atoms.into_iter().map(|(tau, mass)| Atom { tau, mass }).collect(),
        })
    }

    /// Equal mass on each eigenvalue.
    pub fn equal_weights(taus: &[f64]) -> Result<Self> {
        let k = taus.len();
        Self::from_weights(taus, &vec![1.0; k])
    }

    /// Normalizes arbitrary positive weights into masses.
    pub fn from_weights(taus: &[f64], weights: &[f64]) -> Result<Self> {
        if taus.len() != weights.len() {
            return Err(Error::DimError {
                expected: taus.len(),
                actual: weights.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ArgError("spectrum weights must be positive".into()));
        }
        let atoms = taus
            .iter()
            .zip(weights)
            .map(|(t, w)| (*t, w / total))
            .collect::<Vec<_>>();
        // normalization can leave the sum a few ulps from one
        let sum: f64 = atoms.iter().map(|a| a.1).sum();
        if (sum - 1.0).abs() > Tolerances::DEFAULT.mass_sum {
            return Err(Error::ArgError(format!("spectrum masses sum to {sum}, not 1")));
        }
        Self::new(atoms)
    }

    pub fn point_mass(tau: f64) -> Result<Self> {
        Self::new(vec![(tau, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// `∫ τᵏ dH` for `k ∈ {1, 2}`.
pub fn spectrum_moment(h: &SpectrumSpec, k: u32) -> Result<f64> {
    if !(1..=2).contains(&k) {
        return Err(Error::ArgError(format!("only moments 1 and 2 are supported, got {k}")));
    }
    Ok(h.atoms.iter().map(|a| a.mass * a.tau.powi(k as i32)).sum())
}

/// Almost-sure limit of `(1/p)||S||²_F`: `∫τ²dH + c(∫τdH)²`.
pub fn phi_limit(h: &SpectrumSpec, c: f64) -> Result<f64> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::ArgError(format!(
            "concentration must be finite and >= 0, got {c}"
        )));
    }
    let m1 = spectrum_moment(h, 1)?;
    Ok(spectrum_moment(h, 2)? + c * m1 * m1)
}

/// Finite-`p` deterministic equivalent `(1/p)(||Σ||²_F + (c/p)(tr Σ)²)` of
/// `(1/p)||S||²_F`.
pub fn deterministic_frobenius(sigma: &SymMatrix, c: f64) -> Result<f64> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::ArgError(format!(
            "concentration must be finite and >= 0, got {c}"
        )));
    }
    let p = sigma.dim() as f64;
    Ok((frobenius_norm_sq(sigma) + c / p * trace_norm_sq(sigma)) / p)
}

/// Deterministic equivalent `(1/p) tr(ΣΘ)` of `(1/p) tr(SΘ)`.
pub fn deterministic_trace_product(sigma: &SymMatrix, theta: &SymMatrix) -> Result<f64> {
    Ok(trace_product(sigma, theta)? / sigma.dim() as f64)
}
