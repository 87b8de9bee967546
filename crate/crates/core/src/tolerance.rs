//! Numerical thresholds shared by the whole crate.

/// Tolerance constants. Everything that compares against a threshold reads
/// it from here, so tests can tighten or loosen a single record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum asymmetry `|m[i][j] - m[j][i]|` accepted by constructors,
    /// relative to the largest absolute entry.
    pub symmetry_rel: f64,
    /// Relative threshold for the Hessian determinant
    /// `||S||_F^2 ||T||_F^2 - tr(S T)^2`, scaled by `||S||_F^2 ||T||_F^2`.
    pub degeneracy_rel: f64,
    /// Smallest eigenvalue of an SPD matrix, relative to its spectral norm.
    pub spd_rel: f64,
    /// QL iterations allowed per eigenvalue before giving up.
    pub max_ql_iterations: usize,
    /// Masses of a spectrum must sum to one within this.
    pub mass_sum: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        symmetry_rel: 1e-8,
        degeneracy_rel: 1e-12,
        spd_rel: 1e-10,
        max_ql_iterations: 30,
        mass_sum: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
