//! Dense symmetric matrices, observation matrices and the trace functionals
//! the shrinkage estimators are built from.
//!
//! Storage is full row-major `p × p`; the target scale is a few thousand
//! variables at most. Eigenvalues come from Householder tridiagonalization
//! followed by implicit-shift QL iterations.

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Dense symmetric real matrix.
///
/// Construction symmetrizes the input as `(M + Mᵀ)/2` after checking that
/// the asymmetry is within tolerance, so `m[i][j] == m[j][i]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_row_major_with(dim, data, &Tolerances::DEFAULT)
    }

    pub fn from_row_major_with(dim: usize, mut data: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ArgError("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimError {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::ArgError(format!(
                "non-finite entry at ({}, {})",
                pos / dim,
                pos % dim
            )));
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut asym = 0.0_f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                asym = asym.max((data[i * dim + j] - data[j * dim + i]).abs());
            }
        }
        if asym > tol.symmetry_rel * scale {
            return Err(Error::ArgError(format!(
                "matrix is not symmetric: max asymmetry {asym:e} exceeds {:e}",
                tol.symmetry_rel * scale
            )));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimError {
                expected: dim,
                actual: bad.len(),
            });
        }
        Self::from_row_major(dim, rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        Self::from_diagonal(&vec![value; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Diagonal matrix with the given diagonal.
    ///
    /// Panics on an empty or non-finite diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "matrix dimension must be positive");
        assert!(diag.iter().all(|v| v.is_finite()), "non-finite diagonal");
        let dim = diag.len();
        let mut data = vec![0.0; dim * dim];
        for (i, v) in diag.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        Self { dim, data }
    }

    /// Trusted constructor for internal callers that produce exactly
    /// symmetric, finite data.
    pub(crate) fn from_symmetric_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, k: f64) -> SymMatrix {
        Self::from_symmetric_unchecked(self.dim, self.data.iter().map(|v| k * v).collect())
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &SymMatrix, b: f64) -> Result<SymMatrix> {
        check_dims(self, other)?;
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(Self::from_symmetric_unchecked(self.dim, data))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.linear_combination(1.0, other, -1.0)
    }
}

fn check_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimError {
            expected: a.dim,
            actual: b.dim,
        });
    }
    Ok(())
}

/// Observation matrix with variables in rows and samples in columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    p: usize,
    n: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// `values` is row-major `p × n`: row `i` holds the `n` observations of
    /// variable `i`.
    pub fn new(p: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 || n == 0 {
            return Err(Error::ArgError(format!(
                "data matrix needs p >= 1 and n >= 1, got {p} x {n}"
            )));
        }
        if values.len() != p * n {
            return Err(Error::DimError {
                expected: p * n,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ArgError("data matrix contains non-finite values".into()));
        }
        Ok(Self { p, n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimError {
                expected: n,
                actual: bad.len(),
            });
        }
        Self::new(p, n, rows.concat())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.p).map(|i| self.get(i, k)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn scale(&self, k: f64) -> DataMatrix {
        DataMatrix {
            p: self.p,
            n: self.n,
            values: self.values.iter().map(|v| k * v).collect(),
        }
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenList {
    values: Vec<f64>,
}

impl EigenList {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// `tr(m²) = Σᵢⱼ m[i][j]²`.
pub fn frobenius_norm_sq(m: &SymMatrix) -> f64 {
    m.data.iter().map(|v| v * v).sum()
}

/// `(tr m)²`.
pub fn trace_norm_sq(m: &SymMatrix) -> f64 {
    let t = m.trace();
    t * t
}

/// `tr(a·b)`, computed as the element-wise inner product since both are
/// symmetric.
pub fn trace_product(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

pub fn sym_eigenvalues(m: &SymMatrix) -> Result<EigenList> {
    sym_eigenvalues_with(m, &Tolerances::DEFAULT)
}

pub fn sym_eigenvalues_with(m: &SymMatrix, tol: &Tolerances) -> Result<EigenList> {
    let (mut values, _) = decompose(m, false, tol)?;
    values.sort_by(f64::total_cmp);
    Ok(EigenList { values })
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    let ev = sym_eigenvalues(m)?;
    Ok(ev.min().abs().max(ev.max().abs()))
}

/// True when every eigenvalue exceeds `spd_rel · spectral_norm`.
pub fn is_spd(m: &SymMatrix, tol: &Tolerances) -> Result<bool> {
    if m.is_diagonal() {
        let d = m.diagonal();
        let norm = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        return Ok(norm > 0.0 && d.iter().all(|v| *v > tol.spd_rel * norm));
    }
    let ev = sym_eigenvalues_with(m, tol)?;
    let norm = ev.min().abs().max(ev.max().abs());
    Ok(norm > 0.0 && ev.min() > tol.spd_rel * norm)
}

/// Symmetric square root `V diag(√λ) Vᵀ` of an SPD matrix.
pub fn spd_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let tol = Tolerances::DEFAULT;
    if !is_spd(m, &tol)? {
        return Err(Error::ArgError("matrix is not symmetric positive definite".into()));
    }
    let p = m.dim;
    if m.is_diagonal() {
        let d: Vec<f64> = m.diagonal().iter().map(|v| v.sqrt()).collect();
        return Ok(SymMatrix::from_diagonal(&d));
    }
    let (values, vectors) = decompose(m, true, &tol)?;
    let root: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut data = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let s: f64 = (0..p).map(|k| vectors[i * p + k] * root[k] * vectors[j * p + k]).sum();
            data[i * p + j] = s;
            data[j * p + i] = s;
        }
    }
    Ok(SymMatrix::from_symmetric_unchecked(p, data))
}

/// Householder tridiagonalization + QL with implicit shifts (EISPACK
/// tred2/tql2). Returns unsorted eigenvalues and, when requested, the
/// row-major eigenvector matrix whose column `k` pairs with value `k`.
fn decompose(m: &SymMatrix, want_vectors: bool, tol: &Tolerances) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = m.dim;
    let mut v = m.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        return Ok((vec![v[0]], vec![1.0]));
    }
    tridiagonalize(n, &mut v, &mut d, &mut e);
    ql_implicit(n, &mut v, &mut d, &mut e, want_vectors, tol.max_ql_iterations)?;
    Ok((d, v))
}

fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // accumulate transformations
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn ql_implicit(
    n: usize,
    v: &mut [f64],
    d: &mut [f64],
    e: &mut [f64],
    want_vectors: bool,
    max_iter: usize,
) -> Result<()> {
    let at = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NumericalError(format!(
                        "QL iteration did not converge for eigenvalue {l} after {max_iter} iterations"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for k in 0..n {
                            h = v[at(k, i + 1)];
                            v[at(k, i + 1)] = s * v[at(k, i)] + c * h;
                            v[at(k, i)] = c * v[at(k, i)] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
