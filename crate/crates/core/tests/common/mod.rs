//! Brute-force reference computations shared by the integration tests.
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use shrinkcov::{DataMatrix, SymMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense(m: &SymMatrix) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| m.row(i).to_vec()).collect()
}

/// Full `p³` product.
pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = a.len();
    let mut c = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            for k in 0..p {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn trace(a: &[Vec<f64>]) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// Random symmetric matrix with N(0,1) entries.
pub fn random_sym(p: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let mut rows = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in i..p {
            let v: f64 = rng.sample(StandardNormal);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymMatrix::from_rows(&rows).unwrap()
}

/// Random SPD matrix `A Aᵀ / p + shift·I`.
pub fn random_spd(p: usize, shift: f64, rng: &mut ChaCha8Rng) -> SymMatrix {
    let a: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut rows = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            rows[i][j] = (0..p).map(|k| a[i][k] * a[j][k]).sum::<f64>() / p as f64;
        }
        rows[i][i] += shift;
    }
    SymMatrix::from_rows(&rows).unwrap()
}

pub fn random_data(p: usize, n: usize, rng: &mut ChaCha8Rng) -> DataMatrix {
    let v: Vec<f64> = (0..p * n).map(|_| rng.sample(StandardNormal)).collect();
    DataMatrix::new(p, n, v).unwrap()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let p = a.len();
    let mut det = 1.0;
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in (col + 1)..p {
            let f = a[r][col] / a[col][col];
            for k in col..p {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    det
}

/// Roots of `det(m − λI)` by sign-change scanning over the Gershgorin
/// interval followed by bisection. Assumes simple, well separated roots.
pub fn charpoly_roots(m: &[Vec<f64>], grid: usize) -> Vec<f64> {
    let p = m.len();
    let radius = (0..p)
        .map(|i| m[i].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
        + 1.0;
    let f = |lambda: f64| {
        let mut shifted = m.to_vec();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] -= lambda;
        }
        determinant(shifted)
    };
    let mut roots = Vec::new();
    let step = 2.0 * radius / grid as f64;
    let mut lo = -radius;
    let mut flo = f(lo);
    for k in 1..=grid {
        let hi = -radius + k as f64 * step;
        let fhi = f(hi);
        if flo == 0.0 {
            roots.push(lo);
        } else if flo.signum() != fhi.signum() && fhi != 0.0 {
            let (mut a, mut b, mut fa) = (lo, hi, flo);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
        lo = hi;
        flo = fhi;
    }
    roots
}

/// `(1/n) Σ_k (y_k − ȳ)(y_k − ȳ)ᵀ` by explicit accumulation.
pub fn naive_sample_covariance(y: &DataMatrix, center: bool) -> Vec<Vec<f64>> {
    let (p, n) = (y.p(), y.n());
    let means: Vec<f64> = (0..p)
        .map(|i| {
            if center {
                (0..n).map(|k| y.get(i, k)).sum::<f64>() / n as f64
            } else {
                0.0
            }
        })
        .collect();
    let mut s = vec![vec![0.0; p]; p];
    for k in 0..n {
        for i in 0..p {
            for j in 0..p {
                s[i][j] += (y.get(i, k) - means[i]) * (y.get(j, k) - means[j]);
            }
        }
    }
    for row in s.iter_mut() {
        for v in row.iter_mut() {
            *v /= n as f64;
        }
    }
    s
}

/// `(1/p)(1/n²) Σᵢ ||yᵢyᵢᵀ − S||²_F` with explicit rank-one matrices.
pub fn naive_lw_b2(y: &DataMatrix, center: bool) -> f64 {
    let (p, n) = (y.p(), y.n());
    let s = naive_sample_covariance(y, center);
    let means: Vec<f64> = (0..p)
        .map(|i| {
            if center {
                (0..n).map(|k| y.get(i, k)).sum::<f64>() / n as f64
            } else {
                0.0
            }
        })
        .collect();
    let mut total = 0.0;
    for k in 0..n {
        let col: Vec<f64> = (0..p).map(|i| y.get(i, k) - means[i]).collect();
        for i in 0..p {
            for j in 0..p {
                let d = col[i] * col[j] - s[i][j];
                total += d * d;
            }
        }
    }
    total / (p as f64 * (n * n) as f64)
}

/// `||αS + βT − Σ||²_F` by assembling the matrix entry by entry.
pub fn explicit_loss(alpha: f64, beta: f64, s: &SymMatrix, t: &SymMatrix, sigma: &SymMatrix) -> f64 {
    let p = s.dim();
    let mut total = 0.0;
    for i in 0..p {
        for j in 0..p {
            let d = alpha * s.get(i, j) + beta * t.get(i, j) - sigma.get(i, j);
            total += d * d;
        }
    }
    total
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}
