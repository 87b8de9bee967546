//! Monte Carlo checks of the large-dimensional limits. "Almost surely" is
//! not testable directly, so these look at means and quantiles over seeds.

mod common;

use common::*;
use shrinkcov::asymptotics::deterministic_trace_product;
use shrinkcov::simulation::{covariance_from_spectrum, gaussian_sample, sample_size, stream_rng};
use shrinkcov::{
    deterministic_frobenius, frobenius_norm_sq, phi_limit, sample_covariance, trace_product, SpectrumSpec, SymMatrix,
};

fn three_block() -> SpectrumSpec {
    SpectrumSpec::equal_weights(&[0.1, 5.0, 10.0]).unwrap()
}

#[test]
fn phi_matches_simulated_frobenius_norm() {
    let h = three_block();
    let phi = phi_limit(&h, 1.0 / 3.0).unwrap();
    let (p, n) = (300, 900);
    let sigma = covariance_from_spectrum(&h, p).unwrap();
    let values: Vec<f64> = (0..50)
        .map(|seed| {
            let y = gaussian_sample(&sigma, n, &mut stream_rng(seed, p, 1)).unwrap();
            frobenius_norm_sq(&sample_covariance(&y, false).unwrap()) / p as f64
        })
        .collect();
    let m = mean(&values);
    assert!((m - phi).abs() < 0.02 * phi, "mean {m} vs phi {phi}");
}

#[test]
fn discrete_spectrum_equals_its_limit() {
    let h = three_block();
    let sigma = covariance_from_spectrum(&h, 99).unwrap();
    let det = deterministic_frobenius(&sigma, 1.0 / 3.0).unwrap();
    assert!((det - phi_limit(&h, 1.0 / 3.0).unwrap()).abs() < 1e-10);
}

/// Median and 90% quantile over `seeds` of `|stat(S) − target|` at each p.
fn gap_quantiles<F>(grid: &[usize], seeds: u64, stat: F) -> Vec<(f64, f64)>
where
    F: Fn(&SymMatrix, &SymMatrix) -> f64,
{
    let h = three_block();
    let c = 1.0 / 3.0;
    grid.iter()
        .map(|&p| {
            let sigma = covariance_from_spectrum(&h, p).unwrap();
            let n = sample_size(p, c);
            let mut gaps: Vec<f64> = (0..seeds)
                .map(|seed| {
                    let y = gaussian_sample(&sigma, n, &mut stream_rng(seed, p, 2)).unwrap();
                    stat(&sample_covariance(&y, false).unwrap(), &sigma)
                })
                .collect();
            let med = median(&mut gaps);
            let q90 = gaps[(gaps.len() * 9) / 10];
            (med, q90)
        })
        .collect()
}

#[test]
fn frobenius_gap_shrinks_along_ray() {
    let q = gap_quantiles(&[30, 90, 270], 60, |s, sigma| {
        let p = s.dim() as f64;
        (frobenius_norm_sq(s) / p - deterministic_frobenius(sigma, 1.0 / 3.0).unwrap()).abs()
    });
    assert!(q[0].0 > q[1].0 && q[1].0 > q[2].0, "medians {q:?}");
    assert!(q[0].1 > q[1].1 && q[1].1 > q[2].1, "90% quantiles {q:?}");
}

#[test]
fn trace_functional_gap_shrinks_along_ray() {
    // Θ = diag(1, 2, 3, ...)/p² has bounded trace
    let q = gap_quantiles(&[30, 90, 270], 60, |s, sigma| {
        let p = s.dim();
        let theta = SymMatrix::from_diagonal(&(1..=p).map(|i| i as f64 / (p * p) as f64).collect::<Vec<_>>());
        let lhs = trace_product(s, &theta).unwrap() / p as f64;
        (lhs - deterministic_trace_product(sigma, &theta).unwrap()).abs()
    });
    assert!(q[0].0 > q[1].0 && q[1].0 > q[2].0, "medians {q:?}");
    assert!(q[0].1 > q[1].1 && q[1].1 > q[2].1, "90% quantiles {q:?}");
}
