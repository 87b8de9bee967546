#![allow(clippy::needless_range_loop)]

mod common;

use approx::assert_relative_eq;
use common::*;
use proptest::prelude::*;
use shrinkcov::{frobenius_norm_sq, sym_eigenvalues, trace_norm_sq, trace_product, SymMatrix};

#[test]
fn trace_product_matches_full_multiply() {
    let mut r = rng(11);
    for p in [1, 2, 4, 7] {
        let a = random_sym(p, &mut r);
        let b = random_sym(p, &mut r);
        let explicit = trace(&matmul(&dense(&a), &dense(&b)));
        assert_relative_eq!(
            trace_product(&a, &b).unwrap(),
            explicit,
            epsilon = 1e-12,
            max_relative = 1e-12
        );
    }
}

#[test]
fn eigenvalues_match_characteristic_roots() {
    let mut r = rng(5);
    for _ in 0..5 {
        let m = random_spd(5, 0.5, &mut r);
        let ours = sym_eigenvalues(&m).unwrap();
        let roots = charpoly_roots(&dense(&m), 4000);
        assert_eq!(roots.len(), 5, "bisection found {roots:?}");
        for (a, b) in ours.values().iter().zip(&roots) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9, max_relative = 1e-9);
        }
    }
}

#[test]
fn eigenvalues_of_larger_matrix_match_characteristic_roots() {
    // distinct diagonal plus a small perturbation keeps the roots separated
    let mut r = rng(8);
    let p = 8;
    let noise = random_sym(p, &mut r);
    let rows: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| 0.05 * noise.get(i, j) + if i == j { 1.0 + i as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    let m = SymMatrix::from_rows(&rows).unwrap();
    let ours = sym_eigenvalues(&m).unwrap();
    let roots = charpoly_roots(&rows, 8000);
    assert_eq!(roots.len(), p);
    for (a, b) in ours.values().iter().zip(&roots) {
        assert_relative_eq!(*a, *b, epsilon = 1e-9);
    }
}

fn sym_strategy(max_p: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_p).prop_flat_map(|p| {
        prop::collection::vec(-10.0..10.0f64, p * (p + 1) / 2).prop_map(move |upper| {
            let mut rows = vec![vec![0.0; p]; p];
            let mut k = 0;
            for i in 0..p {
                for j in i..p {
                    rows[i][j] = upper[k];
                    rows[j][i] = upper[k];
                    k += 1;
                }
            }
            SymMatrix::from_rows(&rows).unwrap()
        })
    })
}

fn sym_pair(max_p: usize) -> impl Strategy<Value = (SymMatrix, SymMatrix)> {
    (1..=max_p).prop_flat_map(|p| (sym_strategy_fixed(p), sym_strategy_fixed(p)))
}

fn sym_strategy_fixed(p: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-10.0..10.0f64, p * p).prop_map(move |v| {
        let rows: Vec<Vec<f64>> = (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| if i <= j { v[i * p + j] } else { v[j * p + i] })
                    .collect()
            })
            .collect();
        SymMatrix::from_rows(&rows).unwrap()
    })
}

proptest! {
    #[test]
    fn trace_with_identity_is_trace(m in sym_strategy(9)) {
        let t = trace_product(&m, &SymMatrix::identity(m.dim())).unwrap();
        prop_assert!((t - m.trace()).abs() <= 1e-12 * (1.0 + m.trace().abs()));
    }

    #[test]
    fn frobenius_is_self_trace_product(m in sym_strategy(9)) {
        let f = frobenius_norm_sq(&m);
        prop_assert!((f - trace_product(&m, &m).unwrap()).abs() <= 1e-12 * (1.0 + f));
        prop_assert!((trace_norm_sq(&m) - m.trace() * m.trace()).abs() <= 1e-12 * (1.0 + f));
    }

    #[test]
    fn cauchy_schwarz((a, b) in sym_pair(8)) {
        let tp = trace_product(&a, &b).unwrap();
        let bound = frobenius_norm_sq(&a) * frobenius_norm_sq(&b);
        prop_assert!(tp * tp <= bound * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn eigenvalue_power_sums(m in sym_strategy(10)) {
        let ev = sym_eigenvalues(&m).unwrap();
        let s1: f64 = ev.values().iter().sum();
        let s2: f64 = ev.values().iter().map(|v| v * v).sum();
        let f = frobenius_norm_sq(&m);
        prop_assert!((s1 - m.trace()).abs() <= 1e-9 * (1.0 + f.sqrt()));
        prop_assert!((s2 - f).abs() <= 1e-9 * (1.0 + f));
        prop_assert!(ev.values().windows(2).all(|w| w[0] <= w[1]));
    }
}
