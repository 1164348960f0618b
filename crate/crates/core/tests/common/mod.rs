//! Test-side oracles, written against nalgebra/rand/itertools directly so
//! they share no code with the operators they check.

#![allow(dead_code)]

use std::io::Write;

use bisparse::SymMatrix;
use itertools::Itertools;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `(G + G^T) / 2` for a standard Gaussian `G`.
pub fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let g = gaussian(n, n, rng);
    SymMatrix::new((&g + g.transpose()) * 0.5).unwrap()
}

/// `sum_k g_k g_k^T` with `r` Gaussian vectors: positive semidefinite of rank `r`.
pub fn random_psd(n: usize, r: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let g = gaussian(n, r, rng);
    SymMatrix::new(&g * g.transpose()).unwrap()
}

/// Best rank-`r` approximation by a full eigendecomposition.
pub fn rank_r(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].abs().total_cmp(&e.eigenvalues[a].abs()));
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for &k in order.iter().take(r) {
        let u = e.eigenvectors.column(k);
        out += e.eigenvalues[k] * u * u.transpose();
    }
    out
}

/// `M` restricted to `S x S`, kept at full size.
pub fn on_support(m: &SymMatrix, s: &[usize]) -> DMatrix<f64> {
    let a = m.as_matrix();
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        if s.contains(&i) && s.contains(&j) {
            a[(i, j)]
        } else {
            0.0
        }
    })
}

/// `||M_{S x S}||_F^2` as a sequential row-major sum. For nested index sets
/// the smaller sum is a subsequence of the larger, so rounding cannot flip
/// an inequality between them.
pub fn block_energy(m: &SymMatrix, s: &[usize]) -> f64 {
    s.iter()
        .flat_map(|&i| s.iter().map(move |&j| (i, j)))
        .map(|(i, j)| m.get(i, j).powi(2))
        .sum()
}

/// `max_{|S| = s} ||M_{S x S}||_F^2` by enumeration.
pub fn max_block_energy(m: &SymMatrix, s: usize) -> f64 {
    (0..m.dim())
        .combinations(s)
        .map(|c| block_energy(m, &c))
        .fold(0.0, f64::max)
}

/// `max_{|S| = s} ||P^[r](M_{S x S})||_F^2` by enumeration.
pub fn max_joint_energy(m: &SymMatrix, s: usize, r: usize) -> f64 {
    (0..m.dim())
        .combinations(s)
        .map(|c| rank_r(&on_support(m, &c), r).norm_squared())
        .fold(0.0, f64::max)
}

/// `min_{|S| = s} ||M - P^[r](M_{S x S})||_F` by enumeration.
pub fn min_joint_residual(m: &SymMatrix, s: usize, r: usize) -> f64 {
    (0..m.dim())
        .combinations(s)
        .map(|c| (m.as_matrix() - rank_r(&on_support(m, &c), r)).norm())
        .fold(f64::INFINITY, f64::min)
}

/// `min_{|S| = s} ||M - M_{S x S}||_F` by enumeration.
pub fn min_bisparse_residual(m: &SymMatrix, s: usize) -> f64 {
    (0..m.dim())
        .combinations(s)
        .map(|c| (m.as_matrix() - on_support(m, &c)).norm())
        .fold(f64::INFINITY, f64::min)
}

/// A unit-Frobenius member of `Sigma_(s)^[r]`: uniform support, Gaussian
/// symmetric block truncated to rank `r`.
pub fn structured(n: usize, s: usize, r: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let support = rand::seq::index::sample(rng, n, s).into_vec();
    let g = gaussian(s, s, rng);
    let block = rank_r(&((&g + g.transpose()) * 0.5), r);
    let block = &block / block.norm();
    let mut x = DMatrix::zeros(n, n);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            x[(i, j)] = block[(a, b)];
        }
    }
    SymMatrix::new(x).unwrap()
}

pub fn rel_error(estimate: &SymMatrix, x: &SymMatrix) -> f64 {
    (estimate.as_matrix() - x.as_matrix()).norm() / x.as_matrix().norm()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Writes one verdict line to the process stdout, bypassing libtest's
/// capture so the line shows up in plain `cargo test` output.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[acceptance] criterion {id:>2} {verdict}: {name} ({detail})\n");
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
}
