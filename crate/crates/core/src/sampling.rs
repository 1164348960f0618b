//! Seed derivation and the structured random sampler shared by the RIP probes
//! and the benchmark ground truth.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::symcore::{project_rank_dense, SupportSet, SymMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of integers (cell index, trial index, ...).
/// Stable across platforms and releases.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn gaussian_matrix(rows: usize, cols: usize, std: f64, rng: &mut SeededRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| std * rng.sample::<f64, _>(StandardNormal))
}

/// Uniform random `s`-subset of `0..n`.
pub fn random_support(n: usize, s: usize, rng: &mut SeededRng) -> SupportSet {
    let picked = index::sample(rng, n, s).into_vec();
    SupportSet::from_unsorted(picked, n)
}

/// Unit-Frobenius member of `Sigma_(s)^[r]`: uniform support, symmetrized
/// Gaussian block projected to rank `r`, then normalized. Returns the matrix
/// and its support.
pub fn sample_structured(
    n: usize,
    s: usize,
    r: usize,
    rng: &mut SeededRng,
) -> Result<(SymMatrix, SupportSet)> {
    if s == 0 || s > n || r == 0 {
        return Err(Error::Parameter(format!(
            "structured sample needs 1 <= s <= n and r >= 1 (n={n}, s={s}, r={r})"
        )));
    }
    let support = random_support(n, s, rng);
    let g = gaussian_matrix(s, s, 1.0, rng);
    let block = SymMatrix::symmetrize(g).into_matrix();
    let block = project_rank_dense(&block, r)?;
    let norm = block.norm();
    if norm == 0.0 {
        return Err(Error::Numerical("degenerate structured sample".into()));
    }
    Ok((SymMatrix::embed(&(block / norm), &support), support))
}
