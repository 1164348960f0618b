//! Exact, tail and head projections for bisparse and jointly low-rank
//! bisparse symmetric matrices, plus the hierarchical `(s, t)` projection.
//!
//! Naming follows the structure sets used throughout the crate:
//! `Sigma_(s)` is the set of matrices supported on some `S x S` with `|S| = s`,
//! `Sigma^[r]` the matrices of rank at most `r`, and `Sigma_(s)^[r]` their
//! intersection.
//!
//! * A *tail* projection `T` satisfies `||M - T(M)|| <= C_T ||M - P(M)||`.
//! * A *head* projection `H` satisfies `||H(M)|| >= c_H ||P(M)||`, where `P` is
//!   the exact projection onto the structure set. Heads may land in a larger
//!   set (e.g. `Sigma_(s^2)`).
//!
//! | operator              | structure       | lands in          | constant          |
//! |-----------------------|-----------------|-------------------|-------------------|
//! | [`exact_project`]     | `Sigma_(s)^[r]` | `Sigma_(s)^[r]`   | exact (enumeration) |
//! | [`tail_bisparse`]     | `Sigma_(s)`     | `Sigma_(s)`       | `C_T = sqrt(2)`   |
//! | [`tail_joint`]        | `Sigma_(s)^[r]` | `Sigma_(s)^[r]`   | `C_T = 1 + 2 sqrt(2)` |
//! | [`head_square`]       | `Sigma_(s)`     | `Sigma_(s^2)`     | `c_H = 1`         |
//! | [`head_rowcol`]       | `Sigma_(s)`     | `Sigma_(2s)`      | `c_H = sqrt(s/n)` |
//! | [`head_anchor`]       | `Sigma_(s)`     | `Sigma_(s)`       | `c_H = 1/sqrt(s)` |
//! | [`head_psd_lowrank`]  | `Sigma_(s)` (PSD rank r) | `Sigma_(rs)` | `c_H = 1/sqrt(r)` |
//! | [`head_joint`]        | `Sigma_(s)^[r]` | `Sigma_(s)^[r]`   | `c_H = sqrt(r)/s` |
//! | [`head_square_variant`] | `Sigma_(s)^[r]` | `Sigma_(s^2)^[r]` | `c_H = sqrt(r)/s` |
//!
//! All argmax/argmin selections break ties towards lower indices, so every
//! operator is deterministic.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::combin::{binomial, subsets};
use crate::error::{Error, Result};
use crate::symcore::{
    eigen, project_rank, project_rank_dense, top_rank_energy, SupportSet, SymMatrix,
};

/// Maximum number of supports [`exact_project`] will enumerate by default.
pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;

/// Relative tolerance on the smallest eigenvalue accepted as PSD.
pub const PSD_TOL: f64 = 1e-8;

/// Eigenvalues below this fraction of the largest are treated as zero when
/// inferring the rank of a PSD input.
pub const RANK_TOL: f64 = 1e-10;

const PAR_THRESHOLD: usize = 2048;

/// Result of a projection: the matrix, the index set carrying it, the rank
/// bound that was applied and the objective (output norm for exact/head
/// operators, residual `||M - output||_F` for tail operators).
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionOutcome {
    pub matrix: SymMatrix,
    pub support: SupportSet,
    pub rank_used: usize,
    pub objective: f64,
}

impl ProjectionOutcome {
    fn head(matrix: SymMatrix, support: SupportSet, rank_used: usize) -> Self {
        let objective = matrix.frob_norm();
        Self {
            matrix,
            support,
            rank_used,
            objective,
        }
    }

    fn tail(m: &SymMatrix, matrix: SymMatrix, support: SupportSet, rank_used: usize) -> Self {
        let objective = (m - &matrix).frob_norm();
        Self {
            matrix,
            support,
            rank_used,
            objective,
        }
    }
}

fn check_sparsity(s: usize, n: usize) -> Result<()> {
    if s == 0 || s > n {
        return Err(Error::Parameter(format!(
            "sparsity must satisfy 1 <= s <= n (s = {s}, n = {n})"
        )));
    }
    Ok(())
}

fn check_rank(r: usize, s: usize) -> Result<()> {
    if r == 0 || r > s {
        return Err(Error::Parameter(format!(
            "rank must satisfy 1 <= r <= s (r = {r}, s = {s})"
        )));
    }
    Ok(())
}

/// Positions of the `k` largest values, ties to the lower position, returned
/// in increasing position order.
pub(crate) fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Keeps `M` on `S x S`.
fn block_on(m: &SymMatrix, s: &SupportSet) -> SymMatrix {
    SymMatrix::embed(&m.submatrix(s), s)
}

/// Exact projection onto `Sigma_(s)^[r]` by enumerating every support of size `s`.
pub fn exact_project(m: &SymMatrix, s: usize, r: usize) -> Result<ProjectionOutcome> {
    exact_project_with_cap(m, s, r, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_project_with_cap(
    m: &SymMatrix,
    s: usize,
    r: usize,
    cap: u128,
) -> Result<ProjectionOutcome> {
    let n = m.dim();
    check_sparsity(s, n)?;
    check_rank(r, s)?;
    let count = binomial(n, s);
    if count > cap {
        return Err(Error::CapExceeded {
            count,
            cap,
            hint: "use tail_joint for a practical near-best projection".into(),
        });
    }
    let candidates = subsets(n, s);
    let energy = |set: &SupportSet| top_rank_energy(&m.submatrix(set), r);
    let energies: Vec<f64> = if candidates.len() >= PAR_THRESHOLD {
        candidates.par_iter().map(energy).collect::<Result<_>>()?
    } else {
        candidates.iter().map(energy).collect::<Result<_>>()?
    };
    let mut best = 0;
    for (k, &e) in energies.iter().enumerate() {
        if e > energies[best] {
            best = k;
        }
    }
    let support = candidates[best].clone();
    let block = project_rank_dense(&m.submatrix(&support), r)?;
    let matrix = SymMatrix::embed(&block, &support);
    Ok(ProjectionOutcome::head(matrix, support, r))
}

/// Keeps the `s` columns of largest Euclidean norm on their bisupport.
/// Tail projection for `Sigma_(s)` with constant `sqrt(2)`.
pub fn tail_bisparse(m: &SymMatrix, s: usize) -> Result<ProjectionOutcome> {
    let n = m.dim();
    check_sparsity(s, n)?;
    let norms: Vec<f64> = (0..n)
        .map(|j| m.as_matrix().column(j).norm_squared())
        .collect();
    let support = SupportSet::from_sorted_unchecked(top_k(&norms, s), n);
    let matrix = block_on(m, &support);
    Ok(ProjectionOutcome::tail(m, matrix, support, s))
}

/// Rank truncation of [`tail_bisparse`]: tail projection for `Sigma_(s)^[r]`
/// with constant `1 + 2 sqrt(2)`.
pub fn tail_joint(m: &SymMatrix, s: usize, r: usize) -> Result<ProjectionOutcome> {
    check_rank(r, s)?;
    let bis = tail_bisparse(m, s)?;
    let matrix = project_rank(&bis.matrix, r)?;
    Ok(ProjectionOutcome::tail(m, matrix, bis.support, r))
}

/// For every row `i`, the `s - 1` off-diagonal positions of largest magnitude
/// and the resulting squared row energy `|M_ii|^2 + sum_{j in C_i} M_ij^2`.
fn best_row_completions(m: &SymMatrix, s: usize) -> (Vec<Vec<usize>>, Vec<f64>) {
    let n = m.dim();
    let mut completions = Vec::with_capacity(n);
    let mut energies = Vec::with_capacity(n);
    for i in 0..n {
        let off: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mags: Vec<f64> = off.iter().map(|&j| m.get(i, j).abs()).collect();
        let chosen: Vec<usize> = top_k(&mags, s - 1).into_iter().map(|k| off[k]).collect();
        let e = m.get(i, i).powi(2) + chosen.iter().map(|&j| m.get(i, j).powi(2)).sum::<f64>();
        completions.push(chosen);
        energies.push(e);
    }
    (completions, energies)
}

/// Head projection for `Sigma_(s)` into `Sigma_(s^2)` with `c_H = 1`.
///
/// Each row picks its best `s - 1` partners; the `s` rows with the largest
/// completed energy, together with their partners, form `S'` with
/// `|S'| <= s^2`.
pub fn head_square(m: &SymMatrix, s: usize) -> Result<ProjectionOutcome> {
    let n = m.dim();
    check_sparsity(s, n)?;
    let (completions, energies) = best_row_completions(m, s);
    let rows = top_k(&energies, s);
    let mut idx = rows.clone();
    for &i in &rows {
        idx.extend_from_slice(&completions[i]);
    }
    let support = SupportSet::from_unsorted(idx, n);
    let matrix = block_on(m, &support);
    let rank = support.len();
    Ok(ProjectionOutcome::head(matrix, support, rank))
}

/// Head projection for `Sigma_(s)` into `Sigma_(2s)` with `c_H = sqrt(s/n)`:
/// the `s` heaviest rows, then the `s` heaviest columns within those rows.
pub fn head_rowcol(m: &SymMatrix, s: usize) -> Result<ProjectionOutcome> {
    let n = m.dim();
    check_sparsity(s, n)?;
    let a = m.as_matrix();
    let row_energy: Vec<f64> = (0..n).map(|i| a.row(i).norm_squared()).collect();
    let rows = top_k(&row_energy, s);
    let col_energy: Vec<f64> = (0..n)
        .map(|j| rows.iter().map(|&i| a[(i, j)].powi(2)).sum())
        .collect();
    let cols = top_k(&col_energy, s);
    let mut idx = rows;
    idx.extend(cols);
    let support = SupportSet::from_unsorted(idx, n);
    let matrix = block_on(m, &support);
    let rank = support.len();
    Ok(ProjectionOutcome::head(matrix, support, rank))
}

/// Head projection for `Sigma_(s)` with `c_H = 1/sqrt(s)`.
///
/// For each column `j` the best size-`s` set containing `j` is `j` plus the
/// `s - 1` largest off-diagonal magnitudes; the column whose set captures the
/// most energy wins.
pub fn head_anchor(m: &SymMatrix, s: usize) -> Result<ProjectionOutcome> {
    let n = m.dim();
    check_sparsity(s, n)?;
    // symmetric: column j completions equal row j completions
    let (completions, energies) = best_row_completions(m, s);
    let anchor = top_k(&energies, 1)[0];
    let mut idx = completions[anchor].clone();
    idx.push(anchor);
    let support = SupportSet::from_unsorted(idx, n);
    let matrix = block_on(m, &support);
    Ok(ProjectionOutcome::head(matrix, support, s))
}

/// Head projection for `Sigma_(s)` into `Sigma_(rs)` with `c_H = 1/sqrt(r)`,
/// valid for positive semidefinite inputs of rank `r`.
///
/// `M = sum_k v_k v_k^T` with `v_k = sqrt(lambda_k) u_k`; `S_k` holds the `s`
/// largest entries of `|v_k|` and the output lives on the union of the `S_k`.
/// The rank is inferred from the spectrum unless `rank_override` is given.
pub fn head_psd_lowrank(
    m: &SymMatrix,
    s: usize,
    rank_override: Option<usize>,
) -> Result<ProjectionOutcome> {
    let n = m.dim();
    check_sparsity(s, n)?;
    let e = eigen(m)?;
    let scale = m.frob_norm();
    let min_eig = e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if n > 0 && min_eig < -PSD_TOL * scale {
        return Err(Error::Domain(format!(
            "matrix is not positive semidefinite (min eigenvalue {min_eig:e})"
        )));
    }
    let top = e.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let inferred = e
        .eigenvalues
        .iter()
        .filter(|&&v| v > RANK_TOL * top && top > 0.0)
        .count();
    let rank = rank_override.unwrap_or(inferred).min(n);
    // descending |lambda| with PSD input puts the positive eigenvalues first
    let mut idx = Vec::with_capacity(rank * s);
    for k in 0..rank {
        let lam = e.eigenvalues[k].max(0.0);
        let v: Vec<f64> = e
            .eigenvectors
            .column(k)
            .iter()
            .map(|x| (lam.sqrt() * x).abs())
            .collect();
        idx.extend(top_k(&v, s));
    }
    let support = SupportSet::from_unsorted(idx, n);
    let matrix = block_on(m, &support);
    Ok(ProjectionOutcome::head(matrix, support, rank))
}

/// `P^[r]` applied to [`head_anchor`]: head projection for `Sigma_(s)^[r]`
/// with `c_H = sqrt(r)/s`.
pub fn head_joint(m: &SymMatrix, s: usize, r: usize) -> Result<ProjectionOutcome> {
    check_rank(r, s)?;
    let h = head_anchor(m, s)?;
    let matrix = project_rank(&h.matrix, r)?;
    Ok(ProjectionOutcome::head(matrix, h.support, r))
}

/// `P^[r]` applied to [`head_square`]. Lands in `Sigma_(s^2)^[r]` and keeps
/// at least `r/s^2` of the best achievable squared energy.
pub fn head_square_variant(m: &SymMatrix, s: usize, r: usize) -> Result<ProjectionOutcome> {
    if r == 0 {
        return Err(Error::Parameter("rank must be at least 1".into()));
    }
    let h = head_square(m, s)?;
    let matrix = project_rank(&h.matrix, r)?;
    let rank = r.min(h.support.len());
    Ok(ProjectionOutcome::head(matrix, h.support, rank))
}

/// Outcome of [`head_shrink`]: `M` on `T x T` with `T = R u C`, and the row and
/// column halves. `outcome.objective` is `||M_{R x C}||_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkOutcome {
    pub outcome: ProjectionOutcome,
    pub rows: SupportSet,
    pub cols: SupportSet,
}

/// Shrinks a large index set `S'` down to at most `s` indices by averaging:
/// `R` holds the `s/2` rows of `S'` with largest `||M_{i x S'}||`, `C` the `s/2`
/// columns of `S'` with largest `||M_{R x j}||`. Guarantees
/// `||M_{R x C}||_F^2 >= ||M_{S' x S'}||_F^2 / (4 c^2)` with `c = |S'|/s`.
pub fn head_shrink(m: &SymMatrix, sprime: &SupportSet, s: usize) -> Result<ShrinkOutcome> {
    let n = m.dim();
    check_sparsity(s, n)?;
    if !s.is_multiple_of(2) {
        return Err(Error::Parameter(format!("head_shrink needs an even s, got {s}")));
    }
    if sprime.len() < s || sprime.ambient() != n {
        return Err(Error::Parameter(format!(
            "S' must have at least s = {s} indices in dimension {n} (got {})",
            sprime.len()
        )));
    }
    let half = s / 2;
    let members = sprime.indices();
    let row_energy: Vec<f64> = members.iter().map(|&i| m.row_norm_sq_on(i, sprime)).collect();
    let rows: Vec<usize> = top_k(&row_energy, half).into_iter().map(|k| members[k]).collect();
    let col_energy: Vec<f64> = members
        .iter()
        .map(|&j| rows.iter().map(|&i| m.get(i, j).powi(2)).sum())
        .collect();
    let cols: Vec<usize> = top_k(&col_energy, half).into_iter().map(|k| members[k]).collect();
    let cross: f64 = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
        .map(|(i, j)| m.get(i, j).powi(2))
        .sum();
    let rows = SupportSet::from_sorted_unchecked(rows, n);
    let cols = SupportSet::from_sorted_unchecked(cols, n);
    let support = rows.union(&cols);
    let matrix = block_on(m, &support);
    let rank = support.len();
    Ok(ShrinkOutcome {
        outcome: ProjectionOutcome {
            matrix,
            support,
            rank_used: rank,
            objective: cross.sqrt(),
        },
        rows,
        cols,
    })
}

/// Column set and, per selected column, the retained row positions of an
/// `(s, t)`-hierarchically sparse pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HierarchicalSupport {
    pub columns: Vec<usize>,
    pub rows: Vec<Vec<usize>>,
}

impl HierarchicalSupport {
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.columns
            .iter()
            .zip(&self.rows)
            .flat_map(|(&j, rows)| rows.iter().map(move |&i| (i, j)))
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Support of the best `(s, t)`-sparse approximation: the `t` largest entries
/// of every column, then the `s` columns whose kept entries have the most energy.
pub fn hierarchical_support(m: &DMatrix<f64>, s: usize, t: usize) -> Result<HierarchicalSupport> {
    let (rows, cols) = m.shape();
    if t == 0 || t > rows || s == 0 || s > cols {
        return Err(Error::Parameter(format!(
            "hierarchical sparsity needs 1 <= t <= {rows} and 1 <= s <= {cols} (s = {s}, t = {t})"
        )));
    }
    let mut per_col = Vec::with_capacity(cols);
    let mut energy = Vec::with_capacity(cols);
    for j in 0..cols {
        let mags: Vec<f64> = m.column(j).iter().map(|v| v.abs()).collect();
        let keep = top_k(&mags, t);
        energy.push(keep.iter().map(|&i| m[(i, j)].powi(2)).sum::<f64>());
        per_col.push(keep);
    }
    let columns = top_k(&energy, s);
    let rows = columns.iter().map(|&j| per_col[j].clone()).collect();
    Ok(HierarchicalSupport { columns, rows })
}

/// Best `(s, t)`-sparse approximation of an arbitrary (not necessarily
/// symmetric) matrix.
pub fn project_hierarchical(m: &DMatrix<f64>, s: usize, t: usize) -> Result<DMatrix<f64>> {
    let hs = hierarchical_support(m, s, t)?;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j) in hs.entries() {
        out[(i, j)] = m[(i, j)];
    }
    Ok(out)
}
