//! Dense symmetric matrices, bisupports and the exact rank-`r` projection.
//!
//! Every operator in the crate acts on [`SymMatrix`]. A [`SupportSet`] is the
//! index set `S` of a bisupport `S x S`; [`restrict`] zeroes everything outside
//! `S x S`. The rank projection keeps the `r` eigenpairs of largest absolute
//! eigenvalue, which is the Frobenius-best rank-`r` approximation of a
//! symmetric matrix and is itself symmetric.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance used when checking symmetry of externally supplied data.
pub const SYMMETRY_TOL: f64 = 1e-12;

const EIGEN_MAX_ITERS: usize = 10_000;

/// A dense real symmetric `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            data: DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }),
        }
    }

    /// Wraps a matrix that must already be symmetric (to [`SYMMETRY_TOL`] relative
    /// to its largest entry). The stored matrix is made exactly symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square_finite(&m)?;
        let scale = m.amax().max(1.0);
        let asym = asymmetry(&m);
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::Domain(format!(
                "matrix is not symmetric (max |a_ij - a_ji| = {asym:e})"
            )));
        }
        Ok(Self::symmetrize(m))
    }

    /// Builds from row-major nested slices; rows must be of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows do not form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// `(M + M^T) / 2` without validation; callers guarantee a square finite input.
    pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { data: m }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.data.norm_squared()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            data: &self.data * a,
        }
    }

    /// Euclidean norm of row `i` restricted to the columns in `cols`.
    pub fn row_norm_sq_on(&self, i: usize, cols: &SupportSet) -> f64 {
        cols.iter().map(|j| self.data[(i, j)].powi(2)).sum()
    }

    /// Indices of rows that carry at least one nonzero entry.
    pub fn nonzero_support(&self) -> SupportSet {
        let n = self.dim();
        let idx = (0..n)
            .filter(|&i| self.data.row(i).iter().any(|&v| v != 0.0))
            .collect();
        SupportSet::from_sorted_unchecked(idx, n)
    }

    /// Compact `|S| x |S|` block `M[S, S]`.
    pub fn submatrix(&self, s: &SupportSet) -> DMatrix<f64> {
        let idx = s.indices();
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.data[(idx[a], idx[b])])
    }

    /// Places a compact symmetric block back on `S x S` of an `n x n` zero matrix.
    pub fn embed(block: &DMatrix<f64>, s: &SupportSet) -> Self {
        let n = s.ambient();
        let idx = s.indices();
        let mut out = DMatrix::zeros(n, n);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(i, j)] = block[(a, b)];
            }
        }
        Self::symmetrize(out)
    }

    /// Numerical rank: eigenvalues above `rel_tol * |lambda_1|`.
    pub fn numerical_rank(&self, rel_tol: f64) -> Result<usize> {
        let e = eigen(self)?;
        let top = e.eigenvalues.first().map_or(0.0, |v| v.abs());
        if top == 0.0 {
            return Ok(0);
        }
        Ok(e
            .eigenvalues
            .iter()
            .filter(|v| v.abs() > rel_tol * top)
            .count())
    }
}

impl fmt::Display for SymMatrix {
    /// Text block: `n` followed by `n` rows of whitespace-separated values.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        writeln!(f, "{n}")?;
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{}", self.data[(i, j)])).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

/// A set of row/column indices, stored 0-based and strictly increasing.
///
/// Displayed 1-based, space separated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportSet {
    indices: Vec<usize>,
    n: usize,
}

impl SupportSet {
    /// Validates range and uniqueness; input order does not matter.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("duplicate index in support".into()));
        }
        Ok(Self { indices, n })
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>, n: usize) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.iter().all(|&i| i < n));
        Self { indices, n }
    }

    /// Sorts and deduplicates; indices must be in range.
    pub(crate) fn from_unsorted(mut indices: Vec<usize>, n: usize) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self::from_sorted_unchecked(indices, n)
    }

    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            n,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            indices: Vec::new(),
            n,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut v = self.indices.clone();
        v.extend_from_slice(&other.indices);
        Self::from_unsorted(v, self.n.max(other.n))
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Eigenpairs ordered by descending `|lambda|`; eigenvectors are columns.
#[derive(Clone, Debug)]
pub struct EigenDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomp {
    pub fn reconstruct(&self, rank: usize) -> DMatrix<f64> {
        let n = self.eigenvectors.nrows();
        let k = rank.min(self.eigenvalues.len());
        let mut out = DMatrix::zeros(n, n);
        for c in 0..k {
            let v = self.eigenvectors.column(c);
            out.ger(self.eigenvalues[c], &v, &v, 1.0);
        }
        out
    }
}

/// `(M + M^T) / 2` for any square finite matrix.
pub fn sym_enforce(m: &DMatrix<f64>) -> Result<SymMatrix> {
    check_square_finite(m)?;
    Ok(SymMatrix::symmetrize(m.clone()))
}

/// `M` on `S x S`, zero elsewhere.
pub fn restrict(m: &SymMatrix, s: &SupportSet) -> Result<SymMatrix> {
    if s.ambient() != m.dim() {
        return Err(Error::Dimension(format!(
            "support ambient dimension {} vs matrix dimension {}",
            s.ambient(),
            m.dim()
        )));
    }
    let n = m.dim();
    let mut mask = vec![false; n];
    for i in s.iter() {
        mask[i] = true;
    }
    let data = DMatrix::from_fn(n, n, |i, j| {
        if mask[i] && mask[j] {
            m.data[(i, j)]
        } else {
            0.0
        }
    });
    Ok(SymMatrix { data })
}

/// Symmetric eigendecomposition with deterministic ordering and sign.
pub fn eigen(m: &SymMatrix) -> Result<EigenDecomp> {
    eigen_dense(m.as_matrix())
}

pub(crate) fn eigen_dense(m: &DMatrix<f64>) -> Result<EigenDecomp> {
    let n = m.nrows();
    if n == 0 {
        return Ok(EigenDecomp {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let se = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITERS).ok_or_else(
        || Error::Numerical(format!("symmetric eigensolver did not converge (n = {n})")),
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal magnitudes keep solver order
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .abs()
            .partial_cmp(&se.eigenvalues[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        let mut v = se.eigenvectors.column(k).clone_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-14) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        eigenvectors.set_column(c, &v);
    }
    Ok(EigenDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// Best rank-`r` approximation of a compact symmetric block, returned exactly symmetric.
///
/// The projection is computed on whichever of `block` and `-block` has a
/// positive first nonzero entry, which makes it exactly odd: `P(-M) = -P(M)`
/// bit for bit.
pub(crate) fn project_rank_dense(block: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    if r >= block.nrows() {
        return Ok(block.clone());
    }
    if r == 0 {
        return Ok(DMatrix::zeros(block.nrows(), block.ncols()));
    }
    let flip = block.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0);
    if flip {
        let e = eigen_dense(&-block)?;
        return Ok(-SymMatrix::symmetrize(e.reconstruct(r)).into_matrix());
    }
    let e = eigen_dense(block)?;
    Ok(SymMatrix::symmetrize(e.reconstruct(r)).into_matrix())
}

/// Sum of the `r` largest squared eigenvalues of a compact symmetric block,
/// i.e. `||P^[r](block)||_F^2`.
pub(crate) fn top_rank_energy(block: &DMatrix<f64>, r: usize) -> Result<f64> {
    if r >= block.nrows() {
        return Ok(block.norm_squared());
    }
    let flip = block.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0);
    let e = if flip { eigen_dense(&-block)? } else { eigen_dense(block)? };
    Ok(e.eigenvalues.iter().take(r).map(|v| v * v).sum())
}

/// `P^[r](M)`: keeps the `r` eigenpairs of largest `|lambda|`.
///
/// The decomposition runs on the nonzero rows of `M` only, so the result is
/// exactly zero outside the bisupport of `M`.
pub fn project_rank(m: &SymMatrix, r: usize) -> Result<SymMatrix> {
    let support = m.nonzero_support();
    if r >= support.len() {
        return Ok(m.clone());
    }
    let block = m.submatrix(&support);
    let projected = project_rank_dense(&block, r)?;
    Ok(SymMatrix::embed(&projected, &support))
}

/// Frobenius inner product `sum_ij A_ij B_ij`.
pub fn frob_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "inner product of {}x{} and {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    Ok(a.data.dot(&b.data))
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Largest `|a_ij - a_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        sym_enforce(&g).unwrap()
    }

    #[test]
    fn sym_enforce_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let s = sym_enforce(&m).unwrap();
        assert_eq!(s.as_matrix(), &DMatrix::from_element(2, 2, 1.0));

        let sym = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, -2.0]);
        assert_eq!(sym_enforce(&sym).unwrap().as_matrix(), &sym);

        let anti = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, -4.0, 0.0]);
        assert_eq!(sym_enforce(&anti).unwrap(), SymMatrix::zeros(2));

        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(sym_enforce(&rect), Err(Error::Dimension(_))));
    }

    #[test]
    fn restrict_examples() {
        let ones = SymMatrix::new(DMatrix::from_element(3, 3, 1.0)).unwrap();
        let s = SupportSet::new(vec![0, 1], 3).unwrap();
        let r = restrict(&ones, &s).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i < 2 && j < 2 { 1.0 } else { 0.0 };
                assert_eq!(r.get(i, j), want);
            }
        }
        assert_eq!(restrict(&ones, &SupportSet::full(3)).unwrap(), ones);
        assert_eq!(
            restrict(&ones, &SupportSet::empty(3)).unwrap(),
            SymMatrix::zeros(3)
        );
        assert!(matches!(
            SupportSet::new(vec![0, 3], 3),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
        assert!(SupportSet::new(vec![1, 1], 3).is_err());
    }

    #[test]
    fn eigen_diagonal_ordering() {
        let e = eigen(&SymMatrix::from_diagonal(&[3.0, 1.0, -2.0])).unwrap();
        assert_eq!(e.eigenvalues.len(), 3);
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] + 2.0).abs() < 1e-14);
        assert!((e.eigenvalues[2] - 1.0).abs() < 1e-14);

        let z = eigen(&SymMatrix::zeros(4)).unwrap();
        assert!(z.eigenvalues.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eigen_reconstructs_and_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_sym(5, &mut rng);
            let e = eigen(&m).unwrap();
            let err = (m.as_matrix() - e.reconstruct(5)).norm();
            assert!(err <= 1e-8 * m.frob_norm());
            assert!(e
                .eigenvalues
                .windows(2)
                .all(|w| w[0].abs() >= w[1].abs()));
            let vtv = e.eigenvectors.transpose() * &e.eigenvectors;
            assert!((vtv - DMatrix::identity(5, 5)).amax() < 1e-10);
            for c in 0..5 {
                let first = e.eigenvectors.column(c).iter().copied().find(|x| x.abs() > 1e-14);
                assert!(first.unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn project_rank_examples() {
        let d = SymMatrix::from_diagonal(&[3.0, 1.0, -2.0]);
        let p = project_rank(&d, 2).unwrap();
        let want = SymMatrix::from_diagonal(&[3.0, 0.0, -2.0]);
        assert!((p.as_matrix() - want.as_matrix()).amax() < 1e-14);
        assert_eq!(project_rank(&d, 3).unwrap(), d);
        assert_eq!(project_rank(&d, 0).unwrap(), SymMatrix::zeros(3));
    }

    #[test]
    fn project_rank_beats_random_rank_two_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let m = random_sym(6, &mut rng);
        let p = project_rank(&m, 2).unwrap();
        let best = (&m - &p).frob_norm();
        for _ in 0..10_000 {
            let u = DMatrix::from_fn(6, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
            let signs = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ]));
            let z = SymMatrix::symmetrize(&u * signs * u.transpose());
            assert!(best <= (&m - &z).frob_norm() + 1e-12);
        }
    }

    #[test]
    fn project_rank_keeps_support_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_sym(7, &mut rng);
        let s = SupportSet::new(vec![1, 3, 4, 6], 7).unwrap();
        let ms = restrict(&m, &s).unwrap();
        let p = project_rank(&ms, 2).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                if !(s.contains(i) && s.contains(j)) {
                    assert_eq!(p.get(i, j), 0.0);
                }
            }
        }
        assert_eq!(p.numerical_rank(1e-10).unwrap(), 2);
    }

    #[test]
    fn frob_inner_examples() {
        let i3 = SymMatrix::identity(3);
        assert_eq!(frob_inner(&i3, &i3).unwrap(), 3.0);
        assert_eq!(frob_inner(&i3, &SymMatrix::zeros(3)).unwrap(), 0.0);
        assert!(frob_inner(&i3, &SymMatrix::zeros(2)).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_sym(4, &mut rng);
        let b = random_sym(4, &mut rng);
        let trace = (a.as_matrix().transpose() * b.as_matrix()).trace();
        assert!((frob_inner(&a, &b).unwrap() - trace).abs() < 1e-12);
    }

    #[test]
    fn support_display_is_one_based() {
        let s = SupportSet::new(vec![2, 0], 4).unwrap();
        assert_eq!(s.to_string(), "1 3");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sym_strategy(n: usize) -> impl Strategy<Value = SymMatrix> {
            proptest::collection::vec(-5.0f64..5.0, n * n)
                .prop_map(move |v| sym_enforce(&DMatrix::from_row_slice(n, n, &v)).unwrap())
        }

        proptest! {
            #[test]
            fn rank_projection_is_idempotent(m in sym_strategy(6), r in 0usize..6) {
                let p = project_rank(&m, r).unwrap();
                let pp = project_rank(&p, r).unwrap();
                prop_assert!((p.as_matrix() - pp.as_matrix()).amax() <= 1e-10 * (1.0 + m.frob_norm()));
            }

            #[test]
            fn pythagoras(m in sym_strategy(5), r in 0usize..5) {
                let p = project_rank(&m, r).unwrap();
                let lhs = m.frob_norm_sq();
                let rhs = (&m - &p).frob_norm_sq() + p.frob_norm_sq();
                prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.max(1e-300));
            }

            #[test]
            fn restrict_is_orthogonal(m in sym_strategy(5), nn in sym_strategy(5),
                                      mask in proptest::collection::vec(any::<bool>(), 5)) {
                let idx: Vec<usize> = (0..5).filter(|&i| mask[i]).collect();
                let s = SupportSet::new(idx, 5).unwrap();
                let rm = restrict(&m, &s).unwrap();
                let rn = restrict(&nn, &s).unwrap();
                let ip = frob_inner(&(&m - &rm), &rn).unwrap();
                prop_assert!(ip.abs() < 1e-12);
            }
        }
    }
}
