//! Measurement ensembles and restricted-isometry estimators.
//!
//! Three kinds of linear maps `R^{n x n} -> R^m` act on symmetric matrices:
//!
//! * dense Gaussian: `y_i = <X, A_i>_F`, `A_i` with `N(0, 1/m)` entries, stored
//!   symmetrized (a symmetric `X` only sees the symmetric part of `A_i`);
//! * rank-one: `y_i = a_i^T X a_i`, `a_i` with `N(0, 1/m)` entries (or standard
//!   normal entries with [`RankOneScale::Standard`]);
//! * factorized: `y_i = <B X B^T, A_i>_F` (or `a_i^T B X B^T a_i`), with `B`
//!   (`p x n`) and the inner ensemble drawn with standard normal entries.
//!
//! Maps are fully determined by a [`MapSpec`]; the payload is regenerated from
//! the seed and never serialized.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::{derive_seed, gaussian_matrix, rng_from_seed, sample_structured};
use crate::symcore::{frob_inner, SymMatrix};
use crate::textio::KeyValues;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasurementKind {
    DenseGaussian,
    RankOne,
    Factorized,
}

impl MeasurementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DenseGaussian => "dense-gaussian",
            Self::RankOne => "rank-one",
            Self::Factorized => "factorized",
        }
    }
}

impl fmt::Display for MeasurementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasurementKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-gaussian" | "dense" => Ok(Self::DenseGaussian),
            "rank-one" => Ok(Self::RankOne),
            "factorized" => Ok(Self::Factorized),
            other => Err(Error::Parameter(format!("unknown measurement kind `{other}`"))),
        }
    }
}

/// Entry scaling of rank-one vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RankOneScale {
    /// `N(0, 1/m)` entries.
    #[default]
    Normalized,
    /// `N(0, 1)` entries.
    Standard,
}

impl FromStr for RankOneScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(Self::Normalized),
            "standard" => Ok(Self::Standard),
            other => Err(Error::Parameter(format!("unknown rank-one scale `{other}`"))),
        }
    }
}

/// Inner ensemble of a factorized map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FactorInner {
    /// `p x p` Gaussian matrices `A_i`.
    #[default]
    Matrices,
    /// Length-`p` Gaussian vectors `a_i`.
    Vectors,
}

impl FromStr for FactorInner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrices" => Ok(Self::Matrices),
            "vectors" => Ok(Self::Vectors),
            other => Err(Error::Parameter(format!("unknown factorized inner kind `{other}`"))),
        }
    }
}

/// Everything needed to regenerate a sampled map.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec {
    pub kind: MeasurementKind,
    pub n: usize,
    pub m: usize,
    pub p: Option<usize>,
    pub inner: FactorInner,
    pub scale: RankOneScale,
    pub seed: u64,
}

impl MapSpec {
    pub fn new(kind: MeasurementKind, n: usize, m: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            m,
            p: None,
            inner: FactorInner::Matrices,
            scale: RankOneScale::Normalized,
            seed,
        }
    }

    pub fn factorized(n: usize, m: usize, p: usize, inner: FactorInner, seed: u64) -> Self {
        Self {
            p: Some(p),
            inner,
            ..Self::new(MeasurementKind::Factorized, n, m, seed)
        }
    }

    /// Structured-text header: `kind`, `n`, `m`, `seed`, plus `p` and `inner`
    /// for factorized maps and `scale` for rank-one maps.
    pub fn to_header(&self) -> String {
        let mut out = format!(
            "kind = {}\nn = {}\nm = {}\n",
            self.kind, self.n, self.m
        );
        match self.kind {
            MeasurementKind::Factorized => {
                let inner = match self.inner {
                    FactorInner::Matrices => "matrices",
                    FactorInner::Vectors => "vectors",
                };
                out.push_str(&format!("p = {}\ninner = {inner}\n", self.p.unwrap_or(0)));
            }
            MeasurementKind::RankOne => {
                let scale = match self.scale {
                    RankOneScale::Normalized => "normalized",
                    RankOneScale::Standard => "standard",
                };
                out.push_str(&format!("scale = {scale}\n"));
            }
            MeasurementKind::DenseGaussian => {}
        }
        out.push_str(&format!("seed = {}\n", self.seed));
        out
    }

    pub fn from_header(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.check_known(&["kind", "n", "m", "p", "inner", "scale", "seed"])?;
        let kind: MeasurementKind = kv.require("kind")?.parse()?;
        let n = kv.parse_value("n")?.ok_or_else(|| missing("n"))?;
        let m = kv.parse_value("m")?.ok_or_else(|| missing("m"))?;
        let seed = kv.parse_value("seed")?.ok_or_else(|| missing("seed"))?;
        let p = kv.parse_value("p")?;
        let inner = kv.get("inner").map(str::parse).transpose()?.unwrap_or_default();
        let scale = kv.get("scale").map(str::parse).transpose()?.unwrap_or_default();
        Ok(Self {
            kind,
            n,
            m,
            p,
            inner,
            scale,
            seed,
        })
    }
}

fn missing(key: &str) -> Error {
    Error::Parse {
        line: 0,
        msg: format!("missing required key `{key}`"),
    }
}

/// Payload of a (possibly inner) dense or rank-one ensemble at dimension `d`.
#[derive(Clone, Debug, PartialEq)]
enum Ensemble {
    /// `m x d^2`; row `i` is `vec(A_i)` of a symmetric `A_i`.
    Dense(DMatrix<f64>),
    /// `m x d`; row `i` is `a_i^T`.
    RankOne(DMatrix<f64>),
}

impl Ensemble {
    fn len(&self) -> usize {
        match self {
            Self::Dense(a) | Self::RankOne(a) => a.nrows(),
        }
    }

    fn apply(&self, x: &DMatrix<f64>) -> DVector<f64> {
        match self {
            Self::Dense(a) => a * DVector::from_column_slice(x.as_slice()),
            Self::RankOne(a) => {
                let ax = a * x;
                DVector::from_fn(a.nrows(), |i, _| ax.row(i).dot(&a.row(i)))
            }
        }
    }

    fn adjoint(&self, u: &DVector<f64>, d: usize) -> DMatrix<f64> {
        match self {
            Self::Dense(a) => {
                let v = a.tr_mul(u);
                DMatrix::from_column_slice(d, d, v.as_slice())
            }
            Self::RankOne(a) => {
                let mut scaled = a.clone();
                for (i, mut row) in scaled.row_iter_mut().enumerate() {
                    row *= u[i];
                }
                a.tr_mul(&scaled)
            }
        }
    }

    fn sample_dense(d: usize, m: usize, std: f64, rng: &mut crate::sampling::SeededRng) -> Self {
        let mut rows = DMatrix::zeros(m, d * d);
        for i in 0..m {
            let g = gaussian_matrix(d, d, std, rng);
            let a = SymMatrix::symmetrize(g).into_matrix();
            rows.row_mut(i).copy_from_slice(a.as_slice());
        }
        Self::Dense(rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Payload {
    Direct(Ensemble),
    Factorized { b: DMatrix<f64>, inner: Ensemble },
}

/// A linear map from symmetric `n x n` matrices to `R^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementMap {
    kind: MeasurementKind,
    n: usize,
    m: usize,
    spec: Option<MapSpec>,
    payload: Payload,
}

impl MeasurementMap {
    /// Samples the map described by `spec`; identical specs give bit-identical maps.
    pub fn sample(spec: &MapSpec) -> Result<Self> {
        let MapSpec { kind, n, m, .. } = *spec;
        if n == 0 || m == 0 {
            return Err(Error::Parameter(format!(
                "map dimensions must be positive (n = {n}, m = {m})"
            )));
        }
        let mut rng = rng_from_seed(spec.seed);
        let payload = match kind {
            MeasurementKind::DenseGaussian => {
                let std = 1.0 / (m as f64).sqrt();
                Payload::Direct(Ensemble::sample_dense(n, m, std, &mut rng))
            }
            MeasurementKind::RankOne => {
                let std = match spec.scale {
                    RankOneScale::Normalized => 1.0 / (m as f64).sqrt(),
                    RankOneScale::Standard => 1.0,
                };
                Payload::Direct(Ensemble::RankOne(gaussian_matrix(m, n, std, &mut rng)))
            }
            MeasurementKind::Factorized => {
                let p = spec.p.filter(|&p| p > 0).ok_or_else(|| {
                    Error::Parameter("factorized map requires a positive p".into())
                })?;
                let b = gaussian_matrix(p, n, 1.0, &mut rng);
                let inner = match spec.inner {
                    FactorInner::Matrices => Ensemble::sample_dense(p, m, 1.0, &mut rng),
                    FactorInner::Vectors => Ensemble::RankOne(gaussian_matrix(m, p, 1.0, &mut rng)),
                };
                Payload::Factorized { b, inner }
            }
        };
        Ok(Self {
            kind,
            n,
            m,
            spec: Some(spec.clone()),
            payload,
        })
    }

    /// Dense map from explicit symmetric matrices.
    pub fn from_dense_matrices(mats: &[SymMatrix]) -> Result<Self> {
        let n = check_family(mats.iter().map(SymMatrix::dim), mats.len())?;
        let mut rows = DMatrix::zeros(mats.len(), n * n);
        for (i, a) in mats.iter().enumerate() {
            rows.row_mut(i).copy_from_slice(a.as_matrix().as_slice());
        }
        Ok(Self {
            kind: MeasurementKind::DenseGaussian,
            n,
            m: mats.len(),
            spec: None,
            payload: Payload::Direct(Ensemble::Dense(rows)),
        })
    }

    /// Rank-one map from explicit vectors, one per row of `vectors` (`m x n`).
    pub fn from_rank_one_vectors(vectors: DMatrix<f64>) -> Result<Self> {
        let (m, n) = vectors.shape();
        if m == 0 || n == 0 {
            return Err(Error::Parameter("empty rank-one payload".into()));
        }
        Ok(Self {
            kind: MeasurementKind::RankOne,
            n,
            m,
            spec: None,
            payload: Payload::Direct(Ensemble::RankOne(vectors)),
        })
    }

    /// Factorized map `X -> inner(B X B^T)` from an explicit `B` and a direct
    /// inner map on `p x p` matrices.
    pub fn factorized_from_parts(b: DMatrix<f64>, inner: &MeasurementMap) -> Result<Self> {
        let (p, n) = b.shape();
        let inner = match &inner.payload {
            Payload::Direct(e) if inner.n == p => e.clone(),
            _ => {
                return Err(Error::Dimension(
                    "inner map must be direct and act on p x p matrices".into(),
                ))
            }
        };
        Ok(Self {
            kind: MeasurementKind::Factorized,
            n,
            m: inner.len(),
            spec: None,
            payload: Payload::Factorized { b, inner },
        })
    }

    /// Isometry on symmetric matrices: `m = n(n+1)/2`, `A_(ii) = E_ii` and
    /// `A_(ij) = (E_ij + E_ji)/sqrt(2)`, so that `||A(X)||_2 = ||X||_F`.
    pub fn isometric(n: usize) -> Self {
        let mut mats = Vec::with_capacity(n * (n + 1) / 2);
        let w = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            for j in i..n {
                let mut a = DMatrix::zeros(n, n);
                if i == j {
                    a[(i, i)] = 1.0;
                } else {
                    a[(i, j)] = w;
                    a[(j, i)] = w;
                }
                mats.push(SymMatrix::symmetrize(a));
            }
        }
        Self::from_dense_matrices(&mats).expect("nonempty basis")
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> Option<usize> {
        match &self.payload {
            Payload::Factorized { b, .. } => Some(b.nrows()),
            Payload::Direct(_) => None,
        }
    }

    /// The [`MapSpec`] this map was sampled from; `None` for injected payloads.
    pub fn spec(&self) -> Option<&MapSpec> {
        self.spec.as_ref()
    }

    /// `B` of a factorized map.
    pub fn factor(&self) -> Option<&DMatrix<f64>> {
        match &self.payload {
            Payload::Factorized { b, .. } => Some(b),
            Payload::Direct(_) => None,
        }
    }

    /// The inner `p x p` map of a factorized map, as a direct map.
    pub fn inner_map(&self) -> Option<MeasurementMap> {
        match &self.payload {
            Payload::Factorized { b, inner } => Some(Self {
                kind: match inner {
                    Ensemble::Dense(_) => MeasurementKind::DenseGaussian,
                    Ensemble::RankOne(_) => MeasurementKind::RankOne,
                },
                n: b.nrows(),
                m: self.m,
                spec: None,
                payload: Payload::Direct(inner.clone()),
            }),
            Payload::Direct(_) => None,
        }
    }

    /// The same map with every measurement multiplied by `factor`
    /// (dense matrices scaled by `factor`, rank-one vectors by `sqrt(factor)`).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let scale = |e: &Ensemble| -> Result<Ensemble> {
            Ok(match e {
                Ensemble::Dense(a) => Ensemble::Dense(a * factor),
                Ensemble::RankOne(a) => {
                    if factor < 0.0 {
                        return Err(Error::Parameter(
                            "rank-one maps can only be scaled by a nonnegative factor".into(),
                        ));
                    }
                    Ensemble::RankOne(a * factor.sqrt())
                }
            })
        };
        let payload = match &self.payload {
            Payload::Direct(e) => Payload::Direct(scale(e)?),
            Payload::Factorized { b, inner } => Payload::Factorized {
                b: b.clone(),
                inner: scale(inner)?,
            },
        };
        Ok(Self {
            spec: None,
            payload,
            ..self.clone()
        })
    }

    /// Equivalent direct map: `B^T A_i B` (or `B^T a_i`) for factorized maps,
    /// `self` otherwise.
    pub fn to_direct(&self) -> Self {
        match &self.payload {
            Payload::Direct(_) => self.clone(),
            Payload::Factorized { b, inner } => {
                let n = self.n;
                let p = b.nrows();
                let ens = match inner {
                    Ensemble::Dense(rows) => {
                        let mut out = DMatrix::zeros(self.m, n * n);
                        for i in 0..self.m {
                            let a = DMatrix::from_row_slice(p, p, rows.row(i).transpose().as_slice());
                            let full = b.transpose() * a * b;
                            let full = SymMatrix::symmetrize(full).into_matrix();
                            out.row_mut(i).copy_from_slice(full.as_slice());
                        }
                        Ensemble::Dense(out)
                    }
                    Ensemble::RankOne(vecs) => Ensemble::RankOne(vecs * b),
                };
                Self {
                    kind: match ens {
                        Ensemble::Dense(_) => MeasurementKind::DenseGaussian,
                        Ensemble::RankOne(_) => MeasurementKind::RankOne,
                    },
                    n,
                    m: self.m,
                    spec: None,
                    payload: Payload::Direct(ens),
                }
            }
        }
    }

    /// `y = A(X)`.
    pub fn apply(&self, x: &SymMatrix) -> Result<Vec<f64>> {
        if x.dim() != self.n {
            return Err(Error::Dimension(format!(
                "map acts on {}x{} matrices, got {}x{}",
                self.n,
                self.n,
                x.dim(),
                x.dim()
            )));
        }
        let y = match &self.payload {
            Payload::Direct(e) => e.apply(x.as_matrix()),
            Payload::Factorized { b, inner } => {
                let inner_x = b * x.as_matrix() * b.transpose();
                inner.apply(&inner_x)
            }
        };
        Ok(y.as_slice().to_vec())
    }

    /// `A*(u) = sum_i u_i A_i`, symmetric by construction.
    pub fn adjoint(&self, u: &[f64]) -> Result<SymMatrix> {
        if u.len() != self.m {
            return Err(Error::Dimension(format!(
                "adjoint expects {} values, got {}",
                self.m,
                u.len()
            )));
        }
        let u = DVector::from_column_slice(u);
        let out = match &self.payload {
            Payload::Direct(e) => e.adjoint(&u, self.n),
            Payload::Factorized { b, inner } => {
                let w = inner.adjoint(&u, b.nrows());
                b.transpose() * w * b
            }
        };
        Ok(SymMatrix::symmetrize(out))
    }
}

fn check_family(dims: impl Iterator<Item = usize>, count: usize) -> Result<usize> {
    let dims: Vec<usize> = dims.collect();
    if count == 0 {
        return Err(Error::Parameter("measurement family is empty".into()));
    }
    if dims.iter().any(|&d| d != dims[0]) {
        return Err(Error::Dimension("measurement matrices differ in size".into()));
    }
    Ok(dims[0])
}

/// Which restricted-isometry form an estimate targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RipMode {
    /// `(1 - delta) ||Z||^2 <= ||A(Z)||_2^2 <= (1 + delta) ||Z||^2`.
    L2,
    /// `alpha ||Z|| <= ||A(Z)||_1 <= beta ||Z||`.
    L1,
}

impl FromStr for RipMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Self::L2),
            "l1" => Ok(Self::L1),
            other => Err(Error::Parameter(format!("unknown RIP mode `{other}`"))),
        }
    }
}

impl fmt::Display for RipMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::L2 => "l2",
            Self::L1 => "l1",
        })
    }
}

/// Empirical restricted-isometry constants: extremes observed over random
/// unit-norm probes from `Sigma_(s)^[r]`. Lower bounds on the true constants.
#[derive(Clone, Debug, PartialEq)]
pub struct RipEstimate {
    pub mode: RipMode,
    /// `max |‖A Z‖_2^2 - 1|`.
    pub delta_lower: f64,
    /// `min ‖A Z‖_1`.
    pub alpha_hat: f64,
    /// `max ‖A Z‖_1`.
    pub beta_hat: f64,
    pub trials: usize,
    pub s: usize,
    pub r: usize,
}

impl RipEstimate {
    pub fn condition_ratio(&self) -> f64 {
        self.beta_hat / self.alpha_hat
    }
}

/// Probes `trials` unit-Frobenius members of `Sigma_(s)^[r]`; trial `t` uses
/// the sub-seed `derive_seed(seed, [t])`. Both the `l2` and `l1` extremes are
/// recorded; `mode` marks the one the caller is interested in.
pub fn estimate_rip(
    map: &MeasurementMap,
    s: usize,
    r: usize,
    trials: usize,
    mode: RipMode,
    seed: u64,
) -> Result<RipEstimate> {
    if trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    let n = map.n();
    let stats: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &[t as u64]));
            let (z, _) = sample_structured(n, s, r, &mut rng)?;
            let y = map.apply(&z)?;
            let l2 = y.iter().map(|v| v * v).sum::<f64>();
            let l1 = y.iter().map(|v| v.abs()).sum::<f64>();
            Ok(((l2 - 1.0).abs(), l1))
        })
        .collect::<Result<_>>()?;
    let mut delta = 0.0f64;
    let mut alpha = f64::INFINITY;
    let mut beta = 0.0f64;
    for (d, l1) in stats {
        delta = delta.max(d);
        alpha = alpha.min(l1);
        beta = beta.max(l1);
    }
    Ok(RipEstimate {
        mode,
        delta_lower: delta,
        alpha_hat: alpha,
        beta_hat: beta,
        trials,
        s,
        r,
    })
}

/// `|<Z, (A*A - I) Z'>| / (‖Z‖ ‖Z'‖)`, evaluated as `|<A Z, A Z'> - <Z, Z'>|`.
pub fn cross_term_ratio(map: &MeasurementMap, z: &SymMatrix, z2: &SymMatrix) -> Result<f64> {
    let y = map.apply(z)?;
    let y2 = map.apply(z2)?;
    let measured: f64 = y.iter().zip(&y2).map(|(a, b)| a * b).sum();
    let plain = frob_inner(z, z2)?;
    let denom = z.frob_norm() * z2.frob_norm();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((measured - plain).abs() / denom)
}

/// Worst cross-term ratio over sampled pairs and whether it stays within `delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossTermReport {
    pub worst_ratio: f64,
    pub delta: f64,
    pub within: bool,
    pub pairs: usize,
}

/// Samples `trials` independent pairs `Z, Z'` from `Sigma_(s)^[r]` (so that
/// `Z +- Z'` lie in `Sigma_(2s)^[2r]`) and reports the largest cross-term ratio.
pub fn check_rip_cross_term(
    map: &MeasurementMap,
    s: usize,
    r: usize,
    trials: usize,
    delta: f64,
    seed: u64,
) -> Result<CrossTermReport> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let n = map.n();
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &[t as u64]));
            let (z, _) = sample_structured(n, s, r, &mut rng)?;
            let (z2, _) = sample_structured(n, s, r, &mut rng)?;
            cross_term_ratio(map, &z, &z2)
        })
        .collect::<Result<_>>()?;
    let worst = ratios.into_iter().fold(0.0f64, f64::max);
    Ok(CrossTermReport {
        worst_ratio: worst,
        delta,
        within: worst <= delta,
        pairs: trials,
    })
}
