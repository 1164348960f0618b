//! Recovery algorithms for jointly low-rank and bisparse matrices.
//!
//! All iterative solvers start from `X_0 = 0` and stop on the first of:
//! relative residual `||y - A X_k|| <= tol_residual ||y||`, stall
//! `||X_{k+1} - X_k||_F <= tol_stall ||X_k||_F`, divergence (residual above ten
//! times its initial value for 20 consecutive iterations), or `max_iters`.
//!
//! * [`iht_exact`]: `X_{k+1} = P_(s)^[r](X_k + A*(y - A X_k))` with the exact
//!   (enumerating) projection. Desk scale only.
//! * [`iht_head_tail`]: `X_{k+1} = T(X_k + H(A*(y - A X_k)))` with `T` the joint
//!   tail projection and `H` a head projection at doubled parameters.
//! * [`iht_rank_one`]: the sign-modified variant for rank-one measurements,
//!   `X_{k+1} = T(X_k + nu_k H(A* sgn(y - A X_k)))`, `nu_k = ||y - A X_k||_1 / beta^2`.
//! * [`two_step_factorized`]: low-rank IHT on the `p x p` sketch, then [`hihtp`].
//! * [`brute_force_decode`]: enumerates supports and fits each one.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::combin::{binomial, subsets};
use crate::error::{Error, Result};
use crate::measurements::{estimate_rip, MeasurementKind, MeasurementMap, RipMode};
use crate::projections::{
    exact_project, head_joint, head_rowcol, head_square_variant, hierarchical_support,
    tail_joint, DEFAULT_ENUMERATION_CAP,
};
use crate::symcore::{eigen, project_rank, restrict, SupportSet, SymMatrix};

/// Probes used when the step parameter `beta` is estimated from the map.
pub const BETA_PROBES: usize = 256;
/// Probe seed of [`default_step_beta`].
pub const BETA_SEED: u64 = 0x0B57_A11E;

const DIVERGENCE_FACTOR: f64 = 10.0;
const DIVERGENCE_PATIENCE: usize = 20;
const RIDGE: f64 = 1e-10;
const POLISH_ROUNDS: usize = 25;
const IRLS_ROUNDS: usize = 50;

/// Head projection used inside the head/tail iterations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HeadChoice {
    /// [`head_square_variant`]: lands in `Sigma_(s^2)^[r]`.
    #[default]
    Square,
    /// [`head_joint`]: lands in `Sigma_(s)^[r]`.
    Anchor,
    /// Rank truncation of [`head_rowcol`]: lands in `Sigma_(2s)^[r]`.
    RowCol,
}

impl FromStr for HeadChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Self::Square),
            "anchor" => Ok(Self::Anchor),
            "rowcol" => Ok(Self::RowCol),
            other => Err(Error::Parameter(format!("unknown head `{other}`"))),
        }
    }
}

impl fmt::Display for HeadChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Square => "square",
            Self::Anchor => "anchor",
            Self::RowCol => "rowcol",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryConfig {
    pub max_iters: usize,
    pub tol_residual: f64,
    pub tol_stall: f64,
    pub head_choice: HeadChoice,
    /// `beta` in the sign-modified step; estimated from the map when `None`.
    pub step_beta: Option<f64>,
    /// Low-rank stage on dense maps: replace the unit step by the normalized
    /// step `||P_U g||^2 / ||A P_U g||^2`, `U` the current column space.
    pub normalized_step: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol_residual: 1e-9,
            tol_stall: 1e-12,
            head_choice: HeadChoice::Square,
            step_beta: None,
            normalized_step: false,
        }
    }
}

impl RecoveryConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if !(self.tol_residual > 0.0) || !(self.tol_stall > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if let Some(b) = self.step_beta {
            if !(b > 0.0) {
                return Err(Error::Parameter(format!("step_beta must be positive, got {b}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Residual,
    Stall,
    SupportStable,
    MaxIters,
    Diverged,
    Exhaustive,
}

impl StopReason {
    fn converged(self) -> bool {
        !matches!(self, Self::MaxIters | Self::Diverged)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    pub estimate: SymMatrix,
    pub iterations: usize,
    /// `||y - A X_k||_2` after each iteration.
    pub residual_trace: Vec<f64>,
    pub converged: bool,
    pub stop: StopReason,
    pub support: SupportSet,
}

impl RecoveryResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_trace.last().copied().unwrap_or(0.0)
    }

    /// `||estimate - x||_F / ||x||_F` (absolute error when `x = 0`).
    pub fn relative_error(&self, x: &SymMatrix) -> f64 {
        let err = (&self.estimate - x).frob_norm();
        let nx = x.frob_norm();
        if nx == 0.0 {
            err
        } else {
            err / nx
        }
    }
}

fn residual(map: &MeasurementMap, y: &[f64], x: &SymMatrix) -> Result<Vec<f64>> {
    let ax = map.apply(x)?;
    Ok(y.iter().zip(&ax).map(|(a, b)| a - b).collect())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn check_y(map: &MeasurementMap, y: &[f64]) -> Result<()> {
    if y.len() != map.m() {
        return Err(Error::Dimension(format!(
            "expected {} measurements, got {}",
            map.m(),
            y.len()
        )));
    }
    Ok(())
}

/// Shared driver: repeatedly applies `step(X_k, y - A X_k)` from `X_0 = 0`.
fn iterate<F>(map: &MeasurementMap, y: &[f64], cfg: &RecoveryConfig, mut step: F) -> Result<RecoveryResult>
where
    F: FnMut(&SymMatrix, &[f64]) -> Result<SymMatrix>,
{
    cfg.validate()?;
    check_y(map, y)?;
    let y_norm = norm2(y);
    let mut x = SymMatrix::zeros(map.n());
    let mut res = y.to_vec();
    let mut trace = Vec::new();
    let mut above = 0;
    let mut stop = StopReason::MaxIters;
    for _ in 0..cfg.max_iters {
        let next = step(&x, &res)?;
        let next_res = residual(map, y, &next)?;
        let rn = norm2(&next_res);
        trace.push(rn);
        let change = (&next - &x).frob_norm();
        let prev_norm = x.frob_norm();
        x = next;
        res = next_res;
        if !rn.is_finite() {
            stop = StopReason::Diverged;
            break;
        }
        if rn <= cfg.tol_residual * y_norm {
            stop = StopReason::Residual;
            break;
        }
        if change <= cfg.tol_stall * prev_norm {
            stop = StopReason::Stall;
            break;
        }
        if rn > DIVERGENCE_FACTOR * y_norm {
            above += 1;
            if above >= DIVERGENCE_PATIENCE {
                stop = StopReason::Diverged;
                break;
            }
        } else {
            above = 0;
        }
    }
    let support = x.nonzero_support();
    Ok(RecoveryResult {
        iterations: trace.len(),
        residual_trace: trace,
        converged: stop.converged(),
        stop,
        support,
        estimate: x,
    })
}

fn debug_check_structure(x: &SymMatrix, s: usize, r: usize) {
    if cfg!(debug_assertions) {
        let support = x.nonzero_support();
        debug_assert!(support.len() <= s, "iterate support {} exceeds {s}", support.len());
        if let Ok(rank) = SymMatrix::embed(&x.submatrix(&support), &support).numerical_rank(1e-9) {
            debug_assert!(rank <= r, "iterate rank {rank} exceeds {r}");
        }
    }
}

fn check_structure_params(n: usize, s: usize, r: usize) -> Result<()> {
    if s == 0 || s > n || r == 0 || r > s {
        return Err(Error::Parameter(format!(
            "need 1 <= r <= s <= n (n = {n}, s = {s}, r = {r})"
        )));
    }
    Ok(())
}

/// Iterative hard thresholding with the exact projection onto `Sigma_(s)^[r]`.
pub fn iht_exact(
    map: &MeasurementMap,
    y: &[f64],
    s: usize,
    r: usize,
    cfg: &RecoveryConfig,
) -> Result<RecoveryResult> {
    let n = map.n();
    check_structure_params(n, s, r)?;
    let count = binomial(n, s);
    if count > DEFAULT_ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            count,
            cap: DEFAULT_ENUMERATION_CAP,
            hint: "use iht_head_tail for larger problems".into(),
        });
    }
    iterate(map, y, cfg, |x, res| {
        let g = map.adjoint(res)?;
        let next = exact_project(&(x + &g), s, r)?.matrix;
        debug_check_structure(&next, s, r);
        Ok(next)
    })
}

/// Applies the configured head at parameters `(s, r)`.
fn apply_head(m: &SymMatrix, s: usize, r: usize, choice: HeadChoice) -> Result<SymMatrix> {
    let s = s.min(m.dim());
    let r = r.min(s);
    Ok(match choice {
        HeadChoice::Square => head_square_variant(m, s, r)?.matrix,
        HeadChoice::Anchor => head_joint(m, s, r)?.matrix,
        HeadChoice::RowCol => project_rank(&head_rowcol(m, s)?.matrix, r)?,
    })
}

/// Head/tail iterative hard thresholding: `T = tail_joint(., s, r)` and the
/// configured head applied at `(2s, 2r)`.
pub fn iht_head_tail(
    map: &MeasurementMap,
    y: &[f64],
    s: usize,
    r: usize,
    cfg: &RecoveryConfig,
) -> Result<RecoveryResult> {
    check_structure_params(map.n(), s, r)?;
    iterate(map, y, cfg, |x, res| {
        let g = map.adjoint(res)?;
        let h = apply_head(&g, 2 * s, 2 * r, cfg.head_choice)?;
        let next = tail_joint(&(x + &h), s, r)?.matrix;
        debug_check_structure(&next, s, r);
        Ok(next)
    })
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `beta_hat` of the l1 restricted-isometry estimate at `(s, r)`, used as the
/// default step parameter of the sign-modified iterations.
pub fn default_step_beta(map: &MeasurementMap, s: usize, r: usize) -> Result<f64> {
    step_beta_with_seed(map, s, r, BETA_SEED)
}

/// [`default_step_beta`] with an explicit probe seed.
pub fn step_beta_with_seed(map: &MeasurementMap, s: usize, r: usize, seed: u64) -> Result<f64> {
    let s = s.min(map.n());
    let r = r.min(s);
    Ok(estimate_rip(map, s, r, BETA_PROBES, RipMode::L1, seed)?.beta_hat)
}

/// Sign-modified IHT for rank-one measurements.
///
/// `T = tail_joint(., s, r)`, the configured head at `(2s, 2r)`, and
/// `sgn(0) = 0`. `beta` defaults to [`default_step_beta`] at `(2s, 2r)`.
pub fn iht_rank_one(
    map: &MeasurementMap,
    y: &[f64],
    s: usize,
    r: usize,
    cfg: &RecoveryConfig,
) -> Result<RecoveryResult> {
    if map.kind() != MeasurementKind::RankOne {
        return Err(Error::Parameter(format!(
            "sign-modified IHT needs a rank-one map, got {}",
            map.kind()
        )));
    }
    cfg.validate()?;
    check_structure_params(map.n(), s, r)?;
    let beta = match cfg.step_beta {
        Some(b) => b,
        None => default_step_beta(map, 2 * s, 2 * r)?,
    };
    iterate(map, y, cfg, |x, res| {
        let signs: Vec<f64> = res.iter().map(|&v| sgn(v)).collect();
        let nu = norm1(res) / (beta * beta);
        let g = map.adjoint(&signs)?;
        let h = apply_head(&g, 2 * s, 2 * r, cfg.head_choice)?;
        let next = tail_joint(&(x + &h.scale(nu)), s, r)?.matrix;
        debug_check_structure(&next, s, r);
        Ok(next)
    })
}

/// Low-rank IHT on a direct map: `Y_{k+1} = P^[r](Y_k + A*(y - A Y_k))`.
/// Rank-one maps use the sign-modified step with `P^[2r]` as head and `beta`
/// defaulting to [`default_step_beta`] over full support at rank `2r`.
pub fn iht_lowrank(
    map: &MeasurementMap,
    y: &[f64],
    r: usize,
    cfg: &RecoveryConfig,
) -> Result<RecoveryResult> {
    let p = map.n();
    if r == 0 || r > p {
        return Err(Error::Parameter(format!("rank must satisfy 1 <= r <= {p}, got {r}")));
    }
    match map.kind() {
        MeasurementKind::DenseGaussian => iterate(map, y, cfg, |x, res| {
            let g = map.adjoint(res)?;
            let step = if cfg.normalized_step {
                normalized_step(map, x, &g, r)?
            } else {
                1.0
            };
            project_rank(&(x + &g.scale(step)), r)
        }),
        MeasurementKind::RankOne => {
            cfg.validate()?;
            let beta = match cfg.step_beta {
                Some(b) => b,
                None => default_step_beta(map, p, (2 * r).min(p))?,
            };
            iterate(map, y, cfg, |x, res| {
                let signs: Vec<f64> = res.iter().map(|&v| sgn(v)).collect();
                let nu = norm1(res) / (beta * beta);
                let h = project_rank(&map.adjoint(&signs)?, (2 * r).min(p))?;
                project_rank(&(x + &h.scale(nu)), r)
            })
        }
        MeasurementKind::Factorized => Err(Error::Parameter(
            "low-rank stage expects a direct (dense or rank-one) map".into(),
        )),
    }
}

/// `||P_U g||^2 / ||A P_U g||^2` where `P_U g = Pg + gP - PgP` is the gradient
/// restricted to the tangent space at the column space `U` of `x` (the top-`r`
/// eigenspace of `g` when `x = 0`).
fn normalized_step(map: &MeasurementMap, x: &SymMatrix, g: &SymMatrix, r: usize) -> Result<f64> {
    let gt = if x.frob_norm() == 0.0 {
        project_rank(g, r)?
    } else {
        let u = eigen(x)?.eigenvectors.columns(0, r).into_owned();
        let pu = &u * u.transpose();
        let gm = g.as_matrix();
        SymMatrix::symmetrize(&pu * gm + gm * &pu - &pu * gm * &pu)
    };
    let num = gt.frob_norm_sq();
    let den: f64 = map.apply(&gt)?.iter().map(|v| v * v).sum();
    Ok(if num > 0.0 && den > 0.0 { num / den } else { 1.0 })
}

/// Outcome of [`hihtp`]; residuals are measured on the normalized sketch
/// `||Y/p - (B/sqrt(p)) X (B/sqrt(p))^T||_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct HihtpResult {
    pub estimate: SymMatrix,
    pub iterations: usize,
    pub residual_trace: Vec<f64>,
    pub converged: bool,
    pub stop: StopReason,
}

/// Least squares `min ||target - design z||`, falling back to a ridge solve
/// when the design is numerically rank deficient.
fn least_squares(design: &DMatrix<f64>, target: &DVector<f64>) -> DVector<f64> {
    let k = design.ncols();
    if k == 0 {
        return DVector::zeros(0);
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if design.nrows() >= k && smin > 1e-12 * smax {
        if let Ok(z) = svd.solve(target, 0.0) {
            return z;
        }
    }
    log::warn!("rank-deficient least-squares system ({k} unknowns); using ridge {RIDGE:e}");
    let gram = design.tr_mul(design) + DMatrix::identity(k, k) * RIDGE;
    let rhs = design.tr_mul(target);
    gram.cholesky()
        .map(|c| c.solve(&rhs))
        .unwrap_or_else(|| DVector::zeros(k))
}

/// Hierarchical hard thresholding pursuit for `Y = B X B^T`.
///
/// Each iteration takes a gradient step on `||Y - B X B^T||_F^2` (with `B`
/// scaled by `1/sqrt(p)`), selects the `(s, t)`-hierarchical support of the
/// result, and solves least squares over the at most `s t` selected entries.
/// Stops once the selected support repeats. The estimate is symmetrized.
pub fn hihtp(
    b: &DMatrix<f64>,
    yhat: &SymMatrix,
    s: usize,
    t: usize,
    cfg: &RecoveryConfig,
) -> Result<HihtpResult> {
    cfg.validate()?;
    let (p, n) = b.shape();
    if yhat.dim() != p {
        return Err(Error::Dimension(format!(
            "sketch is {}x{} but B has {p} rows",
            yhat.dim(),
            yhat.dim()
        )));
    }
    if s == 0 || s > n || t == 0 || t > n {
        return Err(Error::Parameter(format!(
            "need 1 <= s, t <= n (n = {n}, s = {s}, t = {t})"
        )));
    }
    let pf = p as f64;
    let bn = b / pf.sqrt();
    let target = yhat.as_matrix() / pf;
    let target_vec = DVector::from_column_slice(target.as_slice());
    let target_norm = target.norm();
    let mut x = DMatrix::<f64>::zeros(n, n);
    let mut previous = None;
    let mut trace = Vec::new();
    let mut stop = StopReason::MaxIters;
    for _ in 0..cfg.max_iters {
        let resid = &target - &bn * &x * bn.transpose();
        let w = &x + bn.transpose() * resid * &bn;
        let support = hierarchical_support(&w, s, t)?;
        let entries: Vec<(usize, usize)> = support.entries().collect();
        let mut design = DMatrix::zeros(p * p, entries.len());
        for (c, &(i, j)) in entries.iter().enumerate() {
            let outer = bn.column(i) * bn.column(j).transpose();
            design.column_mut(c).copy_from_slice(outer.as_slice());
        }
        let z = least_squares(&design, &target_vec);
        let mut next = DMatrix::zeros(n, n);
        for (c, &(i, j)) in entries.iter().enumerate() {
            next[(i, j)] = z[c];
        }
        let rn = (&target - &bn * &next * bn.transpose()).norm();
        trace.push(rn);
        x = next;
        if rn <= cfg.tol_residual * target_norm {
            stop = StopReason::Residual;
            break;
        }
        if previous.as_ref() == Some(&support) {
            stop = StopReason::SupportStable;
            break;
        }
        previous = Some(support);
    }
    Ok(HihtpResult {
        estimate: SymMatrix::symmetrize(x),
        iterations: trace.len(),
        residual_trace: trace,
        converged: stop.converged(),
        stop,
    })
}

/// Measurement scaling that brings the standard-normal inner ensemble of a
/// factorized map to `N(0, 1/m)` entries.
fn inner_normalization(kind: MeasurementKind, m: usize) -> f64 {
    match kind {
        MeasurementKind::RankOne => 1.0 / m as f64,
        _ => 1.0 / (m as f64).sqrt(),
    }
}

/// Step one of the two-step pipeline: the rank-`r` sketch `Y# ~ B X B^T`.
pub fn factorized_low_rank_stage(
    map: &MeasurementMap,
    y: &[f64],
    r: usize,
    cfg: &RecoveryConfig,
) -> Result<RecoveryResult> {
    let inner = map.inner_map().ok_or_else(|| {
        Error::Parameter(format!("two-step recovery needs a factorized map, got {}", map.kind()))
    })?;
    check_y(map, y)?;
    let scale = inner_normalization(inner.kind(), map.m());
    let inner = inner.scaled(scale)?;
    let y_scaled: Vec<f64> = y.iter().map(|v| v * scale).collect();
    iht_lowrank(&inner, &y_scaled, r, cfg)
}

/// Two-step recovery from factorized measurements: low-rank IHT for the
/// `p x p` sketch, then [`hihtp`] with `t = s` to undo `B`.
pub fn two_step_factorized(
    map: &MeasurementMap,
    y: &[f64],
    s: usize,
    r: usize,
    cfg: &RecoveryConfig,
) -> Result<RecoveryResult> {
    let b = map.factor().ok_or_else(|| {
        Error::Parameter(format!("two-step recovery needs a factorized map, got {}", map.kind()))
    })?;
    check_structure_params(map.n(), s, r)?;
    let stage1 = factorized_low_rank_stage(map, y, r, cfg)?;
    let stage2 = hihtp(b, &stage1.estimate, s, s, cfg)?;
    let mut trace = stage1.residual_trace;
    trace.extend_from_slice(&stage2.residual_trace);
    let converged = stage1.converged && stage2.converged;
    let stop = if !stage1.converged { stage1.stop } else { stage2.stop };
    let support = stage2.estimate.nonzero_support();
    Ok(RecoveryResult {
        estimate: stage2.estimate,
        iterations: trace.len(),
        residual_trace: trace,
        converged,
        stop,
        support,
    })
}

/// Data-fit norm of [`brute_force_decode`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DecodeNorm {
    #[default]
    L2,
    L1,
}

type IndexPair = (usize, usize);

/// Columns `A(E_ii)` and `A((E_ij + E_ji)/sqrt 2)` for `i < j`, plus their index pairs.
fn symmetric_features(map: &MeasurementMap) -> Result<(DMatrix<f64>, Vec<IndexPair>)> {
    let n = map.n();
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            pairs.push((i, j));
        }
    }
    let cols: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut e = DMatrix::zeros(n, n);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = w;
                e[(j, i)] = w;
            }
            map.apply(&SymMatrix::symmetrize(e))
        })
        .collect::<Result<_>>()?;
    let mut f = DMatrix::zeros(map.m(), pairs.len());
    for (c, col) in cols.iter().enumerate() {
        f.column_mut(c).copy_from_slice(col);
    }
    Ok((f, pairs))
}

fn assemble(coef: &DVector<f64>, pairs: &[(usize, usize)], n: usize) -> SymMatrix {
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let mut z = DMatrix::zeros(n, n);
    for (c, &(i, j)) in pairs.iter().enumerate() {
        if i == j {
            z[(i, i)] = coef[c];
        } else {
            z[(i, j)] = coef[c] * w;
            z[(j, i)] = coef[c] * w;
        }
    }
    SymMatrix::symmetrize(z)
}

fn fit_norm(v: &[f64], norm: DecodeNorm) -> f64 {
    match norm {
        DecodeNorm::L2 => norm2(v),
        DecodeNorm::L1 => norm1(v),
    }
}

/// Fits one support: least squares (or IRLS least absolute deviations) over
/// the symmetric coefficients on `S x S`, then, when `r < s`, projected
/// gradient polishing onto rank `r` on the fixed support.
fn fit_support(
    map: &MeasurementMap,
    y: &[f64],
    features: &DMatrix<f64>,
    all_pairs: &[(usize, usize)],
    support: &SupportSet,
    r: usize,
    norm: DecodeNorm,
) -> Result<(SymMatrix, f64)> {
    let n = map.n();
    let cols: Vec<usize> = all_pairs
        .iter()
        .enumerate()
        .filter(|(_, (i, j))| support.contains(*i) && support.contains(*j))
        .map(|(c, _)| c)
        .collect();
    let pairs: Vec<(usize, usize)> = cols.iter().map(|&c| all_pairs[c]).collect();
    let design = features.select_columns(&cols);
    let target = DVector::from_column_slice(y);
    let mut weights = DVector::from_element(y.len(), 1.0);
    let mut coef = least_squares(&design, &target);
    if norm == DecodeNorm::L1 {
        for _ in 0..IRLS_ROUNDS {
            let res = &target - &design * &coef;
            weights = res.map(|v| 1.0 / v.abs().max(1e-8)).map(f64::sqrt);
            let wd = DMatrix::from_fn(design.nrows(), design.ncols(), |i, j| design[(i, j)] * weights[i]);
            let wt = target.component_mul(&weights);
            coef = least_squares(&wd, &wt);
        }
    }
    let mut z = assemble(&coef, &pairs, n);
    if r < support.len() {
        let wd = DMatrix::from_fn(design.nrows(), design.ncols(), |i, j| design[(i, j)] * weights[i]);
        let lip = wd.singular_values().max().powi(2).max(f64::MIN_POSITIVE);
        let w2: Vec<f64> = weights.iter().map(|w| w * w).collect();
        z = project_rank(&z, r)?;
        for _ in 0..POLISH_ROUNDS {
            let res = residual(map, y, &z)?;
            let weighted: Vec<f64> = res.iter().zip(&w2).map(|(a, b)| a * b).collect();
            let g = restrict(&map.adjoint(&weighted)?, support)?;
            z = project_rank(&(&z + &g.scale(1.0 / lip)), r)?;
        }
    }
    let obj = fit_norm(&residual(map, y, &z)?, norm);
    Ok((z, obj))
}

/// Brute-force decoder: the best data fit over all supports of size `s`.
///
/// For `r >= s` each per-support fit is exact least squares (or least
/// absolute deviations); for `r < s` the rank constraint is handled by
/// projected-gradient polishing, which is exact only at zero residual.
pub fn brute_force_decode(
    map: &MeasurementMap,
    y: &[f64],
    s: usize,
    r: usize,
    norm: DecodeNorm,
) -> Result<RecoveryResult> {
    let n = map.n();
    check_y(map, y)?;
    check_structure_params(n, s, r)?;
    let count = binomial(n, s);
    if count > DEFAULT_ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            count,
            cap: DEFAULT_ENUMERATION_CAP,
            hint: "use iht_head_tail for larger problems".into(),
        });
    }
    let unknowns = s * (s + 1) / 2;
    if unknowns > map.m() {
        return Err(Error::Parameter(format!(
            "each support has {unknowns} unknowns but only {} measurements",
            map.m()
        )));
    }
    let (features, pairs) = symmetric_features(map)?;
    let candidates = subsets(n, s);
    let fits: Vec<(SymMatrix, f64)> = candidates
        .par_iter()
        .map(|sup| fit_support(map, y, &features, &pairs, sup, r, norm))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, (_, obj)) in fits.iter().enumerate() {
        if *obj < fits[best].1 {
            best = k;
        }
    }
    let (estimate, obj) = fits.into_iter().nth(best).expect("at least one support");
    let residual_norm = norm2(&residual(map, y, &estimate)?);
    log::debug!("brute-force best objective {obj:e} on support {}", candidates[best]);
    Ok(RecoveryResult {
        support: estimate.nonzero_support(),
        estimate,
        iterations: 1,
        residual_trace: vec![residual_norm],
        converged: true,
        stop: StopReason::Exhaustive,
    })
}

/// The recovery algorithms by name, as used by the benchmark harness and the
/// command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    ExactIht,
    HeadTail,
    RankOne,
    TwoStep,
    Brute,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Self::ExactIht,
        Self::HeadTail,
        Self::RankOne,
        Self::TwoStep,
        Self::Brute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ExactIht => "exact-iht",
            Self::HeadTail => "head-tail",
            Self::RankOne => "rank-one",
            Self::TwoStep => "two-step",
            Self::Brute => "brute",
        }
    }

    /// Whether the algorithm can run on maps of the given kind.
    pub fn accepts(self, kind: MeasurementKind) -> bool {
        match self {
            Self::RankOne => kind == MeasurementKind::RankOne,
            Self::TwoStep => kind == MeasurementKind::Factorized,
            Self::ExactIht | Self::HeadTail | Self::Brute => true,
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown algorithm `{s}`")))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Runs `algo` on `(map, y)`. The brute-force decoder fits in the l2 norm.
pub fn recover(
    algo: Algorithm,
    map: &MeasurementMap,
    y: &[f64],
    s: usize,
    r: usize,
    cfg: &RecoveryConfig,
) -> Result<RecoveryResult> {
    match algo {
        Algorithm::ExactIht => iht_exact(map, y, s, r, cfg),
        Algorithm::HeadTail => iht_head_tail(map, y, s, r, cfg),
        Algorithm::RankOne => iht_rank_one(map, y, s, r, cfg),
        Algorithm::TwoStep => two_step_factorized(map, y, s, r, cfg),
        Algorithm::Brute => brute_force_decode(map, y, s, r, DecodeNorm::L2),
    }
}
