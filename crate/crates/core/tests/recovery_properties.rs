//! Seeded property checks for the recovery algorithms beyond the acceptance gate.

mod common;

use bisparse::measurements::{FactorInner, MapSpec, MeasurementKind, MeasurementMap};
use bisparse::projections::tail_joint;
use bisparse::recovery::{
    brute_force_decode, hihtp, iht_exact, iht_head_tail, iht_lowrank, two_step_factorized, DecodeNorm,
    HeadChoice, RecoveryConfig,
};
use bisparse::symcore::restrict;
use bisparse::{SupportSet, SymMatrix};
use common::*;

fn dense_map(n: usize, m: usize, seed: u64) -> MeasurementMap {
    MeasurementMap::sample(&MapSpec::new(MeasurementKind::DenseGaussian, n, m, seed)).unwrap()
}

fn low_rank(p: usize, r: usize, rng: &mut rand_chacha::ChaCha8Rng) -> SymMatrix {
    let g = gaussian(p, p, rng);
    let y = rank_r(&((&g + g.transpose()) * 0.5), r);
    SymMatrix::new(&y / y.norm()).unwrap()
}

fn lowrank_successes(cfg: &RecoveryConfig) -> usize {
    let (p, r) = (16, 2);
    (0..50u64)
        .filter(|&t| {
            let mut rng = rng(200 + t);
            let y_true = low_rank(p, r, &mut rng);
            let map = dense_map(p, 6 * r * p, 2_000 + t);
            let res = iht_lowrank(&map, &map.apply(&y_true).unwrap(), r, cfg).unwrap();
            rel_error(&res.estimate, &y_true) <= 1e-6
        })
        .count()
}

/// p=16, r=2, m=6rp. The unit step reaches 44/50 at these seeds (three runs
/// diverge, three are still converging at 500 iterations); the normalized
/// step recovers at least 90%.
#[test]
fn lowrank_iht_recovers_rank_two_sketches() {
    let unit = lowrank_successes(&RecoveryConfig::default());
    assert!(unit >= 42, "unit step {unit}/50");
    let normalized = lowrank_successes(&RecoveryConfig { normalized_step: true, ..RecoveryConfig::default() });
    assert!(normalized >= 45, "normalized step {normalized}/50");
}

#[test]
fn hihtp_recovers_from_exact_sketches() {
    let (n, s) = (40, 3);
    let p = 43;
    let ok = (0..50u64)
        .filter(|&t| {
            let mut rng = rng(400 + t);
            let x = structured(n, s, s, &mut rng);
            let b = gaussian(p, n, &mut rng);
            let sketch = SymMatrix::new(&b * x.as_matrix() * b.transpose()).unwrap();
            let out = hihtp(&b, &sketch, s, s, &RecoveryConfig::default()).unwrap();
            rel_error(&out.estimate, &x) <= 1e-6
        })
        .count();
    assert!(ok >= 45, "{ok}/50");
}

#[test]
fn two_step_of_zero_is_zero() {
    let map = MeasurementMap::sample(&MapSpec::factorized(20, 60, 12, FactorInner::Vectors, 5)).unwrap();
    let res = two_step_factorized(&map, &vec![0.0; 60], 2, 1, &RecoveryConfig::default()).unwrap();
    assert_eq!(res.estimate, SymMatrix::zeros(20));
    assert!(res.support.is_empty());
}

/// Runs with `max_iters = k` reproduce the iterates `X_k`.
fn error_sequence(map: &MeasurementMap, y: &[f64], x: &SymMatrix, k: usize, head_tail: bool) -> Vec<f64> {
    (1..=k)
        .map(|it| {
            let cfg = RecoveryConfig { max_iters: it, ..RecoveryConfig::default() };
            let res = if head_tail {
                iht_head_tail(map, y, 2, 1, &cfg).unwrap()
            } else {
                iht_exact(map, y, 2, 1, &cfg).unwrap()
            };
            (res.estimate.as_matrix() - x.as_matrix()).norm()
        })
        .collect()
}

#[test]
fn noiseless_errors_eventually_decrease() {
    for (t, head_tail) in [(0u64, false), (1, false), (2, true), (3, true)] {
        let mut rng = rng(500 + t);
        let (n, m) = if head_tail { (30, 475) } else { (10, 40) };
        let x = structured(n, 2, 1, &mut rng);
        let map = dense_map(n, m, 5_000 + t);
        let y = map.apply(&x).unwrap();
        let errs = error_sequence(&map, &y, &x, 12, head_tail);
        let tail = &errs[errs.len() / 2..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-12), "{errs:?}");
    }
}

#[test]
fn noise_error_is_bounded_and_linear() {
    let cfg = RecoveryConfig::default();
    let mut checked = 0;
    for t in 0..10u64 {
        let mut rng = rng(600 + t);
        let x = structured(10, 2, 1, &mut rng);
        let map = dense_map(10, 40, 6_000 + t);
        let y = map.apply(&x).unwrap();
        if rel_error(&iht_exact(&map, &y, 2, 1, &cfg).unwrap().estimate, &x) > 1e-6 {
            continue;
        }
        let dir = gaussian(y.len(), 1, &mut rng);
        let dir = &dir / dir.norm();
        let mut per_unit = Vec::new();
        for eps in [1e-4, 1e-3, 1e-2] {
            let e_norm = eps * norm2(&y);
            let noisy: Vec<f64> = y.iter().zip(dir.iter()).map(|(a, d)| a + e_norm * d).collect();
            let est = iht_exact(&map, &noisy, 2, 1, &cfg).unwrap().estimate;
            let err = (est.as_matrix() - x.as_matrix()).norm();
            assert!(err <= 20.0 * e_norm, "eps {eps}: error {err:e} vs ||e|| {e_norm:e}");
            per_unit.push(err / eps);
        }
        let (lo, hi) = per_unit
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(hi <= 3.0 * lo, "non-linear error scaling {per_unit:?}");
        checked += 1;
    }
    assert!(checked >= 8);
}

#[test]
fn tail_joint_ignores_entries_outside_a_superset_of_its_choice() {
    let mut rng = rng(700);
    let mut checked = 0;
    for _ in 0..200 {
        let m = random_sym(9, &mut rng);
        let t = tail_joint(&m, 3, 2).unwrap();
        let extra = rand::seq::index::sample(&mut rng, 9, 3).into_vec();
        let sprime = t.support.union(&SupportSet::new(extra, 9).unwrap());
        let restricted = tail_joint(&restrict(&m, &sprime).unwrap(), 3, 2).unwrap();
        if restricted.support.is_subset_of(&sprime) && restricted.support == t.support {
            assert!((restricted.matrix.as_matrix() - t.matrix.as_matrix()).amax() < 1e-10);
            checked += 1;
        }
    }
    assert!(checked > 20, "only {checked} applicable instances");
}

#[test]
fn other_heads_also_recover_at_generous_m() {
    for head in [HeadChoice::Anchor, HeadChoice::RowCol] {
        let cfg = RecoveryConfig { head_choice: head, ..RecoveryConfig::default() };
        let ok = (0..10u64)
            .filter(|&t| {
                let mut rng = rng(800 + t);
                let x = structured(20, 2, 1, &mut rng);
                let map = dense_map(20, 400, 8_000 + t);
                let res = iht_head_tail(&map, &map.apply(&x).unwrap(), 2, 1, &cfg).unwrap();
                rel_error(&res.estimate, &x) <= 1e-6
            })
            .count();
        assert!(ok >= 8, "{head}: {ok}/10");
    }
}

#[test]
fn brute_force_l1_resists_a_gross_outlier() {
    let mut rng = rng(900);
    let x = structured(8, 2, 2, &mut rng);
    let map = dense_map(8, 30, 9_000);
    let mut y = map.apply(&x).unwrap();
    y[4] += 5.0;
    let l1 = brute_force_decode(&map, &y, 2, 2, DecodeNorm::L1).unwrap();
    let l2 = brute_force_decode(&map, &y, 2, 2, DecodeNorm::L2).unwrap();
    assert!(rel_error(&l1.estimate, &x) < 1e-4, "{}", rel_error(&l1.estimate, &x));
    assert!(rel_error(&l2.estimate, &x) > rel_error(&l1.estimate, &x));
}
