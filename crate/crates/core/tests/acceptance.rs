//! Acceptance gate: one test per criterion, each printing a single
//! `[acceptance] criterion N PASS|FAIL` line before asserting.
//!
//! Tolerances and Monte-Carlo thresholds are pinned below. Trial seeds are
//! fixed, so every statistical check is deterministic; pilot rates observed
//! at these seeds are noted next to each threshold.

mod common;

use std::time::Instant;

use bisparse::bench::{run_to_csv, ExperimentSpec};
use bisparse::measurements::{
    check_rip_cross_term, estimate_rip, FactorInner, MapSpec, MeasurementKind, MeasurementMap, RipMode,
};
use bisparse::projections::{
    exact_project, head_anchor, head_joint, head_psd_lowrank, head_rowcol, head_shrink, head_square,
    tail_bisparse, tail_joint,
};
use bisparse::recovery::{hihtp, iht_exact, iht_head_tail, iht_rank_one, two_step_factorized, RecoveryConfig};
use bisparse::symcore::restrict;
use bisparse::{SupportSet, SymMatrix};
use common::*;
use itertools::Itertools;

// ───────────────────────────────────────────────────────────────
// Pinned tolerances
// ───────────────────────────────────────────────────────────────

/// Distances compared between two evaluations of the same quantity.
const EXACT_TOL: f64 = 1e-10;
/// Slack on the tail-constant inequalities.
const TAIL_SLACK: f64 = 1e-10;
/// Relative Frobenius error counted as exact recovery.
const RECOVERY_TOL: f64 = 1e-6;
/// Relative error counted as success for the sign-modified rank-one IHT.
const RANK_ONE_TOL: f64 = 1e-3;
/// Allowance on the cross-term ratio over the estimated constant.
const CROSS_TERM_SLACK: f64 = 0.05;
/// Two-sided 95% normal quantile for the two-proportion monotonicity test.
const Z_95: f64 = 1.96;

const TRIALS: u64 = 50;

fn rate(successes: usize, trials: usize) -> f64 {
    successes as f64 / trials as f64
}

/// `true` unless `p_low` exceeds `p_high` by more than the pooled
/// two-proportion standard error allows at 95%.
fn not_significantly_lower(p_low: f64, p_high: f64, trials: usize) -> bool {
    let pooled = 0.5 * (p_low + p_high);
    let se = (pooled * (1.0 - pooled) * 2.0 / trials as f64).sqrt();
    p_low - p_high <= Z_95 * se
}

// ───────────────────────────────────────────────────────────────
// Projection criteria
// ───────────────────────────────────────────────────────────────

#[test]
fn criterion_01_exact_projection_oracle() {
    let start = Instant::now();
    let mut rng = rng(101);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let m = random_sym(8, &mut rng);
        let out = exact_project(&m, 3, 2).unwrap();
        let dist = (m.as_matrix() - out.matrix.as_matrix()).norm();
        worst = worst.max(dist - min_joint_residual(&m, 3, 2));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= EXACT_TOL && secs < 10.0;
    report(1, "exact projection attains the enumerated minimum", pass, &format!("max excess {worst:.2e}, {secs:.2}s"));
    assert!(pass);
}

#[test]
fn criterion_02_square_head_has_unit_constant() {
    let mut rng = rng(102);
    let mut violations = 0;
    let mut oversize = 0;
    for k in 0..1000 {
        let s = 2 + k % 2;
        let m = random_sym(10, &mut rng);
        let h = head_square(&m, s).unwrap();
        let idx = h.support.indices();
        // the output is M on S' x S'
        assert_eq!(h.matrix.as_matrix(), &on_support(&m, idx));
        if block_energy(&m, idx) < max_block_energy(&m, s) {
            violations += 1;
        }
        if idx.len() > s * s {
            oversize += 1;
        }
    }
    let pass = violations == 0 && oversize == 0;
    report(2, "head_square: ||M_S'||^2 >= max_S ||M_S||^2, |S'| <= s^2", pass, &format!("{violations} violations, {oversize} oversize of 1000"));
    assert!(pass);
}

#[test]
fn criterion_03_head_constants() {
    let mut rng = rng(103);
    let mut failures = [0usize; 4];
    for k in 0..500 {
        let n = 8 + k % 3;
        let s = 2 + k % 2;
        let r = 1 + (k / 2) % 2;
        let m = random_sym(n, &mut rng);
        let best = max_block_energy(&m, s);

        // bisparse heads return M on T x T: measure them with the oracle's sum
        let anchor = head_anchor(&m, s).unwrap();
        if block_energy(&m, anchor.support.indices()) < best / s as f64 {
            failures[0] += 1;
        }
        let rowcol = head_rowcol(&m, s).unwrap();
        if block_energy(&m, rowcol.support.indices()) < (s as f64 / n as f64) * best {
            failures[1] += 1;
        }
        let psd = random_psd(n, r, &mut rng);
        let head = head_psd_lowrank(&psd, s, None).unwrap();
        if block_energy(&psd, head.support.indices()) < max_block_energy(&psd, s) / r as f64 {
            failures[2] += 1;
        }
        let joint = head_joint(&m, s, r).unwrap();
        if joint.matrix.frob_norm_sq() < (r as f64 / (s * s) as f64) * max_joint_energy(&m, s, r) {
            failures[3] += 1;
        }
    }
    let pass = failures.iter().all(|&f| f == 0);
    report(
        3,
        "head constants: anchor 1/s, rowcol s/n, psd 1/r, joint r/s^2",
        pass,
        &format!("violations anchor={} rowcol={} psd={} joint={} of 500", failures[0], failures[1], failures[2], failures[3]),
    );
    assert!(pass);
}

#[test]
fn criterion_04_tail_constants() {
    let mut rng = rng(104);
    let (mut bis, mut joint) = (0, 0);
    for k in 0..500 {
        let n = 8 + k % 3;
        let s = 2 + k % 2;
        let r = 1 + (k / 2) % 2;
        let m = random_sym(n, &mut rng);
        let t = tail_bisparse(&m, s).unwrap();
        let res = (m.as_matrix() - t.matrix.as_matrix()).norm();
        if res > 2f64.sqrt() * min_bisparse_residual(&m, s) + TAIL_SLACK {
            bis += 1;
        }
        let t = tail_joint(&m, s, r).unwrap();
        let res = (m.as_matrix() - t.matrix.as_matrix()).norm();
        let exact = exact_project(&m, s, r).unwrap();
        let best = (m.as_matrix() - exact.matrix.as_matrix()).norm();
        if res > (1.0 + 2.0 * 2f64.sqrt()) * best + TAIL_SLACK {
            joint += 1;
        }
    }
    let pass = bis == 0 && joint == 0;
    report(4, "tail constants: bisparse sqrt2, joint 1+2sqrt2", pass, &format!("violations bisparse={bis} joint={joint} of 500"));
    assert!(pass);
}

#[test]
fn criterion_05_head_shrink_bound() {
    let mut rng = rng(105);
    let mut violations = 0;
    for _ in 0..500 {
        let m = random_sym(12, &mut rng);
        let picked = rand::seq::index::sample(&mut rng, 12, 8).into_vec();
        let sprime = SupportSet::new(picked, 12).unwrap();
        let out = head_shrink(&m, &sprime, 4).unwrap();
        assert!(out.rows.is_subset_of(&sprime) && out.cols.is_subset_of(&sprime));
        assert!(out.rows.len() == 2 && out.cols.len() == 2);
        let cross: f64 = out
            .rows
            .iter()
            .cartesian_product(out.cols.iter().collect::<Vec<_>>())
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum();
        let c = 8.0 / 4.0;
        if cross < block_energy(&m, sprime.indices()) / (4.0 * c * c) {
            violations += 1;
        }
    }
    let pass = violations == 0;
    report(5, "head_shrink: ||M_RxC||^2 >= ||M_S'||^2 / (4C^2)", pass, &format!("{violations} violations of 500"));
    assert!(pass);
}

#[test]
fn criterion_06_restriction_property() {
    let mut rng = rng(106);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..100 {
        let m = random_sym(7, &mut rng);
        let full = exact_project(&m, 2, 1).unwrap();
        let star = full.support.indices().to_vec();
        let rest: Vec<usize> = (0..7).filter(|i| !star.contains(i)).collect();
        for extra in rest.iter().copied().powerset() {
            let mut idx = star.clone();
            idx.extend(extra);
            let sprime = SupportSet::new(idx, 7).unwrap();
            let restricted = exact_project(&restrict(&m, &sprime).unwrap(), 2, 1).unwrap();
            worst = worst.max((restricted.matrix.as_matrix() - full.matrix.as_matrix()).amax());
            checked += 1;
        }
    }
    let pass = worst <= EXACT_TOL;
    report(6, "exact_project(M) == exact_project(M restricted to S' >= S*)", pass, &format!("{checked} supersets, max diff {worst:.2e}"));
    assert!(pass);
}

// ───────────────────────────────────────────────────────────────
// Recovery criteria
// ───────────────────────────────────────────────────────────────

fn dense_map(n: usize, m: usize, seed: u64) -> MeasurementMap {
    MeasurementMap::sample(&MapSpec::new(MeasurementKind::DenseGaussian, n, m, seed)).unwrap()
}

/// Pilot at these seeds: 50/50 noiseless, 50/50 noisy-converged within bound.
#[test]
fn criterion_07_idealized_iht() {
    const MIN_RATE: f64 = 0.90;
    const NOISE_FACTOR: f64 = 20.0;
    let start = Instant::now();
    let cfg = RecoveryConfig::default();
    let (mut exact, mut converged, mut within) = (0, 0, 0);
    for t in 0..TRIALS {
        let mut rng = rng(7_000 + t);
        let x = structured(10, 2, 1, &mut rng);
        let map = dense_map(10, 40, 70_000 + t);
        let y = map.apply(&x).unwrap();
        let res = iht_exact(&map, &y, 2, 1, &cfg).unwrap();
        if rel_error(&res.estimate, &x) <= RECOVERY_TOL {
            exact += 1;
        }
        let e = gaussian(y.len(), 1, &mut rng);
        let e_norm = 1e-3 * norm2(&y);
        let e: Vec<f64> = e.iter().map(|v| v * e_norm / e.norm()).collect();
        let noisy: Vec<f64> = y.iter().zip(&e).map(|(a, b)| a + b).collect();
        let res = iht_exact(&map, &noisy, 2, 1, &cfg).unwrap();
        if res.converged {
            converged += 1;
            if (res.estimate.as_matrix() - x.as_matrix()).norm() <= NOISE_FACTOR * norm2(&e) {
                within += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let (p_exact, p_noise) = (rate(exact, TRIALS as usize), rate(within, converged.max(1)));
    let pass = p_exact >= MIN_RATE && converged > 0 && p_noise >= MIN_RATE && secs < 60.0;
    report(
        7,
        "idealized IHT n=10 s=2 r=1 m=40",
        pass,
        &format!("noiseless {exact}/{TRIALS}, noisy within 20||e|| {within}/{converged} converged, {secs:.2}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_cross_term_bound() {
    let map = dense_map(16, 150, 8_001);
    let delta = estimate_rip(&map, 4, 2, 1000, RipMode::L2, 8_002).unwrap().delta_lower;
    let report_ = check_rip_cross_term(&map, 2, 1, 1000, delta + CROSS_TERM_SLACK, 8_003).unwrap();
    let pass = report_.pairs == 1000 && report_.worst_ratio <= delta + CROSS_TERM_SLACK;
    report(
        8,
        "cross-term ratio <= delta_hat(2s,2r) + 0.05",
        pass,
        &format!("worst {:.4}, delta_hat {delta:.4}", report_.worst_ratio),
    );
    assert!(pass);
}

fn head_tail_successes(m: usize, seed_base: u64) -> usize {
    let cfg = RecoveryConfig::default();
    (0..TRIALS)
        .filter(|&t| {
            let mut rng = rng(seed_base + t);
            let x = structured(30, 2, 1, &mut rng);
            let map = dense_map(30, m, 10 * seed_base + t);
            let y = map.apply(&x).unwrap();
            let res = iht_head_tail(&map, &y, 2, 1, &cfg).unwrap();
            rel_error(&res.estimate, &x) <= RECOVERY_TOL
        })
        .count()
}

/// m = ceil(8 r (2s)^2 ln(en/s)) = 475 for n=30, s=2, r=1.
/// Pilot at these seeds: 50/50 at each of 0.5x, 1x and 2x.
#[test]
fn criterion_09_head_tail_iht() {
    const MIN_RATE: f64 = 0.80;
    let m = (8.0 * 16.0 * (1.0 + 15f64.ln())).ceil() as usize;
    assert_eq!(m, 475);
    let counts: Vec<usize> = [m.div_ceil(2), m, 2 * m]
        .iter()
        .map(|&mm| head_tail_successes(mm, 9_000))
        .collect();
    let rates: Vec<f64> = counts.iter().map(|&c| rate(c, TRIALS as usize)).collect();
    let monotone = rates
        .windows(2)
        .all(|w| not_significantly_lower(w[0], w[1], TRIALS as usize));
    let pass = rates[1] >= MIN_RATE && monotone;
    report(
        9,
        "head-tail IHT n=30 s=2 r=1, square head",
        pass,
        &format!("successes at m={}/{m}/{}: {:?} of {TRIALS}", m.div_ceil(2), 2 * m, counts),
    );
    assert!(pass);
}

/// p = ceil(3 s ln(en/s)) + 10 = 43, m = ceil(6 r p) = 258.
/// Pilot at these seeds: 42/50 full pipeline, 49/50 injected sketch. The
/// misses come from the unit-step low-rank stage stalling or diverging.
#[test]
fn criterion_10_two_step_factorized() {
    const MIN_RATE: f64 = 0.80;
    const MIN_RATE_STAGE_TWO: f64 = 0.95;
    let (n, s, r) = (40, 3, 1);
    let p = (3.0 * s as f64 * (1.0 + (n as f64 / s as f64).ln())).ceil() as usize + 10;
    let m = 6 * r * p;
    assert_eq!((p, m), (43, 258));
    let cfg = RecoveryConfig::default();
    let (mut full, mut stage_two) = (0, 0);
    for t in 0..TRIALS {
        let mut rng = rng(10_000 + t);
        let x = structured(n, s, r, &mut rng);
        let map = MeasurementMap::sample(&MapSpec::factorized(n, m, p, FactorInner::Matrices, 100_000 + t)).unwrap();
        let y = map.apply(&x).unwrap();
        if rel_error(&two_step_factorized(&map, &y, s, r, &cfg).unwrap().estimate, &x) <= RECOVERY_TOL {
            full += 1;
        }
        let b = map.factor().unwrap();
        let sketch = SymMatrix::new(b * x.as_matrix() * b.transpose()).unwrap();
        if rel_error(&hihtp(b, &sketch, s, s, &cfg).unwrap().estimate, &x) <= RECOVERY_TOL {
            stage_two += 1;
        }
    }
    let pass = rate(full, TRIALS as usize) >= MIN_RATE && rate(stage_two, TRIALS as usize) >= MIN_RATE_STAGE_TWO;
    report(
        10,
        "two-step factorized n=40 s=3 r=1 p=43 m=258",
        pass,
        &format!("full pipeline {full}/{TRIALS}, injected sketch {stage_two}/{TRIALS}"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_l1_rip_trend() {
    const PROBES: usize = 500;
    let medians: Vec<f64> = [100usize, 200, 400]
        .iter()
        .map(|&m| {
            let mut ratios: Vec<f64> = (0..5u64)
                .map(|k| {
                    let map = MeasurementMap::sample(&MapSpec::new(MeasurementKind::RankOne, 20, m, 11_000 + k)).unwrap();
                    estimate_rip(&map, 3, 1, PROBES, RipMode::L1, 11_100 + k).unwrap().condition_ratio()
                })
                .collect();
            ratios.sort_by(f64::total_cmp);
            ratios[2]
        })
        .collect();
    let pass = medians.windows(2).all(|w| w[1] < w[0]);
    report(11, "rank-one l1 RIP: median beta/alpha decreases as m doubles", pass, &format!("medians at m=100/200/400: {:.3} {:.3} {:.3}", medians[0], medians[1], medians[2]));
    assert!(pass);
}

/// m = ceil(10 s^2 ln(en/s)) = 140 for n=24, s=2.
/// Pilot: 28/50 at these seeds; 39/50 and 33/50 at two other seed bases.
/// Misses are fixed points of the iteration on a wrong support.
#[test]
fn criterion_12_rank_one_modified_iht() {
    const MIN_RATE: f64 = 0.50;
    let m = (10.0 * 4.0 * (1.0 + 12f64.ln())).ceil() as usize;
    assert_eq!(m, 140);
    let cfg = RecoveryConfig::default();
    let (mut ok, mut symmetric) = (0, 0);
    for t in 0..TRIALS {
        let mut rng = rng(12_000 + t);
        let x = structured(24, 2, 1, &mut rng);
        let map = MeasurementMap::sample(&MapSpec::new(MeasurementKind::RankOne, 24, m, 120_000 + t)).unwrap();
        let y = map.apply(&x).unwrap();
        let res = iht_rank_one(&map, &y, 2, 1, &cfg).unwrap();
        if rel_error(&res.estimate, &x) <= RANK_ONE_TOL {
            ok += 1;
        }
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let mirrored = iht_rank_one(&map, &neg, 2, 1, &cfg).unwrap();
        if mirrored.estimate == res.estimate.scale(-1.0) && mirrored.iterations == res.iterations {
            symmetric += 1;
        }
    }
    let pass = rate(ok, TRIALS as usize) >= MIN_RATE && symmetric == TRIALS as usize;
    report(12, "rank-one modified IHT n=24 s=2 r=1 m=140", pass, &format!("recovered {ok}/{TRIALS}, exact sign symmetry {symmetric}/{TRIALS}"));
    assert!(pass);
}

// ───────────────────────────────────────────────────────────────
// Harness criterion
// ───────────────────────────────────────────────────────────────

const SPECS: [&str; 3] = [
    "algo = head-tail\nensemble = dense-gaussian\nn = 20\ns = 2\nr = 1\nm = 0.5x, 2x, 6x\ntrials_per_cell = 4\nnoise_level = 1e-3\nbase_seed = 13\n",
    "algo = two-step\nensemble = factorized\nn = 20\ns = 2\nr = 1\nm = 2x\ntrials_per_cell = 3\ninner = vectors\nbase_seed = 14\n",
    "algo = rip\nensemble = rank-one\nn = 12\ns = 2\nr = 1\nm = 40, 80\ntrials_per_cell = 3\nprobes = 50\nrip_mode = l1\nbase_seed = 15\n",
];

#[test]
fn criterion_13_bench_determinism() {
    let mut identical = 0;
    for text in SPECS {
        let spec = ExperimentSpec::parse(text).unwrap();
        let first = run_to_csv(&spec).unwrap();
        let second = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_to_csv(&spec).unwrap());
        if first.as_bytes() == second.as_bytes() && first.lines().count() > 1 {
            identical += 1;
        }
    }
    let pass = identical == SPECS.len();
    report(13, "bench CSV byte-identical across reruns and thread counts", pass, &format!("{identical}/{} specs identical", SPECS.len()));
    assert!(pass);
}
