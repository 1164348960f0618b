//! Two-step recovery for factorized measurements `A(B X B^T)`: a low-rank
//! stage recovers the sketch `B X B^T`, then HiHTP pulls `X` out of it.
//!
//! ```text
//! cargo run --release --example two_step_sketch
//! ```

use bisparse::bench::default_sketch_size;
use bisparse::measurements::{FactorInner, MapSpec};
use bisparse::recovery::{factorized_low_rank_stage, hihtp, two_step_factorized};
use bisparse::sampling::{derive_seed, rng_from_seed, sample_structured};
use bisparse::{MeasurementMap, RecoveryConfig, Result, SymMatrix};

/// Relative Frobenius error counted as exact recovery.
const SUCCESS_TOL: f64 = 1e-6;
const TRIALS: u64 = 20;

fn rel(a: &SymMatrix, b: &SymMatrix) -> f64 {
    (a.as_matrix() - b.as_matrix()).norm() / b.frob_norm()
}

fn main() -> Result<()> {
    let (n, s, r) = (40, 3, 1);
    let p = default_sketch_size(n, s);
    let m = 6 * r * p;
    println!("n = {n}, s = {s}, sketch size p = {p}, m = {m}\n");

    for (label, normalized_step) in [("unit step", false), ("normalized step", true)] {
        let cfg = RecoveryConfig { normalized_step, ..RecoveryConfig::default() };
        let (mut sketch_ok, mut full_ok) = (0, 0);
        for t in 0..TRIALS {
            let seed = derive_seed(400, &[t]);
            let (x, _) = sample_structured(n, s, r, &mut rng_from_seed(seed))?;
            let map = MeasurementMap::sample(&MapSpec::factorized(n, m, p, FactorInner::Matrices, seed ^ 1))?;
            let y = map.apply(&x)?;
            let b = map.factor().expect("factorized map");
            let sketch = SymMatrix::new(b * x.as_matrix() * b.transpose())?;
            let stage = factorized_low_rank_stage(&map, &y, r, &cfg)?;
            sketch_ok += usize::from(stage.relative_error(&sketch) <= SUCCESS_TOL);
            full_ok += usize::from(two_step_factorized(&map, &y, s, r, &cfg)?.relative_error(&x) <= SUCCESS_TOL);
        }
        println!("{label:<16} sketch recovered {sketch_ok:>2}/{TRIALS}, X recovered {full_ok:>2}/{TRIALS}");
    }

    // HiHTP alone, handed the exact sketch.
    let (x, _) = sample_structured(n, s, r, &mut rng_from_seed(5))?;
    let map = MeasurementMap::sample(&MapSpec::factorized(n, m, p, FactorInner::Matrices, 6))?;
    let b = map.factor().expect("factorized map");
    let out = hihtp(b, &SymMatrix::new(b * x.as_matrix() * b.transpose())?, s, s, &RecoveryConfig::default())?;
    println!("\nHiHTP from the exact sketch: relative error {:.2e}", rel(&out.estimate, &x));
    Ok(())
}
