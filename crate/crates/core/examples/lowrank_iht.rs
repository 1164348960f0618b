//! Plain low-rank IHT (no sparsity) on a dense Gaussian map, with the unit
//! step and the normalized tangent-space step.
//!
//! ```text
//! cargo run --release --example lowrank_iht
//! ```

use bisparse::measurements::MapSpec;
use bisparse::recovery::iht_lowrank;
use bisparse::sampling::{derive_seed, rng_from_seed, sample_structured};
use bisparse::{MeasurementKind, MeasurementMap, RecoveryConfig, Result};

/// Relative Frobenius error counted as exact recovery.
const SUCCESS_TOL: f64 = 1e-6;
const TRIALS: u64 = 20;

fn main() -> Result<()> {
    let (p, r) = (16, 2);
    let m = 6 * r * p;
    for (label, normalized_step) in [("unit step", false), ("normalized step", true)] {
        let cfg = RecoveryConfig { normalized_step, ..RecoveryConfig::default() };
        let (mut ok, mut iters) = (0, 0);
        for t in 0..TRIALS {
            let seed = derive_seed(500, &[t]);
            // s = p: a dense rank-r matrix.
            let (y_true, _) = sample_structured(p, p, r, &mut rng_from_seed(seed))?;
            let map = MeasurementMap::sample(&MapSpec::new(MeasurementKind::DenseGaussian, p, m, seed ^ 1))?;
            let res = iht_lowrank(&map, &map.apply(&y_true)?, r, &cfg)?;
            if res.relative_error(&y_true) <= SUCCESS_TOL {
                ok += 1;
                iters += res.iterations;
            }
        }
        println!("{label:<16} recovered {ok:>2}/{TRIALS}, mean iterations {:.1}", iters as f64 / ok.max(1) as f64);
    }
    Ok(())
}
