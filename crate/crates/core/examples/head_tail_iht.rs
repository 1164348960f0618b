//! Head–tail IHT at a size where enumeration is out of reach (n = 30, s = 2),
//! comparing the three head choices.
//!
//! ```text
//! cargo run --release --example head_tail_iht
//! ```

use bisparse::measurements::MapSpec;
use bisparse::recovery::iht_head_tail;
use bisparse::sampling::{derive_seed, rng_from_seed, sample_structured};
use bisparse::{HeadChoice, MeasurementKind, MeasurementMap, RecoveryConfig, Result};

/// Relative Frobenius error counted as exact recovery.
const SUCCESS_TOL: f64 = 1e-6;
const TRIALS: u64 = 20;

fn main() -> Result<()> {
    let (n, s, r) = (30, 2, 1);
    for m in [240, 475] {
        for head in [HeadChoice::Square, HeadChoice::Anchor, HeadChoice::RowCol] {
            let cfg = RecoveryConfig { head_choice: head, ..RecoveryConfig::default() };
            let mut ok = 0;
            let mut iters = 0;
            for t in 0..TRIALS {
                let seed = derive_seed(200, &[m as u64, t]);
                let (x, _) = sample_structured(n, s, r, &mut rng_from_seed(seed))?;
                let map = MeasurementMap::sample(&MapSpec::new(MeasurementKind::DenseGaussian, n, m, seed ^ 1))?;
                let res = iht_head_tail(&map, &map.apply(&x)?, s, r, &cfg)?;
                if res.relative_error(&x) <= SUCCESS_TOL {
                    ok += 1;
                    iters += res.iterations;
                }
            }
            let mean = if ok > 0 { iters as f64 / ok as f64 } else { f64::NAN };
            println!("m = {m:>3}  head {head:<7} recovered {ok:>2}/{TRIALS}  mean iterations {mean:.1}");
        }
    }
    Ok(())
}
