//! IHT with the exact (enumerating) projection on small problems: recovers
//! a bisparse rank-one matrix from dense Gaussian measurements, then repeats
//! with measurement noise.
//!
//! ```text
//! cargo run --release --example exact_iht
//! ```

use bisparse::measurements::MapSpec;
use bisparse::recovery::iht_exact;
use bisparse::sampling::{derive_seed, gaussian_matrix, rng_from_seed, sample_structured};
use bisparse::{MeasurementKind, MeasurementMap, RecoveryConfig, Result};

/// Relative Frobenius error counted as exact recovery.
const SUCCESS_TOL: f64 = 1e-6;
const TRIALS: u64 = 20;

fn main() -> Result<()> {
    let (n, s, r, m) = (10, 2, 1, 40);
    let cfg = RecoveryConfig::default();

    let mut rng = rng_from_seed(1);
    let (x, support) = sample_structured(n, s, r, &mut rng)?;
    let map = MeasurementMap::sample(&MapSpec::new(MeasurementKind::DenseGaussian, n, m, 2))?;
    let res = iht_exact(&map, &map.apply(&x)?, s, r, &cfg)?;
    println!("true support {:?}, recovered {:?}", support.indices(), res.support.indices());
    println!(
        "stopped by {:?} after {} iterations, relative error {:.2e}",
        res.stop,
        res.iterations,
        res.relative_error(&x)
    );
    let trace: Vec<String> = res.residual_trace.iter().take(8).map(|v| format!("{v:.1e}")).collect();
    println!("first residuals: {}\n", trace.join(" "));

    for noise in [0.0, 1e-3, 1e-2] {
        let mut ok = 0;
        let mut worst = 0.0f64;
        for t in 0..TRIALS {
            let seed = derive_seed(100, &[t]);
            let mut rng = rng_from_seed(seed);
            let (x, _) = sample_structured(n, s, r, &mut rng)?;
            let map = MeasurementMap::sample(&MapSpec::new(MeasurementKind::DenseGaussian, n, m, seed ^ 1))?;
            let mut y = map.apply(&x)?;
            let e = gaussian_matrix(m, 1, noise / (m as f64).sqrt(), &mut rng);
            y.iter_mut().zip(e.iter()).for_each(|(v, d)| *v += d);
            let err = iht_exact(&map, &y, s, r, &cfg)?.relative_error(&x);
            worst = worst.max(err);
            ok += usize::from(err <= SUCCESS_TOL.max(10.0 * noise));
        }
        println!("noise {noise:>6}: {ok}/{TRIALS} within tolerance, worst relative error {worst:.2e}");
    }
    Ok(())
}
