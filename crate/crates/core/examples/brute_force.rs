//! Exhaustive decoding over all size-`s` supports, in the least-squares and
//! least-absolute-deviation norms, on clean data and on data with one
//! grossly corrupted measurement.
//!
//! ```text
//! cargo run --release --example brute_force
//! ```

use bisparse::measurements::MapSpec;
use bisparse::recovery::{brute_force_decode, DecodeNorm};
use bisparse::sampling::{rng_from_seed, sample_structured};
use bisparse::{MeasurementKind, MeasurementMap, Result};

fn main() -> Result<()> {
    let (n, s, r, m) = (8, 2, 2, 30);
    let (x, support) = sample_structured(n, s, r, &mut rng_from_seed(9))?;
    let map = MeasurementMap::sample(&MapSpec::new(MeasurementKind::DenseGaussian, n, m, 10))?;
    let clean = map.apply(&x)?;
    let mut corrupted = clean.clone();
    corrupted[4] += 5.0;

    println!("true support {:?}\n", support.indices());
    for (label, y) in [("clean", &clean), ("one outlier", &corrupted)] {
        for norm in [DecodeNorm::L2, DecodeNorm::L1] {
            let res = brute_force_decode(&map, y, s, r, norm)?;
            println!(
                "{label:<12} {norm:?}: support {:?}, relative error {:.2e}",
                res.support.indices(),
                res.relative_error(&x)
            );
        }
    }
    Ok(())
}
