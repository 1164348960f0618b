//! Monte-Carlo restricted-isometry estimates for the structured set: `l2`
//! deviation for dense Gaussian maps and the `l1` ratio `beta/alpha` for
//! rank-one maps, both shrinking as `m` grows.
//!
//! ```text
//! cargo run --release --example rip_estimate
//! ```

use bisparse::measurements::{check_rip_cross_term, estimate_rip, MapSpec};
use bisparse::{MeasurementKind, MeasurementMap, Result, RipMode};

const PROBES: usize = 400;

fn main() -> Result<()> {
    let (n, s, r) = (20, 3, 1);
    println!("{:>5} {:>12} {:>14}", "m", "delta (l2)", "beta/alpha (l1)");
    for m in [100, 200, 400, 800] {
        let dense = MeasurementMap::sample(&MapSpec::new(MeasurementKind::DenseGaussian, n, m, m as u64))?;
        let rank_one = MeasurementMap::sample(&MapSpec::new(MeasurementKind::RankOne, n, m, m as u64 + 1))?;
        let l2 = estimate_rip(&dense, s, r, PROBES, RipMode::L2, 1)?;
        let l1 = estimate_rip(&rank_one, s, r, PROBES, RipMode::L1, 2)?;
        println!("{m:>5} {:>12.3} {:>14.3}", l2.delta_lower, l1.condition_ratio());
    }

    // Cross terms between pairs of structured matrices stay below the
    // estimated constant at twice the sparsity and rank.
    let map = MeasurementMap::sample(&MapSpec::new(MeasurementKind::DenseGaussian, n, 400, 3))?;
    let delta = estimate_rip(&map, 2 * s, 2 * r, PROBES, RipMode::L2, 4)?.delta_lower;
    let report = check_rip_cross_term(&map, s, r, 200, delta, 5)?;
    println!(
        "\ncross terms at m = 400: worst {:.3} vs delta {:.3} -> within = {}",
        report.worst_ratio, report.delta, report.within
    );
    Ok(())
}
