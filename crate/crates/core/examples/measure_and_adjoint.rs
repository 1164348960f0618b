//! Sampling each measurement ensemble, applying it, and checking the adjoint
//! identity `<A(X), u> = <X, A*(u)>`.
//!
//! ```text
//! cargo run --example measure_and_adjoint
//! ```

use bisparse::measurements::{FactorInner, MapSpec};
use bisparse::sampling::{gaussian_matrix, rng_from_seed, sample_structured};
use bisparse::{MeasurementKind, MeasurementMap, Result};

fn main() -> Result<()> {
    let (n, m) = (12, 60);
    let mut rng = rng_from_seed(11);
    let (x, support) = sample_structured(n, 2, 1, &mut rng)?;
    println!("X: n = {n}, support {:?}, ||X||_F = {:.3}\n", support.indices(), x.frob_norm());

    let specs = [
        MapSpec::new(MeasurementKind::DenseGaussian, n, m, 2),
        MapSpec::new(MeasurementKind::RankOne, n, m, 3),
        MapSpec::factorized(n, m, 8, FactorInner::Matrices, 4),
        MapSpec::factorized(n, m, 8, FactorInner::Vectors, 5),
    ];
    let u: Vec<f64> = gaussian_matrix(m, 1, 1.0, &mut rng).iter().copied().collect();
    for spec in &specs {
        let map = MeasurementMap::sample(spec)?;
        let y = map.apply(&x)?;
        let lhs: f64 = y.iter().zip(&u).map(|(a, b)| a * b).sum();
        let rhs = x.as_matrix().dot(map.adjoint(&u)?.as_matrix());
        let energy = y.iter().map(|v| v * v).sum::<f64>();
        println!(
            "{:<15} ||A(X)||^2 = {energy:.3}   adjoint mismatch = {:.1e}",
            map.kind().as_str(),
            (lhs - rhs).abs()
        );
    }

    // A map header is enough to regenerate the same operator.
    let header = specs[1].to_header();
    let again = MeasurementMap::sample(&MapSpec::from_header(&header)?)?;
    println!("\nheader:\n{header}");
    println!("regenerated map reproduces y: {}", again.apply(&x)? == MeasurementMap::sample(&specs[1])?.apply(&x)?);
    Ok(())
}
