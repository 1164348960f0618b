//! A small phase-transition sweep driven by a key/value spec, written as
//! per-trial CSV plus a per-cell summary. The same text is what
//! `bisparse bench --spec` reads.
//!
//! ```text
//! cargo run --release --example phase_transition
//! ```

use bisparse::bench::{run_phase_transition, ExperimentSpec};
use bisparse::Result;

const SPEC: &str = "\
algo = head-tail
ensemble = dense-gaussian
n = 20
s = 2
r = 1
# multiples of r s ln(e n / s)
m = 1x, 2x, 4x, 8x
trials_per_cell = 10
success_tol = 1e-6
base_seed = 42
";

fn main() -> Result<()> {
    let spec = ExperimentSpec::parse(SPEC)?;
    let run = run_phase_transition(&spec)?;
    println!("{}", run.summary.iter().map(|c| format!("m = {:>4}: success {:.2}", c.cell.m, c.success_rate())).collect::<Vec<_>>().join("\n"));
    println!("\nfirst rows of the trial CSV:");
    for line in run.to_csv().lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
