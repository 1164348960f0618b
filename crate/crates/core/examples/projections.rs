//! Every projection operator applied to one random symmetric matrix, with the
//! support it picks and its objective value.
//!
//! ```text
//! cargo run --example projections
//! ```

use bisparse::projections::{
    exact_project, head_anchor, head_joint, head_psd_lowrank, head_rowcol, head_square, head_square_variant,
    project_hierarchical, tail_bisparse, tail_joint,
};
use bisparse::sampling::{gaussian_matrix, rng_from_seed};
use bisparse::symcore::sym_enforce;
use bisparse::{ProjectionOutcome, Result, SymMatrix};

fn show(name: &str, out: &ProjectionOutcome) {
    println!(
        "{name:<22} support {:?}  rank {}  objective {:.4}",
        out.support.indices(),
        out.rank_used,
        out.objective
    );
}

fn main() -> Result<()> {
    let mut rng = rng_from_seed(7);
    let m = sym_enforce(&gaussian_matrix(8, 8, 1.0, &mut rng))?;
    let (s, r) = (3, 1);
    println!("n = 8, s = {s}, r = {r}, ||M||_F = {:.4}\n", m.frob_norm());

    show("exact (enumeration)", &exact_project(&m, s, r)?);
    show("tail bisparse", &tail_bisparse(&m, s)?);
    // Head operators may land on a larger support than s (up to s^2 or 2s).
    show("tail joint", &tail_joint(&m, s, r)?);
    show("head square", &head_square(&m, s)?);
    show("head row/col", &head_rowcol(&m, s)?);
    show("head anchor", &head_anchor(&m, s)?);
    show("head joint", &head_joint(&m, s, r)?);
    show("head square variant", &head_square_variant(&m, s, r)?);

    // The PSD head only accepts positive semidefinite input.
    let g = gaussian_matrix(8, 2, 1.0, &mut rng);
    let psd = SymMatrix::new(&g * g.transpose())?;
    show("head psd (on G G^T)", &head_psd_lowrank(&psd, s, Some(r))?);

    // Hierarchical: keep s rows, t entries per kept row.
    let b = gaussian_matrix(6, 6, 1.0, &mut rng);
    let h = project_hierarchical(&b, 2, 3)?;
    println!("\nhierarchical (s=2, t=3) keeps {} of 36 entries:\n{h:.3}", h.iter().filter(|v| **v != 0.0).count());
    Ok(())
}
