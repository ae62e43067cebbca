//! Composite basis growth and how evenly `k + G₁ₘ + G₂ₙ` fills a reciprocal cell.
//!
//! `cargo run --release --example basis_ergodicity`

use std::f64::consts::PI;

use incomm_pw::lattice::{build_basis, uniformity_discrepancy, IncommensuratePair, Lattice};
use incomm_pw::spectrum::ReferenceCounts;

fn main() -> incomm_pw::Result<()> {
    let pair = IncommensuratePair::new(Lattice::chain(1.0)?, Lattice::chain(PI / 2.0)?)?;
    println!("{:>6} {:>6} {:>6} {:>6} {:>12} {:>10}", "Ec", "N_c", "N1", "N2", "Nbar/sqrtNc", "discrep.");
    for ec in [50.0, 200.0, 500.0, 1000.0, 2000.0] {
        let basis = build_basis(&pair, ec)?;
        let counts = ReferenceCounts::of(&basis, [0.0, 0.0]);
        let nbar = 0.5 * (counts.n1 as f64 * pair.lat1.reciprocal_cell_volume()
            + counts.n2 as f64 * pair.lat2.reciprocal_cell_volume());
        println!(
            "{:>6} {:>6} {:>6} {:>6} {:>12.4} {:>10.4}",
            ec,
            basis.len(),
            counts.n1,
            counts.n2,
            nbar / (basis.len() as f64).sqrt(),
            uniformity_discrepancy(&basis, &pair.lat1, 8)?
        );
    }
    Ok(())
}
