//! Two hexagonal layers with a relative twist: basis size and the low
//! spectrum at small cutoffs.
//!
//! `cargo run --release --example twisted_bilayer_2d`

use std::f64::consts::PI;

use incomm_pw::lattice::{build_basis, IncommensuratePair, Lattice};
use incomm_pw::operator::{assemble, eigensolve};
use incomm_pw::potential::screened_coulomb;

fn main() -> incomm_pw::Result<()> {
    let pair = IncommensuratePair::new(Lattice::hexagonal(2.0, 0.0)?, Lattice::hexagonal(2.0, PI / 10.0)?)?;
    for ec in [10.0, 20.0, 40.0] {
        let basis = build_basis(&pair, ec)?;
        let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 4.0 * ec)?;
        let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 4.0 * ec)?;
        let r = eigensolve(&assemble(&basis, &v1, &v2, [0.0, 0.0])?, Some(6))?;
        let low: Vec<String> = r.eigenvalues.iter().map(|l| format!("{l:.5}")).collect();
        println!("Ec = {ec:>4}: N_c = {:>5}, lowest [{}]", basis.len(), low.join(", "));
    }
    Ok(())
}
