//! Ion-ion energy of two point-charge chains, split into its Ewald terms,
//! for several splitting parameters and interlayer shifts.
//!
//! `cargo run --release --example ewald_energy`

use std::f64::consts::PI;

use incomm_pw::ewald::{e_ii_breakdown, EwaldParams};
use incomm_pw::lattice::{IncommensuratePair, Lattice};

fn main() -> incomm_pw::Result<()> {
    let base = IncommensuratePair::new(Lattice::chain(1.0)?, Lattice::chain(PI / 2.0)?)?;
    println!("e_intra1,e_intra2,e_inter_real,e_inter_recip,e_ii  (eta, tau)");
    for eta in [0.5, 1.0, 2.0] {
        for tau in [0.0, 0.3] {
            let pair = base.with_shift([tau, 0.0]);
            let params = EwaldParams { eta, ..EwaldParams::default() };
            let b = e_ii_breakdown(&pair, 1.0, 1.0, &params)?;
            let row = b.csv().lines().last().unwrap_or_default().to_string();
            println!("{row}  ({eta}, {tau})");
        }
    }
    Ok(())
}
