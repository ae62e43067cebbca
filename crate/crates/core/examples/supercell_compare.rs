//! Density of states from periodic supercell approximants `L₂ ≈ p·L₁/q`
//! built from the continued fraction of the length ratio.
//!
//! `cargo run --release --example supercell_compare`

use std::f64::consts::PI;

use incomm_pw::lattice::Lattice;
use incomm_pw::potential::LayerPotential;
use incomm_pw::spectrum::{dos_distance, EnergyGrid};
use incomm_pw::supercell::{rational_approximants, supercell_dos, Approximant};

fn main() -> incomm_pw::Result<()> {
    let lat1 = Lattice::chain(1.0)?;
    let v = LayerPotential::ScreenedCoulomb { charge: 1.0, screening: 1.0 };
    let (ec, sigma) = (150.0, 5.0);
    let grid = EnergyGrid::new(0.0, 40.0, 1000)?;
    let mut curves = Vec::new();
    for (p, q) in rational_approximants(PI / 2.0, 30) {
        let a = Approximant::new(1.0, PI / 2.0, p, q)?;
        let curve = supercell_dos(&lat1, &a, &v, &v, ec, 16, sigma, grid)?;
        println!("{p:>3}/{q:<3} L2 = {:.8} (error {:.2e})", a.l2_approx(), a.error());
        curves.push(curve);
    }
    let last = curves.last().expect("at least one approximant");
    for (i, c) in curves.iter().enumerate() {
        println!("approximant {i}: distance to the finest {:.6}", dos_distance(c, last)?);
    }
    Ok(())
}
