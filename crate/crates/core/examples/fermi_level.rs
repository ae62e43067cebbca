//! Fermi level of the neutral system over a k grid, for both reference-count
//! routes and a few temperatures.
//!
//! `cargo run --release --example fermi_level`

use std::f64::consts::PI;

use incomm_pw::config::uniform_kgrid;
use incomm_pw::lattice::{build_basis, IncommensuratePair, Lattice};
use incomm_pw::operator::{assemble, eigensolve};
use incomm_pw::potential::screened_coulomb;
use incomm_pw::spectrum::{fermi_level, neutral_electron_density, ScalingRoute};

fn main() -> incomm_pw::Result<()> {
    let ec = 500.0;
    let pair = IncommensuratePair::new(Lattice::chain(1.0)?, Lattice::chain(PI / 2.0)?)?;
    let basis = build_basis(&pair, ec)?;
    let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 4.0 * ec)?;
    let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 4.0 * ec)?;
    let results = uniform_kgrid(&pair.lat1, 4)
        .into_iter()
        .map(|k| eigensolve(&assemble(&basis, &v1, &v2, k)?, None))
        .collect::<incomm_pw::Result<Vec<_>>>()?;
    let epv = neutral_electron_density(&basis, 1.0, 1.0);
    println!("electrons per unit length: {epv:.6}");
    for theta in [0.0, 0.05, 0.5] {
        for route in [ScalingRoute::Layer1, ScalingRoute::Layer2, ScalingRoute::Unified] {
            let f = fermi_level(&results, &basis, epv, theta, route)?;
            println!("theta {theta:<4} {route:?}: Ef = {:.6}", f.ef);
        }
    }
    Ok(())
}
