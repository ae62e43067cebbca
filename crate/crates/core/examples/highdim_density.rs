//! Electron density on the two-layer torus and its restriction to the
//! physical line.
//!
//! `cargo run --release --example highdim_density`

use std::f64::consts::PI;

use incomm_pw::lattice::{build_basis, IncommensuratePair, Lattice};
use incomm_pw::operator::{assemble, eigensolve};
use incomm_pw::potential::screened_coulomb;
use incomm_pw::realspace::{density_highdim_weighted, BoxGrid, TorusGrid};
use incomm_pw::scf::kpoint_weights;
use incomm_pw::spectrum::{fermi_level, neutral_electron_density, OccupationModel, ScalingRoute};

fn main() -> incomm_pw::Result<()> {
    let ec = 200.0;
    let pair = IncommensuratePair::new(Lattice::chain(1.0)?, Lattice::chain(PI / 2.0)?)?;
    let basis = build_basis(&pair, ec)?;
    let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 4.0 * ec)?;
    let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 4.0 * ec)?;
    let results = vec![eigensolve(&assemble(&basis, &v1, &v2, [0.0, 0.0])?, None)?];
    let epv = neutral_electron_density(&basis, 1.0, 1.0);
    let fermi = fermi_level(&results, &basis, epv, 0.05, ScalingRoute::Unified)?;
    let grid = TorusGrid::for_basis(&basis)?;
    let occ = OccupationModel { theta: 0.05, ef: fermi.ef };
    let weights = kpoint_weights(&results, &basis, ScalingRoute::Unified)?;
    let rho = density_highdim_weighted(&results, &occ, &basis, &grid, &weights)?;
    println!("torus grid {:?}, Ef {:.6}", grid.sizes(), fermi.ef);
    println!("mean density {:.6} for {epv:.6} electrons per unit length", rho.mean());
    let line = BoxGrid::line(0.0, 20.0, 11)?;
    for (p, v) in line.points().iter().zip(rho.diagonal(&line.points())) {
        println!("x = {:>5.1}  rho = {v:.6}", p[0]);
    }
    Ok(())
}
