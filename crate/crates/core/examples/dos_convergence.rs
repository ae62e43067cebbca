//! Scaled density of states at increasing cutoffs, compared pairwise on a
//! common window.
//!
//! `cargo run --release --example dos_convergence`

use std::f64::consts::PI;

use incomm_pw::lattice::{build_basis, IncommensuratePair, Lattice};
use incomm_pw::operator::{assemble, eigensolve};
use incomm_pw::potential::screened_coulomb;
use incomm_pw::spectrum::{dos_distance, scaled_dos, EnergyGrid, ScalingRoute};

fn main() -> incomm_pw::Result<()> {
    let pair = IncommensuratePair::new(Lattice::chain(1.0)?, Lattice::chain(PI / 2.0)?)?;
    let cutoffs = [200.0, 500.0, 1000.0, 2000.0];
    let sigma = 5.0;
    let mut spectra = Vec::new();
    for &ec in &cutoffs {
        let basis = build_basis(&pair, ec)?;
        let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 4.0 * ec)?;
        let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 4.0 * ec)?;
        let r = eigensolve(&assemble(&basis, &v1, &v2, [0.0, 0.0])?, None)?;
        println!("Ec = {ec:>6}: N_c = {:>5}, lowest eigenvalue {:.6}", basis.len(), r.eigenvalues[0]);
        spectra.push((basis, r));
    }
    let lowest = spectra.iter().map(|(_, r)| r.eigenvalues[0]).fold(f64::INFINITY, f64::min);
    let grid = EnergyGrid::comparison(lowest, cutoffs[0], sigma, 2000)?;
    let curves = spectra
        .iter()
        .map(|(b, r)| scaled_dos(r, b, sigma, grid, ScalingRoute::Unified))
        .collect::<incomm_pw::Result<Vec<_>>>()?;
    for (w, ec) in curves.windows(2).zip(cutoffs.windows(2)) {
        println!("d(Ec={}, Ec={}) = {:.6}", ec[0], ec[1], dos_distance(&w[0], &w[1])?);
    }
    Ok(())
}
