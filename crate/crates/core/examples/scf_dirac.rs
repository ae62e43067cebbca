//! Self-consistent solve with Hartree and Dirac exchange, printing the
//! residual history.
//!
//! `cargo run --release --example scf_dirac`

use std::f64::consts::PI;

use incomm_pw::lattice::{build_basis, IncommensuratePair, Lattice};
use incomm_pw::potential::screened_coulomb;
use incomm_pw::scf::{scf_solve, ScfConfig, XcChoice};
use incomm_pw::spectrum::neutral_electron_density;

fn main() -> incomm_pw::Result<()> {
    let ec = 200.0;
    let pair = IncommensuratePair::new(Lattice::chain(1.0)?, Lattice::chain(PI / 2.0)?)?;
    let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 4.0 * ec)?;
    let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 4.0 * ec)?;
    let mut cfg = ScfConfig::new(ec, neutral_electron_density(&build_basis(&pair, ec)?, 1.0, 1.0));
    cfg.xc = XcChoice::Dirac;
    cfg.alpha = 0.3;
    cfg.max_iter = 400;
    let state = scf_solve(&pair, &v1, &v2, &cfg, None)?;
    for e in state.history.iter().step_by(25) {
        println!("iter {:>4}  residual {:.3e}  Ef {:.8}  E_tot {:.10}", e.iter, e.residual, e.ef, e.etot);
    }
    let t = state.energy;
    println!(
        "converged {} after {} iterations\nband {:.8}  hartree {:.8}  xc {:.8}  total {:.12}",
        state.converged, state.iteration, t.band, t.hartree, t.xc, t.total
    );
    Ok(())
}
