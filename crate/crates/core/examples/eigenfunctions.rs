//! Low eigenfunctions on a real-space line and their inverse participation
//! ratios.
//!
//! `cargo run --release --example eigenfunctions`

use std::f64::consts::PI;

use incomm_pw::lattice::{build_basis, IncommensuratePair, Lattice};
use incomm_pw::operator::{assemble, eigensolve};
use incomm_pw::potential::screened_coulomb;
use incomm_pw::realspace::{eigenfunction_on_grid, ipr, write_eigenfunction_csv, BoxGrid};

fn main() -> incomm_pw::Result<()> {
    let ec = 300.0;
    let pair = IncommensuratePair::new(Lattice::chain(2.0)?, Lattice::chain(PI)?)?;
    let basis = build_basis(&pair, ec)?;
    let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 4.0 * ec)?;
    let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 4.0 * ec)?;
    let r = eigensolve(&assemble(&basis, &v1, &v2, [0.0, 0.0])?, Some(20))?;
    let grid = BoxGrid::line(0.0, 60.0, 3000)?;
    for j in [0, 5, 19] {
        let u = eigenfunction_on_grid(&r, j, &basis, &grid)?;
        println!("state {j:>2}: eigenvalue {:.5}, IPR {:.4}", r.eigenvalues[j], ipr(&u)?);
        if j == 0 {
            let path = std::env::temp_dir().join("eigfun_0.csv");
            write_eigenfunction_csv(std::fs::File::create(&path)?, &grid, &u)?;
            println!("          written to {}", path.display());
        }
    }
    Ok(())
}
