//! Kohn-Sham matrices, total energy per unit volume and the SCF loop.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{build_basis, index_sub, IncommensuratePair, PlaneWaveBasis, Vector};
use crate::operator::{assemble, eigensolve, HamiltonianMatrix, Provenance, SpectrumResult};
use crate::output;
use crate::potential::FourierPotential;
use crate::realspace::{
    density_highdim_weighted, hartree, xc_apply, DiracExchange, FieldTerm, HighDimDensity,
    TorusGrid, TorusSpectrum, XcFunctional, ZeroXc,
};
use crate::spectrum::{fermi_level, occupation, FermiResult, OccupationModel, ReferenceCounts, ScalingRoute};

/// Shipped exchange-correlation models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum XcChoice {
    #[default]
    None,
    Dirac,
}

impl XcChoice {
    pub fn functional(self) -> Box<dyn XcFunctional> {
        match self {
            XcChoice::None => Box::new(ZeroXc),
            XcChoice::Dirac => Box::new(DiracExchange::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScfConfig {
    pub ec: f64,
    pub kpoints: Vec<Vector>,
    /// Linear mixing parameter `α ∈ (0, 1]`.
    pub alpha: f64,
    pub max_iter: usize,
    /// Tolerance on `max |ρ̂_new − ρ̂_old|`.
    pub tol: f64,
    /// Occupation smearing `k_B T`.
    pub theta: f64,
    pub electrons_per_volume: f64,
    pub xc: XcChoice,
    pub hartree: bool,
    /// Nuclei-nuclei energy per volume added to the total.
    pub e_ii: f64,
    pub route: ScalingRoute,
    /// Halve `α` (down to `alpha_min`) whenever the residual grows.
    pub backoff: bool,
    pub alpha_min: f64,
    /// Deduplicate coincident composite wavevectors instead of refusing.
    pub allow_commensurate: bool,
}

impl ScfConfig {
    pub fn new(ec: f64, electrons_per_volume: f64) -> Self {
        ScfConfig {
            ec,
            kpoints: vec![[0.0, 0.0]],
            alpha: 0.3,
            max_iter: 100,
            tol: 1e-8,
            theta: 1e-2,
            electrons_per_volume,
            xc: XcChoice::None,
            hartree: true,
            e_ii: 0.0,
            route: ScalingRoute::Unified,
            backoff: false,
            alpha_min: 0.01,
            allow_commensurate: false,
        }
    }

    pub fn interacting(&self) -> bool {
        self.hartree || self.xc != XcChoice::None
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("alpha", format!("mixing must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "tolerance must be positive"));
        }
        if !(self.theta >= 0.0) {
            return Err(Error::param("theta", "temperature must be nonnegative"));
        }
        if self.kpoints.is_empty() {
            return Err(Error::param("kpoints", "need at least one k-point"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "need at least one iteration"));
        }
        Ok(())
    }
}

/// Hartree and exchange-correlation terms of one density.
#[derive(Clone, Debug)]
pub struct KsPotentials {
    pub hartree: Option<FieldTerm>,
    pub xc: FieldTerm,
}

impl KsPotentials {
    pub fn from_density(density: &HighDimDensity, xc: &dyn XcFunctional, with_hartree: bool) -> Result<Self> {
        Ok(KsPotentials {
            hartree: if with_hartree { Some(hartree(density)?) } else { None },
            xc: xc_apply(density, xc)?,
        })
    }

    fn total(&self) -> TorusSpectrum {
        let mut v = self.xc.potential.clone();
        if let Some(h) = &self.hartree {
            for (a, b) in v.coeffs.iter_mut().zip(&h.potential.coeffs) {
                *a += b;
            }
        }
        v
    }
}

/// Kohn-Sham matrix: the linear Hamiltonian plus `v̂_H + v̂_xc` at every
/// index difference.
pub fn ks_matrix(
    basis: &PlaneWaveBasis,
    k: Vector,
    v1: &FourierPotential,
    v2: &FourierPotential,
    potentials: &KsPotentials,
) -> Result<HamiltonianMatrix> {
    let mut h = assemble(basis, v1, v2, k)?;
    let v = potentials.total();
    let entries = basis.entries();
    let n = entries.len();
    h.data_mut().par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot += v.get(index_sub(entries[i].m, entries[j].m), index_sub(entries[i].n, entries[j].n));
        }
    });
    // the FFT leaves conjugate symmetry exact only to rounding
    let data = h.data_mut();
    for i in 0..n {
        data[i * n + i].im = 0.0;
        for j in i + 1..n {
            let a = 0.5 * (data[i * n + j] + data[j * n + i].conj());
            data[i * n + j] = a;
            data[j * n + i] = a.conj();
        }
    }
    h.set_provenance(Provenance::KohnSham { k: h.k() });
    Ok(h)
}

/// Terms of the total energy per unit volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyTerms {
    /// `Σ_k w_k Σ_j f_j ⟨U_j|T + V₁ + V₂|U_j⟩`.
    pub band: f64,
    pub hartree: f64,
    pub xc: f64,
    pub e_ii: f64,
    pub total: f64,
}

/// Per-k weights `1/(N_k·N̄_k)`.
pub fn kpoint_weights(results: &[SpectrumResult], basis: &PlaneWaveBasis, route: ScalingRoute) -> Result<Vec<f64>> {
    let nk = results.len() as f64;
    results
        .iter()
        .map(|r| Ok(1.0 / (nk * ReferenceCounts::of(basis, r.k).nbar(route)?)))
        .collect()
}

/// `Σ_k w_k Σ_j f(λ_j) ⟨U_j|T + V₁ + V₂|U_j⟩` with the orbitals held fixed.
pub fn band_energy(
    results: &[SpectrumResult],
    basis: &PlaneWaveBasis,
    v1: &FourierPotential,
    v2: &FourierPotential,
    occ: &OccupationModel,
    weights: &[f64],
) -> Result<f64> {
    let mut total = 0.0;
    for (r, &w) in results.iter().zip(weights) {
        let h = assemble(basis, v1, v2, r.k)?;
        for (l, u) in r.eigenvalues.iter().zip(&r.eigenvectors) {
            let f = occupation(*l, occ);
            if f > 0.0 {
                total += w * f * h.expectation(u);
            }
        }
    }
    Ok(total)
}

/// Total energy of orbitals `results` (occupied per `occ`) and the density
/// they generate.
#[allow(clippy::too_many_arguments)]
pub fn total_energy(
    results: &[SpectrumResult],
    basis: &PlaneWaveBasis,
    v1: &FourierPotential,
    v2: &FourierPotential,
    occ: &OccupationModel,
    weights: &[f64],
    density: &HighDimDensity,
    xc: &dyn XcFunctional,
    with_hartree: bool,
    e_ii: f64,
) -> Result<EnergyTerms> {
    let band = band_energy(results, basis, v1, v2, occ, weights)?;
    let pots = KsPotentials::from_density(density, xc, with_hartree)?;
    let hartree = pots.hartree.as_ref().map_or(0.0, |h| h.energy);
    let xc = pots.xc.energy;
    Ok(EnergyTerms {
        band,
        hartree,
        xc,
        e_ii,
        total: e_ii + band + hartree + xc,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScfLogEntry {
    pub iter: usize,
    pub residual: f64,
    pub ef: f64,
    pub etot: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug)]
pub struct ScfState {
    pub basis: PlaneWaveBasis,
    pub grid: TorusGrid,
    /// Output density of the last iteration (consistent with `spectra`).
    pub density: HighDimDensity,
    pub fermi: FermiResult,
    pub spectra: Vec<SpectrumResult>,
    pub energy: EnergyTerms,
    pub iteration: usize,
    pub residual: f64,
    pub converged: bool,
    pub history: Vec<ScfLogEntry>,
}

impl ScfState {
    pub fn ef(&self) -> f64 {
        self.fermi.ef
    }

    pub fn total_energy(&self) -> f64 {
        self.energy.total
    }

    /// Writes the `iter,residual,ef,etot` log.
    pub fn write_log<W: Write>(&self, w: W) -> Result<()> {
        output::write_rows(
            w,
            "iter,residual,ef,etot",
            self.history
                .iter()
                .map(|e| vec![e.iter as f64, e.residual, e.ef, e.etot]),
        )
    }
}

struct Step {
    spectra: Vec<SpectrumResult>,
    fermi: FermiResult,
    weights: Vec<f64>,
    density: HighDimDensity,
}

fn step(
    config: &ScfConfig,
    basis: &PlaneWaveBasis,
    grid: &TorusGrid,
    v1: &FourierPotential,
    v2: &FourierPotential,
    potentials: Option<&KsPotentials>,
) -> Result<Step> {
    let spectra = config
        .kpoints
        .par_iter()
        .map(|&k| {
            let h = match potentials {
                Some(p) => ks_matrix(basis, k, v1, v2, p)?,
                None => assemble(basis, v1, v2, k)?,
            };
            eigensolve(&h, None)
        })
        .collect::<Result<Vec<_>>>()?;
    let fermi = fermi_level(&spectra, basis, config.electrons_per_volume, config.theta, config.route)?;
    let weights = kpoint_weights(&spectra, basis, config.route)?;
    let occ = OccupationModel {
        theta: config.theta,
        ef: fermi.ef,
    };
    let density = density_highdim_weighted(&spectra, &occ, basis, grid, &weights)?;
    Ok(Step {
        spectra,
        fermi,
        weights,
        density,
    })
}

/// Self-consistent field iteration with linear density mixing.
///
/// Without `initial`, the loop starts from the density of the linear
/// (non-interacting) problem. Non-convergence is not an error: the state
/// is returned with `converged = false`.
pub fn scf_solve(
    pair: &IncommensuratePair,
    v1: &FourierPotential,
    v2: &FourierPotential,
    config: &ScfConfig,
    initial: Option<&HighDimDensity>,
) -> Result<ScfState> {
    config.validate()?;
    let mut basis = build_basis(pair, config.ec)?;
    if config.allow_commensurate {
        basis = basis.dedup_composite();
    }
    let grid = TorusGrid::for_basis(&basis)?;
    let xc = config.xc.functional();

    let mut rho_in = match initial {
        Some(d) => {
            if d.grid() != &grid {
                return Err(Error::Mismatch("initial density uses a different torus grid".into()));
            }
            d.clone()
        }
        None => step(config, &basis, &grid, v1, v2, None)?.density,
    };

    let mut alpha = config.alpha;
    let mut history = Vec::new();
    let mut last_raw = f64::INFINITY;
    let mut iter = 0;
    loop {
        iter += 1;
        let pots = if config.interacting() {
            Some(KsPotentials::from_density(&rho_in, xc.as_ref(), config.hartree)?)
        } else {
            None
        };
        let out = step(config, &basis, &grid, v1, v2, pots.as_ref())?;
        let occ = OccupationModel {
            theta: config.theta,
            ef: out.fermi.ef,
        };
        let energy = total_energy(
            &out.spectra,
            &basis,
            v1,
            v2,
            &occ,
            &out.weights,
            &out.density,
            xc.as_ref(),
            config.hartree,
            config.e_ii,
        )?;
        let raw = out.density.max_component_difference(&rho_in);
        if config.backoff && raw > last_raw {
            alpha = (0.5 * alpha).max(config.alpha_min.min(config.alpha));
        }
        last_raw = raw;
        let residual = alpha * raw;
        history.push(ScfLogEntry {
            iter,
            residual,
            ef: out.fermi.ef,
            etot: energy.total,
            alpha,
        });
        let converged = residual <= config.tol;
        if converged || iter >= config.max_iter {
            return Ok(ScfState {
                basis,
                grid,
                density: out.density,
                fermi: out.fermi,
                spectra: out.spectra,
                energy,
                iteration: iter,
                residual,
                converged,
                history,
            });
        }
        rho_in = rho_in.mix(&out.density, alpha)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use num_complex::Complex64;
    use crate::potential::screened_coulomb;
    use crate::spectrum::neutral_electron_density;
    use std::f64::consts::PI;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn example1() -> (IncommensuratePair, FourierPotential, FourierPotential) {
        let pair = IncommensuratePair::new(Lattice::chain(1.0).unwrap(), Lattice::chain(PI / 2.0).unwrap())
            .unwrap();
        let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 800.0).unwrap();
        let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 800.0).unwrap();
        (pair, v1, v2)
    }

    fn electrons(pair: &IncommensuratePair) -> f64 {
        1.0 / pair.lat1.cell_volume() + 1.0 / pair.lat2.cell_volume()
    }

    #[test]
    fn zero_density_reduces_to_linear_matrix() {
        let (pair, v1, v2) = example1();
        let basis = build_basis(&pair, 100.0).unwrap();
        let grid = TorusGrid::for_basis(&basis).unwrap();
        let zero = HighDimDensity::from_values(grid, vec![0.0; TorusGrid::for_basis(&basis).unwrap().len()]).unwrap();
        let pots = KsPotentials::from_density(&zero, &DiracExchange::default(), true).unwrap();
        let a = ks_matrix(&basis, [0.2, 0.0], &v1, &v2, &pots).unwrap();
        let b = assemble(&basis, &v1, &v2, [0.2, 0.0]).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn uniform_density_shifts_diagonal_by_vxc() {
        let (pair, v1, v2) = example1();
        let basis = build_basis(&pair, 100.0).unwrap();
        let grid = TorusGrid::for_basis(&basis).unwrap();
        let rho0 = 0.8;
        let d = HighDimDensity::from_values(grid.clone(), vec![rho0; grid.len()]).unwrap();
        let x = DiracExchange::default();
        let pots = KsPotentials::from_density(&d, &x, true).unwrap();
        let a = ks_matrix(&basis, [0.0, 0.0], &v1, &v2, &pots).unwrap();
        let b = assemble(&basis, &v1, &v2, [0.0, 0.0]).unwrap();
        let n = basis.len();
        for i in 0..n {
            for j in 0..n {
                let want = b.get(i, j) + if i == j { c64(x.potential(rho0), 0.0) } else { c64(0.0, 0.0) };
                assert!((a.get(i, j) - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn random_density_gives_hermitian_matrix() {
        let (pair, v1, v2) = example1();
        let basis = build_basis(&pair, 150.0).unwrap();
        let grid = TorusGrid::for_basis(&basis).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|i| 1.0 + 0.5 * ((i * 7919 % 101) as f64 / 101.0)).collect();
        let d = HighDimDensity::from_values(grid, values).unwrap();
        let pots = KsPotentials::from_density(&d, &DiracExchange::default(), true).unwrap();
        let h = ks_matrix(&basis, [0.4, 0.0], &v1, &v2, &pots).unwrap();
        assert_eq!(h.hermiticity_deviation(), 0.0);
        assert!(matches!(h.provenance(), Provenance::KohnSham { .. }));
    }

    #[test]
    fn linear_limit_converges_immediately() {
        let (pair, v1, v2) = example1();
        let mut cfg = ScfConfig::new(200.0, electrons(&pair));
        cfg.hartree = false;
        cfg.kpoints = vec![[0.0, 0.0], [1.3, 0.0]];
        let s = scf_solve(&pair, &v1, &v2, &cfg, None).unwrap();
        assert!(s.converged);
        assert_eq!(s.iteration, 1);
        let basis = build_basis(&pair, 200.0).unwrap();
        for (r, &k) in s.spectra.iter().zip(&cfg.kpoints) {
            let lin = eigensolve(&assemble(&basis, &v1, &v2, k).unwrap(), None).unwrap();
            for (a, b) in r.eigenvalues.iter().zip(&lin.eigenvalues) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        // E_tot − E_II = Σ w f λ in the linear case
        let occ = OccupationModel { theta: cfg.theta, ef: s.ef() };
        let w = kpoint_weights(&s.spectra, &s.basis, cfg.route).unwrap();
        let sum: f64 = s
            .spectra
            .iter()
            .zip(&w)
            .map(|(r, w)| r.eigenvalues.iter().map(|&l| w * occupation(l, &occ) * l).sum::<f64>())
            .sum();
        assert!((s.total_energy() - sum).abs() < 1e-10 * sum.abs().max(1.0));
        assert!((s.density.mean() - cfg.electrons_per_volume).abs() < 1e-8);
    }

    #[test]
    fn e_ii_passes_through() {
        let (pair, v1, v2) = example1();
        let mut cfg = ScfConfig::new(100.0, electrons(&pair));
        cfg.hartree = false;
        let a = scf_solve(&pair, &v1, &v2, &cfg, None).unwrap();
        cfg.e_ii = 0.75;
        let b = scf_solve(&pair, &v1, &v2, &cfg, None).unwrap();
        assert!((b.total_energy() - a.total_energy() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn band_term_linear_in_charge_at_fixed_orbitals() {
        let (pair, v1, v2) = example1();
        let mut cfg = ScfConfig::new(100.0, electrons(&pair));
        cfg.hartree = false;
        let s = scf_solve(&pair, &v1, &v2, &cfg, None).unwrap();
        let occ = OccupationModel { theta: cfg.theta, ef: s.ef() };
        let w = kpoint_weights(&s.spectra, &s.basis, cfg.route).unwrap();
        let z1 = FourierPotential::zero(pair.lat1);
        let z2 = FourierPotential::zero(pair.lat2);
        let e = |a: &FourierPotential, b: &FourierPotential| band_energy(&s.spectra, &s.basis, a, b, &occ, &w).unwrap();
        let kin = e(&z1, &z2);
        let one = e(&v1, &v2) - kin;
        let two = e(&v1.scaled(2.0), &v2.scaled(2.0)) - kin;
        assert!((two - 2.0 * one).abs() < 1e-12 * one.abs().max(1.0));
    }

    #[test]
    fn dirac_fixture_converges_and_restarts() {
        let (pair, v1, v2) = example1();
        let basis = build_basis(&pair, 200.0).unwrap();
        let mut cfg = ScfConfig::new(200.0, neutral_electron_density(&basis, 1.0, 1.0));
        cfg.xc = XcChoice::Dirac;
        // a partially filled near-degenerate pair at Ef makes one mode soft
        cfg.max_iter = 400;
        let s = scf_solve(&pair, &v1, &v2, &cfg, None).unwrap();
        assert!(s.converged, "residual {} after {}", s.residual, s.iteration);
        for w in s.history.windows(2) {
            assert!(w[1].residual <= w[0].residual * (1.0 + 1e-6));
        }
        let again = scf_solve(&pair, &v1, &v2, &cfg, Some(&s.density)).unwrap();
        assert!(again.converged && again.iteration <= 2);
        assert!((again.total_energy() - s.total_energy()).abs() < 10.0 * cfg.tol);
        assert!(s.total_energy() <= s.history[0].etot + 1e-12);
        let mut log = Vec::new();
        s.write_log(&mut log).unwrap();
        assert!(String::from_utf8(log).unwrap().starts_with("iter,residual,ef,etot\n"));
    }

    #[test]
    fn invalid_config() {
        let (pair, v1, v2) = example1();
        let mut cfg = ScfConfig::new(100.0, 1.0);
        cfg.alpha = 0.0;
        assert!(matches!(scf_solve(&pair, &v1, &v2, &cfg, None), Err(Error::InvalidParameter { name: "alpha", .. })));
    }
}
