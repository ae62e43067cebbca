//! Smeared densities of states, occupations and the Fermi level.
//!
//! Each eigenvalue is broadened by the normalized Gaussian
//! `√(σ/π)·exp(−σ(ε−λ)²)`. The raw curve weighs states by `1/√Ec`. The
//! per-volume curve weighs them by `1/N̄`, where `N̄ = N·|Γ|` is the number of
//! wavevectors `k + G` per reference reciprocal cell times that cell's
//! real-space volume, so that integrating it counts states per unit volume.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::PlaneWaveBasis;
use crate::operator::{SpectrumResult, DEGENERACY_GAP};
use crate::output;

pub const DEFAULT_SIGMA: f64 = 5.0;
pub const DEFAULT_POINTS: usize = 2000;
/// Offset used for `Ef` when the highest state is exactly filled.
pub const GAP_GUARD: f64 = 1.0;

/// Uniform energy grid including both endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl EnergyGrid {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::param("n_points", "need at least two grid points"));
        }
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::param("window", format!("empty window [{min}, {max}]")));
        }
        Ok(EnergyGrid { min, max, points })
    }

    /// Window `[min λ − 5/√σ, max λ + 5/√σ]` around a set of eigenvalues.
    pub fn around(eigs: &[f64], sigma: f64, points: usize) -> Result<Self> {
        let lo = eigs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return Err(Error::EmptyBasis);
        }
        let pad = 5.0 / sigma.sqrt();
        EnergyGrid::new(lo - pad, hi + pad, points)
    }

    /// Common window for curves computed at several cutoffs:
    /// `[λ_min − 5/√σ, Ec_min]`, the range every cutoff resolves.
    pub fn comparison(lowest: f64, ec_min: f64, sigma: f64, points: usize) -> Result<Self> {
        EnergyGrid::new(lowest - 5.0 / sigma.sqrt(), ec_min, points)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn energy(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.energy(i)).collect()
    }
}

/// Wavevector counts per reference reciprocal cell for one `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceCounts {
    pub n1: usize,
    pub n2: usize,
    pub volume1: f64,
    pub volume2: f64,
}

/// Which reference cell defines `N̄`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingRoute {
    /// `N̄ = N₁·|Γ₁|`.
    Layer1,
    /// `N̄ = N₂·|Γ₂|`.
    Layer2,
    /// Mean of the two.
    #[default]
    Unified,
}

impl ReferenceCounts {
    pub fn of(basis: &PlaneWaveBasis, k: [f64; 2]) -> Self {
        let pair = basis.pair();
        ReferenceCounts {
            n1: basis.count_in_reference_cell(&pair.lat1, k),
            n2: basis.count_in_reference_cell(&pair.lat2, k),
            volume1: pair.lat1.cell_volume(),
            volume2: pair.lat2.cell_volume(),
        }
    }

    pub fn ratio(&self) -> f64 {
        self.n1 as f64 / self.n2 as f64
    }

    pub fn nbar(&self, route: ScalingRoute) -> Result<f64> {
        let a = self.n1 as f64 * self.volume1;
        let b = self.n2 as f64 * self.volume2;
        let v = match route {
            ScalingRoute::Layer1 => a,
            ScalingRoute::Layer2 => b,
            ScalingRoute::Unified => 0.5 * (a + b),
        };
        if v > 0.0 && !(route == ScalingRoute::Unified && (a == 0.0 || b == 0.0)) {
            Ok(v)
        } else {
            Err(Error::NoReferenceWavevectors)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DosScaling {
    /// Weight `1/√Ec` per state.
    Raw,
    /// Weight `1/N̄` per state (averaged over `k` for multi-k curves).
    PerVolume { counts: ReferenceCounts, nbar: f64 },
    /// Weight `1/(N_k·S)` per Bloch state of a periodic cell of volume `S`.
    Bloch { volume: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DosMeta {
    pub ec: f64,
    pub n_k: usize,
    pub sigma: f64,
    pub scaling: DosScaling,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoSCurve {
    pub grid: EnergyGrid,
    pub values: Vec<f64>,
    pub meta: DosMeta,
}

impl DoSCurve {
    pub fn energies(&self) -> Vec<f64> {
        self.grid.energies()
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(self.grid.step(), &self.values)
    }

    /// Writes `energy,dos` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        output::write_rows(
            w,
            "energy,dos",
            self.values
                .iter()
                .enumerate()
                .map(|(i, &v)| vec![self.grid.energy(i), v]),
        )
    }
}

fn trapezoid(h: f64, values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::param("sigma", format!("smearing must be positive, got {sigma}")))
    }
}

/// Gaussian-smeared sum of `weight` per eigenvalue on `grid`.
pub fn smear(eigs: &[f64], weight: f64, sigma: f64, grid: &EnergyGrid) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let mut sorted = eigs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let c = weight * (sigma / std::f64::consts::PI).sqrt();
    // exp(−40) is far below the accuracy anything downstream needs
    let reach = (40.0 / sigma).sqrt();
    Ok((0..grid.points)
        .into_par_iter()
        .map(|i| {
            let e = grid.energy(i);
            let lo = sorted.partition_point(|&l| l < e - reach);
            let hi = sorted.partition_point(|&l| l <= e + reach);
            sorted[lo..hi]
                .iter()
                .map(|&l| (-sigma * (e - l) * (e - l)).exp())
                .sum::<f64>()
                * c
        })
        .collect())
}

/// Raw smeared DoS with weight `1/√Ec` per eigenvalue.
pub fn smeared_dos(eigs: &[f64], ec: f64, sigma: f64, grid: EnergyGrid) -> Result<DoSCurve> {
    if !(ec.is_finite() && ec > 0.0) {
        return Err(Error::param("Ec", format!("energy cutoff must be positive, got {ec}")));
    }
    Ok(DoSCurve {
        values: smear(eigs, 1.0 / ec.sqrt(), sigma, &grid)?,
        grid,
        meta: DosMeta {
            ec,
            n_k: 1,
            sigma,
            scaling: DosScaling::Raw,
        },
    })
}

/// Per-volume DoS of one `k`, weight `1/N̄` per eigenvalue.
pub fn scaled_dos(
    result: &SpectrumResult,
    basis: &PlaneWaveBasis,
    sigma: f64,
    grid: EnergyGrid,
    route: ScalingRoute,
) -> Result<DoSCurve> {
    if result.basis_size != basis.len() {
        return Err(Error::Mismatch(format!(
            "spectrum has basis size {} but the basis has {} entries",
            result.basis_size,
            basis.len()
        )));
    }
    let counts = ReferenceCounts::of(basis, result.k);
    let nbar = counts.nbar(route)?;
    Ok(DoSCurve {
        values: smear(&result.eigenvalues, 1.0 / nbar, sigma, &grid)?,
        grid,
        meta: DosMeta {
            ec: basis.ec(),
            n_k: 1,
            sigma,
            scaling: DosScaling::PerVolume { counts, nbar },
        },
    })
}

fn check_compatible(a: &DoSCurve, b: &DoSCurve) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::Mismatch(format!(
            "DoS grids differ: {:?} vs {:?}",
            a.grid, b.grid
        )));
    }
    Ok(())
}

/// Pointwise mean of curves on a common grid and smearing.
pub fn average_dos(curves: &[DoSCurve]) -> Result<DoSCurve> {
    let first = curves.first().ok_or_else(|| Error::param("curves", "no curves to average"))?;
    for c in &curves[1..] {
        check_compatible(first, c)?;
        if c.meta.sigma != first.meta.sigma {
            return Err(Error::Mismatch("DoS curves use different smearing".into()));
        }
    }
    let n = curves.len() as f64;
    let values = (0..first.values.len())
        .map(|i| curves.iter().map(|c| c.values[i]).sum::<f64>() / n)
        .collect();
    let scaling = match first.meta.scaling {
        DosScaling::Raw => DosScaling::Raw,
        DosScaling::Bloch { .. } => {
            return Err(Error::Mismatch("Bloch curves already include their k average".into()))
        }
        DosScaling::PerVolume { counts, .. } => {
            let mut nbar = 0.0;
            for c in curves {
                match c.meta.scaling {
                    DosScaling::PerVolume { nbar: x, .. } => nbar += x / n,
                    _ => {
                        return Err(Error::Mismatch("cannot average per-volume curves with other kinds".into()))
                    }
                }
            }
            DosScaling::PerVolume { counts, nbar }
        }
    };
    Ok(DoSCurve {
        grid: first.grid,
        values,
        meta: DosMeta {
            n_k: curves.len(),
            scaling,
            ..first.meta
        },
    })
}

/// `√∫(a − b)²` by the trapezoid rule on the shared grid.
pub fn dos_distance(a: &DoSCurve, b: &DoSCurve) -> Result<f64> {
    check_compatible(a, b)?;
    let sq: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    Ok(trapezoid(a.grid.step(), &sq).sqrt())
}

/// Fermi-Dirac occupation (spin included); `theta = k_B T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupationModel {
    pub theta: f64,
    pub ef: f64,
}

pub fn occupation(eps: f64, model: &OccupationModel) -> f64 {
    let x = eps - model.ef;
    if model.theta <= 0.0 {
        return if x < 0.0 {
            2.0
        } else if x > 0.0 {
            0.0
        } else {
            1.0
        };
    }
    let t = x / model.theta;
    if t > 0.0 {
        let e = (-t).exp();
        2.0 * e / (1.0 + e)
    } else {
        2.0 / (1.0 + t.exp())
    }
}

/// Solution of the electron-count equation.
#[derive(Clone, Debug, PartialEq)]
pub struct FermiResult {
    pub ef: f64,
    /// Electrons per volume actually placed.
    pub filled: f64,
    pub target: f64,
    pub n_k: usize,
    /// Reference counts for each `k`.
    pub counts: Vec<ReferenceCounts>,
    /// `N̄` used for each `k`.
    pub nbar: Vec<f64>,
    /// Set when filling exhausted every state exactly (no LUMO).
    pub no_lumo: bool,
}

impl FermiResult {
    /// `ef=<value>` followed by a JSON-style diagnostics block.
    pub fn report(&self) -> String {
        let list = |v: Vec<String>| format!("[{}]", v.join(", "));
        format!(
            "ef={}\n{{\n  \"N1\": {},\n  \"N2\": {},\n  \"Nbar\": {},\n  \"N_k\": {},\n  \"filled_charge\": {},\n  \"target_charge\": {},\n  \"no_lumo\": {}\n}}\n",
            output::fmt(self.ef),
            list(self.counts.iter().map(|c| c.n1.to_string()).collect()),
            list(self.counts.iter().map(|c| c.n2.to_string()).collect()),
            list(self.nbar.iter().map(|&x| output::fmt(x)).collect()),
            self.n_k,
            output::fmt(self.filled),
            output::fmt(self.target),
            self.no_lumo
        )
    }
}

/// `(ef, filled, no_lumo)` for states `(λ, w)` where `w` is the weight of a
/// singly occupied state; full occupation contributes `2w`.
pub fn fermi_from_states(states: &[(f64, f64)], target: f64, theta: f64) -> Result<(f64, f64, bool)> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::param(
            "electrons_per_volume",
            format!("must be positive, got {target}"),
        ));
    }
    if states.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let capacity: f64 = 2.0 * states.iter().map(|s| s.1).sum::<f64>();
    if target > capacity * (1.0 + 1e-12) {
        return Err(Error::InsufficientBasis {
            target,
            available: capacity,
        });
    }
    let mut sorted = states.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tol = 1e-10 * target;

    if theta <= 0.0 {
        let mut filled = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j].0 - sorted[j - 1].0 < DEGENERACY_GAP {
                j += 1;
            }
            let cluster: f64 = 2.0 * sorted[i..j].iter().map(|s| s.1).sum::<f64>();
            let lambda = sorted[i].0;
            if filled + cluster > target + tol {
                // ends inside this cluster: pin at the degenerate value
                return Ok((lambda, target, false));
            }
            filled += cluster;
            if (filled - target).abs() <= tol {
                let top = sorted[j - 1].0;
                return Ok(match sorted.get(j) {
                    Some(next) => (0.5 * (top + next.0), filled, false),
                    None => (top + 0.5 * GAP_GUARD, filled, true),
                });
            }
            i = j;
        }
        let top = sorted.last().unwrap().0;
        return Ok((top + 0.5 * GAP_GUARD, filled, true));
    }

    let count = |ef: f64| {
        let model = OccupationModel { theta, ef };
        sorted.iter().map(|&(l, w)| w * occupation(l, &model)).sum::<f64>()
    };
    let mut lo = sorted[0].0 - 10.0 * theta - 1.0;
    let mut hi = sorted.last().unwrap().0 + 10.0 * theta + 1.0;
    if count(hi) < target - tol {
        // the bracket cannot reach a target that is within capacity only
        // through the far Fermi-Dirac tail
        return Err(Error::InsufficientBasis {
            target,
            available: count(hi),
        });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..300 {
        mid = 0.5 * (lo + hi);
        let c = count(mid);
        if (c - target).abs() <= tol {
            break;
        }
        if c < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    Ok((mid, count(mid), false))
}

/// Fermi level for spectra at `N_k` wavevectors sharing one basis. The
/// weight of a state at `k` is `1/(N_k·N̄_k)`.
pub fn fermi_level(
    results: &[SpectrumResult],
    basis: &PlaneWaveBasis,
    electrons_per_volume: f64,
    theta: f64,
    route: ScalingRoute,
) -> Result<FermiResult> {
    if results.is_empty() {
        return Err(Error::param("kpoints", "no spectra supplied"));
    }
    let n_k = results.len();
    let mut counts = Vec::with_capacity(n_k);
    let mut nbars = Vec::with_capacity(n_k);
    let mut states = Vec::new();
    for r in results {
        let c = ReferenceCounts::of(basis, r.k);
        let nbar = c.nbar(route)?;
        let w = 1.0 / (n_k as f64 * nbar);
        states.extend(r.eigenvalues.iter().map(|&l| (l, w)));
        counts.push(c);
        nbars.push(nbar);
    }
    let (ef, filled, no_lumo) = fermi_from_states(&states, electrons_per_volume, theta)?;
    Ok(FermiResult {
        ef,
        filled,
        target: electrons_per_volume,
        n_k,
        counts,
        nbar: nbars,
        no_lumo,
    })
}

/// Neutral electron count `Z₁/|Γ₁| + Z₂/|Γ₂|`.
pub fn neutral_electron_density(basis: &PlaneWaveBasis, z1: f64, z2: f64) -> f64 {
    let pair = basis.pair();
    z1 / pair.lat1.cell_volume() + z2 / pair.lat2.cell_volume()
}
