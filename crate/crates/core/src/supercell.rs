//! Commensurate supercell reference for one-dimensional pairs.
//!
//! The ratio `L₂/L₁` is replaced by a continued-fraction convergent `p/q`,
//! the second chain is stretched to `L₂' = p·L₁/q`, and the resulting
//! periodic problem on `S = p·L₁` is solved with Bloch plane waves.

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::potential::{FourierPotential, LayerPotential};
use crate::spectrum::{dos_distance, smear, DoSCurve, DosMeta, DosScaling, EnergyGrid};

pub const DEFAULT_K_GRID: usize = 32;
pub const DEFAULT_MAX_SUPERCELL_BASIS: usize = 8000;

/// Continued-fraction convergents `p/q` of `x` with `q ≤ max_q`, ascending
/// in `q`. When two convergents share a denominator only the later (closer)
/// one is kept.
pub fn rational_approximants(x: f64, max_q: u64) -> Vec<(u64, u64)> {
    assert!(x > 0.0 && x.is_finite(), "x must be positive");
    let mut out: Vec<(u64, u64)> = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, 0u64, 1u64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a > u32::MAX as f64 {
            break;
        }
        let a = a as u64;
        let (p, q) = match (a.checked_mul(p0).and_then(|v| v.checked_add(p1)), a.checked_mul(q0).and_then(|v| v.checked_add(q1))) {
            (Some(p), Some(q)) => (p, q),
            _ => break,
        };
        if q > max_q {
            break;
        }
        if p > 0 {
            if out.last().is_some_and(|&(_, lq)| lq == q) {
                out.pop();
            }
            out.push((p, q));
        }
        (p1, q1, p0, q0) = (p0, q0, p, q);
        let frac = rest - a as f64;
        // stop once the remainder is lost in rounding
        if frac < 1e-12 || (p as f64 / q as f64 - x).abs() <= 4.0 * f64::EPSILON * x {
            break;
        }
        rest = 1.0 / frac;
    }
    out
}

/// A supercell approximant of a 1-d pair with `L₂/L₁ ≈ p/q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Approximant {
    pub p: u64,
    pub q: u64,
    pub l1: f64,
    /// Target second lattice constant.
    pub l2: f64,
}

impl Approximant {
    pub fn new(l1: f64, l2: f64, p: u64, q: u64) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0) {
            return Err(Error::InvalidLattice("lattice constants must be positive".into()));
        }
        if p == 0 || q == 0 || gcd(p, q) != 1 {
            return Err(Error::param("p/q", format!("{p}/{q} is not a reduced positive fraction")));
        }
        Ok(Approximant { p, q, l1, l2 })
    }

    /// Every convergent of `l2/l1` with denominator at most `max_q`.
    pub fn sequence(l1: f64, l2: f64, max_q: u64) -> Result<Vec<Self>> {
        rational_approximants(l2 / l1, max_q)
            .into_iter()
            .map(|(p, q)| Approximant::new(l1, l2, p, q))
            .collect()
    }

    /// Supercell length `S = p·L₁ = q·L₂'`.
    pub fn length(&self) -> f64 {
        self.p as f64 * self.l1
    }

    pub fn l2_approx(&self) -> f64 {
        self.length() / self.q as f64
    }

    pub fn error(&self) -> f64 {
        (self.l2_approx() - self.l2).abs()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Periodic Bloch problem on the supercell.
#[derive(Clone, Debug)]
pub struct SupercellProblem {
    pub approximant: Approximant,
    pub ec: f64,
    v1: FourierPotential,
    v2: FourierPotential,
}

impl SupercellProblem {
    pub fn new(approximant: Approximant, v1: &LayerPotential, v2: &LayerPotential, ec: f64) -> Result<Self> {
        if !(ec.is_finite() && ec > 0.0) {
            return Err(Error::param("Ec", format!("energy cutoff must be positive, got {ec}")));
        }
        let lat1 = Lattice::chain(approximant.l1)?;
        let lat2 = Lattice::chain(approximant.l2_approx())?;
        Ok(SupercellProblem {
            approximant,
            ec,
            v1: v1.build(&lat1, 4.0 * ec)?,
            v2: v2.build(&lat2, 4.0 * ec)?,
        })
    }

    fn reciprocal_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.approximant.length()
    }

    /// Supercell reciprocal indices `j` with `½|k + 2πj/S|² ≤ Ec`.
    pub fn basis(&self, k: f64) -> Vec<i64> {
        let b = self.reciprocal_step();
        let kmax = (2.0 * self.ec).sqrt();
        let lo = ((-kmax - k) / b).ceil() as i64;
        let hi = ((kmax - k) / b).floor() as i64;
        (lo..=hi)
            .filter(|&j| {
                let g = k + j as f64 * b;
                0.5 * g * g <= self.ec
            })
            .collect()
    }

    /// Fourier coefficient of `V₁ + V₂'` at `2πj/S`.
    pub fn coefficient(&self, j: i64) -> Complex64 {
        let (p, q) = (self.approximant.p as i64, self.approximant.q as i64);
        let mut c = Complex64::new(0.0, 0.0);
        if j % p == 0 {
            c += self.v1.coefficient([(j / p) as i32, 0]);
        }
        if j % q == 0 {
            c += self.v2.coefficient([(j / q) as i32, 0]);
        }
        c
    }

    /// Bloch eigenvalues at `k`, ascending.
    pub fn eigenvalues(&self, k: f64, max_basis: usize) -> Result<Vec<f64>> {
        let js = self.basis(k);
        let n = js.len();
        if n == 0 {
            return Err(Error::EmptyBasis);
        }
        if n > max_basis {
            return Err(Error::BasisTooLarge { n_c: n, limit: max_basis });
        }
        let b = self.reciprocal_step();
        let diag = |i: usize| {
            let g = k + js[i] as f64 * b;
            0.5 * g * g
        };
        let coeffs: Vec<Complex64> = (0..2 * n - 1)
            .map(|d| self.coefficient(d as i64 - (n as i64 - 1)))
            .collect();
        // js is contiguous, so V(j_i − j_l) depends on i − l only
        let entry = |i: usize, l: usize| {
            let c = coeffs[i + n - 1 - l];
            if i == l {
                c + diag(i)
            } else {
                c
            }
        };
        let failed = |e| Error::EigenNonConvergence(format!("{e:?} (supercell N = {n})"));
        if coeffs.iter().all(|c| c.im == 0.0) {
            Mat::<f64>::from_fn(n, n, |i, l| entry(i, l).re)
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(failed)
        } else {
            Mat::<Complex64>::from_fn(n, n, entry)
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(failed)
        }
    }

    /// The uniform grid `k_i = i·2π/(S·n)`, `i = 0..n`.
    pub fn k_grid(&self, n: usize) -> Vec<f64> {
        let b = self.reciprocal_step();
        (0..n).map(|i| i as f64 * b / n as f64).collect()
    }
}

/// Per-volume DoS of the supercell approximant, `1/(N_k·S)` per Bloch state.
#[allow(clippy::too_many_arguments)]
pub fn supercell_dos(
    lat1: &Lattice,
    approximant: &Approximant,
    v1: &LayerPotential,
    v2: &LayerPotential,
    ec: f64,
    k_grid: usize,
    sigma: f64,
    grid: EnergyGrid,
) -> Result<DoSCurve> {
    if lat1.dim() != 1 {
        return Err(Error::param("lattice", "supercell reference supports one-dimensional chains only"));
    }
    if (lat1.basis()[0][0] - approximant.l1).abs() > 1e-12 * approximant.l1 {
        return Err(Error::Mismatch("approximant was built for a different first lattice".into()));
    }
    if k_grid == 0 {
        return Err(Error::param("k_grid", "need at least one k-point"));
    }
    let problem = SupercellProblem::new(*approximant, v1, v2, ec)?;
    let eigs: Vec<Vec<f64>> = problem
        .k_grid(k_grid)
        .into_par_iter()
        .map(|k| problem.eigenvalues(k, DEFAULT_MAX_SUPERCELL_BASIS))
        .collect::<Result<_>>()?;
    let all: Vec<f64> = eigs.into_iter().flatten().collect();
    let volume = approximant.length();
    Ok(DoSCurve {
        values: smear(&all, 1.0 / (k_grid as f64 * volume), sigma, &grid)?,
        grid,
        meta: DosMeta {
            ec,
            n_k: k_grid,
            sigma,
            scaling: DosScaling::Bloch { volume },
        },
    })
}

/// One row of the supercell comparison table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonRow {
    pub q: u64,
    pub l2_approx: f64,
    pub dos_distance: f64,
}

/// Distance from each approximant's DoS to `reference`, on the reference grid.
#[allow(clippy::too_many_arguments)]
pub fn compare_approximants(
    lat1: &Lattice,
    approximants: &[Approximant],
    v1: &LayerPotential,
    v2: &LayerPotential,
    ec: f64,
    k_grid: usize,
    reference: &DoSCurve,
) -> Result<Vec<ComparisonRow>> {
    approximants
        .iter()
        .map(|a| {
            let dos = supercell_dos(lat1, a, v1, v2, ec, k_grid, reference.meta.sigma, reference.grid)?;
            Ok(ComparisonRow {
                q: a.q,
                l2_approx: a.l2_approx(),
                dos_distance: dos_distance(&dos, reference)?,
            })
        })
        .collect()
}
