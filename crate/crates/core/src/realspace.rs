//! Real-space views of orbitals and the electron density.
//!
//! An orbital `u(r) = Σ U_mn e^{i(k+G₁ₘ+G₂ₙ)·r}` is the diagonal `ũ(r, r)` of
//! the function `ũ(r₁, r₂) = e^{ik·r₁} Σ U_mn e^{i(G₁ₘ·r₁ + G₂ₙ·r₂)}`, which
//! is periodic on the torus `Γ₁ × Γ₂`. Its periodic part is sampled on a
//! uniform torus grid by one inverse FFT, so densities and pointwise
//! functionals of densities are grid operations. The Fourier component
//! `(m, n)` of the torus density is the coefficient of `e^{i(G₁ₘ+G₂ₙ)·r}` in
//! the physical density.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::lattice::{add, dot, norm2, Index, Lattice, PlaneWaveBasis, Vector};
use crate::operator::SpectrumResult;
use crate::output;
use crate::spectrum::{occupation, OccupationModel};

/// Axis-aligned box sampled including both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxGrid {
    pub dim: usize,
    pub min: Vector,
    pub max: Vector,
    pub points: [usize; 2],
}

impl BoxGrid {
    pub fn line(min: f64, max: f64, points: usize) -> Result<Self> {
        Self::new(1, [min, 0.0], [max, 0.0], [points, 1])
    }

    pub fn rect(min: Vector, max: Vector, points: [usize; 2]) -> Result<Self> {
        Self::new(2, min, max, points)
    }

    fn new(dim: usize, min: Vector, max: Vector, points: [usize; 2]) -> Result<Self> {
        for a in 0..dim {
            if points[a] < 2 {
                return Err(Error::param("points_per_axis", "need at least two points per axis"));
            }
            if !(max[a] > min[a]) {
                return Err(Error::param("extent", format!("empty extent along axis {a}")));
            }
        }
        Ok(BoxGrid { dim, min, max, points })
    }

    pub fn len(&self) -> usize {
        self.points[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `i`, with the first axis varying fastest.
    pub fn point(&self, i: usize) -> Vector {
        let coord = |a: usize, j: usize| {
            let n = self.points[a];
            if j + 1 == n {
                self.max[a]
            } else {
                self.min[a] + (self.max[a] - self.min[a]) * j as f64 / (n - 1) as f64
            }
        };
        if self.dim == 1 {
            [coord(0, i), 0.0]
        } else {
            [coord(0, i % self.points[0]), coord(1, i / self.points[0])]
        }
    }

    pub fn points(&self) -> Vec<Vector> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Uniform grid on `Γ₁ × Γ₂` (right endpoints excluded). Axes are ordered
/// `m` axes then `n` axes; the last axis varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusGrid {
    pub lat1: Lattice,
    pub lat2: Lattice,
    sizes: Vec<usize>,
}

impl TorusGrid {
    pub fn new(lat1: Lattice, lat2: Lattice, sizes: Vec<usize>) -> Result<Self> {
        if lat1.dim() != lat2.dim() {
            return Err(Error::Mismatch("layer dimensions differ".into()));
        }
        if sizes.len() != 2 * lat1.dim() {
            return Err(Error::param(
                "torus_points",
                format!("need {} axis sizes, got {}", 2 * lat1.dim(), sizes.len()),
            ));
        }
        if sizes.iter().any(|&n| n < 2) {
            return Err(Error::param("torus_points", "need at least two points per axis"));
        }
        Ok(TorusGrid { lat1, lat2, sizes })
    }

    /// Smallest 5-smooth sizes that resolve every product of two orbitals,
    /// i.e. at least `4·max|index| + 1` per axis.
    pub fn for_basis(basis: &PlaneWaveBasis) -> Result<Self> {
        let pair = basis.pair();
        let sizes = basis_extent(basis)
            .into_iter()
            .map(|m| fft::good_size(4 * m as usize + 1).max(2))
            .collect();
        TorusGrid::new(pair.lat1, pair.lat2, sizes)
    }

    /// Errors unless every axis has at least `2·max|index| + 1` points.
    pub fn check_resolves(&self, basis: &PlaneWaveBasis) -> Result<()> {
        let pair = basis.pair();
        if pair.lat1 != self.lat1 || pair.lat2 != self.lat2 {
            return Err(Error::Mismatch("torus grid lattices differ from the basis".into()));
        }
        for (axis, (m, &got)) in basis_extent(basis).into_iter().zip(&self.sizes).enumerate() {
            let required = 2 * m as usize + 1;
            if got < required {
                return Err(Error::Aliasing { axis, required, got });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lat1.dim()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn frequencies(&self, m: Index, n: Index) -> Vec<i32> {
        if self.dim() == 1 {
            vec![m[0], n[0]]
        } else {
            vec![m[0], m[1], n[0], n[1]]
        }
    }

    /// Linear slot of frequency `(m, n)`, or `None` if it is not
    /// representable on this grid.
    pub fn slot(&self, m: Index, n: Index) -> Option<usize> {
        let mut idx = 0;
        for (f, &size) in self.frequencies(m, n).into_iter().zip(&self.sizes) {
            let half = ((size - 1) / 2) as i32;
            if f.abs() > half {
                return None;
            }
            idx = idx * size + f.rem_euclid(size as i32) as usize;
        }
        Some(idx)
    }

    /// Signed frequency `(m, n)` of a slot; `None` for an even-size Nyquist
    /// slot.
    pub fn frequency(&self, slot: usize) -> Option<(Index, Index)> {
        let mut rest = slot;
        let mut f = vec![0i32; self.sizes.len()];
        for a in (0..self.sizes.len()).rev() {
            let size = self.sizes[a];
            let s = rest % size;
            rest /= size;
            if size.is_multiple_of(2) && s == size / 2 {
                return None;
            }
            f[a] = if s <= (size - 1) / 2 { s as i32 } else { s as i32 - size as i32 };
        }
        Some(if self.dim() == 1 {
            ([f[0], 0], [f[1], 0])
        } else {
            ([f[0], f[1]], [f[2], f[3]])
        })
    }

    /// Torus node of a slot as the pair `(r₁, r₂)`.
    pub fn node(&self, slot: usize) -> (Vector, Vector) {
        let mut rest = slot;
        let mut s = vec![0.0; self.sizes.len()];
        for a in (0..self.sizes.len()).rev() {
            let size = self.sizes[a];
            s[a] = (rest % size) as f64 / size as f64;
            rest /= size;
        }
        let d = self.dim();
        let frac = |v: &[f64]| if d == 1 { [v[0], 0.0] } else { [v[0], v[1]] };
        (
            self.lat1.lattice_vector_frac(frac(&s[..d])),
            self.lat2.lattice_vector_frac(frac(&s[d..])),
        )
    }

    /// `G₁ₘ + G₂ₙ`.
    pub fn wavevector(&self, m: Index, n: Index) -> Vector {
        add(self.lat1.reciprocal_vector(m), self.lat2.reciprocal_vector(n))
    }
}

fn basis_extent(basis: &PlaneWaveBasis) -> Vec<i32> {
    let (m, n) = (basis.max_index(0), basis.max_index(1));
    if basis.dim() == 1 {
        vec![m[0], n[0]]
    } else {
        vec![m[0], m[1], n[0], n[1]]
    }
}

/// Fourier coefficients on a torus grid, indexed by `(m, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusSpectrum {
    pub grid: TorusGrid,
    pub coeffs: Vec<Complex64>,
}

impl TorusSpectrum {
    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.len();
        TorusSpectrum {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Component `(m, n)`, exactly zero if not representable.
    pub fn get(&self, m: Index, n: Index) -> Complex64 {
        self.grid
            .slot(m, n)
            .map_or(Complex64::new(0.0, 0.0), |s| self.coeffs[s])
    }

    /// Signed-frequency view of the nonzero components.
    pub fn iter(&self) -> impl Iterator<Item = ((Index, Index), Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .filter_map(|(s, &c)| self.grid.frequency(s).map(|f| (f, c)))
    }

    /// `Σ c_mn e^{i(G₁ₘ+G₂ₙ)·r}` on the physical diagonal.
    pub fn eval_diagonal(&self, r: Vector) -> Complex64 {
        self.iter()
            .map(|((m, n), c)| c * Complex64::from_polar(1.0, dot(self.grid.wavevector(m, n), r)))
            .sum()
    }

    fn from_values(grid: TorusGrid, values: &[f64]) -> Self {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let shape = grid.sizes.clone();
        fft::transform(&mut data, &shape, Direction::Forward);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
        TorusSpectrum { grid, coeffs: data }
    }
}

fn check_index(result: &SpectrumResult, j: usize) -> Result<()> {
    if j >= result.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: result.len(),
        });
    }
    Ok(())
}

fn check_result(result: &SpectrumResult, basis: &PlaneWaveBasis) -> Result<()> {
    if result.basis_size != basis.len() {
        return Err(Error::Mismatch(format!(
            "spectrum has basis size {} but the basis has {} entries",
            result.basis_size,
            basis.len()
        )));
    }
    Ok(())
}

/// `u_j(r)` at arbitrary points.
pub fn eigenfunction_at(
    result: &SpectrumResult,
    j: usize,
    basis: &PlaneWaveBasis,
    points: &[Vector],
) -> Result<Vec<Complex64>> {
    check_result(result, basis)?;
    check_index(result, j)?;
    let coeffs = &result.eigenvectors[j];
    let waves: Vec<(Vector, Complex64)> = basis
        .entries()
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(e, &c)| (add(result.k, e.g), c))
        .collect();
    Ok(points
        .par_iter()
        .map(|&r| {
            waves
                .iter()
                .map(|&(q, c)| c * Complex64::from_polar(1.0, dot(q, r)))
                .sum()
        })
        .collect())
}

pub fn eigenfunction_on_grid(
    result: &SpectrumResult,
    j: usize,
    basis: &PlaneWaveBasis,
    grid: &BoxGrid,
) -> Result<Vec<Complex64>> {
    eigenfunction_at(result, j, basis, &grid.points())
}

/// Writes `x[,y],re,im,abs2`.
pub fn write_eigenfunction_csv<W: Write>(w: W, grid: &BoxGrid, u: &[Complex64]) -> Result<()> {
    let header = if grid.dim == 1 { "x,re,im,abs2" } else { "x,y,re,im,abs2" };
    output::write_rows(
        w,
        header,
        u.iter().enumerate().map(|(i, z)| {
            let p = grid.point(i);
            let mut row = p[..grid.dim].to_vec();
            row.extend([z.re, z.im, z.norm_sqr()]);
            row
        }),
    )
}

/// Inverse participation ratio `n·Σ|u|⁴ / (Σ|u|²)²`.
pub fn ipr(u: &[Complex64]) -> Result<f64> {
    let s2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    if s2 == 0.0 {
        return Err(Error::param("u", "all-zero function has no participation ratio"));
    }
    let s4: f64 = u.iter().map(|z| z.norm_sqr().powi(2)).sum();
    Ok(s4 / (s2 * s2) * u.len() as f64)
}

/// Periodic part of `ũ_j` sampled on the torus grid.
pub fn orbital_on_torus(
    result: &SpectrumResult,
    j: usize,
    basis: &PlaneWaveBasis,
    grid: &TorusGrid,
) -> Result<Vec<Complex64>> {
    check_result(result, basis)?;
    check_index(result, j)?;
    grid.check_resolves(basis)?;
    Ok(torus_field(&result.eigenvectors[j], basis, grid))
}

fn torus_field(coeffs: &[Complex64], basis: &PlaneWaveBasis, grid: &TorusGrid) -> Vec<Complex64> {
    let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (e, &c) in basis.entries().iter().zip(coeffs) {
        // check_resolves guarantees every basis frequency has a slot
        data[grid.slot(e.m, e.n).expect("frequency on grid")] += c;
    }
    fft::transform(&mut data, grid.sizes(), Direction::Inverse);
    data
}

/// `ũ_j(r₁, r₂)` by direct summation (including the Bloch phase on `r₁`).
pub fn orbital_highdim_at(
    result: &SpectrumResult,
    j: usize,
    basis: &PlaneWaveBasis,
    r1: Vector,
    r2: Vector,
) -> Result<Complex64> {
    check_result(result, basis)?;
    check_index(result, j)?;
    let pair = basis.pair();
    let periodic: Complex64 = basis
        .entries()
        .iter()
        .zip(&result.eigenvectors[j])
        .map(|(e, &c)| {
            let ph = dot(pair.lat1.reciprocal_vector(e.m), r1) + dot(pair.lat2.reciprocal_vector(e.n), r2);
            c * Complex64::from_polar(1.0, ph)
        })
        .sum();
    Ok(periodic * Complex64::from_polar(1.0, dot(result.k, r1)))
}

/// Torus density `ρ̃` with its Fourier components.
#[derive(Clone, Debug, PartialEq)]
pub struct HighDimDensity {
    pub values: Vec<f64>,
    pub fourier: TorusSpectrum,
    /// Grid points that were slightly negative and set to zero.
    pub clipped: usize,
}

const CLIP_TOL: f64 = 1e-12;

impl HighDimDensity {
    pub fn grid(&self) -> &TorusGrid {
        &self.fourier.grid
    }

    /// Builds a density from grid values. Values below `−1e-12·max(1, max ρ)`
    /// are an error; smaller negative values are clipped and counted.
    pub fn from_values(grid: TorusGrid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Mismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let scale = values.iter().copied().fold(1.0, f64::max);
        let mut clipped = 0;
        for (i, v) in values.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < -CLIP_TOL * scale {
                    return Err(Error::NegativeDensity { index: i, value: *v });
                }
                *v = 0.0;
                clipped += 1;
            }
        }
        let fourier = TorusSpectrum::from_values(grid, &values);
        Ok(HighDimDensity {
            values,
            fourier,
            clipped,
        })
    }

    /// `ρ̂(0)`, the number of electrons per unit volume.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `(1 − α)·self + α·other` on values and components alike.
    pub fn mix(&self, other: &HighDimDensity, alpha: f64) -> Result<Self> {
        if self.grid() != other.grid() {
            return Err(Error::Mismatch("densities live on different torus grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
            .collect();
        let coeffs = self
            .fourier
            .coeffs
            .iter()
            .zip(&other.fourier.coeffs)
            .map(|(a, b)| a * (1.0 - alpha) + b * alpha)
            .collect();
        Ok(HighDimDensity {
            values,
            fourier: TorusSpectrum {
                grid: self.grid().clone(),
                coeffs,
            },
            clipped: 0,
        })
    }

    /// `max |ρ̂_a − ρ̂_b|` over all components.
    pub fn max_component_difference(&self, other: &HighDimDensity) -> f64 {
        self.fourier
            .coeffs
            .iter()
            .zip(&other.fourier.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `ρ(r) = ρ̃(r, r)` evaluated exactly from the Fourier components.
    pub fn diagonal(&self, points: &[Vector]) -> Vec<f64> {
        let comps: Vec<(Vector, Complex64)> = self
            .fourier
            .iter()
            .map(|((m, n), c)| (self.grid().wavevector(m, n), c))
            .collect();
        points
            .par_iter()
            .map(|&r| {
                comps
                    .iter()
                    .map(|&(g, c)| (c * Complex64::from_polar(1.0, dot(g, r))).re)
                    .sum()
            })
            .collect()
    }

    /// Writes `x[,y],rho` along the physical diagonal.
    pub fn write_diagonal_csv<W: Write>(&self, w: W, grid: &BoxGrid) -> Result<()> {
        let header = if grid.dim == 1 { "x,rho" } else { "x,y,rho" };
        let rho = self.diagonal(&grid.points());
        output::write_rows(
            w,
            header,
            rho.iter().enumerate().map(|(i, &v)| {
                let mut row = grid.point(i)[..grid.dim].to_vec();
                row.push(v);
                row
            }),
        )
    }

    /// Binary dump: magic `IPWD`, `u32` axis count, one `u32` per axis size,
    /// then row-major little-endian `f64` values.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"IPWD")?;
        let sizes = self.grid().sizes();
        w.write_all(&(sizes.len() as u32).to_le_bytes())?;
        for &n in sizes {
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Torus density with weight `1/N_k` per wavevector.
pub fn density_highdim(
    results: &[SpectrumResult],
    occ: &OccupationModel,
    basis: &PlaneWaveBasis,
    grid: &TorusGrid,
) -> Result<HighDimDensity> {
    let w = vec![1.0 / results.len().max(1) as f64; results.len()];
    density_highdim_weighted(results, occ, basis, grid, &w)
}

/// `ρ̃ = Σ_k w_k Σ_j f(λ_j^k) |ũ_j^k|²`.
pub fn density_highdim_weighted(
    results: &[SpectrumResult],
    occ: &OccupationModel,
    basis: &PlaneWaveBasis,
    grid: &TorusGrid,
    weights: &[f64],
) -> Result<HighDimDensity> {
    if results.is_empty() {
        return Err(Error::param("kpoints", "no spectra supplied"));
    }
    if weights.len() != results.len() {
        return Err(Error::Mismatch("one weight per wavevector is required".into()));
    }
    grid.check_resolves(basis)?;
    let mut jobs = Vec::new();
    for (r, &w) in results.iter().zip(weights) {
        check_result(r, basis)?;
        for (j, &l) in r.eigenvalues.iter().enumerate() {
            let f = w * occupation(l, occ);
            if f > 1e-16 * w {
                jobs.push((&r.eigenvectors[j], f));
            }
        }
    }
    let n = grid.len();
    let values = jobs
        .par_iter()
        .fold(
            || vec![0.0; n],
            |mut acc, &(coeffs, f)| {
                let u = torus_field(coeffs, basis, grid);
                for (a, z) in acc.iter_mut().zip(&u) {
                    *a += f * z.norm_sqr();
                }
                acc
            },
        )
        .reduce(
            || vec![0.0; n],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    HighDimDensity::from_values(grid.clone(), values)
}

/// Energy per volume and potential components of an interaction term.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTerm {
    pub energy: f64,
    pub potential: TorusSpectrum,
}

/// Hartree term: `v̂_H(G) = ρ̂(G)/|G|²` and `E_H = ½ Σ_{G≠0} |ρ̂(G)|²/|G|²`.
pub fn hartree(density: &HighDimDensity) -> Result<FieldTerm> {
    let grid = density.grid();
    let mut potential = TorusSpectrum::zeros(grid.clone());
    let mut energy = 0.0;
    let scale = norm2(grid.wavevector([1, 0], [0, 0])).min(norm2(grid.wavevector([0, 0], [1, 0])));
    for (slot, &rho) in density.fourier.coeffs.iter().enumerate() {
        let Some((m, n)) = grid.frequency(slot) else {
            continue;
        };
        if m == [0, 0] && n == [0, 0] {
            continue;
        }
        let g2 = norm2(grid.wavevector(m, n));
        if g2 <= 1e-18 * scale {
            return Err(Error::SingularConfiguration(format!(
                "composite wavevector ({m:?}, {n:?}) vanishes; the layers are commensurate"
            )));
        }
        potential.coeffs[slot] = rho / g2;
        energy += 0.5 * rho.norm_sqr() / g2;
    }
    Ok(FieldTerm { energy, potential })
}

/// Pointwise exchange-correlation model.
pub trait XcFunctional: Sync {
    fn name(&self) -> &'static str;
    /// Energy per electron `ε_xc(ρ)`.
    fn epsilon(&self, rho: f64) -> f64;
    /// Potential `v_xc(ρ) = (ρ·ε_xc(ρ))′`.
    fn potential(&self, rho: f64) -> f64;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroXc;

impl XcFunctional for ZeroXc {
    fn name(&self) -> &'static str {
        "zero"
    }
    fn epsilon(&self, _: f64) -> f64 {
        0.0
    }
    fn potential(&self, _: f64) -> f64 {
        0.0
    }
}

/// Slater-Dirac exchange `ε_x = −c_x ρ^{1/3}`.
#[derive(Clone, Copy, Debug)]
pub struct DiracExchange {
    pub cx: f64,
}

impl Default for DiracExchange {
    fn default() -> Self {
        DiracExchange {
            cx: 0.75 * (3.0 / std::f64::consts::PI).cbrt(),
        }
    }
}

impl XcFunctional for DiracExchange {
    fn name(&self) -> &'static str {
        "dirac"
    }
    fn epsilon(&self, rho: f64) -> f64 {
        -self.cx * rho.max(0.0).cbrt()
    }
    fn potential(&self, rho: f64) -> f64 {
        -4.0 / 3.0 * self.cx * rho.max(0.0).cbrt()
    }
}

/// Relative mismatch between `v_xc(x)` and a central difference of
/// `x·ε_xc(x)`.
pub fn xc_consistency_error(f: &dyn XcFunctional, x: f64) -> f64 {
    let h = 1e-5 * x.abs().max(1e-3);
    let g = |y: f64| y * f.epsilon(y);
    let fd = (g(x + h) - g(x - h)) / (2.0 * h);
    let v = f.potential(x);
    (v - fd).abs() / v.abs().max(fd.abs()).max(1e-300)
}

/// Exchange-correlation term. The energy per volume is
/// `Σ ε̂_xc(G)·conj(ρ̂(G))`, the torus mean of `ρ̃·ε_xc(ρ̃)`.
pub fn xc_apply(density: &HighDimDensity, functional: &dyn XcFunctional) -> Result<FieldTerm> {
    let grid = density.grid().clone();
    let scale = density.values.iter().copied().fold(1.0, f64::max);
    if let Some((i, &v)) = density
        .values
        .iter()
        .enumerate()
        .find(|(_, &v)| v < -CLIP_TOL * scale)
    {
        return Err(Error::NegativeDensity { index: i, value: v });
    }
    let eps: Vec<f64> = density.values.iter().map(|&r| functional.epsilon(r.max(0.0))).collect();
    let pot: Vec<f64> = density.values.iter().map(|&r| functional.potential(r.max(0.0))).collect();
    let eps_hat = TorusSpectrum::from_values(grid.clone(), &eps);
    let energy = eps_hat
        .coeffs
        .iter()
        .zip(&density.fourier.coeffs)
        .map(|(e, r)| (e * r.conj()).re)
        .sum();
    Ok(FieldTerm {
        energy,
        potential: TorusSpectrum::from_values(grid, &pot),
    })
}
