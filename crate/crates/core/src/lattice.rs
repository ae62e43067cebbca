//! Bravais lattices, incommensurateness diagnostics and the truncated
//! composite plane-wave basis.
//!
//! Vectors and integer indices are stored as two-component arrays for both
//! `d = 1` and `d = 2`; in one dimension the second component is always zero.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Integer lattice coordinates (`[m, 0]` in one dimension).
pub type Index = [i32; 2];
/// Real vector (`[x, 0]` in one dimension).
pub type Vector = [f64; 2];
/// Row-major 2x2 matrix; columns hold lattice vectors.
pub type Matrix = [[f64; 2]; 2];

/// Default maximum number of plane waves accepted by [`build_basis`].
pub const DEFAULT_MAX_BASIS: usize = 200_000;
/// Default tolerance of the commensurateness witness search.
pub const DEFAULT_COMMENSURATE_TOL: f64 = 1e-8;
/// Default index bound of the commensurateness witness search.
pub const DEFAULT_COMMENSURATE_BOUND: i32 = 50;

#[inline]
pub fn dot(a: Vector, b: Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn add(a: Vector, b: Vector) -> Vector {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vector, b: Vector) -> Vector {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn norm2(a: Vector) -> f64 {
    dot(a, a)
}

#[inline]
pub fn index_sub(a: Index, b: Index) -> Index {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn index_neg(a: Index) -> Index {
    [-a[0], -a[1]]
}

fn mat_vec(m: &Matrix, v: Vector) -> Vector {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

fn det(m: &Matrix) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn pad(dim: usize, a: &Matrix) -> Matrix {
    if dim == 1 {
        [[a[0][0], 0.0], [0.0, 1.0]]
    } else {
        *a
    }
}

/// Returns `2π·A⁻ᵀ` for a `dim`-dimensional basis matrix.
///
/// For `dim = 1` only `a[0][0]` is read and the result is padded with a unit
/// second axis.
pub fn reciprocal_basis(dim: usize, a: &Matrix) -> Result<Matrix> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidLattice(format!("dimension {dim} is not 1 or 2")));
    }
    let a = pad(dim, a);
    let d = det(&a);
    let scale = a.iter().flatten().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if !d.is_finite() || d.abs() <= 1e-14 * scale.powi(dim as i32).max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidLattice(format!("singular basis matrix (det = {d:e})")));
    }
    if dim == 1 {
        return Ok([[2.0 * PI / a[0][0], 0.0], [0.0, 2.0 * PI]]);
    }
    // inverse transpose of [[a, b], [c, d]] is [[d, -c], [-b, a]] / det
    let f = 2.0 * PI / d;
    Ok([
        [f * a[1][1], -f * a[1][0]],
        [-f * a[0][1], f * a[0][0]],
    ])
}

/// A `d`-dimensional Bravais lattice `{A n : n ∈ Zᵈ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    dim: usize,
    basis: Matrix,
    reciprocal: Matrix,
    cell_volume: f64,
}

impl Lattice {
    pub fn new(dim: usize, basis: Matrix) -> Result<Self> {
        let reciprocal = reciprocal_basis(dim, &basis)?;
        let basis = pad(dim, &basis);
        let cell_volume = if dim == 1 { basis[0][0].abs() } else { det(&basis).abs() };
        Ok(Lattice {
            dim,
            basis,
            reciprocal,
            cell_volume,
        })
    }

    /// One-dimensional chain with lattice constant `l`.
    pub fn chain(l: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidLattice(format!("lattice constant {l} must be positive")));
        }
        Lattice::new(1, [[l, 0.0], [0.0, 1.0]])
    }

    /// Triangular lattice with constant `l` whose first vector is rotated by
    /// `theta`: columns `l·(cos θ, sin θ)` and `l·(cos(θ+π/3), sin(θ+π/3))`.
    pub fn hexagonal(l: f64, theta: f64) -> Result<Self> {
        let t2 = theta + PI / 3.0;
        Lattice::new(
            2,
            [
                [l * theta.cos(), l * t2.cos()],
                [l * theta.sin(), l * t2.sin()],
            ],
        )
    }

    /// Lattice from its column vectors.
    pub fn from_vectors(vectors: &[Vector]) -> Result<Self> {
        match vectors {
            [a] => Lattice::chain(a[0]),
            [a, b] => Lattice::new(2, [[a[0], b[0]], [a[1], b[1]]]),
            _ => Err(Error::InvalidLattice(format!(
                "expected 1 or 2 lattice vectors, got {}",
                vectors.len()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn reciprocal_basis(&self) -> &Matrix {
        &self.reciprocal
    }

    /// `|Γ|`, the real-space cell volume.
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// `|Γ*| = (2π)ᵈ / |Γ|`.
    pub fn reciprocal_cell_volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32) / self.cell_volume
    }

    /// Lattice vector `A p`.
    pub fn lattice_vector(&self, p: Index) -> Vector {
        self.mask(mat_vec(&self.basis, [p[0] as f64, p[1] as f64]))
    }

    /// Point `A s` for fractional coordinates `s`.
    pub fn lattice_vector_frac(&self, s: Vector) -> Vector {
        self.mask(mat_vec(&self.basis, s))
    }

    /// Reciprocal lattice vector `G_m = 2π A⁻ᵀ m`.
    pub fn reciprocal_vector(&self, m: Index) -> Vector {
        self.mask(mat_vec(&self.reciprocal, [m[0] as f64, m[1] as f64]))
    }

    /// Fractional coordinates `α` of a wavevector with `g = 2π A⁻ᵀ α`.
    pub fn reciprocal_fractional(&self, g: Vector) -> Vector {
        // α = Aᵀ g / 2π
        let a = &self.basis;
        let s = 1.0 / (2.0 * PI);
        if self.dim == 1 {
            [a[0][0] * g[0] * s, 0.0]
        } else {
            [
                (a[0][0] * g[0] + a[1][0] * g[1]) * s,
                (a[0][1] * g[0] + a[1][1] * g[1]) * s,
            ]
        }
    }

    /// Fractional coordinates `s` of a real-space point with `r = A s`.
    pub fn real_fractional(&self, r: Vector) -> Vector {
        let g = &self.reciprocal;
        let s = 1.0 / (2.0 * PI);
        if self.dim == 1 {
            [r[0] / self.basis[0][0], 0.0]
        } else {
            // s = A⁻¹ r = Bᵀ r / 2π
            [
                (g[0][0] * r[0] + g[1][0] * r[1]) * s,
                (g[0][1] * r[0] + g[1][1] * r[1]) * s,
            ]
        }
    }

    /// Smallest singular value of the reciprocal basis.
    pub fn min_reciprocal_singular_value(&self) -> f64 {
        let b = &self.reciprocal;
        if self.dim == 1 {
            return b[0][0].abs();
        }
        // eigenvalues of BᵀB
        let p = b[0][0] * b[0][0] + b[1][0] * b[1][0];
        let q = b[0][1] * b[0][1] + b[1][1] * b[1][1];
        let r = b[0][0] * b[0][1] + b[1][0] * b[1][1];
        let mean = 0.5 * (p + q);
        let disc = (0.25 * (p - q) * (p - q) + r * r).sqrt();
        (mean - disc).max(0.0).sqrt()
    }

    /// Zeroes the unused component of a vector for one-dimensional lattices.
    pub fn mask(&self, v: Vector) -> Vector {
        if self.dim == 1 {
            [v[0], 0.0]
        } else {
            v
        }
    }

    /// All integer vectors with components in `[-bound, bound]` (only the
    /// first component in one dimension), in lexicographic order.
    pub(crate) fn index_box(&self, bound: i32) -> Vec<Index> {
        let mut out = Vec::new();
        if self.dim == 1 {
            for i in -bound..=bound {
                out.push([i, 0]);
            }
        } else {
            for i in -bound..=bound {
                for j in -bound..=bound {
                    out.push([i, j]);
                }
            }
        }
        out
    }

    /// Integer vectors `m` with `|G_m|² ≤ radius2`, lexicographically sorted.
    pub fn reciprocal_ball(&self, radius2: f64) -> Vec<Index> {
        let bound = (radius2.max(0.0).sqrt() / self.min_reciprocal_singular_value()).ceil() as i32 + 1;
        self.index_box(bound)
            .into_iter()
            .filter(|&m| norm2(self.reciprocal_vector(m)) <= radius2)
            .collect()
    }
}

/// Outcome of [`check_commensurate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommensurateDiagnostic {
    pub commensurate: bool,
    pub witness: Option<(Index, Index)>,
}

/// Searches nonzero pairs `(m, n)` with components in `[-bound, bound]` for
/// `|G₁ₘ + G₂ₙ| < tol`.
///
/// The reported witness is the first one in order of increasing max-norm of
/// `(m, n)`, ties broken lexicographically.
pub fn check_commensurate(
    lat1: &Lattice,
    lat2: &Lattice,
    tol: f64,
    bound: i32,
) -> CommensurateDiagnostic {
    let mut best: Option<(i32, Index, Index)> = None;
    if lat1.dim() == lat2.dim() {
        for m in lat1.index_box(bound) {
            if m == [0, 0] {
                continue;
            }
            let g1 = lat1.reciprocal_vector(m);
            // the only candidate n is the rounded solution of G₂ₙ = -G₁ₘ
            let alpha = lat2.reciprocal_fractional([-g1[0], -g1[1]]);
            let n = [alpha[0].round() as i32, alpha[1].round() as i32];
            if n[0].abs() > bound || n[1].abs() > bound {
                continue;
            }
            let g = add(g1, lat2.reciprocal_vector(n));
            if norm2(g).sqrt() < tol {
                let size = m[0].abs().max(m[1].abs()).max(n[0].abs()).max(n[1].abs());
                let better = match best {
                    None => true,
                    Some((s, bm, bn)) => (size, m, n) < (s, bm, bn),
                };
                if better {
                    best = Some((size, m, n));
                }
            }
        }
    }
    CommensurateDiagnostic {
        commensurate: best.is_some(),
        witness: best.map(|(_, m, n)| (m, n)),
    }
}

/// Two stacked lattices with an optional in-plane shift of the second layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncommensuratePair {
    pub lat1: Lattice,
    pub lat2: Lattice,
    pub shift: Vector,
    commensurate_fixture: bool,
}

impl IncommensuratePair {
    /// Validates incommensurateness with the default witness search.
    pub fn new(lat1: Lattice, lat2: Lattice) -> Result<Self> {
        Self::with_search(lat1, lat2, DEFAULT_COMMENSURATE_TOL, DEFAULT_COMMENSURATE_BOUND)
    }

    pub fn with_search(lat1: Lattice, lat2: Lattice, tol: f64, bound: i32) -> Result<Self> {
        if lat1.dim() != lat2.dim() {
            return Err(Error::InvalidLattice(format!(
                "layer dimensions differ ({} vs {})",
                lat1.dim(),
                lat2.dim()
            )));
        }
        let diag = check_commensurate(&lat1, &lat2, tol, bound);
        if let Some((m, n)) = diag.witness {
            return Err(Error::InvalidLattice(format!(
                "lattices are commensurate: G1{m:?} + G2{n:?} = 0"
            )));
        }
        Ok(IncommensuratePair {
            lat1,
            lat2,
            shift: [0.0, 0.0],
            commensurate_fixture: false,
        })
    }

    /// Accepts a commensurate pair without validation, for tests and for
    /// deduplicated bases.
    pub fn commensurate_fixture(lat1: Lattice, lat2: Lattice) -> Result<Self> {
        if lat1.dim() != lat2.dim() {
            return Err(Error::InvalidLattice("layer dimensions differ".into()));
        }
        Ok(IncommensuratePair {
            lat1,
            lat2,
            shift: [0.0, 0.0],
            commensurate_fixture: true,
        })
    }

    pub fn with_shift(mut self, shift: Vector) -> Self {
        self.shift = self.lat1.mask(shift);
        self
    }

    pub fn dim(&self) -> usize {
        self.lat1.dim()
    }

    pub fn is_commensurate_fixture(&self) -> bool {
        self.commensurate_fixture
    }

    /// Composite wavevector `G₁ₘ + G₂ₙ`.
    pub fn composite(&self, m: Index, n: Index) -> Vector {
        add(self.lat1.reciprocal_vector(m), self.lat2.reciprocal_vector(n))
    }
}

/// One plane wave `(m, n)` of the truncated basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisEntry {
    pub m: Index,
    pub n: Index,
    /// Composite wavevector `G₁ₘ + G₂ₙ`.
    pub g: Vector,
    /// `(|G₁ₘ|², |G₂ₙ|²)`.
    pub kinetic_split: (f64, f64),
}

/// Composite plane waves `{(m, n) : |G₁ₘ|² + |G₂ₙ|² ≤ 2 Ec}` sorted
/// lexicographically by `(m, n)`.
#[derive(Clone, Debug)]
pub struct PlaneWaveBasis {
    pair: IncommensuratePair,
    ec: f64,
    entries: Vec<BasisEntry>,
    lookup: HashMap<(Index, Index), usize>,
    duplicates: Vec<(usize, usize)>,
}

/// Builds the basis with the default size limit.
pub fn build_basis(pair: &IncommensuratePair, ec: f64) -> Result<PlaneWaveBasis> {
    build_basis_with_limit(pair, ec, DEFAULT_MAX_BASIS)
}

pub fn build_basis_with_limit(
    pair: &IncommensuratePair,
    ec: f64,
    max_size: usize,
) -> Result<PlaneWaveBasis> {
    if !(ec.is_finite() && ec > 0.0) {
        return Err(Error::param("Ec", format!("energy cutoff must be positive, got {ec}")));
    }
    let cut = 2.0 * ec;
    let with_norm = |lat: &Lattice| -> Vec<(Index, f64)> {
        lat.reciprocal_ball(cut)
            .into_iter()
            .map(|m| (m, norm2(lat.reciprocal_vector(m))))
            .collect()
    };
    let ms = with_norm(&pair.lat1);
    let ns = with_norm(&pair.lat2);

    // count first so an oversized request fails before allocating
    let n_c: usize = ms
        .iter()
        .map(|&(_, a)| ns.iter().filter(|&&(_, b)| a + b <= cut).count())
        .sum();
    if n_c > max_size {
        return Err(Error::BasisTooLarge { n_c, limit: max_size });
    }

    let mut entries = Vec::with_capacity(n_c);
    for &(m, a) in &ms {
        for &(n, b) in &ns {
            if a + b <= cut {
                entries.push(BasisEntry {
                    m,
                    n,
                    g: pair.composite(m, n),
                    kinetic_split: (a, b),
                });
            }
        }
    }
    Ok(PlaneWaveBasis::from_entries(*pair, ec, entries))
}

impl PlaneWaveBasis {
    fn from_entries(pair: IncommensuratePair, ec: f64, entries: Vec<BasisEntry>) -> Self {
        let lookup = entries
            .iter()
            .enumerate()
            .map(|(i, e)| ((e.m, e.n), i))
            .collect();
        let duplicates = find_duplicates(&entries);
        PlaneWaveBasis {
            pair,
            ec,
            entries,
            lookup,
            duplicates,
        }
    }

    pub fn pair(&self) -> &IncommensuratePair {
        &self.pair
    }

    pub fn dim(&self) -> usize {
        self.pair.dim()
    }

    pub fn ec(&self) -> f64 {
        self.ec
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn position(&self, m: Index, n: Index) -> Option<usize> {
        self.lookup.get(&(m, n)).copied()
    }

    /// Index pairs whose composite wavevectors coincide (commensurate input).
    pub fn duplicates(&self) -> &[(usize, usize)] {
        &self.duplicates
    }

    /// Drops every entry whose composite wavevector repeats an earlier one.
    pub fn dedup_composite(&self) -> PlaneWaveBasis {
        let mut drop = vec![false; self.entries.len()];
        for &(_, j) in &self.duplicates {
            drop[j] = true;
        }
        let entries = self
            .entries
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(e, _)| *e)
            .collect();
        PlaneWaveBasis::from_entries(self.pair, self.ec, entries)
    }

    /// Smallest distance between two composite wavevectors.
    pub fn min_composite_separation(&self) -> f64 {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by(|&a, &b| self.entries[a].g[0].total_cmp(&self.entries[b].g[0]));
        let mut best = f64::INFINITY;
        for (pos, &i) in order.iter().enumerate() {
            let gi = self.entries[i].g;
            for &j in &order[pos + 1..] {
                let gj = self.entries[j].g;
                if gj[0] - gi[0] >= best {
                    break;
                }
                best = best.min(norm2(sub(gi, gj)).sqrt());
            }
        }
        best
    }

    /// Largest `|component|` of `m` (`which = 0`) or `n` (`which = 1`) along
    /// each axis.
    pub fn max_index(&self, which: usize) -> Index {
        let mut out = [0, 0];
        for e in &self.entries {
            let v = if which == 0 { e.m } else { e.n };
            out[0] = out[0].max(v[0].abs());
            out[1] = out[1].max(v[1].abs());
        }
        out
    }

    /// Number of wavevectors `k + G` lying in the reciprocal cell of
    /// `reference` that contains the origin (half-open fractional
    /// coordinates `[0, 1)ᵈ`).
    pub fn count_in_reference_cell(&self, reference: &Lattice, k: Vector) -> usize {
        self.entries
            .iter()
            .filter(|e| {
                let a = reference.reciprocal_fractional(add(k, e.g));
                let inside = |x: f64| (0.0..1.0).contains(&x);
                inside(a[0]) && (reference.dim() == 1 || inside(a[1]))
            })
            .count()
    }
}

fn find_duplicates(entries: &[BasisEntry]) -> Vec<(usize, usize)> {
    let scale = entries
        .iter()
        .map(|e| norm2(e.g).sqrt())
        .fold(1.0_f64, f64::max);
    let tol = 1e-9 * scale;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| entries[a].g[0].total_cmp(&entries[b].g[0]));
    let mut out = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if entries[j].g[0] - entries[i].g[0] > tol {
                break;
            }
            if norm2(sub(entries[i].g, entries[j].g)).sqrt() <= tol {
                out.push((i.min(j), i.max(j)));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Folds every composite wavevector into the reciprocal cell of `reference`
/// and returns the largest deviation of a histogram cell's occupation
/// fraction from the uniform value.
pub fn uniformity_discrepancy(
    basis: &PlaneWaveBasis,
    reference: &Lattice,
    bins_per_axis: usize,
) -> Result<f64> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    if bins_per_axis == 0 {
        return Err(Error::param("bins_per_axis", "must be at least 1"));
    }
    let dim = reference.dim();
    let cells = bins_per_axis.pow(dim as u32);
    let mut hist = vec![0usize; cells];
    let bin = |x: f64| -> usize {
        let f = x - x.floor();
        ((f * bins_per_axis as f64) as usize).min(bins_per_axis - 1)
    };
    for e in basis.entries() {
        let a = reference.reciprocal_fractional(e.g);
        let idx = if dim == 1 {
            bin(a[0])
        } else {
            bin(a[0]) * bins_per_axis + bin(a[1])
        };
        hist[idx] += 1;
    }
    let total = basis.len() as f64;
    let uniform = 1.0 / cells as f64;
    Ok(hist
        .iter()
        .map(|&c| (c as f64 / total - uniform).abs())
        .fold(0.0, f64::max))
}
