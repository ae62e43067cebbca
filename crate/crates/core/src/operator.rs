//! Truncated Hamiltonian in the composite plane-wave basis and its dense
//! Hermitian eigensolver.
//!
//! The matrix element between `(m, n)` and `(m', n')` is
//!
//! ```text
//! ½|k + G₁ₘ + G₂ₙ|² δ_mm' δ_nn' + V₁(m−m') δ_nn' + V₂(n−n') δ_mm'
//! ```
//!
//! Two plane waves couple only through a single-layer reciprocal vector of
//! either lattice, so every row has at most `#m + #n` nonzero potential
//! entries. Storage is nevertheless dense since the eigensolver is.

use std::io::{Read, Write};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::traits::ComplexField;
use faer::diag::Diag;
use faer::{Mat, Par};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{add, dot, index_sub, PlaneWaveBasis, Vector};
use crate::potential::FourierPotential;

/// Degeneracy threshold used when canonicalizing eigenvectors.
pub const DEGENERACY_GAP: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-12;
const DUMP_MAGIC: &[u8; 4] = b"IPWH";

/// How a Hamiltonian was assembled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Standard { k: Vector },
    HighDim { k1: Vector, k2: Vector },
    Shifted { k: Vector, tau: Vector },
    KohnSham { k: Vector },
}

#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    n: usize,
    dim: usize,
    k: Vector,
    ec: f64,
    data: Vec<Complex64>,
    provenance: Provenance,
    coefficient_misses: usize,
}

impl HamiltonianMatrix {
    /// Wraps a row-major square matrix (used for fixtures and dumps).
    pub fn from_dense(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Mismatch(format!(
                "{} entries do not form a {n}x{n} matrix",
                data.len()
            )));
        }
        Ok(HamiltonianMatrix {
            n,
            dim: 1,
            k: [0.0, 0.0],
            ec: f64::NAN,
            data,
            provenance: Provenance::Standard { k: [0.0, 0.0] },
            coefficient_misses: 0,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> Vector {
        self.k
    }

    pub fn ec(&self) -> f64 {
        self.ec
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Number of potential lookups that fell outside a layer's stored
    /// coefficient cutoff and were treated as zero.
    pub fn coefficient_misses(&self) -> usize {
        self.coefficient_misses
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Row-major entries.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub(crate) fn set_provenance(&mut self, p: Provenance) {
        self.provenance = p;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |H_ij − conj(H_ji)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.n;
        let mut dev = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.data
            .par_chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `⟨v|H|v⟩` (real for Hermitian `H`).
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        let hv = self.apply(v);
        v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `‖H v − λ v‖₂`.
    pub fn residual(&self, lambda: f64, v: &[Complex64]) -> f64 {
        self.apply(v)
            .iter()
            .zip(v)
            .map(|(hv, x)| (hv - x * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// Writes the binary dump: magic `IPWH`, `u32` size, `u32` dimension,
    /// `u32` reserved zero, then row-major little-endian `(re, im)` pairs.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for z in &self.data {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != DUMP_MAGIC {
            return Err(Error::Mismatch("not a Hamiltonian dump (bad magic)".into()));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
        let (n, dim) = (word(4), word(8));
        let mut buf = vec![0u8; 16 * n * n];
        r.read_exact(&mut buf)?;
        let data = buf
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        let mut h = HamiltonianMatrix::from_dense(n, data)?;
        h.dim = dim;
        Ok(h)
    }
}

fn check_inputs(basis: &PlaneWaveBasis, v1: &FourierPotential, v2: &FourierPotential) -> Result<()> {
    let pair = basis.pair();
    if v1.lattice() != &pair.lat1 || v2.lattice() != &pair.lat2 {
        return Err(Error::Mismatch(
            "potential lattices differ from the basis lattices".into(),
        ));
    }
    if let Some(&(first, second)) = basis.duplicates().first() {
        return Err(Error::Commensurate { first, second });
    }
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    Ok(())
}

fn assemble_impl(
    basis: &PlaneWaveBasis,
    v1: &FourierPotential,
    v2: &FourierPotential,
    k: Vector,
    tau: Option<Vector>,
    provenance: Provenance,
) -> Result<HamiltonianMatrix> {
    check_inputs(basis, v1, v2)?;
    let lat2 = basis.pair().lat2;
    let k = lat2.mask(k);
    let entries = basis.entries();
    let n = entries.len();
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    let misses: usize = data
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, row)| {
            let ei = &entries[i];
            let mut misses = 0;
            for (j, slot) in row.iter_mut().enumerate() {
                let ej = &entries[j];
                let mut h = Complex64::new(0.0, 0.0);
                if i == j {
                    let q = add(k, ei.g);
                    h += 0.5 * dot(q, q);
                }
                if ei.n == ej.n {
                    let dm = index_sub(ei.m, ej.m);
                    if !v1.is_stored(dm) {
                        misses += 1;
                    }
                    h += v1.coefficient(dm);
                }
                if ei.m == ej.m {
                    let dn = index_sub(ei.n, ej.n);
                    if !v2.is_stored(dn) {
                        misses += 1;
                    }
                    let mut c = v2.coefficient(dn);
                    if let Some(tau) = tau {
                        c *= Complex64::from_polar(1.0, dot(lat2.reciprocal_vector(dn), tau));
                    }
                    h += c;
                }
                *slot = h;
            }
            misses
        })
        .sum();
    Ok(HamiltonianMatrix {
        n,
        dim: basis.dim(),
        k,
        ec: basis.ec(),
        data,
        provenance,
        coefficient_misses: misses,
    })
}

/// Truncated Hamiltonian at wavevector `k`.
pub fn assemble(
    basis: &PlaneWaveBasis,
    v1: &FourierPotential,
    v2: &FourierPotential,
    k: Vector,
) -> Result<HamiltonianMatrix> {
    assemble_impl(basis, v1, v2, k, None, Provenance::Standard { k })
}

/// Bloch matrix of the periodic lift on `Γ₁ × Γ₂` at `(k̃₁, k̃₂)`; it depends
/// on the sum `k̃₁ + k̃₂` only.
pub fn assemble_highdim(
    basis: &PlaneWaveBasis,
    v1: &FourierPotential,
    v2: &FourierPotential,
    k1: Vector,
    k2: Vector,
) -> Result<HamiltonianMatrix> {
    assemble_impl(basis, v1, v2, add(k1, k2), None, Provenance::HighDim { k1, k2 })
}

/// Hamiltonian with the second layer translated by `tau`.
pub fn assemble_shifted(
    basis: &PlaneWaveBasis,
    v1: &FourierPotential,
    v2: &FourierPotential,
    k: Vector,
    tau: Vector,
) -> Result<HamiltonianMatrix> {
    assemble_impl(basis, v1, v2, k, Some(tau), Provenance::Shifted { k, tau })
}

/// Eigenpairs of a truncated Hamiltonian, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub k: Vector,
    pub ec: f64,
    pub basis_size: usize,
    pub eigenvalues: Vec<f64>,
    /// Unit-norm coefficient vectors over the basis, one per eigenvalue.
    pub eigenvectors: Vec<Vec<Complex64>>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Full (or lowest `count`) eigendecomposition of a Hermitian matrix.
///
/// Eigenvectors within a degenerate cluster are replaced by the
/// Gram-Schmidt orthonormalization of the cluster projections of the unit
/// vectors `e₀, e₁, …`, and every eigenvector is phased so its first
/// component of at least half the maximal modulus is real positive. The
/// output is thus independent of the rotation chosen by the backend.
pub fn eigensolve(h: &HamiltonianMatrix, count: Option<usize>) -> Result<SpectrumResult> {
    let n = h.n;
    let tol = HERMITIAN_TOL * h.max_abs().max(f64::MIN_POSITIVE);
    let deviation = h.hermiticity_deviation();
    if deviation > tol {
        return Err(Error::NonHermitian {
            deviation,
            tolerance: tol,
        });
    }
    let (values, mut vectors): (Vec<f64>, Vec<Vec<Complex64>>) = if h.is_real() {
        let a = Mat::<f64>::from_fn(n, n, |i, j| h.get(i, j).re);
        let (s, u) = sequential_evd(&a)?;
        let s = s.column_vector();
        (
            (0..n).map(|i| s[i]).collect(),
            (0..n)
                .map(|j| (0..n).map(|i| Complex64::new(u[(i, j)], 0.0)).collect())
                .collect(),
        )
    } else {
        let a = Mat::<Complex64>::from_fn(n, n, |i, j| h.get(i, j));
        let (s, u) = sequential_evd(&a)?;
        let s = s.column_vector();
        (
            (0..n).map(|i| s[i].re).collect(),
            (0..n).map(|j| (0..n).map(|i| u[(i, j)]).collect()).collect(),
        )
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut sorted: Vec<Vec<Complex64>> = order.iter().map(|&i| std::mem::take(&mut vectors[i])).collect();

    canonicalize_clusters(&eigenvalues, &mut sorted);

    let keep = count.unwrap_or(n).min(n);
    eigenvalues.truncate(keep);
    sorted.truncate(keep);
    Ok(SpectrumResult {
        k: h.k,
        ec: h.ec,
        basis_size: n,
        eigenvalues,
        eigenvectors: sorted,
    })
}

/// Dense self-adjoint decomposition of the lower triangle. Pinned to a single
/// thread so results do not depend on the thread count.
fn sequential_evd<T: ComplexField>(a: &Mat<T>) -> Result<(Diag<T>, Mat<T>)> {
    let n = a.nrows();
    let mut u = Mat::zeros(n, n);
    let mut s = Diag::zeros(n);
    let scratch = evd::self_adjoint_evd_scratch::<T>(n, ComputeEigenvectors::Yes, Par::Seq, Default::default());
    evd::self_adjoint_evd(
        a.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|e| Error::EigenNonConvergence(format!("{e:?} (N = {n})")))?;
    Ok((s, u))
}

fn canonicalize_clusters(values: &[f64], vectors: &mut [Vec<Complex64>]) {
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < DEGENERACY_GAP {
            end += 1;
        }
        if end - start > 1 {
            let cluster: Vec<Vec<Complex64>> = vectors[start..end].to_vec();
            let size = cluster.len();
            let dim = cluster[0].len();
            let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(size);
            for unit in 0..dim {
                if out.len() == size {
                    break;
                }
                // projection of e_unit onto the cluster subspace
                let mut p = vec![Complex64::new(0.0, 0.0); dim];
                for v in &cluster {
                    let c = v[unit].conj();
                    for (pi, vi) in p.iter_mut().zip(v) {
                        *pi += vi * c;
                    }
                }
                for q in &out {
                    let c: Complex64 = q.iter().zip(&p).map(|(a, b)| a.conj() * b).sum();
                    for (pi, qi) in p.iter_mut().zip(q) {
                        *pi -= qi * c;
                    }
                }
                let norm = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    p.iter_mut().for_each(|z| *z /= norm);
                    out.push(p);
                }
            }
            if out.len() == size {
                vectors[start..end].clone_from_slice(&out);
            }
        }
        start = end;
    }
    for v in vectors.iter_mut() {
        fix_phase(v);
    }
}

fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    if let Some(pivot) = v.iter().find(|z| z.norm() >= 0.5 * max).copied() {
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_basis, IncommensuratePair, Lattice};
    use crate::potential::screened_coulomb;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn example1(ec: f64) -> (PlaneWaveBasis, FourierPotential, FourierPotential) {
        let pair = IncommensuratePair::new(
            Lattice::chain(1.0).unwrap(),
            Lattice::chain(PI / 2.0).unwrap(),
        )
        .unwrap();
        let basis = build_basis(&pair, ec).unwrap();
        let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 4.0 * ec).unwrap();
        let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 4.0 * ec).unwrap();
        (basis, v1, v2)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_wave_matrix() {
        let (basis, v1, v2) = example1(1.0);
        let h = assemble(&basis, &v1, &v2, [0.0, 0.0]).unwrap();
        assert_eq!(h.size(), 1);
        assert_eq!(h.get(0, 0), c(2.0));
    }

    #[test]
    fn coupling_entries() {
        let (basis, v1, v2) = example1(25.0);
        let h = assemble(&basis, &v1, &v2, [0.0, 0.0]).unwrap();
        let o = basis.position([0, 0], [0, 0]).unwrap();
        let a = basis.position([1, 0], [0, 0]).unwrap();
        let b = basis.position([0, 0], [1, 0]).unwrap();
        assert_relative_eq!(h.get(o, a).re, 1.0 / (4.0 * PI * PI + 1.0), max_relative = 1e-14);
        assert_relative_eq!(h.get(o, b).re, 1.0 / 17.0, max_relative = 1e-14);
        // (1,0) and (0,1) differ in both indices
        assert_eq!(h.get(a, b), c(0.0));
        assert_eq!(h.coefficient_misses(), 0);
    }

    #[test]
    fn free_particle_is_diagonal_kinetic() {
        let (basis, _, _) = example1(100.0);
        let pair = basis.pair();
        let z1 = FourierPotential::zero(pair.lat1);
        let z2 = FourierPotential::zero(pair.lat2);
        let k = [0.37, 0.0];
        let h = assemble(&basis, &z1, &z2, k).unwrap();
        let mut want: Vec<f64> = basis
            .entries()
            .iter()
            .map(|e| 0.5 * (k[0] + e.g[0]).powi(2))
            .collect();
        for i in 0..h.size() {
            for j in 0..h.size() {
                if i == j {
                    assert_relative_eq!(h.get(i, i).re, want[i], max_relative = 1e-14);
                } else {
                    assert_eq!(h.get(i, j), c(0.0));
                }
            }
        }
        let spec = eigensolve(&h, None).unwrap();
        want.sort_by(f64::total_cmp);
        for (a, b) in spec.eigenvalues.iter().zip(&want) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        for v in &spec.eigenvectors {
            let big = v.iter().filter(|z| z.norm() > 1e-12).count();
            assert_eq!(big, 1);
        }
    }

    #[test]
    fn highdim_matches_standard() {
        let (basis, v1, v2) = example1(60.0);
        let a = assemble(&basis, &v1, &v2, [1.0, 0.0]).unwrap();
        let b = assemble_highdim(&basis, &v1, &v2, [0.3, 0.0], [0.7, 0.0]).unwrap();
        // 0.3 + 0.7 == 1.0 exactly in binary
        assert_eq!(a.data(), b.data());
        let g = 2.0 * PI * 0.41;
        let z = assemble(&basis, &v1, &v2, [0.0, 0.0]).unwrap();
        let w = assemble_highdim(&basis, &v1, &v2, [g, 0.0], [-g, 0.0]).unwrap();
        assert_eq!(z.data(), w.data());
        assert!(matches!(w.provenance(), Provenance::HighDim { .. }));
    }

    #[test]
    fn shifted_by_zero_or_lattice_vector() {
        let (basis, v1, v2) = example1(60.0);
        let a = assemble(&basis, &v1, &v2, [0.2, 0.0]).unwrap();
        let s0 = assemble_shifted(&basis, &v1, &v2, [0.2, 0.0], [0.0, 0.0]).unwrap();
        assert_eq!(a.data(), s0.data());
        let s1 = assemble_shifted(&basis, &v1, &v2, [0.2, 0.0], [3.0 * PI / 2.0, 0.0]).unwrap();
        for (x, y) in a.data().iter().zip(s1.data()) {
            assert!((x - y).norm() < 1e-12);
        }
        let s = assemble_shifted(&basis, &v1, &v2, [0.2, 0.0], [PI / 8.0, 0.0]).unwrap();
        assert!(s.hermiticity_deviation() < 1e-14);
        let ea = eigensolve(&a, None).unwrap();
        let es = eigensolve(&s, None).unwrap();
        // the shift is a diagonal gauge exp(i G₂ₙ·τ) on the composite basis
        for (x, y) in ea.eigenvalues.iter().zip(&es.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(s.data().iter().any(|z| z.im.abs() > 1e-6));
    }

    #[test]
    fn commensurate_basis_refused() {
        let pair = IncommensuratePair::commensurate_fixture(
            Lattice::chain(1.0).unwrap(),
            Lattice::chain(2.0).unwrap(),
        )
        .unwrap();
        let basis = build_basis(&pair, 50.0).unwrap();
        let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 200.0).unwrap();
        let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 200.0).unwrap();
        assert!(matches!(
            assemble(&basis, &v1, &v2, [0.0, 0.0]),
            Err(Error::Commensurate { .. })
        ));
        assert!(assemble(&basis.dedup_composite(), &v1, &v2, [0.0, 0.0]).is_ok());
    }

    #[test]
    fn misses_are_counted() {
        let (basis, _, _) = example1(200.0);
        let pair = basis.pair();
        let v1 = screened_coulomb(1.0, 1.0, &pair.lat1, 200.0).unwrap();
        let v2 = screened_coulomb(1.0, 1.0, &pair.lat2, 200.0).unwrap();
        let h = assemble(&basis, &v1, &v2, [0.0, 0.0]).unwrap();
        assert!(h.coefficient_misses() > 0);
    }

    #[test]
    fn diagonal_fixture() {
        let h = HamiltonianMatrix::from_dense(
            3,
            vec![c(3.0), c(0.0), c(0.0), c(0.0), c(1.0), c(0.0), c(0.0), c(0.0), c(2.0)],
        )
        .unwrap();
        let s = eigensolve(&h, None).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.eigenvectors[0], vec![c(0.0), c(1.0), c(0.0)]);
        assert_eq!(s.eigenvectors[1], vec![c(0.0), c(0.0), c(1.0)]);
        assert_eq!(s.eigenvectors[2], vec![c(1.0), c(0.0), c(0.0)]);
        let two = eigensolve(&h, Some(2)).unwrap();
        assert_eq!(two.eigenvalues, vec![1.0, 2.0]);
    }

    #[test]
    fn two_by_two_against_quadratic_formula() {
        let (a, b, d) = (2.0, 0.024705, 0.5 * 4.0 * PI * PI + 2.0);
        assert_relative_eq!(d, 21.739, epsilon = 1e-3);
        let h = HamiltonianMatrix::from_dense(2, vec![c(a), c(b), c(b), c(d)]).unwrap();
        let s = eigensolve(&h, None).unwrap();
        let mean = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        assert!((s.eigenvalues[0] - (mean - disc)).abs() < 1e-10);
        assert!((s.eigenvalues[1] - (mean + disc)).abs() < 1e-10);
    }

    #[test]
    fn random_hermitian_is_unitarily_diagonalized() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let n = 20;
        let mut data = vec![c(0.0); n * n];
        for i in 0..n {
            data[i * n + i] = c(rng.random_range(-1.0..1.0));
            for j in i + 1..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                data[i * n + j] = z;
                data[j * n + i] = z.conj();
            }
        }
        let h = HamiltonianMatrix::from_dense(n, data).unwrap();
        let s = eigensolve(&h, None).unwrap();
        for w in s.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for i in 0..n {
            assert!(h.residual(s.eigenvalues[i], &s.eigenvectors[i]) <= 1e-8 * s.eigenvalues[i].abs().max(1.0));
            for j in 0..n {
                let ip: Complex64 = s.eigenvectors[i]
                    .iter()
                    .zip(&s.eigenvectors[j])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(want)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let h = HamiltonianMatrix::from_dense(2, vec![c(1.0), c(0.5), c(0.1), c(2.0)]).unwrap();
        assert!(matches!(eigensolve(&h, None), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn degenerate_cluster_is_canonical() {
        // eigenvalue 3 is two-fold with eigenspace span{(1,1,0), (0,0,1)}
        let h = HamiltonianMatrix::from_dense(
            3,
            vec![c(2.0), c(1.0), c(0.0), c(1.0), c(2.0), c(0.0), c(0.0), c(0.0), c(3.0)],
        )
        .unwrap();
        let r = eigensolve(&h, None).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = [[s, s, 0.0], [0.0, 0.0, 1.0]];
        for (v, w) in r.eigenvectors[1..].iter().zip(want) {
            for (a, b) in v.iter().zip(w) {
                assert!((a - c(b)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_shift_moves_spectrum() {
        let (basis, v1, v2) = example1(80.0);
        let a = eigensolve(&assemble(&basis, &v1, &v2, [0.1, 0.0]).unwrap(), None).unwrap();
        let b = eigensolve(&assemble(&basis, &v1.shifted(0.75), &v2, [0.1, 0.0]).unwrap(), None).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((y - x - 0.75).abs() < 1e-10);
        }
        for (u, w) in a.eigenvectors.iter().zip(&b.eigenvectors) {
            let overlap: Complex64 = u.iter().zip(w).map(|(p, q)| p.conj() * q).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn dump_round_trip() {
        let (basis, v1, v2) = example1(25.0);
        let h = assemble_shifted(&basis, &v1, &v2, [0.0, 0.0], [0.3, 0.0]).unwrap();
        let mut buf = Vec::new();
        h.write_dump(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"IPWH");
        assert_eq!(buf.len(), 16 + 16 * h.size() * h.size());
        let back = HamiltonianMatrix::read_dump(&buf[..]).unwrap();
        assert_eq!(back.data(), h.data());
    }
}
