//! Layer-periodic potentials stored by their Fourier coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dot, index_neg, norm2, Index, Lattice, Vector};

/// `V(r) = Σ_m V_m exp(i G_m·r)` for one periodic layer.
///
/// Coefficients are held densely over the index box `[-bound, bound]ᵈ`;
/// anything outside the box is exactly zero.
#[derive(Clone, Debug)]
pub struct FourierPotential {
    lattice: Lattice,
    bound: i32,
    coeffs: Vec<Complex64>,
    coeff_cutoff: f64,
}

impl FourierPotential {
    fn empty(lattice: Lattice, bound: i32, coeff_cutoff: f64) -> Self {
        let side = (2 * bound + 1) as usize;
        let len = if lattice.dim() == 1 { side } else { side * side };
        FourierPotential {
            lattice,
            bound,
            coeffs: vec![Complex64::new(0.0, 0.0); len],
            coeff_cutoff,
        }
    }

    fn slot(&self, m: Index) -> Option<usize> {
        let b = self.bound;
        if m[0].abs() > b || m[1].abs() > b || (self.lattice.dim() == 1 && m[1] != 0) {
            return None;
        }
        let side = (2 * b + 1) as usize;
        let i = (m[0] + b) as usize;
        Some(if self.lattice.dim() == 1 {
            i
        } else {
            i * side + (m[1] + b) as usize
        })
    }

    /// Potential with no nonzero coefficient.
    pub fn zero(lattice: Lattice) -> Self {
        FourierPotential::empty(lattice, 0, f64::INFINITY)
    }

    /// Builds a potential from explicit coefficients, completing the
    /// Hermitian partner `V_{-m} = conj(V_m)` of every entry.
    pub fn from_entries(lattice: Lattice, entries: &[(Index, Complex64)]) -> Result<Self> {
        let bound = entries
            .iter()
            .map(|(m, _)| m[0].abs().max(m[1].abs()))
            .max()
            .unwrap_or(0);
        let mut pot = FourierPotential::empty(lattice, bound, f64::INFINITY);
        let mut set = vec![false; pot.coeffs.len()];
        for &(m, v) in entries {
            if lattice.dim() == 1 && m[1] != 0 {
                return Err(Error::param(
                    "potential.entries",
                    format!("index {m:?} has a second component on a one-dimensional lattice"),
                ));
            }
            for (idx, val) in [(m, v), (index_neg(m), v.conj())] {
                let s = pot.slot(idx).expect("index inside bound");
                if set[s] && (pot.coeffs[s] - val).norm() > 1e-12 * (1.0 + val.norm()) {
                    return Err(Error::param(
                        "potential.entries",
                        format!("coefficients at {m:?} and its negative are not Hermitian partners"),
                    ));
                }
                pot.coeffs[s] = val;
                set[s] = true;
            }
        }
        Ok(pot)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coeff_cutoff(&self) -> f64 {
        self.coeff_cutoff
    }

    /// `V_m`, or exactly zero for an index that is not stored.
    pub fn coefficient(&self, m: Index) -> Complex64 {
        self.slot(m)
            .map(|s| self.coeffs[s])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Whether `m` lies inside the stored coefficient cutoff, i.e. whether a
    /// zero returned by [`coefficient`](Self::coefficient) is exact rather
    /// than a truncation.
    pub fn is_stored(&self, m: Index) -> bool {
        norm2(self.lattice.reciprocal_vector(m)) <= 2.0 * self.coeff_cutoff
    }

    /// Nonzero coefficients in index order.
    pub fn iter(&self) -> impl Iterator<Item = (Index, Complex64)> + '_ {
        let b = self.bound;
        let dim = self.lattice.dim();
        self.lattice
            .index_box(b)
            .into_iter()
            .filter(move |m| dim == 2 || m[1] == 0)
            .map(move |m| (m, self.coefficient(m)))
            .filter(|(_, v)| v.norm() != 0.0)
    }

    /// `Σ_m |V_m|`.
    pub fn total_mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// Adds a constant to the `m = 0` coefficient.
    pub fn shifted(&self, constant: f64) -> Self {
        let mut out = self.clone();
        let s = out.slot([0, 0]).expect("origin stored");
        out.coeffs[s] += constant;
        out
    }

    pub fn eval_complex(&self, r: Vector) -> Complex64 {
        self.iter()
            .map(|(m, v)| v * Complex64::from_polar(1.0, dot(self.lattice.reciprocal_vector(m), r)))
            .sum()
    }

    /// Real-space value; the imaginary part vanishes by Hermitian symmetry
    /// and is discarded.
    pub fn eval_real(&self, r: Vector) -> f64 {
        self.eval_complex(r).re
    }
}

/// `V_m = Z / (|G_m|² + z)` for every `m` with `|G_m|² ≤ 2·coeff_cutoff`.
pub fn screened_coulomb(
    charge: f64,
    screening: f64,
    lattice: &Lattice,
    coeff_cutoff: f64,
) -> Result<FourierPotential> {
    if !(screening > 0.0) {
        return Err(Error::param(
            "z",
            format!("screening must be positive, got {screening}"),
        ));
    }
    if !(coeff_cutoff > 0.0) {
        return Err(Error::param("coeff_cutoff", "must be positive"));
    }
    let indices = lattice.reciprocal_ball(2.0 * coeff_cutoff);
    let bound = indices
        .iter()
        .map(|m| m[0].abs().max(m[1].abs()))
        .max()
        .unwrap_or(0);
    let mut pot = FourierPotential::empty(*lattice, bound, coeff_cutoff);
    for m in indices {
        let g2 = norm2(lattice.reciprocal_vector(m));
        let s = pot.slot(m).expect("index inside bound");
        pot.coeffs[s] = Complex64::new(charge / (g2 + screening), 0.0);
    }
    Ok(pot)
}

/// Declarative description of a layer potential, rebuilt on demand for a
/// given lattice (the supercell reference re-expands layers on adjusted
/// lattices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerPotential {
    ScreenedCoulomb {
        #[serde(rename = "Z")]
        charge: f64,
        #[serde(rename = "z")]
        screening: f64,
    },
    /// Explicit coefficients given as `[m..., re, im]` rows.
    Fourier { entries: Vec<Vec<f64>> },
    Zero,
}

impl LayerPotential {
    pub fn build(&self, lattice: &Lattice, coeff_cutoff: f64) -> Result<FourierPotential> {
        match self {
            LayerPotential::ScreenedCoulomb { charge, screening } => {
                screened_coulomb(*charge, *screening, lattice, coeff_cutoff)
            }
            LayerPotential::Zero => Ok(FourierPotential::zero(*lattice)),
            LayerPotential::Fourier { entries } => {
                let dim = lattice.dim();
                let parsed = entries
                    .iter()
                    .map(|row| {
                        if row.len() != dim + 2 {
                            return Err(Error::param(
                                "potential.entries",
                                format!("expected {} numbers per row, got {}", dim + 2, row.len()),
                            ));
                        }
                        let mut m = [0i32; 2];
                        for (slot, x) in m.iter_mut().zip(&row[..dim]) {
                            if x.fract() != 0.0 {
                                return Err(Error::param(
                                    "potential.entries",
                                    format!("index {x} is not an integer"),
                                ));
                            }
                            *slot = *x as i32;
                        }
                        Ok((m, Complex64::new(row[dim], row[dim + 1])))
                    })
                    .collect::<Result<Vec<_>>>()?;
                FourierPotential::from_entries(*lattice, &parsed)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn screened_coulomb_values() {
        let lat = Lattice::chain(1.0).unwrap();
        let v = screened_coulomb(1.0, 1.0, &lat, 100.0).unwrap();
        assert_eq!(v.coefficient([0, 0]).re, 1.0);
        assert_relative_eq!(v.coefficient([1, 0]).re, 1.0 / (4.0 * PI * PI + 1.0));
        assert_relative_eq!(v.coefficient([1, 0]).re, 0.024705, epsilon = 1e-6);
        assert_eq!(v.coefficient([1, 0]), v.coefficient([-1, 0]));

        let lat2 = Lattice::chain(PI / 2.0).unwrap();
        let v2 = screened_coulomb(1.0, 1.0, &lat2, 100.0).unwrap();
        assert_relative_eq!(v2.coefficient([1, 0]).re, 1.0 / 17.0, max_relative = 1e-14);

        let zero = screened_coulomb(0.0, 1.0, &lat, 100.0).unwrap();
        assert_eq!(zero.total_mass(), 0.0);
        assert!(screened_coulomb(1.0, 0.0, &lat, 10.0).is_err());
        assert!(screened_coulomb(1.0, -1.0, &lat, 10.0).is_err());
    }

    #[test]
    fn absent_index_is_exact_zero() {
        let lat = Lattice::chain(1.0).unwrap();
        let v = screened_coulomb(1.0, 1.0, &lat, 10.0).unwrap();
        assert_eq!(v.coefficient([1000, 0]), Complex64::new(0.0, 0.0));
        assert!(!v.is_stored([1000, 0]));
    }

    #[test]
    fn constant_and_origin_values() {
        let lat = Lattice::chain(1.0).unwrap();
        let c = FourierPotential::from_entries(lat, &[([0, 0], Complex64::new(0.7, 0.0))]).unwrap();
        for x in [0.0, 0.3, 12.5] {
            assert_relative_eq!(c.eval_real([x, 0.0]), 0.7);
        }
        let v = screened_coulomb(1.0, 1.0, &lat, 2000.0).unwrap();
        let total: f64 = v.iter().map(|(_, c)| c.re).sum();
        assert_relative_eq!(v.eval_real([0.0, 0.0]), total, max_relative = 1e-14);
    }

    #[test]
    fn origin_value_matches_direct_series() {
        let lat = Lattice::chain(1.0).unwrap();
        let v = screened_coulomb(1.0, 1.0, &lat, 2000.0).unwrap();
        // |G_m|² ≤ 4000 ⇔ |m| ≤ 10
        let mut series = 1.0;
        for m in 1..=10 {
            let m = m as f64;
            series += 2.0 / (4.0 * PI * PI * m * m + 1.0);
        }
        assert!((v.eval_real([0.0, 0.0]) - series).abs() < 1e-10);
    }

    #[test]
    fn periodicity_in_two_dimensions() {
        let lat = Lattice::hexagonal(2.0, PI / 10.0).unwrap();
        let v = screened_coulomb(1.0, 1.0, &lat, 50.0).unwrap();
        let r = [0.31, -0.7];
        let shifted = crate::lattice::add(r, lat.lattice_vector([2, -1]));
        assert!((v.eval_real(r) - v.eval_real(shifted)).abs() < 1e-10);
    }

    #[test]
    fn non_hermitian_entries_rejected() {
        let lat = Lattice::chain(1.0).unwrap();
        let bad = [
            ([1, 0], Complex64::new(1.0, 0.5)),
            ([-1, 0], Complex64::new(1.0, 0.5)),
        ];
        assert!(FourierPotential::from_entries(lat, &bad).is_err());
    }

    #[test]
    fn coefficient_decay_approaches_charge() {
        let lat = Lattice::chain(1.0).unwrap();
        let v = screened_coulomb(2.0, 1.5, &lat, 5000.0).unwrap();
        let mut prev = 0.0;
        for m in 1..10 {
            let g2 = norm2(lat.reciprocal_vector([m, 0]));
            let x = v.coefficient([m, 0]).re * g2;
            assert!(x > prev && x < 2.0);
            prev = x;
        }
    }

    #[test]
    fn layer_potential_from_rows() {
        let lat = Lattice::chain(1.0).unwrap();
        let spec = LayerPotential::Fourier {
            entries: vec![vec![0.0, 1.0, 0.0], vec![2.0, 0.25, -0.5]],
        };
        let v = spec.build(&lat, 10.0).unwrap();
        assert_eq!(v.coefficient([-2, 0]), Complex64::new(0.25, 0.5));
        let bad = LayerPotential::Fourier { entries: vec![vec![0.5, 1.0, 0.0]] };
        assert!(bad.build(&lat, 10.0).is_err());
    }

    proptest! {
        #[test]
        fn hermitian_coefficients_give_real_values(
            coeffs in prop::collection::vec((-3i32..=3, -3i32..=3, -1.0f64..1.0, -1.0f64..1.0), 1..8),
            x in -5.0f64..5.0,
            y in -5.0f64..5.0,
        ) {
            let lat = Lattice::hexagonal(1.3, 0.2).unwrap();
            let mut entries: Vec<(Index, Complex64)> = Vec::new();
            for (a, b, re, im) in coeffs {
                let m = [a, b];
                if entries.iter().any(|(e, _)| *e == m || *e == index_neg(m)) {
                    continue;
                }
                let im = if m == [0, 0] { 0.0 } else { im };
                entries.push((m, Complex64::new(re, im)));
            }
            let v = FourierPotential::from_entries(lat, &entries).unwrap();
            let z = v.eval_complex([x, y]);
            prop_assert!(z.im.abs() <= 1e-10 * v.total_mass().max(1e-300));
        }
    }
}
