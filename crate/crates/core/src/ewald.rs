//! Nuclei-nuclei energy per unit volume.
//!
//! Each layer carries one point charge per cell on a uniform neutralizing
//! background. The intralayer part is the standard Ewald energy. The
//! interlayer part averages the potential of layer 1 over the positions of
//! layer 2 atoms, which by ergodicity is an integral over `Γ₁`. The layers
//! sit a distance `t` apart along the extra direction.
//!
//! The real-space interlayer sum integrates to the continuum integral of
//! its kernel. The neutralizing backgrounds remove exactly that integral, so
//! the full interlayer energy is zero up to quadrature and cutoff error.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::lattice::{dot, index_sub, norm2, sub, Index, IncommensuratePair, Lattice, Vector};
use crate::output;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EwaldParams {
    /// Splitting parameter `η`.
    pub eta: f64,
    /// Real-space cutoff in lattice constants.
    pub r_cut: f64,
    /// Reciprocal cutoff in reciprocal vectors per axis.
    pub g_cut: i32,
    /// Interlayer separation.
    pub t: f64,
    /// Gauss-Legendre order per axis.
    pub q: usize,
}

impl Default for EwaldParams {
    fn default() -> Self {
        EwaldParams {
            eta: 1.0,
            r_cut: 8.0,
            g_cut: 8,
            t: 1.0,
            q: 16,
        }
    }
}

impl EwaldParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta", "splitting parameter must be positive"));
        }
        if !(self.r_cut > 0.0) {
            return Err(Error::param("r_cut", "real-space cutoff must be positive"));
        }
        if self.g_cut < 1 {
            return Err(Error::param("g_cut", "reciprocal cutoff must be at least 1"));
        }
        if self.q < 2 {
            return Err(Error::param("q", "quadrature order must be at least 2"));
        }
        if !(self.t >= 0.0) {
            return Err(Error::param("t", "separation must be nonnegative"));
        }
        Ok(())
    }

    fn require_separation(&self) -> Result<()> {
        if self.t == 0.0 {
            return Err(Error::SingularConfiguration(
                "interlayer energy is undefined for coplanar layers (t = 0)".into(),
            ));
        }
        Ok(())
    }
}

/// Exponential integral `E₁(x) = ∫_x^∞ e^{−s}/s ds` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs a positive argument");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz evaluation of the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

fn lattice_constant(lat: &Lattice) -> f64 {
    let a = lat.basis();
    let c0 = (a[0][0] * a[0][0] + a[1][0] * a[1][0]).sqrt();
    if lat.dim() == 1 {
        c0
    } else {
        c0.max((a[0][1] * a[0][1] + a[1][1] * a[1][1]).sqrt())
    }
}

/// Index bound covering every lattice vector of length at most `radius`.
fn index_bound(lat: &Lattice, radius: f64) -> i32 {
    let b = lat.reciprocal_basis();
    let frob = (b[0][0].powi(2) + b[0][1].powi(2) + b[1][0].powi(2) + b[1][1].powi(2)).sqrt();
    (radius * frob / (2.0 * std::f64::consts::PI)).ceil() as i32 + 1
}

fn lattice_box(lat: &Lattice, bound: i32) -> Vec<Index> {
    let mut out = Vec::new();
    for i in -bound..=bound {
        if lat.dim() == 1 {
            out.push([i, 0]);
        } else {
            for j in -bound..=bound {
                out.push([i, j]);
            }
        }
    }
    out
}

/// Nonzero reciprocal indices with `max |m_i| ≤ g_cut`.
pub fn reciprocal_indices(lat: &Lattice, g_cut: i32) -> Vec<Index> {
    lattice_box(lat, g_cut)
        .into_iter()
        .filter(|&m| m != [0, 0])
        .collect()
}

fn real_shell(lat: &Lattice, eta: f64, lo: f64, hi: f64) -> f64 {
    lattice_box(lat, index_bound(lat, hi))
        .into_iter()
        .filter(|&p| p != [0, 0])
        .map(|p| norm2(lat.lattice_vector(p)).sqrt())
        .filter(|&r| r > lo && r <= hi)
        .map(|r| erfc(eta * r) / r)
        .sum()
}

/// Ewald energy per unit volume of one charge `Z` per cell on a
/// neutralizing background.
pub fn intralayer_ewald(lattice: &Lattice, z: f64, params: &EwaldParams) -> Result<f64> {
    params.validate()?;
    let eta = params.eta;
    let vol = lattice.cell_volume();
    let rc = params.r_cut * lattice_constant(lattice);
    let real = real_shell(lattice, eta, 0.0, rc);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let bracket = match lattice.dim() {
        1 => {
            let recip: f64 = reciprocal_indices(lattice, params.g_cut)
                .iter()
                .map(|&m| exp_integral_e1(norm2(lattice.reciprocal_vector(m)) / (4.0 * eta * eta)))
                .sum();
            real + recip / vol - 2.0 * eta / sqrt_pi + (EULER_GAMMA + 2.0 * (2.0 * eta).ln()) / vol
        }
        _ => {
            let recip: f64 = reciprocal_indices(lattice, params.g_cut)
                .iter()
                .map(|&m| {
                    let g = norm2(lattice.reciprocal_vector(m)).sqrt();
                    2.0 * std::f64::consts::PI / g * erfc(g / (2.0 * eta))
                })
                .sum();
            real + recip / vol - 2.0 * eta / sqrt_pi - 2.0 * sqrt_pi / (vol * eta)
        }
    };
    Ok(0.5 * z * z * bracket / vol)
}

/// Size of the first real-space shell beyond the cutoff, per volume; a
/// proxy for the truncation error of [`intralayer_ewald`].
pub fn intralayer_tail(lattice: &Lattice, z: f64, params: &EwaldParams) -> f64 {
    let rc = params.r_cut * lattice_constant(lattice);
    0.5 * z * z * real_shell(lattice, params.eta, rc, 1.5 * rc) / lattice.cell_volume()
}

/// Tensor Gauss-Legendre nodes over the cell of `lat`: `(point, weight)`
/// with weights summing to `|Γ|`.
pub fn cell_quadrature(lat: &Lattice, q: usize) -> Result<Vec<(Vector, f64)>> {
    let rule = GaussLegendre::new(q).map_err(|e| Error::param("q", e.to_string()))?;
    let pts: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let vol = lat.cell_volume();
    let mut out = Vec::with_capacity(pts.len().pow(lat.dim() as u32));
    for &(s0, w0) in &pts {
        if lat.dim() == 1 {
            out.push((lat.lattice_vector_frac([s0, 0.0]), w0 * vol));
        } else {
            for &(s1, w1) in &pts {
                out.push((lat.lattice_vector_frac([s0, s1]), w0 * w1 * vol));
            }
        }
    }
    Ok(out)
}

fn prefactor(pair: &IncommensuratePair, z1: f64, z2: f64) -> f64 {
    z1 * z2 / (pair.lat1.cell_volume() * pair.lat2.cell_volume())
}

/// `(Z₁Z₂/|Γ₁||Γ₂|)·∫_{Γ₁} Σ_{R∈𝓡₁} erfc(ηD)/D dr` with
/// `D = √(|r + τ − R|² + t²)`, truncated at `r_cut` lattice constants.
pub fn interlayer_real(pair: &IncommensuratePair, z1: f64, z2: f64, params: &EwaldParams) -> Result<f64> {
    params.validate()?;
    let pre = prefactor(pair, z1, z2);
    if pre == 0.0 {
        return Ok(0.0);
    }
    let lat = &pair.lat1;
    let nodes = cell_quadrature(lat, params.q)?;
    let rc = params.r_cut * lattice_constant(lat);
    let tau = pair.shift;
    let t2 = params.t * params.t;
    let offsets = lattice_box(lat, index_bound(lat, rc) + 1);
    let values = nodes
        .par_iter()
        .map(|&(r, w)| {
            let x = lat.mask([r[0] + tau[0], r[1] + tau[1]]);
            let s = lat.real_fractional(x);
            let centre = [s[0].round() as i32, s[1].round() as i32];
            let mut acc = 0.0;
            for &off in &offsets {
                let p = index_sub(centre, [-off[0], -off[1]]);
                let d2 = norm2(sub(x, lat.lattice_vector(p)));
                if d2 > rc * rc {
                    continue;
                }
                let d = (d2 + t2).sqrt();
                if d < 1e-12 {
                    return Err(Error::SingularConfiguration(format!(
                        "quadrature node {x:?} coincides with a lattice site at t = 0"
                    )));
                }
                acc += erfc(params.eta * d) / d;
            }
            Ok(w * acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pre * values.iter().sum::<f64>())
}

/// Background correction `−(Z₁Z₂/|Γ₁||Γ₂|)·∫_{ℝᵈ} erfc(η√(r²+t²))/√(r²+t²) dr`.
pub fn interlayer_background(pair: &IncommensuratePair, z1: f64, z2: f64, params: &EwaldParams) -> Result<f64> {
    params.validate()?;
    params.require_separation()?;
    let (eta, t) = (params.eta, params.t);
    let integral = match pair.dim() {
        1 => {
            // x = t sinh u turns the line integral into 2∫₀^∞ erfc(ηt cosh u) du
            let top = (27.0 / (eta * t)).max(1.0).acosh().max(1.0);
            let rule = GaussLegendre::new(32).expect("order 32 is valid");
            let panels = 16;
            let h = top / panels as f64;
            2.0 * (0..panels)
                .map(|i| rule.integrate(i as f64 * h, (i + 1) as f64 * h, |u| erfc(eta * t * u.cosh())))
                .sum::<f64>()
        }
        _ => {
            let pi = std::f64::consts::PI;
            2.0 * pi * ((-eta * eta * t * t).exp() / (eta * pi.sqrt()) - t * erfc(eta * t))
        }
    };
    Ok(-prefactor(pair, z1, z2) * integral)
}

/// Transform of the long-range kernel `erf(η√(x²+t²))/√(x²+t²)` along the
/// layer at `|G| = g > 0`.
fn long_range_kernel(dim: usize, g: f64, t: f64, eta: f64) -> f64 {
    let rule = GaussLegendre::new(64).expect("order 64 is valid");
    let pi = std::f64::consts::PI;
    let f = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let e = (-s * s * t * t - g * g / (4.0 * s * s)).exp();
        let c = if dim == 1 { pi.sqrt() / s } else { pi / (s * s) };
        2.0 / pi.sqrt() * c * e
    };
    let panels = 8;
    let h = eta / panels as f64;
    (0..panels)
        .map(|i| rule.integrate(i as f64 * h, (i + 1) as f64 * h, f))
        .sum()
}

/// `∫_{Γ} e^{iG·(r+τ)} dr` by the cell quadrature.
pub fn averaged_phase(lat: &Lattice, g: Vector, tau: Vector, q: usize) -> Result<Complex64> {
    Ok(cell_quadrature(lat, q)?
        .iter()
        .map(|&(r, w)| Complex64::from_polar(w, dot(g, [r[0] + tau[0], r[1] + tau[1]])))
        .sum())
}

/// Averaged reciprocal interlayer sum over `G ∈ 𝓡₁* \ {0}`. It vanishes
/// analytically; the quadrature value is a self-test.
pub fn interlayer_reciprocal(pair: &IncommensuratePair, z1: f64, z2: f64, params: &EwaldParams) -> Result<f64> {
    params.validate()?;
    let pre = prefactor(pair, z1, z2);
    if pre == 0.0 {
        return Ok(0.0);
    }
    let lat = &pair.lat1;
    let vol = lat.cell_volume();
    let mut total = 0.0;
    for m in reciprocal_indices(lat, params.g_cut) {
        let g = lat.reciprocal_vector(m);
        let k = long_range_kernel(lat.dim(), norm2(g).sqrt(), params.t, params.eta);
        total += k / vol * averaged_phase(lat, g, pair.shift, params.q)?.re;
    }
    Ok(pre * total)
}

/// All terms of the nuclei-nuclei energy per unit volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EwaldBreakdown {
    pub e_intra1: f64,
    pub e_intra2: f64,
    pub e_inter_real: f64,
    pub e_inter_recip: f64,
    pub e_inter_background: f64,
    pub e_ii: f64,
}

impl EwaldBreakdown {
    pub fn interlayer(&self) -> f64 {
        self.e_inter_real + self.e_inter_recip + self.e_inter_background
    }

    /// `e_intra1,e_intra2,e_inter_real,e_inter_recip,e_ii` header and row.
    pub fn csv(&self) -> String {
        let row = [self.e_intra1, self.e_intra2, self.e_inter_real, self.e_inter_recip, self.e_ii];
        format!(
            "e_intra1,e_intra2,e_inter_real,e_inter_recip,e_ii\n{}\n",
            row.map(output::fmt).join(",")
        )
    }
}

pub fn e_ii_breakdown(pair: &IncommensuratePair, z1: f64, z2: f64, params: &EwaldParams) -> Result<EwaldBreakdown> {
    let e_intra1 = intralayer_ewald(&pair.lat1, z1, params)?;
    let e_intra2 = intralayer_ewald(&pair.lat2, z2, params)?;
    let (e_inter_real, e_inter_recip, e_inter_background) = if z1 * z2 == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        params.require_separation()?;
        (
            interlayer_real(pair, z1, z2, params)?,
            interlayer_reciprocal(pair, z1, z2, params)?,
            interlayer_background(pair, z1, z2, params)?,
        )
    };
    Ok(EwaldBreakdown {
        e_intra1,
        e_intra2,
        e_inter_real,
        e_inter_recip,
        e_inter_background,
        e_ii: e_intra1 + e_intra2 + e_inter_real + e_inter_recip + e_inter_background,
    })
}

/// Nuclei-nuclei energy per unit volume.
pub fn e_ii(pair: &IncommensuratePair, z1: f64, z2: f64, params: &EwaldParams) -> Result<f64> {
    Ok(e_ii_breakdown(pair, z1, z2, params)?.e_ii)
}
