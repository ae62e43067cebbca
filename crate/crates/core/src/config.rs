//! TOML run configuration.
//!
//! Every field has a default taken from the 1-d screened Coulomb example
//! (`L₁ = 1`, `L₂ = π/2`, `Z = z = 1`, `k = 0`, `Ec = 2000`, `σ = 5`), so
//! a config may be as short as
//!
//! ```toml
//! [discretization]
//! Ec = 500
//! ```

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ewald::EwaldParams;
use crate::lattice::{
    IncommensuratePair, Lattice, Vector, DEFAULT_COMMENSURATE_BOUND, DEFAULT_COMMENSURATE_TOL,
    DEFAULT_MAX_BASIS,
};
use crate::potential::{FourierPotential, LayerPotential};
use crate::realspace::BoxGrid;
use crate::scf::{ScfConfig, XcChoice};
use crate::spectrum::{ScalingRoute, DEFAULT_POINTS, DEFAULT_SIGMA};
use crate::supercell::DEFAULT_K_GRID;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    pub scf: Option<ScfSection>,
    pub ewald: Option<EwaldSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeSpec {
    Chain { constant: f64 },
    /// Triangular lattice rotated by `angle` radians.
    Hexagonal {
        constant: f64,
        #[serde(default)]
        angle: f64,
    },
    /// Explicit real-space vectors, one per row.
    Vectors { vectors: Vec<Vec<f64>> },
}

impl LatticeSpec {
    pub fn build(&self, key: &str) -> Result<Lattice> {
        let lat = match self {
            LatticeSpec::Chain { constant } => Lattice::chain(*constant),
            LatticeSpec::Hexagonal { constant, angle } => Lattice::hexagonal(*constant, *angle),
            LatticeSpec::Vectors { vectors } => {
                let vs: Vec<Vector> = vectors
                    .iter()
                    .map(|v| match v.as_slice() {
                        [x] => Ok([*x, 0.0]),
                        [x, y] => Ok([*x, *y]),
                        _ => Err(config_error(key, "each vector needs 1 or 2 components")),
                    })
                    .collect::<Result<_>>()?;
                Lattice::from_vectors(&vs)
            }
        };
        lat.map_err(|e| config_error(key, e.to_string()))
    }
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub lattice1: LatticeSpec,
    pub lattice2: LatticeSpec,
    pub potential1: LayerPotential,
    pub potential2: LayerPotential,
    /// Nuclear charges per cell, used for the electron count and Ewald.
    pub charges: [f64; 2],
    /// Translation of the second layer.
    pub tau: Vec<f64>,
    /// Interlayer separation for the Ewald energy.
    pub t: f64,
    pub allow_commensurate: bool,
    pub commensurate_tol: f64,
    pub commensurate_bound: i32,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let coulomb = LayerPotential::ScreenedCoulomb {
            charge: 1.0,
            screening: 1.0,
        };
        SystemConfig {
            lattice1: LatticeSpec::Chain { constant: 1.0 },
            lattice2: LatticeSpec::Chain { constant: PI / 2.0 },
            potential1: coulomb.clone(),
            potential2: coulomb,
            charges: [1.0, 1.0],
            tau: vec![0.0, 0.0],
            t: 1.0,
            allow_commensurate: false,
            commensurate_tol: DEFAULT_COMMENSURATE_TOL,
            commensurate_bound: DEFAULT_COMMENSURATE_BOUND,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationConfig {
    #[serde(rename = "Ec")]
    pub ec: f64,
    /// Explicit Cartesian wavevectors; ignored when `kgrid` is set.
    pub kpoints: Vec<Vec<f64>>,
    /// Uniform grid with this many points per axis over the first
    /// reciprocal cell.
    pub kgrid: Option<usize>,
    pub max_basis: usize,
    /// Cutoff for stored potential coefficients; defaults to `4·Ec`.
    pub coeff_cutoff: Option<f64>,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig {
            ec: 2000.0,
            kpoints: vec![vec![0.0]],
            kgrid: None,
            max_basis: DEFAULT_MAX_BASIS,
            coeff_cutoff: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub points: Vec<usize>,
}

impl GridSpec {
    pub fn build(&self, dim: usize) -> Result<BoxGrid> {
        let key = "outputs.realspace";
        if self.min.len() != dim || self.max.len() != dim || self.points.len() != dim {
            return Err(config_error(key, format!("min, max and points need {dim} entries each")));
        }
        let grid = if dim == 1 {
            BoxGrid::line(self.min[0], self.max[0], self.points[0])
        } else {
            BoxGrid::rect(
                [self.min[0], self.min[1]],
                [self.max[0], self.max[1]],
                [self.points[0], self.points[1]],
            )
        };
        grid.map_err(|e| config_error(key, e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub sigma: f64,
    /// DoS energy window; defaults to the spectrum ±5/√σ.
    pub window: Option<[f64; 2]>,
    pub n_points: usize,
    /// Eigenstate indices written by `eigfun`.
    pub states: Vec<usize>,
    /// Real-space grid for eigenfunctions and densities; defaults to 4096
    /// points over `[0, 40]` in 1-d and 128² points over `[0, 20]²` in 2-d.
    pub realspace: Option<GridSpec>,
    pub route: ScalingRoute,
    /// Cutoffs swept by `converge`.
    pub ec_sweep: Vec<f64>,
    /// Points per axis of the k grids swept by `converge`.
    pub k_sweep: Vec<usize>,
    pub max_q: u64,
    /// Cutoff of the supercell Bloch solves.
    pub supercell_ec: f64,
    pub supercell_kgrid: usize,
    pub dump_matrix: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            sigma: DEFAULT_SIGMA,
            window: None,
            n_points: DEFAULT_POINTS,
            states: vec![0],
            realspace: None,
            route: ScalingRoute::Unified,
            ec_sweep: vec![200.0, 500.0, 1000.0, 2000.0],
            k_sweep: vec![1, 2, 4, 8],
            max_q: 300,
            supercell_ec: 300.0,
            supercell_kgrid: DEFAULT_K_GRID,
            dump_matrix: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfSection {
    pub alpha: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub theta: f64,
    /// `"none"` or `"dirac"`.
    pub xc: String,
    pub hartree: bool,
    pub backoff: bool,
    pub alpha_min: f64,
    /// Defaults to the neutral count `Z₁/|Γ₁| + Z₂/|Γ₂|`.
    pub electrons_per_volume: Option<f64>,
    /// Add the Ewald nuclei-nuclei energy to the total.
    pub include_e_ii: bool,
}

impl Default for ScfSection {
    fn default() -> Self {
        let base = ScfConfig::new(1.0, 1.0);
        ScfSection {
            alpha: base.alpha,
            max_iter: base.max_iter,
            tol: base.tol,
            theta: base.theta,
            xc: "none".into(),
            hartree: base.hartree,
            backoff: base.backoff,
            alpha_min: base.alpha_min,
            electrons_per_volume: None,
            include_e_ii: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EwaldSection {
    pub eta: f64,
    pub r_cut: f64,
    pub g_cut: i32,
    pub q: usize,
}

impl Default for EwaldSection {
    fn default() -> Self {
        let p = EwaldParams::default();
        EwaldSection {
            eta: p.eta,
            r_cut: p.r_cut,
            g_cut: p.g_cut,
            q: p.q,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = e
                .span()
                .map(|s| text[..s.start].lines().count().to_string())
                .map_or_else(|| "config".to_string(), |line| format!("line {line}"));
            config_error(&key, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("--config", format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.discretization;
        if !(d.ec.is_finite() && d.ec > 0.0) {
            return Err(config_error("discretization.Ec", format!("energy cutoff must be positive, got {}", d.ec)));
        }
        if let Some(c) = d.coeff_cutoff {
            if !(c > 0.0) {
                return Err(config_error("discretization.coeff_cutoff", "must be positive"));
            }
        }
        if d.kgrid == Some(0) {
            return Err(config_error("discretization.kgrid", "need at least one point per axis"));
        }
        if d.kgrid.is_none() && d.kpoints.is_empty() {
            return Err(config_error("discretization.kpoints", "need at least one k-point"));
        }
        let o = &self.outputs;
        if !(o.sigma.is_finite() && o.sigma > 0.0) {
            return Err(config_error("outputs.sigma", "smearing must be positive"));
        }
        if o.n_points < 2 {
            return Err(config_error("outputs.n_points", "need at least two grid points"));
        }
        if let Some([a, b]) = o.window {
            if !(b > a) {
                return Err(config_error("outputs.window", "window must be nonempty"));
            }
        }
        if o.ec_sweep.iter().any(|&e| !(e > 0.0)) {
            return Err(config_error("outputs.ec_sweep", "cutoffs must be positive"));
        }
        if o.k_sweep.contains(&0) {
            return Err(config_error("outputs.k_sweep", "grid sizes must be positive"));
        }
        if !(o.supercell_ec > 0.0) || o.supercell_kgrid == 0 {
            return Err(config_error("outputs.supercell_ec", "supercell cutoff and k grid must be positive"));
        }
        let s = &self.system;
        if !(s.t >= 0.0) {
            return Err(config_error("system.t", "separation must be nonnegative"));
        }
        if s.tau.len() > 2 {
            return Err(config_error("system.tau", "at most two components"));
        }
        self.pair()?;
        if let Some(scf) = &self.scf {
            self.scf_config(scf, 0.0)
                .and_then(|c| c.validate())
                .map_err(|e| config_error("scf", e.to_string()))?;
        }
        if self.ewald.is_some() {
            self.ewald_params()
                .validate()
                .map_err(|e| config_error("ewald", e.to_string()))?;
        }
        Ok(())
    }

    pub fn lattices(&self) -> Result<(Lattice, Lattice)> {
        let l1 = self.system.lattice1.build("system.lattice1")?;
        let l2 = self.system.lattice2.build("system.lattice2")?;
        if l1.dim() != l2.dim() {
            return Err(config_error("system.lattice2", "both layers need the same dimension"));
        }
        Ok((l1, l2))
    }

    pub fn pair(&self) -> Result<IncommensuratePair> {
        let (l1, l2) = self.lattices()?;
        let s = &self.system;
        let pair = if s.allow_commensurate {
            IncommensuratePair::commensurate_fixture(l1, l2)?
        } else {
            IncommensuratePair::with_search(l1, l2, s.commensurate_tol, s.commensurate_bound).map_err(|e| {
                config_error("system.lattice2", format!("{e} (set system.allow_commensurate to deduplicate)"))
            })?
        };
        Ok(pair.with_shift(pad(&s.tau)))
    }

    pub fn coeff_cutoff(&self) -> f64 {
        self.discretization.coeff_cutoff.unwrap_or(4.0 * self.discretization.ec)
    }

    pub fn potentials(&self, pair: &IncommensuratePair) -> Result<(FourierPotential, FourierPotential)> {
        let c = self.coeff_cutoff();
        Ok((
            self.system.potential1.build(&pair.lat1, c)?,
            self.system.potential2.build(&pair.lat2, c)?,
        ))
    }

    /// Wavevectors: the `kgrid` grid over the first reciprocal cell, or the
    /// explicit list.
    pub fn kpoints(&self, pair: &IncommensuratePair) -> Vec<Vector> {
        match self.discretization.kgrid {
            Some(n) => uniform_kgrid(&pair.lat1, n),
            None => self.discretization.kpoints.iter().map(|k| pad(k)).collect(),
        }
    }

    pub fn ewald_params(&self) -> EwaldParams {
        let e = self.ewald.clone().unwrap_or_default();
        EwaldParams {
            eta: e.eta,
            r_cut: e.r_cut,
            g_cut: e.g_cut,
            q: e.q,
            t: self.system.t,
        }
    }

    pub fn realspace_grid(&self, dim: usize) -> Result<BoxGrid> {
        match &self.outputs.realspace {
            Some(g) => g.build(dim),
            None if dim == 1 => BoxGrid::line(0.0, 40.0, 4096),
            None => BoxGrid::rect([0.0, 0.0], [20.0, 20.0], [128, 128]),
        }
    }

    /// SCF settings; `e_ii` is supplied by the caller.
    pub fn scf_config(&self, section: &ScfSection, e_ii: f64) -> Result<ScfConfig> {
        let pair = self.pair()?;
        let xc = match section.xc.to_ascii_lowercase().as_str() {
            "none" => XcChoice::None,
            "dirac" => XcChoice::Dirac,
            other => return Err(config_error("scf.xc", format!("unknown functional `{other}` (none, dirac)"))),
        };
        let [z1, z2] = self.system.charges;
        let neutral = z1 / pair.lat1.cell_volume() + z2 / pair.lat2.cell_volume();
        let mut c = ScfConfig::new(self.discretization.ec, section.electrons_per_volume.unwrap_or(neutral));
        c.kpoints = self.kpoints(&pair);
        c.alpha = section.alpha;
        c.max_iter = section.max_iter;
        c.tol = section.tol;
        c.theta = section.theta;
        c.xc = xc;
        c.hartree = section.hartree;
        c.backoff = section.backoff;
        c.alpha_min = section.alpha_min;
        c.e_ii = e_ii;
        c.route = self.outputs.route;
        c.allow_commensurate = self.system.allow_commensurate;
        Ok(c)
    }
}

fn pad(v: &[f64]) -> Vector {
    [v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0)]
}

/// `n` points per axis, `k = Σ (i_a/n)·b_a` over the reciprocal basis of `lat`.
pub fn uniform_kgrid(lat: &Lattice, n: usize) -> Vec<Vector> {
    let b = lat.reciprocal_basis();
    let f = |i: usize| i as f64 / n as f64;
    if lat.dim() == 1 {
        (0..n).map(|i| [f(i) * b[0][0], 0.0]).collect()
    } else {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push([f(i) * b[0][0] + f(j) * b[0][1], f(i) * b[1][0] + f(j) * b[1][1]]);
            }
        }
        out
    }
}
