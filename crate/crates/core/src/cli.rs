//! Batch front-end behind the `incomm-pw` binary.
//!
//! Every subcommand reads one TOML config, writes CSV artifacts into the
//! output directory and returns 0 on success, 1 for invalid input and 2
//! for numerical failure. Each file starts with one `#` comment line
//! carrying the command and a timestamp; the rest is deterministic.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{uniform_kgrid, RunConfig};
use crate::error::{Error, Result};
use crate::ewald::{e_ii_breakdown, intralayer_tail};
use crate::lattice::{build_basis_with_limit, IncommensuratePair, PlaneWaveBasis, Vector};
use crate::operator::{assemble, eigensolve, SpectrumResult};
use crate::output::{self, fmt};
use crate::realspace::{eigenfunction_on_grid, ipr, write_eigenfunction_csv};
use crate::scf::scf_solve;
use crate::spectrum::{average_dos, dos_distance, fermi_level, neutral_electron_density, scaled_dos, DoSCurve, EnergyGrid};
use crate::supercell::{compare_approximants, Approximant};

pub const THREADS_ENV: &str = "INCOMM_PW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "incomm-pw", version, about = "Plane-wave spectra of incommensurate bilayers")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML config; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (falls back to INCOMM_PW_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Override `discretization.Ec`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub ec: Option<f64>,
    /// Override the k sampling with a uniform grid of this many points per axis.
    #[arg(long, global = true)]
    pub kpoints: Option<usize>,
    /// Override `outputs.sigma`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Enumerate the composite plane-wave basis (basis.csv).
    Basis,
    /// Eigenvalues at every k (eigenvalues.csv).
    Solve,
    /// Per-volume density of states averaged over k (dos.csv).
    Dos,
    /// Real-space eigenfunctions at the first k (eigfun_<j>.csv).
    Eigfun,
    /// Fermi level of the neutral system (fermi.txt).
    Fermi,
    /// Self-consistent Kohn-Sham loop (scf_log.csv, density.csv).
    Scf,
    /// Nuclei-nuclei energy per volume (ewald.csv).
    Ewald,
    /// DoS distance of supercell approximants to the direct DoS (supercell.csv).
    SupercellCompare,
    /// Cutoff and k-grid convergence tables (converge_ec.csv, converge_k.csv).
    Converge,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Solve => "solve",
            Command::Dos => "dos",
            Command::Eigfun => "eigfun",
            Command::Fermi => "fermi",
            Command::Scf => "scf",
            Command::Ewald => "ewald",
            Command::SupercellCompare => "supercell-compare",
            Command::Converge => "converge",
        }
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(&cli))
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: &Cli) -> u8 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_threads(requested: Option<usize>) -> Result<()> {
    let n = match requested {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Error::Config {
                key: THREADS_ENV.into(),
                message: format!("expected a thread count, got `{v}`"),
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config {
                key: "--threads".into(),
                message: "need at least one thread".into(),
            });
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Loads the config and applies the command-line overrides.
pub fn load_config(global: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(ec) = global.ec {
        cfg.discretization.ec = ec;
    }
    if let Some(n) = global.kpoints {
        cfg.discretization.kgrid = Some(n);
    }
    if let Some(s) = global.sigma {
        cfg.outputs.sigma = s;
    }
    cfg.validate().map_err(|e| match e {
        Error::Config { key, message } => Error::Config {
            key: match key.as_str() {
                "discretization.Ec" if global.ec.is_some() => "--ec (discretization.Ec)".into(),
                "discretization.kgrid" if global.kpoints.is_some() => "--kpoints".into(),
                "outputs.sigma" if global.sigma.is_some() => "--sigma (outputs.sigma)".into(),
                _ => key,
            },
            message,
        },
        other => other,
    })?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    init_threads(cli.global.threads)?;
    let cfg = load_config(&cli.global)?;
    std::fs::create_dir_all(&cli.global.out)?;
    let ctx = Context {
        cfg,
        out: cli.global.out.clone(),
        command: cli.command,
    };
    match cli.command {
        Command::Basis => ctx.basis(),
        Command::Solve => ctx.solve(),
        Command::Dos => ctx.dos(),
        Command::Eigfun => ctx.eigfun(),
        Command::Fermi => ctx.fermi(),
        Command::Scf => ctx.scf(),
        Command::Ewald => ctx.ewald(),
        Command::SupercellCompare => ctx.supercell_compare(),
        Command::Converge => ctx.converge(),
    }
}

/// Basis and spectra at every k of one cutoff.
pub struct Solved {
    pub basis: PlaneWaveBasis,
    pub results: Vec<SpectrumResult>,
    pub coefficient_misses: usize,
}

/// Builds the basis and diagonalizes at each k, in order.
pub fn solve_spectra(cfg: &RunConfig, pair: &IncommensuratePair, ec: f64, kpoints: &[Vector]) -> Result<Solved> {
    let mut basis = build_basis_with_limit(pair, ec, cfg.discretization.max_basis)?;
    if pair.is_commensurate_fixture() {
        basis = basis.dedup_composite();
    }
    let coeff = cfg.discretization.coeff_cutoff.unwrap_or(4.0 * ec);
    let v1 = cfg.system.potential1.build(&pair.lat1, coeff)?;
    let v2 = cfg.system.potential2.build(&pair.lat2, coeff)?;
    let solved: Vec<(SpectrumResult, usize)> = kpoints
        .par_iter()
        .map(|&k| {
            let h = assemble(&basis, &v1, &v2, k)?;
            Ok((eigensolve(&h, None)?, h.coefficient_misses()))
        })
        .collect::<Result<_>>()?;
    let coefficient_misses = solved.iter().map(|s| s.1).sum();
    Ok(Solved {
        basis,
        results: solved.into_iter().map(|s| s.0).collect(),
        coefficient_misses,
    })
}

/// Per-volume DoS averaged over the spectra.
pub fn averaged_dos(solved: &Solved, sigma: f64, grid: EnergyGrid, cfg: &RunConfig) -> Result<DoSCurve> {
    let curves = solved
        .results
        .iter()
        .map(|r| scaled_dos(r, &solved.basis, sigma, grid, cfg.outputs.route))
        .collect::<Result<Vec<_>>>()?;
    average_dos(&curves)
}

fn lowest(results: &[SpectrumResult]) -> f64 {
    results
        .iter()
        .filter_map(|r| r.eigenvalues.first().copied())
        .fold(f64::INFINITY, f64::min)
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
    command: Command,
}

impl Context {
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        create_artifact(&self.out, name, self.command.name())
    }

    fn pair(&self) -> Result<IncommensuratePair> {
        self.cfg.pair()
    }

    fn spectra(&self) -> Result<Solved> {
        let pair = self.pair()?;
        let ks = self.cfg.kpoints(&pair);
        let solved = solve_spectra(&self.cfg, &pair, self.cfg.discretization.ec, &ks)?;
        if solved.coefficient_misses > 0 {
            eprintln!("note: {} potential coefficient lookups fell outside the stored cutoff", solved.coefficient_misses);
        }
        Ok(solved)
    }

    fn basis(&self) -> Result<()> {
        let pair = self.pair()?;
        let mut basis = build_basis_with_limit(&pair, self.cfg.discretization.ec, self.cfg.discretization.max_basis)?;
        if pair.is_commensurate_fixture() {
            basis = basis.dedup_composite();
        }
        let mut w = self.create("basis.csv")?;
        if basis.dim() == 1 {
            writeln!(w, "m,n,g,kinetic")?;
            for e in basis.entries() {
                writeln!(w, "{},{},{},{}", e.m[0], e.n[0], fmt(e.g[0]), fmt(0.5 * e.g[0] * e.g[0]))?;
            }
        } else {
            writeln!(w, "m1,m2,n1,n2,gx,gy,kinetic")?;
            for e in basis.entries() {
                let kin = 0.5 * (e.g[0] * e.g[0] + e.g[1] * e.g[1]);
                writeln!(w, "{},{},{},{},{},{},{}", e.m[0], e.m[1], e.n[0], e.n[1], fmt(e.g[0]), fmt(e.g[1]), fmt(kin))?;
            }
        }
        w.flush()?;
        println!("N_c={}", basis.len());
        Ok(())
    }

    fn solve(&self) -> Result<()> {
        let solved = self.spectra()?;
        let mut w = self.create("eigenvalues.csv")?;
        writeln!(w, "k_index,kx,ky,j,eigenvalue")?;
        for (i, r) in solved.results.iter().enumerate() {
            for (j, &l) in r.eigenvalues.iter().enumerate() {
                writeln!(w, "{i},{},{},{j},{}", fmt(r.k[0]), fmt(r.k[1]), fmt(l))?;
            }
        }
        w.flush()?;
        if self.cfg.outputs.dump_matrix {
            let pair = self.pair()?;
            let (v1, v2) = self.cfg.potentials(&pair)?;
            for (i, r) in solved.results.iter().enumerate() {
                let h = assemble(&solved.basis, &v1, &v2, r.k)?;
                let mut f = BufWriter::new(File::create(self.out.join(format!("hamiltonian_{i}.bin")))?);
                h.write_dump(&mut f)?;
                f.flush()?;
            }
        }
        println!("N_c={} n_k={}", solved.basis.len(), solved.results.len());
        Ok(())
    }

    fn dos_grid(&self, results: &[SpectrumResult]) -> Result<EnergyGrid> {
        let o = &self.cfg.outputs;
        match o.window {
            Some([a, b]) => EnergyGrid::new(a, b, o.n_points),
            None => {
                let all: Vec<f64> = results.iter().flat_map(|r| r.eigenvalues.iter().copied()).collect();
                EnergyGrid::around(&all, o.sigma, o.n_points)
            }
        }
    }

    fn dos(&self) -> Result<()> {
        let solved = self.spectra()?;
        let grid = self.dos_grid(&solved.results)?;
        let dos = averaged_dos(&solved, self.cfg.outputs.sigma, grid, &self.cfg)?;
        let mut w = self.create("dos.csv")?;
        dos.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn eigfun(&self) -> Result<()> {
        let pair = self.pair()?;
        let k = self.cfg.kpoints(&pair)[0];
        let solved = solve_spectra(&self.cfg, &pair, self.cfg.discretization.ec, &[k])?;
        let r = &solved.results[0];
        let grid = self.cfg.realspace_grid(pair.dim())?;
        for &j in &self.cfg.outputs.states {
            let u = eigenfunction_on_grid(r, j, &solved.basis, &grid)?;
            let mut w = self.create(&format!("eigfun_{j}.csv"))?;
            write_eigenfunction_csv(&mut w, &grid, &u)?;
            w.flush()?;
            println!("state={j} eigenvalue={} ipr={}", fmt(r.eigenvalues[j]), fmt(ipr(&u)?));
        }
        Ok(())
    }

    fn fermi(&self) -> Result<()> {
        let solved = self.spectra()?;
        let [z1, z2] = self.cfg.system.charges;
        let epv = match &self.cfg.scf {
            Some(s) => s.electrons_per_volume,
            None => None,
        }
        .unwrap_or_else(|| neutral_electron_density(&solved.basis, z1, z2));
        let theta = self.cfg.scf.as_ref().map_or(0.0, |s| s.theta);
        let res = fermi_level(&solved.results, &solved.basis, epv, theta, self.cfg.outputs.route)?;
        let report = res.report();
        let mut w = self.create("fermi.txt")?;
        w.write_all(report.as_bytes())?;
        w.flush()?;
        print!("{report}");
        Ok(())
    }

    fn scf(&self) -> Result<()> {
        let pair = self.pair()?;
        let section = self.cfg.scf.clone().unwrap_or_default();
        let e_ii = if section.include_e_ii {
            let [z1, z2] = self.cfg.system.charges;
            e_ii_breakdown(&pair, z1, z2, &self.cfg.ewald_params())?.e_ii
        } else {
            0.0
        };
        let config = self.cfg.scf_config(&section, e_ii)?;
        let (v1, v2) = self.cfg.potentials(&pair)?;
        let state = scf_solve(&pair, &v1, &v2, &config, None)?;
        let mut w = self.create("scf_log.csv")?;
        state.write_log(&mut w)?;
        w.flush()?;
        let grid = self.cfg.realspace_grid(pair.dim())?;
        let mut w = self.create("density.csv")?;
        state.density.write_diagonal_csv(&mut w, &grid)?;
        w.flush()?;
        println!(
            "converged={} iterations={} residual={} ef={} etot={}",
            state.converged,
            state.iteration,
            fmt(state.residual),
            fmt(state.ef()),
            fmt(state.total_energy())
        );
        if !state.converged {
            return Err(Error::EigenNonConvergence(format!(
                "SCF did not reach tol {} within {} iterations (residual {:.3e})",
                config.tol, config.max_iter, state.residual
            )));
        }
        Ok(())
    }

    fn ewald(&self) -> Result<()> {
        let pair = self.pair()?;
        let [z1, z2] = self.cfg.system.charges;
        let params = self.cfg.ewald_params();
        let b = e_ii_breakdown(&pair, z1, z2, &params)?;
        let tail = intralayer_tail(&pair.lat1, z1, &params).abs() + intralayer_tail(&pair.lat2, z2, &params).abs();
        if tail > 1e-8 {
            eprintln!("warning: real-space tail beyond r_cut is {tail:.3e}; increase ewald.r_cut");
        }
        let mut w = self.create("ewald.csv")?;
        w.write_all(b.csv().as_bytes())?;
        w.flush()?;
        print!("{}", b.csv());
        Ok(())
    }

    fn supercell_compare(&self) -> Result<()> {
        let pair = self.pair()?;
        if pair.dim() != 1 {
            return Err(Error::Config {
                key: "system.lattice1".into(),
                message: "supercell comparison supports one-dimensional chains only".into(),
            });
        }
        let solved = self.spectra()?;
        let o = &self.cfg.outputs;
        let grid = match o.window {
            Some([a, b]) => EnergyGrid::new(a, b, o.n_points)?,
            None => EnergyGrid::comparison(
                lowest(&solved.results),
                self.cfg.discretization.ec.min(o.supercell_ec),
                o.sigma,
                o.n_points,
            )?,
        };
        let reference = averaged_dos(&solved, o.sigma, grid, &self.cfg)?;
        let (l1, l2) = (pair.lat1.basis()[0][0], pair.lat2.basis()[0][0]);
        let approximants = Approximant::sequence(l1, l2, o.max_q)?;
        let rows = compare_approximants(
            &pair.lat1,
            &approximants,
            &self.cfg.system.potential1,
            &self.cfg.system.potential2,
            o.supercell_ec,
            o.supercell_kgrid,
            &reference,
        )?;
        let mut w = self.create("supercell.csv")?;
        writeln!(w, "q,L2_approx,dos_distance")?;
        for r in rows {
            writeln!(w, "{},{},{}", r.q, fmt(r.l2_approx), fmt(r.dos_distance))?;
        }
        w.flush()?;
        Ok(())
    }

    fn converge(&self) -> Result<()> {
        let pair = self.pair()?;
        let o = &self.cfg.outputs;
        let mut ecs = o.ec_sweep.clone();
        ecs.sort_by(f64::total_cmp);
        ecs.dedup();
        let k0 = self.cfg.kpoints(&pair)[0];
        let sweep = ecs
            .iter()
            .map(|&ec| solve_spectra(&self.cfg, &pair, ec, &[k0]))
            .collect::<Result<Vec<_>>>()?;
        let ec = self.cfg.discretization.ec;
        let kruns = o
            .k_sweep
            .iter()
            .map(|&n| solve_spectra(&self.cfg, &pair, ec, &uniform_kgrid(&pair.lat1, n)))
            .collect::<Result<Vec<_>>>()?;
        let lo = sweep
            .iter()
            .chain(&kruns)
            .map(|s| lowest(&s.results))
            .fold(f64::INFINITY, f64::min);
        let ec_min = ecs.first().copied().unwrap_or(ec).min(ec);
        let grid = match o.window {
            Some([a, b]) => EnergyGrid::new(a, b, o.n_points)?,
            None => EnergyGrid::comparison(lo, ec_min, o.sigma, o.n_points)?,
        };
        let curves = sweep
            .iter()
            .map(|s| averaged_dos(s, o.sigma, grid, &self.cfg))
            .collect::<Result<Vec<_>>>()?;
        let mut w = self.create("converge_ec.csv")?;
        writeln!(w, "ec,ec_next,dos_distance")?;
        for i in 1..curves.len() {
            let d = dos_distance(&curves[i - 1], &curves[i])?;
            writeln!(w, "{},{},{}", fmt(ecs[i - 1]), fmt(ecs[i]), fmt(d))?;
        }
        w.flush()?;
        if let Some(reference) = curves.last() {
            let mut w = self.create("converge_k.csv")?;
            writeln!(w, "n_k,ec,dos_distance")?;
            for s in &kruns {
                let d = dos_distance(&averaged_dos(s, o.sigma, grid, &self.cfg)?, reference)?;
                writeln!(w, "{},{},{}", s.results.len(), fmt(ec), fmt(d))?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

/// Opens `dir/name` and writes the `#` provenance line.
pub fn create_artifact(dir: &Path, name: &str, command: &str) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    writeln!(w, "# incomm-pw {} {command} unix_time={secs}", env!("CARGO_PKG_VERSION"))?;
    Ok(w)
}

/// Parses an artifact written by the CLI into float rows.
pub fn read_artifact(path: &Path) -> Result<Vec<Vec<f64>>> {
    Ok(output::read_rows(&std::fs::read_to_string(path)?))
}
