//! Experiment driver: viscosity sweeps (E1–E3), kernel and norm audits
//! (E4), CSV outputs and the run manifest.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::biot_savart::{BiotSavart, Wall};
use crate::config::{Experiment, SolverConfig};
use crate::diagnostics::{inequality_audit, l2_velocity_diff, scaling_fit, write_diagnostics_csv, AuditRow, PowerFit};
use crate::error::{Error, Result};
use crate::grid::{build_grid, RadialGrid};
use crate::initial::compatible_data;
use crate::norms::{algebra_audit, AlgebraAudit, PencilDomain};
use crate::rescaled::{dtn_expansion_identity, write_dtn_csv, DtnReport};
use crate::solver::{run_with, Mode, RunStatus, Stepper, Trajectory};
use crate::stokes::{residual_extract_and_fit, semigroup_audit, write_kernel_csv, KernelEval, SemigroupAudit, SemigroupSetup, StokesMode};

/// Default viscosity sweep.
pub const DEFAULT_NUS: [f64; 3] = [1e-2, 3e-3, 1e-3];

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "EXODISK_THREADS";

/// Worker pool honouring `EXODISK_THREADS` (unset or 0: rayon default).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Desk-check resolution: `N_θ = 32`, `N_r = 128`.
pub fn smoke_config(base: &SolverConfig) -> SolverConfig {
    SolverConfig { n_theta: 32, n_r: 128, ..base.clone() }
}

/// Largest and smallest viscosity of a sweep.
pub fn smoke_nus(nus: &[f64]) -> Vec<f64> {
    let hi = nus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = nus.iter().cloned().fold(f64::INFINITY, f64::min);
    if nus.len() < 2 || hi == lo {
        nus.to_vec()
    } else {
        vec![hi, lo]
    }
}

/// One member of a sweep; failures are kept as messages.
#[derive(Debug, Clone)]
pub struct SweepMember {
    pub nu: f64,
    pub result: std::result::Result<Trajectory, String>,
}

/// Shared setup of a sweep: one grid resolving the smallest viscosity and
/// one set of compatible initial data.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub config: SolverConfig,
    pub nus: Vec<f64>,
    pub grid: RadialGrid,
}

impl Sweep {
    pub fn new(config: &SolverConfig, nus: &[f64]) -> Result<Self> {
        if nus.iter().any(|&nu| !(nu > 0.0 && nu.is_finite())) {
            return Err(Error::Config("sweep viscosities must be positive".into()));
        }
        let mut config = config.clone();
        if config.nu_grid.is_none() && !nus.is_empty() {
            config.nu_grid = Some(nus.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        let half = 0.5 * config.t_final;
        let k = half / config.snapshot_every;
        if !(config.snapshot_every > 0.0) || (k - k.round()).abs() > 1e-9 {
            config.snapshot_every = config.t_final / 10.0;
        }
        config.validate()?;
        let grid = build_grid(&config)?;
        Ok(Self { config, nus: nus.to_vec(), grid })
    }

    fn initial(&self) -> Result<crate::spectral::SpectralField> {
        let bs = BiotSavart::new(&self.grid, self.config.n_theta / 2)?;
        compatible_data(&self.config, &self.grid, &bs)
    }

    fn run_one(&self, nu: f64, mode: Mode, omega0: &crate::spectral::SpectralField) -> Result<Trajectory> {
        let c = &self.config;
        let stepper = Stepper::new(&self.grid, c.n_theta, nu, mode, c.cfl, c.dt_max)?;
        let config = SolverConfig { nu, ..c.clone() };
        let traj = run_with(&stepper, &config, omega0)?;
        if let RunStatus::Diverged { t } = traj.status {
            return Err(Error::Diverged { t });
        }
        Ok(traj)
    }

    /// Navier–Stokes runs for every viscosity, in parallel.
    pub fn viscous(&self, pool: &rayon::ThreadPool) -> Result<Vec<SweepMember>> {
        let omega0 = self.initial()?;
        Ok(pool.install(|| {
            self.nus
                .par_iter()
                .map(|&nu| {
                    log::info!("navier-stokes run, nu = {nu:e}");
                    let result = self.run_one(nu, Mode::NavierStokes, &omega0).map_err(|e| e.to_string());
                    SweepMember { nu, result }
                })
                .collect()
        }))
    }

    /// Euler run from the same data on the same grid.
    pub fn euler(&self) -> Result<Trajectory> {
        log::info!("euler baseline");
        self.run_one(0.0, Mode::Euler, &self.initial()?)
    }
}

fn failures(members: &[SweepMember]) -> Vec<(f64, String)> {
    members.iter().filter_map(|m| m.result.as_ref().err().map(|e| (m.nu, e.clone()))).collect()
}

fn completed(members: &[SweepMember]) -> Vec<(f64, &Trajectory)> {
    members.iter().filter_map(|m| m.result.as_ref().ok().map(|t| (m.nu, t))).collect()
}

/// Largest pointwise Biot–Savart ratio met along a trajectory.
pub fn max_bound_ratio(traj: &Trajectory) -> f64 {
    traj.stats.iter().map(|s| s.bound_ratio).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct E1Row {
    pub nu: f64,
    pub t_mid: f64,
    /// `sup_θ |ω(T/2, θ, 1)|`.
    pub boundary_sup_mid: f64,
    /// `sup_{t_min ≤ t ≤ T} √(νt) sup_θ |ω(t, θ, 1)|`.
    pub scaled_bound: f64,
    pub bound_ratio: f64,
    pub a_beta_initial: f64,
    pub a_beta_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct E1Report {
    pub rows: Vec<E1Row>,
    pub fit: Option<PowerFit>,
    /// `max_ν / min_ν` of [`E1Row::scaled_bound`].
    pub uniformity: f64,
    pub failures: Vec<(f64, String)>,
}

pub fn e1_report(members: &[SweepMember], t_final: f64) -> E1Report {
    let half = 0.5 * t_final;
    let mut rows = Vec::new();
    let mut failed = failures(members);
    for (nu, traj) in completed(members) {
        let Some(mid) = traj.records.iter().find(|r| (r.t - half).abs() <= 1e-9 * t_final.max(1.0)) else {
            failed.push((nu, "no record at T/2".into()));
            continue;
        };
        let t_min = traj.stats.get(9).or(traj.stats.last()).map_or(0.0, |s| s.t);
        let scaled_bound = traj
            .records
            .iter()
            .filter(|r| r.t >= t_min && r.t > 0.0)
            .map(|r| r.boundary_sup * (nu * r.t).sqrt())
            .fold(0.0, f64::max);
        let a_beta_max = traj.records.iter().map(|r| r.a_beta).fold(0.0, f64::max);
        rows.push(E1Row {
            nu,
            t_mid: mid.t,
            boundary_sup_mid: mid.boundary_sup,
            scaled_bound,
            bound_ratio: max_bound_ratio(traj),
            a_beta_initial: traj.records[0].a_beta,
            a_beta_max,
        });
    }
    let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.nu, r.boundary_sup_mid)).collect();
    let fit = scaling_fit(&series).ok();
    let hi = rows.iter().map(|r| r.scaled_bound).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.scaled_bound).fold(f64::INFINITY, f64::min);
    E1Report { rows, fit, uniformity: hi / lo, failures: failed }
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2Report {
    /// `(ν, sup_t ‖u^ν - u^0‖_{L²(r ≤ R_max/2)})`, ordered as the sweep.
    pub rows: Vec<(f64, f64)>,
    pub fit: Option<PowerFit>,
    /// The difference decreases strictly as ν decreases.
    pub strictly_decreasing: bool,
    pub euler_bound_ratio: f64,
    pub failures: Vec<(f64, String)>,
}

/// `sup_t ‖u^ν(t) - u^0(t)‖_{L²(1 ≤ r ≤ R_cut)}` over common snapshot times.
pub fn inviscid_gap(bs: &BiotSavart, viscous: &Trajectory, euler: &Trajectory, r_cut: f64) -> Result<f64> {
    let mut gap = 0.0f64;
    let mut matched = 0;
    for a in &viscous.snapshots {
        let Some(b) = euler.snapshots.iter().find(|b| (b.time - a.time).abs() <= 1e-9 * a.time.max(1.0)) else {
            continue;
        };
        let fa = bs.flow(&a.field, Wall::Derivative)?;
        let fb = bs.flow(&b.field, Wall::Derivative)?;
        gap = gap.max(l2_velocity_diff(bs.grid(), (&fa.u_r, &fa.u_theta), (&fb.u_r, &fb.u_theta), r_cut)?);
        matched += 1;
    }
    if matched == 0 {
        return Err(Error::Config("viscous and Euler runs share no snapshot times".into()));
    }
    Ok(gap)
}

pub fn e2_report(sweep: &Sweep, members: &[SweepMember], euler: &Trajectory) -> Result<E2Report> {
    let bs = BiotSavart::new(&sweep.grid, sweep.config.n_theta / 2)?;
    let r_cut = 0.5 * sweep.config.r_max;
    let mut failed = failures(members);
    let mut rows = Vec::new();
    for (nu, traj) in completed(members) {
        match inviscid_gap(&bs, traj, euler, r_cut) {
            Ok(g) => rows.push((nu, g)),
            Err(e) => failed.push((nu, e.to_string())),
        }
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let strictly_decreasing = sorted.len() >= 2 && sorted.windows(2).all(|p| p[0].1 < p[1].1);
    Ok(E2Report {
        fit: scaling_fit(&rows).ok(),
        rows,
        strictly_decreasing,
        euler_bound_ratio: max_bound_ratio(euler),
        failures: failed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct E3Row {
    pub nu: f64,
    pub kato: f64,
    pub strip_width: f64,
    pub subcell: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct E3Report {
    /// Sorted by decreasing ν.
    pub rows: Vec<E3Row>,
    /// `(K(ν_i)/K(ν_{i+1}))^{1/log10(ν_i/ν_{i+1})}` for consecutive members.
    pub decade_factors: Vec<f64>,
    pub failures: Vec<(f64, String)>,
}

impl E3Report {
    /// Every consecutive pair drops by at least `factor` per decade.
    pub fn decreases_by(&self, factor: f64) -> bool {
        !self.decade_factors.is_empty() && self.decade_factors.iter().all(|&f| f >= factor)
    }
}

pub fn e3_report(members: &[SweepMember], kato_c: f64) -> E3Report {
    let mut rows: Vec<E3Row> = completed(members)
        .into_iter()
        .map(|(nu, traj)| E3Row {
            nu,
            kato: traj.kato_quantity(),
            strip_width: kato_c * nu,
            subcell: traj.records.iter().any(|r| r.kato_subcell),
        })
        .collect();
    rows.sort_by(|a, b| b.nu.total_cmp(&a.nu));
    let decade_factors = rows
        .windows(2)
        .map(|p| (p[0].kato / p[1].kato).powf(1.0 / (p[0].nu / p[1].nu).log10()))
        .collect();
    E3Report { rows, decade_factors, failures: failures(members) }
}

/// E4: audits that need no time integration.
#[derive(Debug, Clone)]
pub struct E4Report {
    pub dtn: Vec<DtnReport>,
    pub kernels: Vec<KernelEval>,
    pub semigroup: SemigroupAudit,
    pub algebra: AlgebraAudit,
    /// Inequality audit of the initial data.
    pub audit: Vec<AuditRow>,
}

pub fn run_e4(config: &SolverConfig, smoke: bool) -> Result<E4Report> {
    let mut dtn = Vec::new();
    for n in [1, 3, 10] {
        for lambda in [0.1, 0.5] {
            dtn.push(dtn_expansion_identity(n, lambda, Complex64::new(1.0, 0.0), config.r_max)?);
        }
    }
    let cases: &[(f64, f64)] = if smoke { &[(1.0, 1e-3)] } else { &[(0.5, 1e-2), (1.0, 1e-3), (2.0, 1e-4)] };
    let kernels = cases
        .iter()
        .map(|&(alpha, nu)| {
            let tau = 1.0;
            let mode = StokesMode::for_layer(alpha, nu, tau, 20.0 * (nu * tau).sqrt() + 2.0, 1200)?;
            residual_extract_and_fit(&mode, &[0.25, 0.5, 1.0], (nu * tau).sqrt(), 400)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut setup = SemigroupSetup::default();
    if smoke {
        setup.profiles = 4;
        setup.n_z = 800;
        setup.steps = 200;
    }
    let semigroup = semigroup_audit(&setup)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dom = PencilDomain::new(config.delta0, 0.5 * config.rho0, config.eps0)?;
    let algebra = algebra_audit(&mut rng, &dom, config.lambda, 100)?;
    let grid = build_grid(config)?;
    let stepper = Stepper::new(&grid, config.n_theta, config.nu, Mode::NavierStokes, config.cfl, config.dt_max)?;
    let omega0 = compatible_data(config, &grid, &stepper.bs)?;
    let audit = inequality_audit(&stepper, &omega0, config)?;
    Ok(E4Report { dtn, kernels, semigroup, algebra, audit })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    use std::io::Write;
    let mut f = create(path)?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Writes one diagnostics CSV per completed member.
pub fn write_sweep_diagnostics(members: &[SweepMember], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (nu, traj) in completed(members) {
        let path = dir.join(format!("diagnostics_nu_{nu:e}.csv"));
        write_diagnostics_csv(create(&path)?, &traj.records)?;
        out.push(path);
    }
    Ok(out)
}

fn fit_text(fit: &Option<PowerFit>) -> String {
    fit.map_or_else(|| "unavailable".into(), |f| format!("{:.4} ± {:.4}", f.exponent, f.stderr))
}

/// Outcome of one experiment, as echoed in the manifest.
#[derive(Debug, Clone, Default)]
pub struct ManifestEntry {
    pub experiment: String,
    pub config: String,
    pub nus: Vec<f64>,
    pub summary: Vec<(String, String)>,
    /// `(path, sha256)`.
    pub outputs: Vec<(PathBuf, String)>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "exodisk_version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "entries = {}", self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            let _ = writeln!(s, "\n[entry {i}]");
            let _ = writeln!(s, "experiment = {}", e.experiment);
            let nus: Vec<String> = e.nus.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "nus = {}", nus.join(","));
            let _ = writeln!(s, "status = {}", if e.failures.is_empty() { "ok" } else { "failed" });
            for f in &e.failures {
                let _ = writeln!(s, "failure = {f}");
            }
            let _ = writeln!(s, "[entry {i}.summary]");
            for (k, v) in &e.summary {
                let _ = writeln!(s, "{k} = {v}");
            }
            let _ = writeln!(s, "[entry {i}.config]");
            s.push_str(&e.config);
            let _ = writeln!(s, "[entry {i}.outputs]");
            for (p, h) in &e.outputs {
                let _ = writeln!(s, "{h}  {}", p.display());
            }
        }
        s
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// One experiment to run with its viscosity list.
#[derive(Debug, Clone)]
pub struct Job {
    pub config: SolverConfig,
    pub nus: Vec<f64>,
}

/// Runs one experiment and writes its CSVs under `dir`. Sub-run failures
/// are recorded in the entry instead of aborting.
pub fn run_experiment(job: &Job, dir: &Path, pool: &rayon::ThreadPool) -> ManifestEntry {
    let mut entry = ManifestEntry {
        experiment: job.config.experiment.to_string(),
        config: job.config.to_text(),
        nus: job.nus.clone(),
        ..Default::default()
    };
    let mut paths = Vec::new();
    if let Err(e) = experiment_body(job, dir, pool, &mut entry, &mut paths) {
        entry.failures.push(e.to_string());
    }
    for p in paths {
        match sha256_file(&p) {
            Ok(h) => entry.outputs.push((p, h)),
            Err(e) => entry.failures.push(format!("{}: {e}", p.display())),
        }
    }
    entry
}

fn experiment_body(
    job: &Job,
    dir: &Path,
    pool: &rayon::ThreadPool,
    entry: &mut ManifestEntry,
    paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let sum = &mut entry.summary;
    match job.config.experiment {
        Experiment::E4 => {
            let rep = pool.install(|| run_e4(&job.config, false))?;
            let p = dir.join("dtn.csv");
            write_dtn_csv(create(&p)?, &rep.dtn)?;
            paths.push(p);
            let p = dir.join("kernel.csv");
            write_kernel_csv(create(&p)?, &rep.kernels)?;
            paths.push(p);
            let mut s = String::from("nu,profile,alpha,semigroup_ratio,trace_ratio\n");
            for r in &rep.semigroup.rows {
                let _ = writeln!(s, "{:e},{},{},{:.6e},{:.6e}", r.nu, r.profile, r.alpha, r.semigroup_ratio, r.trace_ratio);
            }
            let p = dir.join("semigroup.csv");
            write_text(&p, &s)?;
            paths.push(p);
            let mut s = String::from("name,lhs,rhs,ratio,constant_one,status\n");
            for r in &rep.audit {
                let _ = writeln!(s, "{},{:.6e},{:.6e},{:.6e},{},{:?}", r.name, r.lhs, r.rhs, r.ratio, r.constant_one, r.status);
            }
            let p = dir.join("audit.csv");
            write_text(&p, &s)?;
            paths.push(p);
            let dtn_err = rep.dtn.iter().map(|d| (d.n_numeric - d.n_exact).norm()).fold(0.0, f64::max);
            sum.push(("dtn_max_error".into(), format!("{dtn_err:.3e}")));
            sum.push(("semigroup_spread".into(), format!("{:.4}", rep.semigroup.semigroup_spread)));
            sum.push(("trace_spread".into(), format!("{:.4}", rep.semigroup.trace_spread)));
            sum.push(("algebra_worst_ratio".into(), format!("{:.4}", rep.algebra.worst_ratio)));
        }
        exp => {
            let sweep = Sweep::new(&job.config, &job.nus)?;
            let members = sweep.viscous(pool)?;
            for (nu, e) in failures(&members) {
                entry.failures.push(format!("nu = {nu:e}: {e}"));
            }
            paths.extend(write_sweep_diagnostics(&members, dir)?);
            match exp {
                Experiment::E1 => {
                    let rep = e1_report(&members, sweep.config.t_final);
                    let mut s = String::from("nu,t,boundary_sup,scaled_bound\n");
                    for r in &rep.rows {
                        let _ = writeln!(s, "{:e},{},{:.8e},{:.8e}", r.nu, r.t_mid, r.boundary_sup_mid, r.scaled_bound);
                    }
                    let p = dir.join("e1_scaling.csv");
                    write_text(&p, &s)?;
                    paths.push(p);
                    sum.push(("exponent".into(), fit_text(&rep.fit)));
                    sum.push(("scaled_bound_spread".into(), format!("{:.4}", rep.uniformity)));
                    let ratio = rep.rows.iter().map(|r| r.bound_ratio).fold(0.0, f64::max);
                    sum.push(("max_pointwise_ratio".into(), format!("{ratio:.6}")));
                    for r in &rep.rows {
                        sum.push((
                            format!("a_beta_growth_nu_{:e}", r.nu),
                            format!("{:.4}", r.a_beta_max / r.a_beta_initial),
                        ));
                    }
                }
                Experiment::E2 => {
                    let euler = sweep.euler()?;
                    let rep = e2_report(&sweep, &members, &euler)?;
                    for (nu, e) in &rep.failures {
                        if members.iter().any(|m| m.nu == *nu && m.result.is_ok()) {
                            entry.failures.push(format!("nu = {nu:e}: {e}"));
                        }
                    }
                    let mut s = String::from("nu,l2_diff\n");
                    for (nu, g) in &rep.rows {
                        let _ = writeln!(s, "{nu:e},{g:.8e}");
                    }
                    let p = dir.join("e2_convergence.csv");
                    write_text(&p, &s)?;
                    paths.push(p);
                    let p = dir.join("diagnostics_euler.csv");
                    write_diagnostics_csv(create(&p)?, &euler.records)?;
                    paths.push(p);
                    sum.push(("slope".into(), fit_text(&rep.fit)));
                    sum.push(("strictly_decreasing".into(), rep.strictly_decreasing.to_string()));
                    sum.push(("euler_enstrophy_drift".into(), format!("{:.3e}", euler.enstrophy_drift())));
                }
                _ => {
                    let rep = e3_report(&members, sweep.config.kato_c);
                    let mut s = String::from("nu,kato,strip_width,subcell\n");
                    for r in &rep.rows {
                        let _ = writeln!(s, "{:e},{:.8e},{:e},{}", r.nu, r.kato, r.strip_width, r.subcell);
                    }
                    let p = dir.join("e3_kato.csv");
                    write_text(&p, &s)?;
                    paths.push(p);
                    let f: Vec<String> = rep.decade_factors.iter().map(|f| format!("{f:.3}")).collect();
                    sum.push(("decade_factors".into(), f.join(",")));
                    sum.push(("kato_c".into(), sweep.config.kato_c.to_string()));
                }
            }
        }
    }
    Ok(())
}

/// Runs every job under `out/<index>_<experiment>/` and writes
/// `out/manifest.txt`. An empty job list yields an empty manifest.
pub fn run_experiment_suite(jobs: &[Job], out: &Path) -> Result<Manifest> {
    let pool = thread_pool()?;
    fs::create_dir_all(out)?;
    let mut manifest = Manifest::default();
    for (i, job) in jobs.iter().enumerate() {
        let dir = out.join(format!("{i}_{}", job.config.experiment));
        manifest.entries.push(run_experiment(job, &dir, &pool));
        write_text(&out.join("manifest.txt"), &manifest.to_text())?;
    }
    write_text(&out.join("manifest.txt"), &manifest.to_text())?;
    Ok(manifest)
}
