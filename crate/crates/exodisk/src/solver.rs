//! Time integration of the vorticity equation outside the unit disk.
//!
//! Navier–Stokes mode: Crank–Nicolson diffusion per Fourier mode on the
//! conservative finite-volume Laplacian, Adams–Bashforth-2 advection
//! (backward/forward Euler on the first step). The wall row is the
//! discrete Green-identity form of `ν(∂_r + N)ω_n = g_n`, built with the
//! discrete harmonic extension `φ_n` and discrete DtN value `N_h`; with it
//! the discrete slip `Σ_j V_j φ_j ω_j` is conserved to rounding error.
//! Euler mode: SSP-RK3 transport with `u_r(1) = 0`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::biot_savart::{BiotSavart, Flow, Wall};
use crate::config::SolverConfig;
use crate::diagnostics::{DiagnosticsRecord, Recorder};
use crate::error::{Error, Result};
use crate::grid::{build_grid, RadialGrid};
use crate::initial::projection_support;
use crate::linalg::Tridiagonal;
use crate::snapshot::Snapshot;
use crate::spectral::{radial_derivative, SpectralField, ThetaTransform};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    NavierStokes,
    Euler,
}

/// Vorticity, its velocity, and the multistep history.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub omega: SpectralField,
    pub flow: Flow,
    pub adv_prev: Option<SpectralField>,
    pub dt_prev: Option<f64>,
    /// Algebraic residual of the wall rows in the last step.
    pub bc_residual: f64,
}

/// Advection term and the largest speed on the collocation grid.
#[derive(Debug, Clone)]
pub struct Advection {
    pub term: SpectralField,
    pub max_speed: f64,
}

/// Operators shared by all steps of one run.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub bs: BiotSavart,
    pub fft: ThetaTransform,
    pub nu: f64,
    pub mode: Mode,
    pub cfl: f64,
    pub dt_max: f64,
}

impl Stepper {
    pub fn new(grid: &RadialGrid, n_theta: usize, nu: f64, mode: Mode, cfl: f64, dt_max: f64) -> Result<Self> {
        Ok(Self {
            bs: BiotSavart::new(grid, n_theta / 2)?,
            fft: ThetaTransform::new(n_theta)?,
            nu: if mode == Mode::Euler { 0.0 } else { nu },
            mode,
            cfl,
            dt_max,
        })
    }

    pub fn from_config(config: &SolverConfig, mode: Mode) -> Result<Self> {
        let grid = build_grid(config)?;
        Self::new(&grid, config.n_theta, config.nu, mode, config.cfl, config.dt_max)
    }

    pub fn grid(&self) -> &RadialGrid {
        self.bs.grid()
    }

    fn wall(&self) -> Wall {
        match self.mode {
            Mode::NavierStokes => Wall::Conservative,
            Mode::Euler => Wall::Derivative,
        }
    }

    /// Smallest grid length entering the CFL bound.
    pub fn min_delta(&self) -> f64 {
        let g = self.grid();
        g.wall_spacing().min(std::f64::consts::TAU / self.fft.n_theta() as f64)
    }

    pub fn state(&self, omega: SpectralField, t: f64) -> Result<SolverState> {
        let flow = self.bs.flow(&omega, self.wall())?;
        Ok(SolverState { t, omega, flow, adv_prev: None, dt_prev: None, bc_residual: 0.0 })
    }

    /// `-u_r ∂_r ω - (u_θ/r) ∂_θ ω`, products formed on the θ-grid from
    /// two-thirds-truncated factors and truncated again afterwards.
    pub fn advection_term(&self, omega: &SpectralField, flow: &Flow) -> Result<Advection> {
        let g = self.grid();
        let mut dr = radial_derivative(omega, g, 1)?;
        let mut dth = omega.clone();
        for n in -omega.max_mode()..=omega.max_mode() {
            let f = C::new(0.0, n as f64);
            for v in dth.mode_mut(n) {
                *v *= f;
            }
        }
        let (mut ur, mut ut) = (flow.u_r.clone(), flow.u_theta.clone());
        for f in [&mut dr, &mut dth, &mut ur, &mut ut] {
            f.dealias();
        }
        let pur = self.fft.inverse(&ur)?;
        let put = self.fft.inverse(&ut)?;
        let pdr = self.fft.inverse(&dr)?;
        let mut prod = self.fft.inverse(&dth)?;
        let n_r = g.len();
        let mut max_speed = 0.0f64;
        for (i, v) in prod.data.iter_mut().enumerate() {
            let j = i % n_r;
            let (a, b) = (pur.data[i], put.data[i]);
            max_speed = max_speed.max(a.hypot(b));
            *v = -a * pdr.data[i] - b * *v / g.r[j];
        }
        let mut term = self.fft.forward(&prod)?;
        term.dealias();
        term.enforce_hermitian();
        for n in -term.max_mode()..=term.max_mode() {
            term.mode_mut(n)[n_r - 1] = ZERO;
        }
        Ok(Advection { term, max_speed })
    }

    fn check_dt(&self, dt: f64, speed: f64) -> Result<()> {
        let bound = self.cfl_dt(speed);
        if dt > bound * (1.0 + 1e-9) {
            return Err(Error::Cfl { dt, suggested: bound });
        }
        Ok(())
    }

    /// Largest admissible step for a given speed.
    pub fn cfl_dt(&self, speed: f64) -> f64 {
        let adv = if speed > 0.0 { self.cfl * self.min_delta() / speed } else { f64::INFINITY };
        adv.min(self.dt_max)
    }

    /// Advances by `dt` (IMEX for Navier–Stokes, RK3 for Euler).
    pub fn step(&self, state: &SolverState, dt: f64) -> Result<SolverState> {
        match self.mode {
            Mode::NavierStokes => self.imex_step(state, dt),
            Mode::Euler => self.rk3_step(state, dt),
        }
    }

    pub fn imex_step(&self, state: &SolverState, dt: f64) -> Result<SolverState> {
        let adv = self.advection_term(&state.omega, &state.flow)?;
        self.check_dt(dt, adv.max_speed)?;
        let (extrap, theta) = match (&state.adv_prev, state.dt_prev) {
            (Some(prev), Some(dt_prev)) => {
                let w = dt / dt_prev;
                let mut a = adv.term.clone();
                a.scale(1.0 + 0.5 * w);
                a.axpy(-0.5 * w, prev);
                (a, 0.5)
            }
            _ => (adv.term.clone(), 1.0),
        };
        let h = state.omega.max_mode();
        let solved = (0..=h)
            .into_par_iter()
            .map(|n| self.diffuse_mode(state.omega.mode(n), extrap.mode(n), n, dt, theta))
            .collect::<Result<Vec<_>>>()?;
        let mut omega = SpectralField::zeros(state.omega.n_theta(), state.omega.n_r());
        let mut bc_residual = 0.0f64;
        for (n, (prof, res)) in solved.into_iter().enumerate() {
            omega.mode_mut(n as i64).copy_from_slice(&prof);
            bc_residual = bc_residual.max(res);
        }
        omega.enforce_hermitian();
        let flow = self.bs.flow(&omega, Wall::Conservative)?;
        Ok(SolverState {
            t: state.t + dt,
            omega,
            flow,
            adv_prev: Some(adv.term),
            dt_prev: Some(dt),
            bc_residual,
        })
    }

    /// θ-scheme for one mode; returns the new profile and the wall-row residual.
    fn diffuse_mode(&self, w: &[C], a: &[C], n: i64, dt: f64, theta: f64) -> Result<(Vec<C>, f64)> {
        let g = self.grid();
        let fv = &g.fv;
        let c = &fv.coupling;
        let m = g.len() - 1;
        let nn = (n * n) as f64;
        let nu = self.nu;
        let wall = n != 0;
        let dtn = if wall { self.bs.discrete_dtn(n) } else { 0.0 };
        // restricted operator on j = 0..m-1 with ω_m = 0
        let kl = |j: usize| if j > 0 { c[j - 1] } else { 0.0 };
        let kd = |j: usize| -(kl(j) + c[j] + nn * fv.ell[j]) + if j == 0 { dtn } else { 0.0 };
        let ku = |j: usize| if j + 1 < m { c[j] } else { 0.0 };
        let apply_k = |j: usize| {
            let mut v = w[j] * kd(j);
            if j > 0 {
                v += w[j - 1] * kl(j);
            }
            if j + 1 < m {
                v += w[j + 1] * ku(j);
            }
            v
        };
        let flux = if wall {
            let phi = self.bs.harmonic(n);
            (0..m).map(|j| a[j] * (fv.vol[j] * phi[j])).sum::<C>()
        } else {
            ZERO
        };
        let lo: Vec<f64> = (0..m).map(|j| -theta * nu * kl(j)).collect();
        let di: Vec<f64> = (0..m).map(|j| fv.vol[j] / dt - theta * nu * kd(j)).collect();
        let up: Vec<f64> = (0..m).map(|j| -theta * nu * ku(j)).collect();
        let mut rhs: Vec<C> = (0..m)
            .map(|j| w[j] * (fv.vol[j] / dt) + apply_k(j) * ((1.0 - theta) * nu) + a[j] * fv.vol[j])
            .collect();
        rhs[0] -= flux;
        let target = rhs[0];
        Tridiagonal::factor(&lo, &di, &up)?.solve(&mut rhs);
        let row0 = rhs[0] * di[0] + rhs[1] * up[0];
        let scale = target.norm().max(rhs[0].norm() * di[0].abs()).max(1e-300);
        let residual = (row0 - target).norm() / scale;
        rhs.push(ZERO);
        Ok((rhs, residual))
    }

    pub fn rk3_step(&self, state: &SolverState, dt: f64) -> Result<SolverState> {
        let adv = self.advection_term(&state.omega, &state.flow)?;
        self.check_dt(dt, adv.max_speed)?;
        let stage = |base: &SpectralField, w: f64, prev: &SpectralField, a: &SpectralField, c: f64| {
            let mut out = base.clone();
            out.scale(w);
            out.axpy(1.0 - w, prev);
            out.axpy((1.0 - w) * c, a);
            out
        };
        let w0 = &state.omega;
        let w1 = stage(w0, 0.0, w0, &adv.term, dt);
        let f1 = self.bs.flow(&w1, Wall::Derivative)?;
        let a1 = self.advection_term(&w1, &f1)?.term;
        let w2 = stage(w0, 0.75, &w1, &a1, dt);
        let f2 = self.bs.flow(&w2, Wall::Derivative)?;
        let a2 = self.advection_term(&w2, &f2)?.term;
        let mut w3 = stage(w0, 1.0 / 3.0, &w2, &a2, dt);
        w3.enforce_hermitian();
        let flow = self.bs.flow(&w3, Wall::Derivative)?;
        Ok(SolverState {
            t: state.t + dt,
            omega: w3,
            flow,
            adv_prev: Some(adv.term),
            dt_prev: Some(dt),
            bc_residual: 0.0,
        })
    }

    /// `max_θ |u_θ(θ, 1)|` from the wall values of the velocity.
    pub fn wall_slip(&self, flow: &Flow) -> f64 {
        self.fft.boundary_values(&flow.u_theta).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Per-step solver bookkeeping that is not part of the CSV record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub t: f64,
    pub dt: f64,
    pub max_speed: f64,
    /// `max|u_θ(·,1)| / max|u|`.
    pub wall_slip_ratio: f64,
    /// Worst pointwise-bound ratio of the elliptic solves in this step.
    pub bound_ratio: f64,
    pub bc_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Non-finite values appeared; the trajectory ends at the last valid state.
    Diverged { t: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub mode: Mode,
    pub nu: f64,
    /// Data actually evolved (after projection).
    pub initial: SpectralField,
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<DiagnosticsRecord>,
    pub stats: Vec<StepStats>,
    pub status: RunStatus,
    /// Whether the compatibility projection changed the data.
    pub projected: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// `|E(T) - E(0) + ∫ ν‖ω‖² dt| / E(0)`, trapezoid rule over the records.
    pub fn energy_balance_residual(&self) -> f64 {
        let r = &self.records;
        if r.len() < 2 || r[0].energy == 0.0 {
            return 0.0;
        }
        let diss: f64 = r
            .windows(2)
            .map(|p| 0.5 * (p[1].t - p[0].t) * self.nu * (p[0].enstrophy + p[1].enstrophy))
            .sum();
        (r[r.len() - 1].energy - r[0].energy + diss).abs() / r[0].energy.abs()
    }

    /// Relative change of the enstrophy between first and last record.
    pub fn enstrophy_drift(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) if a.enstrophy > 0.0 => (b.enstrophy - a.enstrophy).abs() / a.enstrophy,
            _ => 0.0,
        }
    }

    /// `ν ∫₀^T ∫_{strip} |∇u|²`, trapezoid rule over the records.
    pub fn kato_quantity(&self) -> f64 {
        self.records
            .windows(2)
            .map(|p| 0.5 * (p[1].t - p[0].t) * (p[0].kato_integrand + p[1].kato_integrand))
            .sum()
    }
}

fn relative_defect(bs: &BiotSavart, omega: &SpectralField) -> f64 {
    let g = bs.grid();
    let defect = bs.compatibility_defect(omega);
    let h = omega.max_mode();
    (-h..=h)
        .zip(defect)
        .map(|(n, d)| {
            let mass: f64 = g.integrate(&omega.mode(n).iter().map(|c| c.norm()).collect::<Vec<_>>());
            if mass == 0.0 {
                d.norm()
            } else {
                d.norm() / mass
            }
        })
        .fold(0.0, f64::max)
}

/// Relative compatibility defect below which data counts as compatible.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Runs from `omega0` to `config.t_final`.
pub fn run_simulation(config: &SolverConfig, omega0: &SpectralField, mode: Mode) -> Result<Trajectory> {
    config.validate()?;
    let stepper = Stepper::from_config(config, mode)?;
    run_with(&stepper, config, omega0)
}

/// Same as [`run_simulation`] with prebuilt operators.
pub fn run_with(stepper: &Stepper, config: &SolverConfig, omega0: &SpectralField) -> Result<Trajectory> {
    let g = stepper.grid();
    if omega0.n_r() != g.len() || omega0.n_theta() != stepper.fft.n_theta() {
        return Err(Error::Shape {
            expected: format!("{}×{}", stepper.fft.n_theta(), g.len()),
            got: format!("{}×{}", omega0.n_theta(), omega0.n_r()),
        });
    }
    if !omega0.is_finite() {
        return Err(Error::NonFinite("initial vorticity"));
    }
    let mut omega = omega0.clone();
    omega.enforce_hermitian();
    let mut projected = false;
    if relative_defect(&stepper.bs, &omega) > COMPATIBILITY_TOL {
        if !config.project {
            return Err(Error::Incompatible(
                "nonzero wall slip or net circulation; enable `project`".into(),
            ));
        }
        let (lo, hi) = projection_support(config);
        omega = stepper.bs.project_compatible(&omega, lo, hi)?;
        projected = true;
    }

    let mut recorder = Recorder::new(g, config, stepper.nu)?;
    let mut state = stepper.state(omega.clone(), 0.0)?;
    let nu = stepper.nu;
    let snap = |s: &SolverState| Snapshot { time: s.t, nu, field: s.omega.clone() };
    let mut traj = Trajectory {
        mode: stepper.mode,
        nu,
        initial: omega,
        snapshots: vec![snap(&state)],
        records: vec![recorder.record(stepper, &state)?],
        stats: Vec::new(),
        status: RunStatus::Completed,
        projected,
    };
    let t_end = config.t_final;
    let cadence = if config.snapshot_every > 0.0 { config.snapshot_every } else { t_end };
    let mut next_out = cadence.min(t_end);
    let mut step = 0usize;
    while state.t < t_end * (1.0 - 1e-12) {
        let speed = stepper.advection_term(&state.omega, &state.flow)?.max_speed;
        let mut dt = stepper.cfl_dt(speed) * (1.0 - 1e-9);
        let remaining = next_out - state.t;
        if dt >= remaining * (1.0 - 1e-9) {
            dt = remaining;
        } else if dt > 0.5 * remaining {
            dt = 0.5 * remaining;
        }
        let next = stepper.step(&state, dt)?;
        if !next.omega.is_finite() {
            traj.status = RunStatus::Diverged { t: next.t };
            break;
        }
        state = next;
        step += 1;
        let at_output = (state.t - next_out).abs() <= 1e-12 * t_end.max(1.0);
        if at_output {
            state.t = next_out;
        }
        traj.stats.push(StepStats {
            t: state.t,
            dt,
            max_speed: speed,
            wall_slip_ratio: if speed > 0.0 { stepper.wall_slip(&state.flow) / speed } else { 0.0 },
            bound_ratio: state.flow.bound_ratio,
            bc_residual: state.bc_residual,
        });
        if at_output || step % config.diag_every == 0 {
            traj.records.push(recorder.record(stepper, &state)?);
        }
        if at_output {
            traj.snapshots.push(snap(&state));
            next_out = (next_out + cadence).min(t_end);
        }
    }
    Ok(traj)
}
