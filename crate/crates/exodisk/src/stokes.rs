//! Half-line Stokes problem for one frequency `α`:
//! `∂_τ W = ν(∂_z² - α²)W + F`, `ν(∂_z + |α|)W(0) = g_b`, `W → 0`.
//!
//! The numerical solution is the oracle; the residual kernel `R_α` is
//! measured as oracle Green column minus the Neumann heat kernel `H_α`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::linalg::{BandBuilder, BandLu};
use crate::norms::NormContext;
use crate::rescaled::{curvature_a, curvature_b, dtn_expansion_identity};

type C = Complex64;

/// `H_α(τ,y;z) = (ντ)^{-1/2}(e^{-(y-z)²/4ντ} + e^{-(y+z)²/4ντ}) e^{-α²ντ}`.
///
/// With this normalization `∫₀^∞ H₀ dy = 2√π`; the propagator of the heat
/// equation is `H/(2√π)`.
pub fn heat_kernel_h(alpha: f64, nu: f64, tau: f64, y: f64, z: f64) -> Result<f64> {
    let s = nu * tau;
    if !(s > 0.0) {
        return Err(Error::Config(format!("heat kernel needs ντ > 0, got {s}")));
    }
    let g = |d: f64| (-d * d / (4.0 * s)).exp();
    Ok((g(y - z) + g(y + z)) * (-alpha * alpha * s).exp() / s.sqrt())
}

/// Closed-form residual kernel of the Robin problem in the same
/// normalization: `2√π |α| e^{-|α|(y+z)} erfc((y+z-2|α|ντ)/(2√(ντ)))`.
pub fn residual_kernel_exact(alpha: f64, nu: f64, tau: f64, y: f64, z: f64) -> f64 {
    let k = alpha.abs();
    let s = nu * tau;
    let x = y + z;
    2.0 * PI.sqrt() * k * (-k * x).exp() * libm::erfc((x - 2.0 * k * s) / (2.0 * s.sqrt()))
}

/// `e^{ντΔ_α}` with Neumann reflection applied to `e^{-(z-z0)²/(2s²)}`.
pub fn heat_gaussian(alpha: f64, nu: f64, tau: f64, z0: f64, s: f64, z: f64) -> f64 {
    let v = s * s + 2.0 * nu * tau;
    let g = |d: f64| (-d * d / (2.0 * v)).exp();
    (s / v.sqrt()) * (g(z - z0) + g(z + z0)) * (-alpha * alpha * nu * tau).exp()
}

/// All time levels of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Largest `|ν(∂_z + |α|)W(0) + h - g_b|` over all levels.
    pub bc_residual: f64,
}

impl Evolution {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("at least the initial level")
    }
}

/// Finite-difference solver for one frequency on a stretched z-grid.
#[derive(Debug, Clone)]
pub struct StokesMode {
    pub alpha: f64,
    pub nu: f64,
    /// Coefficient of the curvature operator `L_α = a∂_z + α²b` (0 for pure Stokes).
    pub lambda: f64,
    /// `h = -ν c w(0)`, the nonlocal correction per unit boundary value.
    pub h_coeff: f64,
    pub z: Vec<f64>,
    grid: RadialGrid,
}

/// Forcing at time level `i` and time `t`.
pub type Forcing<'a> = &'a (dyn Fn(usize, f64) -> Vec<f64> + Sync);

impl StokesMode {
    pub fn new(alpha: f64, nu: f64, z_max: f64, n_z: usize, h_wall: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::Config(format!("Stokes solver needs ν > 0, got {nu}")));
        }
        let grid = RadialGrid::stretched(1.0 + z_max, n_z, h_wall, None)?;
        let z = grid.r.iter().map(|r| r - 1.0).collect();
        Ok(Self { alpha, nu, lambda: 0.0, h_coeff: 0.0, z, grid })
    }

    /// Grid resolving a layer of width `√(ν τ)` with about twenty cells.
    pub fn for_layer(alpha: f64, nu: f64, tau: f64, z_max: f64, n_z: usize) -> Result<Self> {
        Self::new(alpha, nu, z_max, n_z, (nu * tau).sqrt() / 20.0)
    }

    /// Adds `νλL_α` to the operator and the nonlocal boundary term; `n = α/λ`
    /// must be an integer.
    pub fn with_curvature(mut self, lambda: f64, r_max: f64) -> Result<Self> {
        if lambda == 0.0 {
            self.lambda = 0.0;
            self.h_coeff = 0.0;
            return Ok(self);
        }
        let n = (self.alpha / lambda).round();
        if (n * lambda - self.alpha).abs() > 1e-9 * self.alpha.abs().max(1.0) {
            return Err(Error::Config(format!("α = {} is not a multiple of λ = {lambda}", self.alpha)));
        }
        self.lambda = lambda;
        self.h_coeff = if n == 0.0 {
            0.0
        } else {
            dtn_expansion_identity(n as i64, lambda, C::new(1.0, 0.0), r_max)?.correction_integral.re
        };
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// `(∂_z² - α² + λL_α) f` at node j (without ν).
    fn op_row(&self, j: usize) -> Vec<(usize, f64)> {
        let (s1, s2) = (self.grid.d1_hi(j), self.grid.d2_hi(j));
        let z = self.z[j];
        let a2 = self.alpha * self.alpha;
        let mut row: Vec<(usize, f64)> = (0..5)
            .map(|q| (s2.start + q, s2.w[q] + self.lambda * curvature_a(self.lambda, z) * s1.w[q]))
            .collect();
        let diag = -a2 + self.lambda * a2 * curvature_b(self.lambda, z);
        if let Some(e) = row.iter_mut().find(|e| e.0 == j) {
            e.1 += diag;
        }
        row
    }

    /// Applies `(∂_z² - α² + λL_α)` to a profile.
    pub fn apply_operator(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|j| self.op_row(j).iter().map(|&(k, w)| w * f[k]).sum())
            .collect()
    }

    /// `L_α f = a ∂_z f + α² b f` with the production λ.
    pub fn apply_curvature(&self, lambda: f64, f: &[f64]) -> Vec<f64> {
        let a2 = self.alpha * self.alpha;
        (0..self.len())
            .map(|j| {
                let z = self.z[j];
                curvature_a(lambda, z) * self.grid.d1_hi(j).apply(f) + a2 * curvature_b(lambda, z) * f[j]
            })
            .collect()
    }

    fn bc_row(&self) -> (usize, [f64; 5]) {
        let s = self.grid.d1_hi(0);
        let mut w = s.w.map(|v| self.nu * v);
        w[0] += self.nu * (self.alpha.abs() + self.h_coeff);
        (s.start, w)
    }

    /// `ν(∂_z + |α|)W(0) + ν c W(0)`, i.e. the left side of the boundary row.
    pub fn boundary_operator(&self, f: &[f64]) -> f64 {
        let (s, w) = self.bc_row();
        w.iter().zip(&f[s..]).map(|(a, b)| a * b).sum()
    }

    fn factor(&self, dt: f64, theta: f64) -> Result<BandLu> {
        let n = self.len();
        let mut bb = BandBuilder::new(n, 4, 4);
        let (s, w) = self.bc_row();
        for (q, v) in w.iter().enumerate() {
            bb.add(0, s + q, *v);
        }
        for j in 1..n - 1 {
            bb.add(j, j, 1.0);
            for (k, v) in self.op_row(j) {
                bb.add(j, k, -theta * dt * self.nu * v);
            }
        }
        bb.add(n - 1, n - 1, 1.0);
        bb.factor()
    }

    /// Level times for `steps` Crank–Nicolson steps to `tau`, the first
    /// interval replaced by backward-Euler half steps.
    pub fn levels(tau: f64, steps: usize) -> Vec<f64> {
        let dt = tau / steps as f64;
        let mut t = vec![0.0, 0.5 * dt, dt];
        t.extend((2..=steps).map(|i| if i == steps { tau } else { i as f64 * dt }));
        t
    }

    /// Evolves `w0` to `tau`; `forcing` is sampled on [`Self::levels`].
    pub fn evolve(
        &self,
        w0: &[f64],
        tau: f64,
        steps: usize,
        g_b: &(dyn Fn(f64) -> f64 + Sync),
        forcing: Option<Forcing<'_>>,
    ) -> Result<Evolution> {
        let n = self.len();
        if w0.len() != n {
            return Err(Error::Shape { expected: format!("{n} z-nodes"), got: w0.len().to_string() });
        }
        if steps == 0 || !(tau > 0.0) {
            return Ok(Evolution { times: vec![0.0], states: vec![w0.to_vec()], bc_residual: 0.0 });
        }
        let times = Self::levels(tau, steps);
        let dt = tau / steps as f64;
        let be = self.factor(0.5 * dt, 1.0)?;
        let cn = self.factor(dt, 0.5)?;
        let force = |i: usize| forcing.map(|f| f(i, times[i]));
        let mut states = vec![w0.to_vec()];
        let mut bc_residual = 0.0f64;
        let mut f_prev = force(0);
        for i in 1..times.len() {
            let h = times[i] - times[i - 1];
            let prev = &states[i - 1];
            let f_new = force(i);
            let (lu, theta) = if i <= 2 { (&be, 1.0) } else { (&cn, 0.5) };
            let lap = self.apply_operator(prev);
            let mut rhs: Vec<C> = (0..n)
                .map(|j| {
                    let mut v = prev[j] + (1.0 - theta) * h * self.nu * lap[j];
                    if let Some(fn_) = &f_new {
                        v += theta * h * fn_[j];
                    }
                    if let Some(fp) = &f_prev {
                        v += (1.0 - theta) * h * fp[j];
                    }
                    C::new(v, 0.0)
                })
                .collect();
            let g = g_b(times[i]);
            rhs[0] = C::new(g, 0.0);
            rhs[n - 1] = C::new(0.0, 0.0);
            lu.solve(&mut rhs);
            let next: Vec<f64> = rhs.iter().map(|c| c.re).collect();
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("Stokes oracle state"));
            }
            bc_residual = bc_residual.max((self.boundary_operator(&next) - g).abs());
            states.push(next);
            f_prev = f_new;
        }
        Ok(Evolution { times, states, bc_residual })
    }
}

/// Oracle solve of the Stokes mode problem with homogeneous forcing.
pub fn stokes_mode_oracle(
    mode: &StokesMode,
    w0: &[f64],
    tau: f64,
    steps: usize,
    g_b: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Vec<f64>> {
    Ok(mode.evolve(w0, tau, steps, g_b, None)?.last().to_vec())
}

/// Extracted residual kernel and its envelope fit.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEval {
    pub alpha: f64,
    pub nu: f64,
    pub y0: f64,
    pub taus: Vec<f64>,
    pub z: Vec<f64>,
    /// `H_α(τ, y0; z)` per τ.
    pub h: Vec<Vec<f64>>,
    /// Extracted `R_α(τ, y0; z)` per τ.
    pub r: Vec<Vec<f64>>,
    /// `|α| + ν^{-1/2}`.
    pub mu_f: f64,
    pub theta0: f64,
    pub prefactor: f64,
    /// `sup |R| / envelope` with the fitted θ₀.
    pub envelope_ratio: f64,
    /// `max |R_extracted - R_exact| / max |H|`.
    pub mismatch: f64,
    /// `R` below the noise floor everywhere: no fit.
    pub degenerate: bool,
}

/// Level, relative to `max H`, below which extracted `R` is treated as
/// noise; it sits just above the extraction error of the Green column.
pub const NOISE_FLOOR: f64 = 1e-3;

/// Least-squares line `v ≈ slope·u + intercept`; returns `(slope, intercept, stderr)`.
pub fn linear_fit(u: &[f64], v: &[f64]) -> (f64, f64, f64) {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|x| (x - mu).powi(2)).sum();
    let suv: f64 = u.iter().zip(v).map(|(x, y)| (x - mu) * (y - mv)).sum();
    let slope = suv / suu;
    let intercept = mv - slope * mu;
    let sse: f64 = u.iter().zip(v).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = if u.len() > 2 { (sse / (n - 2.0) / suu).sqrt() } else { f64::INFINITY };
    (slope, intercept, stderr)
}

/// Green column at `y0` from unit-mass Gaussians of width σ and σ/2,
/// Richardson-extrapolated in σ², in the `H` normalization.
fn green_column(mode: &StokesMode, y0: f64, sigma: f64, tau: f64, steps: usize) -> Result<Vec<f64>> {
    let col = |s: f64| -> Result<Vec<f64>> {
        // unit mass on the half line after reflection
        let norm = 1.0 / (s * (2.0 * PI).sqrt());
        let w0: Vec<f64> = mode.z.iter().map(|&z| norm * (-(z - y0).powi(2) / (2.0 * s * s)).exp()).collect();
        stokes_mode_oracle(mode, &w0, tau, steps, &|_| 0.0)
    };
    let (a, b) = (col(sigma)?, col(0.5 * sigma)?);
    Ok(a.iter().zip(&b).map(|(a, b)| 2.0 * PI.sqrt() * (4.0 * b - a) / 3.0).collect())
}

/// Measures `R_α = G_α - H_α` at source `y0` for each τ and fits
/// `log|R| ≈ log(P μ_f) - θ₀ μ_f (y0+z)`.
pub fn residual_extract_and_fit(mode: &StokesMode, taus: &[f64], y0: f64, steps: usize) -> Result<KernelEval> {
    let (alpha, nu) = (mode.alpha, mode.nu);
    let mu_f = alpha.abs() + nu.powf(-0.5);
    let cols = taus
        .par_iter()
        .map(|&tau| {
            let sigma = 0.25 * (nu * tau).sqrt();
            let g = green_column(mode, y0, sigma, tau, steps)?;
            let h: Vec<f64> = mode.z.iter().map(|&z| heat_kernel_h(alpha, nu, tau, y0, z)).collect::<Result<_>>()?;
            let r: Vec<f64> = g.iter().zip(&h).map(|(g, h)| g - h).collect();
            Ok((h, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let (h, r): (Vec<_>, Vec<_>) = cols.into_iter().unzip();
    let h_max = h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut mismatch = 0.0f64;
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for (i, &tau) in taus.iter().enumerate() {
        for (j, &z) in mode.z.iter().enumerate() {
            let exact = residual_kernel_exact(alpha, nu, tau, y0, z);
            mismatch = mismatch.max((r[i][j] - exact).abs() / h_max);
            if r[i][j].abs() > NOISE_FLOOR * h_max && j + 1 < mode.z.len() {
                u.push(mu_f * (y0 + z));
                v.push(r[i][j].abs().ln());
            }
        }
    }
    let degenerate = u.len() < 5;
    let (theta0, prefactor) = if degenerate {
        (f64::NAN, f64::NAN)
    } else {
        let (slope, intercept, _) = linear_fit(&u, &v);
        (-slope, intercept.exp() / mu_f)
    };
    let envelope_ratio = if degenerate || !(theta0 > 0.0) {
        f64::NAN
    } else {
        let mut worst = 0.0f64;
        for (i, &tau) in taus.iter().enumerate() {
            let s = nu * tau;
            for (j, &z) in mode.z.iter().enumerate() {
                let x = y0 + z;
                let env = mu_f * (-theta0 * mu_f * x).exp()
                    + s.powf(-0.5) * (-theta0 * x * x / s).exp() * (-alpha * alpha * s / 8.0).exp();
                worst = worst.max(r[i][j].abs() / env);
            }
        }
        worst
    };
    Ok(KernelEval {
        alpha,
        nu,
        y0,
        taus: taus.to_vec(),
        z: mode.z.clone(),
        h,
        r,
        mu_f,
        theta0,
        prefactor,
        envelope_ratio,
        mismatch,
        degenerate,
    })
}

/// CSV rows `alpha, nu, tau_max, theta0_fit, prefactor, mismatch`.
pub fn write_kernel_csv(mut out: impl Write, rows: &[KernelEval]) -> Result<()> {
    writeln!(out, "alpha,nu,tau,theta0_fit,prefactor,mismatch")?;
    for k in rows {
        let tau = k.taus.iter().cloned().fold(0.0, f64::max);
        writeln!(out, "{},{:e},{:e},{:.6e},{:.6e},{:.6e}", k.alpha, k.nu, tau, k.theta0, k.prefactor, k.mismatch)?;
    }
    Ok(())
}

/// Fixed-point reconstruction of the curved-geometry solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DuhamelReport {
    pub profile: Vec<f64>,
    pub iterations: usize,
    /// Ratio of successive update sizes, last iteration.
    pub contraction: f64,
    /// `max |w_duhamel - w_direct| / max |w_direct|`.
    pub mismatch: f64,
    /// `max_s |h(s)|` along the final iterate.
    pub h_max: f64,
    pub converged: bool,
}

/// Iterates `w^{k+1} = e^{ντB}w₀ + ∫ e^{ν(τ-s)B} νλL_α w^k ds + ∫ Γ (g + h(w^k)) ds`
/// with the same discrete propagator, and compares with the direct solve
/// of the curved mode problem.
pub fn duhamel_reconstruct(
    base: &StokesMode,
    lambda: f64,
    w0: &[f64],
    tau: f64,
    steps: usize,
    r_max: f64,
) -> Result<DuhamelReport> {
    let curved = base.clone().with_curvature(lambda, r_max)?;
    let h_coeff = curved.h_coeff;
    let direct = curved.evolve(w0, tau, steps, &|_| 0.0, None)?;
    let plain = StokesMode { lambda: 0.0, h_coeff: 0.0, ..base.clone() };
    let nu = plain.nu;
    let mut iterate = plain.evolve(w0, tau, steps, &|_| 0.0, None)?;
    let (mut prev_update, mut contraction) = (f64::NAN, f64::NAN);
    let mut iterations = 0;
    let mut converged = lambda == 0.0;
    let scale = w0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    while !converged && iterations < 60 {
        let states = iterate.states.clone();
        let ops = plain.clone();
        let forcing = move |i: usize, _t: f64| -> Vec<f64> {
            ops.apply_curvature(lambda, &states[i]).into_iter().map(|v| nu * lambda * v).collect()
        };
        let boundary: Vec<f64> = iterate.states.iter().map(|s| -nu * h_coeff * s[0]).collect();
        let times = iterate.times.clone();
        let g = move |t: f64| {
            let i = times.iter().position(|&x| (x - t).abs() <= 1e-14 * t.max(1.0)).unwrap_or(0);
            boundary[i]
        };
        let next = plain.evolve(w0, tau, steps, &g, Some(&forcing))?;
        let update = next
            .states
            .iter()
            .zip(&iterate.states)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0f64, f64::max);
        if prev_update.is_finite() && prev_update > 0.0 {
            contraction = update / prev_update;
        }
        prev_update = update;
        iterate = next;
        iterations += 1;
        if update <= 1e-13 * scale {
            converged = true;
        } else if contraction.is_finite() && contraction >= 1.0 && iterations > 3 {
            break;
        }
    }
    let w = iterate.last().to_vec();
    let d = direct.last();
    let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mismatch = w.iter().zip(d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / dmax;
    let h_max = iterate.states.iter().map(|s| (nu * h_coeff * s[0]).abs()).fold(0.0, f64::max);
    Ok(DuhamelReport { profile: w, iterations, contraction, mismatch, h_max, converged })
}

/// Ratios of the semigroup and trace bounds for one viscosity and profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupRow {
    pub nu: f64,
    pub profile: usize,
    pub alpha: f64,
    /// `‖e^{ντB}w₀‖_{𝓦^{k,1}} / (‖w₀‖_{𝓦^{k,1}} + ‖y D^{k+1} w₀‖_{L²(y≥δ₀+ρ)})`.
    pub semigroup_ratio: f64,
    /// `‖∫₀^τ Γ g ds‖_{𝓦^{k,1}} / (τ(‖g‖_{𝓗^k} + √ν ‖g‖_{𝓗^{k+1}}))` for constant `g`.
    pub trace_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupAudit {
    pub rows: Vec<SemigroupRow>,
    /// `max_ν C(ν) / min_ν C(ν)` with `C(ν)` the worst profile ratio.
    pub semigroup_spread: f64,
    pub trace_spread: f64,
}

/// Settings of the semigroup audit.
#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupSetup {
    pub nus: Vec<f64>,
    pub profiles: usize,
    pub seed: u64,
    pub tau: f64,
    pub k: usize,
    pub rho: f64,
    pub delta0: f64,
    pub eps0: f64,
    pub lambda: f64,
    pub z_max: f64,
    pub n_z: usize,
    pub steps: usize,
}

impl Default for SemigroupSetup {
    fn default() -> Self {
        Self {
            nus: vec![1e-2, 1e-4, 1e-6],
            profiles: 20,
            seed: 3,
            tau: 1.0,
            k: 1,
            rho: 0.25,
            delta0: 0.5,
            eps0: 0.25,
            lambda: 0.5,
            z_max: 30.0,
            n_z: 1600,
            steps: 400,
        }
    }
}

/// Random analytic profile `Σ c_m e^{-κ_m z}` and its frequency.
pub fn test_profile(rng: &mut impl Rng, lambda: f64) -> (f64, Vec<(f64, f64)>) {
    let n = rng.gen_range(1..=4) as f64;
    let terms = (0..2).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..3.0))).collect();
    (lambda * n, terms)
}

fn spread(rows: &[SemigroupRow], nus: &[f64], pick: impl Fn(&SemigroupRow) -> f64) -> f64 {
    let worst: Vec<f64> = nus
        .iter()
        .map(|&nu| rows.iter().filter(|r| r.nu == nu).map(&pick).fold(0.0, f64::max))
        .collect();
    let hi = worst.iter().cloned().fold(0.0, f64::max);
    let lo = worst.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Audits the semigroup and boundary-trace bounds across viscosities.
pub fn semigroup_audit(setup: &SemigroupSetup) -> Result<SemigroupAudit> {
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let profiles: Vec<_> = (0..setup.profiles).map(|_| test_profile(&mut rng, setup.lambda)).collect();
    let jobs: Vec<(f64, usize)> = setup.nus.iter().flat_map(|&nu| (0..profiles.len()).map(move |p| (nu, p))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(nu, p)| {
            let (alpha, terms) = &profiles[p];
            let mode = StokesMode::for_layer(*alpha, nu, setup.tau, setup.z_max, setup.n_z)?;
            let ctx = NormContext::new(&mode.z, setup.lambda, setup.delta0, setup.rho, setup.eps0)?;
            let as_c = |f: &[f64]| f.iter().map(|&v| C::new(v, 0.0)).collect::<Vec<_>>();
            let w0: Vec<f64> =
                mode.z.iter().map(|&z| terms.iter().map(|(c, k)| c * (-k * z).exp()).sum()).collect();
            let norm = |f: &[f64]| ctx.mode_w_norm(&as_c(f), *alpha, setup.rho, setup.k);
            let tail = ctx.mode_tail(&as_c(&w0), *alpha, 1, setup.k + 1, setup.delta0 + setup.rho);
            let out = stokes_mode_oracle(&mode, &w0, setup.tau, setup.steps, &|_| 0.0)?;
            let semigroup_ratio = norm(&out) / (norm(&w0) + tail);
            let zero = vec![0.0; mode.len()];
            let g = 1.0;
            let trace = stokes_mode_oracle(&mode, &zero, setup.tau, setup.steps, &|_| g)?;
            let hk = |k: i32| alpha.abs().powi(k) * (setup.eps0 * (setup.delta0 + setup.rho) * alpha.abs()).exp() * g;
            let trace_ratio = norm(&trace) / (setup.tau * (hk(setup.k as i32) + nu.sqrt() * hk(setup.k as i32 + 1)));
            Ok(SemigroupRow { nu, profile: p, alpha: *alpha, semigroup_ratio, trace_ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SemigroupAudit {
        semigroup_spread: spread(&rows, &setup.nus, |r| r.semigroup_ratio),
        trace_spread: spread(&rows, &setup.nus, |r| r.trace_ratio),
        rows,
    })
}
