//! Mode-wise elliptic solves outside the unit disk.
//!
//! For each Fourier mode `n` the stream function solves
//! `ψ'' + ψ'/r - n²ψ/r² = ω_n` with `ψ(1) = 0` and decay at infinity.
//! Two backends are provided: a fourth-order banded finite-difference
//! solve with an exact far-field Robin row, and direct quadrature of the
//! Biot–Savart kernel. The conservative finite-volume pieces (discrete
//! harmonic extension, discrete Dirichlet-to-Neumann value, wall-slip
//! functional) are shared with the time stepper.

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::linalg::{BandBuilder, BandLu, Tridiagonal};
use crate::quadrature::{cumulative, fd_weights, gauss_points, stencil_start, GL4};
use crate::spectral::SpectralField;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// Fraction of `∫|ω_n|` beyond `R_max/2` above which truncation is flagged.
pub const TAIL_WARN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Fourth-order banded solve of the mode ODE (production path).
    Direct,
    /// Quadrature of the Biot–Savart kernel (oracle path).
    Kernel,
}

/// Stream function and velocity of one Fourier mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolve {
    pub n: i64,
    pub psi: Vec<C>,
    pub u_r: Vec<C>,
    pub u_theta: Vec<C>,
    /// `u_θ,n` at r = 1.
    pub slip: C,
}

#[derive(Debug, Clone)]
struct ModeOps {
    band: Option<BandLu>,
    fv: Option<Tridiagonal>,
    /// Discrete harmonic extension of unit wall data (finite-volume sense).
    phi: Vec<f64>,
    /// Discrete Dirichlet-to-Neumann value, `≈ |n|`.
    dtn: f64,
}

impl ModeOps {
    fn new(grid: &RadialGrid, n: usize) -> Result<Self> {
        let m = grid.len() - 1;
        if n == 0 {
            return Ok(Self { band: None, fv: None, phi: vec![1.0; m + 1], dtn: 0.0 });
        }
        let nn = (n * n) as f64;
        let fv = &grid.fv;
        let c = &fv.coupling;
        // unknowns ψ_1..ψ_M; row M carries the flux r ψ' = -n ψ
        let mut lo = vec![0.0; m];
        let mut di = vec![0.0; m];
        let mut up = vec![0.0; m];
        for j in 1..=m {
            let i = j - 1;
            let right = if j < m { c[j] } else { n as f64 };
            di[i] = -(c[j - 1] + right + nn * fv.ell[j]);
            if j > 1 {
                lo[i] = c[j - 1];
            }
            if j < m {
                up[i] = c[j];
            }
        }
        let tri = Tridiagonal::factor(&lo, &di, &up)?;
        let mut rhs = vec![0.0; m];
        rhs[0] = -c[0];
        tri.solve_real(&mut rhs);
        let mut phi = Vec::with_capacity(m + 1);
        phi.push(1.0);
        phi.extend_from_slice(&rhs);
        let dtn = c[0] * (1.0 - phi[1]) + nn * fv.ell[0];

        let mut bb = BandBuilder::new(m, 4, 3);
        for j in 1..m {
            let r = grid.r[j];
            let (s1, s2) = (grid.d1_hi(j), grid.d2_hi(j));
            debug_assert_eq!(s1.start, s2.start);
            for k in 0..5 {
                let node = s2.start + k;
                if node > 0 {
                    bb.add(j - 1, node - 1, s2.w[k] + s1.w[k] / r);
                }
            }
            bb.add(j - 1, j - 1, -nn / (r * r));
        }
        let s1 = grid.d1_hi(m);
        for k in 0..5 {
            bb.add(m - 1, s1.start + k - 1, s1.w[k]);
        }
        bb.add(m - 1, m - 1, n as f64 / grid.r_max);
        Ok(Self { band: Some(bb.factor()?), fv: Some(tri), phi, dtn })
    }
}

/// Precomputed elliptic operators for modes `0..=n_max` on one grid.
#[derive(Debug, Clone)]
pub struct BiotSavart {
    grid: RadialGrid,
    ops: Vec<ModeOps>,
}

/// Stream function and velocity of a whole field.
#[derive(Debug, Clone)]
pub struct Flow {
    pub psi: SpectralField,
    /// Finite-volume stream function, consistent with the stepper's energy.
    pub psi_fv: SpectralField,
    pub u_r: SpectralField,
    pub u_theta: SpectralField,
    /// Largest `sup_r |n ψ_n / r| / ∫|ω_n|` over the modes.
    pub bound_ratio: f64,
}

/// How the wall value of `u_θ` is obtained in [`BiotSavart::flow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    /// One-sided derivative of the direct-solve stream function.
    Derivative,
    /// Discrete Green-identity flux, the quantity the viscous stepper conserves.
    Conservative,
}

fn check_finite(w: &[C]) -> Result<()> {
    if w.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("vorticity profile"))
    }
}

impl BiotSavart {
    pub fn new(grid: &RadialGrid, n_max: usize) -> Result<Self> {
        let ops = (0..=n_max)
            .into_par_iter()
            .map(|n| ModeOps::new(grid, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: grid.clone(), ops })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn n_max(&self) -> usize {
        self.ops.len() - 1
    }

    fn op(&self, n: i64) -> &ModeOps {
        &self.ops[n.unsigned_abs() as usize]
    }

    /// Discrete Dirichlet-to-Neumann value of mode `n` (tends to `|n|`).
    pub fn discrete_dtn(&self, n: i64) -> f64 {
        self.op(n).dtn
    }

    /// Discrete harmonic extension of unit wall data for mode `n`.
    pub fn harmonic(&self, n: i64) -> &[f64] {
        &self.op(n).phi
    }

    /// `Σ_j V_j φ_j f_j`, the discrete form of `∫₁^{R_max} s^{1-|n|} f ds`.
    pub fn moment(&self, f: &[C], n: i64) -> C {
        let vol = &self.grid.fv.vol;
        self.op(n)
            .phi
            .iter()
            .zip(vol)
            .zip(f)
            .map(|((p, v), f)| f * (p * v))
            .sum()
    }

    /// Solves one mode with the chosen backend.
    pub fn mode(&self, omega: &[C], n: i64, backend: Backend) -> Result<ModeSolve> {
        if omega.len() != self.grid.len() {
            return Err(Error::Shape {
                expected: format!("{} radial nodes", self.grid.len()),
                got: format!("{}", omega.len()),
            });
        }
        check_finite(omega)?;
        let tail = far_field_tail(&self.grid, omega);
        if tail > TAIL_WARN {
            warn!("mode {n}: {:.1}% of ∫|ω| lies beyond R_max/2", 100.0 * tail);
        }
        let g = &self.grid;
        let m = g.len() - 1;
        let na = n.unsigned_abs() as usize;
        let (psi, mut u_theta) = if na == 0 {
            axisymmetric(g, omega)
        } else {
            match backend {
                Backend::Direct => {
                    let mut rhs: Vec<C> = omega[1..].to_vec();
                    rhs[m - 1] = ZERO;
                    self.op(n).band.as_ref().expect("band for n > 0").solve(&mut rhs);
                    let mut psi = Vec::with_capacity(m + 1);
                    psi.push(ZERO);
                    psi.extend(rhs);
                    let ut = (0..=m).map(|j| -g.d1_hi(j).apply(&psi)).collect();
                    (psi, ut)
                }
                Backend::Kernel => kernel(g, omega, na),
            }
        };
        let u_r: Vec<C> = psi
            .iter()
            .zip(&g.r)
            .map(|(p, r)| p * C::new(0.0, n as f64) / r)
            .collect();
        if na == 0 {
            u_theta[0] = ZERO;
        }
        let slip = u_theta[0];
        Ok(ModeSolve { n, psi, u_r, u_theta, slip })
    }

    /// Finite-volume stream function of one mode.
    pub fn mode_fv(&self, omega: &[C], n: i64) -> Vec<C> {
        let g = &self.grid;
        let vol = &g.fv.vol;
        let m = g.len() - 1;
        if n == 0 {
            let mut psi = vec![ZERO; m + 1];
            let mut flux = ZERO;
            for j in 0..m {
                flux += omega[j] * vol[j];
                psi[j + 1] = psi[j] + flux / g.fv.coupling[j];
            }
            return psi;
        }
        let mut rhs: Vec<C> = (1..=m).map(|j| omega[j] * vol[j]).collect();
        self.op(n).fv.as_ref().expect("fv for n > 0").solve(&mut rhs);
        let mut psi = Vec::with_capacity(m + 1);
        psi.push(ZERO);
        psi.extend(rhs);
        psi
    }

    /// Stream function and velocity of a full field, modes in parallel.
    pub fn flow(&self, omega: &SpectralField, wall: Wall) -> Result<Flow> {
        let h = omega.max_mode();
        if h as usize > self.n_max() || omega.n_r() != self.grid.len() {
            return Err(Error::Shape {
                expected: format!("|n| <= {}, {} nodes", self.n_max(), self.grid.len()),
                got: format!("|n| <= {h}, {} nodes", omega.n_r()),
            });
        }
        let solved = (0..=h)
            .into_par_iter()
            .map(|n| {
                let w = omega.mode(n);
                let mut s = self.mode(w, n, Backend::Direct)?;
                if wall == Wall::Conservative && n != 0 {
                    s.u_theta[0] = self.moment(w, n);
                }
                let ratio = pointwise_ratio(&self.grid, &s, w);
                Ok((s, self.mode_fv(w, n), ratio))
            })
            .collect::<Result<Vec<_>>>()?;
        let (nt, nr) = (omega.n_theta(), omega.n_r());
        let mut flow = Flow {
            psi: SpectralField::zeros(nt, nr),
            psi_fv: SpectralField::zeros(nt, nr),
            u_r: SpectralField::zeros(nt, nr),
            u_theta: SpectralField::zeros(nt, nr),
            bound_ratio: 0.0,
        };
        for (n, (s, fv, ratio)) in solved.into_iter().enumerate() {
            let n = n as i64;
            flow.psi.mode_mut(n).copy_from_slice(&s.psi);
            flow.psi_fv.mode_mut(n).copy_from_slice(&fv);
            flow.u_r.mode_mut(n).copy_from_slice(&s.u_r);
            flow.u_theta.mode_mut(n).copy_from_slice(&s.u_theta);
            flow.bound_ratio = flow.bound_ratio.max(ratio);
        }
        for f in [&mut flow.psi, &mut flow.psi_fv, &mut flow.u_r, &mut flow.u_theta] {
            f.enforce_hermitian();
        }
        Ok(flow)
    }

    /// `g_n = [∂_r Δ⁻¹ f]_n(1) = -∫ s^{1-|n|} f_n ds`, with `g_0 = 0`.
    pub fn boundary_flux(&self, f: &SpectralField) -> Vec<C> {
        let h = f.max_mode();
        (-h..=h)
            .map(|n| if n == 0 { ZERO } else { -self.moment(f.mode(n), n) })
            .collect()
    }

    /// Wall slip `u_θ,n(1) = ∫ s^{1-|n|} ω_n ds` per mode; for `n = 0` the
    /// entry is the net circulation moment `∫ s ω_0 ds`.
    pub fn compatibility_defect(&self, omega: &SpectralField) -> Vec<C> {
        let h = omega.max_mode();
        (-h..=h).map(|n| self.moment(omega.mode(n), n)).collect()
    }

    /// Removes the defect of every mode by subtracting multiples of a smooth
    /// bump supported in `[lo, hi]`.
    pub fn project_compatible(&self, omega: &SpectralField, lo: f64, hi: f64) -> Result<SpectralField> {
        if !(lo > 1.0 && hi > lo && hi <= self.grid.r_max) {
            return Err(Error::Config(format!("bump support [{lo}, {hi}] is not inside (1, R_max]")));
        }
        let bump: Vec<C> = self.grid.r.iter().map(|&r| C::new(bump(r, lo, hi), 0.0)).collect();
        let mut out = omega.clone();
        let h = omega.max_mode();
        for n in -h..=h {
            let weight = self.moment(&bump, n);
            let c = self.moment(omega.mode(n), n) / weight;
            for (w, b) in out.mode_mut(n).iter_mut().zip(&bump) {
                *w -= c * b;
            }
        }
        Ok(out)
    }
}

/// `|n| g_n`: the Dirichlet-to-Neumann map of the exterior unit disk.
pub fn dtn_apply(g: &[C]) -> Vec<C> {
    let h = (g.len() / 2) as i64;
    g.iter()
        .enumerate()
        .map(|(i, v)| v * (i as i64 - h).abs() as f64)
        .collect()
}

/// Smooth bump `exp(-1/(1-x²))` on `[lo, hi]`, zero outside.
pub fn bump(r: f64, lo: f64, hi: f64) -> f64 {
    let x = (2.0 * r - lo - hi) / (hi - lo);
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// `∫_{R/2}^{R}|ω| / ∫₁^R|ω|` (zero for a zero profile).
pub fn far_field_tail(grid: &RadialGrid, omega: &[C]) -> f64 {
    let abs: Vec<f64> = omega.iter().map(|c| c.norm()).collect();
    let total = grid.integrate(&abs);
    if total == 0.0 {
        return 0.0;
    }
    let w = grid.partial_weights(0.5 * grid.r_max, grid.r_max);
    w.iter().zip(&abs).map(|(w, a)| w * a).sum::<f64>() / total
}

/// `sup_r |n ψ_n(r)/r| / ∫|ω_n|`; the kernel bound says this is at most 1.
pub fn pointwise_ratio(grid: &RadialGrid, s: &ModeSolve, omega: &[C]) -> f64 {
    if s.n == 0 {
        return 0.0;
    }
    let abs: Vec<f64> = omega.iter().map(|c| c.norm()).collect();
    let l1 = grid.integrate(&abs);
    if l1 == 0.0 {
        return 0.0;
    }
    let sup = s
        .psi
        .iter()
        .zip(&grid.r)
        .map(|(p, r)| p.norm() * s.n.unsigned_abs() as f64 / r)
        .fold(0.0, f64::max);
    sup / l1
}

/// Mode 0: `u_θ = -(1/r)∫₁^r s ω ds`, `ψ = ∫₁^r (1/s)∫₁^s t ω dt ds`.
fn axisymmetric(g: &RadialGrid, omega: &[C]) -> (Vec<C>, Vec<C>) {
    let split = |f: &dyn Fn(&C) -> f64| -> Vec<f64> {
        omega.iter().zip(&g.r).map(|(w, r)| f(w) * r).collect()
    };
    let circ_re = cumulative(&g.r, &split(&|w| w.re));
    let circ_im = cumulative(&g.r, &split(&|w| w.im));
    let dpsi_re: Vec<f64> = circ_re.iter().zip(&g.r).map(|(c, r)| c / r).collect();
    let dpsi_im: Vec<f64> = circ_im.iter().zip(&g.r).map(|(c, r)| c / r).collect();
    let psi_re = cumulative(&g.r, &dpsi_re);
    let psi_im = cumulative(&g.r, &dpsi_im);
    let psi = psi_re.iter().zip(&psi_im).map(|(a, b)| C::new(*a, *b)).collect();
    let ut = dpsi_re.iter().zip(&dpsi_im).map(|(a, b)| -C::new(*a, *b)).collect();
    (psi, ut)
}

/// Kernel quadrature for `n ≥ 1` with running integrals:
/// `ψ = -(1/2n)[P - Q + S - r^{-n} B]`, `u_θ = -(1/2r)[P - Q - S - r^{-n} B]` where
/// `P = ∫₁^r (s/r)^n s ω`, `Q = r^{-n}∫₁^r s^{1-n} ω`, `S = ∫_r^R (r/s)^n s ω`, `B = ∫_r^R s^{1-n} ω`.
fn kernel(g: &RadialGrid, omega: &[C], n: usize) -> (Vec<C>, Vec<C>) {
    let r = &g.r;
    let m = r.len() - 1;
    let nf = n as i32;
    // per interval: Gauss points, weights and interpolated ω
    let pieces: Vec<[(f64, f64, C); 4]> = (0..m)
        .map(|j| {
            let s = stencil_start(j, 4, m + 1).min(j);
            let nodes = &r[s..s + 4];
            let mut out = [(0.0, 0.0, ZERO); 4];
            for (o, (p, q)) in out.iter_mut().zip(gauss_points(&GL4, r[j], r[j + 1])) {
                let l = &fd_weights(p, nodes, 0)[0];
                let w: C = l.iter().zip(&omega[s..s + 4]).map(|(a, b)| b * a).sum();
                *o = (p, q, w);
            }
            out
        })
        .collect();
    let mut p = vec![ZERO; m + 1];
    let mut qt = vec![ZERO; m + 1];
    for j in 0..m {
        let ratio = (r[j] / r[j + 1]).powi(nf);
        let (mut ip, mut iq) = (ZERO, ZERO);
        for &(s, q, w) in &pieces[j] {
            ip += w * (q * s * (s / r[j + 1]).powi(nf));
            iq += w * (q * s.powi(1 - nf));
        }
        p[j + 1] = p[j] * ratio + ip;
        qt[j + 1] = qt[j] + iq;
    }
    let mut sfx = vec![ZERO; m + 1];
    let mut b = vec![ZERO; m + 1];
    for j in (0..m).rev() {
        let ratio = (r[j] / r[j + 1]).powi(nf);
        let (mut is, mut ib) = (ZERO, ZERO);
        for &(s, q, w) in &pieces[j] {
            is += w * (q * s * (r[j] / s).powi(nf));
            ib += w * (q * s.powi(1 - nf));
        }
        sfx[j] = sfx[j + 1] * ratio + is;
        b[j] = b[j + 1] + ib;
    }
    let mut psi = vec![ZERO; m + 1];
    let mut ut = vec![ZERO; m + 1];
    for j in 0..=m {
        let rn = r[j].powi(-nf);
        let q = qt[j] * rn;
        let bb = b[j] * rn;
        psi[j] = -(p[j] - q + sfx[j] - bb) / (2.0 * n as f64);
        ut[j] = -(p[j] - q - sfx[j] - bb) / (2.0 * r[j]);
    }
    psi[0] = ZERO;
    (psi, ut)
}

/// Solves a single mode on `grid` (convenience wrapper that builds the
/// operators for `|n|` only).
pub fn stream_mode(omega: &[C], n: i64, grid: &RadialGrid, backend: Backend) -> Result<ModeSolve> {
    let na = n.unsigned_abs() as usize;
    let mut ops: Vec<ModeOps> = Vec::with_capacity(na + 1);
    for k in 0..=na {
        ops.push(if k == na { ModeOps::new(grid, k)? } else { ModeOps::new(grid, 0)? });
    }
    BiotSavart { grid: grid.clone(), ops }.mode(omega, n, backend)
}

/// Velocity from a stream function alone (fourth-order one-sided at r = 1).
pub fn velocity_from_stream(psi: &SpectralField, grid: &RadialGrid) -> Result<(SpectralField, SpectralField)> {
    if psi.n_r() != grid.len() {
        return Err(Error::Shape {
            expected: format!("{} radial nodes", grid.len()),
            got: format!("{}", psi.n_r()),
        });
    }
    let (nt, nr) = (psi.n_theta(), psi.n_r());
    let mut ur = SpectralField::zeros(nt, nr);
    let mut ut = SpectralField::zeros(nt, nr);
    for (n, prof) in psi.modes() {
        let f = C::new(0.0, n as f64);
        for (j, v) in ur.mode_mut(n).iter_mut().enumerate() {
            *v = prof[j] * f / grid.r[j];
        }
        for (j, v) in ut.mode_mut(n).iter_mut().enumerate() {
            *v = -grid.d1_hi(j).apply(prof);
        }
    }
    Ok((ur, ut))
}

/// Residual `‖L₄ψ - ω‖ / ‖ω‖` over interior nodes with the fourth-order mode operator.
pub fn elliptic_residual(grid: &RadialGrid, psi: &[C], omega: &[C], n: i64) -> f64 {
    let nn = (n * n) as f64;
    let m = grid.len() - 1;
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for j in 1..m {
        let r = grid.r[j];
        let lpsi = grid.d2_hi(j).apply(psi) + grid.d1_hi(j).apply(psi) / r - psi[j] * (nn / (r * r));
        num = num.max((lpsi - omega[j]).norm());
        den = den.max(omega[j].norm());
    }
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
