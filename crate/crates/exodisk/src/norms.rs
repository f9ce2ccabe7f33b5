//! Near-boundary analytic norms on pencil domains, their real-trace proxies
//! for gridded data, and the energy functionals built from them.
//!
//! Closed-form inputs are measured on the complex contours `∂Ω_η`; gridded
//! data only exists on real `y ≥ 0`, where the η = 0 trace is used and the
//! report is flagged as a proxy. Both paths share [`PencilDomain::weight`].

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::quadrature::{fd_weights, integration_weights, simpson_weights, stencil_start};
use crate::rescaled::RescaledField;

type C = Complex64;

/// Number of η samples below ρ; the limit point η = ρ is added on top.
pub const ETA_SAMPLES: usize = 16;

/// Highest derivative index accepted by [`field_norm_suite`].
pub const MAX_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    L1,
    Linf,
}

/// `Ω_ρ`: slope-η pencil over `Re y ∈ [0, δ₀]` and a triangular cap over
/// `[δ₀, δ₀+η]`, each boundary discretized with Simpson nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilDomain {
    pub delta0: f64,
    pub rho: f64,
    pub eps0: f64,
    pub eta: Vec<f64>,
    /// Points per segment (odd).
    pub points: usize,
}

/// One node of a directed contour with its arclength weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourNode {
    pub y: C,
    pub ds: f64,
}

impl PencilDomain {
    pub fn new(delta0: f64, rho: f64, eps0: f64) -> Result<Self> {
        if !(delta0 > 0.0 && rho > 0.0) {
            return Err(Error::Config(format!("pencil needs δ₀ > 0 and ρ > 0, got {delta0}, {rho}")));
        }
        if !(eps0 > 0.0 && eps0 < 0.5) {
            return Err(Error::Config(format!("ε₀ must lie in (0, 1/2), got {eps0}")));
        }
        let mut eta: Vec<f64> = (0..ETA_SAMPLES).map(|k| rho * k as f64 / ETA_SAMPLES as f64).collect();
        eta.push(rho);
        Ok(Self { delta0, rho, eps0, eta, points: 129 })
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points.max(3) | 1;
        self
    }

    /// `e^{ε₀(δ₀+ρ-Re y)|α|}`.
    pub fn weight(&self, y_re: f64, alpha: f64) -> f64 {
        (self.eps0 * (self.delta0 + self.rho - y_re) * alpha.abs()).exp()
    }

    /// Upper directed path of `∂Ω_η`; the lower one is its conjugate.
    pub fn contour(&self, eta: f64) -> Vec<ContourNode> {
        let segs = [
            (C::new(0.0, 0.0), C::new(self.delta0, eta * self.delta0)),
            (C::new(self.delta0, eta), C::new(self.delta0 + eta, 0.0)),
        ];
        let mut out = Vec::with_capacity(2 * self.points);
        for (a, b) in segs {
            let len = (b - a).norm();
            if len == 0.0 {
                continue;
            }
            let w = simpson_weights(self.points, len);
            for (k, ds) in w.into_iter().enumerate() {
                let s = k as f64 / (self.points - 1) as f64;
                out.push(ContourNode { y: a + (b - a) * s, ds });
            }
        }
        out
    }

    /// Both directed paths.
    fn paths(&self, eta: f64) -> [Vec<ContourNode>; 2] {
        let up = self.contour(eta);
        let down = up.iter().map(|n| ContourNode { y: n.y.conj(), ds: n.ds }).collect();
        [up, down]
    }
}

/// `sup_η` of the weighted path integral (L1, both paths summed) or path
/// supremum (Linf) of one Fourier coefficient `f(y)` with frequency `α`.
pub fn contour_norm(f: impl Fn(C) -> C, alpha: f64, dom: &PencilDomain, which: Which) -> Result<f64> {
    let mut best = 0.0f64;
    for &eta in &dom.eta {
        let mut acc = 0.0f64;
        for path in dom.paths(eta) {
            for node in path {
                let v = f(node.y);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::Config(format!(
                        "non-finite value on contour η = {eta} at y = {}",
                        node.y
                    )));
                }
                let x = dom.weight(node.y.re, alpha) * v.norm();
                match which {
                    Which::L1 => acc += x * node.ds,
                    Which::Linf => acc = acc.max(x),
                }
            }
        }
        best = best.max(acc);
    }
    Ok(best)
}

/// Finite Fourier sum with exponential-sum coefficients:
/// `f_n(y) = Σ_k c_k e^{-κ_k y}`, frequency `α = λ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub lambda: f64,
    pub modes: Vec<(i64, Vec<(C, C)>)>,
}

impl ClosedForm {
    pub fn eval(terms: &[(C, C)], y: C) -> C {
        terms.iter().map(|&(c, k)| c * (-k * y).exp()).sum()
    }

    /// `y ∂_y f_n`.
    pub fn eval_y_dy(terms: &[(C, C)], y: C) -> C {
        terms.iter().map(|&(c, k)| -k * c * y * (-k * y).exp()).sum()
    }

    /// Mode-wise product (convolution in n).
    pub fn product(&self, other: &Self) -> Self {
        let mut out: Vec<(i64, Vec<(C, C)>)> = Vec::new();
        for (n, f) in &self.modes {
            for (m, g) in &other.modes {
                let terms: Vec<(C, C)> =
                    f.iter().flat_map(|&(c1, k1)| g.iter().map(move |&(c2, k2)| (c1 * c2, k1 + k2))).collect();
                match out.iter_mut().find(|(p, _)| *p == n + m) {
                    Some((_, t)) => t.extend(terms),
                    None => out.push((n + m, terms)),
                }
            }
        }
        Self { lambda: self.lambda, modes: out }
    }

    /// Random entire test function with modes `|n| ≤ n_max` and decay
    /// rates with positive real part.
    pub fn random(rng: &mut impl Rng, lambda: f64, n_max: i64, terms: usize) -> Self {
        let modes = (-n_max..=n_max)
            .map(|n| {
                let t = (0..terms)
                    .map(|_| {
                        let c = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        let k = C::new(rng.gen_range(0.2..3.0), rng.gen_range(-1.0..1.0));
                        (c, k)
                    })
                    .collect();
                (n, t)
            })
            .collect();
        Self { lambda, modes }
    }

    /// `Σ_α ‖e^{ε₀(δ₀+ρ-Re y)|α|} f_α‖` over the contours.
    pub fn norm(&self, dom: &PencilDomain, which: Which) -> Result<f64> {
        self.modes
            .iter()
            .map(|(n, t)| contour_norm(|y| Self::eval(t, y), self.lambda * *n as f64, dom, which))
            .sum()
    }

    /// `‖∂_x f‖ + ‖y ∂_y f‖` in `𝓛¹`.
    pub fn derivative_norm(&self, dom: &PencilDomain) -> Result<f64> {
        let mut total = 0.0;
        for (n, t) in &self.modes {
            let alpha = self.lambda * *n as f64;
            total += alpha.abs() * contour_norm(|y| Self::eval(t, y), alpha, dom, Which::L1)?;
            total += contour_norm(|y| Self::eval_y_dy(t, y), alpha, dom, Which::L1)?;
        }
        Ok(total)
    }

    /// `Σ_{i+j≤k} sup_{δ₁≤y≤δ₂} Σ_α |α|^i |∂_y^j f_α(y)|` on a real sample grid.
    pub fn real_derivative_sup(&self, k: usize, y1: f64, y2: f64) -> f64 {
        let ys: Vec<f64> = (0..=400).map(|s| y1 + (y2 - y1) * s as f64 / 400.0).collect();
        let mut total = 0.0;
        for i in 0..=k {
            for j in 0..=k - i {
                let sup = ys
                    .iter()
                    .map(|&y| {
                        self.modes
                            .iter()
                            .map(|(n, t)| {
                                let a = (self.lambda * *n as f64).abs().powi(i as i32);
                                let d: C = t
                                    .iter()
                                    .map(|&(c, kk)| c * (-kk).powi(j as i32) * (-kk * y).exp())
                                    .sum();
                                a * d.norm()
                            })
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max);
                total += sup;
            }
        }
        total
    }
}

/// Derivative stencils on a fixed y-grid.
#[derive(Debug, Clone)]
pub struct YDerivatives {
    pub y: Vec<f64>,
    /// `ops[m-1][j] = (start, weights)` for `∂_y^m` at node j.
    ops: Vec<Vec<(usize, Vec<f64>)>>,
}

impl YDerivatives {
    pub const MAX_ORDER: usize = 6;

    pub fn new(y: &[f64]) -> Result<Self> {
        let n = y.len();
        if n < Self::MAX_ORDER + 6 {
            return Err(Error::Grid(format!("need at least {} y-nodes", Self::MAX_ORDER + 6)));
        }
        let ops = (1..=Self::MAX_ORDER)
            .map(|m| {
                let width = (m + 6).min(n);
                (0..n)
                    .map(|j| {
                        let s = stencil_start(j, width, n);
                        (s, fd_weights(y[j], &y[s..s + width], m).swap_remove(m))
                    })
                    .collect()
            })
            .collect();
        Ok(Self { y: y.to_vec(), ops })
    }

    pub fn apply(&self, f: &[C], order: usize) -> Vec<C> {
        if order == 0 {
            return f.to_vec();
        }
        self.ops[order - 1]
            .iter()
            .map(|(s, w)| w.iter().zip(&f[*s..]).map(|(a, b)| b * *a).sum())
            .collect()
    }

    /// `(y ∂_y)^j f`.
    pub fn conormal(&self, f: &[C], j: usize) -> Vec<C> {
        let mut g = f.to_vec();
        for _ in 0..j {
            g = self.apply(&g, 1).into_iter().zip(&self.y).map(|(d, y)| d * *y).collect();
        }
        g
    }
}

/// Real-trace evaluation of the analytic norms of one gridded field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub t: f64,
    pub rho: f64,
    pub k: usize,
    /// `𝓛¹_ρ`.
    pub l1: f64,
    /// `𝓛^∞_ρ`.
    pub linf: f64,
    /// `𝓦^{k,1}_ρ`.
    pub w_k: f64,
    /// `𝓦^{k+1,1}_ρ`.
    pub w_k1: f64,
    /// `𝓗^k_ρ` of the boundary trace.
    pub h_k: f64,
    /// `‖y D^{k+1} w‖_{L²(y ≥ δ₀+ρ)}`.
    pub tail: f64,
    /// Always true for gridded data (η = 0 contour only).
    pub proxy: bool,
}

/// Cached weights for the norms of fields on one y-grid.
#[derive(Debug, Clone)]
pub struct NormContext {
    pub delta0: f64,
    pub rho0: f64,
    pub eps0: f64,
    pub lambda: f64,
    pub derivs: YDerivatives,
    /// Full-range weights for `∫_0^{y_max} · dy`.
    full: Vec<f64>,
}

impl NormContext {
    pub fn new(y: &[f64], lambda: f64, delta0: f64, rho0: f64, eps0: f64) -> Result<Self> {
        if y[0] != 0.0 {
            return Err(Error::Grid("y-grid must start at 0".into()));
        }
        Ok(Self {
            delta0,
            rho0,
            eps0,
            lambda,
            derivs: YDerivatives::new(y)?,
            full: integration_weights(y, 0.0, *y.last().unwrap()),
        })
    }

    pub fn for_field(w: &RescaledField, delta0: f64, rho0: f64, eps0: f64) -> Result<Self> {
        Self::new(&w.y, w.lambda, delta0, rho0, eps0)
    }

    fn y(&self) -> &[f64] {
        &self.derivs.y
    }

    fn weight(&self, y: f64, alpha: f64, rho: f64) -> f64 {
        (self.eps0 * (self.delta0 + rho - y) * alpha.abs()).exp()
    }

    fn check(&self, w: &RescaledField) -> Result<()> {
        if w.y.len() != self.y().len() || w.lambda != self.lambda {
            return Err(Error::Shape {
                expected: format!("{} y-nodes at λ = {}", self.y().len(), self.lambda),
                got: format!("{} y-nodes at λ = {}", w.y.len(), w.lambda),
            });
        }
        Ok(())
    }

    fn trace_l1(&self, f: &[C], alpha: f64, rho: f64, wq: &[f64]) -> f64 {
        wq.iter()
            .zip(f)
            .zip(self.y())
            .filter(|((q, _), _)| **q != 0.0)
            .map(|((q, v), y)| q * self.weight(*y, alpha, rho) * v.norm())
            .sum()
    }

    /// `𝓦^{k,1}_ρ` on the η = 0 trace.
    pub fn w_norm(&self, w: &RescaledField, rho: f64, k: usize) -> Result<f64> {
        self.check(w)?;
        let wq = integration_weights(self.y(), 0.0, self.delta0 + rho);
        Ok(w.field.modes().map(|(n, f)| self.mode_w_norm_with(f, w.alpha(n), rho, k, &wq)).sum())
    }

    /// `𝓦^{k,1}_ρ` of a single Fourier coefficient with frequency `alpha`.
    pub fn mode_w_norm(&self, f: &[C], alpha: f64, rho: f64, k: usize) -> f64 {
        let wq = integration_weights(self.y(), 0.0, self.delta0 + rho);
        self.mode_w_norm_with(f, alpha, rho, k, &wq)
    }

    fn mode_w_norm_with(&self, f: &[C], alpha: f64, rho: f64, k: usize, wq: &[f64]) -> f64 {
        (0..=k)
            .map(|j| {
                let g = self.derivs.conormal(f, j);
                let base = self.trace_l1(&g, alpha, rho, wq);
                (0..=k - j).map(|i| alpha.abs().powi(i as i32)).sum::<f64>() * base
            })
            .sum()
    }

    /// `Σ_{i+j≤k} ‖y^m ∂_x^i ∂_y^j f‖_{L²(y ≥ y0)}` of one coefficient, per unit period.
    pub fn mode_tail(&self, f: &[C], alpha: f64, m: i32, k: usize, y0: f64) -> f64 {
        let y = self.y();
        let wq = integration_weights(y, y0, *y.last().unwrap());
        (0..=k)
            .map(|j| {
                let d = self.derivs.apply(f, j);
                let s: f64 = wq.iter().zip(&d).zip(y).map(|((q, v), yy)| q * yy.powi(2 * m) * v.norm_sqr()).sum();
                (0..=k - j).map(|i| alpha.abs().powi(i as i32)).sum::<f64>() * s.max(0.0).sqrt()
            })
            .sum()
    }

    /// `Σ_α sup_{0≤y≤δ₀+ρ} e^{…}|w_α(y)|`.
    pub fn linf(&self, w: &RescaledField, rho: f64) -> f64 {
        let top = self.delta0 + rho;
        w.field
            .modes()
            .map(|(n, f)| {
                let alpha = w.alpha(n);
                f.iter()
                    .zip(self.y())
                    .take_while(|(_, y)| **y <= top)
                    .map(|(v, y)| self.weight(*y, alpha, rho) * v.norm())
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    /// `𝓗^k_ρ` of the boundary values.
    pub fn h_norm(&self, w: &RescaledField, rho: f64, k: usize) -> f64 {
        w.field
            .modes()
            .map(|(n, f)| {
                let a = w.alpha(n).abs();
                a.powi(k as i32) * (self.eps0 * (self.delta0 + rho) * a).exp() * f[0].norm()
            })
            .sum()
    }

    /// `Σ_{i+j≤k} ‖y^m ∂_x^i ∂_y^j w‖_{L²(y ≥ y0)}`.
    pub fn sobolev_tail(&self, w: &RescaledField, m: i32, k: usize, y0: f64) -> Result<f64> {
        self.check(w)?;
        let y = self.y();
        let wq = integration_weights(y, y0, *y.last().unwrap());
        let period = std::f64::consts::TAU / self.lambda;
        let mut total = 0.0;
        for j in 0..=k {
            // per-mode ∫ y^{2m} |∂_y^j w_α|²
            let per: Vec<(f64, f64)> = w
                .field
                .modes()
                .map(|(n, f)| {
                    let d = self.derivs.apply(f, j);
                    let s: f64 = wq
                        .iter()
                        .zip(&d)
                        .zip(y)
                        .map(|((q, v), yy)| q * yy.powi(2 * m) * v.norm_sqr())
                        .sum();
                    (w.alpha(n).abs(), s)
                })
                .collect();
            for i in 0..=k - j {
                let s: f64 = per.iter().map(|(a, s)| a.powi(2 * i as i32) * s).sum();
                total += (period * s.max(0.0)).sqrt();
            }
        }
        Ok(total)
    }

    pub fn report(&self, w: &RescaledField, t: f64, rho: f64, k: usize) -> Result<NormReport> {
        if k > MAX_K {
            return Err(Error::Config(format!("norm index k = {k} exceeds {MAX_K}")));
        }
        self.check(w)?;
        Ok(NormReport {
            t,
            rho,
            k,
            l1: self.w_norm(w, rho, 0)?,
            linf: self.linf(w, rho),
            w_k: self.w_norm(w, rho, k)?,
            w_k1: self.w_norm(w, rho, k + 1)?,
            h_k: self.h_norm(w, rho, k),
            tail: self.sobolev_tail(w, 1, k + 1, self.delta0 + rho)?,
            proxy: true,
        })
    }

    /// `N_ρ(w, k)`.
    pub fn nonlinear_quantity(&self, w: &RescaledField, rho: f64, k: usize) -> Result<f64> {
        let y0 = self.delta0 + rho;
        let wk = self.w_norm(w, rho, k)?;
        let wk1 = self.w_norm(w, rho, k + 1)?;
        Ok(wk1 * (wk + self.sobolev_tail(w, 1, k, y0)?) + wk * self.sobolev_tail(w, 1, k + 2, y0)?)
    }
}

/// Real-trace norm suite of one field at radius `rho`.
pub fn field_norm_suite(w: &RescaledField, ctx: &NormContext, rho: f64, k: usize) -> Result<NormReport> {
    ctx.report(w, 0.0, rho, k)
}

/// Writes reports as CSV rows keyed by (t, ρ, k).
pub fn write_norm_csv(mut out: impl Write, rows: &[NormReport]) -> Result<()> {
    writeln!(out, "t,rho,k,L1,Linf,W_k1,W_k1_next,H_k,tail,proxy")?;
    for r in rows {
        writeln!(
            out,
            "{:.12e},{:.6e},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            r.t, r.rho, r.k, r.l1, r.linf, r.w_k, r.w_k1, r.h_k, r.tail, r.proxy
        )?;
    }
    Ok(())
}

fn bump_psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// `C^∞` step from 0 (x ≤ 0) to 1 (x ≥ 1) and its derivative.
pub fn smooth_step(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, b) = (bump_psi(x), bump_psi(1.0 - x));
    let (da, db) = (a / (x * x), b / ((1.0 - x) * (1.0 - x)));
    let s = a + b;
    (a / s, (da * b + a * db) / (s * s))
}

/// Energy cutoff `η(y)`: 0 for `y ≤ δ₀/4`, `y²` for `y ≥ δ₀/2`; returns `(η, η')`.
pub fn cutoff(y: f64, delta0: f64) -> (f64, f64) {
    let q = 0.25 * delta0;
    let (s, ds) = smooth_step((y - q) / q);
    (y * y * s, 2.0 * y * s + y * y * ds / q)
}

/// Energy-type functionals at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    pub energy: f64,
    pub dissipation: f64,
    /// `sup_ρ 𝓐_k(w(τ), ρ)` over admissible ρ, or 0 when expired.
    pub a_k: f64,
    /// `‖y D³ w‖_{L²(y ≥ δ₀/2)}`.
    pub tail3: f64,
    /// `ρ₀ - βτ ≤ 0`.
    pub expired: bool,
}

/// Evaluates `𝓔`, `𝓓`, `𝓐_k` and maintains the running `A(β)`.
#[derive(Debug, Clone)]
pub struct EnergyFunctionals {
    pub ctx: NormContext,
    pub nu: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k: usize,
    pub rho_grid: Vec<f64>,
    eta: Vec<f64>,
    deta: Vec<f64>,
    b: Vec<f64>,
    sup_a: f64,
    sup_tail: f64,
}

/// Radii sampled for the `sup_ρ` in `A(β)`.
pub const RHO_SAMPLES: usize = 16;

impl EnergyFunctionals {
    pub fn new(ctx: NormContext, nu: f64, beta: f64, gamma: f64, k: usize) -> Result<Self> {
        if !(1..=MAX_K).contains(&k) {
            return Err(Error::Config(format!("k must be in 1..={MAX_K}, got {k}")));
        }
        let (eta, deta): (Vec<f64>, Vec<f64>) = ctx.y().iter().map(|&y| cutoff(y, ctx.delta0)).unzip();
        let lam = ctx.lambda;
        let b = ctx.y().iter().map(|&y| y * (2.0 + lam * y) / (1.0 + lam * y).powi(2)).collect();
        let rho_grid = (1..=RHO_SAMPLES).map(|i| ctx.rho0 * i as f64 / (RHO_SAMPLES + 1) as f64).collect();
        Ok(Self { ctx, nu, beta, gamma, k, rho_grid, eta, deta, b, sup_a: 0.0, sup_tail: 0.0 })
    }

    /// `𝓔 = Σ_{i+j≤5} ½ ∫ η |∂_x^i ∂_y^j w|²` and `𝓓`.
    pub fn energy_dissipation(&self, w: &RescaledField) -> (f64, f64) {
        let period = std::f64::consts::TAU / self.ctx.lambda;
        let q = &self.ctx.full;
        let lam = self.ctx.lambda;
        let mut e = 0.0;
        let mut d = 0.0;
        for (n, f) in w.field.modes() {
            let a2 = w.alpha(n).powi(2);
            let derivs: Vec<Vec<C>> = (0..=6).map(|j| self.ctx.derivs.apply(f, j)).collect();
            for j in 0..=5 {
                let sum_i: f64 = (0..=5 - j).map(|i| a2.powi(i as i32)).sum();
                let iy: f64 = (0..q.len()).map(|m| q[m] * self.eta[m] * derivs[j][m].norm_sqr()).sum();
                let iyb: f64 = (0..q.len())
                    .map(|m| q[m] * (1.0 + lam * self.b[m]) * self.eta[m] * derivs[j][m].norm_sqr())
                    .sum();
                let iy1: f64 = (0..q.len()).map(|m| q[m] * self.deta[m] * derivs[j + 1][m].norm_sqr()).sum();
                e += 0.5 * sum_i * iy;
                d += self.nu * (a2 * sum_i * iyb + 0.5 * sum_i * iy1);
            }
        }
        (period * e, period * d)
    }

    /// `𝓐_k(w(τ), ρ)`.
    pub fn a_k(&self, w: &RescaledField, tau: f64, rho: f64) -> Result<f64> {
        let ctx = &self.ctx;
        let s = (self.nu * tau).max(0.0).sqrt();
        let gap = (ctx.rho0 - rho - self.beta * tau).max(0.0);
        let first = ctx.w_norm(w, rho, self.k)? + s * ctx.h_norm(w, rho, self.k - 1);
        let second = ctx.w_norm(w, rho, self.k + 1)? + s * ctx.h_norm(w, rho, self.k);
        Ok(first + second * gap.powf(self.gamma))
    }

    /// Evaluates at rescaled time `tau` and updates the running `A(β)`.
    pub fn update(&mut self, w: &RescaledField, tau: f64) -> Result<Functionals> {
        let (energy, dissipation) = self.energy_dissipation(w);
        let limit = self.ctx.rho0 - self.beta * tau;
        let expired = limit <= 0.0;
        let tail3 = self.ctx.sobolev_tail(w, 1, 3, 0.5 * self.ctx.delta0)?;
        let mut a_k = 0.0f64;
        if !expired {
            for &rho in self.rho_grid.iter().filter(|&&r| r < limit) {
                a_k = a_k.max(self.a_k(w, tau, rho)?);
            }
            self.sup_a = self.sup_a.max(a_k);
            self.sup_tail = self.sup_tail.max(tail3);
        }
        Ok(Functionals { energy, dissipation, a_k, tail3, expired })
    }

    /// Running `A(β) = sup_τ sup_ρ 𝓐_k + sup_τ ‖y D³ w‖_{L²(y≥δ₀/2)}`.
    pub fn a_beta(&self) -> f64 {
        self.sup_a + self.sup_tail
    }
}

/// Worst `‖fg‖_{𝓛¹} / (‖f‖_{𝓛∞} ‖g‖_{𝓛¹})` over random closed-form pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraAudit {
    pub pairs: usize,
    pub worst_ratio: f64,
}

pub fn algebra_audit(rng: &mut impl Rng, dom: &PencilDomain, lambda: f64, pairs: usize) -> Result<AlgebraAudit> {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let f = ClosedForm::random(rng, lambda, 2, 2);
        let g = ClosedForm::random(rng, lambda, 2, 2);
        let lhs = f.product(&g).norm(dom, Which::L1)?;
        let rhs = f.norm(dom, Which::Linf)? * g.norm(dom, Which::L1)?;
        worst = worst.max(lhs / rhs);
    }
    Ok(AlgebraAudit { pairs, worst_ratio: worst })
}
