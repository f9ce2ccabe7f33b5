//! Boundary-layer variables `x = θ/λ`, `y = (r-1)/λ`, `τ = t/λ²`.
//!
//! In these variables `λ²Δ_{r,θ} = Δ_{x,y} + λL` with
//! `L = a ∂_y - b ∂_x²`, `a = 1/(1+λy)`, `b = y(2+λy)/(1+λy)²`, so on the
//! frequency `α = λn` the operator is `L_α = a ∂_y + α² b`.
//! This layer is for verification; time stepping stays in (r, θ).

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::linalg::BandBuilder;
use crate::quadrature::interpolate;
use crate::spectral::{radial_derivative, SpectralField, ThetaTransform};

type C = Complex64;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Config(format!("λ must lie in (0, 1], got {lambda}")));
    }
    Ok(())
}

/// Fourier coefficients `w_α(y_j)` with `α = λn` and `y_j = (r_j - 1)/λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledField {
    pub lambda: f64,
    pub y: Vec<f64>,
    pub field: SpectralField,
}

impl RescaledField {
    pub fn alpha(&self, n: i64) -> f64 {
        self.lambda * n as f64
    }

    /// `w(x, y)` with cubic interpolation in y.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.field
            .modes()
            .map(|(n, prof)| {
                let re: Vec<f64> = prof.iter().map(|c| c.re).collect();
                let im: Vec<f64> = prof.iter().map(|c| c.im).collect();
                let c = C::new(interpolate(&self.y, &re, y), interpolate(&self.y, &im, y));
                (c * C::from_polar(1.0, self.alpha(n) * x)).re
            })
            .sum()
    }
}

/// `w(τ, x, y) = ω(λ²τ, λx, 1+λy)` on the nodes of `grid`.
pub fn map_to_rescaled(omega: &SpectralField, grid: &RadialGrid, lambda: f64) -> Result<RescaledField> {
    check_lambda(lambda)?;
    if omega.n_r() != grid.len() {
        return Err(Error::Shape { expected: format!("{} radial nodes", grid.len()), got: omega.n_r().to_string() });
    }
    Ok(RescaledField {
        lambda,
        y: grid.r.iter().map(|r| (r - 1.0) / lambda).collect(),
        field: omega.clone(),
    })
}

/// Inverse of [`map_to_rescaled`]: the field and its radial nodes `1 + λy`.
pub fn map_from_rescaled(w: &RescaledField) -> Result<(SpectralField, Vec<f64>)> {
    check_lambda(w.lambda)?;
    Ok((w.field.clone(), w.y.iter().map(|y| 1.0 + w.lambda * y).collect()))
}

/// Curvature coefficients of `L` on a y-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureOps {
    pub lambda: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl CurvatureOps {
    pub fn new(lambda: f64, y: &[f64]) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            lambda,
            a: y.iter().map(|&y| curvature_a(lambda, y)).collect(),
            b: y.iter().map(|&y| curvature_b(lambda, y)).collect(),
        })
    }
}

pub fn curvature_a(lambda: f64, y: f64) -> f64 {
    1.0 / (1.0 + lambda * y)
}

pub fn curvature_b(lambda: f64, y: f64) -> f64 {
    y * (2.0 + lambda * y) / (1.0 + lambda * y).powi(2)
}

fn same_shape(w: &RescaledField, grid: &RadialGrid) -> Result<()> {
    if w.field.n_r() != grid.len() {
        return Err(Error::Shape { expected: format!("{} nodes", grid.len()), got: w.field.n_r().to_string() });
    }
    Ok(())
}

/// `∂_y` of every mode, via `∂_y = λ ∂_r` on the underlying grid.
fn dy(w: &RescaledField, grid: &RadialGrid, order: usize) -> Result<SpectralField> {
    let mut d = radial_derivative(&w.field, grid, order)?;
    d.scale(w.lambda.powi(order as i32));
    Ok(d)
}

/// `L w` mode by mode: `a ∂_y w_α + α² b w_α`.
pub fn apply_l(w: &RescaledField, grid: &RadialGrid) -> Result<RescaledField> {
    same_shape(w, grid)?;
    let ops = CurvatureOps::new(w.lambda, &w.y)?;
    let d = dy(w, grid, 1)?;
    let mut out = w.field.clone();
    for n in -out.max_mode()..=out.max_mode() {
        let a2 = w.alpha(n).powi(2);
        let (src, dsrc) = (w.field.mode(n), d.mode(n));
        for (j, v) in out.mode_mut(n).iter_mut().enumerate() {
            *v = dsrc[j] * ops.a[j] + src[j] * (a2 * ops.b[j]);
        }
    }
    Ok(RescaledField { field: out, ..w.clone() })
}

/// `(Δ_{x,y} + λL) w` mode by mode.
pub fn apply_rescaled_laplacian(w: &RescaledField, grid: &RadialGrid) -> Result<RescaledField> {
    let mut out = apply_l(w, grid)?;
    let d2 = dy(w, grid, 2)?;
    for n in -out.field.max_mode()..=out.field.max_mode() {
        let a2 = w.alpha(n).powi(2);
        let src = w.field.mode(n);
        let dd = d2.mode(n);
        for (j, v) in out.field.mode_mut(n).iter_mut().enumerate() {
            *v = *v * w.lambda + dd[j] - src[j] * a2;
        }
    }
    Ok(out)
}

/// Transport term in rescaled variables,
/// `B(ψ, w) = a (∂_y ψ ∂_x w - ∂_x ψ ∂_y w)`, formed on the x-grid with
/// two-thirds truncation. It equals `λ²` times the original advection term.
pub fn apply_b(psi: &RescaledField, w: &RescaledField, grid: &RadialGrid, fft: &ThetaTransform) -> Result<RescaledField> {
    same_shape(w, grid)?;
    same_shape(psi, grid)?;
    let dx = |f: &RescaledField| {
        let mut g = f.field.clone();
        for n in -g.max_mode()..=g.max_mode() {
            let k = C::new(0.0, f.alpha(n));
            for v in g.mode_mut(n) {
                *v *= k;
            }
        }
        g
    };
    let mut fields = [dy(psi, grid, 1)?, dx(w), dx(psi), dy(w, grid, 1)?];
    for f in &mut fields {
        f.dealias();
    }
    let p: Vec<_> = fields.iter().map(|f| fft.inverse(f)).collect::<Result<_>>()?;
    let mut prod = p[0].clone();
    let n_r = grid.len();
    for (i, v) in prod.data.iter_mut().enumerate() {
        let a = curvature_a(w.lambda, w.y[i % n_r]);
        *v = a * (p[0].data[i] * p[1].data[i] - p[2].data[i] * p[3].data[i]);
    }
    let mut out = fft.forward(&prod)?;
    out.dealias();
    out.enforce_hermitian();
    Ok(RescaledField { field: out, ..w.clone() })
}

/// Both operators at once.
pub fn apply_l_and_b(
    w: &RescaledField,
    psi: &RescaledField,
    grid: &RadialGrid,
    fft: &ThetaTransform,
) -> Result<(RescaledField, RescaledField)> {
    Ok((apply_l(w, grid)?, apply_b(psi, w, grid, fft)?))
}

/// Residual of `λ²Δ_{r,θ} f = (Δ_{x,y} + λL) f` for `f = e^{-y} cos(αx)`,
/// with the left side from radial stencils and the right side from the
/// rescaled operators. Returns `(mapped residual, error vs closed form)`,
/// both relative to `max|f|`.
pub fn operator_identity_residual(grid: &RadialGrid, lambda: f64, n: i64, n_theta: usize) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    let mut f = SpectralField::zeros(n_theta, grid.len());
    if n.unsigned_abs() as usize > n_theta / 2 {
        return Err(Error::Config(format!("mode {n} not representable with N_θ = {n_theta}")));
    }
    for m in [n, -n] {
        for (v, &r) in f.mode_mut(m).iter_mut().zip(&grid.r) {
            *v = C::new(0.5 * (-(r - 1.0) / lambda).exp(), 0.0);
        }
    }
    if n == 0 {
        f.scale(2.0);
    }
    let d1 = radial_derivative(&f, grid, 1)?;
    let d2 = radial_derivative(&f, grid, 2)?;
    let w = map_to_rescaled(&f, grid, lambda)?;
    let rhs = apply_rescaled_laplacian(&w, grid)?;
    let nn = (n * n) as f64;
    let (mut res, mut err) = (0.0f64, 0.0f64);
    let interior = 2..grid.len() - 2;
    for j in interior {
        let r = grid.r[j];
        let lhs = (d2.mode(n)[j] + d1.mode(n)[j] / r - f.mode(n)[j] * (nn / (r * r))) * (lambda * lambda);
        let exact = f.mode(n)[j].re * (1.0 - lambda / r - lambda * lambda * nn / (r * r));
        res = res.max((lhs - rhs.field.mode(n)[j]).norm());
        err = err.max((lhs.re - exact).abs());
    }
    let scale = f.max_abs();
    Ok((res / scale, err / scale))
}

/// One explicit diffusion step in both coordinate systems; returns the
/// largest difference relative to the field size.
pub fn linear_step_equivalence(omega: &SpectralField, grid: &RadialGrid, lambda: f64, nu: f64, dt: f64) -> Result<f64> {
    let d1 = radial_derivative(omega, grid, 1)?;
    let d2 = radial_derivative(omega, grid, 2)?;
    let mut orig = omega.clone();
    for n in -omega.max_mode()..=omega.max_mode() {
        let nn = (n * n) as f64;
        for (j, v) in orig.mode_mut(n).iter_mut().enumerate() {
            let r = grid.r[j];
            *v += (d2.mode(n)[j] + d1.mode(n)[j] / r - omega.mode(n)[j] * (nn / (r * r))) * (nu * dt);
        }
    }
    let w = map_to_rescaled(omega, grid, lambda)?;
    let lw = apply_rescaled_laplacian(&w, grid)?;
    let mut resc = w.field.clone();
    resc.axpy(nu * dt / (lambda * lambda), &lw.field);
    let (back, _) = map_from_rescaled(&RescaledField { field: resc, ..w })?;
    let diff = orig.raw().iter().zip(back.raw()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(diff / omega.max_abs().max(f64::MIN_POSITIVE))
}

/// Outcome of the DtN expansion check for one `(n, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtnReport {
    pub n: i64,
    pub lambda: f64,
    pub w0: C,
    /// `|α| w0 - correction` from the finest level, Richardson-extrapolated.
    pub n_numeric: C,
    /// `λ|n| w0`.
    pub n_exact: C,
    /// `λ ∫ e^{-|α|y} (w0 L_α e^{-|α|y} + L_α w̃) dy` (zero for the disk).
    pub correction_integral: C,
    /// `max_y |w̃_num - w̃_exact|` on the finest level.
    pub ode_residual: f64,
    /// Observed convergence order of the ODE error.
    pub observed_order: f64,
    /// Correction integral per level, coarse to fine.
    pub levels: [f64; 3],
}

/// Nodes `1 + (R-1)(e^{κs}-1)/(e^κ-1)` on a uniform s-grid; nested under doubling.
fn mapped_r_nodes(r_max: f64, intervals: usize, kappa: f64) -> Vec<f64> {
    (0..=intervals)
        .map(|i| {
            if i == intervals {
                return r_max;
            }
            let s = i as f64 / intervals as f64;
            1.0 + (r_max - 1.0) * (kappa * s).exp_m1() / kappa.exp_m1()
        })
        .collect()
}

struct DtnLevel {
    correction: f64,
    ode_error: f64,
}

/// Solves `(∂_y² - α²) w̃ = -λ L_α(e^{-|α|y}) - λ L_α w̃`, `w̃(0) = 0`, for unit `w0`
/// on `y ∈ [0, (R-1)/λ]` with the far-field row matched to the decaying
/// homogeneous solution.
fn dtn_level(n: i64, lambda: f64, r_max: f64, intervals: usize) -> Result<DtnLevel> {
    let grid = RadialGrid::from_nodes(mapped_r_nodes(r_max, intervals, 6.0))?;
    let m = grid.len() - 1;
    let k = n.unsigned_abs() as f64;
    let alpha = lambda * k;
    let y: Vec<f64> = grid.r.iter().map(|r| (r - 1.0) / lambda).collect();
    let ops = CurvatureOps::new(lambda, &y)?;
    let lam2 = lambda * lambda;
    let e = |yy: f64| (-alpha * yy).exp();
    // L_α e^{-|α|y}
    let l_exp = |j: usize| (-alpha * ops.a[j] + alpha * alpha * ops.b[j]) * e(y[j]);
    let mut bb = BandBuilder::new(m, 4, 3);
    let mut rhs = vec![C::new(0.0, 0.0); m];
    for j in 1..m {
        let (s1, s2) = (grid.d1_hi(j), grid.d2_hi(j));
        for q in 0..5 {
            let node = s2.start + q;
            if node > 0 {
                // ∂_y² + λ a ∂_y with ∂_y = λ ∂_r
                bb.add(j - 1, node - 1, lam2 * s2.w[q] + lambda * ops.a[j] * lambda * s1.w[q]);
            }
        }
        bb.add(j - 1, j - 1, -alpha * alpha + lambda * alpha * alpha * ops.b[j]);
        rhs[j - 1] = C::new(-lambda * l_exp(j), 0.0);
    }
    // (w̃ + e^{-|α|y})_r = -(k/R)(w̃ + e^{-|α|y}) at r = R
    let s1 = grid.d1_hi(m);
    for q in 0..5 {
        bb.add(m - 1, s1.start + q - 1, s1.w[q]);
    }
    bb.add(m - 1, m - 1, k / r_max);
    let ey = e(y[m]);
    rhs[m - 1] = C::new(k * ey - k / r_max * ey, 0.0);
    bb.factor()?.solve(&mut rhs);
    let mut wt = vec![0.0; m + 1];
    for j in 1..=m {
        wt[j] = rhs[j - 1].re;
    }
    if wt.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("DtN correction profile"));
    }
    let ode_error = (0..=m)
        .map(|j| (wt[j] - ((1.0 + lambda * y[j]).powf(-k) - e(y[j]))).abs())
        .fold(0.0, f64::max);
    // λ ∫ e^{-|α|y} (...) dy = ∫ (...) e^{-|α|y} dr
    let integrand: Vec<f64> = (0..=m)
        .map(|j| {
            let dwt = lambda * grid.d1_hi(j).apply(&wt);
            let l_wt = ops.a[j] * dwt + alpha * alpha * ops.b[j] * wt[j];
            e(y[j]) * (l_exp(j) + l_wt)
        })
        .collect();
    Ok(DtnLevel { correction: grid.integrate(&integrand), ode_error })
}

/// Coarsest number of intervals used by [`dtn_expansion_identity`].
pub const DTN_BASE_INTERVALS: usize = 400;

/// Checks `N w = |α| w(0)` against the expansion with the `e^{-|α|y}` weight
/// on three nested grids.
pub fn dtn_expansion_identity(n: i64, lambda: f64, w0: C, r_max: f64) -> Result<DtnReport> {
    check_lambda(lambda)?;
    if n == 0 {
        return Err(Error::Config("the expansion needs n ≠ 0".into()));
    }
    let alpha = lambda * n.unsigned_abs() as f64;
    let lv: Vec<DtnLevel> = (0..3)
        .map(|i| dtn_level(n, lambda, r_max, DTN_BASE_INTERVALS << i))
        .collect::<Result<_>>()?;
    let order = if lv[2].ode_error > 0.0 && lv[1].ode_error > 0.0 {
        (lv[1].ode_error / lv[2].ode_error).log2()
    } else {
        f64::INFINITY
    };
    let p = if order.is_finite() { order.clamp(1.0, 8.0) } else { 4.0 };
    let c = lv[2].correction + (lv[2].correction - lv[1].correction) / (2f64.powf(p) - 1.0);
    let correction = w0 * c;
    Ok(DtnReport {
        n,
        lambda,
        w0,
        n_numeric: w0 * alpha - correction,
        n_exact: w0 * alpha,
        correction_integral: correction,
        ode_residual: lv[2].ode_error * w0.norm(),
        observed_order: order,
        levels: [lv[0].correction, lv[1].correction, lv[2].correction],
    })
}

/// CSV with columns `n, λ, N_numeric, N_exact, correction_integral, ode_residual`
/// (real parts; all imaginary parts vanish for real `w0`).
pub fn write_dtn_csv(mut out: impl Write, rows: &[DtnReport]) -> Result<()> {
    writeln!(out, "n,lambda,N_numeric,N_exact,correction_integral,ode_residual")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.15e},{:.15e},{:.6e},{:.6e}",
            r.n, r.lambda, r.n_numeric.re, r.n_exact.re, r.correction_integral.re, r.ode_residual
        )?;
    }
    Ok(())
}
