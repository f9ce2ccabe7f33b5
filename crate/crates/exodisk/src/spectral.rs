//! Fourier-in-θ representation of scalar fields on the radial grid.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::quadrature::interpolate;

/// Complex Fourier coefficients `f_n(r_j)` for `n = -N_θ/2 ..= N_θ/2`.
///
/// Storage is mode-major: all radial samples of the lowest mode first. The
/// Nyquist coefficient of a real field is split evenly between `±N_θ/2`,
/// so the symmetric index range keeps Hermitian symmetry exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n_theta: usize,
    n_r: usize,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(n_theta: usize, n_r: usize) -> Self {
        assert!(n_theta >= 2 && n_theta % 2 == 0, "n_theta must be even");
        Self {
            n_theta,
            n_r,
            data: vec![Complex64::new(0.0, 0.0); (n_theta + 1) * n_r],
        }
    }

    pub fn from_raw(n_theta: usize, n_r: usize, data: Vec<Complex64>) -> Result<Self> {
        if n_theta % 2 != 0 || data.len() != (n_theta + 1) * n_r {
            return Err(Error::Shape {
                expected: format!("{} coefficients", (n_theta + 1) * n_r),
                got: format!("{}", data.len()),
            });
        }
        Ok(Self { n_theta, n_r, data })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    /// Largest stored |n|.
    pub fn max_mode(&self) -> i64 {
        (self.n_theta / 2) as i64
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    fn offset(&self, n: i64) -> usize {
        let h = self.max_mode();
        assert!((-h..=h).contains(&n), "mode {n} outside ±{h}");
        (n + h) as usize * self.n_r
    }

    pub fn mode(&self, n: i64) -> &[Complex64] {
        let o = self.offset(n);
        &self.data[o..o + self.n_r]
    }

    pub fn mode_mut(&mut self, n: i64) -> &mut [Complex64] {
        let o = self.offset(n);
        &mut self.data[o..o + self.n_r]
    }

    /// Iterator over `(n, profile)` in ascending `n`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, &[Complex64])> {
        let h = self.max_mode();
        self.data
            .chunks(self.n_r)
            .enumerate()
            .map(move |(i, c)| (i as i64 - h, c))
    }

    /// Mutable profiles of the modes `n ≥ 0`, in ascending `n`.
    pub fn nonnegative_modes_mut(&mut self) -> impl Iterator<Item = (i64, &mut [Complex64])> {
        let h = self.max_mode();
        let n_r = self.n_r;
        self.data[h as usize * n_r..]
            .chunks_mut(n_r)
            .enumerate()
            .map(|(i, c)| (i as i64, c))
    }

    /// Sets `f_{-n} = conj(f_n)` from the `n ≥ 0` half and makes `f_0` real.
    pub fn enforce_hermitian(&mut self) {
        let h = self.max_mode();
        for v in self.mode_mut(0) {
            v.im = 0.0;
        }
        for n in 1..=h {
            let pos: Vec<Complex64> = self.mode(n).to_vec();
            for (neg, p) in self.mode_mut(-n).iter_mut().zip(pos) {
                *neg = p.conj();
            }
        }
    }

    /// Largest `|f_{-n} - conj(f_n)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let h = self.max_mode();
        (0..=h)
            .flat_map(|n| {
                self.mode(n)
                    .iter()
                    .zip(self.mode(-n))
                    .map(|(a, b)| (a.conj() - b).norm())
            })
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Zeroes all modes with `|n| > N_θ/3` (two-thirds rule).
    pub fn dealias(&mut self) {
        let cut = (self.n_theta / 3) as i64;
        let h = self.max_mode();
        for n in (-h..=h).filter(|n| n.abs() > cut) {
            self.mode_mut(n).fill(Complex64::new(0.0, 0.0));
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += *y * a;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.data {
            *x *= a;
        }
    }

    /// Values at the node `j` for all modes.
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.data.chunks(self.n_r).map(|c| c[j]).collect()
    }

    /// Evaluates the represented real field at `(θ, r)`, interpolating in r.
    pub fn eval(&self, grid: &RadialGrid, theta: f64, r: f64) -> f64 {
        self.modes()
            .map(|(n, prof)| {
                let re: Vec<f64> = prof.iter().map(|c| c.re).collect();
                let im: Vec<f64> = prof.iter().map(|c| c.im).collect();
                let c = Complex64::new(interpolate(&grid.r, &re, r), interpolate(&grid.r, &im, r));
                (c * Complex64::from_polar(1.0, n as f64 * theta)).re
            })
            .sum()
    }
}

/// Real samples on the uniform θ-grid × radial nodes, stored `[k * n_r + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub n_theta: usize,
    pub n_r: usize,
    pub data: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(n_theta: usize, n_r: usize) -> Self {
        Self { n_theta, n_r, data: vec![0.0; n_theta * n_r] }
    }

    /// Samples `f(θ_k, r_j)` with `θ_k = 2πk/N_θ`.
    pub fn from_fn(n_theta: usize, grid: &RadialGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n_r = grid.len();
        let mut out = Self::zeros(n_theta, n_r);
        for k in 0..n_theta {
            let th = theta(k, n_theta);
            for (j, &r) in grid.r.iter().enumerate() {
                out.data[k * n_r + j] = f(th, r);
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.data[k * self.n_r + j]
    }
}

pub fn theta(k: usize, n_theta: usize) -> f64 {
    2.0 * std::f64::consts::PI * k as f64 / n_theta as f64
}

/// Forward and inverse θ transforms for a fixed `N_θ`.
#[derive(Clone)]
pub struct ThetaTransform {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ThetaTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ThetaTransform").field("n", &self.n).finish()
    }
}

impl ThetaTransform {
    pub fn new(n_theta: usize) -> Result<Self> {
        if n_theta < 2 || n_theta % 2 != 0 {
            return Err(Error::Config(format!("N_θ must be even, got {n_theta}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n: n_theta,
            fwd: planner.plan_fft_forward(n_theta),
            inv: planner.plan_fft_inverse(n_theta),
        })
    }

    pub fn n_theta(&self) -> usize {
        self.n
    }

    pub fn forward(&self, samples: &PhysicalField) -> Result<SpectralField> {
        if samples.n_theta != self.n {
            return Err(Error::Shape {
                expected: format!("N_θ = {}", self.n),
                got: format!("N_θ = {}", samples.n_theta),
            });
        }
        let (n, n_r) = (self.n, samples.n_r);
        let h = (n / 2) as i64;
        let mut out = SpectralField::zeros(n, n_r);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let inv_n = 1.0 / n as f64;
        for j in 0..n_r {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(samples.at(k, j), 0.0);
            }
            self.fwd.process(&mut buf);
            out.mode_mut(0)[j] = buf[0] * inv_n;
            for m in 1..h {
                out.mode_mut(m)[j] = buf[m as usize] * inv_n;
                out.mode_mut(-m)[j] = buf[n - m as usize] * inv_n;
            }
            let nyq = buf[h as usize] * (0.5 * inv_n);
            out.mode_mut(h)[j] = nyq;
            out.mode_mut(-h)[j] = nyq;
        }
        Ok(out)
    }

    pub fn inverse(&self, field: &SpectralField) -> Result<PhysicalField> {
        if field.n_theta() != self.n {
            return Err(Error::Shape {
                expected: format!("N_θ = {}", self.n),
                got: format!("N_θ = {}", field.n_theta()),
            });
        }
        let (n, n_r) = (self.n, field.n_r());
        let h = (n / 2) as i64;
        let mut out = PhysicalField::zeros(n, n_r);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n_r {
            buf[0] = field.mode(0)[j];
            for m in 1..h {
                buf[m as usize] = field.mode(m)[j];
                buf[n - m as usize] = field.mode(-m)[j];
            }
            buf[h as usize] = field.mode(h)[j] + field.mode(-h)[j];
            self.inv.process(&mut buf);
            for (k, b) in buf.iter().enumerate() {
                out.data[k * n_r + j] = b.re;
            }
        }
        Ok(out)
    }

    /// Inverse transform of boundary values only (`j = 0`).
    pub fn boundary_values(&self, field: &SpectralField) -> Vec<f64> {
        let n = self.n;
        let h = (n / 2) as i64;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = field.mode(0)[0];
        for m in 1..h {
            buf[m as usize] = field.mode(m)[0];
            buf[n - m as usize] = field.mode(-m)[0];
        }
        buf[h as usize] = field.mode(h)[0] + field.mode(-h)[0];
        self.inv.process(&mut buf);
        buf.iter().map(|b| b.re).collect()
    }
}

/// Radial derivative of every mode with five-point stencils (one-sided near the ends).
pub fn radial_derivative(f: &SpectralField, grid: &RadialGrid, order: usize) -> Result<SpectralField> {
    if f.n_r() != grid.len() {
        return Err(Error::Shape {
            expected: format!("{} radial nodes", grid.len()),
            got: format!("{}", f.n_r()),
        });
    }
    if !(1..=2).contains(&order) {
        return Err(Error::Config(format!("derivative order must be 1 or 2, got {order}")));
    }
    let mut out = SpectralField::zeros(f.n_theta(), f.n_r());
    let h = f.max_mode();
    for n in -h..=h {
        let src = f.mode(n);
        let dst = out.mode_mut(n);
        for (j, d) in dst.iter_mut().enumerate() {
            let st = if order == 1 { grid.d1_hi(j) } else { grid.d2_hi(j) };
            *d = st.apply(src);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SolverConfig;
    use crate::grid::build_grid;

    fn small_grid() -> RadialGrid {
        RadialGrid::stretched(5.0, 24, 0.05, None).unwrap()
    }

    #[test]
    fn constant_goes_to_mode_zero() {
        let g = small_grid();
        let t = ThetaTransform::new(16).unwrap();
        let f = t.forward(&PhysicalField::from_fn(16, &g, |_, _| 2.5)).unwrap();
        for (n, prof) in f.modes() {
            let want = if n == 0 { 2.5 } else { 0.0 };
            assert!(prof.iter().all(|c| (c.re - want).abs() < 1e-14 && c.im.abs() < 1e-14));
        }
    }

    #[test]
    fn cosine_splits_into_plus_minus_one() {
        let g = small_grid();
        let t = ThetaTransform::new(12).unwrap();
        let f = t.forward(&PhysicalField::from_fn(12, &g, |th, _| th.cos())).unwrap();
        for (n, prof) in f.modes() {
            let want = if n.abs() == 1 { 0.5 } else { 0.0 };
            assert!(prof.iter().all(|c| (c.re - want).abs() < 1e-14 && c.im.abs() < 1e-14));
        }
    }

    #[test]
    fn nyquist_is_split_evenly() {
        let g = small_grid();
        let t = ThetaTransform::new(8).unwrap();
        let f = t.forward(&PhysicalField::from_fn(8, &g, |th, _| (4.0 * th).cos())).unwrap();
        assert!((f.mode(4)[3].re - 0.5).abs() < 1e-14);
        assert!((f.mode(-4)[3].re - 0.5).abs() < 1e-14);
        let back = t.inverse(&f).unwrap();
        assert!((back.at(1, 3) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_polynomials() {
        let g = build_grid(&SolverConfig::default()).unwrap();
        let t = ThetaTransform::new(4).unwrap();
        for (f, df) in [
            (Box::new(|r: f64| r * r) as Box<dyn Fn(f64) -> f64>, Box::new(|r: f64| 2.0 * r) as Box<dyn Fn(f64) -> f64>),
            (Box::new(|r: f64| r.powi(-2)), Box::new(|r: f64| -2.0 * r.powi(-3))),
        ] {
            let s = t.forward(&PhysicalField::from_fn(4, &g, |_, r| f(r))).unwrap();
            let d = radial_derivative(&s, &g, 1).unwrap();
            let err = g
                .r
                .iter()
                .enumerate()
                .map(|(j, &r)| ((d.mode(0)[j].re - df(r)) / df(r)).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-4, "max relative error {err}");
        }
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = small_grid();
        let t = ThetaTransform::new(4).unwrap();
        let s = t.forward(&PhysicalField::from_fn(4, &g, |_, _| 3.0)).unwrap();
        for order in [1, 2] {
            assert!(radial_derivative(&s, &g, order).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let g = small_grid();
        let t = ThetaTransform::new(8).unwrap();
        assert!(t.forward(&PhysicalField::from_fn(6, &g, |_, _| 0.0)).is_err());
        assert!(radial_derivative(&SpectralField::zeros(8, 3), &g, 1).is_err());
    }
}
