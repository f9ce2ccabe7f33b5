//! Analytic initial vorticity used by the experiments.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::biot_savart::BiotSavart;
use crate::config::SolverConfig;
use crate::error::Result;
use crate::grid::RadialGrid;
use crate::spectral::SpectralField;

/// `ω₀ = A (r-1)² e^{-κ(r-1)} Σ_{|n|≤n₀} c_n e^{inθ}` with `c_0 = 1` and
/// `c_n = e^{-2ε₀|n|} e^{iφ_n}`, phases drawn from `seed`.
///
/// The profile vanishes to second order at the wall and is entire in r, so
/// it has analytic extensions of any radius.
pub fn analytic_data(config: &SolverConfig, grid: &RadialGrid) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let h = (config.n_theta / 2) as i64;
    let n0 = (config.n0 as i64).min(config.n_theta as i64 / 3);
    let mut w = SpectralField::zeros(config.n_theta, grid.len());
    for n in 0..=n0.min(h) {
        let c = if n == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar((-2.0 * config.eps0 * n as f64).exp(), phase)
        };
        for (v, &r) in w.mode_mut(n).iter_mut().zip(&grid.r) {
            let x = r - 1.0;
            *v = c * (config.amplitude * x * x * (-config.kappa * x).exp());
        }
    }
    w.enforce_hermitian();
    w
}

/// Support of the bump used to make data compatible: `[1 + δ₀, R_max/2]`.
pub fn projection_support(config: &SolverConfig) -> (f64, f64) {
    (1.0 + config.delta0, 0.5 * config.r_max)
}

/// Default data projected to zero wall slip in every mode and zero net circulation.
pub fn compatible_data(config: &SolverConfig, grid: &RadialGrid, bs: &BiotSavart) -> Result<SpectralField> {
    let (lo, hi) = projection_support(config);
    bs.project_compatible(&analytic_data(config, grid), lo, hi)
}
