//! Stretched radial grid on `[1, R_max]` with quadrature, finite-volume
//! metrics and finite-difference stencils.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::quadrature::{fd_weights, integration_weights, stencil_start};

/// Largest far-to-near spacing ratio the automatic clustering will use.
const MAX_CLUSTERING: f64 = 2000.0;

/// A finite-difference stencil anchored at `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil<const W: usize> {
    pub start: usize,
    pub w: [f64; W],
}

impl<const W: usize> Stencil<W> {
    #[inline]
    pub fn apply<T>(&self, f: &[T]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        self.w.iter().zip(&f[self.start..self.start + W]).map(|(&w, &v)| v * w).sum()
    }
}

fn stencils<const W: usize>(r: &[f64], order: usize) -> Vec<Stencil<W>> {
    let n = r.len();
    (0..n)
        .map(|j| {
            let start = stencil_start(j, W, n);
            let c = fd_weights(r[j], &r[start..start + W], order);
            let mut w = [0.0; W];
            w.copy_from_slice(&c[order]);
            Stencil { start, w }
        })
        .collect()
}

/// Control-volume data for the vertex-centred finite-volume Laplacian.
///
/// Node `j` owns `[r_{j-1/2}, r_{j+1/2}]`, truncated to `[1, R_max]` at the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct FvMetric {
    /// `∫ r dr` over each control volume.
    pub vol: Vec<f64>,
    /// `∫ dr / r` over each control volume.
    pub ell: Vec<f64>,
    /// `r_{j+1/2} / (r_{j+1} - r_j)` for each interior face.
    pub coupling: Vec<f64>,
}

impl FvMetric {
    fn new(r: &[f64]) -> Self {
        let n = r.len();
        let mut faces = Vec::with_capacity(n + 1);
        faces.push(r[0]);
        faces.extend(r.windows(2).map(|p| 0.5 * (p[0] + p[1])));
        faces.push(r[n - 1]);
        let vol = faces.windows(2).map(|f| 0.5 * (f[1] * f[1] - f[0] * f[0])).collect();
        let ell = faces.windows(2).map(|f| (f[1] / f[0]).ln()).collect();
        let coupling = r
            .windows(2)
            .map(|p| 0.5 * (p[0] + p[1]) / (p[1] - p[0]))
            .collect();
        Self { vol, ell, coupling }
    }
}

/// Node set, quadrature weights and derivative stencils on `[1, R_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub r: Vec<f64>,
    /// Weights for `∫₁^{R_max} f dr`.
    pub quad_weights: Vec<f64>,
    pub r_max: f64,
    /// Far-to-near spacing ratio parameter of the mapping.
    pub clustering: f64,
    /// Exponential rate of the mapping.
    pub kappa: f64,
    pub fv: FvMetric,
    d1: Vec<Stencil<3>>,
    d2: Vec<Stencil<3>>,
    d1_hi: Vec<Stencil<5>>,
    d2_hi: Vec<Stencil<5>>,
}

fn mapped_nodes(r_max: f64, n: usize, c: f64, kappa: f64) -> Vec<f64> {
    let len = r_max - 1.0;
    let m = (n - 1) as f64;
    let denom = (c * kappa.exp_m1()).ln_1p();
    let mut r: Vec<f64> = (0..n)
        .map(|j| 1.0 + len * (c * (kappa * j as f64 / m).exp_m1()).ln_1p() / denom)
        .collect();
    r[0] = 1.0;
    r[n - 1] = r_max;
    r
}

impl RadialGrid {
    /// Builds a grid from explicit nodes.
    pub fn from_nodes(r: Vec<f64>) -> Result<Self> {
        if r.len() < 5 {
            return Err(Error::Grid("need at least 5 nodes".into()));
        }
        if r[0] != 1.0 {
            return Err(Error::Grid("first node must be r = 1".into()));
        }
        if r.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Grid("nodes must be strictly increasing".into()));
        }
        let r_max = *r.last().unwrap();
        Ok(Self {
            quad_weights: integration_weights(&r, 1.0, r_max),
            fv: FvMetric::new(&r),
            d1: stencils(&r, 1),
            d2: stencils(&r, 2),
            d1_hi: stencils(&r, 1),
            d2_hi: stencils(&r, 2),
            r,
            r_max,
            clustering: 1.0,
            kappa: 0.0,
        })
    }

    /// Smoothly stretched grid: spacing grows geometrically from `h_wall`
    /// at r = 1 and saturates to a uniform far field.
    ///
    /// `clustering` is the asymptotic far-to-near spacing ratio; `None`
    /// chooses one from `h_wall`.
    pub fn stretched(r_max: f64, n_r: usize, h_wall: f64, clustering: Option<f64>) -> Result<Self> {
        if !(r_max > 1.0) {
            return Err(Error::Grid(format!("R_max must exceed 1, got {r_max}")));
        }
        if n_r < 16 {
            return Err(Error::Grid(format!("N_r must be at least 16, got {n_r}")));
        }
        if !(h_wall > 0.0) {
            return Err(Error::Grid("wall spacing must be positive".into()));
        }
        let len = r_max - 1.0;
        let m = (n_r - 1) as f64;
        let target = h_wall.min(0.5 * len / m);
        let q = clustering.unwrap_or_else(|| (4.0 * len / (m * target)).clamp(4.0, MAX_CLUSTERING));
        if !(q > 1.0) {
            return Err(Error::Grid("clustering ratio must exceed 1".into()));
        }
        let c = 1.0 / q;
        let first = |k: f64| len * (c * (k / m).exp_m1()).ln_1p() / (c * k.exp_m1()).ln_1p();
        // first spacing decreases in κ up to a minimum, then returns to uniform
        let (mut a, mut b) = (1e-6f64.ln(), 2000f64.ln());
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = b - gr * (b - a);
            let x2 = a + gr * (b - a);
            if first(x1.exp()) < first(x2.exp()) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let (mut lo, mut hi) = (1e-8, (0.5 * (a + b)).exp());
        if first(hi) > target {
            return Err(Error::Grid(format!(
                "N_r = {n_r} cannot reach wall spacing {target:.3e} with clustering {q:.1}; \
                 increase N_r"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if first(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut g = Self::from_nodes(mapped_nodes(r_max, n_r, c, hi))?;
        g.clustering = q;
        g.kappa = hi;
        Ok(g)
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn wall_spacing(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    pub fn max_spacing(&self) -> f64 {
        self.r.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)
    }

    /// `∫₁^{R_max} f dr`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.quad_weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Weights for `∫_a^b f dr` with `1 ≤ a < b ≤ R_max` not necessarily nodes.
    pub fn partial_weights(&self, a: f64, b: f64) -> Vec<f64> {
        integration_weights(&self.r, a.max(1.0), b.min(self.r_max))
    }

    /// Second-order first-derivative stencil at node `j`.
    pub fn d1(&self, j: usize) -> &Stencil<3> {
        &self.d1[j]
    }

    /// Second-order second-derivative stencil at node `j`.
    pub fn d2(&self, j: usize) -> &Stencil<3> {
        &self.d2[j]
    }

    /// Fourth-order first-derivative stencil at node `j`.
    pub fn d1_hi(&self, j: usize) -> &Stencil<5> {
        &self.d1_hi[j]
    }

    /// Fourth-order (third at the ends) second-derivative stencil at node `j`.
    pub fn d2_hi(&self, j: usize) -> &Stencil<5> {
        &self.d2_hi[j]
    }
}

/// Wall spacing that resolves a layer of width `√(ν T)` with eight cells.
pub fn wall_spacing_rule(nu: f64, t_final: f64) -> f64 {
    (nu * t_final).sqrt() / 8.0
}

/// Builds the radial grid for a run.
pub fn build_grid(config: &SolverConfig) -> Result<RadialGrid> {
    let nu = config.grid_nu();
    let h = if nu > 0.0 {
        wall_spacing_rule(nu, config.t_final)
    } else {
        f64::INFINITY
    };
    RadialGrid::stretched(config.r_max, config.n_r, h, config.clustering)
}
