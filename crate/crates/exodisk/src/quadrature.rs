//! Finite-difference weights and interpolatory quadrature on arbitrary node sets.

/// Fornberg's recursion: weights `w[m][k]` such that
/// `f^(m)(z) ≈ Σ_k w[m][k] f(x[k])` for `m = 0..=order`.
pub fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Start index of a `width`-point stencil around node `j` on `n` nodes,
/// shifted inward near the ends.
pub fn stencil_start(j: usize, width: usize, n: usize) -> usize {
    let half = (width - 1) / 2;
    j.saturating_sub(half).min(n - width)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub const GL2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];

pub const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Maps Gauss nodes to [a, b].
pub fn gauss_points<const N: usize>(rule: &[(f64, f64); N], a: f64, b: f64) -> [(f64, f64); N] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); N];
    for (o, &(t, w)) in out.iter_mut().zip(rule) {
        *o = (mid + half * t, half * w);
    }
    out
}

/// Index of the interval `[x[j], x[j+1]]` containing `z` (clamped).
pub fn locate(x: &[f64], z: f64) -> usize {
    let j = x.partition_point(|&v| v <= z);
    j.saturating_sub(1).min(x.len() - 2)
}

/// Weights for `∫_a^b f` from samples on `x`, integrating the local cubic
/// interpolant on each interval exactly.
pub fn integration_weights(x: &[f64], a: f64, b: f64) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    if n < 2 || b <= a {
        return w;
    }
    let width = n.min(4);
    for j in locate(x, a)..n - 1 {
        let lo = a.max(x[j]);
        let hi = b.min(x[j + 1]);
        if hi <= lo {
            if x[j] >= b {
                break;
            }
            continue;
        }
        let s = stencil_start(j, width, n).min(j);
        let nodes = &x[s..s + width];
        for (p, q) in gauss_points(&GL2, lo, hi) {
            let l = &fd_weights(p, nodes, 0)[0];
            for (k, lk) in l.iter().enumerate() {
                w[s + k] += q * lk;
            }
        }
    }
    w
}

/// Cubic-interpolant value of samples `f` on `x` at `z`.
pub fn interpolate(x: &[f64], f: &[f64], z: f64) -> f64 {
    let n = x.len();
    let width = n.min(4);
    let j = locate(x, z);
    let s = stencil_start(j, width, n).min(j);
    let l = &fd_weights(z, &x[s..s + width], 0)[0];
    l.iter().zip(&f[s..s + width]).map(|(a, b)| a * b).sum()
}

/// Running integrals `F[j] = ∫_{x0}^{x_j} f` of the piecewise cubic interpolant.
pub fn cumulative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    let width = n.min(4);
    for j in 0..n.saturating_sub(1) {
        let s = stencil_start(j, width, n).min(j);
        let nodes = &x[s..s + width];
        let mut acc = 0.0;
        for (p, q) in gauss_points(&GL2, x[j], x[j + 1]) {
            let l = &fd_weights(p, nodes, 0)[0];
            acc += q * l.iter().zip(&f[s..s + width]).map(|(a, b)| a * b).sum::<f64>();
        }
        out[j + 1] = out[j] + acc;
    }
    out
}

/// Composite Simpson weights for `m` (odd) equispaced points on a segment of length `len`.
pub fn simpson_weights(m: usize, len: f64) -> Vec<f64> {
    assert!(m >= 3 && m % 2 == 1, "Simpson needs an odd point count >= 3");
    let h = len / (m - 1) as f64;
    (0..m)
        .map(|k| {
            let c = if k == 0 || k == m - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}
