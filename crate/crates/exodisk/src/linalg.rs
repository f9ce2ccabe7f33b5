//! Tridiagonal and banded direct solvers with real matrices and complex right-hand sides.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Factored tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper_mod: Vec<f64>,
}

impl Tridiagonal {
    /// Factors the matrix with sub-diagonal `a[1..]`, diagonal `b`, super-diagonal `c[..n-1]`.
    pub fn factor(a: &[f64], b: &[f64], c: &[f64]) -> Result<Self> {
        let n = b.len();
        let mut inv_pivot = vec![0.0; n];
        let mut upper_mod = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let piv = b[i] - if i > 0 { a[i] * prev } else { 0.0 };
            if piv.abs() < 1e-300 || !piv.is_finite() {
                return Err(Error::Singular(i));
            }
            inv_pivot[i] = 1.0 / piv;
            prev = if i + 1 < n { c[i] * inv_pivot[i] } else { 0.0 };
            upper_mod[i] = prev;
        }
        Ok(Self { lower: a.to_vec(), inv_pivot, upper_mod })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Solves in place.
    pub fn solve(&self, d: &mut [Complex64]) {
        let n = self.len();
        d[0] *= self.inv_pivot[0];
        for i in 1..n {
            d[i] = (d[i] - d[i - 1] * self.lower[i]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            d[i] = d[i] - d[i + 1] * self.upper_mod[i];
        }
    }

    pub fn solve_real(&self, d: &mut [f64]) {
        let n = self.len();
        d[0] *= self.inv_pivot[0];
        for i in 1..n {
            d[i] = (d[i] - d[i - 1] * self.lower[i]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= d[i + 1] * self.upper_mod[i];
        }
    }
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals, LU-factored with partial pivoting.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ld: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

/// Accumulates entries of a banded matrix before factoring.
#[derive(Debug, Clone)]
pub struct BandBuilder {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
}

impl BandBuilder {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self { n, kl, ku, ab: vec![0.0; ld * n] }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "entry ({i},{j}) outside {}", self.n);
        assert!(j + self.kl >= i && i + self.ku >= j, "entry ({i},{j}) outside band");
        let ld = 2 * self.kl + self.ku + 1;
        let kv = self.kl + self.ku;
        self.ab[kv + i - j + j * ld] += v;
    }

    pub fn factor(self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let mut ab = self.ab;
        let at = |i: usize, j: usize| kv + i - j + j * ld;
        let mut piv = vec![0; n];
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = ab[at(j, j)].abs();
            for i in 1..=km {
                let v = ab[at(j + i, j)].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            piv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(at(j, c), at(j + jp, c));
                }
            }
            let d = ab[at(j, j)];
            for i in 1..=km {
                ab[at(j + i, j)] /= d;
            }
            for c in j + 1..=ju {
                let u = ab[at(j, c)];
                if u != 0.0 {
                    for i in 1..=km {
                        ab[at(j + i, c)] -= ab[at(j + i, j)] * u;
                    }
                }
            }
        }
        Ok(BandLu { n, kl, kv, ld, ab, piv })
    }
}

impl BandLu {
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.ab[self.kv + i - j + j * self.ld]
    }

    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            b.swap(j, self.piv[j]);
            let bj = b[j];
            for i in 1..=self.kl.min(n - 1 - j) {
                b[j + i] -= bj * self.get(j + i, j);
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.get(j, j);
            let bj = b[j];
            for i in j.saturating_sub(self.kv)..j {
                b[i] -= bj * self.get(i, j);
            }
        }
    }
}
