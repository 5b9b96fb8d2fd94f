//! Banded storage with LU (partial pivoting) and Cholesky factorizations.
//!
//! Layouts follow LAPACK's `gbtrf`/`pbtrf` conventions: columns are stored
//! contiguously and a column holds only the entries inside the band.

use crate::error::{Error, Result};

/// General band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || i + self.ku < j || j + self.kl < i {
            None
        } else {
            Some(j * (self.kl + self.ku + 1) + self.ku + i - j)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.offset(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `value` to entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let k = self
            .offset(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band ({}, {})", self.kl, self.ku));
        self.data[k] += value;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.get(i, j) * x[j];
            }
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            y[j] = (lo..=hi).map(|i| self.get(i, j) * x[i]).sum();
        }
        y
    }

    /// LU factorization with partial pivoting.
    pub fn factor_lu(&self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ld * n];
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = if n == 0 { 0 } else { (j + kl).min(n - 1) };
            for i in lo..=hi {
                ab[j * ld + kv + i - j] = self.get(i, j);
            }
        }
        let idx = |r: usize, c: usize| c * ld + kv + r - c;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = &ab[idx(j, j)..=idx(j + km, j)];
            let (jp, best) = col
                .iter()
                .enumerate()
                .fold((0, 0.0_f64), |(bi, bv), (t, v)| {
                    if v.abs() > bv {
                        (t, v.abs())
                    } else {
                        (bi, bv)
                    }
                });
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::SingularMatrix { row: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(idx(j + jp, c), idx(j, c));
                }
            }
            let pivot = ab[idx(j, j)];
            for t in 1..=km {
                ab[idx(j + t, j)] /= pivot;
            }
            for c in j + 1..=ju {
                let f = ab[idx(j, c)];
                if f != 0.0 {
                    let (head, tail) = ab.split_at_mut(idx(j, c) + 1);
                    let multipliers = &head[idx(j, j) + 1..=idx(j, j) + km];
                    for (dst, m) in tail[..km].iter_mut().zip(multipliers) {
                        *dst -= m * f;
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            kl,
            kv,
            ld,
            ab,
            ipiv,
        })
    }

    /// Cholesky factorization of a symmetric positive definite band matrix.
    /// Only the lower band is read.
    pub fn factor_cholesky(&self) -> Result<BandCholesky> {
        let n = self.n;
        let kd = self.kl;
        let ld = kd + 1;
        let mut l = vec![0.0; ld * n];
        for j in 0..n {
            for t in 0..=kd.min(n.saturating_sub(1) - j) {
                l[j * ld + t] = self.get(j + t, j);
            }
        }
        for j in 0..n {
            let d = l[j * ld];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let d = d.sqrt();
            l[j * ld] = d;
            let km = kd.min(n - 1 - j);
            for t in 1..=km {
                l[j * ld + t] /= d;
            }
            for c in 1..=km {
                let f = l[j * ld + c];
                if f != 0.0 {
                    let (head, tail) = l.split_at_mut((j + c) * ld);
                    let src = &head[j * ld + c..=j * ld + km];
                    for (dst, s) in tail[..=km - c].iter_mut().zip(src) {
                        *dst -= s * f;
                    }
                }
            }
        }
        Ok(BandCholesky { n, kd, l })
    }
}

/// Banded LU factors `PA = LU`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ld: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.ab[c * self.ld + self.kv + r - c]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                for t in 1..=km {
                    b[j + t] -= self.at(j + t, j) * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.at(j, j);
            let bj = b[j];
            if bj != 0.0 {
                for r in j.saturating_sub(self.kv)..j {
                    b[r] -= self.at(r, j) * bj;
                }
            }
        }
    }

    /// Overwrites `b` with `A⁻ᵀ b`.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        for j in 0..n {
            let mut s = b[j];
            for r in j.saturating_sub(self.kv)..j {
                s -= self.at(r, j) * b[r];
            }
            b[j] = s / self.at(j, j);
        }
        for j in (0..n).rev() {
            let km = self.kl.min(n - 1 - j);
            let mut s = b[j];
            for t in 1..=km {
                s -= self.at(j + t, j) * b[j + t];
            }
            b[j] = s;
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
        }
    }
}

/// Banded Cholesky factor `A = LLᵀ`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    kd: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let (n, ld) = (self.n, self.kd + 1);
        for j in 0..n {
            b[j] /= self.l[j * ld];
            let bj = b[j];
            let km = self.kd.min(n - 1 - j);
            for t in 1..=km {
                b[j + t] -= self.l[j * ld + t] * bj;
            }
        }
        for j in (0..n).rev() {
            let km = self.kd.min(n - 1 - j);
            let mut s = b[j];
            for t in 1..=km {
                s -= self.l[j * ld + t] * b[j + t];
            }
            b[j] = s / self.l[j * ld];
        }
    }
}
