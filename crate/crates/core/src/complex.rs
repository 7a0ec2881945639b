//! Dense square complex matrices stored as separate real and imaginary grids.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix with row-major `re`/`im` storage.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            re: vec![0.0; n * n],
            im: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.re[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let z = f(i, j);
                m.re[i * n + j] = z.re;
                m.im[i * n + j] = z.im;
            }
        }
        m
    }

    /// Build from row-major `(re, im)` grids; both must have length `n * n`.
    pub fn from_parts(n: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != n * n || im.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries per grid, got re={} im={}",
                n * n,
                re.len(),
                im.len()
            )));
        }
        Ok(Self { n, re, im })
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n);
        for (i, z) in entries.iter().enumerate() {
            m.re[i * n + i] = z.re;
            m.im[i * n + i] = z.im;
        }
        m
    }

    /// Outer product |v><v| of a complex vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        Self::from_fn(n, |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let k = i * self.n + j;
        Complex64::new(self.re[k], self.im[k])
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        let k = i * self.n + j;
        self.re[k] = z.re;
        self.im[k] = z.im;
    }

    pub fn re_grid(&self) -> &[f64] {
        &self.re
    }

    pub fn im_grid(&self) -> &[f64] {
        &self.im
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(self.im.iter()).all(|x| x.is_finite())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.re
            .iter()
            .chain(self.im.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// ||A - A'||_F, the deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let d = self.get(i, j) - self.get(j, i).conj();
                sum += d.norm_sqr();
            }
        }
        sum.sqrt()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for k in 0..self.n * self.n {
            out.re[k] += other.re[k];
            out.im[k] += other.im[k];
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for k in 0..self.n * self.n {
            out.re[k] -= other.re[k];
            out.im[k] -= other.im[k];
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for k in 0..self.n * self.n {
            out.re[k] *= factor;
            out.im[k] *= factor;
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    let idx = i * n + j;
                    out.re[idx] += a.re * b.re - a.im * b.im;
                    out.im[idx] += a.re * b.im + a.im * b.re;
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        let mut max = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                max = max.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        max
    }
}

/// Kronecker product: `out[(i*b.n + k), (j*b.n + l)] = a[i,j] * b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.n(), b.n());
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a.get(i, j);
            for k in 0..nb {
                for l in 0..nb {
                    out.set(i * nb + k, j * nb + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Kronecker product of complex vectors: `out[i*b_len + k] = a[i] * b[k]`.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}
