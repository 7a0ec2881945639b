//! Minimal dense float math for the model: a row-major matrix type and the
//! scalar trait that lets the same code run in f32 (training) and f64
//! (finite-difference verification).

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Lift an f64 constant into the working precision.
#[inline]
pub fn c<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("constant representable")
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// self @ other: (m,k) x (k,n) -> (m,n). The k-loop is unrolled by four
    /// so each pass over the output row amortizes four rank-1 updates.
    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows);
        let n = other.cols;
        let mut out = Mat::zeros(self.rows, n);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * n..(i + 1) * n];
            let mut k = 0;
            while k + 4 <= self.cols {
                let a0 = a_row[k];
                let a1 = a_row[k + 1];
                let a2 = a_row[k + 2];
                let a3 = a_row[k + 3];
                let b0 = &other.data[k * n..(k + 1) * n];
                let b1 = &other.data[(k + 1) * n..(k + 2) * n];
                let b2 = &other.data[(k + 2) * n..(k + 3) * n];
                let b3 = &other.data[(k + 3) * n..(k + 4) * n];
                for ((((o, &v0), &v1), &v2), &v3) in
                    out_row.iter_mut().zip(b0).zip(b1).zip(b2).zip(b3)
                {
                    *o += a0 * v0 + a1 * v1 + a2 * v2 + a3 * v3;
                }
                k += 4;
            }
            while k < self.cols {
                let a = a_row[k];
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
                k += 1;
            }
        }
        out
    }

    /// self @ other^T: (m,k) x (n,k) -> (m,n).
    pub fn matmul_bt(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.cols);
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..other.rows {
                out.set(i, j, dot(a_row, other.row(j)));
            }
        }
        out
    }

    /// self^T @ other: (s,m) x (s,n) -> (m,n), accumulated into `out`.
    /// The s-loop is unrolled by four to cut output-row store traffic.
    pub fn matmul_at_into(&self, other: &Mat<T>, out: &mut Mat<T>) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(out.rows, self.cols);
        assert_eq!(out.cols, other.cols);
        let n = other.cols;
        let mut s = 0;
        while s + 4 <= self.rows {
            let (a0, a1, a2, a3) = (self.row(s), self.row(s + 1), self.row(s + 2), self.row(s + 3));
            let b0 = &other.data[s * n..(s + 1) * n];
            let b1 = &other.data[(s + 1) * n..(s + 2) * n];
            let b2 = &other.data[(s + 2) * n..(s + 3) * n];
            let b3 = &other.data[(s + 3) * n..(s + 4) * n];
            for i in 0..self.cols {
                let (x0, x1, x2, x3) = (a0[i], a1[i], a2[i], a3[i]);
                let out_row = out.row_mut(i);
                for ((((o, &v0), &v1), &v2), &v3) in
                    out_row.iter_mut().zip(b0).zip(b1).zip(b2).zip(b3)
                {
                    *o += x0 * v0 + x1 * v1 + x2 * v2 + x3 * v3;
                }
            }
            s += 4;
        }
        while s < self.rows {
            let a_row = self.row(s);
            let b_row = &other.data[s * n..(s + 1) * n];
            for (i, &a) in a_row.iter().enumerate() {
                let out_row = out.row_mut(i);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
            s += 1;
        }
    }

    pub fn add_assign(&mut self, other: &Mat<T>) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Dot product with eight independent accumulators; the split dependency
/// chains give the compiler room to vectorize, and the summation order is
/// fixed, so results stay bitwise reproducible.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let a_chunks = a.chunks_exact(8);
    let b_chunks = b.chunks_exact(8);
    let tail_a = a_chunks.remainder();
    let tail_b = b_chunks.remainder();
    for (ca, cb) in a_chunks.zip(b_chunks) {
        let ca: &[T; 8] = ca.try_into().expect("exact chunk");
        let cb: &[T; 8] = cb.try_into().expect("exact chunk");
        for lane in 0..8 {
            acc[lane] += ca[lane] * cb[lane];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in tail_a.iter().zip(tail_b) {
        tail += x * y;
    }
    let pairs = [acc[0] + acc[1], acc[2] + acc[3], acc[4] + acc[5], acc[6] + acc[7]];
    (pairs[0] + pairs[1]) + (pairs[2] + pairs[3]) + tail
}

/// GELU with the tanh approximation (smooth, so finite differences agree
/// closely with the analytic gradient).
#[inline]
pub fn gelu<T: Scalar>(x: T) -> T {
    let k: T = c(0.797_884_560_802_865_4); // sqrt(2/pi)
    let a: T = c(0.044715);
    let half: T = c(0.5);
    let inner = k * (x + a * x * x * x);
    half * x * (T::one() + inner.tanh())
}

#[inline]
pub fn gelu_grad<T: Scalar>(x: T) -> T {
    let k: T = c(0.797_884_560_802_865_4);
    let a: T = c(0.044715);
    let half: T = c(0.5);
    let three: T = c(3.0);
    let inner = k * (x + a * x * x * x);
    let t = inner.tanh();
    let sech_sq = T::one() - t * t;
    half * (T::one() + t) + half * x * sech_sq * k * (T::one() + three * a * x * x)
}

/// In-place max-subtracted softmax over a slice.
pub fn softmax_inplace<T: Scalar>(row: &mut [T]) {
    let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x = *x / sum;
    }
}
