//! Complex QR decomposition via Householder reflections, plus the
//! phase-corrected unitary used for Haar sampling.

use num_complex::Complex64;

use crate::complex::ComplexMatrix;
use crate::error::{Error, Result};

/// |R[i][i]| below this is treated as a degenerate input.
pub const DEGENERATE_DIAG_TOL: f64 = 1e-300;

/// QR factorization of a square complex matrix: `a = Q R` with Q unitary and
/// R upper triangular.
pub fn qr_decompose(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.n();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);

    for k in 0..n.saturating_sub(1) {
        // Householder vector for column k, rows k..n.
        let mut v: Vec<Complex64> = (k..n).map(|i| r.get(i, k)).collect();
        let norm_x = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x <= DEGENERATE_DIAG_TOL {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        v[0] += phase * norm_x;
        let v_norm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm_sq <= DEGENERATE_DIAG_TOL {
            continue;
        }
        let tau = 2.0 / v_norm_sq;

        // R <- H R for the trailing block (H = I - tau v v').
        for j in k..n {
            let mut w = Complex64::new(0.0, 0.0);
            for (m, vm) in v.iter().enumerate() {
                w += vm.conj() * r.get(k + m, j);
            }
            w *= tau;
            for (m, vm) in v.iter().enumerate() {
                let cur = r.get(k + m, j);
                r.set(k + m, j, cur - vm * w);
            }
        }
        // Q <- Q H (accumulate the product of reflections).
        for i in 0..n {
            let mut w = Complex64::new(0.0, 0.0);
            for (m, vm) in v.iter().enumerate() {
                w += q.get(i, k + m) * vm;
            }
            w *= tau;
            for (m, vm) in v.iter().enumerate() {
                let cur = q.get(i, k + m);
                q.set(i, k + m, cur - w * vm.conj());
            }
        }
    }

    // Kill rounding residue below the diagonal.
    for i in 0..n {
        for j in 0..i {
            r.set(i, j, Complex64::new(0.0, 0.0));
        }
    }
    (q, r)
}

/// Unitary from the QR of `g` with every column of Q rotated by the phase of
/// the matching diagonal entry of R. For Ginibre input this yields a
/// Haar-distributed unitary.
pub fn qr_unitary(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = g.n();
    let (q, r) = qr_decompose(g);
    let mut u = ComplexMatrix::zeros(n);
    for j in 0..n {
        let d = r.get(j, j);
        let mag = d.norm();
        if mag < DEGENERATE_DIAG_TOL {
            return Err(Error::DegenerateInput { index: j });
        }
        let phase = d / mag;
        for i in 0..n {
            u.set(i, j, q.get(i, j) * phase);
        }
    }
    Ok(u)
}
