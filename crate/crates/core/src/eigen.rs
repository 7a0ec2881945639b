//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation factors the pivot's phase out of the off-diagonal entry and
//! then applies the classic real symmetric Jacobi rotation, so the full
//! transform stays unitary. Sides here never exceed single digits, where
//! Jacobi is simple and accurate.

use num_complex::Complex64;

use crate::complex::ComplexMatrix;
use crate::error::{Error, Result};

/// Hermiticity precondition for the eigensolver.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-8;
/// Convergence: off-diagonal Frobenius norm relative to ||A||_F.
pub const CONVERGENCE_TOL: f64 = 1e-12;
/// Sweep budget before reporting failure.
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let (values, _) = jacobi(a, false)?;
    Ok(values)
}

/// Eigenvalues (ascending) and matching eigenvector columns.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (values, vectors) = jacobi(a, true)?;
    Ok((values, vectors.expect("vectors requested")))
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.n();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                sum += a.get(p, q).norm_sqr();
            }
        }
    }
    sum.sqrt()
}

fn jacobi(input: &ComplexMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    let n = input.n();
    let deviation = input.hermiticity_error();
    if deviation.is_nan() || deviation > HERMITIAN_INPUT_TOL {
        return Err(Error::NonHermitianInput {
            deviation,
            tol: HERMITIAN_INPUT_TOL,
        });
    }

    let mut a = input.clone();
    // Symmetrize: rounding-level asymmetry within tolerance must not leak
    // into the iteration.
    for p in 0..n {
        a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
        for q in (p + 1)..n {
            let avg = (a.get(p, q) + a.get(q, p).conj()) * 0.5;
            a.set(p, q, avg);
            a.set(q, p, avg.conj());
        }
    }

    let mut vectors = want_vectors.then(|| ComplexMatrix::identity(n));
    let norm = a.frobenius_norm();
    let threshold = CONVERGENCE_TOL * norm;

    let mut converged = norm == 0.0 || n < 2;
    if !converged {
        for _sweep in 0..MAX_SWEEPS {
            if off_diagonal_norm(&a) <= threshold {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    rotate(&mut a, vectors.as_mut(), p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&a) <= threshold {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let sorted_vectors = vectors.map(|v| {
        ComplexMatrix::from_fn(n, |row, col| v.get(row, order[col]))
    });
    Ok((values, sorted_vectors))
}

/// One two-sided rotation zeroing the (p, q) pivot.
fn rotate(a: &mut ComplexMatrix, vectors: Option<&mut ComplexMatrix>, p: usize, q: usize) {
    let n = a.n();
    let apq = a.get(p, q);
    let mag = apq.norm();
    if mag <= f64::MIN_POSITIVE {
        return;
    }
    // Phase factor turning the pivot real: conj(phi) * apq = |apq|.
    let phi = apq / mag;
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;

    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        // Degenerate pivot; tan collapses to 1/(2 theta).
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // Plane rotation J: J[p][p] = c, J[p][q] = s,
    // J[q][p] = -s * conj(phi), J[q][q] = c * conj(phi).
    let phi_conj = phi.conj();

    // Right multiplication: columns p and q of A.
    for r in 0..n {
        let arp = a.get(r, p);
        let arq = a.get(r, q);
        a.set(r, p, arp * c - arq * (phi_conj * s));
        a.set(r, q, arp * s + arq * (phi_conj * c));
    }
    // Left multiplication by J-dagger: rows p and q.
    for col in 0..n {
        let apc = a.get(p, col);
        let aqc = a.get(q, col);
        a.set(p, col, apc * c - aqc * (phi * s));
        a.set(q, col, apc * s + aqc * (phi * c));
    }

    // The pivot is annihilated by construction; pin it and the diagonals
    // to keep rounding residue out of later sweeps.
    let h = t * mag;
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    a.set(p, p, Complex64::new(app - h, 0.0));
    a.set(q, q, Complex64::new(aqq + h, 0.0));

    if let Some(v) = vectors {
        for r in 0..n {
            let vrp = v.get(r, p);
            let vrq = v.get(r, q);
            v.set(r, p, vrp * c - vrq * (phi_conj * s));
            v.set(r, q, vrp * s + vrq * (phi_conj * c));
        }
    }
}
