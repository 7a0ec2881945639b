//! Test support: independent oracles and helpers used by the test suites.
//!
//! Everything here is deliberately decoupled from the solver implementations
//! it is used to check. Eigenvalue oracles go through explicitly expanded
//! characteristic polynomials and closed-form root formulas; reduced states
//! go through direct index sums.

use num_complex::Complex64;

use crate::complex::ComplexMatrix;
use crate::quantum::BipartiteDims;
use crate::rng::SeededRng;

/// Coefficients of det(lambda I - A) = lambda^n + c[n-1] lambda^(n-1) + ... + c[0],
/// computed with the Faddeev-LeVerrier recurrence (trace-based, no
/// eigendecomposition involved).
pub fn characteristic_polynomial(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.n();
    let mut coeffs = vec![0.0; n];
    let mut m = a.clone();
    let mut c = -m.trace().re;
    coeffs[n - 1] = c;
    for k in 2..=n {
        // M <- A (M + c I)
        let mut shifted = m.clone();
        for i in 0..n {
            let d = shifted.get(i, i);
            shifted.set(i, i, d + Complex64::new(c, 0.0));
        }
        m = a.matmul(&shifted);
        c = -m.trace().re / k as f64;
        coeffs[n - k] = c;
    }
    coeffs
}

/// All-real roots of a monic quadratic x^2 + b x + c.
pub fn real_roots_quadratic(b: f64, c: f64) -> [f64; 2] {
    let disc = (b * b - 4.0 * c).max(0.0);
    let s = disc.sqrt();
    // Stable form: avoid cancellation on the small root.
    let q = -0.5 * (b + b.signum() * s);
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q, c / q) };
    let mut roots = [r1, r2];
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// All-real roots of a monic cubic x^3 + a x^2 + b x + c (trigonometric
/// method; valid when all roots are real, as for Hermitian spectra).
pub fn real_roots_cubic(a: f64, b: f64, c: f64) -> [f64; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let mut roots = if p >= -1e-300 {
        // Triple (or near-triple) root.
        let t = -cbrt(q);
        [t, t, t]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt();
        let phi = arg.clamp(-1.0, 1.0).acos() / 3.0;
        let two_thirds_pi = 2.0 * std::f64::consts::PI / 3.0;
        [
            m * phi.cos(),
            m * (phi - two_thirds_pi).cos(),
            m * (phi + two_thirds_pi).cos(),
        ]
    };
    for r in &mut roots {
        *r -= shift;
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// All-real roots of a monic quartic x^4 + a x^3 + b x^2 + c x + d via the
/// resolvent cubic (Ferrari); valid when all roots are real.
pub fn real_roots_quartic(a: f64, b: f64, c: f64, d: f64) -> [f64; 4] {
    let shift = a / 4.0;
    let p = b - 3.0 * a * a / 8.0;
    let q = c - a * b / 2.0 + a * a * a / 8.0;
    let r = d - a * c / 4.0 + a * a * b / 16.0 - 3.0 * a * a * a * a / 256.0;

    // Resolvent: y^3 - p y^2 - 4 r y + (4 p r - q^2) = 0; take the largest
    // root so y - p >= 0.
    let resolvent = real_roots_cubic(-p, -4.0 * r, 4.0 * p * r - q * q);
    let y = resolvent[2];

    let s_sq = (y - p).max(0.0);
    let mut roots = if s_sq.sqrt() < 1e-150 {
        // Biquadratic: t^4 + p t^2 + r.
        let t_sq = real_roots_quadratic(p, r);
        let hi = t_sq[1].max(0.0).sqrt();
        let lo = t_sq[0].max(0.0).sqrt();
        [-hi, -lo, lo, hi]
    } else {
        let s = s_sq.sqrt();
        let shift_q = q / (2.0 * s);
        let first = real_roots_quadratic(-s, y / 2.0 + shift_q);
        let second = real_roots_quadratic(s, y / 2.0 - shift_q);
        [first[0], first[1], second[0], second[1]]
    };
    for root in &mut roots {
        *root -= shift;
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// Eigenvalue oracle for Hermitian matrices with n in {1, 2, 3, 4}:
/// characteristic polynomial expansion plus closed-form root extraction.
pub fn eigenvalues_via_characteristic_polynomial(a: &ComplexMatrix) -> Vec<f64> {
    let c = characteristic_polynomial(a);
    match a.n() {
        1 => vec![-c[0]],
        2 => real_roots_quadratic(c[1], c[0]).to_vec(),
        3 => real_roots_cubic(c[2], c[1], c[0]).to_vec(),
        4 => real_roots_quartic(c[3], c[2], c[1], c[0]).to_vec(),
        n => panic!("characteristic-polynomial oracle supports n <= 4, got {n}"),
    }
}

fn cbrt(x: f64) -> f64 {
    x.signum() * x.abs().powf(1.0 / 3.0)
}

/// Reduced state on subsystem A: Tr_B(rho).
pub fn trace_out_b(mat: &ComplexMatrix, dims: BipartiteDims) -> ComplexMatrix {
    let (d1, d2) = (dims.d1(), dims.d2());
    ComplexMatrix::from_fn(d1, |i, j| {
        (0..d2).map(|k| mat.get(i * d2 + k, j * d2 + k)).sum()
    })
}

/// Reduced state on subsystem B: Tr_A(rho).
pub fn trace_out_a(mat: &ComplexMatrix, dims: BipartiteDims) -> ComplexMatrix {
    let (d1, d2) = (dims.d1(), dims.d2());
    ComplexMatrix::from_fn(d2, |k, l| {
        (0..d1).map(|i| mat.get(i * d2 + k, i * d2 + l)).sum()
    })
}

/// Random Hermitian matrix with N(0,1) real/imaginary parts symmetrized.
pub fn random_hermitian(n: usize, rng: &mut SeededRng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, |_, _| Complex64::new(rng.normal(), rng.normal()));
    g.add(&g.dagger()).scale(0.5)
}
