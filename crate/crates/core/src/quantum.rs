//! Quantum-state types and predicates: density matrices, partial transpose,
//! the Peres-Horodecki NPT test, and the Hermitian batch distance.

use num_complex::Complex64;

use crate::complex::ComplexMatrix;
use crate::eigen::hermitian_eigenvalues;
use crate::error::{Error, Result};

/// Default tolerances for state validation and the NPT test, overridable
/// per call through the `*_with` variants.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// ||rho - rho'||_F bound for Hermiticity.
    pub hermitian: f64,
    /// |Tr(rho) - 1| bound.
    pub trace: f64,
    /// Lower bound -psd on the minimum eigenvalue.
    pub psd: f64,
    /// NPT verdict threshold on the minimum partial-transpose eigenvalue.
    pub npt: f64,
}

pub const DEFAULT_TOLERANCES: Tolerances = Tolerances {
    hermitian: 1e-10,
    trace: 1e-10,
    psd: 1e-10,
    npt: 1e-10,
};

/// Tensor factor of a bipartite split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Dimensions of a bipartite space; the shipped experiments use
/// (2,2), (2,3) and (3,3) but any d1, d2 >= 2 is accepted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BipartiteDims {
    d1: usize,
    d2: usize,
}

impl BipartiteDims {
    pub fn new(d1: usize, d2: usize) -> Result<Self> {
        if d1 < 2 || d2 < 2 {
            return Err(Error::InvalidConfig(format!(
                "bipartite dimensions must both be >= 2, got {d1}x{d2}"
            )));
        }
        Ok(Self { d1, d2 })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    /// Total dimension N = d1 * d2.
    pub fn n(&self) -> usize {
        self.d1 * self.d2
    }

    /// Parse "2x2" / "2x3" / "3x3".
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split('x');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::InvalidConfig(format!("cannot parse dims '{text}'")));
        };
        let d1: usize = a
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("cannot parse dims '{text}'")))?;
        let d2: usize = b
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("cannot parse dims '{text}'")))?;
        Self::new(d1, d2)
    }
}

impl std::fmt::Display for BipartiteDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.d1, self.d2)
    }
}

/// Validated bipartite density matrix: Hermitian, unit trace, positive
/// semidefinite within the configured tolerances.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    dims: BipartiteDims,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix, dims: BipartiteDims) -> Result<Self> {
        Self::new_with(mat, dims, &DEFAULT_TOLERANCES)
    }

    pub fn new_with(mat: ComplexMatrix, dims: BipartiteDims, tol: &Tolerances) -> Result<Self> {
        if mat.n() != dims.n() {
            return Err(Error::DimensionMismatch(format!(
                "matrix side {} does not match dims {} (N = {})",
                mat.n(),
                dims,
                dims.n()
            )));
        }
        if !mat.is_finite() {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = mat.hermiticity_error();
        if herm > tol.hermitian {
            return Err(Error::InvalidState(format!(
                "not Hermitian: deviation {herm:.3e}"
            )));
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > tol.trace || trace.im.abs() > tol.trace {
            return Err(Error::InvalidState(format!(
                "trace {} is not 1",
                trace.re
            )));
        }
        let eigenvalues = hermitian_eigenvalues(&mat)?;
        let min = eigenvalues[0];
        if min < -tol.psd {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite: min eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { mat, dims })
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn n(&self) -> usize {
        self.dims.n()
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        self.mat.matmul(&self.mat).trace().re
    }
}

/// Normalized pure state vector.
#[derive(Clone, Debug)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::InvalidState(format!(
                "state vector norm {norm} is not 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize zero vector".into()));
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Projector |psi><psi|.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes)
    }
}

/// Partial transpose of a raw matrix over the given bipartite split.
pub fn partial_transpose_mat(
    mat: &ComplexMatrix,
    dims: BipartiteDims,
    subsystem: Subsystem,
) -> Result<ComplexMatrix> {
    if mat.n() != dims.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix side {} does not match dims {}",
            mat.n(),
            dims
        )));
    }
    let (d1, d2) = (dims.d1(), dims.d2());
    let mut out = ComplexMatrix::zeros(mat.n());
    for i in 0..d1 {
        for j in 0..d1 {
            for k in 0..d2 {
                for l in 0..d2 {
                    let value = mat.get(i * d2 + k, j * d2 + l);
                    match subsystem {
                        // ((i,k),(j,l)) -> ((i,l),(j,k))
                        Subsystem::B => out.set(i * d2 + l, j * d2 + k, value),
                        // ((i,k),(j,l)) -> ((j,k),(i,l))
                        Subsystem::A => out.set(j * d2 + k, i * d2 + l, value),
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Partial transpose of a density matrix.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: Subsystem) -> ComplexMatrix {
    partial_transpose_mat(rho.mat(), rho.dims(), subsystem)
        .expect("density matrix dims are consistent by construction")
}

/// Outcome of the Peres-Horodecki test.
#[derive(Clone, Copy, Debug)]
pub struct NptVerdict {
    pub is_npt: bool,
    /// Minimum eigenvalue of the partial transpose (diagnostic).
    pub min_pt_eigenvalue: f64,
}

/// Peres-Horodecki criterion: NPT iff the partial transpose has an
/// eigenvalue below -tol. The spectra for subsystem A and B coincide;
/// subsystem B is used.
pub fn is_npt(rho: &DensityMatrix, tol: f64) -> Result<NptVerdict> {
    let pt = partial_transpose(rho, Subsystem::B);
    let eigenvalues = hermitian_eigenvalues(&pt)?;
    let min = eigenvalues[0];
    Ok(NptVerdict {
        is_npt: min < -tol,
        min_pt_eigenvalue: min,
    })
}

/// Batch metric: mean over the batch of sqrt(||A - A'||_F). Zero exactly
/// when every matrix in the batch is Hermitian.
pub fn hermitian_distance(batch: &[ComplexMatrix]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let sum: f64 = batch.iter().map(|a| a.hermiticity_error().sqrt()).sum();
    Ok(sum / batch.len() as f64)
}
