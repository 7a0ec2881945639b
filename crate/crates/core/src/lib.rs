//! Generation, verification, and transformer-based classification of
//! bipartite quantum states.
//!
//! The crate covers the full pipeline:
//!
//! - [`complex`], [`eigen`], [`qr`], [`quantum`]: dense complex linear
//!   algebra, Hermitian eigensolving, and the partial-transpose (NPT)
//!   entanglement test;
//! - [`sampler`]: seeded generation of the five labeled state families;
//! - [`dataset`]: token encoding, binary shards, manifests, and splits;
//! - [`transformer`]: the masked-reconstruction transformer with exact
//!   gradients;
//! - [`training`]: pretraining, classifier fine-tuning, the frozen-encoder
//!   probe, and per-group evaluation.

pub mod complex;
pub mod dataset;
pub mod eigen;
pub mod error;
mod hash;
pub mod qr;
pub mod quantum;
pub mod rng;
pub mod sampler;
pub mod testing;
pub mod training;
pub mod transformer;

pub use complex::{kron, ComplexMatrix};
pub use error::{Error, Result};
pub use num_complex;
pub use quantum::{
    hermitian_distance, is_npt, partial_transpose, BipartiteDims, DensityMatrix, Subsystem,
};

/// Version stamp embedded in every artifact this toolkit writes.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
