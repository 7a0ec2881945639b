//! Seeded sampling of the five labeled state families.

use num_complex::Complex64;

use crate::complex::{kron_vec, ComplexMatrix};
use crate::error::{Error, Result};
use crate::qr::qr_unitary;
use crate::quantum::{is_npt, BipartiteDims, DensityMatrix, PureState, DEFAULT_TOLERANCES};
use crate::rng::SeededRng;

/// Rejection-sampling budget for the general entangled family.
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

/// Generative family of a sample. The family, not the NPT test, is the
/// label source: `HorodeckiBound` states are PPT yet labeled entangled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateGroup {
    Sep,
    GeneralEnt,
    WernerEnt,
    MaxEnt,
    HorodeckiBound,
    HorodeckiEnt,
}

impl StateGroup {
    pub const ALL: [StateGroup; 6] = [
        StateGroup::Sep,
        StateGroup::GeneralEnt,
        StateGroup::WernerEnt,
        StateGroup::MaxEnt,
        StateGroup::HorodeckiBound,
        StateGroup::HorodeckiEnt,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StateGroup::Sep => "sep",
            StateGroup::GeneralEnt => "general-ent",
            StateGroup::WernerEnt => "werner-ent",
            StateGroup::MaxEnt => "max-ent",
            StateGroup::HorodeckiBound => "horodecki-bound",
            StateGroup::HorodeckiEnt => "horodecki-ent",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|g| g.name() == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown group '{name}'")))
    }

    pub fn id(&self) -> u8 {
        match self {
            StateGroup::Sep => 0,
            StateGroup::GeneralEnt => 1,
            StateGroup::WernerEnt => 2,
            StateGroup::MaxEnt => 3,
            StateGroup::HorodeckiBound => 4,
            StateGroup::HorodeckiEnt => 5,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|g| g.id() == id)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown group id {id}")))
    }

    /// Binary label: 0 for separable, 1 for every entangled family.
    pub fn label(&self) -> u8 {
        match self {
            StateGroup::Sep => 0,
            _ => 1,
        }
    }

    /// Families defined for the given dimensions.
    pub fn allowed_for(dims: BipartiteDims) -> Vec<StateGroup> {
        let (d1, d2) = (dims.d1(), dims.d2());
        if d1 == d2 {
            let mut groups = vec![
                StateGroup::Sep,
                StateGroup::GeneralEnt,
                StateGroup::WernerEnt,
                StateGroup::MaxEnt,
            ];
            if d1 == 3 {
                groups.push(StateGroup::HorodeckiBound);
                groups.push(StateGroup::HorodeckiEnt);
            }
            groups
        } else {
            vec![StateGroup::Sep, StateGroup::GeneralEnt]
        }
    }
}

impl std::fmt::Display for StateGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sampling regime for the Horodecki family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HorodeckiRegime {
    /// alpha in (3, 4]: PPT yet entangled.
    Bound,
    /// alpha in (4, 5]: NPT.
    Free,
}

/// One labeled sample with its generation provenance.
#[derive(Clone, Debug)]
pub struct StateRecord {
    pub rho: DensityMatrix,
    pub group: StateGroup,
    pub label: u8,
    /// Werner p or Horodecki alpha, where applicable.
    pub param: Option<f64>,
    /// Seed of the RNG stream that produced this record.
    pub seed: u64,
}

/// Ginibre matrix: every real and imaginary part an independent N(0, 1).
pub fn sample_ginibre(n: usize, rng: &mut SeededRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| Complex64::new(rng.normal(), rng.normal()))
}

fn haar_vector(dim: usize, rng: &mut SeededRng) -> Result<PureState> {
    let raw: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.normal(), rng.normal()))
        .collect();
    PureState::normalized(raw)
}

/// Pure product state |phi1> (x) |phi2| with Haar-distributed factors.
pub fn sample_pure_separable(dims: BipartiteDims, rng: &mut SeededRng) -> Result<StateRecord> {
    let phi1 = haar_vector(dims.d1(), rng)?;
    let phi2 = haar_vector(dims.d2(), rng)?;
    let psi = kron_vec(phi1.amplitudes(), phi2.amplitudes());
    let rho = DensityMatrix::new(ComplexMatrix::outer(&psi), dims)?;
    Ok(StateRecord {
        rho,
        group: StateGroup::Sep,
        label: StateGroup::Sep.label(),
        param: None,
        seed: rng.seed(),
    })
}

/// Maximally entangled projector (1/sqrt(d)) sum_i |ii>.
fn max_entangled_projector(d: usize) -> ComplexMatrix {
    let mut psi = vec![Complex64::new(0.0, 0.0); d * d];
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        psi[i * d + i] = Complex64::new(amp, 0.0);
    }
    ComplexMatrix::outer(&psi)
}

/// Werner state (1-p)|psi><psi| + p I/d^2 with p uniform in (0, d/(d+1));
/// every sample in that open interval is NPT.
pub fn sample_werner(d: usize, rng: &mut SeededRng) -> Result<StateRecord> {
    if d < 2 {
        return Err(Error::InvalidConfig(format!("werner dimension {d} < 2")));
    }
    let dims = BipartiteDims::new(d, d)?;
    let upper = d as f64 / (d as f64 + 1.0);
    let p = rng.uniform_open_closed() * upper;
    let n = d * d;
    let projector = max_entangled_projector(d);
    let mixed = ComplexMatrix::identity(n).scale(p / n as f64);
    let mat = projector.scale(1.0 - p).add(&mixed);
    let rho = DensityMatrix::new(mat, dims)?;
    Ok(StateRecord {
        rho,
        group: StateGroup::WernerEnt,
        label: StateGroup::WernerEnt.label(),
        param: Some(p),
        seed: rng.seed(),
    })
}

/// Trace-normalized Ginibre product G G' accepted only when NPT.
pub fn sample_general_entangled(
    dims: BipartiteDims,
    rng: &mut SeededRng,
    max_attempts: usize,
) -> Result<StateRecord> {
    if max_attempts == 0 {
        return Err(Error::InvalidConfig("max_attempts must be >= 1".into()));
    }
    for _ in 0..max_attempts {
        let g = sample_ginibre(dims.n(), rng);
        let w = g.matmul(&g.dagger());
        let trace = w.trace().re;
        if trace <= 0.0 || !trace.is_finite() {
            continue;
        }
        let rho = DensityMatrix::new(w.scale(1.0 / trace), dims)?;
        if is_npt(&rho, DEFAULT_TOLERANCES.npt)?.is_npt {
            return Ok(StateRecord {
                rho,
                group: StateGroup::GeneralEnt,
                label: StateGroup::GeneralEnt.label(),
                param: None,
                seed: rng.seed(),
            });
        }
    }
    Err(Error::RejectionBudgetExceeded {
        attempts: max_attempts,
    })
}

/// Maximally entangled state from a Haar unitary: column-major vec(U)
/// normalized by 1/sqrt(d).
pub fn sample_max_entangled(d: usize, rng: &mut SeededRng) -> Result<StateRecord> {
    if d < 2 {
        return Err(Error::InvalidConfig(format!("dimension {d} < 2")));
    }
    let u = qr_unitary(&sample_ginibre(d, rng))?;
    let rho = max_entangled_from_unitary(&u)?;
    Ok(StateRecord {
        rho,
        group: StateGroup::MaxEnt,
        label: StateGroup::MaxEnt.label(),
        param: None,
        seed: rng.seed(),
    })
}

/// Column-major vectorization of a unitary, normalized to a state.
/// Exposed separately so tests can inject a fixed unitary.
pub fn max_entangled_from_unitary(u: &ComplexMatrix) -> Result<DensityMatrix> {
    let d = u.n();
    let dims = BipartiteDims::new(d, d)?;
    let amp = 1.0 / (d as f64).sqrt();
    let mut psi = vec![Complex64::new(0.0, 0.0); d * d];
    for j in 0..d {
        for i in 0..d {
            // Column j occupies the block of positions j*d .. (j+1)*d.
            psi[j * d + i] = u.get(i, j) * amp;
        }
    }
    DensityMatrix::new(ComplexMatrix::outer(&psi), dims)
}

/// Horodecki 3x3 family: (2/7)|psi><psi| + (alpha/7) sigma+ + ((5-alpha)/7) sigma-.
/// Separable for alpha in [2,3], bound entangled in (3,4], free entangled in (4,5].
pub fn horodecki_state(alpha: f64) -> Result<DensityMatrix> {
    if !(2.0..=5.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let dims = BipartiteDims::new(3, 3)?;
    let basis = |a: usize, b: usize| a * 3 + b;
    let third = Complex64::new(1.0 / 3.0, 0.0);

    let mut sigma_plus = ComplexMatrix::zeros(9);
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        let k = basis(a, b);
        sigma_plus.set(k, k, third);
    }
    let mut sigma_minus = ComplexMatrix::zeros(9);
    for (a, b) in [(1, 0), (2, 1), (0, 2)] {
        let k = basis(a, b);
        sigma_minus.set(k, k, third);
    }
    let projector = max_entangled_projector(3);

    let mat = projector
        .scale(2.0 / 7.0)
        .add(&sigma_plus.scale(alpha / 7.0))
        .add(&sigma_minus.scale((5.0 - alpha) / 7.0));
    DensityMatrix::new(mat, dims)
}

/// Horodecki sample with alpha uniform in (3, 4] (bound) or (4, 5] (free).
pub fn sample_horodecki(regime: HorodeckiRegime, rng: &mut SeededRng) -> Result<StateRecord> {
    let (base, group) = match regime {
        HorodeckiRegime::Bound => (3.0, StateGroup::HorodeckiBound),
        HorodeckiRegime::Free => (4.0, StateGroup::HorodeckiEnt),
    };
    let alpha = base + rng.uniform_open_closed();
    let rho = horodecki_state(alpha)?;
    Ok(StateRecord {
        rho,
        group,
        label: group.label(),
        param: Some(alpha),
        seed: rng.seed(),
    })
}

/// Dispatch on the family; used by the dataset builder.
pub fn sample_group(
    group: StateGroup,
    dims: BipartiteDims,
    rng: &mut SeededRng,
    max_attempts: usize,
) -> Result<StateRecord> {
    if !StateGroup::allowed_for(dims).contains(&group) {
        return Err(Error::InvalidConfig(format!(
            "group '{group}' is not defined for dims {dims}"
        )));
    }
    match group {
        StateGroup::Sep => sample_pure_separable(dims, rng),
        StateGroup::GeneralEnt => sample_general_entangled(dims, rng, max_attempts),
        StateGroup::WernerEnt => sample_werner(dims.d1(), rng),
        StateGroup::MaxEnt => sample_max_entangled(dims.d1(), rng),
        StateGroup::HorodeckiBound => sample_horodecki(HorodeckiRegime::Bound, rng),
        StateGroup::HorodeckiEnt => sample_horodecki(HorodeckiRegime::Free, rng),
    }
}
