//! Token encoding, corpus generation, and persistence.

pub mod manifest;
pub mod shard;
pub mod split;

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::complex::ComplexMatrix;
use crate::error::{Error, Result};
use crate::quantum::{BipartiteDims, DensityMatrix};
use crate::rng::{derive_seed, SeededRng, RNG_ALGORITHM_ID};
use crate::sampler::{sample_group, StateGroup, StateRecord, DEFAULT_MAX_ATTEMPTS};

pub use manifest::{DatasetManifest, ShardEntry, Task, MANIFEST_FILENAME};
pub use shard::{read_shard, write_shard};
pub use split::{assign_splits, Split, SplitFractions};

/// Records per shard file before a new one is started.
pub const SHARD_CAPACITY: usize = 65_536;

/// One token per matrix element (row-major), two real features per token.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenSequence {
    features: Vec<[f64; 2]>,
}

impl TokenSequence {
    pub fn new(features: Vec<[f64; 2]>) -> Self {
        Self { features }
    }

    pub fn n_tokens(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[[f64; 2]] {
        &self.features
    }
}

/// Row-major scan of the density matrix: token `i*N + j` carries
/// `[Re rho_ij, Im rho_ij]`.
pub fn encode_state(rho: &DensityMatrix) -> TokenSequence {
    encode_matrix(rho.mat())
}

/// Same encoding for raw matrices (used on model reconstructions).
pub fn encode_matrix(mat: &ComplexMatrix) -> TokenSequence {
    let n = mat.n();
    let mut features = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let z = mat.get(i, j);
            features.push([z.re, z.im]);
        }
    }
    TokenSequence::new(features)
}

/// Exact inverse of [`encode_state`].
pub fn decode_tokens(seq: &TokenSequence, n: usize) -> Result<ComplexMatrix> {
    if seq.n_tokens() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "sequence has {} tokens, expected {}",
            seq.n_tokens(),
            n * n
        )));
    }
    Ok(ComplexMatrix::from_fn(n, |i, j| {
        let [re, im] = seq.features[i * n + j];
        Complex64::new(re, im)
    }))
}

/// Exact decimal scale factor. Parsed from the command-line string with
/// integer arithmetic so scaled counts never suffer binary rounding
/// (ceil(4_000_000 * 1e-3) must be 4000, not 4001).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecimalScale {
    numerator: u128,
    denominator: u128,
    label: String,
}

impl DecimalScale {
    pub fn parse(text: &str) -> Result<Self> {
        let fail = || Error::InvalidConfig(format!("cannot parse scale factor '{text}'"));
        let lower = text.trim().to_ascii_lowercase();
        let (mantissa, exponent) = match lower.split_once('e') {
            Some((m, e)) => (m, e.parse::<i32>().map_err(|_| fail())?),
            None => (lower.as_str(), 0),
        };
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        if int_part.starts_with('-') || !(-30..=30).contains(&exponent) || frac_part.len() > 30 {
            return Err(fail());
        }
        let digits = format!("{int_part}{frac_part}");
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(fail());
        }
        let value: u128 = digits.parse().map_err(|_| fail())?;
        if value == 0 {
            return Err(Error::InvalidConfig("scale factor must be positive".into()));
        }
        let power = exponent - frac_part.len() as i32;
        let (numerator, denominator) = if power >= 0 {
            (value * 10u128.pow(power as u32), 1)
        } else {
            (value, 10u128.pow((-power) as u32))
        };
        Ok(Self {
            numerator,
            denominator,
            label: text.trim().to_string(),
        })
    }

    /// ceil(count * scale).
    pub fn apply(&self, count: u64) -> u64 {
        let scaled = count as u128 * self.numerator;
        scaled.div_ceil(self.denominator) as u64
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Full-scale per-group sample counts for the three shipped dimension pairs.
pub fn table_counts(dims: BipartiteDims, task: Task) -> Result<Vec<(StateGroup, u64)>> {
    use StateGroup::*;
    let key = (dims.d1(), dims.d2());
    let counts: Vec<(StateGroup, u64)> = match (key, task) {
        ((2, 2), Task::Pretrain) => vec![
            (Sep, 4_000_000),
            (GeneralEnt, 2_000_000),
            (WernerEnt, 2_000_000),
            (MaxEnt, 2_000_000),
        ],
        ((2, 2), Task::Classify) => vec![
            (Sep, 1_000_000),
            (GeneralEnt, 300_000),
            (WernerEnt, 300_000),
            (MaxEnt, 300_000),
        ],
        ((2, 3), Task::Pretrain) => vec![(Sep, 8_000_000), (GeneralEnt, 8_000_000)],
        ((2, 3), Task::Classify) => vec![(Sep, 1_000_000), (GeneralEnt, 1_000_000)],
        ((3, 3), Task::Pretrain) => vec![
            (Sep, 6_000_000),
            (GeneralEnt, 2_000_000),
            (WernerEnt, 2_000_000),
            (MaxEnt, 2_000_000),
            (HorodeckiBound, 2_000_000),
            (HorodeckiEnt, 2_000_000),
        ],
        ((3, 3), Task::Classify) => vec![
            (Sep, 1_000_000),
            (GeneralEnt, 500_000),
            (WernerEnt, 500_000),
            (MaxEnt, 500_000),
            (HorodeckiBound, 500_000),
            (HorodeckiEnt, 500_000),
        ],
        (_, Task::Eval) => StateGroup::allowed_for(dims)
            .into_iter()
            .map(|g| (g, 100_000))
            .collect(),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "no table counts for dims {dims}; pass explicit group counts"
            )))
        }
    };
    Ok(counts)
}

/// Configuration for [`build_dataset`].
#[derive(Clone, Debug)]
pub struct DatasetConfig {
    pub dims: BipartiteDims,
    pub task: Task,
    /// Per-group record counts; groups must be valid for `dims`.
    pub counts: Vec<(StateGroup, u64)>,
    pub master_seed: u64,
    /// Label recorded in the manifest ("custom" when counts are explicit).
    pub scale_label: String,
    pub fractions: SplitFractions,
    pub max_attempts: usize,
    pub workers: usize,
}

impl DatasetConfig {
    /// Table counts scaled by an exact decimal factor.
    pub fn scaled(
        dims: BipartiteDims,
        task: Task,
        scale: &DecimalScale,
        master_seed: u64,
    ) -> Result<Self> {
        let counts = table_counts(dims, task)?
            .into_iter()
            .map(|(group, count)| (group, scale.apply(count)))
            .collect();
        Ok(Self {
            counts,
            scale_label: scale.label().to_string(),
            ..Self::with_counts(dims, task, Vec::new(), master_seed)
        })
    }

    /// Explicit per-group counts.
    pub fn with_counts(
        dims: BipartiteDims,
        task: Task,
        counts: Vec<(StateGroup, u64)>,
        master_seed: u64,
    ) -> Self {
        let fractions = match task {
            Task::Eval => SplitFractions::ALL_TEST,
            _ => SplitFractions::STANDARD,
        };
        Self {
            dims,
            task,
            counts,
            master_seed,
            scale_label: "custom".to_string(),
            fractions,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fractions.validate()?;
        if self.counts.is_empty() {
            return Err(Error::InvalidConfig("no groups requested".into()));
        }
        let allowed = StateGroup::allowed_for(self.dims);
        for (group, _) in &self.counts {
            if !allowed.contains(group) {
                return Err(Error::InvalidConfig(format!(
                    "group '{group}' is not defined for dims {}",
                    self.dims
                )));
            }
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidConfig("max_attempts must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }
}

/// Seed for one record's private RNG stream. The task tag keeps the
/// pretraining, classification, and evaluation seed domains disjoint.
pub fn record_seed(master_seed: u64, task: Task, group: StateGroup, index: u64) -> u64 {
    derive_seed(master_seed, &[task.id(), group.id() as u64, index])
}

fn generate_group(
    config: &DatasetConfig,
    group: StateGroup,
    count: u64,
) -> Result<Vec<StateRecord>> {
    let sample_one = |index: u64| -> Result<StateRecord> {
        let seed = record_seed(config.master_seed, config.task, group, index);
        let mut rng = SeededRng::new(seed);
        sample_group(group, config.dims, &mut rng, config.max_attempts)
    };

    let count = count as usize;
    if config.workers <= 1 || count < 256 {
        return (0..count as u64).map(sample_one).collect();
    }

    // Records are indexed, so chunked workers produce output identical to
    // the sequential path for any worker count.
    let mut results: Vec<Option<Result<StateRecord>>> = Vec::new();
    results.resize_with(count, || None);
    let chunk_size = count.div_ceil(config.workers);
    std::thread::scope(|scope| {
        for (chunk_index, chunk) in results.chunks_mut(chunk_size).enumerate() {
            let base = (chunk_index * chunk_size) as u64;
            scope.spawn(move || {
                for (offset, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(sample_one(base + offset as u64));
                }
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.expect("all chunks filled"))
        .collect()
}

/// Generate every requested group, write shards and the manifest under
/// `out_dir`, and return the manifest.
pub fn build_dataset(config: &DatasetConfig, out_dir: &Path) -> Result<DatasetManifest> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;

    let mut groups = Vec::new();
    let mut shards = Vec::new();
    for &(group, count) in &config.counts {
        let records = generate_group(config, group, count)?;
        if records.is_empty() {
            // Represent an empty group with an empty shard so the manifest
            // stays self-describing.
            let filename = format!("{}-{:05}.qsts", group.name(), 0);
            let checksum = write_shard(&[], &out_dir.join(&filename))?;
            shards.push(ShardEntry {
                path: filename,
                group,
                count: 0,
                checksum,
            });
        }
        for (shard_index, chunk) in records.chunks(SHARD_CAPACITY).enumerate() {
            let filename = format!("{}-{:05}.qsts", group.name(), shard_index);
            let checksum = write_shard(chunk, &out_dir.join(&filename))?;
            shards.push(ShardEntry {
                path: filename,
                group,
                count: chunk.len() as u64,
                checksum,
            });
        }
        groups.push((group, count));
    }

    let manifest = DatasetManifest {
        format_version: manifest::MANIFEST_VERSION,
        tool_version: crate::TOOL_VERSION.to_string(),
        dims: config.dims,
        task: config.task,
        master_seed: config.master_seed,
        rng_algorithm: RNG_ALGORITHM_ID.to_string(),
        scale_factor: config.scale_label.clone(),
        fractions: config.fractions,
        max_attempts: config.max_attempts,
        groups,
        shards,
    };
    manifest.validate()?;
    manifest.write(&out_dir.join(MANIFEST_FILENAME))?;
    Ok(manifest)
}

/// A record joined with its split assignment.
#[derive(Clone, Debug)]
pub struct SplitRecord {
    pub record: StateRecord,
    pub split: Split,
}

/// Load every shard of a manifest and attach deterministic split tags.
pub fn load_records(manifest_path: &Path) -> Result<(DatasetManifest, Vec<SplitRecord>)> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let mut out = Vec::with_capacity(manifest.total_records() as usize);
    for &(group, count) in &manifest.groups {
        let splits = assign_splits(
            manifest.master_seed,
            group,
            count as usize,
            manifest.fractions,
        )?;
        let mut index = 0usize;
        for entry in manifest.shards.iter().filter(|s| s.group == group) {
            let records = read_shard(&base.join(&entry.path), manifest.dims)?;
            if records.len() as u64 != entry.count {
                return Err(Error::ArtifactMismatch(format!(
                    "shard {} holds {} records, manifest says {}",
                    entry.path,
                    records.len(),
                    entry.count
                )));
            }
            for record in records {
                out.push(SplitRecord {
                    record,
                    split: splits[index],
                });
                index += 1;
            }
        }
        if index != count as usize {
            return Err(Error::ArtifactMismatch(format!(
                "group '{group}' has {index} records on disk, manifest says {count}"
            )));
        }
    }
    Ok((manifest, out))
}
