//! Human-readable dataset manifest: flat `key = value` lines in a fixed
//! order so identical configurations produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::split::SplitFractions;
use crate::error::{Error, Result};
use crate::quantum::BipartiteDims;
use crate::sampler::StateGroup;

pub const MANIFEST_FORMAT: &str = "entclass-dataset";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILENAME: &str = "manifest.txt";

/// Purpose of a corpus; also the seed-domain tag, so corpora generated for
/// different tasks from the same master seed never share records.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Pretrain,
    Classify,
    Eval,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Pretrain, Task::Classify, Task::Eval];

    pub fn name(&self) -> &'static str {
        match self {
            Task::Pretrain => "pretrain",
            Task::Classify => "classify",
            Task::Eval => "eval",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.name() == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown task '{name}'")))
    }

    /// Seed-domain tag mixed into every record seed.
    pub fn id(&self) -> u64 {
        match self {
            Task::Pretrain => 1,
            Task::Classify => 2,
            Task::Eval => 3,
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShardEntry {
    /// Path relative to the manifest file.
    pub path: String,
    pub group: StateGroup,
    pub count: u64,
    pub checksum: u64,
}

#[derive(Clone, Debug)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub dims: BipartiteDims,
    pub task: Task,
    pub master_seed: u64,
    pub rng_algorithm: String,
    /// Scale factor as originally given ("custom" when counts were explicit).
    pub scale_factor: String,
    pub fractions: SplitFractions,
    pub max_attempts: usize,
    /// Group counts in StateGroup declaration order.
    pub groups: Vec<(StateGroup, u64)>,
    pub shards: Vec<ShardEntry>,
}

impl DatasetManifest {
    pub fn group_count(&self, group: StateGroup) -> u64 {
        self.groups
            .iter()
            .find(|(g, _)| *g == group)
            .map(|(_, c)| *c)
            .unwrap_or(0)
    }

    pub fn total_records(&self) -> u64 {
        self.groups.iter().map(|(_, c)| c).sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.fractions.validate()?;
        for (group, count) in &self.groups {
            let shard_sum: u64 = self
                .shards
                .iter()
                .filter(|s| s.group == *group)
                .map(|s| s.count)
                .sum();
            if shard_sum != *count {
                return Err(Error::InvalidConfig(format!(
                    "shard counts for group '{group}' sum to {shard_sum}, expected {count}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format = {MANIFEST_FORMAT}");
        let _ = writeln!(out, "format_version = {}", self.format_version);
        let _ = writeln!(out, "tool_version = {}", self.tool_version);
        let _ = writeln!(out, "dims = {}", self.dims);
        let _ = writeln!(out, "task = {}", self.task);
        let _ = writeln!(out, "master_seed = {}", self.master_seed);
        let _ = writeln!(out, "rng_algorithm = {}", self.rng_algorithm);
        let _ = writeln!(out, "scale_factor = {}", self.scale_factor);
        let _ = writeln!(out, "split_train = {}", self.fractions.train);
        let _ = writeln!(out, "split_val = {}", self.fractions.val);
        let _ = writeln!(out, "split_test = {}", self.fractions.test);
        let _ = writeln!(out, "max_attempts = {}", self.max_attempts);
        for (group, count) in &self.groups {
            let _ = writeln!(
                out,
                "group = name={} count={} label={}",
                group.name(),
                count,
                group.label()
            );
        }
        for shard in &self.shards {
            let _ = writeln!(
                out,
                "shard = path={} group={} count={} checksum={:016x}",
                shard.path,
                shard.group.name(),
                shard.count,
                shard.checksum
            );
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if path.exists() {
            return Err(Error::PathExists(path.display().to_string()));
        }
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let fail = |reason: String| Error::FormatError {
            path: path.to_string(),
            reason,
        };

        let mut fields = std::collections::HashMap::new();
        let mut groups = Vec::new();
        let mut shards = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| fail(format!("line {}: expected 'key = value'", line_no + 1)))?;
            match key {
                "group" => {
                    let kv = parse_kv(value).map_err(|e| fail(format!("group entry: {e}")))?;
                    let group = StateGroup::from_name(kv.get("name").ok_or_else(|| {
                        fail("group entry missing name".into())
                    })?)?;
                    let count: u64 = kv
                        .get("count")
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| fail("group entry missing count".into()))?;
                    groups.push((group, count));
                }
                "shard" => {
                    let kv = parse_kv(value).map_err(|e| fail(format!("shard entry: {e}")))?;
                    let group = StateGroup::from_name(kv.get("group").ok_or_else(|| {
                        fail("shard entry missing group".into())
                    })?)?;
                    let count: u64 = kv
                        .get("count")
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| fail("shard entry missing count".into()))?;
                    let checksum = kv
                        .get("checksum")
                        .and_then(|c| u64::from_str_radix(c, 16).ok())
                        .ok_or_else(|| fail("shard entry missing checksum".into()))?;
                    let path = kv
                        .get("path")
                        .ok_or_else(|| fail("shard entry missing path".into()))?
                        .to_string();
                    shards.push(ShardEntry {
                        path,
                        group,
                        count,
                        checksum,
                    });
                }
                _ => {
                    fields.insert(key.to_string(), value.to_string());
                }
            }
        }

        let get = |key: &str| -> Result<String> {
            fields
                .get(key)
                .cloned()
                .ok_or_else(|| fail(format!("missing field '{key}'")))
        };
        if get("format")? != MANIFEST_FORMAT {
            return Err(fail("not a dataset manifest".into()));
        }
        let format_version: u32 = get("format_version")?
            .parse()
            .map_err(|_| fail("bad format_version".into()))?;
        if format_version != MANIFEST_VERSION {
            return Err(fail(format!(
                "unsupported manifest version {format_version}"
            )));
        }
        let parse_f64 = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| fail(format!("bad float in '{key}'")))
        };

        let manifest = DatasetManifest {
            format_version,
            tool_version: get("tool_version")?,
            dims: BipartiteDims::parse(&get("dims")?)?,
            task: Task::from_name(&get("task")?)?,
            master_seed: get("master_seed")?
                .parse()
                .map_err(|_| fail("bad master_seed".into()))?,
            rng_algorithm: get("rng_algorithm")?,
            scale_factor: get("scale_factor")?,
            fractions: SplitFractions {
                train: parse_f64("split_train")?,
                val: parse_f64("split_val")?,
                test: parse_f64("split_test")?,
            },
            max_attempts: get("max_attempts")?
                .parse()
                .map_err(|_| fail("bad max_attempts".into()))?,
            groups,
            shards,
        };
        manifest.validate()?;
        Ok(manifest)
    }
}

fn parse_kv(value: &str) -> std::result::Result<std::collections::HashMap<String, String>, String> {
    let mut out = std::collections::HashMap::new();
    for part in value.split_whitespace() {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got '{part}'"))?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_manifest() -> DatasetManifest {
        DatasetManifest {
            format_version: MANIFEST_VERSION,
            tool_version: crate::TOOL_VERSION.to_string(),
            dims: BipartiteDims::new(2, 2).unwrap(),
            task: Task::Pretrain,
            master_seed: 7,
            rng_algorithm: crate::rng::RNG_ALGORITHM_ID.to_string(),
            scale_factor: "1e-3".to_string(),
            fractions: SplitFractions::STANDARD,
            max_attempts: 1000,
            groups: vec![(StateGroup::Sep, 40), (StateGroup::GeneralEnt, 20)],
            shards: vec![
                ShardEntry {
                    path: "sep-00000.qsts".into(),
                    group: StateGroup::Sep,
                    count: 40,
                    checksum: 0xdeadbeef,
                },
                ShardEntry {
                    path: "general-ent-00000.qsts".into(),
                    group: StateGroup::GeneralEnt,
                    count: 20,
                    checksum: 0x1234,
                },
            ],
        }
    }

    #[test]
    fn text_roundtrip() {
        let manifest = sample_manifest();
        let text = manifest.to_text();
        let parsed = DatasetManifest::parse(&text, "test").unwrap();
        assert_eq!(parsed.to_text(), text);
        assert_eq!(parsed.master_seed, 7);
        assert_eq!(parsed.group_count(StateGroup::Sep), 40);
        assert_eq!(parsed.shards.len(), 2);
    }

    #[test]
    fn shard_count_mismatch_rejected() {
        let mut manifest = sample_manifest();
        manifest.shards[0].count = 39;
        let text = manifest.to_text();
        assert!(DatasetManifest::parse(&text, "test").is_err());
    }

    #[test]
    fn stable_output_order() {
        let a = sample_manifest().to_text();
        let b = sample_manifest().to_text();
        assert_eq!(a, b);
        assert!(a.starts_with("format = entclass-dataset\n"));
    }
}
