//! Binary shard format for state records.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    4 bytes  "QSTS"
//! version  u32      1
//! n        u16      matrix side N
//! count    u64      number of records
//! group    u8       StateGroup id
//! label    u8       binary label of the group
//! records  count x {
//!     seed       u64
//!     has_param  u8 (0 or 1)
//!     param      f64 (0.0 when absent)
//!     re         N*N f64, row-major
//!     im         N*N f64, row-major
//! }
//! checksum u64      FNV-1a over every preceding byte
//! ```
//!
//! A shard holds records of a single group; dimensions live in the manifest.

use std::fs;
use std::path::Path;

use crate::complex::ComplexMatrix;
use crate::error::{Error, Result};
use crate::hash::Fnv64;
use crate::quantum::{BipartiteDims, DensityMatrix};
use crate::sampler::{StateGroup, StateRecord};

pub const SHARD_MAGIC: &[u8; 4] = b"QSTS";
pub const SHARD_VERSION: u32 = 1;

/// Serialize records (single group) and write them to `path`.
/// Returns the shard checksum recorded in the manifest.
pub fn write_shard(records: &[StateRecord], path: &Path) -> Result<u64> {
    let bytes = encode_shard(records)?;
    let checksum = trailing_checksum(&bytes);
    if path.exists() {
        return Err(Error::PathExists(path.display().to_string()));
    }
    fs::write(path, &bytes)?;
    Ok(checksum)
}

/// Read a shard back, verifying checksum, version, and state invariants.
pub fn read_shard(path: &Path, dims: BipartiteDims) -> Result<Vec<StateRecord>> {
    let bytes = fs::read(path)?;
    decode_shard(&bytes, dims, &path.display().to_string())
}

pub fn encode_shard(records: &[StateRecord]) -> Result<Vec<u8>> {
    let group = match records.first() {
        Some(first) => first.group,
        // An empty shard still needs a group byte; callers producing empty
        // shards use Sep by convention and record count 0 in the manifest.
        None => StateGroup::Sep,
    };
    if records.iter().any(|r| r.group != group) {
        return Err(Error::InvalidConfig(
            "shard records must all belong to one group".into(),
        ));
    }
    let n = records.first().map(|r| r.rho.n()).unwrap_or(0);

    let mut out = Vec::with_capacity(32 + records.len() * (17 + 16 * n * n));
    out.extend_from_slice(SHARD_MAGIC);
    out.extend_from_slice(&SHARD_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u16).to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    out.push(group.id());
    out.push(group.label());

    for record in records {
        if record.rho.n() != n {
            return Err(Error::DimensionMismatch(
                "mixed matrix sizes within a shard".into(),
            ));
        }
        out.extend_from_slice(&record.seed.to_le_bytes());
        out.push(record.param.is_some() as u8);
        out.extend_from_slice(&record.param.unwrap_or(0.0).to_le_bytes());
        for &x in record.rho.mat().re_grid() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for &x in record.rho.mat().im_grid() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }

    let mut hasher = Fnv64::new();
    hasher.update(&out);
    out.extend_from_slice(&hasher.finish().to_le_bytes());
    Ok(out)
}

fn trailing_checksum(bytes: &[u8]) -> u64 {
    u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().expect("8-byte trailer"))
}

pub fn decode_shard(bytes: &[u8], dims: BipartiteDims, path: &str) -> Result<Vec<StateRecord>> {
    let fail = |reason: &str| Error::FormatError {
        path: path.to_string(),
        reason: reason.to_string(),
    };
    if bytes.len() < 28 {
        return Err(fail("truncated header"));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(trailer.try_into().unwrap());
    let mut hasher = Fnv64::new();
    hasher.update(body);
    let computed = hasher.finish();
    if stored != computed {
        return Err(Error::ChecksumMismatch {
            path: path.to_string(),
            stored,
            computed,
        });
    }

    let mut cursor = Cursor { bytes: body, pos: 0 };
    if cursor.take(4)? != &SHARD_MAGIC[..] {
        return Err(fail("bad magic"));
    }
    let version = cursor.u32()?;
    if version != SHARD_VERSION {
        return Err(fail(&format!("unsupported shard version {version}")));
    }
    let n = cursor.u16()? as usize;
    let count = cursor.u64()? as usize;
    let group = StateGroup::from_id(cursor.u8()?)?;
    let label = cursor.u8()?;
    if label != group.label() {
        return Err(fail("label does not match group"));
    }
    if count > 0 && n != dims.n() {
        return Err(Error::ArtifactMismatch(format!(
            "shard {path} has side {n}, manifest dims {dims} expect {}",
            dims.n()
        )));
    }

    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let seed = cursor.u64()?;
        let has_param = cursor.u8()?;
        let param_bits = cursor.u64()?;
        let param = (has_param != 0).then(|| f64::from_bits(param_bits));
        let mut re = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            re.push(f64::from_bits(cursor.u64()?));
        }
        let mut im = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            im.push(f64::from_bits(cursor.u64()?));
        }
        let mat = ComplexMatrix::from_parts(n, re, im)?;
        let rho = DensityMatrix::new(mat, dims)?;
        records.push(StateRecord {
            rho,
            group,
            label,
            param,
            seed,
        });
    }
    if cursor.pos != body.len() {
        return Err(fail("trailing bytes after records"));
    }
    Ok(records)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(Error::FormatError {
                path: String::new(),
                reason: "unexpected end of shard".into(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
