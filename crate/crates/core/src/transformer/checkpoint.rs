//! Versioned binary checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic          4 bytes "QTCK"
//! version        u32     1
//! n_tokens       u32
//! embed_dim      u32
//! n_heads        u32
//! n_layers       u32
//! ffn_dim        u32
//! dropout        f64
//! mask_fraction  f64
//! tool_version   u16 length + utf8 bytes
//! n_tensors      u32
//! per tensor:    len u64, then len f64 values (declaration order)
//! checksum       u64     FNV-1a over every preceding byte
//! ```
//!
//! Tensors are stored as f64 regardless of the in-memory precision, so an
//! f32 model round-trips bit-exactly (widening is lossless).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hash::Fnv64;

use super::math::Scalar;
use super::model::Model;
use super::{ModelConfig, ModelParameters};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"QTCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint<T: Scalar>(model: &Model<T>) -> Vec<u8> {
    let config = &model.config;
    let tensors = model.params.tensors();

    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(config.n_tokens as u32).to_le_bytes());
    out.extend_from_slice(&(config.embed_dim as u32).to_le_bytes());
    out.extend_from_slice(&(config.n_heads as u32).to_le_bytes());
    out.extend_from_slice(&(config.n_layers as u32).to_le_bytes());
    out.extend_from_slice(&(config.ffn_dim as u32).to_le_bytes());
    out.extend_from_slice(&config.dropout.to_le_bytes());
    out.extend_from_slice(&config.mask_fraction.to_le_bytes());
    let tool = crate::TOOL_VERSION.as_bytes();
    out.extend_from_slice(&(tool.len() as u16).to_le_bytes());
    out.extend_from_slice(tool);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (_, data) in tensors {
        out.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for &v in data {
            out.extend_from_slice(&v.to_f64().expect("finite parameter").to_le_bytes());
        }
    }
    let mut hasher = Fnv64::new();
    hasher.update(&out);
    out.extend_from_slice(&hasher.finish().to_le_bytes());
    out
}

pub fn save_checkpoint<T: Scalar>(model: &Model<T>, path: &Path) -> Result<()> {
    if path.exists() {
        return Err(Error::PathExists(path.display().to_string()));
    }
    fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8], path: &str) -> Result<Model<T>> {
    let fail = |reason: &str| Error::FormatError {
        path: path.to_string(),
        reason: reason.to_string(),
    };
    if bytes.len() < 52 {
        return Err(fail("truncated checkpoint"));
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

    let mut pos = 0usize;
    let take = |pos: &mut usize, len: usize| -> Result<&[u8]> {
        if *pos + len > body.len() {
            return Err(Error::FormatError {
                path: path.to_string(),
                reason: "unexpected end of checkpoint".into(),
            });
        }
        let slice = &body[*pos..*pos + len];
        *pos += len;
        Ok(slice)
    };
    let u32_at = |pos: &mut usize| -> Result<u32> {
        Ok(u32::from_le_bytes(take(pos, 4)?.try_into().unwrap()))
    };
    let u64_at = |pos: &mut usize| -> Result<u64> {
        Ok(u64::from_le_bytes(take(pos, 8)?.try_into().unwrap()))
    };
    let f64_at = |pos: &mut usize| -> Result<f64> {
        Ok(f64::from_le_bytes(take(pos, 8)?.try_into().unwrap()))
    };

    if take(&mut pos, 4)? != &CHECKPOINT_MAGIC[..] {
        return Err(fail("bad magic"));
    }
    let version = u32_at(&mut pos)?;
    if version != CHECKPOINT_VERSION {
        return Err(fail(&format!("unsupported checkpoint version {version}")));
    }
    let config = ModelConfig {
        n_tokens: u32_at(&mut pos)? as usize,
        embed_dim: u32_at(&mut pos)? as usize,
        n_heads: u32_at(&mut pos)? as usize,
        n_layers: u32_at(&mut pos)? as usize,
        ffn_dim: u32_at(&mut pos)? as usize,
        dropout: f64_at(&mut pos)?,
        mask_fraction: f64_at(&mut pos)?,
    };
    config.validate()?;

    let tool_len = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
    let tool_bytes = take(&mut pos, tool_len)?;
    std::str::from_utf8(tool_bytes).map_err(|_| fail("tool version is not utf-8"))?;

    let n_tensors = u32_at(&mut pos)? as usize;
    let mut params = ModelParameters::<T>::zeros(&config);
    {
        let views = params.tensors_mut();
        if views.len() != n_tensors {
            return Err(fail(&format!(
                "checkpoint has {} tensors, model expects {}",
                n_tensors,
                views.len()
            )));
        }
        for (name, data) in views {
            let len = u64_at(&mut pos)? as usize;
            if len != data.len() {
                return Err(fail(&format!(
                    "tensor {name} has length {len}, expected {}",
                    data.len()
                )));
            }
            for slot in data {
                *slot = T::from_f64(f64_at(&mut pos)?)
                    .ok_or_else(|| Error::FormatError {
                        path: path.to_string(),
                        reason: format!("unrepresentable value in tensor {name}"),
                    })?;
            }
        }
    }
    if pos != body.len() {
        return Err(fail("trailing bytes after tensors"));
    }
    Model::new(config, params)
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Model<T>> {
    let bytes = fs::read(path)?;
    decode_checkpoint(&bytes, &path.display().to_string())
}
