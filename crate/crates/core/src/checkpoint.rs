//! Binary parameter container shared by fine and coarse models.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes
//! version      u32
//! manifest_len u64
//! manifest     JSON: {"model": <any>, "tensors": [{"name", "shape", "offset"}]}
//! payload      f64 values of every tensor, back to back
//! ```
//!
//! `offset` is the byte offset of a tensor inside the payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CheckpointError, Result};
use crate::numerics::{ParamStore, Tensor};

pub const FORMAT_VERSION: u32 = 1;
pub const FINE_MAGIC: &[u8; 8] = b"DUET0001";
pub const COARSE_MAGIC: &[u8; 8] = b"DUETC001";

const HEADER_LEN: usize = 8 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub model: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
}

/// Byte offsets implied by a list of shapes.
pub fn offsets_from_shapes<'a>(shapes: impl IntoIterator<Item = &'a [usize]>) -> Vec<u64> {
    let mut offset = 0u64;
    shapes
        .into_iter()
        .map(|s| {
            let here = offset;
            offset += 8 * s.iter().product::<usize>() as u64;
            here
        })
        .collect()
}

pub fn encode(magic: &[u8; 8], model: serde_json::Value, store: &ParamStore) -> Result<Vec<u8>> {
    let shapes: Vec<&[usize]> = store.iter().map(|p| p.value().shape()).collect();
    let offsets = offsets_from_shapes(shapes.iter().copied());
    let manifest = Manifest {
        model,
        tensors: store
            .iter()
            .zip(offsets)
            .map(|(p, offset)| TensorEntry {
                name: p.name().to_string(),
                shape: p.value().shape().to_vec(),
                offset,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest)?;
    let mut out = Vec::with_capacity(HEADER_LEN + json.len() + 8 * store.num_scalars());
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in store.iter() {
        for x in p.value().data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save(path: &Path, magic: &[u8; 8], model: serde_json::Value, store: &ParamStore) -> Result<()> {
    fs::write(path, encode(magic, model, store)?)?;
    Ok(())
}

/// Decodes a container, returning the manifest and every tensor in order.
pub fn decode(bytes: &[u8], magic: &[u8; 8]) -> Result<(Manifest, Vec<(String, Tensor)>)> {
    let need = |needed: usize| -> Result<()> {
        if bytes.len() < needed {
            Err(CheckpointError::Truncated {
                needed,
                have: bytes.len(),
            }
            .into())
        } else {
            Ok(())
        }
    };
    need(8)?;
    if &bytes[..8] != magic {
        return Err(CheckpointError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(&bytes[..8]).into_owned(),
        }
        .into());
    }
    need(HEADER_LEN)?;
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version {
            expected: FORMAT_VERSION,
            found: version,
        }
        .into());
    }
    let manifest_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    need(HEADER_LEN + manifest_len)?;
    let manifest: Manifest = serde_json::from_slice(&bytes[HEADER_LEN..HEADER_LEN + manifest_len])
        .map_err(|e| CheckpointError::Inconsistent(format!("manifest: {e}")))?;
    let payload = &bytes[HEADER_LEN + manifest_len..];

    let expected = offsets_from_shapes(manifest.tensors.iter().map(|t| t.shape.as_slice()));
    let mut tensors = Vec::with_capacity(manifest.tensors.len());
    for (entry, want) in manifest.tensors.iter().zip(expected) {
        if entry.offset != want {
            return Err(CheckpointError::Inconsistent(format!(
                "tensor {} stored at offset {} but shapes imply {}",
                entry.name, entry.offset, want
            ))
            .into());
        }
        let len: usize = entry.shape.iter().product();
        let start = entry.offset as usize;
        let end = start + 8 * len;
        if payload.len() < end {
            return Err(CheckpointError::Truncated {
                needed: HEADER_LEN + manifest_len + end,
                have: bytes.len(),
            }
            .into());
        }
        let data = payload[start..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push((entry.name.clone(), Tensor::new(entry.shape.clone(), data)?));
    }
    let used = expected_payload_len(&manifest);
    if payload.len() != used {
        return Err(CheckpointError::Inconsistent(format!(
            "payload has {} bytes, manifest describes {used}",
            payload.len()
        ))
        .into());
    }
    Ok((manifest, tensors))
}

fn expected_payload_len(m: &Manifest) -> usize {
    m.tensors
        .iter()
        .map(|t| 8 * t.shape.iter().product::<usize>())
        .sum()
}

pub fn load(path: &Path, magic: &[u8; 8]) -> Result<(Manifest, Vec<(String, Tensor)>)> {
    let bytes = fs::read(path)?;
    decode(&bytes, magic)
}

/// Overwrites every parameter of `store` from `tensors`, requiring an exact
/// name and shape match.
pub fn restore_into(store: &mut ParamStore, tensors: Vec<(String, Tensor)>) -> Result<()> {
    if tensors.len() != store.len() {
        return Err(CheckpointError::Inconsistent(format!(
            "checkpoint has {} tensors, model expects {}",
            tensors.len(),
            store.len()
        ))
        .into());
    }
    for (name, value) in tensors {
        let id = store
            .find(&name)
            .ok_or_else(|| CheckpointError::Inconsistent(format!("unexpected tensor {name}")))?;
        if store.value(id).shape() != value.shape() {
            return Err(CheckpointError::Inconsistent(format!(
                "tensor {name}: shape {:?} in file, {:?} in model",
                value.shape(),
                store.value(id).shape()
            ))
            .into());
        }
        *store.value_mut(id) = value;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn store() -> ParamStore {
        let mut s = ParamStore::new();
        s.add("a", Tensor::from_rows(&[&[1.0, -2.5], &[f64::MIN_POSITIVE, 3.0]]))
            .unwrap();
        s.add("b", Tensor::scalar(0.1)).unwrap();
        s.add("c", Tensor::zeros(&[3, 1])).unwrap();
        s
    }

    fn kind(e: Error) -> CheckpointError {
        match e {
            Error::Checkpoint(c) => c,
            other => panic!("expected checkpoint error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = store();
        let bytes = encode(FINE_MAGIC, serde_json::json!({"k": 1}), &s).unwrap();
        let (m, tensors) = decode(&bytes, FINE_MAGIC).unwrap();
        assert_eq!(m.model, serde_json::json!({"k": 1}));
        let mut t = store();
        for id in t.ids().collect::<Vec<_>>() {
            *t.value_mut(id) = Tensor::zeros(s.value(id).shape());
        }
        restore_into(&mut t, tensors).unwrap();
        for (a, b) in s.iter().zip(t.iter()) {
            let bits = |p: &crate::numerics::Parameter| -> Vec<u64> {
                p.value().data().iter().map(|x| x.to_bits()).collect()
            };
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn header_offsets_match_scan_of_shapes() {
        let bytes = encode(FINE_MAGIC, serde_json::Value::Null, &store()).unwrap();
        let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let m: Manifest = serde_json::from_slice(&bytes[20..20 + len]).unwrap();
        // Independent scan: running sum of 8·numel.
        let mut acc = 0u64;
        for t in &m.tensors {
            assert_eq!(t.offset, acc);
            acc += 8 * t.shape.iter().product::<usize>() as u64;
        }
        assert_eq!(bytes.len() as u64, 20 + len as u64 + acc);
    }

    #[test]
    fn distinct_failure_kinds() {
        let bytes = encode(FINE_MAGIC, serde_json::Value::Null, &store()).unwrap();
        assert!(matches!(
            kind(decode(&bytes, COARSE_MAGIC).unwrap_err()),
            CheckpointError::BadMagic { .. }
        ));
        let mut v = bytes.clone();
        v[8] = 9;
        assert!(matches!(
            kind(decode(&v, FINE_MAGIC).unwrap_err()),
            CheckpointError::Version { found: 9, .. }
        ));
        let cut = &bytes[..bytes.len() - 12];
        assert!(matches!(
            kind(decode(cut, FINE_MAGIC).unwrap_err()),
            CheckpointError::Truncated { .. }
        ));
        assert!(matches!(
            kind(decode(&bytes[..5], FINE_MAGIC).unwrap_err()),
            CheckpointError::Truncated { .. }
        ));
        // Corrupt one stored offset.
        let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let mut m: Manifest = serde_json::from_slice(&bytes[20..20 + len]).unwrap();
        m.tensors[1].offset += 8;
        let json = serde_json::to_vec(&m).unwrap();
        let mut bad = bytes[..12].to_vec();
        bad.extend_from_slice(&(json.len() as u64).to_le_bytes());
        bad.extend_from_slice(&json);
        bad.extend_from_slice(&bytes[20 + len..]);
        assert!(matches!(
            kind(decode(&bad, FINE_MAGIC).unwrap_err()),
            CheckpointError::Inconsistent(_)
        ));
    }

    #[test]
    fn shape_mismatch_on_restore() {
        let bytes = encode(FINE_MAGIC, serde_json::Value::Null, &store()).unwrap();
        let (_, tensors) = decode(&bytes, FINE_MAGIC).unwrap();
        let mut other = ParamStore::new();
        other.add("a", Tensor::zeros(&[1, 1])).unwrap();
        other.add("b", Tensor::scalar(0.0)).unwrap();
        other.add("c", Tensor::zeros(&[3, 1])).unwrap();
        assert!(matches!(
            kind(restore_into(&mut other, tensors).unwrap_err()),
            CheckpointError::Inconsistent(_)
        ));
    }
}
