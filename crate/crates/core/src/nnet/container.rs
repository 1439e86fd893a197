//! Versioned named-array container used for checkpoints and replay snapshots.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic        8 bytes   "RMADDPG\0"
//! version      u32       1
//! meta_count   u32
//!   key_len    u32, key bytes (UTF-8)
//!   value_len  u32, value bytes (UTF-8)
//! tensor_count u32
//!   name_len   u32, name bytes (UTF-8)
//!   ndim       u32
//!   dims       u64 × ndim
//!   values     f64 × Π dims   (IEEE-754 binary64, little-endian)
//! ```
//!
//! Metadata keys and tensor names are unique within a file. Readers reject
//! trailing bytes, unknown versions and non-finite values.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::params::NamedTensor;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"RMADDPG\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Container {
    pub metadata: BTreeMap<String, String>,
    pub tensors: Vec<NamedTensor>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.metadata
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("missing metadata key {key:?}")))
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn push_tensor(&mut self, tensor: NamedTensor) -> Result<()> {
        if self.tensors.iter().any(|t| t.name == tensor.name) {
            return Err(Error::Format(format!("duplicate tensor {:?}", tensor.name)));
        }
        if tensor.shape.iter().product::<usize>() != tensor.values.len() {
            return Err(Error::Format(format!("tensor {:?} shape/length mismatch", tensor.name)));
        }
        self.tensors.push(tensor);
        Ok(())
    }

    /// Tensors whose names start with `prefix/`, with the prefix stripped.
    pub fn tensors_under(&self, prefix: &str) -> Vec<NamedTensor> {
        let lead = format!("{prefix}/");
        self.tensors
            .iter()
            .filter_map(|t| {
                t.name.strip_prefix(&lead).map(|rest| NamedTensor {
                    name: rest.to_string(),
                    shape: t.shape.clone(),
                    values: t.values.clone(),
                })
            })
            .collect()
    }

    pub fn tensor(&self, name: &str) -> Result<&NamedTensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Format(format!("missing tensor {name:?}")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        for (k, v) in &self.metadata {
            write_str(&mut out, k);
            write_str(&mut out, v);
        }
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            write_str(&mut out, &t.name);
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for &d in &t.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &t.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut c = Container::new();
        for _ in 0..r.u32()? {
            let k = r.string()?;
            let v = r.string()?;
            if c.metadata.insert(k.clone(), v).is_some() {
                return Err(Error::Format(format!("duplicate metadata key {k:?}")));
            }
        }
        for _ in 0..r.u32()? {
            let name = r.string()?;
            let ndim = r.u32()? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(usize::try_from(r.u64()?).map_err(|_| Error::Format("dimension overflow".into()))?);
            }
            let count = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::Format("dimension overflow".into()))?;
            if count.saturating_mul(8) > r.remaining() {
                return Err(Error::Format(format!("tensor {name:?} truncated")));
            }
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                let v = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("tensor {name:?}")));
                }
                values.push(v);
            }
            c.push_tensor(NamedTensor { name, shape, values })?;
        }
        if r.remaining() != 0 {
            return Err(Error::Format(format!("{} trailing bytes", r.remaining())));
        }
        Ok(c)
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Format("unexpected end of data".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("invalid utf-8".into()))
    }
}
