//! Binary parameter container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"TIDECKPT"  u32 version
//! u32 len, utf-8 `key = value` text of the model configuration plus `variant`
//! u32 tensor count, then per tensor:
//!   u32 name len, utf-8 name, u32 ndim, u64 dims[ndim], f64 values (row-major)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kv;
use crate::model::config::{ModelConfig, Variant};
use crate::model::tide::TiDEParams;
use crate::params::ParamStore;
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"TIDECKPT";
pub const VERSION: u32 = 1;

pub fn to_bytes(model: &TiDEParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let mut pairs = model.config.to_kv();
    pairs.push(("variant".into(), model.variant.to_string()));
    put_str(&mut out, &kv::render(&pairs));
    out.extend_from_slice(&(model.store.len() as u32).to_le_bytes());
    for (name, t) in model.store.iter() {
        put_str(&mut out, name);
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for d in t.shape() {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
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
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<TiDEParams> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut pairs = kv::parse(&r.string()?)?;
    let pos = pairs
        .iter()
        .position(|(k, _)| k == "variant")
        .ok_or_else(|| Error::Checkpoint("missing variant".into()))?;
    let variant: Variant = pairs.remove(pos).1.parse()?;
    let config = ModelConfig::from_kv(&pairs)?;
    let count = r.u32()? as usize;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name = r.string()?;
        let ndim = r.u32()? as usize;
        let shape = (0..ndim).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("tensor too large".into()))?)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        store.insert(name, Tensor::new(shape, data)?)?;
    }
    if r.pos != buf.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    TiDEParams::from_store(&config, variant, store)
}

pub fn save(model: &TiDEParams, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<TiDEParams> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}
