use std::io::{Cursor, Read};

use serde::{Deserialize, Serialize};

use super::ParamSet;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CSTK";
pub const FORMAT_VERSION: u16 = 1;

/// A trained model on disk: a JSON header (model kind, architecture, free
/// metadata) followed by little-endian parameter arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub spec: serde_json::Value,
    pub meta: serde_json::Value,
    pub params: ParamSet,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    spec: serde_json::Value,
    meta: serde_json::Value,
}

pub fn write_container(c: &Container) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        kind: c.kind.clone(),
        spec: c.spec.clone(),
        meta: c.meta.clone(),
    })
    .expect("JSON values always serialize");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(c.params.arrays().len() as u32).to_le_bytes());
    for a in c.params.arrays() {
        out.extend_from_slice(&(a.name.len() as u16).to_le_bytes());
        out.extend_from_slice(a.name.as_bytes());
        out.push(a.shape.len() as u8);
        for &d in &a.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &a.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

impl Reader<'_> {
    fn fail(&self, message: impl Into<String>) -> Error {
        Error::parse(
            "model container",
            format!("byte {}", self.cur.position()),
            message,
        )
    }

    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let remaining = self.cur.get_ref().len() as u64 - self.cur.position();
        if (n as u64) > remaining {
            return Err(self.fail(format!("truncated: need {n} bytes, {remaining} left")));
        }
        let mut buf = vec![0; n];
        self.cur.read_exact(&mut buf).expect("length checked");
        Ok(buf)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.bytes(N)?.try_into().expect("exact length"))
    }
}

pub fn read_container(bytes: &[u8]) -> Result<Container> {
    let mut r = Reader {
        cur: Cursor::new(bytes),
    };
    if &r.array::<4>()? != MAGIC {
        return Err(r.fail("not a model container (bad magic)"));
    }
    let version = u16::from_le_bytes(r.array()?);
    if version != FORMAT_VERSION {
        return Err(r.fail(format!("unsupported container version {version}")));
    }
    let hlen = u32::from_le_bytes(r.array()?) as usize;
    let header: Header =
        serde_json::from_slice(&r.bytes(hlen)?).map_err(|e| r.fail(format!("bad header: {e}")))?;
    let n_arrays = u32::from_le_bytes(r.array()?);
    let mut params = ParamSet::default();
    for _ in 0..n_arrays {
        let nlen = u16::from_le_bytes(r.array()?) as usize;
        let name =
            String::from_utf8(r.bytes(nlen)?).map_err(|_| r.fail("array name is not UTF-8"))?;
        let ndim = r.array::<1>()?[0] as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(u64::from_le_bytes(r.array()?) as usize);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| r.fail(format!("array {name} shape overflows")))?;
        if count.saturating_mul(8) as u64 > bytes.len() as u64 {
            return Err(r.fail(format!("array {name} larger than file")));
        }
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f64::from_le_bytes(r.array()?));
        }
        params.push(name, shape, data);
    }
    if (r.cur.position() as usize) != bytes.len() {
        return Err(r.fail("trailing bytes after last array"));
    }
    Ok(Container {
        kind: header.kind,
        spec: header.spec,
        meta: header.meta,
        params,
    })
}
