//! Binary container for precomputed background jets on a fixed grid.
//!
//! Layout: 8-byte magic, u32 LE format version, u64 LE header length, JSON header,
//! then 150 little-endian f64 per grid point (10 components × value, gradient, Hessian).

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{Background, Which};
use crate::error::{Error, Result};
use crate::jet::{Jet2, Point4};
use crate::sum::ordered_try_map;
use crate::tensor::Sym2Jet;

pub const CACHE_MAGIC: &[u8; 8] = b"EHGLUEBC";
pub const CACHE_VERSION: u32 = 1;
const PER_POINT: usize = 150;

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundCache {
    pub version: u32,
    pub n: usize,
    pub which: Which,
    pub grid_hash: String,
    pub values: Vec<Sym2Jet>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn grid_hash(points: &[Point4]) -> String {
    let mut h = Sha256::new();
    for p in points {
        for v in p {
            h.update(v.to_le_bytes());
        }
    }
    hex(&h.finalize())
}

fn flatten(j: &Jet2, out: &mut Vec<f64>) {
    out.push(j.value);
    out.extend_from_slice(&j.grad);
    out.extend_from_slice(&j.hess);
}

fn cache_err(msg: impl Into<String>) -> Error {
    Error::Cache(msg.into())
}

impl BackgroundCache {
    pub fn build(background: &Background, which: Which, points: &[Point4]) -> Result<Self> {
        let values = ordered_try_map(points, |x| background.eval(x, which))?;
        Ok(BackgroundCache {
            version: CACHE_VERSION,
            n: background.cutoff(),
            which,
            grid_hash: grid_hash(points),
            values,
        })
    }

    /// File name keyed by (grid hash, N, background).
    pub fn file_name(&self) -> String {
        Self::file_name_for(&self.grid_hash, self.n, self.which)
    }

    pub fn file_name_for(grid_hash: &str, n: usize, which: Which) -> String {
        format!("bg-{}-N{n}-{}.ehc", &grid_hash[..16.min(grid_hash.len())], which.name())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut flat = Vec::with_capacity(self.values.len() * PER_POINT);
        for s in &self.values {
            for j in &s.comps {
                flatten(j, &mut flat);
            }
        }
        let mut payload = Vec::with_capacity(flat.len() * 8);
        for v in flat {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        let header = json!({
            "version": self.version,
            "grid": {"points": self.values.len(), "sha256": self.grid_hash},
            "N": self.n,
            "parity": self.which.name(),
            "components_per_point": PER_POINT,
            "checksum": hex(&Sha256::digest(&payload)),
        })
        .to_string();
        let mut out = Vec::with_capacity(20 + header.len() + payload.len());
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&payload);
        out
    }

    /// Decodes and validates against the grid the caller intends to use.
    pub fn from_bytes(bytes: &[u8], points: &[Point4]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..8] != CACHE_MAGIC {
            return Err(cache_err("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(cache_err(format!("unsupported cache version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = &bytes[20..];
        if body.len() < hlen {
            return Err(cache_err("truncated header"));
        }
        let header: Value =
            serde_json::from_slice(&body[..hlen]).map_err(|e| cache_err(format!("header: {e}")))?;
        let payload = &body[hlen..];
        let field = |k: &str| header.get(k).ok_or_else(|| cache_err(format!("missing {k}")));
        let n = field("N")?.as_u64().ok_or_else(|| cache_err("N"))? as usize;
        let which = Which::parse(field("parity")?.as_str().unwrap_or(""))?;
        let grid = field("grid")?;
        let hash = grid["sha256"].as_str().ok_or_else(|| cache_err("grid hash"))?.to_string();
        let count = grid["points"].as_u64().ok_or_else(|| cache_err("grid size"))? as usize;
        if hash != grid_hash(points) || count != points.len() {
            return Err(cache_err("grid mismatch"));
        }
        if field("checksum")?.as_str() != Some(hex(&Sha256::digest(payload)).as_str()) {
            return Err(cache_err("checksum mismatch"));
        }
        if payload.len() != count * PER_POINT * 8 {
            return Err(cache_err("payload size mismatch"));
        }
        let flat: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let values = flat
            .chunks_exact(PER_POINT)
            .map(|p| {
                let mut s = Sym2Jet::ZERO;
                for (k, c) in p.chunks_exact(15).enumerate() {
                    s.comps[k] = Jet2 {
                        value: c[0],
                        grad: [c[1], c[2], c[3], c[4]],
                        hess: c[5..15].try_into().unwrap(),
                    };
                }
                s
            })
            .collect();
        Ok(BackgroundCache {
            version,
            n,
            which,
            grid_hash: hash,
            values,
        })
    }
}
