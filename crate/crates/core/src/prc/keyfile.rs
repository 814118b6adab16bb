//! Key files.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! magic        b"PRCK"
//! version      u16
//! n k_msg k_pad r t g          u32 each
//! eta fpr                      f64 each
//! max_bp_iters                 u32
//! llr_clamp                    f64
//! schedule_seed                u64
//! schedule_len                 u32
//! rng_seed key_id              u64 each
//! parity      r rows of ceil(n / 8) bytes
//! generator   n rows of ceil(g / 8) bytes
//! pivot_rows  g × u32
//! otp         ceil(n / 8) bytes
//! ```
//!
//! Matrix rows are packed LSB-first, each padded to a whole byte.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::key::PrcKey;
use super::params::PrcParams;
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVec};
use crate::schedule::ScheduleParams;

pub const MAGIC: &[u8; 4] = b"PRCK";
pub const VERSION: u16 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_matrix(out: &mut Vec<u8>, m: &BitMatrix) {
    for i in 0..m.rows() {
        out.extend_from_slice(&m.row_vec(i).to_bytes());
    }
}

impl PrcKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let g = self.dimension();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [p.n, p.k_msg, p.k_pad, p.r, p.t, g] {
            put_u32(&mut out, v);
        }
        out.extend_from_slice(&p.eta.to_le_bytes());
        out.extend_from_slice(&p.fpr.to_le_bytes());
        put_u32(&mut out, p.max_bp_iters);
        out.extend_from_slice(&p.llr_clamp.to_le_bytes());
        out.extend_from_slice(&self.schedule.seed.to_le_bytes());
        put_u32(&mut out, self.schedule.len);
        out.extend_from_slice(&self.rng_seed.to_le_bytes());
        out.extend_from_slice(&self.key_id.to_le_bytes());
        put_matrix(&mut out, &self.parity);
        put_matrix(&mut out, &self.generator);
        for &pr in &self.pivot_rows {
            put_u32(&mut out, pr);
        }
        out.extend_from_slice(&self.otp.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a PRCK key file".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported key version {version}")));
        }
        let n = r.u32()?;
        let k_msg = r.u32()?;
        let k_pad = r.u32()?;
        let checks = r.u32()?;
        let t = r.u32()?;
        let g = r.u32()?;
        let eta = r.f64()?;
        let fpr = r.f64()?;
        let max_bp_iters = r.u32()?;
        let llr_clamp = r.f64()?;
        let schedule = ScheduleParams {
            seed: r.u64()?,
            len: r.u32()?,
        };
        let rng_seed = r.u64()?;
        let key_id = r.u64()?;
        let params = PrcParams {
            n,
            k_msg,
            k_pad,
            r: checks,
            t,
            eta,
            fpr,
            max_bp_iters,
            llr_clamp,
        };
        params
            .validate()
            .map_err(|e| Error::Format(e.to_string()))?;
        let parity = r.matrix(checks, n)?;
        let generator = r.matrix(n, g)?;
        let pivot_rows = (0..g).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let otp = r.bits(n)?;
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        PrcKey::from_parts(
            params, parity, generator, pivot_rows, otp, key_id, rng_seed, schedule,
        )
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = KeyJson {
            version: VERSION,
            params: self.params.clone(),
            schedule: self.schedule,
            rng_seed: self.rng_seed,
            key_id: self.key_id(),
            parity: MatrixJson::from(&self.parity),
            generator: MatrixJson::from(&self.generator),
            pivot_rows: self.pivot_rows.clone(),
            otp: B64.encode(self.otp.to_bytes()),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: KeyJson = serde_json::from_str(text)?;
        if doc.version != VERSION {
            return Err(Error::Format(format!(
                "unsupported key version {}",
                doc.version
            )));
        }
        let key_id = u64::from_str_radix(&doc.key_id, 16)
            .map_err(|e| Error::Format(format!("key_id: {e}")))?;
        let otp_bytes = B64
            .decode(&doc.otp)
            .map_err(|e| Error::Format(format!("otp: {e}")))?;
        let otp = BitVec::from_bytes(doc.params.n, &otp_bytes)
            .ok_or_else(|| Error::Format("otp has the wrong length".into()))?;
        PrcKey::from_parts(
            doc.params,
            doc.parity.into_matrix()?,
            doc.generator.into_matrix()?,
            doc.pivot_rows,
            otp,
            key_id,
            doc.rng_seed,
            doc.schedule,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct KeyJson {
    version: u16,
    params: PrcParams,
    schedule: ScheduleParams,
    rng_seed: u64,
    key_id: String,
    parity: MatrixJson,
    generator: MatrixJson,
    pivot_rows: Vec<usize>,
    otp: String,
}

/// Rows packed as in the binary format, then base64-encoded.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: String,
}

impl From<&BitMatrix> for MatrixJson {
    fn from(m: &BitMatrix) -> Self {
        let mut bytes = Vec::new();
        put_matrix(&mut bytes, m);
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: B64.encode(bytes),
        }
    }
}

impl MatrixJson {
    fn into_matrix(self) -> Result<BitMatrix> {
        let bytes = B64
            .decode(&self.data)
            .map_err(|e| Error::Format(format!("matrix data: {e}")))?;
        let mut r = Reader {
            buf: &bytes,
            pos: 0,
        };
        let m = r.matrix(self.rows, self.cols)?;
        if r.pos != bytes.len() {
            return Err(Error::Format("matrix data has trailing bytes".into()));
        }
        Ok(m)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bits(&mut self, len: usize) -> Result<BitVec> {
        BitVec::from_bytes(len, self.take(len.div_ceil(8))?)
            .ok_or_else(|| Error::Format("nonzero padding bits".into()))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<BitMatrix> {
        let need = rows
            .checked_mul(cols.div_ceil(8))
            .ok_or_else(|| Error::Format("matrix size overflows".into()))?;
        if self.buf.len() - self.pos < need {
            return Err(Error::Format(format!(
                "truncated matrix at byte {}",
                self.pos
            )));
        }
        let mut m = BitMatrix::zeros(rows, cols);
        for i in 0..rows {
            let row = self.bits(cols)?;
            m.row_mut(i).copy_from_slice(row.words());
        }
        Ok(m)
    }
}
