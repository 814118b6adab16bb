//! `VMLT` latent tensor files.
//!
//! ```text
//! magic    b"VMLT"
//! version  u16
//! dtype    u8      1 = f32, 2 = f64
//! rank     u8      3
//! dims     u32 × rank
//! frames   u32
//! payload  frames × prod(dims) elements, row-major
//! ```
//!
//! All integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FrameLatent, LatentShape, VideoLatent};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"VMLT";
pub const VERSION: u16 = 1;
const RANK: u8 = 3;

pub fn to_bytes<T: Scalar>(video: &VideoLatent<T>) -> Vec<u8> {
    let shape = video.shape();
    let elem = std::mem::size_of::<T>();
    let mut out = Vec::with_capacity(24 + video.len() * shape.n() * elem);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(T::DTYPE_CODE);
    out.push(RANK);
    for d in shape.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(video.len() as u32).to_le_bytes());
    for frame in video.frames() {
        for &v in frame.values() {
            v.write_le(&mut out);
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
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
}

/// Reads the dtype code without decoding the payload.
pub fn peek_dtype(bytes: &[u8]) -> Result<u8> {
    if bytes.len() < 7 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a VMLT file".into()));
    }
    Ok(bytes[6])
}

pub fn from_bytes<T: Scalar>(bytes: &[u8]) -> Result<VideoLatent<T>> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dtype = cur.u8()?;
    if dtype != T::DTYPE_CODE {
        return Err(Error::Format(format!(
            "dtype code {dtype} does not match requested {}",
            T::DTYPE_CODE
        )));
    }
    let rank = cur.u8()?;
    if rank != RANK {
        return Err(Error::Format(format!("rank {rank}, expected {RANK}")));
    }
    let c = cur.u32()? as usize;
    let h = cur.u32()? as usize;
    let w = cur.u32()? as usize;
    let shape = LatentShape::new(c, h, w).map_err(|e| Error::Format(e.to_string()))?;
    let count = cur.u32()? as usize;
    let elem = std::mem::size_of::<T>();
    let expected = shape
        .n()
        .checked_mul(count)
        .and_then(|x| x.checked_mul(elem))
        .ok_or_else(|| Error::Format("payload size overflows".into()))?;
    if bytes.len() - cur.pos != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, header implies {expected}",
            bytes.len() - cur.pos
        )));
    }
    let mut frames = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = cur.take(shape.n() * elem)?;
        let values = raw.chunks_exact(elem).map(T::read_le).collect();
        frames.push(FrameLatent::new(shape, values).map_err(|e| Error::Format(e.to_string()))?);
    }
    VideoLatent::new(frames).map_err(|e| Error::Format(e.to_string()))
}

pub fn write<T: Scalar, P: AsRef<Path>>(path: P, video: &VideoLatent<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&to_bytes(video))?;
    w.flush()?;
    Ok(())
}

pub fn read<T: Scalar, P: AsRef<Path>>(path: P) -> Result<VideoLatent<T>> {
    let mut buf = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut buf)?;
    from_bytes(&buf)
}
