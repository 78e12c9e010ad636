use std::path::Path;

use crate::error::{CuhError, Result};

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u32) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&version.to_le_bytes());
        Writer { buf }
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) {
        for v in vs {
            self.f64(*v);
        }
    }

    pub fn u64s(&mut self, vs: &[u64]) {
        for v in vs {
            self.u64(*v);
        }
    }

    pub fn finish(self, path: &Path) -> Result<()> {
        std::fs::write(path, self.buf).map_err(|e| CuhError::io(path, e))
    }
}

pub(crate) struct Reader {
    buf: Vec<u8>,
    pos: usize,
    path: String,
}

pub(crate) const HEADER_LEN: usize = 8;

impl Reader {
    /// Reads the whole file and validates magic and version.
    pub fn open(path: &Path, magic: &[u8; 4], version: u32) -> Result<Self> {
        let buf = std::fs::read(path).map_err(|e| CuhError::io(path, e))?;
        let path = path.display().to_string();
        if buf.len() < HEADER_LEN {
            return Err(CuhError::PayloadSize {
                path,
                expected: HEADER_LEN as u64,
                actual: buf.len() as u64,
            });
        }
        let found: [u8; 4] = buf[..4].try_into().expect("four bytes");
        if &found != magic {
            return Err(CuhError::BadMagic {
                path,
                expected: *magic,
                found,
            });
        }
        let v = u32::from_le_bytes(buf[4..8].try_into().expect("four bytes"));
        if v != version {
            return Err(CuhError::UnsupportedVersion {
                path,
                found: v,
                supported: version,
            });
        }
        Ok(Reader {
            buf,
            pos: HEADER_LEN,
            path,
        })
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    /// Fails unless exactly `remaining` bytes are left after the cursor.
    pub fn expect_remaining(&self, remaining: u64) -> Result<()> {
        let actual = (self.buf.len() - self.pos) as u64;
        if actual != remaining {
            return Err(CuhError::PayloadSize {
                path: self.path.clone(),
                expected: self.pos as u64 + remaining,
                actual: self.buf.len() as u64,
            });
        }
        Ok(())
    }

    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        if self.pos + K > self.buf.len() {
            return Err(CuhError::PayloadSize {
                path: self.path.clone(),
                expected: (self.pos + K) as u64,
                actual: self.buf.len() as u64,
            });
        }
        let out = self.buf[self.pos..self.pos + K].try_into().expect("sized slice");
        self.pos += K;
        Ok(out)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| CuhError::Corrupt {
            path: self.path.clone(),
            reason: format!("size {v} does not fit in memory"),
        })
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn u64s(&mut self, n: usize) -> Result<Vec<u64>> {
        (0..n).map(|_| self.u64()).collect()
    }
}

/// `count` items of `width` bytes, guarding against overflow from hostile headers.
pub(crate) fn payload_bytes(path: &str, parts: &[(usize, usize)]) -> Result<u64> {
    let mut total: u64 = 0;
    for &(count, width) in parts {
        let bytes = (count as u64)
            .checked_mul(width as u64)
            .and_then(|b| total.checked_add(b))
            .ok_or_else(|| CuhError::Corrupt {
                path: path.to_string(),
                reason: "header sizes overflow".into(),
            })?;
        total = bytes;
    }
    Ok(total)
}
