use std::path::Path;

use super::binfmt::{payload_bytes, Reader, Writer};
use crate::error::{CuhError, Result};
use crate::index::{words_per_code, PackedCodeMatrix};

pub const CODES_MAGIC: [u8; 4] = *b"CUHB";
pub const CODES_VERSION: u32 = 1;

pub fn export_codes(codes: &PackedCodeMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = Writer::new(&CODES_MAGIC, CODES_VERSION);
    w.u64(codes.code_length() as u64);
    w.u64(codes.count() as u64);
    w.u64s(codes.words());
    w.finish(path.as_ref())
}

pub fn import_codes(path: impl AsRef<Path>) -> Result<PackedCodeMatrix> {
    let mut r = Reader::open(path.as_ref(), &CODES_MAGIC, CODES_VERSION)?;
    let code_length = r.usize()?;
    let count = r.usize()?;
    if code_length == 0 {
        return Err(CuhError::Corrupt {
            path: r.path().to_string(),
            reason: "code length 0".into(),
        });
    }
    let words = words_per_code(code_length)
        .checked_mul(count)
        .ok_or_else(|| CuhError::Corrupt {
            path: r.path().to_string(),
            reason: "header sizes overflow".into(),
        })?;
    r.expect_remaining(payload_bytes(r.path(), &[(words, 8)])?)?;
    let words = r.u64s(words)?;
    PackedCodeMatrix::from_words(words, code_length, count)
}
