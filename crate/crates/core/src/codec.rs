// Copyright 2026 The tastecf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Little-endian framing shared by the dataset and index files.
//!
//! Layout: 8 magic bytes, a `u32` format version, the payload, then a CRC-32
//! of everything before it.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::Vocabulary;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a {expected} file")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {found}, expected {expected}")]
    FormatVersionMismatch { found: u32, expected: u32 },
    #[error("checksum mismatch: file is truncated or corrupt")]
    ChecksumMismatch,
    #[error("corrupt payload: {0}")]
    Corrupt(String),
}

pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new(magic: &[u8; 8], version: u32) -> Self {
        let mut buf = Vec::with_capacity(1 << 16);
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&version.to_le_bytes());
        Self { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
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

    pub fn u32s(&mut self, vs: &[u32]) {
        self.u64(vs.len() as u64);
        self.buf.reserve(vs.len() * 4);
        for v in vs {
            self.u32(*v);
        }
    }

    pub fn u64s(&mut self, vs: &[u64]) {
        self.u64(vs.len() as u64);
        self.buf.reserve(vs.len() * 8);
        for v in vs {
            self.u64(*v);
        }
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        self.buf.reserve(vs.len() * 8);
        for v in vs {
            self.f64(*v);
        }
    }

    pub fn vocabulary(&mut self, vocab: &Vocabulary) {
        self.u64(vocab.len() as u64);
        for id in vocab.iter() {
            self.u32(id.len() as u32);
            self.buf.extend_from_slice(id.as_bytes());
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }

    pub fn write_to(self, path: &Path) -> Result<(), FormatError> {
        let bytes = self.finish();
        let mut file = io::BufWriter::new(fs::File::create(path)?);
        file.write_all(&bytes)?;
        file.flush()?;
        Ok(())
    }
}

pub(crate) struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    /// Checks magic, version and trailing checksum, and positions the decoder
    /// at the start of the payload.
    pub fn open(
        bytes: &'a [u8],
        magic: &[u8; 8],
        version: u32,
        kind: &'static str,
    ) -> Result<Self, FormatError> {
        if bytes.len() >= 8 && &bytes[..8] != magic {
            return Err(FormatError::BadMagic { expected: kind });
        }
        if bytes.len() < 16 {
            return Err(FormatError::ChecksumMismatch);
        }
        let found = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if found != version {
            return Err(FormatError::FormatVersionMismatch {
                found,
                expected: version,
            });
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(FormatError::ChecksumMismatch);
        }
        Ok(Self { buf: body, pos: 12 })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.buf.len())
            .ok_or_else(|| FormatError::Corrupt("unexpected end of payload".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len_prefix(&mut self, width: usize) -> Result<usize, FormatError> {
        let len = self.u64()?;
        let remaining = (self.buf.len() - self.pos) as u64;
        if len.saturating_mul(width as u64) > remaining {
            return Err(FormatError::Corrupt(format!("array length {len} exceeds payload")));
        }
        Ok(len as usize)
    }

    pub fn u32s(&mut self) -> Result<Vec<u32>, FormatError> {
        let len = self.len_prefix(4)?;
        let raw = self.take(len * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn u64s(&mut self) -> Result<Vec<u64>, FormatError> {
        let len = self.len_prefix(8)?;
        let raw = self.take(len * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>, FormatError> {
        let len = self.len_prefix(8)?;
        let raw = self.take(len * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn vocabulary(&mut self) -> Result<Vocabulary, FormatError> {
        let len = self.len_prefix(4)?;
        let mut vocab = Vocabulary::with_capacity(len);
        for _ in 0..len {
            let n = self.u32()? as usize;
            let raw = self.take(n)?;
            let id = std::str::from_utf8(raw)
                .map_err(|_| FormatError::Corrupt("vocabulary entry is not UTF-8".into()))?;
            let before = vocab.len();
            vocab.intern(id);
            if vocab.len() == before {
                return Err(FormatError::Corrupt(format!("duplicate vocabulary entry {id:?}")));
            }
        }
        Ok(vocab)
    }

    pub fn finish(self) -> Result<(), FormatError> {
        if self.pos != self.buf.len() {
            return Err(FormatError::Corrupt("trailing bytes after payload".into()));
        }
        Ok(())
    }
}

/// Returns true if the file at `path` starts with `magic`.
pub(crate) fn has_magic(path: &Path, magic: &[u8; 8]) -> io::Result<bool> {
    use std::io::Read;
    let mut head = [0u8; 8];
    let mut file = fs::File::open(path)?;
    let mut filled = 0;
    while filled < 8 {
        let n = file.read(&mut head[filled..])?;
        if n == 0 {
            return Ok(false);
        }
        filled += n;
    }
    Ok(&head == magic)
}
