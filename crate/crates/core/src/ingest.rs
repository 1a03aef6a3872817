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

//! Triplet parsing and the binary dataset file.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::codec::{self, Decoder, Encoder, FormatError};
use crate::model::{TrackIdx, UserIdx, Vocabulary};

const DATASET_MAGIC: &[u8; 8] = b"TCFDSET\0";
const DATASET_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: u64, reason: String },
    #[error("line {line}: duplicate (user, track) pair")]
    DuplicatePair { line: u64 },
    #[error("line {line}: more than {} distinct {kind} ids", Vocabulary::CAPACITY)]
    CapacityOverflow { line: u64, kind: &'static str },
    #[error("read error: {0}")]
    Io(#[from] io::Error),
}

impl IngestError {
    /// The offending line, when the error is attributable to one.
    pub fn line(&self) -> Option<u64> {
        match self {
            IngestError::MalformedLine { line, .. }
            | IngestError::DuplicatePair { line }
            | IngestError::CapacityOverflow { line, .. } => Some(*line),
            IngestError::Io(_) => None,
        }
    }
}

/// A collection of unique `(user, track, play_count)` triplets over dense
/// indexes, stored column-wise in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripletBatch {
    users: Vec<UserIdx>,
    tracks: Vec<TrackIdx>,
    counts: Vec<u32>,
    user_vocab: Vocabulary,
    track_vocab: Vocabulary,
}

impl TripletBatch {
    pub fn new(user_vocab: Vocabulary, track_vocab: Vocabulary) -> Self {
        Self {
            user_vocab,
            track_vocab,
            ..Self::default()
        }
    }

    /// Assembles a batch from columns, checking bounds, play counts and
    /// pair uniqueness.
    pub fn from_parts(
        users: Vec<UserIdx>,
        tracks: Vec<TrackIdx>,
        counts: Vec<u32>,
        user_vocab: Vocabulary,
        track_vocab: Vocabulary,
    ) -> Result<Self, String> {
        if users.len() != tracks.len() || users.len() != counts.len() {
            return Err("column lengths differ".into());
        }
        let mut pairs = HashSet::with_capacity(users.len());
        for (i, ((&u, &t), &c)) in users.iter().zip(&tracks).zip(&counts).enumerate() {
            if u as usize >= user_vocab.len() || t as usize >= track_vocab.len() {
                return Err(format!("triplet {i} references an unknown id"));
            }
            if c == 0 {
                return Err(format!("triplet {i} has a zero play count"));
            }
            if !pairs.insert(pair_key(u, t)) {
                return Err(format!("triplet {i} repeats a (user, track) pair"));
            }
        }
        Ok(Self {
            users,
            tracks,
            counts,
            user_vocab,
            track_vocab,
        })
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn users(&self) -> &[UserIdx] {
        &self.users
    }

    pub fn tracks(&self) -> &[TrackIdx] {
        &self.tracks
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn user_vocab(&self) -> &Vocabulary {
        &self.user_vocab
    }

    pub fn track_vocab(&self) -> &Vocabulary {
        &self.track_vocab
    }

    pub fn triplets(&self) -> impl ExactSizeIterator<Item = (UserIdx, TrackIdx, u32)> + '_ {
        (0..self.len()).map(move |i| (self.users[i], self.tracks[i], self.counts[i]))
    }

    /// Appends a triplet without the uniqueness check; callers guarantee it.
    pub(crate) fn push_unchecked(&mut self, user: UserIdx, track: TrackIdx, count: u32) {
        self.users.push(user);
        self.tracks.push(track);
        self.counts.push(count);
    }

    /// Writes the batch back out in the tab-separated triplet format.
    pub fn write_triplets<W: Write>(&self, out: W) -> io::Result<()> {
        let mut out = io::BufWriter::new(out);
        for (u, t, c) in self.triplets() {
            writeln!(
                out,
                "{}\t{}\t{}",
                self.user_vocab.lookup(u).unwrap(),
                self.track_vocab.lookup(t).unwrap(),
                c
            )?;
        }
        out.flush()
    }
}

fn pair_key(user: UserIdx, track: TrackIdx) -> u64 {
    (u64::from(user) << 32) | u64::from(track)
}

/// Parses `user<delim>track<delim>count` lines. Empty lines are skipped and
/// a trailing `\r` is tolerated.
pub fn parse_triplets<R: BufRead>(reader: R) -> Result<TripletBatch, IngestError> {
    parse_triplets_with(reader, b'\t')
}

pub fn parse_triplets_with<R: BufRead>(
    mut reader: R,
    delimiter: u8,
) -> Result<TripletBatch, IngestError> {
    let mut batch = TripletBatch::default();
    let mut seen = HashSet::new();
    let mut buf = Vec::new();
    let mut line_no = 0u64;

    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let mut line = buf.as_slice();
        if let Some(rest) = line.strip_suffix(b"\n") {
            line = rest;
        }
        if let Some(rest) = line.strip_suffix(b"\r") {
            line = rest;
        }
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: &str| IngestError::MalformedLine {
            line: line_no,
            reason: reason.to_string(),
        };
        let line = std::str::from_utf8(line).map_err(|_| malformed("not valid UTF-8"))?;

        let mut fields = line.split(delimiter as char);
        let (user, track, count) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(u), Some(t), Some(c), None) => (u, t, c),
            _ => return Err(malformed("expected exactly 3 fields")),
        };
        if user.is_empty() || track.is_empty() {
            return Err(malformed("empty id field"));
        }
        let count: u32 = count
            .parse()
            .map_err(|_| malformed("play count is not a positive integer"))?;
        if count == 0 {
            return Err(malformed("play count must be at least 1"));
        }

        let u = intern_checked(&mut batch.user_vocab, user, line_no, "user")?;
        let t = intern_checked(&mut batch.track_vocab, track, line_no, "track")?;
        if !seen.insert(pair_key(u, t)) {
            return Err(IngestError::DuplicatePair { line: line_no });
        }
        batch.push_unchecked(u, t, count);
    }
    Ok(batch)
}

fn intern_checked(
    vocab: &mut Vocabulary,
    id: &str,
    line: u64,
    kind: &'static str,
) -> Result<u32, IngestError> {
    match vocab.get(id) {
        Some(idx) => Ok(idx),
        None if vocab.is_full() => Err(IngestError::CapacityOverflow { line, kind }),
        None => Ok(vocab.intern(id)),
    }
}

pub fn read_triplet_file(path: &Path, delimiter: u8) -> Result<TripletBatch, IngestError> {
    let file = fs::File::open(path)?;
    parse_triplets_with(io::BufReader::with_capacity(1 << 20, file), delimiter)
}

pub fn save_dataset(batch: &TripletBatch, path: &Path) -> Result<(), FormatError> {
    encode_dataset(batch).write_to(path)
}

pub fn load_dataset(path: &Path) -> Result<TripletBatch, FormatError> {
    decode_dataset(&fs::read(path)?)
}

/// True if `path` holds a binary dataset rather than triplet text.
pub fn is_dataset_file(path: &Path) -> io::Result<bool> {
    codec::has_magic(path, DATASET_MAGIC)
}

fn encode_dataset(batch: &TripletBatch) -> Encoder {
    let mut enc = Encoder::new(DATASET_MAGIC, DATASET_VERSION);
    enc.vocabulary(&batch.user_vocab);
    enc.vocabulary(&batch.track_vocab);
    enc.u32s(&batch.users);
    enc.u32s(&batch.tracks);
    enc.u32s(&batch.counts);
    enc
}

#[cfg(test)]
fn dataset_bytes(batch: &TripletBatch) -> Vec<u8> {
    encode_dataset(batch).finish()
}

pub(crate) fn decode_dataset(bytes: &[u8]) -> Result<TripletBatch, FormatError> {
    let mut dec = Decoder::open(bytes, DATASET_MAGIC, DATASET_VERSION, "dataset")?;
    let user_vocab = dec.vocabulary()?;
    let track_vocab = dec.vocabulary()?;
    let users = dec.u32s()?;
    let tracks = dec.u32s()?;
    let counts = dec.u32s()?;
    dec.finish()?;
    TripletBatch::from_parts(users, tracks, counts, user_vocab, track_vocab)
        .map_err(FormatError::Corrupt)
}
