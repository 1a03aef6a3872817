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

//! Forward (user → tracks) and inverted (track → users) adjacency in CSR form.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::codec::{self, Decoder, Encoder, FormatError};
use crate::idf::IdfTable;
use crate::ingest::TripletBatch;
use crate::model::{TrackIdx, UserIdx, Vocabulary};

const INDEX_MAGIC: &[u8; 8] = b"TCFINDX\0";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("total play count of user {user} overflows 64 bits")]
    CapacityOverflow { user: UserIdx },
}

/// Immutable interaction matrix with both access directions materialized.
///
/// `forward` rows are sorted by track index and carry play counts; `inverted`
/// rows (posting lists) are sorted by user index and carry nothing else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionIndex {
    n_users: usize,
    n_tracks: usize,
    forward_offsets: Vec<usize>,
    forward_tracks: Vec<TrackIdx>,
    forward_counts: Vec<u32>,
    inverted_offsets: Vec<usize>,
    inverted_users: Vec<UserIdx>,
    total_plays: Vec<u64>,
}

impl InteractionIndex {
    pub fn build(batch: &TripletBatch) -> Result<Self, IndexError> {
        let n_users = batch.user_vocab().len();
        let n_tracks = batch.track_vocab().len();
        let n = batch.len();

        let mut forward_offsets = vec![0usize; n_users + 1];
        for &u in batch.users() {
            forward_offsets[u as usize + 1] += 1;
        }
        prefix_sum(&mut forward_offsets);

        let mut cursor = forward_offsets.clone();
        let mut rows = vec![(0u32, 0u32); n];
        for (u, t, c) in batch.triplets() {
            let slot = &mut cursor[u as usize];
            rows[*slot] = (t, c);
            *slot += 1;
        }
        let mut total_plays = vec![0u64; n_users];
        for u in 0..n_users {
            let row = &mut rows[forward_offsets[u]..forward_offsets[u + 1]];
            row.sort_unstable_by_key(|&(t, _)| t);
            let mut total = 0u64;
            for &(_, c) in row.iter() {
                total = total
                    .checked_add(u64::from(c))
                    .ok_or(IndexError::CapacityOverflow { user: u as UserIdx })?;
            }
            total_plays[u] = total;
        }
        let (forward_tracks, forward_counts): (Vec<_>, Vec<_>) = rows.into_iter().unzip();

        let mut inverted_offsets = vec![0usize; n_tracks + 1];
        for &t in &forward_tracks {
            inverted_offsets[t as usize + 1] += 1;
        }
        prefix_sum(&mut inverted_offsets);
        // Visiting users in ascending order leaves every posting list sorted.
        let mut cursor = inverted_offsets.clone();
        let mut inverted_users = vec![0 as UserIdx; n];
        for u in 0..n_users {
            for &t in &forward_tracks[forward_offsets[u]..forward_offsets[u + 1]] {
                let slot = &mut cursor[t as usize];
                inverted_users[*slot] = u as UserIdx;
                *slot += 1;
            }
        }

        Ok(Self {
            n_users,
            n_tracks,
            forward_offsets,
            forward_tracks,
            forward_counts,
            inverted_offsets,
            inverted_users,
            total_plays,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_tracks(&self) -> usize {
        self.n_tracks
    }

    pub fn n_triplets(&self) -> usize {
        self.forward_tracks.len()
    }

    /// Tracks of `user`, ascending.
    pub fn tracks_of(&self, user: UserIdx) -> &[TrackIdx] {
        let u = user as usize;
        &self.forward_tracks[self.forward_offsets[u]..self.forward_offsets[u + 1]]
    }

    /// Play counts parallel to [`tracks_of`](Self::tracks_of).
    pub fn counts_of(&self, user: UserIdx) -> &[u32] {
        let u = user as usize;
        &self.forward_counts[self.forward_offsets[u]..self.forward_offsets[u + 1]]
    }

    /// Posting list of `track`: listeners, ascending.
    pub fn listeners_of(&self, track: TrackIdx) -> &[UserIdx] {
        let t = track as usize;
        &self.inverted_users[self.inverted_offsets[t]..self.inverted_offsets[t + 1]]
    }

    /// Document frequency: number of users who listened to `track`.
    pub fn df(&self, track: TrackIdx) -> usize {
        let t = track as usize;
        self.inverted_offsets[t + 1] - self.inverted_offsets[t]
    }

    /// Sum of play counts over the user's history.
    pub fn total_plays(&self, user: UserIdx) -> u64 {
        self.total_plays[user as usize]
    }

    pub fn has_listened(&self, user: UserIdx, track: TrackIdx) -> bool {
        self.tracks_of(user).binary_search(&track).is_ok()
    }

    /// Tracks ordered by document frequency descending, then index ascending.
    pub fn tracks_by_popularity(&self) -> Vec<TrackIdx> {
        let mut order: Vec<TrackIdx> = (0..self.n_tracks as TrackIdx).collect();
        order.sort_by(|&a, &b| self.df(b).cmp(&self.df(a)).then(a.cmp(&b)));
        order
    }

    /// Checks every structural invariant; used after loading from disk.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.forward_tracks.len();
        if self.forward_offsets.len() != self.n_users + 1
            || self.inverted_offsets.len() != self.n_tracks + 1
            || self.total_plays.len() != self.n_users
            || self.forward_counts.len() != n
            || self.inverted_users.len() != n
        {
            return Err("array lengths are inconsistent".into());
        }
        for offsets in [&self.forward_offsets, &self.inverted_offsets] {
            if offsets[0] != 0 || offsets[offsets.len() - 1] != n || offsets.windows(2).any(|w| w[0] > w[1]) {
                return Err("offsets are not a monotone partition".into());
            }
        }
        let mut df = vec![0usize; self.n_tracks];
        for u in 0..self.n_users as UserIdx {
            let tracks = self.tracks_of(u);
            if tracks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("forward row of user {u} is not strictly ascending"));
            }
            if tracks.last().is_some_and(|&t| t as usize >= self.n_tracks) {
                return Err(format!("user {u} references an unknown track"));
            }
            if self.counts_of(u).contains(&0) {
                return Err(format!("user {u} has a zero play count"));
            }
            let plays: u64 = self.counts_of(u).iter().map(|&c| u64::from(c)).sum();
            if plays != self.total_plays(u) {
                return Err(format!("total plays of user {u} do not match"));
            }
            for &t in tracks {
                df[t as usize] += 1;
            }
        }
        for t in 0..self.n_tracks as TrackIdx {
            let listeners = self.listeners_of(t);
            if listeners.len() != df[t as usize] {
                return Err(format!("posting list of track {t} has the wrong length"));
            }
            if listeners.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("posting list of track {t} is not strictly ascending"));
            }
            if listeners
                .iter()
                .any(|&u| u as usize >= self.n_users || !self.has_listened(u, t))
            {
                return Err(format!("posting list of track {t} disagrees with the forward rows"));
            }
        }
        Ok(())
    }
}

fn prefix_sum(offsets: &mut [usize]) {
    for i in 1..offsets.len() {
        offsets[i] += offsets[i - 1];
    }
}

/// Everything `recommend` needs from disk: both vocabularies, the index and,
/// optionally, a precomputed idf table.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexBundle {
    pub user_vocab: Vocabulary,
    pub track_vocab: Vocabulary,
    pub index: InteractionIndex,
    pub idf: Option<IdfTable>,
}

impl IndexBundle {
    pub fn from_batch(batch: &TripletBatch) -> Result<Self, IndexError> {
        Ok(Self {
            user_vocab: batch.user_vocab().clone(),
            track_vocab: batch.track_vocab().clone(),
            index: InteractionIndex::build(batch)?,
            idf: None,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        self.encode().write_to(path)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        Self::decode(&fs::read(path)?)
    }

    pub fn is_index_file(path: &Path) -> std::io::Result<bool> {
        codec::has_magic(path, INDEX_MAGIC)
    }

    fn encode(&self) -> Encoder {
        let ix = &self.index;
        let as_u64 = |v: &[usize]| v.iter().map(|&x| x as u64).collect::<Vec<_>>();
        let mut enc = Encoder::new(INDEX_MAGIC, INDEX_VERSION);
        enc.vocabulary(&self.user_vocab);
        enc.vocabulary(&self.track_vocab);
        enc.u64s(&as_u64(&ix.forward_offsets));
        enc.u32s(&ix.forward_tracks);
        enc.u32s(&ix.forward_counts);
        enc.u64s(&as_u64(&ix.inverted_offsets));
        enc.u32s(&ix.inverted_users);
        enc.u64s(&ix.total_plays);
        match &self.idf {
            None => enc.u8(0),
            Some(idf) => {
                enc.u8(1);
                enc.f64(idf.log_base());
                enc.u64(idf.n_users() as u64);
                enc.f64s(idf.natural());
            }
        }
        enc
    }

    fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let corrupt = |msg: String| FormatError::Corrupt(msg);
        let to_usize = |v: Vec<u64>| -> Result<Vec<usize>, FormatError> {
            v.into_iter()
                .map(|x| usize::try_from(x).map_err(|_| corrupt("offset exceeds address space".into())))
                .collect()
        };
        let mut dec = Decoder::open(bytes, INDEX_MAGIC, INDEX_VERSION, "index")?;
        let user_vocab = dec.vocabulary()?;
        let track_vocab = dec.vocabulary()?;
        let forward_offsets = to_usize(dec.u64s()?)?;
        let forward_tracks = dec.u32s()?;
        let forward_counts = dec.u32s()?;
        let inverted_offsets = to_usize(dec.u64s()?)?;
        let inverted_users = dec.u32s()?;
        let total_plays = dec.u64s()?;
        let index = InteractionIndex {
            n_users: user_vocab.len(),
            n_tracks: track_vocab.len(),
            forward_offsets,
            forward_tracks,
            forward_counts,
            inverted_offsets,
            inverted_users,
            total_plays,
        };
        index.validate().map_err(corrupt)?;
        let idf = match dec.u8()? {
            0 => None,
            1 => {
                let log_base = dec.f64()?;
                let n_users = dec.u64()? as usize;
                let natural = dec.f64s()?;
                if n_users != index.n_users() || natural.len() != index.n_tracks() {
                    return Err(corrupt("idf section does not match the index".into()));
                }
                Some(
                    IdfTable::from_natural(natural, n_users, log_base)
                        .map_err(|e| corrupt(e.to_string()))?,
                )
            }
            flag => return Err(corrupt(format!("unknown idf section flag {flag}"))),
        };
        dec.finish()?;
        Ok(Self {
            user_vocab,
            track_vocab,
            index,
            idf,
        })
    }
}
