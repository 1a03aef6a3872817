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

//! User-user similarity: the sum of idf over co-listened tracks, candidate
//! generation through posting lists, and relative-threshold pruning.
//!
//! Weights here are accumulated from natural-log idf (see [`crate::idf`]).
//! Summation always runs over shared tracks in ascending track order, so the
//! pairwise route and the posting-list route produce bit-identical weights.

use crate::idf::IdfTable;
use crate::index::InteractionIndex;
use crate::model::{TrackIdx, UserIdx};

/// Similarity of two users: sum of idf over the tracks both listened to.
/// Symmetric; play counts play no role.
pub fn similarity(index: &InteractionIndex, idf: &IdfTable, u: UserIdx, v: UserIdx) -> f64 {
    let (a, b) = (index.tracks_of(u), index.tracks_of(v));
    let natural = idf.natural();
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += natural[a[i] as usize];
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

/// Every user sharing at least one track with `source_user`, with their
/// similarity. The source user is never included.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Candidates {
    pub source_user: UserIdx,
    pub weights: Vec<(UserIdx, f64)>,
}

impl Candidates {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, user: UserIdx) -> Option<f64> {
        self.weights.iter().find(|&&(v, _)| v == user).map(|&(_, w)| w)
    }
}

/// Neighbors retained after pruning.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeighborSet {
    pub source_user: UserIdx,
    /// Sorted by weight descending, then user index ascending.
    pub neighbors: Vec<(UserIdx, f64)>,
    /// Largest candidate weight before pruning; 0 without candidates.
    pub w_max: f64,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn users(&self) -> impl Iterator<Item = UserIdx> + '_ {
        self.neighbors.iter().map(|&(v, _)| v)
    }
}

/// Reusable accumulation buffers for candidate generation.
#[derive(Debug, Default)]
pub struct NeighborScratch {
    acc: Vec<f64>,
    stamp: Vec<u32>,
    epoch: u32,
    touched: Vec<UserIdx>,
}

impl NeighborScratch {
    pub fn new(n_users: usize) -> Self {
        Self {
            acc: vec![0.0; n_users],
            stamp: vec![0; n_users],
            epoch: 0,
            touched: Vec::new(),
        }
    }

    fn reset(&mut self, n_users: usize) {
        if self.acc.len() != n_users {
            *self = Self::new(n_users);
        }
        self.touched.clear();
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }
}

/// Candidate neighbors of `u`, ordered by user index.
pub fn candidate_neighbors(index: &InteractionIndex, idf: &IdfTable, u: UserIdx) -> Candidates {
    let mut scratch = NeighborScratch::new(index.n_users());
    let mut out = Candidates::default();
    candidate_neighbors_into(index, idf, u, None, &mut scratch, &mut out);
    out.weights.sort_unstable_by_key(|&(v, _)| v);
    out
}

/// Walks the posting list of every track of `u` in ascending track order,
/// adding that track's idf to each co-listener. Tracks with more than
/// `max_posting_len` listeners are skipped when a cap is given.
///
/// `out.weights` is left in first-touched order; [`prune`] does not need it sorted.
pub fn candidate_neighbors_into(
    index: &InteractionIndex,
    idf: &IdfTable,
    u: UserIdx,
    max_posting_len: Option<usize>,
    scratch: &mut NeighborScratch,
    out: &mut Candidates,
) {
    scratch.reset(index.n_users());
    let natural = idf.natural();
    let epoch = scratch.epoch;
    for &t in index.tracks_of(u) {
        let listeners = index.listeners_of(t);
        if max_posting_len.is_some_and(|cap| listeners.len() > cap) {
            continue;
        }
        let w = natural[t as usize];
        for &v in listeners {
            if v == u {
                continue;
            }
            let vi = v as usize;
            if scratch.stamp[vi] != epoch {
                scratch.stamp[vi] = epoch;
                scratch.acc[vi] = 0.0;
                scratch.touched.push(v);
            }
            scratch.acc[vi] += w;
        }
    }
    out.source_user = u;
    out.weights.clear();
    out.weights
        .extend(scratch.touched.iter().map(|&v| (v, scratch.acc[v as usize])));
}

/// Keeps candidates with weight at least `s` times the largest weight.
/// The boundary is inclusive and zero weights are always dropped.
pub fn prune(candidates: &Candidates, s: f64) -> NeighborSet {
    let mut set = NeighborSet {
        source_user: candidates.source_user,
        ..NeighborSet::default()
    };
    prune_into(candidates, s, &mut set);
    set
}

pub fn prune_into(candidates: &Candidates, s: f64, out: &mut NeighborSet) {
    let w_max = candidates
        .weights
        .iter()
        .map(|&(_, w)| w)
        .fold(0.0f64, f64::max);
    let threshold = s * w_max;
    out.source_user = candidates.source_user;
    out.w_max = w_max;
    out.neighbors.clear();
    out.neighbors.extend(
        candidates
            .weights
            .iter()
            .copied()
            .filter(|&(_, w)| w > 0.0 && w >= threshold),
    );
    out.neighbors
        .sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

/// Tracks shared by two users, ascending. Handy for explaining a weight.
pub fn shared_tracks(index: &InteractionIndex, u: UserIdx, v: UserIdx) -> Vec<TrackIdx> {
    let b = index.tracks_of(v);
    index
        .tracks_of(u)
        .iter()
        .copied()
        .filter(|t| b.binary_search(t).is_ok())
        .collect()
}
