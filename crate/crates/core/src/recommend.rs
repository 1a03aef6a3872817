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

//! Track scoring from pruned neighbors, ranking, truncation and padding.
//!
//! A track's score is the sum, over retained neighbors who listened to it,
//! of the neighbor's similarity divided by the neighbor's total play count.

use std::cmp::Ordering;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::idf::IdfTable;
use crate::index::InteractionIndex;
use crate::model::{Config, ConfigError, PadStrategy, TrackIdx, UserIdx, Vocabulary};
use crate::similarity::{candidate_neighbors_into, prune_into, Candidates, NeighborScratch, NeighborSet};

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("user index {user} is out of range (index has {n_users} users)")]
    UserOutOfRange { user: UserIdx, n_users: usize },
    #[error("idf table covers {idf} tracks but the index has {index}")]
    IdfMismatch { idf: usize, index: usize },
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

/// One position of a recommendation list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    /// A track that received a positive score.
    Track(TrackIdx),
    /// A popular track appended by [`PadStrategy::Popularity`].
    Popular(TrackIdx),
    /// Synthetic filler numbered from 1; never a real track.
    Dummy(u32),
}

impl Slot {
    pub fn track(self) -> Option<TrackIdx> {
        match self {
            Slot::Track(t) | Slot::Popular(t) => Some(t),
            Slot::Dummy(_) => None,
        }
    }
}

/// A ranked list of exactly `k` slots for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub user: UserIdx,
    pub items: Vec<Slot>,
    /// Scores of the leading [`Slot::Track`] items, in the idf table's base.
    pub scores: Vec<f64>,
}

impl Recommendation {
    /// Real tracks in rank order, scored and popularity-padded alike.
    pub fn tracks(&self) -> impl Iterator<Item = TrackIdx> + '_ {
        self.items.iter().filter_map(|s| s.track())
    }

    pub fn dummy_count(&self) -> usize {
        self.items.iter().filter(|s| matches!(s, Slot::Dummy(_))).count()
    }
}

/// Worker-private buffers.
#[derive(Debug, Default)]
pub struct Workspace {
    neighbors: NeighborScratch,
    candidates: Candidates,
    neighbor_set: NeighborSet,
    acc: Vec<f64>,
    stamp: Vec<u32>,
    epoch: u32,
    touched: Vec<TrackIdx>,
    scores: Vec<(TrackIdx, f64)>,
}

impl Workspace {
    pub fn new(index: &InteractionIndex) -> Self {
        Self {
            neighbors: NeighborScratch::new(index.n_users()),
            acc: vec![0.0; index.n_tracks()],
            stamp: vec![0; index.n_tracks()],
            ..Self::default()
        }
    }

    fn next_epoch(&mut self, n_tracks: usize) -> u32 {
        if self.acc.len() != n_tracks {
            self.acc = vec![0.0; n_tracks];
            self.stamp = vec![0; n_tracks];
            self.epoch = 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.epoch
    }
}

/// Scores every track listened to by a retained neighbor.
///
/// Returns `(track, score)` pairs ordered by track index, with scores in the
/// same units as the neighbor weights. Tracks of `user` are left out when
/// `exclude_seen` is set.
pub fn score_tracks(
    index: &InteractionIndex,
    neighbors: &NeighborSet,
    user: UserIdx,
    exclude_seen: bool,
) -> Vec<(TrackIdx, f64)> {
    let mut ws = Workspace::new(index);
    score_tracks_into(index, neighbors, user, exclude_seen, &mut ws);
    std::mem::take(&mut ws.scores)
}

fn score_tracks_into(
    index: &InteractionIndex,
    neighbors: &NeighborSet,
    user: UserIdx,
    exclude_seen: bool,
    ws: &mut Workspace,
) {
    let epoch = ws.next_epoch(index.n_tracks());
    ws.touched.clear();
    for &(v, w) in &neighbors.neighbors {
        let c_v = index.total_plays(v) as f64;
        let vote = w / c_v;
        for &t in index.tracks_of(v) {
            let ti = t as usize;
            if ws.stamp[ti] != epoch {
                ws.stamp[ti] = epoch;
                ws.acc[ti] = 0.0;
                ws.touched.push(t);
            }
            ws.acc[ti] += vote;
        }
    }
    if exclude_seen {
        // Marking with the previous epoch hides the track from collection below.
        for &t in index.tracks_of(user) {
            ws.stamp[t as usize] = epoch.wrapping_sub(1);
        }
    }
    ws.touched.sort_unstable();
    ws.scores.clear();
    for &t in &ws.touched {
        let ti = t as usize;
        if ws.stamp[ti] == epoch && ws.acc[ti] > 0.0 {
            ws.scores.push((t, ws.acc[ti]));
        }
    }
}

/// Ranking order: score descending, then document frequency descending, then
/// track index ascending.
fn rank_order(index: &InteractionIndex, a: &(TrackIdx, f64), b: &(TrackIdx, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then_with(|| index.df(b.0).cmp(&index.df(a.0)))
        .then(a.0.cmp(&b.0))
}

/// Sorts `scores` into rank order, keeps the best `k` and pads to length `k`.
///
/// Reported scores are converted to the idf table's base. Popularity padding
/// that runs out of eligible tracks continues with dummy slots.
pub fn rank_and_pad(
    index: &InteractionIndex,
    idf: &IdfTable,
    user: UserIdx,
    scores: &mut Vec<(TrackIdx, f64)>,
    k: usize,
    pad_strategy: PadStrategy,
    popular: Option<&[TrackIdx]>,
) -> Recommendation {
    let by_rank = |a: &(TrackIdx, f64), b: &(TrackIdx, f64)| rank_order(index, a, b);
    if scores.len() > k {
        scores.select_nth_unstable_by(k - 1, by_rank);
        scores.truncate(k);
    }
    scores.sort_unstable_by(by_rank);

    let mut items: Vec<Slot> = Vec::with_capacity(k);
    items.extend(scores.iter().map(|&(t, _)| Slot::Track(t)));
    let reported = scores.iter().map(|&(_, s)| idf.to_base_units(s)).collect();

    if items.len() < k && pad_strategy == PadStrategy::Popularity {
        let owned;
        let popular = match popular {
            Some(p) => p,
            None => {
                owned = index.tracks_by_popularity();
                &owned
            }
        };
        let history = index.tracks_of(user);
        for &t in popular {
            if items.len() == k {
                break;
            }
            if history.binary_search(&t).is_ok() || scores.iter().any(|&(s, _)| s == t) {
                continue;
            }
            items.push(Slot::Popular(t));
        }
        if items.len() < k {
            log::debug!("popularity padding exhausted for user {user}; using dummy ids");
        }
    }
    let mut next_dummy = 1;
    while items.len() < k {
        items.push(Slot::Dummy(next_dummy));
        next_dummy += 1;
    }
    Recommendation {
        user,
        items,
        scores: reported,
    }
}

/// Runs the whole per-user pipeline against a shared index.
pub struct Recommender<'a> {
    index: &'a InteractionIndex,
    idf: &'a IdfTable,
    config: Config,
    popular: Option<Vec<TrackIdx>>,
}

impl<'a> Recommender<'a> {
    pub fn new(index: &'a InteractionIndex, idf: &'a IdfTable, config: Config) -> Result<Self, RecommendError> {
        config.validate()?;
        if idf.len() != index.n_tracks() {
            return Err(RecommendError::IdfMismatch {
                idf: idf.len(),
                index: index.n_tracks(),
            });
        }
        let popular = (config.pad_strategy == PadStrategy::Popularity).then(|| index.tracks_by_popularity());
        Ok(Self {
            index,
            idf,
            config,
            popular,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    fn check_user(&self, user: UserIdx) -> Result<(), RecommendError> {
        if (user as usize) < self.index.n_users() {
            Ok(())
        } else {
            Err(RecommendError::UserOutOfRange {
                user,
                n_users: self.index.n_users(),
            })
        }
    }

    pub fn neighbors(&self, user: UserIdx) -> Result<NeighborSet, RecommendError> {
        self.check_user(user)?;
        let mut ws = Workspace::new(self.index);
        self.find_neighbors(user, &mut ws);
        Ok(ws.neighbor_set)
    }

    fn find_neighbors(&self, user: UserIdx, ws: &mut Workspace) {
        candidate_neighbors_into(
            self.index,
            self.idf,
            user,
            self.config.max_posting_len,
            &mut ws.neighbors,
            &mut ws.candidates,
        );
        prune_into(&ws.candidates, self.config.s, &mut ws.neighbor_set);
    }

    pub fn recommend(&self, user: UserIdx) -> Result<Recommendation, RecommendError> {
        self.recommend_with(user, &mut Workspace::new(self.index))
    }

    pub fn recommend_with(&self, user: UserIdx, ws: &mut Workspace) -> Result<Recommendation, RecommendError> {
        self.check_user(user)?;
        self.find_neighbors(user, ws);
        let neighbors = std::mem::take(&mut ws.neighbor_set);
        score_tracks_into(self.index, &neighbors, user, self.config.exclude_seen, ws);
        ws.neighbor_set = neighbors;
        Ok(rank_and_pad(
            self.index,
            self.idf,
            user,
            &mut ws.scores,
            self.config.k,
            self.config.pad_strategy,
            self.popular.as_deref(),
        ))
    }

    /// Recommends for every user in `users`, in input order.
    ///
    /// Users are processed in parallel on `config.workers` threads; the result
    /// is identical for any worker count.
    pub fn recommend_all(&self, users: &[UserIdx]) -> Result<Vec<Recommendation>, RecommendError> {
        let run = || {
            users
                .par_iter()
                .map_init(|| Workspace::new(self.index), |ws, &u| self.recommend_with(u, ws))
                .collect::<Vec<_>>()
        };
        let results = if self.config.workers == 0 {
            run()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.config.workers)
                .build()
                .map_err(|e| RecommendError::ThreadPool(e.to_string()))?
                .install(run)
        };
        results.into_iter().collect()
    }
}

pub fn recommend_all(
    index: &InteractionIndex,
    idf: &IdfTable,
    users: &[UserIdx],
    config: &Config,
) -> Result<Vec<Recommendation>, RecommendError> {
    Recommender::new(index, idf, config.clone())?.recommend_all(users)
}

/// Renders dummy slots so they can never be mistaken for a real track id.
///
/// Dummies print as bare decimals (`1`, `2`, ...) unless one of those strings
/// is a track id, in which case every dummy gets a reserved prefix.
#[derive(Debug, Clone)]
pub struct DummyNames {
    prefix: String,
}

impl DummyNames {
    pub fn for_vocab(tracks: &Vocabulary, k: usize) -> Self {
        let collides = |prefix: &str| (1..=k).any(|n| tracks.contains(&format!("{prefix}{n}")));
        let mut prefix = String::new();
        if collides(&prefix) {
            prefix.push_str("pad-");
            while collides(&prefix) {
                prefix.insert(0, '~');
            }
        }
        Self { prefix }
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn name(&self, n: u32) -> String {
        format!("{}{}", self.prefix, n)
    }
}

/// Writes one line per recommendation:
/// `<user> <track_1> ... <track_k>`, space separated, external ids.
pub fn write_recommendations<W: Write>(
    out: &mut W,
    recs: &[Recommendation],
    users: &Vocabulary,
    tracks: &Vocabulary,
    dummies: &DummyNames,
) -> io::Result<()> {
    for rec in recs {
        out.write_all(users.lookup(rec.user).expect("user in vocabulary").as_bytes())?;
        for slot in &rec.items {
            out.write_all(b" ")?;
            match slot.track() {
                Some(t) => out.write_all(tracks.lookup(t).expect("track in vocabulary").as_bytes())?,
                None => {
                    if let Slot::Dummy(n) = slot {
                        out.write_all(dummies.name(*n).as_bytes())?;
                    }
                }
            }
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}
