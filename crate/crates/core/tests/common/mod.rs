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

//! Fixtures and independent reference implementations for integration tests.
//!
//! Nothing here calls into the library's scoring path: the reference
//! recommender works on a dense user × track matrix and evaluates the
//! scoring double sum literally.

#![allow(dead_code)]

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tastecf::{parse_triplets, Slot, TripletBatch};

pub const T1_TEXT: &str = "u1\ta\t2\nu1\tb\t1\nu2\tb\t3\nu2\tc\t1\nu3\tc\t5\nu4\ta\t1\nu4\tb\t1\nu4\tc\t1\n";

/// Random small instance: up to `max_users` users, `max_tracks` tracks and a
/// per-instance listening density.
pub fn random_instance(rng: &mut ChaCha8Rng, max_users: usize, max_tracks: usize) -> TripletBatch {
    let n_users = rng.random_range(2..=max_users);
    let n_tracks = rng.random_range(1..=max_tracks);
    let density = rng.random_range(0.03..0.6);
    let mut text = String::new();
    for u in 0..n_users {
        for t in 0..n_tracks {
            if rng.random_bool(density) {
                let count = rng.random_range(1..=6u32);
                writeln!(text, "u{u}\tt{t}\t{count}").unwrap();
            }
        }
    }
    if text.is_empty() {
        text.push_str("u0\tt0\t1\n");
    }
    parse_triplets(text.as_bytes()).unwrap()
}

/// Dense copy of a batch: `plays[u][t]` is the play count (0 when unheard).
pub struct Dense {
    pub plays: Vec<Vec<u32>>,
    pub n_users: usize,
    pub n_tracks: usize,
    df: Vec<usize>,
    totals: Vec<u64>,
}

impl Dense {
    pub fn from_batch(batch: &TripletBatch) -> Self {
        let n_users = batch.user_vocab().len();
        let n_tracks = batch.track_vocab().len();
        let mut plays = vec![vec![0u32; n_tracks]; n_users];
        for (u, t, c) in batch.triplets() {
            plays[u as usize][t as usize] = c;
        }
        let df = (0..n_tracks)
            .map(|t| plays.iter().filter(|row| row[t] > 0).count())
            .collect();
        let totals = plays
            .iter()
            .map(|row| row.iter().map(|&c| u64::from(c)).sum())
            .collect();
        Self { plays, n_users, n_tracks, df, totals }
    }

    pub fn heard(&self, u: usize, t: usize) -> bool {
        self.plays[u][t] > 0
    }

    pub fn df(&self, t: usize) -> usize {
        self.df[t]
    }

    pub fn total(&self, u: usize) -> u64 {
        self.totals[u]
    }

    /// Top `k` unseen tracks by listener count, ties by index.
    pub fn popular_unseen(&self, u: usize, k: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_tracks).filter(|&t| !self.heard(u, t)).collect();
        order.sort_by(|&a, &b| self.df[b].cmp(&self.df[a]).then(a.cmp(&b)));
        order.truncate(k);
        order
    }

    /// `ln(n / df)` per track, 0 for tracks nobody heard.
    pub fn idf(&self) -> Vec<f64> {
        (0..self.n_tracks)
            .map(|t| match self.df(t) {
                0 => 0.0,
                df => (self.n_users as f64 / df as f64).ln(),
            })
            .collect()
    }

    /// Similarity to every other user: idf summed over shared tracks in
    /// ascending track order. `None` for the user itself.
    pub fn weights(&self, idf: &[f64], u: usize) -> Vec<Option<f64>> {
        (0..self.n_users)
            .map(|v| {
                (v != u).then(|| {
                    (0..self.n_tracks)
                        .filter(|&t| self.heard(u, t) && self.heard(v, t))
                        .map(|t| idf[t])
                        .fold(0.0, |acc, x| acc + x)
                })
            })
            .collect()
    }

    /// Retained neighbors `(v, w)` ordered by weight descending then index.
    pub fn neighbors(&self, idf: &[f64], u: usize, s: f64) -> Vec<(usize, f64)> {
        let weights = self.weights(idf, u);
        let w_max = weights.iter().flatten().fold(0.0f64, |m, &w| m.max(w));
        let mut kept: Vec<(usize, f64)> = weights
            .iter()
            .enumerate()
            .filter_map(|(v, w)| w.map(|w| (v, w)))
            .filter(|&(_, w)| w > 0.0 && w >= s * w_max)
            .collect();
        kept.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        kept
    }

    /// Score of every track: sum over retained neighbors v who heard it of
    /// `w_uv / c_v`, neighbors taken in retained order.
    pub fn scores(&self, idf: &[f64], u: usize, s: f64, exclude_seen: bool) -> Vec<(usize, f64)> {
        let neighbors = self.neighbors(idf, u, s);
        (0..self.n_tracks)
            .filter(|&i| !(exclude_seen && self.heard(u, i)))
            .map(|i| {
                let score = neighbors
                    .iter()
                    .filter(|&&(v, _)| self.heard(v, i))
                    .fold(0.0, |acc, &(v, w)| acc + w / self.total(v) as f64);
                (i, score)
            })
            .filter(|&(_, score)| score > 0.0)
            .collect()
    }

    /// Full reference recommendation list with dummy padding.
    pub fn recommend(&self, idf: &[f64], u: usize, s: f64, k: usize, exclude_seen: bool) -> Vec<Slot> {
        let mut scored = self.scores(idf, u, s, exclude_seen);
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then(self.df(b.0).cmp(&self.df(a.0)))
                .then(a.0.cmp(&b.0))
        });
        let mut out: Vec<Slot> = scored.iter().take(k).map(|&(t, _)| Slot::Track(t as u32)).collect();
        let mut n = 1;
        while out.len() < k {
            out.push(Slot::Dummy(n));
            n += 1;
        }
        out
    }
}

/// Reference average precision from raw lists, written out loop by loop.
pub fn reference_ap(ranking: &[String], hidden: &HashSet<String>, k: usize, paper_mode: bool) -> f64 {
    if hidden.is_empty() {
        return 0.0;
    }
    let depth = k.min(ranking.len());
    let mut total = 0.0;
    for pos in 1..=depth {
        if !hidden.contains(&ranking[pos - 1]) {
            continue;
        }
        let correct = ranking[..pos].iter().filter(|x| hidden.contains(*x)).count();
        total += correct as f64 / pos as f64;
    }
    let n_u = if paper_mode { k.min(ranking.len()) } else { k.min(hidden.len()) };
    total / n_u as f64
}

/// Planted taste clusters: `n_clusters` disjoint blocks of tracks, every user
/// drawn from one block with a skewed in-block popularity, plus a little
/// out-of-block noise. Roughly `plays_per_user` play events per user.
pub fn planted_clusters(
    seed: u64,
    n_users: usize,
    n_tracks: usize,
    n_clusters: usize,
    plays_per_user: usize,
) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = n_tracks / n_clusters;
    // in-block popularity ~ 1 / (rank + 1)^0.8
    let weights: Vec<f64> = (0..block).map(|r| 1.0 / ((r + 1) as f64).powf(0.8)).collect();
    let total_weight: f64 = weights.iter().sum();
    let mut text = String::new();
    for u in 0..n_users {
        let cluster = u % n_clusters;
        let n_plays = rng.random_range(plays_per_user * 3 / 4..=plays_per_user * 5 / 4);
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..n_plays {
            let track = if rng.random_bool(0.1) {
                rng.random_range(0..n_tracks)
            } else {
                let mut x = rng.random_range(0.0..total_weight);
                let mut r = 0;
                while r + 1 < block && x >= weights[r] {
                    x -= weights[r];
                    r += 1;
                }
                cluster * block + r
            };
            *counts.entry(track).or_insert(0u32) += 1;
        }
        for (t, c) in counts {
            writeln!(text, "user{u:05}\tTR{t:05}\t{c}").unwrap();
        }
    }
    text
}

/// Zipf-like synthetic listening log with exactly `n_triplets` unique triplets
/// spread over `n_users` users and `n_tracks` tracks.
pub fn synthetic_log(seed: u64, n_users: usize, n_tracks: usize, n_triplets: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_user = n_triplets / n_users;
    let mut extra = n_triplets - per_user * n_users;
    let mut text = String::with_capacity(n_triplets * 28);
    let mut picked = std::collections::BTreeSet::new();
    for u in 0..n_users {
        let want = per_user + usize::from(extra > 0);
        extra = extra.saturating_sub(1);
        picked.clear();
        while picked.len() < want {
            // popularity ~ 1/x over track ranks
            let x: f64 = rng.random_range(0.0f64..1.0);
            let t = ((n_tracks as f64).powf(x) as usize).saturating_sub(1).min(n_tracks - 1);
            picked.insert(t);
        }
        for &t in &picked {
            let c = 1 + (rng.random_range(0..100u32) / 30);
            writeln!(text, "{u:040x}\tTR{t:016X}\t{c}").unwrap();
        }
    }
    text
}
