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

//! Shared domain types: identifier interning, triplets and the run configuration.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use thiserror::Error;

/// Dense index of a user in a [`Vocabulary`].
pub type UserIdx = u32;
/// Dense index of a track in a [`Vocabulary`].
pub type TrackIdx = u32;

/// One raw listening record: `user` played `track` `play_count` times.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub user: String,
    pub track: String,
    pub play_count: u32,
}

/// Bidirectional mapping between external string ids and dense indexes.
///
/// Indexes are handed out in first-seen order starting at zero, so the mapping
/// is always a bijection onto `0..len()`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    ids: IndexSet<Box<str>>,
}

impl Vocabulary {
    /// Largest number of distinct ids a vocabulary can hold.
    pub const CAPACITY: usize = u32::MAX as usize;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            ids: IndexSet::with_capacity(capacity),
        }
    }

    /// Returns the index of `id`, registering it first if it is new.
    ///
    /// Panics if the vocabulary already holds [`Vocabulary::CAPACITY`] ids;
    /// ingestion checks [`Vocabulary::is_full`] before calling this.
    pub fn intern(&mut self, id: &str) -> u32 {
        if let Some(idx) = self.ids.get_index_of(id) {
            return idx as u32;
        }
        assert!(!self.is_full(), "vocabulary capacity exceeded");
        let (idx, _) = self.ids.insert_full(id.into());
        idx as u32
    }

    pub fn get(&self, id: &str) -> Option<u32> {
        self.ids.get_index_of(id).map(|idx| idx as u32)
    }

    pub fn lookup(&self, idx: u32) -> Option<&str> {
        self.ids.get_index(idx as usize).map(|s| &**s)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.ids.len() >= Self::CAPACITY
    }

    /// External ids in index order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.ids.iter().map(|s| &**s)
    }
}

impl<S: AsRef<str>> FromIterator<S> for Vocabulary {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut vocab = Vocabulary::new();
        for id in iter {
            vocab.intern(id.as_ref());
        }
        vocab
    }
}

/// How recommendation lists shorter than `k` are filled up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PadStrategy {
    /// Synthetic ids `1, 2, ...` that never match a real track.
    #[default]
    Dummy,
    /// Most widely listened tracks the user has not been recommended or seen.
    Popularity,
}

/// Normalizer used by average precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApMode {
    /// Divide by `min(k, |hidden|)`, as the challenge scorer does.
    #[default]
    Challenge,
    /// Divide by `min(k, |ranking|)`, the number of tracks recommended.
    PaperVerbatim,
}

impl fmt::Display for PadStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PadStrategy::Dummy => "dummy",
            PadStrategy::Popularity => "popularity",
        })
    }
}

impl FromStr for PadStrategy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dummy" => Ok(PadStrategy::Dummy),
            "popularity" => Ok(PadStrategy::Popularity),
            other => Err(ConfigError::UnknownValue {
                field: "pad_strategy",
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for ApMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApMode::Challenge => "challenge",
            ApMode::PaperVerbatim => "paper",
        })
    }
}

impl FromStr for ApMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "challenge" => Ok(ApMode::Challenge),
            "paper" | "paper_verbatim" => Ok(ApMode::PaperVerbatim),
            other => Err(ConfigError::UnknownValue {
                field: "ap_mode",
                value: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("pruning ratio s must lie in [0, 1], got {0}")]
    PruningRatio(f64),
    #[error("recommendation length k must be at least 1")]
    ZeroLength,
    #[error("log base must be positive, finite and different from 1, got {0}")]
    LogBase(f64),
    #[error("max posting length must be at least 1")]
    ZeroPostingLength,
    #[error("unknown {field} value {value:?}")]
    UnknownValue { field: &'static str, value: String },
}

/// Run configuration shared by recommendation and evaluation.
///
/// The defaults reproduce the published system: `s = 0.4`, lists of 500
/// tracks, natural-log idf and dummy padding.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Neighbors with similarity below `s` times the best neighbor's are dropped.
    pub s: f64,
    /// Recommendation list length.
    pub k: usize,
    pub log_base: f64,
    /// Never recommend tracks already in the user's known history.
    pub exclude_seen: bool,
    pub pad_strategy: PadStrategy,
    pub ap_mode: ApMode,
    /// Seed for history splitting.
    pub seed: u64,
    /// Skip tracks listened by more than this many users during neighbor search.
    pub max_posting_len: Option<usize>,
    /// Worker threads for batch recommendation; 0 uses every available core.
    /// Output does not depend on this value.
    pub workers: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            s: 0.4,
            k: 500,
            log_base: std::f64::consts::E,
            exclude_seen: true,
            pad_strategy: PadStrategy::Dummy,
            ap_mode: ApMode::Challenge,
            seed: 0,
            max_posting_len: None,
            workers: 0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.s) {
            return Err(ConfigError::PruningRatio(self.s));
        }
        if self.k == 0 {
            return Err(ConfigError::ZeroLength);
        }
        validate_log_base(self.log_base)?;
        if self.max_posting_len == Some(0) {
            return Err(ConfigError::ZeroPostingLength);
        }
        Ok(())
    }
}

pub(crate) fn validate_log_base(base: f64) -> Result<(), ConfigError> {
    if base.is_finite() && base > 0.0 && base != 1.0 {
        Ok(())
    } else {
        Err(ConfigError::LogBase(base))
    }
}
