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

//! Inverse document frequency of tracks: `idf(t) = log(n / df(t))`, where
//! `n` is the number of users in the index.
//!
//! The table keeps natural-log values alongside the values in the requested
//! base. Similarity, pruning and ranking run on the natural-log values, so
//! changing the base rescales reported weights and scores without being able
//! to perturb any ordering through rounding.

use thiserror::Error;

use crate::index::InteractionIndex;
use crate::model::{validate_log_base, ConfigError, TrackIdx};

#[derive(Debug, Error, PartialEq)]
pub enum IdfError {
    #[error("cannot compute idf over an index with no users")]
    EmptyIndex,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    natural: Vec<f64>,
    values: Vec<f64>,
    n_users: usize,
    log_base: f64,
}

/// Computes per-track idf in the given base.
///
/// Tracks with no listeners cannot occur in an index built from triplets,
/// but can after a history split; they get 0 and are never reached by
/// neighbor search.
pub fn compute_idf(index: &InteractionIndex, log_base: f64) -> Result<IdfTable, IdfError> {
    validate_log_base(log_base)?;
    let n_users = index.n_users();
    if n_users == 0 {
        return Err(IdfError::EmptyIndex);
    }
    let n = n_users as f64;
    let natural = (0..index.n_tracks() as TrackIdx)
        .map(|t| match index.df(t) {
            0 => 0.0,
            df => (n / df as f64).ln(),
        })
        .collect();
    IdfTable::from_natural(natural, n_users, log_base)
}

impl IdfTable {
    /// Builds a table from natural-log idf values.
    pub fn from_natural(natural: Vec<f64>, n_users: usize, log_base: f64) -> Result<Self, IdfError> {
        validate_log_base(log_base)?;
        let ln_base = log_base.ln();
        let values = natural.iter().map(|&x| x / ln_base).collect();
        Ok(Self {
            natural,
            values,
            n_users,
            log_base,
        })
    }

    /// Idf of `track` in the table's base.
    pub fn get(&self, track: TrackIdx) -> f64 {
        self.values[track as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Natural-log idf values, the units all weights are accumulated in.
    pub fn natural(&self) -> &[f64] {
        &self.natural
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn log_base(&self) -> f64 {
        self.log_base
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Converts a quantity accumulated from natural-log idf into table units.
    pub fn to_base_units(&self, natural: f64) -> f64 {
        natural / self.log_base.ln()
    }
}
