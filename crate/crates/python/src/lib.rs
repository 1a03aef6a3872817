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

//! Python bindings for `tastecf`.
//!
//! The extension module is named `tastecf` and exposes `Dataset`, `Index`
//! and the ranking metrics. Users and tracks are addressed by their external
//! string ids throughout.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Cursor;
use std::path::PathBuf;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use tastecf::ingest::read_triplet_file;
use tastecf::{
    average_precision as ap_impl, compute_idf, load_dataset, parse_triplets_with, precision_at_k as pk_impl,
    prune, save_dataset, split_history, ApMode, Config, DummyNames, FormatError, IdfTable, IndexBundle,
    IngestError, PadStrategy, Recommender, TripletBatch, UserIdx,
};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn format_error(e: FormatError) -> PyErr {
    match e {
        FormatError::Io(io) => io.into(),
        other => value_error(other),
    }
}

fn ingest_error(e: IngestError) -> PyErr {
    match e {
        IngestError::Io(io) => io.into(),
        other => value_error(other),
    }
}

fn delimiter_byte(delimiter: &str) -> PyResult<u8> {
    match delimiter.as_bytes() {
        [b] => Ok(*b),
        _ => Err(value_error("delimiter must be a single byte")),
    }
}

fn ap_mode(mode: &str) -> PyResult<ApMode> {
    mode.parse().map_err(value_error)
}

/// A set of `(user, track, play_count)` triplets.
#[pyclass(module = "tastecf", frozen)]
struct Dataset {
    batch: TripletBatch,
}

#[pymethods]
impl Dataset {
    /// Parses delimited triplet text.
    #[staticmethod]
    #[pyo3(signature = (text, delimiter = "\t"))]
    fn parse(text: &str, delimiter: &str) -> PyResult<Self> {
        let batch = parse_triplets_with(Cursor::new(text.as_bytes()), delimiter_byte(delimiter)?)
            .map_err(ingest_error)?;
        Ok(Self { batch })
    }

    /// Reads a delimited triplet text file.
    #[staticmethod]
    #[pyo3(signature = (path, delimiter = "\t"))]
    fn read(py: Python<'_>, path: PathBuf, delimiter: &str) -> PyResult<Self> {
        let delimiter = delimiter_byte(delimiter)?;
        let batch = py.detach(|| read_triplet_file(&path, delimiter)).map_err(ingest_error)?;
        Ok(Self { batch })
    }

    /// Loads a binary dataset written by `save` or `tastecf ingest`.
    #[staticmethod]
    fn load(py: Python<'_>, path: PathBuf) -> PyResult<Self> {
        let batch = py.detach(|| load_dataset(&path)).map_err(format_error)?;
        Ok(Self { batch })
    }

    fn save(&self, py: Python<'_>, path: PathBuf) -> PyResult<()> {
        py.detach(|| save_dataset(&self.batch, &path)).map_err(format_error)
    }

    /// Writes the triplets as tab-separated text.
    fn write_text(&self, path: PathBuf) -> PyResult<()> {
        Ok(self.batch.write_triplets(File::create(path)?)?)
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.batch.user_vocab().len()
    }

    #[getter]
    fn n_tracks(&self) -> usize {
        self.batch.track_vocab().len()
    }

    fn __len__(&self) -> usize {
        self.batch.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(triplets={}, users={}, tracks={})",
            self.batch.len(),
            self.n_users(),
            self.n_tracks()
        )
    }

    /// All triplets in input order as `(user, track, count)` tuples.
    fn triplets(&self) -> Vec<(String, String, u32)> {
        let (users, tracks) = (self.batch.user_vocab(), self.batch.track_vocab());
        self.batch
            .triplets()
            .map(|(u, t, c)| (users.lookup(u).unwrap().to_string(), tracks.lookup(t).unwrap().to_string(), c))
            .collect()
    }

    /// Splits every history into a visible dataset and hidden track sets.
    ///
    /// Returns `(visible, hidden)` where `hidden` maps each evaluable user to
    /// the set of tracks held out.
    #[pyo3(signature = (fraction = 0.5, seed = 0))]
    fn split(&self, fraction: f64, seed: u64) -> PyResult<(Dataset, HashMap<String, HashSet<String>>)> {
        let split = split_history(&self.batch, fraction, seed).map_err(value_error)?;
        let (users, tracks) = (split.hidden.user_vocab(), split.hidden.track_vocab());
        let hidden = split
            .hidden_sets()
            .into_iter()
            .map(|(u, set)| {
                let set = set.into_iter().map(|t| tracks.lookup(t).unwrap().to_string()).collect();
                (users.lookup(u).unwrap().to_string(), set)
            })
            .collect();
        Ok((Dataset { batch: split.visible }, hidden))
    }
}

/// Interaction index with an idf table, ready to serve recommendations.
#[pyclass(module = "tastecf", frozen)]
struct Index {
    bundle: IndexBundle,
    idf: IdfTable,
}

impl Index {
    fn from_bundle(bundle: IndexBundle, log_base: Option<f64>) -> PyResult<Self> {
        let idf = match (&bundle.idf, log_base) {
            (Some(stored), None) => stored.clone(),
            (Some(stored), Some(base)) if stored.log_base() == base => stored.clone(),
            (_, base) => compute_idf(&bundle.index, base.unwrap_or(std::f64::consts::E)).map_err(value_error)?,
        };
        Ok(Self { bundle, idf })
    }

    fn user(&self, id: &str) -> PyResult<UserIdx> {
        self.bundle
            .user_vocab
            .get(id)
            .ok_or_else(|| PyKeyError::new_err(format!("unknown user {id:?}")))
    }

    fn user_id(&self, u: UserIdx) -> String {
        self.bundle.user_vocab.lookup(u).unwrap().to_string()
    }
}

#[pymethods]
impl Index {
    #[new]
    #[pyo3(signature = (dataset, log_base = std::f64::consts::E))]
    fn new(py: Python<'_>, dataset: &Dataset, log_base: f64) -> PyResult<Self> {
        let bundle = py
            .detach(|| IndexBundle::from_batch(&dataset.batch))
            .map_err(value_error)?;
        Self::from_bundle(bundle, Some(log_base))
    }

    /// Loads an index written by `save` or `tastecf build`. A stored idf
    /// table is reused unless a different `log_base` is requested.
    #[staticmethod]
    #[pyo3(signature = (path, log_base = None))]
    fn load(py: Python<'_>, path: PathBuf, log_base: Option<f64>) -> PyResult<Self> {
        let bundle = py.detach(|| IndexBundle::load(&path)).map_err(format_error)?;
        Self::from_bundle(bundle, log_base)
    }

    /// Saves the index together with its idf table.
    fn save(&self, py: Python<'_>, path: PathBuf) -> PyResult<()> {
        let bundle = IndexBundle {
            idf: Some(self.idf.clone()),
            ..self.bundle.clone()
        };
        py.detach(|| bundle.save(&path)).map_err(format_error)
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.bundle.index.n_users()
    }

    #[getter]
    fn n_tracks(&self) -> usize {
        self.bundle.index.n_tracks()
    }

    #[getter]
    fn n_triplets(&self) -> usize {
        self.bundle.index.n_triplets()
    }

    #[getter]
    fn log_base(&self) -> f64 {
        self.idf.log_base()
    }

    fn __repr__(&self) -> String {
        format!(
            "Index(users={}, tracks={}, triplets={}, log_base={})",
            self.n_users(),
            self.n_tracks(),
            self.n_triplets(),
            self.log_base()
        )
    }

    /// Number of users who listened to `track`.
    fn df(&self, track: &str) -> PyResult<usize> {
        let t = self
            .bundle
            .track_vocab
            .get(track)
            .ok_or_else(|| PyKeyError::new_err(format!("unknown track {track:?}")))?;
        Ok(self.bundle.index.df(t))
    }

    fn idf(&self, track: &str) -> PyResult<f64> {
        let t = self
            .bundle
            .track_vocab
            .get(track)
            .ok_or_else(|| PyKeyError::new_err(format!("unknown track {track:?}")))?;
        Ok(self.idf.get(t))
    }

    /// Sum of idf over the tracks both users listened to.
    fn similarity(&self, u: &str, v: &str) -> PyResult<f64> {
        let w = tastecf::similarity(&self.bundle.index, &self.idf, self.user(u)?, self.user(v)?);
        Ok(self.idf.to_base_units(w))
    }

    /// Retained neighbors of `user` as `(user, weight)`, strongest first.
    #[pyo3(signature = (user, s = 0.4))]
    fn neighbors(&self, user: &str, s: f64) -> PyResult<Vec<(String, f64)>> {
        if !(0.0..=1.0).contains(&s) {
            return Err(value_error(format!("s must lie in [0, 1], got {s}")));
        }
        let candidates = tastecf::candidate_neighbors(&self.bundle.index, &self.idf, self.user(user)?);
        Ok(prune(&candidates, s)
            .neighbors
            .iter()
            .map(|&(v, w)| (self.user_id(v), self.idf.to_base_units(w)))
            .collect())
    }

    /// Top-`k` track ids for each user (every user when `users` is None).
    ///
    /// Lists always hold exactly `k` entries; padding entries are dummy ids
    /// or popular tracks depending on `pad`.
    #[pyo3(signature = (
        users = None, *, s = 0.4, k = 500, exclude_seen = true, pad = "dummy",
        max_posting_len = None, workers = 0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn recommend(
        &self,
        py: Python<'_>,
        users: Option<Vec<String>>,
        s: f64,
        k: usize,
        exclude_seen: bool,
        pad: &str,
        max_posting_len: Option<usize>,
        workers: usize,
    ) -> PyResult<Vec<(String, Vec<String>)>> {
        let config = Config {
            s,
            k,
            log_base: self.idf.log_base(),
            exclude_seen,
            pad_strategy: pad.parse::<PadStrategy>().map_err(value_error)?,
            max_posting_len,
            workers,
            ..Config::default()
        };
        let users: Vec<UserIdx> = match users {
            Some(ids) => ids.iter().map(|id| self.user(id)).collect::<PyResult<_>>()?,
            None => (0..self.n_users() as UserIdx).collect(),
        };
        let recommender = Recommender::new(&self.bundle.index, &self.idf, config).map_err(value_error)?;
        let recs = py.detach(|| recommender.recommend_all(&users)).map_err(value_error)?;
        let dummies = DummyNames::for_vocab(&self.bundle.track_vocab, k);
        Ok(recs
            .iter()
            .map(|rec| {
                let items = rec
                    .items
                    .iter()
                    .map(|slot| match slot.track() {
                        Some(t) => self.bundle.track_vocab.lookup(t).unwrap().to_string(),
                        None => match slot {
                            tastecf::Slot::Dummy(n) => dummies.name(*n),
                            _ => unreachable!("only dummy slots carry no track"),
                        },
                    })
                    .collect();
                (self.user_id(rec.user), items)
            })
            .collect())
    }
}

/// Fraction of the first `k` ranked items that are relevant.
#[pyfunction]
fn precision_at_k(ranking: Vec<String>, relevant: HashSet<String>, k: usize) -> PyResult<f64> {
    if k == 0 {
        return Err(value_error("k must be at least 1"));
    }
    Ok(pk_impl(&ranking, &relevant, k))
}

/// Average precision truncated at `k`; `mode` is "challenge" or "paper".
#[pyfunction]
#[pyo3(signature = (ranking, relevant, k = 500, mode = "challenge"))]
fn average_precision(ranking: Vec<String>, relevant: HashSet<String>, k: usize, mode: &str) -> PyResult<f64> {
    if k == 0 {
        return Err(value_error("k must be at least 1"));
    }
    Ok(ap_impl(&ranking, &relevant, k, ap_mode(mode)?))
}

/// Mean of the per-user average precision over every user in `hidden`.
///
/// `recommendations` maps users to ranked track lists and must cover every
/// user in `hidden`.
#[pyfunction]
#[pyo3(signature = (recommendations, hidden, k = 500, mode = "challenge"))]
fn mean_average_precision(
    recommendations: HashMap<String, Vec<String>>,
    hidden: HashMap<String, HashSet<String>>,
    k: usize,
    mode: &str,
) -> PyResult<f64> {
    let mut hidden: Vec<(String, HashSet<String>)> = hidden.into_iter().collect();
    hidden.sort_by(|a, b| a.0.cmp(&b.0));
    let report = tastecf::mean_average_precision(|u| recommendations.get(u).cloned(), &hidden, k, ap_mode(mode)?)
        .map_err(value_error)?;
    Ok(report.map_score)
}

#[pymodule]
#[pyo3(name = "tastecf")]
fn tastecf_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Index>()?;
    m.add_function(wrap_pyfunction!(precision_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(mean_average_precision, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
