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

//! IDF-weighted user-based collaborative filtering for implicit feedback.
//!
//! Listening histories are treated like documents whose terms are tracks.
//! Two users are as similar as the summed inverse document frequency of the
//! tracks they share; a user's retained neighbors then vote for their own
//! tracks, each vote scaled by the neighbor's similarity and divided by the
//! neighbor's total play count.
//!
//! ```
//! use tastecf::{compute_idf, parse_triplets, Config, InteractionIndex, Recommender};
//!
//! let text = "u1\ta\t2\nu1\tb\t1\nu2\tb\t3\nu2\tc\t1\nu3\tc\t5\nu4\ta\t1\nu4\tb\t1\nu4\tc\t1\n";
//! let batch = parse_triplets(text.as_bytes()).unwrap();
//! let index = InteractionIndex::build(&batch).unwrap();
//! let idf = compute_idf(&index, std::f64::consts::E).unwrap();
//! let config = Config { k: 3, ..Config::default() };
//! let rec = Recommender::new(&index, &idf, config).unwrap().recommend(0).unwrap();
//! let first = rec.tracks().next().unwrap();
//! assert_eq!(batch.track_vocab().lookup(first), Some("c"));
//! ```

pub mod cli;
mod codec;
pub mod eval;
pub mod idf;
pub mod index;
pub mod ingest;
pub mod model;
pub mod recommend;
pub mod similarity;

#[cfg(test)]
mod testutil;

pub use codec::FormatError;
pub use eval::{
    average_precision, evaluate_recommendations, mean_average_precision, precision_at_k, split_history,
    EvalError, EvalReport, HistorySplit, UserAp,
};
pub use idf::{compute_idf, IdfError, IdfTable};
pub use index::{IndexBundle, IndexError, InteractionIndex};
pub use ingest::{load_dataset, parse_triplets, parse_triplets_with, save_dataset, IngestError, TripletBatch};
pub use model::{ApMode, Config, ConfigError, PadStrategy, TrackIdx, Triplet, UserIdx, Vocabulary};
pub use recommend::{
    rank_and_pad, recommend_all, score_tracks, write_recommendations, DummyNames, RecommendError, Recommendation,
    Recommender, Slot,
};
pub use similarity::{candidate_neighbors, prune, similarity, Candidates, NeighborSet};
