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

//! Fixtures shared by unit tests.

use crate::index::InteractionIndex;
use crate::ingest::{parse_triplets, TripletBatch};

/// Four users over three tracks:
/// u1 {a:2, b:1}, u2 {b:3, c:1}, u3 {c:5}, u4 {a:1, b:1, c:1}.
pub const T1_TEXT: &str = "u1\ta\t2\nu1\tb\t1\nu2\tb\t3\nu2\tc\t1\nu3\tc\t5\nu4\ta\t1\nu4\tb\t1\nu4\tc\t1\n";

pub fn toy_t1() -> (TripletBatch, InteractionIndex) {
    let batch = parse_triplets(T1_TEXT.as_bytes()).unwrap();
    let index = InteractionIndex::build(&batch).unwrap();
    (batch, index)
}

/// ln 2 and ln(4/3): idf of track a and of tracks b, c in the toy fixture.
pub const LN_2: f64 = std::f64::consts::LN_2;
pub const LN_4_3: f64 = 0.287_682_072_451_780_9;
