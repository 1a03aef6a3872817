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

//! Precision, average precision and MAP over truncated rankings, and the
//! visible/hidden history split used for offline evaluation.

use std::collections::HashSet;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::TripletBatch;
use crate::model::{ApMode, TrackIdx, UserIdx};
use crate::recommend::Recommendation;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no recommendation for evaluated user {0}")]
    MissingRecommendation(String),
    #[error("truncation depth k must be at least 1")]
    ZeroDepth,
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
}

/// Fraction of the first `k` ranked items that are relevant. Missing
/// positions (a ranking shorter than `k`) count as misses.
pub fn precision_at_k<T: Eq + Hash>(ranking: &[T], relevant: &HashSet<T>, k: usize) -> f64 {
    assert!(k >= 1, "precision_at_k requires k >= 1");
    let hits = ranking.iter().take(k).filter(|item| relevant.contains(item)).count();
    hits as f64 / k as f64
}

/// Average precision truncated at `k`.
///
/// Sums the precision at every hit position `j <= k`, then divides by
/// `min(k, |relevant|)` in [`ApMode::Challenge`] or by `min(k, |ranking|)`
/// in [`ApMode::PaperVerbatim`]. An empty relevant set scores 0.
pub fn average_precision<T: Eq + Hash>(
    ranking: &[T],
    relevant: &HashSet<T>,
    k: usize,
    mode: ApMode,
) -> f64 {
    assert!(k >= 1, "average_precision requires k >= 1");
    if relevant.is_empty() {
        return 0.0;
    }
    let normalizer = match mode {
        ApMode::Challenge => k.min(relevant.len()),
        ApMode::PaperVerbatim => k.min(ranking.len()),
    };
    if normalizer == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (j, item) in ranking.iter().take(k).enumerate() {
        if relevant.contains(item) {
            hits += 1;
            sum += hits as f64 / (j + 1) as f64;
        }
    }
    sum / normalizer as f64
}

/// Average precision of one evaluated user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAp<U> {
    pub user: U,
    pub average_precision: f64,
    pub hidden_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<U> {
    pub per_user: Vec<UserAp<U>>,
    /// Unweighted mean of the per-user values; 0 when nobody was evaluated.
    pub map_score: f64,
    pub k: usize,
    pub ap_mode: ApMode,
}

/// Mean average precision over every user in `hidden`.
///
/// `recommendations` is looked up by user; each evaluated user must have one.
pub fn mean_average_precision<U, T, F>(
    recommendations: F,
    hidden: &[(U, HashSet<T>)],
    k: usize,
    ap_mode: ApMode,
) -> Result<EvalReport<U>, EvalError>
where
    U: Clone + std::fmt::Display,
    T: Eq + Hash,
    F: Fn(&U) -> Option<Vec<T>>,
{
    if k == 0 {
        return Err(EvalError::ZeroDepth);
    }
    let mut per_user = Vec::with_capacity(hidden.len());
    let mut total = 0.0;
    for (user, relevant) in hidden {
        let ranking = recommendations(user)
            .ok_or_else(|| EvalError::MissingRecommendation(user.to_string()))?;
        let ap = average_precision(&ranking, relevant, k, ap_mode);
        total += ap;
        per_user.push(UserAp {
            user: user.clone(),
            average_precision: ap,
            hidden_count: relevant.len(),
        });
    }
    let map_score = if per_user.is_empty() {
        0.0
    } else {
        total / per_user.len() as f64
    };
    Ok(EvalReport {
        per_user,
        map_score,
        k,
        ap_mode,
    })
}

/// Evaluates in-memory recommendations against per-user hidden track sets.
pub fn evaluate_recommendations(
    recs: &[Recommendation],
    hidden: &[(UserIdx, HashSet<TrackIdx>)],
    k: usize,
    ap_mode: ApMode,
) -> Result<EvalReport<UserIdx>, EvalError> {
    let by_user: std::collections::HashMap<UserIdx, &Recommendation> =
        recs.iter().map(|r| (r.user, r)).collect();
    let hidden: Vec<(UserIdx, HashSet<Option<TrackIdx>>)> = hidden
        .iter()
        .map(|(u, set)| (*u, set.iter().map(|&t| Some(t)).collect()))
        .collect();
    mean_average_precision(
        |u| by_user.get(u).map(|r| r.items.iter().map(|s| s.track()).collect()),
        &hidden,
        k,
        ap_mode,
    )
}

/// Per-user partition of listening histories into a visible and a hidden part.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySplit {
    /// Triplets the system may see. Shares vocabularies with `hidden`.
    pub visible: TripletBatch,
    /// Triplets to be predicted.
    pub hidden: TripletBatch,
    /// Users with a non-empty hidden part, ascending.
    pub evaluable: Vec<UserIdx>,
    pub seed: u64,
}

impl HistorySplit {
    /// Hidden track sets of the evaluable users, ascending by user.
    pub fn hidden_sets(&self) -> Vec<(UserIdx, HashSet<TrackIdx>)> {
        let mut sets: Vec<HashSet<TrackIdx>> =
            vec![HashSet::new(); self.hidden.user_vocab().len()];
        for (u, t, _) in self.hidden.triplets() {
            sets[u as usize].insert(t);
        }
        self.evaluable
            .iter()
            .map(|&u| (u, std::mem::take(&mut sets[u as usize])))
            .collect()
    }
}

/// Splits every user's distinct tracks into visible and hidden parts.
///
/// Each user's tracks are put in track-index order and shuffled by a
/// generator keyed on `(seed, user)`, so the outcome depends neither on
/// triplet order nor on other users. The first `floor(fraction * n)` go to
/// the visible side. Users with fewer than two tracks stay fully visible and
/// are not evaluable. Both outputs keep the input triplet order.
pub fn split_history(batch: &TripletBatch, fraction: f64, seed: u64) -> Result<HistorySplit, EvalError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EvalError::InvalidFraction(fraction));
    }
    let n_users = batch.user_vocab().len();
    let mut rows: Vec<Vec<(TrackIdx, usize)>> = vec![Vec::new(); n_users];
    for (pos, (u, t, _)) in batch.triplets().enumerate() {
        rows[u as usize].push((t, pos));
    }

    let mut to_visible = vec![false; batch.len()];
    let mut evaluable = Vec::new();
    for (u, row) in rows.iter_mut().enumerate() {
        if row.len() < 2 {
            for &(_, pos) in row.iter() {
                to_visible[pos] = true;
            }
            continue;
        }
        row.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u as u64);
        row.shuffle(&mut rng);
        let n_visible = (fraction * row.len() as f64).floor() as usize;
        for &(_, pos) in &row[..n_visible] {
            to_visible[pos] = true;
        }
        evaluable.push(u as UserIdx);
    }

    let mut visible = TripletBatch::new(batch.user_vocab().clone(), batch.track_vocab().clone());
    let mut hidden = TripletBatch::new(batch.user_vocab().clone(), batch.track_vocab().clone());
    for (pos, (u, t, c)) in batch.triplets().enumerate() {
        let side = if to_visible[pos] { &mut visible } else { &mut hidden };
        side.push_unchecked(u, t, c);
    }
    Ok(HistorySplit {
        visible,
        hidden,
        evaluable,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_triplets;
    use proptest::prelude::*;

    fn set(items: &[&'static str]) -> HashSet<&'static str> {
        items.iter().copied().collect()
    }

    #[test]
    fn precision_examples() {
        let ranking = ["x", "z", "y"];
        let hidden = set(&["x", "y"]);
        assert_eq!(precision_at_k(&ranking, &hidden, 1), 1.0);
        assert_eq!(precision_at_k(&ranking, &hidden, 2), 0.5);
        assert!((precision_at_k(&ranking, &hidden, 3) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(precision_at_k(&["x", "y"], &hidden, 2), 1.0);
        assert_eq!(precision_at_k(&["a", "b"], &hidden, 2), 0.0);
        // short rankings are padded with misses
        assert_eq!(precision_at_k(&["x"], &hidden, 4), 0.25);
    }

    #[test]
    fn average_precision_examples() {
        let ranking = ["x", "z", "y"];
        let hidden = set(&["x", "y"]);
        let challenge = average_precision(&ranking, &hidden, 500, ApMode::Challenge);
        assert!((challenge - 5.0 / 6.0).abs() < 1e-12);
        let verbatim = average_precision(&ranking, &hidden, 500, ApMode::PaperVerbatim);
        assert!((verbatim - 5.0 / 9.0).abs() < 1e-12);
        assert_eq!(average_precision(&["t", "u"], &set(&["t"]), 500, ApMode::Challenge), 1.0);
        assert_eq!(average_precision(&ranking, &set(&[]), 500, ApMode::Challenge), 0.0);
        // truncation drops the hit at position 3
        assert_eq!(average_precision(&ranking, &hidden, 2, ApMode::Challenge), 0.5);
    }

    #[test]
    fn map_is_the_mean() {
        let hidden = vec![
            ("a".to_string(), set(&["t"])),
            ("b".to_string(), set(&["t", "u"])),
        ];
        let report = mean_average_precision(
            |u: &String| match u.as_str() {
                "a" => Some(vec!["t", "v"]),
                "b" => Some(vec!["t", "v", "w", "x"]),
                _ => None,
            },
            &hidden,
            500,
            ApMode::Challenge,
        )
        .unwrap();
        assert_eq!(report.per_user[0].average_precision, 1.0);
        assert_eq!(report.per_user[1].average_precision, 0.5);
        assert_eq!(report.map_score, 0.75);
        assert_eq!(report.per_user[1].hidden_count, 2);

        let perfect = mean_average_precision(|_: &u32| Some(vec![1, 2]), &[(7u32, [1].into())], 5, ApMode::Challenge).unwrap();
        assert_eq!(perfect.map_score, 1.0);

        let missing = mean_average_precision(|_: &u32| None::<Vec<u32>>, &[(7u32, [1].into())], 5, ApMode::Challenge);
        assert_eq!(missing, Err(EvalError::MissingRecommendation("7".into())));
    }

    #[test]
    fn split_degenerate_and_floor() {
        let batch = parse_triplets("solo\ta\t3\nfour\ta\t1\nfour\tb\t1\nfour\tc\t1\nfour\td\t1\n".as_bytes()).unwrap();
        let split = split_history(&batch, 0.5, 7).unwrap();
        assert_eq!(split.evaluable, vec![1]);
        assert_eq!(split.visible.len(), 3);
        assert_eq!(split.hidden.len(), 2);
        assert!(split.visible.triplets().any(|(u, _, c)| u == 0 && c == 3));
        assert_eq!(split, split_history(&batch, 0.5, 7).unwrap());
        assert_eq!(split.hidden_sets()[0].1.len(), 2);
        for bad in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(split_history(&batch, bad, 7).is_err());
        }
    }

    fn arb_ranking() -> impl Strategy<Value = (Vec<u32>, HashSet<u32>, usize)> {
        (1usize..25, 1usize..40).prop_flat_map(|(n_items, k)| {
            (
                Just((0..n_items as u32).collect::<Vec<_>>()).prop_shuffle(),
                proptest::collection::hash_set(0..n_items as u32 + 5, 0..n_items),
                Just(k),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn ap_is_bounded((ranking, hidden, k) in arb_ranking()) {
            for mode in [ApMode::Challenge, ApMode::PaperVerbatim] {
                let ap = average_precision(&ranking, &hidden, k, mode);
                prop_assert!((0.0..=1.0).contains(&ap));
            }
        }

        #[test]
        fn split_partitions_histories(pairs in proptest::collection::btree_set((0u8..10, 0u8..12), 0..80), seed in any::<u64>(), fraction in 0.05f64..0.95) {
            let text: String = pairs.iter().map(|(u, t)| format!("u{u}\tt{t}\t1\n")).collect();
            let batch = parse_triplets(text.as_bytes()).unwrap();
            let split = split_history(&batch, fraction, seed).unwrap();
            prop_assert_eq!(split.visible.len() + split.hidden.len(), batch.len());
            let vis: HashSet<(u32, u32)> = split.visible.triplets().map(|(u, t, _)| (u, t)).collect();
            let hid: HashSet<(u32, u32)> = split.hidden.triplets().map(|(u, t, _)| (u, t)).collect();
            prop_assert!(vis.is_disjoint(&hid));
            for u in 0..batch.user_vocab().len() as u32 {
                let n = batch.users().iter().filter(|&&x| x == u).count();
                let v = vis.iter().filter(|p| p.0 == u).count();
                if n < 2 {
                    prop_assert_eq!(v, n);
                    prop_assert!(!split.evaluable.contains(&u));
                } else {
                    prop_assert_eq!(v, (fraction * n as f64).floor() as usize);
                    prop_assert!(split.evaluable.contains(&u));
                }
            }
        }
    }
}
