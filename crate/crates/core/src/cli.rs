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

//! Command-line front end: ingest, build, recommend, evaluate, split, stats.

use std::collections::{HashMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eval::{mean_average_precision, split_history};
use crate::idf::compute_idf;
use crate::index::IndexBundle;
use crate::ingest::{is_dataset_file, load_dataset, read_triplet_file, save_dataset, TripletBatch};
use crate::model::{ApMode, Config, PadStrategy, UserIdx};
use crate::recommend::{write_recommendations, DummyNames, Recommender};

/// Users per batch when streaming recommendations to disk.
const CHUNK: usize = 8192;

#[derive(Debug, Parser)]
#[command(name = "tastecf", version, about = "IDF-weighted user-based collaborative filtering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a triplet file into the binary dataset format.
    Ingest {
        #[arg(long, env = "TASTECF_INPUT")]
        input: PathBuf,
        #[arg(long, env = "TASTECF_OUT")]
        out: PathBuf,
        #[command(flatten)]
        format: TextFormat,
    },
    /// Build the interaction index (with idf) from a dataset or triplet file.
    Build {
        #[arg(long, env = "TASTECF_INPUT")]
        input: PathBuf,
        #[arg(long, env = "TASTECF_OUT")]
        out: PathBuf,
        #[arg(long, default_value_t = std::f64::consts::E)]
        log_base: f64,
        #[command(flatten)]
        format: TextFormat,
    },
    /// Write top-k recommendations, one line per user.
    Recommend(RecommendArgs),
    /// Score a recommendation file against hidden triplets.
    Evaluate {
        #[arg(long, env = "TASTECF_RECS")]
        recs: PathBuf,
        #[arg(long, env = "TASTECF_HIDDEN")]
        hidden: PathBuf,
        #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Challenge)]
        mode: ModeArg,
        /// Also write `user<TAB>ap<TAB>hidden_count` rows here.
        #[arg(long)]
        per_user: Option<PathBuf>,
        #[command(flatten)]
        format: TextFormat,
    },
    /// Split every user's history into visible and hidden triplet files.
    Split {
        #[arg(long, env = "TASTECF_INPUT")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        visible: PathBuf,
        #[arg(long)]
        hidden: PathBuf,
        #[command(flatten)]
        format: TextFormat,
    },
    /// Print dataset counts.
    Stats {
        #[arg(long, env = "TASTECF_INPUT")]
        input: PathBuf,
        #[command(flatten)]
        format: TextFormat,
    },
}

#[derive(Debug, Args)]
pub struct TextFormat {
    /// Field separator of triplet text files.
    #[arg(long, default_value = "\t", value_parser = parse_delimiter)]
    delimiter: u8,
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() && s != "\n" => Ok(s.as_bytes()[0]),
        _ => Err(format!("delimiter must be a single ASCII character, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// Index file from `build` (a dataset or triplet file also works).
    #[arg(long, env = "TASTECF_INPUT")]
    input: PathBuf,
    /// External user ids, one per line; defaults to every user.
    #[arg(long, env = "TASTECF_USERS")]
    users: Option<PathBuf>,
    #[arg(long, env = "TASTECF_OUT")]
    out: PathBuf,
    /// Neighbor pruning ratio.
    #[arg(long, default_value_t = 0.4)]
    s: f64,
    #[arg(long, default_value_t = 500)]
    k: usize,
    #[arg(long, default_value_t = std::f64::consts::E)]
    log_base: f64,
    /// Allow tracks from the user's own history.
    #[arg(long, conflicts_with = "exclude_seen")]
    include_seen: bool,
    /// Leave out tracks from the user's own history (default).
    #[arg(long)]
    exclude_seen: bool,
    #[arg(long, value_enum, default_value_t = PadArg::Dummy)]
    pad: PadArg,
    /// Skip tracks with more listeners than this during neighbor search.
    #[arg(long)]
    max_posting_len: Option<usize>,
    /// Worker threads; 0 uses all cores. Output is identical for any value.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    format: TextFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PadArg {
    Dummy,
    Popularity,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Challenge,
    Paper,
}

impl From<PadArg> for PadStrategy {
    fn from(p: PadArg) -> Self {
        match p {
            PadArg::Dummy => PadStrategy::Dummy,
            PadArg::Popularity => PadStrategy::Popularity,
        }
    }
}

impl From<ModeArg> for ApMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Challenge => ApMode::Challenge,
            ModeArg::Paper => ApMode::PaperVerbatim,
        }
    }
}

impl RecommendArgs {
    pub fn config(&self) -> Config {
        Config {
            s: self.s,
            k: self.k,
            log_base: self.log_base,
            exclude_seen: !self.include_seen,
            pad_strategy: self.pad.into(),
            max_posting_len: self.max_posting_len,
            workers: self.workers,
            ..Config::default()
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code:
/// 0 on success, 1 for data or i/o failures, 2 for usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input, out, format } => {
            let batch = read_triplets(&input, format.delimiter)?;
            save_dataset(&batch, &out).with_context(|| format!("ingest: writing {}", out.display()))?;
            log::info!(
                "ingest: {} triplets, {} users, {} tracks -> {}",
                batch.len(),
                batch.user_vocab().len(),
                batch.track_vocab().len(),
                out.display()
            );
        }
        Command::Build {
            input,
            out,
            log_base,
            format,
        } => {
            let batch = load_batch(&input, format.delimiter)?;
            let mut bundle = IndexBundle::from_batch(&batch).context("build")?;
            bundle.idf = Some(compute_idf(&bundle.index, log_base).context("build: idf")?);
            bundle.save(&out).with_context(|| format!("build: writing {}", out.display()))?;
            log::info!("build: log_base={log_base} -> {}", out.display());
        }
        Command::Recommend(args) => recommend(&args)?,
        Command::Evaluate {
            recs,
            hidden,
            k,
            mode,
            per_user,
            format,
        } => evaluate(&recs, &hidden, k as usize, mode.into(), per_user.as_deref(), format.delimiter)?,
        Command::Split {
            input,
            fraction,
            seed,
            visible,
            hidden,
            format,
        } => {
            let batch = load_batch(&input, format.delimiter)?;
            let split = split_history(&batch, fraction, seed).context("split")?;
            for (part, path) in [(&split.visible, &visible), (&split.hidden, &hidden)] {
                let file = fs::File::create(path).with_context(|| format!("split: creating {}", path.display()))?;
                part.write_triplets(file)
                    .with_context(|| format!("split: writing {}", path.display()))?;
            }
            log::info!(
                "split: fraction={fraction} seed={seed}: {} visible, {} hidden triplets, {} evaluable users",
                split.visible.len(),
                split.hidden.len(),
                split.evaluable.len()
            );
        }
        Command::Stats { input, format } => {
            let bundle = load_bundle(&input, format.delimiter)?;
            let ix = &bundle.index;
            let plays: u64 = (0..ix.n_users() as UserIdx).map(|u| ix.total_plays(u)).sum();
            println!("n_users={}", ix.n_users());
            println!("n_tracks={}", ix.n_tracks());
            println!("triplets={}", ix.n_triplets());
            println!("plays={plays}");
        }
    }
    Ok(())
}

fn read_triplets(path: &Path, delimiter: u8) -> Result<TripletBatch> {
    read_triplet_file(path, delimiter).with_context(|| format!("ingest: {}", path.display()))
}

/// Loads a binary dataset, or parses triplet text.
fn load_batch(path: &Path, delimiter: u8) -> Result<TripletBatch> {
    if is_dataset_file(path).with_context(|| format!("opening {}", path.display()))? {
        load_dataset(path).with_context(|| format!("loading dataset {}", path.display()))
    } else {
        read_triplets(path, delimiter)
    }
}

/// Loads an index file, or builds one from a dataset or triplet file.
fn load_bundle(path: &Path, delimiter: u8) -> Result<IndexBundle> {
    if IndexBundle::is_index_file(path).with_context(|| format!("opening {}", path.display()))? {
        IndexBundle::load(path).with_context(|| format!("loading index {}", path.display()))
    } else {
        let batch = load_batch(path, delimiter)?;
        IndexBundle::from_batch(&batch).context("build")
    }
}

fn recommend(args: &RecommendArgs) -> Result<()> {
    let config = args.config();
    config.validate().context("recommend")?;
    log::info!(
        "effective config: s={} k={} log_base={} exclude_seen={} pad_strategy={} max_posting_len={} workers={} input={} users={} out={}",
        config.s,
        config.k,
        config.log_base,
        config.exclude_seen,
        config.pad_strategy,
        config.max_posting_len.map_or("off".to_string(), |n| n.to_string()),
        config.workers,
        args.input.display(),
        args.users.as_ref().map_or("all".to_string(), |p| p.display().to_string()),
        args.out.display(),
    );

    let started = Instant::now();
    let mut bundle = load_bundle(&args.input, args.format.delimiter)?;
    let idf = match bundle.idf.take() {
        Some(idf) if idf.log_base() == config.log_base => idf,
        _ => compute_idf(&bundle.index, config.log_base).context("recommend: idf")?,
    };
    let users = match &args.users {
        Some(path) => read_user_list(path, &bundle.user_vocab)?,
        None => (0..bundle.index.n_users() as UserIdx).collect(),
    };
    let recommender = Recommender::new(&bundle.index, &idf, config.clone()).context("recommend")?;
    let dummies = DummyNames::for_vocab(&bundle.track_vocab, config.k);
    if !dummies.prefix().is_empty() {
        log::warn!("track ids collide with dummy ids; dummies use prefix {:?}", dummies.prefix());
    }

    let file = fs::File::create(&args.out).with_context(|| format!("recommend: creating {}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    let mut short_lists = 0usize;
    for chunk in users.chunks(CHUNK) {
        let recs = recommender.recommend_all(chunk).context("recommend")?;
        short_lists += recs.iter().filter(|r| r.dummy_count() > 0).count();
        write_recommendations(&mut out, &recs, &bundle.user_vocab, &bundle.track_vocab, &dummies)
            .with_context(|| format!("recommend: writing {}", args.out.display()))?;
    }
    out.flush()
        .with_context(|| format!("recommend: writing {}", args.out.display()))?;
    log::info!(
        "recommend: {} users in {:.1?}, {} lists padded with dummies",
        users.len(),
        started.elapsed(),
        short_lists
    );
    Ok(())
}

fn read_user_list(path: &Path, vocab: &crate::model::Vocabulary) -> Result<Vec<UserIdx>> {
    let file = fs::File::open(path).with_context(|| format!("recommend: opening {}", path.display()))?;
    let mut users = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("recommend: reading {}", path.display()))?;
        let id = line.trim();
        if id.is_empty() {
            continue;
        }
        match vocab.get(id) {
            Some(u) => users.push(u),
            None => bail!("recommend: {}: line {}: unknown user {id:?}", path.display(), i + 1),
        }
    }
    Ok(users)
}

/// Reads `<user> <track_1> ... <track_k>` lines.
pub fn read_recommendation_file(path: &Path) -> Result<HashMap<String, Vec<String>>> {
    let file = fs::File::open(path).with_context(|| format!("evaluate: opening {}", path.display()))?;
    let mut recs = HashMap::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("evaluate: reading {}", path.display()))?;
        let mut fields = line.split_ascii_whitespace();
        let Some(user) = fields.next() else { continue };
        let items: Vec<String> = fields.map(str::to_string).collect();
        if recs.insert(user.to_string(), items).is_some() {
            bail!("evaluate: {}: line {}: duplicate user {user:?}", path.display(), i + 1);
        }
    }
    Ok(recs)
}

fn evaluate(
    recs_path: &Path,
    hidden_path: &Path,
    k: usize,
    mode: ApMode,
    per_user: Option<&Path>,
    delimiter: u8,
) -> Result<()> {
    let recs = read_recommendation_file(recs_path)?;
    let hidden = read_triplets(hidden_path, delimiter)?;
    let mut sets: Vec<HashSet<String>> = vec![HashSet::new(); hidden.user_vocab().len()];
    for (u, t, _) in hidden.triplets() {
        sets[u as usize].insert(hidden.track_vocab().lookup(t).unwrap().to_string());
    }
    let hidden_sets: Vec<(String, HashSet<String>)> = hidden
        .user_vocab()
        .iter()
        .map(str::to_string)
        .zip(sets)
        .collect();
    let report = mean_average_precision(|u: &String| recs.get(u).cloned(), &hidden_sets, k, mode)
        .with_context(|| format!("evaluate: {}", recs_path.display()))?;

    if let Some(path) = per_user {
        let file = fs::File::create(path).with_context(|| format!("evaluate: creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "user\tap\thidden_count")?;
        for row in &report.per_user {
            writeln!(out, "{}\t{:.6}\t{}", row.user, row.average_precision, row.hidden_count)?;
        }
        out.flush()
            .with_context(|| format!("evaluate: writing {}", path.display()))?;
    }
    log::info!("evaluate: {} users, k={k}, mode={mode}", report.per_user.len());
    println!("map@{k}\t{:.6}", report.map_score);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("tastecf").chain(args.iter().copied()))
    }

    #[test]
    fn recommend_defaults_match_published_constants() {
        let cli = parse(&["recommend", "--input", "ix", "--out", "o"]).unwrap();
        let Command::Recommend(args) = cli.command else { panic!() };
        let config = args.config();
        assert_eq!(config.s, 0.4);
        assert_eq!(config.k, 500);
        assert_eq!(config.pad_strategy, PadStrategy::Dummy);
        assert!(config.exclude_seen);
        assert_eq!(config, Config::default());
    }

    #[test]
    fn rejects_unknown_and_conflicting_flags() {
        let base = ["recommend", "--input", "ix", "--out", "o"];
        for extra in [
            &["--bogus"][..],
            &["--include-seen", "--exclude-seen"],
            &["--pad", "dummy", "--pad", "popularity"],
            &["--pad", "best"],
        ] {
            let args: Vec<&str> = base.iter().chain(extra).copied().collect();
            let err = parse(&args).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{extra:?}");
        }
        assert!(parse(&["evaluate", "--recs", "r", "--hidden", "h", "--k", "0"]).is_err());
        assert!(parse(&["frobnicate"]).is_err());
    }

    #[test]
    fn delimiter_parsing() {
        assert_eq!(parse_delimiter("\\t"), Ok(b'\t'));
        assert_eq!(parse_delimiter(","), Ok(b','));
        assert!(parse_delimiter(",,").is_err());
    }
}
