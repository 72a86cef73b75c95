//! Benchmark datasets and their manifest.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{generate_case, GeneratedCase, GenerationError, GeneratorConfig};
use crate::Real;

/// Systems per `S` value (or in total, for the varying-M set) at scale 1.
pub const SYSTEMS_PER_GROUP: usize = 60;

/// Seeds tried for one case before the dataset gives up.
const CASE_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    /// `S` from 3 to 10, prefix-free successors, one sequence each.
    PrefixFree,
    /// `S` from 3 to 9, prefixes allowed, one sequence each.
    PrefixAllowed,
    /// `S` uniform in 3..=9, each system observed with 1 to 10 sequences.
    VaryingM,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::PrefixFree => "ds-pl",
            DatasetKind::PrefixAllowed => "ds-npl",
            DatasetKind::VaryingM => "ds-vm",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ds-pl" => Ok(DatasetKind::PrefixFree),
            "ds-npl" => Ok(DatasetKind::PrefixAllowed),
            "ds-vm" => Ok(DatasetKind::VaryingM),
            _ => Err(format!("unknown dataset kind {s:?} (expected ds-pl, ds-npl or ds-vm)")),
        }
    }
}

/// Systems per group at `scale`, at least one.
pub fn systems_per_group(scale: f64) -> usize {
    ((SYSTEMS_PER_GROUP as f64 * scale).round() as usize).max(1)
}

/// Generates a dataset. System `i` draws its seeds from stream `i` of
/// `seed`; if a seed fails to produce a case, the next seed of the stream is
/// tried. `words` is the number of words per sequence.
pub fn generate_dataset<T: Real>(
    kind: DatasetKind,
    scale: f64,
    seed: u64,
    words: usize,
) -> Result<Vec<GeneratedCase<T>>, GenerationError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(GenerationError::Config(format!("scale must be positive, got {scale}")));
    }
    let per_group = systems_per_group(scale);
    let mut out = Vec::new();
    let mut index = 0u64;
    let stream = |i: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        rng
    };
    match kind {
        DatasetKind::PrefixFree | DatasetKind::PrefixAllowed => {
            let (top, forbid) = match kind {
                DatasetKind::PrefixFree => (10, true),
                _ => (9, false),
            };
            for s in 3..=top {
                for k in 0..per_group {
                    let id = format!("{}-s{s:02}-{k:03}", kind.name());
                    let mut rng = stream(index);
                    index += 1;
                    let mut config = GeneratorConfig::new(s, 0);
                    config.forbid_prefixes = forbid;
                    config.words = words;
                    out.push(first_success(&mut rng, &mut config, &id)?);
                }
            }
        }
        DatasetKind::VaryingM => {
            for k in 0..per_group {
                let mut rng = stream(index);
                index += 1;
                let s = rng.gen_range(3..=9);
                let mut config = GeneratorConfig::new(s, 0);
                config.words = words;
                config.sequences = 10;
                let base_id = format!("{}-{k:03}", kind.name());
                let full: GeneratedCase<T> = first_success(&mut rng, &mut config, &base_id)?;
                for m in 1..=10 {
                    out.push(full.with_sequences(m, format!("{base_id}-m{m:02}"))?);
                }
            }
        }
    }
    Ok(out)
}

fn first_success<T: Real>(
    rng: &mut ChaCha8Rng,
    config: &mut GeneratorConfig,
    id: &str,
) -> Result<GeneratedCase<T>, GenerationError> {
    let mut last = None;
    for _ in 0..CASE_ATTEMPTS {
        config.seed = rng.gen();
        match generate_case(config, id) {
            Ok(case) => return Ok(case),
            Err(e) => last = Some(e),
        }
    }
    Err(GenerationError::Case {
        id: id.to_string(),
        seed: config.seed,
        source: Box::new(last.expect("at least one attempt")),
    })
}

/// Column order of the dataset manifest.
pub const MANIFEST_HEADER: &str = "case_id\tS\tM\tm\tseed\tgrammar\tsequences\tlog_probability";

/// One line of the dataset manifest. Paths are relative to the manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRecord {
    pub case_id: String,
    pub successors: usize,
    pub sequences: usize,
    pub words: usize,
    pub seed: u64,
    pub grammar: String,
    pub sequence_file: String,
    pub log_probability: f64,
}

impl ManifestRecord {
    pub fn for_case<T: Real>(case: &GeneratedCase<T>, grammar: String, sequence_file: String) -> Self {
        ManifestRecord {
            case_id: case.id.clone(),
            successors: case.successors,
            sequences: case.inputs.len(),
            words: case.inputs.words_per_sequence(),
            seed: case.seed,
            grammar,
            sequence_file,
            log_probability: case.log_probability.to_f64().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("manifest line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

/// Tab-separated, one record per line, after a `#`-prefixed header.
pub fn render_manifest(records: &[ManifestRecord]) -> String {
    let mut out = format!("#{MANIFEST_HEADER}\n");
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.case_id, r.successors, r.sequences, r.words, r.seed, r.grammar, r.sequence_file, r.log_probability
        ));
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRecord>, ManifestError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let err = |message: String| ManifestError { line, message };
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 8 {
            return Err(err(format!("expected 8 tab-separated fields, found {}", fields.len())));
        }
        fn num<N: FromStr>(s: &str, name: &str, line: usize) -> Result<N, ManifestError> {
            s.parse().map_err(|_| ManifestError {
                line,
                message: format!("{name} is not a number: {s:?}"),
            })
        }
        out.push(ManifestRecord {
            case_id: fields[0].to_string(),
            successors: num(fields[1], "S", line)?,
            sequences: num(fields[2], "M", line)?,
            words: num(fields[3], "m", line)?,
            seed: num(fields[4], "seed", line)?,
            grammar: fields[5].to_string(),
            sequence_file: fields[6].to_string(),
            log_probability: num(fields[7], "log_probability", line)?,
        });
    }
    Ok(out)
}
