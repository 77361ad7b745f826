//! The two real computations the simulator can emulate, plus their input
//! data: exact multi-pattern genome search and parallel integer reduction.
//!
//! Input data is either synthesized deterministically from a seed, supplied
//! inline (test-sized), or loaded from files. Synthetic data uses the
//! uniform `{A,C,G,T}` alphabet over up to seven chromosome names.

mod fasta;
mod genome;
mod reduction;

pub use fasta::{load_fasta, parse_fasta, write_fasta, FastaError};
pub use genome::{combine_hits, genome_search, reverse_complement, search_shard, shard_chromosomes};
pub use reduction::{derive_leaf_slices, evaluate_reduction, fold_slice};

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Chromosome names the sequence store understands, in genomic sort order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum ChromosomeName {
    #[serde(rename = "chrI")]
    ChrI,
    #[serde(rename = "chrII")]
    ChrII,
    #[serde(rename = "chrIII")]
    ChrIII,
    #[serde(rename = "chrIV")]
    ChrIV,
    #[serde(rename = "chrV")]
    ChrV,
    #[serde(rename = "chrX")]
    ChrX,
    #[serde(rename = "chrM")]
    ChrM,
}

impl ChromosomeName {
    pub const ALL: [ChromosomeName; 7] = [
        ChromosomeName::ChrI,
        ChromosomeName::ChrII,
        ChromosomeName::ChrIII,
        ChromosomeName::ChrIV,
        ChromosomeName::ChrV,
        ChromosomeName::ChrX,
        ChromosomeName::ChrM,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ChromosomeName::ChrI => "chrI",
            ChromosomeName::ChrII => "chrII",
            ChromosomeName::ChrIII => "chrIII",
            ChromosomeName::ChrIV => "chrIV",
            ChromosomeName::ChrV => "chrV",
            ChromosomeName::ChrX => "chrX",
            ChromosomeName::ChrM => "chrM",
        }
    }
}

impl fmt::Display for ChromosomeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChromosomeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChromosomeName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown chromosome name {s:?}"))
    }
}

/// Which strand a pattern occurrence was found on. Reverse-strand hits are
/// matches of a pattern's reverse complement in the forward sequence and are
/// reported on forward coordinates.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Strand {
    #[serde(rename = "+")]
    Forward,
    #[serde(rename = "-")]
    Reverse,
}

impl fmt::Display for Strand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strand::Forward => "+",
            Strand::Reverse => "-",
        })
    }
}

/// One exact pattern occurrence. Coordinates are 1-based and inclusive on
/// the forward strand.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct HitRecord {
    pub chromosome: ChromosomeName,
    pub start: u64,
    pub end: u64,
    pub strand: Strand,
    pub pattern_id: u32,
}

impl Ord for HitRecord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.chromosome, self.start, self.pattern_id, self.strand, self.end).cmp(&(
            other.chromosome,
            other.start,
            other.pattern_id,
            other.strand,
            other.end,
        ))
    }
}

impl PartialOrd for HitRecord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A fixed set of search patterns; a pattern's ID is its index.
///
/// Construction only checks the alphabet, so test dictionaries may use short
/// patterns; [`PatternDictionary::validate_production_lengths`] additionally
/// enforces the 15–25 base range production dictionaries use.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternDictionary {
    patterns: Vec<String>,
}

impl PatternDictionary {
    pub fn new(patterns: Vec<String>) -> Result<Self, WorkloadError> {
        for (i, p) in patterns.iter().enumerate() {
            if p.is_empty() {
                return Err(WorkloadError::BadPattern {
                    pattern_id: i as u32,
                    reason: "empty pattern".into(),
                });
            }
            if let Some(bad) = p.chars().find(|c| !matches!(c, 'A' | 'C' | 'G' | 'T')) {
                return Err(WorkloadError::BadPattern {
                    pattern_id: i as u32,
                    reason: format!("invalid base {bad:?}"),
                });
            }
        }
        Ok(Self { patterns })
    }

    /// Deterministically generates `count` patterns with lengths uniform in
    /// `[min_len, max_len]`.
    pub fn synthesize(seed: u64, count: u32, min_len: u32, max_len: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(RNG_STREAM_PATTERNS);
        let patterns = (0..count)
            .map(|_| {
                let len = rng.gen_range(min_len..=max_len) as usize;
                random_bases(&mut rng, len)
            })
            .collect();
        Self { patterns }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn get(&self, id: u32) -> Option<&str> {
        self.patterns.get(id as usize).map(String::as_str)
    }

    /// Enforces the 15–25 base pattern length range.
    pub fn validate_production_lengths(&self) -> Result<(), WorkloadError> {
        for (i, p) in self.patterns.iter().enumerate() {
            if !(15..=25).contains(&p.len()) {
                return Err(WorkloadError::BadPattern {
                    pattern_id: i as u32,
                    reason: format!("length {} outside the 15..=25 production range", p.len()),
                });
            }
        }
        Ok(())
    }
}

/// Genome sequences keyed by chromosome name. Sequences are uppercase
/// `{A,C,G,T}` strings; names are unique by construction.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SequenceStore {
    chromosomes: BTreeMap<ChromosomeName, String>,
}

impl SequenceStore {
    pub fn new(chromosomes: BTreeMap<ChromosomeName, String>) -> Result<Self, WorkloadError> {
        for (name, seq) in &chromosomes {
            if seq.is_empty() {
                return Err(WorkloadError::BadSequence {
                    chromosome: *name,
                    reason: "empty sequence".into(),
                });
            }
            if let Some(bad) = seq.chars().find(|c| !matches!(c, 'A' | 'C' | 'G' | 'T')) {
                return Err(WorkloadError::BadSequence {
                    chromosome: *name,
                    reason: format!("invalid base {bad:?}"),
                });
            }
        }
        Ok(Self { chromosomes })
    }

    /// Deterministically synthesizes `total_bases` of sequence spread evenly
    /// over the first `chromosome_count` chromosome names (remainder to the
    /// last one).
    pub fn synthesize(seed: u64, total_bases: u64, chromosome_count: u8) -> Self {
        let n = (chromosome_count.clamp(1, 7)) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(RNG_STREAM_SEQUENCES);
        let share = total_bases / n as u64;
        let mut chromosomes = BTreeMap::new();
        for (i, name) in ChromosomeName::ALL.into_iter().take(n).enumerate() {
            let len = if i + 1 == n {
                total_bases - share * (n as u64 - 1)
            } else {
                share
            };
            chromosomes.insert(name, random_bases(&mut rng, len as usize));
        }
        Self { chromosomes }
    }

    /// Chromosomes in name order.
    pub fn chromosomes(&self) -> impl Iterator<Item = (ChromosomeName, &str)> {
        self.chromosomes.iter().map(|(n, s)| (*n, s.as_str()))
    }

    pub fn names(&self) -> Vec<ChromosomeName> {
        self.chromosomes.keys().copied().collect()
    }

    pub fn get(&self, name: ChromosomeName) -> Option<&str> {
        self.chromosomes.get(&name).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.chromosomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chromosomes.is_empty()
    }

    pub fn total_bases(&self) -> u64 {
        self.chromosomes.values().map(|s| s.len() as u64).sum()
    }
}

/// Uniform random sequence over `{A,C,G,T}`.
pub fn synthesize_sequence(seed: u64, length: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RNG_STREAM_SEQUENCES);
    random_bases(&mut rng, length)
}

fn random_bases(rng: &mut ChaCha8Rng, length: usize) -> String {
    const BASES: [char; 4] = ['A', 'C', 'G', 'T'];
    (0..length).map(|_| BASES[rng.gen_range(0..4)]).collect()
}

// Distinct ChaCha streams keep the independently seeded generators from
// overlapping even though they share one scenario seed.
const RNG_STREAM_SEQUENCES: u64 = 3;
const RNG_STREAM_PATTERNS: u64 = 4;
pub(crate) const RNG_STREAM_LEAF_VALUES: u64 = 5;

/// Where a job's pattern dictionary comes from.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PatternSource {
    /// Seed-derived dictionary; lengths default to the 15–25 production range.
    Synthetic {
        count: u32,
        #[serde(default = "default_min_len")]
        min_len: u32,
        #[serde(default = "default_max_len")]
        max_len: u32,
    },
    /// Patterns listed directly in the scenario (test-sized).
    Inline { patterns: Vec<String> },
    /// Plain text file, one pattern per line.
    File { path: PathBuf },
}

fn default_min_len() -> u32 {
    15
}

fn default_max_len() -> u32 {
    25
}

/// Where a job's sequence data comes from.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceSource {
    /// Seed-derived sequences totalling `unique_kb` (1 KB = 1024 bases).
    ///
    /// `replication` models datasets built from redundant copies of the
    /// unique span: it scales the job's data volume accounting but not the
    /// scan, so search results are identical to a single copy.
    Synthetic {
        unique_kb: u64,
        #[serde(default = "default_chromosome_count")]
        chromosomes: u8,
        #[serde(default = "default_replication")]
        replication: u32,
    },
    /// FASTA file with headers naming the seven known chromosomes.
    Fasta { path: PathBuf },
    /// Sequences listed directly in the scenario (test-sized).
    Inline { chromosomes: BTreeMap<String, String> },
}

fn default_chromosome_count() -> u8 {
    7
}

fn default_replication() -> u32 {
    1
}

/// Errors raised while preparing or validating workload inputs.
#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("pattern {pattern_id}: {reason}")]
    BadPattern { pattern_id: u32, reason: String },
    #[error("sequence {chromosome}: {reason}")]
    BadSequence {
        chromosome: ChromosomeName,
        reason: String,
    },
    #[error("reduction graph: {0}")]
    BadReduction(String),
    #[error(transparent)]
    Fasta(#[from] FastaError),
    #[error("pattern file {path}: {source}")]
    PatternFile {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Builds the pattern dictionary for a genome job from its source, seeded
/// deterministically.
pub fn materialize_patterns(src: &PatternSource, seed: u64) -> Result<PatternDictionary, WorkloadError> {
    match src {
        PatternSource::Synthetic {
            count,
            min_len,
            max_len,
        } => Ok(PatternDictionary::synthesize(seed, *count, *min_len, *max_len)),
        PatternSource::Inline { patterns } => PatternDictionary::new(patterns.clone()),
        PatternSource::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|source| {
                WorkloadError::PatternFile {
                    path: path.clone(),
                    source,
                }
            })?;
            PatternDictionary::new(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_owned)
                    .collect(),
            )
        }
    }
}

/// Builds the sequence store for a genome job from its source, seeded
/// deterministically.
pub fn materialize_sequences(src: &SequenceSource, seed: u64) -> Result<SequenceStore, WorkloadError> {
    match src {
        SequenceSource::Synthetic {
            unique_kb,
            chromosomes,
            replication: _,
        } => Ok(SequenceStore::synthesize(seed, unique_kb * 1024, *chromosomes)),
        SequenceSource::Fasta { path } => Ok(load_fasta(path)?),
        SequenceSource::Inline { chromosomes } => {
            let mut map = BTreeMap::new();
            for (name, seq) in chromosomes {
                let name: ChromosomeName = name
                    .parse()
                    .map_err(|reason| WorkloadError::BadSequence {
                        chromosome: ChromosomeName::ChrI,
                        reason,
                    })?;
                map.insert(name, seq.clone());
            }
            SequenceStore::new(map)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chromosome_names_round_trip() {
        for name in ChromosomeName::ALL {
            assert_eq!(name.as_str().parse::<ChromosomeName>().unwrap(), name);
        }
        assert!("chr7".parse::<ChromosomeName>().is_err());
    }

    #[test]
    fn synthesis_is_deterministic_and_uniform_ish() {
        let a = synthesize_sequence(7, 40_000);
        let b = synthesize_sequence(7, 40_000);
        assert_eq!(a, b);
        assert_ne!(a, synthesize_sequence(8, 40_000));
        for base in ['A', 'C', 'G', 'T'] {
            let n = a.chars().filter(|c| *c == base).count();
            // Each base should land near 25%; 3 sigma for a binomial at
            // n=40000 is about 650.
            assert!((9_000..=11_000).contains(&n), "{base} occurred {n} times");
        }
    }

    #[test]
    fn store_synthesis_splits_total_across_chromosomes() {
        let store = SequenceStore::synthesize(3, 10_000, 7);
        assert_eq!(store.len(), 7);
        assert_eq!(store.total_bases(), 10_000);
        assert_eq!(store.get(ChromosomeName::ChrI).unwrap().len(), 1428);
        assert_eq!(store.get(ChromosomeName::ChrM).unwrap().len(), 1432);
    }

    #[test]
    fn dictionary_rejects_bad_alphabet() {
        assert!(PatternDictionary::new(vec!["ACGU".into()]).is_err());
        assert!(PatternDictionary::new(vec!["".into()]).is_err());
        assert!(PatternDictionary::new(vec!["ACGTA".into()]).is_ok());
    }

    #[test]
    fn production_length_check() {
        let short = PatternDictionary::new(vec!["ACGTA".into()]).unwrap();
        assert!(short.validate_production_lengths().is_err());
        let ok = PatternDictionary::synthesize(1, 50, 15, 25);
        ok.validate_production_lengths().unwrap();
        assert!(ok.patterns().iter().all(|p| (15..=25).contains(&p.len())));
    }

    #[test]
    fn store_rejects_bad_sequences() {
        let mut m = BTreeMap::new();
        m.insert(ChromosomeName::ChrI, "ACGTN".to_string());
        assert!(SequenceStore::new(m).is_err());
    }

    #[test]
    fn replication_does_not_change_the_store() {
        let single = materialize_sequences(
            &SequenceSource::Synthetic {
                unique_kb: 4,
                chromosomes: 3,
                replication: 1,
            },
            11,
        )
        .unwrap();
        let replicated = materialize_sequences(
            &SequenceSource::Synthetic {
                unique_kb: 4,
                chromosomes: 3,
                replication: 128,
            },
            11,
        )
        .unwrap();
        assert_eq!(single, replicated);
    }
}
