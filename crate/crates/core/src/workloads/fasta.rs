//! FASTA input/output for sequence stores.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{ChromosomeName, SequenceStore};

/// FASTA parse or I/O failure. Syntax errors carry 1-based line numbers.
#[derive(Debug, Error)]
pub enum FastaError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

/// Reads a FASTA file into a sequence store.
pub fn load_fasta(path: &Path) -> Result<SequenceStore, FastaError> {
    let text = std::fs::read_to_string(path).map_err(|source| FastaError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_fasta(&text)
}

/// Parses FASTA text: `>` header lines name a chromosome (first whitespace
/// token), subsequent lines carry its sequence. Sequences are uppercased;
/// anything outside `{A,C,G,T}` is rejected with its line number.
pub fn parse_fasta(text: &str) -> Result<SequenceStore, FastaError> {
    let mut chromosomes: BTreeMap<ChromosomeName, String> = BTreeMap::new();
    let mut current: Option<ChromosomeName> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('>') {
            let name_token = header.split_whitespace().next().ok_or(FastaError::Syntax {
                line,
                reason: "header names no chromosome".into(),
            })?;
            let name: ChromosomeName =
                name_token.parse().map_err(|reason| FastaError::Syntax { line, reason })?;
            if chromosomes.contains_key(&name) {
                return Err(FastaError::Syntax {
                    line,
                    reason: format!("duplicate chromosome {name}"),
                });
            }
            chromosomes.insert(name, String::new());
            current = Some(name);
        } else {
            let name = current.ok_or(FastaError::Syntax {
                line,
                reason: "sequence data before any header".into(),
            })?;
            let seq = chromosomes.get_mut(&name).expect("current always inserted");
            for c in trimmed.chars() {
                match c.to_ascii_uppercase() {
                    b @ ('A' | 'C' | 'G' | 'T') => seq.push(b),
                    bad => {
                        return Err(FastaError::Syntax {
                            line,
                            reason: format!("invalid base {bad:?}"),
                        })
                    }
                }
            }
        }
    }
    if let Some((name, _)) = chromosomes.iter().find(|(_, s)| s.is_empty()) {
        return Err(FastaError::Syntax {
            line: text.lines().count(),
            reason: format!("chromosome {name} has no sequence"),
        });
    }
    SequenceStore::new(chromosomes).map_err(|e| FastaError::Syntax {
        line: 0,
        reason: e.to_string(),
    })
}

/// Renders a store as FASTA with 60-base sequence lines, chromosomes in name
/// order. `parse_fasta(&write_fasta(store)) == store` for every valid store.
pub fn write_fasta(store: &SequenceStore) -> String {
    let mut out = String::new();
    for (name, seq) in store.chromosomes() {
        out.push('>');
        out.push_str(name.as_str());
        out.push('\n');
        for chunk in seq.as_bytes().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).expect("ASCII sequence"));
            out.push('\n');
        }
    }
    out
}
