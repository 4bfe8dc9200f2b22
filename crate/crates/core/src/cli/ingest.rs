use std::collections::HashSet;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};

pub const DEFAULT_SEPARATOR: &str = "<::>";

/// One WikiSplit line: the complex sentence and its reference split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikiSplitRecord {
    pub source: String,
    pub simple: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestOutcome {
    pub records: Vec<WikiSplitRecord>,
    /// Lines skipped for lacking a TAB.
    pub skipped: usize,
}

impl IngestOutcome {
    pub fn sources(&self) -> Vec<String> {
        self.records.iter().map(|r| r.source.clone()).collect()
    }
}

/// Reads `complex<TAB>simple` lines; the simple side is split on `separator`.
pub fn ingest_wikisplit<R: BufRead>(reader: R, separator: &str) -> io::Result<IngestOutcome> {
    let mut out = IngestOutcome::default();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        let Some((complex, simple)) = line.split_once('\t') else {
            out.skipped += 1;
            continue;
        };
        let simple = if separator.is_empty() {
            vec![simple.trim().to_string()]
        } else {
            simple.split(separator).map(|s| s.trim().to_string()).collect()
        };
        out.records.push(WikiSplitRecord {
            source: complex.trim().to_string(),
            simple: simple.into_iter().filter(|s| !s.is_empty()).collect(),
        });
    }
    Ok(out)
}

/// Lowercases and drops repeats, keeping the first occurrence.
pub fn normalize_corpus<S: AsRef<str>>(sources: &[S]) -> Vec<String> {
    let mut seen = HashSet::new();
    sources
        .iter()
        .map(|s| s.as_ref().to_lowercase())
        .filter(|s| seen.insert(s.clone()))
        .collect()
}
