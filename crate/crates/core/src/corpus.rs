//! Loading, validation, filtering and summary statistics for PII datasets.
//!
//! Datasets are JSON Lines files, one PII span per line:
//!
//! ```text
//! {"id": "r1", "text": "...", "span_start": 17, "span_end": 32,
//!  "span_text": "August 22, 1935", "semantic_type": "DATETIME",
//!  "candidates": ["1935", "date in 1930s", "***"],
//!  "majority_level": 2, "all_levels": [2]}
//! ```
//!
//! Span offsets count Unicode scalar values, not bytes. Levels are 1-based.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contextual::DEFAULT_PAD_TOKEN;
use crate::error::{Error, Result};

/// Semantic-type labels used when no label set is configured.
pub const DEFAULT_SEMANTIC_TYPES: [&str; 7] = [
    "DATETIME", "DEM", "LOC", "MISC", "ORG", "PERSON", "QUANTITY",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemanticType {
    pub label: String,
    pub code: usize,
}

/// Closed set of semantic-type labels with a stable integer code per label.
///
/// Configured labels are coded in sorted order. Labels first seen while
/// loading data are appended after them, in order of appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticTypeSet {
    labels: Vec<String>,
}

impl Default for SemanticTypeSet {
    fn default() -> Self {
        Self::new(DEFAULT_SEMANTIC_TYPES.iter().copied())
    }
}

impl SemanticTypeSet {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        Self {
            labels: sorted.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, label: &str) -> Option<SemanticType> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|code| SemanticType {
                label: label.to_owned(),
                code,
            })
    }

    pub fn label(&self, code: usize) -> Option<&str> {
        self.labels.get(code).map(String::as_str)
    }

    /// Look up `label`, appending it with a warning when unknown.
    pub fn intern(&mut self, label: &str) -> SemanticType {
        if let Some(t) = self.get(label) {
            return t;
        }
        log::warn!(
            "unknown semantic type {label:?}; appending as code {}",
            self.labels.len()
        );
        self.labels.push(label.to_owned());
        SemanticType {
            label: label.to_owned(),
            code: self.labels.len() - 1,
        }
    }
}

/// One annotated PII span together with its generalization candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiiRecord {
    pub id: String,
    pub text: String,
    /// Character offset (Unicode scalar values) of the span start.
    pub span_start: usize,
    /// Character offset one past the span end.
    pub span_end: usize,
    pub span_text: String,
    pub semantic_type: SemanticType,
    /// Candidate at index `i` is generalization level `i + 1`.
    pub candidates: Vec<String>,
    pub majority_level: usize,
    pub all_levels: BTreeSet<usize>,
}

impl PiiRecord {
    /// Number of generalizations `m`.
    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    /// Byte range of the span inside `text`.
    pub fn byte_span(&self) -> Option<(usize, usize)> {
        char_range_to_bytes(&self.text, self.span_start, self.span_end)
    }

    pub fn candidate(&self, level: usize) -> Option<&str> {
        level
            .checked_sub(1)
            .and_then(|i| self.candidates.get(i))
            .map(String::as_str)
    }

    /// Check every record invariant.
    pub fn validate(&self) -> Result<()> {
        let id = self.id.as_str();
        if self.span_start > self.span_end {
            return Err(Error::validation(
                id,
                format!(
                    "span_start {} > span_end {}",
                    self.span_start, self.span_end
                ),
            ));
        }
        let (lo, hi) = self.byte_span().ok_or_else(|| {
            Error::validation(
                id,
                format!(
                    "span [{}, {}) exceeds text length {}",
                    self.span_start,
                    self.span_end,
                    self.text.chars().count()
                ),
            )
        })?;
        if self.text[lo..hi] != self.span_text {
            return Err(Error::validation(
                id,
                format!(
                    "text[{}..{}] = {:?} does not match span_text {:?}",
                    self.span_start,
                    self.span_end,
                    &self.text[lo..hi],
                    self.span_text
                ),
            ));
        }
        let m = self.candidates.len();
        if m == 0 {
            return Err(Error::validation(id, "candidate list is empty"));
        }
        if let Some(c) = self
            .candidates
            .iter()
            .find(|c| c.contains(DEFAULT_PAD_TOKEN))
        {
            return Err(Error::validation(
                id,
                format!("candidate {c:?} contains the pad token"),
            ));
        }
        if !(1..=m).contains(&self.majority_level) {
            return Err(Error::validation(
                id,
                format!("majority_level {} outside 1..={m}", self.majority_level),
            ));
        }
        if self.all_levels.is_empty() {
            return Err(Error::validation(id, "all_levels is empty"));
        }
        if let Some(l) = self.all_levels.iter().find(|l| !(1..=m).contains(*l)) {
            return Err(Error::validation(
                id,
                format!("all_levels entry {l} outside 1..={m}"),
            ));
        }
        if !self.all_levels.contains(&self.majority_level) {
            return Err(Error::validation(
                id,
                format!(
                    "majority_level {} missing from all_levels",
                    self.majority_level
                ),
            ));
        }
        Ok(())
    }

    /// The text with the span replaced by `replacement`.
    pub fn splice(&self, replacement: &str) -> String {
        let (lo, hi) = self
            .byte_span()
            .expect("span offsets validated at construction");
        let mut out = String::with_capacity(self.text.len() - (hi - lo) + replacement.len());
        out.push_str(&self.text[..lo]);
        out.push_str(replacement);
        out.push_str(&self.text[hi..]);
        out
    }
}

/// Convert a character range to a byte range, or `None` if out of bounds.
pub fn char_range_to_bytes(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let mut lo = None;
    let mut hi = None;
    for (n, (byte, _)) in text.char_indices().enumerate() {
        if n == start {
            lo = Some(byte);
        }
        if n == end {
            hi = Some(byte);
            break;
        }
    }
    let total = text.chars().count();
    if start == total {
        lo = Some(text.len());
    }
    if end == total {
        hi = Some(text.len());
    }
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo <= hi => Some((lo, hi)),
        _ => None,
    }
}

/// On-disk form of a record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRecord {
    pub id: String,
    pub text: String,
    pub span_start: usize,
    pub span_end: usize,
    pub span_text: String,
    pub semantic_type: String,
    pub candidates: Vec<String>,
    pub majority_level: usize,
    pub all_levels: Vec<usize>,
}

impl RawRecord {
    pub fn into_record(self, types: &mut SemanticTypeSet) -> Result<PiiRecord> {
        let semantic_type = types.intern(&self.semantic_type);
        let record = PiiRecord {
            id: self.id,
            text: self.text,
            span_start: self.span_start,
            span_end: self.span_end,
            span_text: self.span_text,
            semantic_type,
            candidates: self.candidates,
            majority_level: self.majority_level,
            all_levels: self.all_levels.into_iter().collect(),
        };
        record.validate()?;
        Ok(record)
    }
}

impl From<&PiiRecord> for RawRecord {
    fn from(r: &PiiRecord) -> Self {
        RawRecord {
            id: r.id.clone(),
            text: r.text.clone(),
            span_start: r.span_start,
            span_end: r.span_end,
            span_text: r.span_text.clone(),
            semantic_type: r.semantic_type.label.clone(),
            candidates: r.candidates.clone(),
            majority_level: r.majority_level,
            all_levels: r.all_levels.iter().copied().collect(),
        }
    }
}

/// Load a dataset with the default semantic-type set.
pub fn load_dataset(path: impl AsRef<Path>, split: Split) -> Result<Vec<PiiRecord>> {
    let mut types = SemanticTypeSet::default();
    load_dataset_with_types(path, split, &mut types)
}

/// Load a dataset, coding semantic types against (and extending) `types`.
pub fn load_dataset_with_types(
    path: impl AsRef<Path>,
    split: Split,
    types: &mut SemanticTypeSet,
) -> Result<Vec<PiiRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let records = read_records(BufReader::new(file), path, types)?;
    log::info!(
        "loaded {} {:?} records from {}",
        records.len(),
        split,
        path.display()
    );
    Ok(records)
}

/// Parse records from any reader; `origin` names the source in errors.
pub fn read_records<R: BufRead>(
    reader: R,
    origin: &Path,
    types: &mut SemanticTypeSet,
) -> Result<Vec<PiiRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: origin.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let record = raw.into_record(types)?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::validation(&record.id, "duplicate record id"));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_dataset(path: impl AsRef<Path>, records: &[PiiRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_records(&mut out, records).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_records<W: Write>(out: &mut W, records: &[PiiRecord]) -> std::io::Result<()> {
    for r in records {
        let line = serde_json::to_string(&RawRecord::from(r)).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Keep records with at most `max_candidates` candidates, in input order.
pub fn filter_by_max_candidates(records: &[PiiRecord], max_candidates: usize) -> Vec<PiiRecord> {
    records
        .iter()
        .filter(|r| r.num_candidates() <= max_candidates)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub record_count: usize,
    /// Number of candidates → record count.
    pub histogram_num_candidates: BTreeMap<usize, usize>,
    /// Majority level → record count.
    pub histogram_selected_level: BTreeMap<usize, usize>,
    /// C → fraction of records with at most C candidates.
    pub coverage_at: BTreeMap<usize, f64>,
}

pub fn compute_stats(records: &[PiiRecord], c_values: &[usize]) -> DatasetStats {
    let mut stats = DatasetStats {
        record_count: records.len(),
        ..Default::default()
    };
    for r in records {
        *stats
            .histogram_num_candidates
            .entry(r.num_candidates())
            .or_default() += 1;
        *stats
            .histogram_selected_level
            .entry(r.majority_level)
            .or_default() += 1;
    }
    for &c in c_values {
        let covered = records.iter().filter(|r| r.num_candidates() <= c).count();
        let fraction = if records.is_empty() {
            0.0
        } else {
            covered as f64 / records.len() as f64
        };
        stats.coverage_at.insert(c, fraction);
    }
    stats
}
