use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ReadingReport;
use crate::error::{Error, Result};
use crate::ilu::{normalize_code_text, IluCode, RejectionReason, CODE_LEN};
use crate::ocr::table_error;

/// Expected codes keyed by image file name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    codes: BTreeMap<String, IluCode>,
}

#[derive(Debug, Deserialize)]
struct TruthRow {
    filename: String,
    code: String,
}

impl GroundTruth {
    pub fn insert(&mut self, filename: impl Into<String>, code: IluCode) {
        self.codes.insert(filename.into(), code);
    }

    pub fn get(&self, filename: &str) -> Option<&IluCode> {
        self.codes.get(filename)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Reads CSV with at least the columns `filename` and `code`; other
    /// columns (such as those of a generator manifest) are ignored.
    pub fn from_csv_reader(reader: impl std::io::Read, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::Fields).from_reader(reader);
        let mut gt = Self::default();
        let mut record = csv::StringRecord::new();
        let headers = rdr.headers().map_err(|e| table_error(origin, &e))?.clone();
        while rdr.read_record(&mut record).map_err(|e| table_error(origin, &e))? {
            let line = record.position().map_or(0, |p| p.line());
            let row: TruthRow = record
                .deserialize(Some(&headers))
                .map_err(|e| Error::Table {
                    path: origin.to_path_buf(),
                    line,
                    reason: e.to_string(),
                })?;
            let code: IluCode = row.code.parse().map_err(|e| Error::Table {
                path: origin.to_path_buf(),
                line,
                reason: format!("bad code for {}: {e}", row.filename),
            })?;
            gt.insert(row.filename, code);
        }
        Ok(gt)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    /// Images that have a ground-truth entry; the denominator of every rate.
    pub n_images: usize,
    /// Verified and equal to the ground truth, over `n_images`.
    pub code_accuracy: f64,
    /// Mean of `1 - edit_distance / 11`, floored at 0.
    pub char_accuracy: f64,
    /// Verified but different from the ground truth, over `n_images`.
    pub false_positive_rate: f64,
    pub correct: usize,
    pub false_positives: usize,
    /// Unverified readings by reason.
    pub rejections: BTreeMap<RejectionReason, usize>,
    /// Reports carrying an error (unreadable file, engine failure).
    pub errors: usize,
    /// Report ids absent from the ground truth; excluded from the rates.
    pub missing_ground_truth: Vec<String>,
}

/// Edit distance with unit costs, over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.chars().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// The best text a report offers for comparison: the parsed code when
/// there is one, otherwise the normalized raw recognition.
pub fn best_text(report: &ReadingReport) -> String {
    if let Some(code) = report.outcome.reading.as_ref().and_then(|r| r.code.as_ref()) {
        return code.canonical();
    }
    let t = &report.outcome.texts;
    match (&t.whole, &t.left, &t.right) {
        (Some(w), _, _) => normalize_code_text(w),
        (None, l, r) => {
            let mut s = normalize_code_text(l.as_deref().unwrap_or(""));
            s.push_str(&normalize_code_text(r.as_deref().unwrap_or("")));
            s
        }
    }
}

pub fn evaluate(reports: &[ReadingReport], gt: &GroundTruth) -> BatchMetrics {
    let mut n = 0;
    let (mut correct, mut fps, mut errors) = (0, 0, 0);
    let mut char_sum = 0.0;
    let mut rejections = BTreeMap::new();
    let mut missing = Vec::new();
    for r in reports {
        if r.error.is_some() {
            errors += 1;
        }
        let Some(truth) = gt.get(&r.id) else {
            missing.push(r.id.clone());
            continue;
        };
        n += 1;
        let truth = truth.canonical();
        let dist = levenshtein(&best_text(r), &truth);
        char_sum += (1.0 - dist as f64 / CODE_LEN as f64).max(0.0);
        match &r.outcome.reading {
            Some(reading) if reading.verified => {
                let same = reading.code.as_ref().is_some_and(|c| c.canonical() == truth);
                if same {
                    correct += 1;
                } else {
                    fps += 1;
                }
            }
            Some(reading) => {
                if let Some(reason) = reading.rejection_reason {
                    *rejections.entry(reason).or_insert(0) += 1;
                }
            }
            None => {}
        }
    }
    let rate = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    BatchMetrics {
        n_images: n,
        code_accuracy: rate(correct),
        char_accuracy: if n == 0 { 0.0 } else { char_sum / n as f64 },
        false_positive_rate: rate(fps),
        correct,
        false_positives: fps,
        rejections,
        errors,
        missing_ground_truth: missing,
    }
}
