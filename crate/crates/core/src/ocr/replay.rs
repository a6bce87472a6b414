use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{OcrEngine, OcrError, OcrRequest, OcrResult, RoiPart};
use crate::error::{Error, Result};

/// Scripted answers for one image.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayEntry {
    pub whole_roi_text: String,
    pub left_text: String,
    pub right_text: String,
}

impl ReplayEntry {
    pub fn text_for(&self, part: RoiPart) -> &str {
        match part {
            RoiPart::Whole => &self.whole_roi_text,
            RoiPart::Left => &self.left_text,
            RoiPart::Right => &self.right_text,
        }
    }
}

// Flattening does not mix with csv's type inference ("0" would arrive as
// an integer), so rows are read as plain fields.
#[derive(Debug, Deserialize)]
struct Row {
    filename: String,
    whole_roi_text: String,
    left_text: String,
    right_text: String,
}

/// Table of scripted responses keyed by image file name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayScript {
    entries: BTreeMap<String, ReplayEntry>,
}

/// Strips any directory part so scripts can be keyed by bare file name.
fn key_of(name: &str) -> &str {
    Path::new(name)
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or(name)
}

impl ReplayScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, filename: &str, entry: ReplayEntry) {
        self.entries.insert(key_of(filename).to_string(), entry);
    }

    pub fn get(&self, filename: &str) -> Option<&ReplayEntry> {
        self.entries.get(key_of(filename))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses CSV with header `filename,whole_roi_text,left_text,right_text`.
    /// `origin` names the source in error messages.
    pub fn from_csv_reader(reader: impl std::io::Read, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::Fields).from_reader(reader);
        let mut script = Self::new();
        for row in rdr.deserialize::<Row>() {
            let row = row.map_err(|e| table_error(origin, &e))?;
            let entry = ReplayEntry {
                whole_roi_text: row.whole_roi_text,
                left_text: row.left_text,
                right_text: row.right_text,
            };
            script.insert(&row.filename, entry);
        }
        Ok(script)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, path)
    }
}

pub(crate) fn table_error(path: &Path, e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    let reason = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    Error::Table {
        path: path.to_path_buf(),
        line,
        reason,
    }
}

/// Engine that answers from a [`ReplayScript`]. Images missing from the
/// script, or requests without a source name, read as empty text.
#[derive(Debug, Clone, Default)]
pub struct ReplayEngine {
    script: ReplayScript,
}

impl ReplayEngine {
    pub fn new(script: ReplayScript) -> Self {
        Self { script }
    }

    pub fn script(&self) -> &ReplayScript {
        &self.script
    }
}

impl OcrEngine for ReplayEngine {
    fn name(&self) -> &'static str {
        "replay"
    }

    fn run(&self, req: &OcrRequest<'_>) -> Result<OcrResult, OcrError> {
        let text = req
            .source_id
            .and_then(|id| self.script.get(id))
            .map(|e| e.text_for(req.part).trim().to_string())
            .unwrap_or_default();
        Ok(OcrResult {
            text,
            confidence: None,
        })
    }
}
