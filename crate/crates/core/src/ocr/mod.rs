//! OCR engines behind one interface.
//!
//! Three engines are provided: [`ExternalEngine`] shells out to a
//! Tesseract-compatible binary, [`StubEngine`] is a deterministic
//! template matcher for the built-in font, and [`ReplayEngine`] returns
//! scripted texts keyed by image name. [`recognize`] applies the charset
//! filter to whatever an engine returns.

mod external;
pub mod font;
mod replay;
mod stub;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use external::{command_args, exec_external_ocr, ExternalEngine, DEFAULT_TIMEOUT, TESSERACT_ENV};
pub use replay::{ReplayEngine, ReplayEntry, ReplayScript};
pub(crate) use replay::table_error;
pub use stub::{stub_recognize, stub_recognize_with, StubEngine, DEFAULT_MAX_DISTANCE};

use crate::imaging::GrayImage;

/// Page segmentation modes passed to the external engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentationMode {
    /// Treat the image as a single character (PSM 10).
    SingleBlock10,
    /// Fully automatic page segmentation (PSM 3).
    AutoPage3,
}

impl SegmentationMode {
    pub fn psm(self) -> u8 {
        match self {
            SegmentationMode::SingleBlock10 => 10,
            SegmentationMode::AutoPage3 => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CharsetFilter {
    AlphaNumericUpper,
    DigitsOnly,
    Unrestricted,
}

const ALNUM_UPPER: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
const DIGITS: &str = "0123456789";

impl CharsetFilter {
    /// Whitelist handed to the external engine, if any.
    pub fn whitelist(self) -> Option<&'static str> {
        match self {
            CharsetFilter::AlphaNumericUpper => Some(ALNUM_UPPER),
            CharsetFilter::DigitsOnly => Some(DIGITS),
            CharsetFilter::Unrestricted => None,
        }
    }

    /// `?` marks an unreadable character and is never admitted.
    pub fn admits(self, c: char) -> bool {
        match self {
            CharsetFilter::AlphaNumericUpper => c.is_ascii_uppercase() || c.is_ascii_digit(),
            CharsetFilter::DigitsOnly => c.is_ascii_digit(),
            CharsetFilter::Unrestricted => c != '?' && !c.is_control(),
        }
    }

    /// Drops disallowed characters and trims surrounding whitespace.
    pub fn apply(self, raw: &str) -> String {
        let kept: String = raw.chars().filter(|&c| self.admits(c)).collect();
        kept.trim().to_string()
    }
}

/// Which part of the text ROI an image holds; replay scripts key on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiPart {
    Whole,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy)]
pub struct OcrRequest<'a> {
    pub image: &'a GrayImage,
    pub mode: SegmentationMode,
    pub filter: CharsetFilter,
    pub part: RoiPart,
    /// Name of the source image, when known.
    pub source_id: Option<&'a str>,
}

impl<'a> OcrRequest<'a> {
    pub fn new(image: &'a GrayImage, mode: SegmentationMode, filter: CharsetFilter) -> Self {
        Self {
            image,
            mode,
            filter,
            part: RoiPart::Whole,
            source_id: None,
        }
    }

    pub fn part(mut self, part: RoiPart) -> Self {
        self.part = part;
        self
    }

    pub fn source(mut self, id: Option<&'a str>) -> Self {
        self.source_id = id;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrResult {
    pub text: String,
    /// 0..=100 when the engine reports one.
    pub confidence: Option<f64>,
}

impl OcrResult {
    pub fn empty() -> Self {
        Self {
            text: String::new(),
            confidence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OcrError {
    /// The engine could not produce an answer; retrying may help.
    #[error("OCR engine unavailable: {reason}{}", stderr_suffix(.stderr))]
    EngineUnavailable { reason: String, stderr: String },
}

fn stderr_suffix(stderr: &str) -> String {
    if stderr.is_empty() {
        String::new()
    } else {
        format!(" (stderr: {stderr})")
    }
}

impl OcrError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, OcrError::EngineUnavailable { .. })
    }
}

pub trait OcrEngine: Send + Sync {
    fn name(&self) -> &'static str;

    /// Raw engine output; [`recognize`] enforces the charset afterwards.
    fn run(&self, req: &OcrRequest<'_>) -> Result<OcrResult, OcrError>;
}

/// Runs `engine` and post-filters its text to `req.filter`.
pub fn recognize(engine: &dyn OcrEngine, req: &OcrRequest<'_>) -> Result<OcrResult, OcrError> {
    let raw = engine.run(req)?;
    Ok(OcrResult {
        text: req.filter.apply(&raw.text),
        confidence: raw.confidence.map(|c| c.clamp(0.0, 100.0)),
    })
}
