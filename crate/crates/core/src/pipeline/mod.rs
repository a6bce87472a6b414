//! End-to-end reading: crop, brightness normalization, deskew, text
//! localization, recognition and verification, for single images and
//! directories.

mod config;
mod metrics;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{EngineConfig, PipelineConfig};
pub use metrics::{best_text, evaluate, levenshtein, BatchMetrics, GroundTruth};

use crate::error::{Error, Result};
use crate::geometry::deskew;
use crate::ilu::{VerificationMethod, VerifiedReading};
use crate::imaging::{
    apply_lut, build_gamma_lut, classify_brightness, crop, rms_brightness, BrightnessClass, GrayImage, Rect,
};
use crate::locate::locate_text;
use crate::ocr::{OcrEngine, OcrError};
use crate::pnm::{is_supported_image, read_image, write_pgm};
use crate::verify::{cross_verify, single_pass, split_roi, PassTexts};

pub const REPORT_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportErrorKind {
    Io,
    Decode,
    EngineUnavailable,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportError {
    pub kind: ReportErrorKind,
    pub message: String,
}

impl ReportError {
    fn from_error(e: &Error) -> Self {
        let kind = match e {
            Error::Io { .. } => ReportErrorKind::Io,
            Error::Decode { .. } => ReportErrorKind::Decode,
            Error::Ocr(OcrError::EngineUnavailable { .. }) => ReportErrorKind::EngineUnavailable,
            _ => ReportErrorKind::Internal,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

/// What the pipeline found in one image. Contains no timing information,
/// so equal inputs give equal outcomes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadingOutcome {
    /// Crop actually applied, if any.
    pub crop: Option<Rect>,
    pub brightness: Option<BrightnessClass>,
    pub gamma: Option<f64>,
    /// Rotation applied by deskewing, counterclockwise positive.
    pub deskew_angle_deg: Option<f64>,
    /// Text region in the deskewed crop.
    pub roi: Option<Rect>,
    pub texts: PassTexts,
    pub reading: Option<VerifiedReading>,
    /// Non-fatal problems met along the way.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingReport {
    pub id: String,
    pub error: Option<ReportError>,
    #[serde(flatten)]
    pub outcome: ReadingOutcome,
    /// Wall time per stage, milliseconds.
    pub timings_ms: BTreeMap<String, f64>,
}

impl ReadingReport {
    fn failed(id: &str, err: &Error) -> Self {
        Self {
            id: id.to_string(),
            error: Some(ReportError::from_error(err)),
            outcome: ReadingOutcome::default(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn is_verified(&self) -> bool {
        self.outcome.reading.as_ref().is_some_and(|r| r.verified)
    }

    /// Everything except timings; equal for repeated runs on equal input.
    pub fn result_view(&self) -> (&str, &Option<ReportError>, &ReadingOutcome) {
        (&self.id, &self.error, &self.outcome)
    }
}

/// Intermediate images of one run, for inspection.
#[derive(Debug, Clone, Default)]
pub struct StageImages {
    pub images: Vec<(&'static str, GrayImage)>,
}

impl StageImages {
    fn push(&mut self, name: &'static str, img: &GrayImage) {
        self.images.push((name, img.clone()));
    }

    /// Writes `<stem>.<stage>.pgm` for each stage into `dir`.
    pub fn write_all(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, img) in &self.images {
            let path = dir.join(format!("{stem}.{name}.pgm"));
            write_pgm(&path, img)?;
            written.push(path);
        }
        Ok(written)
    }
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }
}

/// A validated configuration together with its engine.
pub struct Pipeline {
    cfg: PipelineConfig,
    engine: Box<dyn OcrEngine>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("cfg", &self.cfg)
            .field("engine", &self.engine.name())
            .finish()
    }
}

/// Result of processing a directory.
#[derive(Debug, Clone)]
pub struct BatchRun {
    /// One report per image, ordered by file name.
    pub reports: Vec<ReadingReport>,
    pub warnings: Vec<String>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let engine = cfg.build_engine()?;
        Ok(Self { cfg, engine })
    }

    /// Uses `engine` instead of the one named in the configuration.
    pub fn with_engine(cfg: PipelineConfig, engine: Box<dyn OcrEngine>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, engine })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn engine_name(&self) -> &'static str {
        self.engine.name()
    }

    pub fn run_image(&self, img: &GrayImage, id: &str) -> ReadingReport {
        self.run(img, id, None)
    }

    pub fn run_image_traced(&self, img: &GrayImage, id: &str) -> (ReadingReport, StageImages) {
        let mut stages = StageImages::default();
        let report = self.run(img, id, Some(&mut stages));
        (report, stages)
    }

    /// Reads and processes one file; unreadable files yield an error report
    /// whose id is the file name.
    pub fn run_path(&self, path: &Path) -> ReadingReport {
        let id = file_id(path);
        match read_image(path) {
            Ok(img) => self.run_image(&img, &id),
            Err(e) => ReadingReport::failed(&id, &e),
        }
    }

    /// Processes every PGM/PNG file in `dir` on `parallelism` threads.
    pub fn run_batch(&self, dir: &Path, parallelism: usize) -> Result<BatchRun> {
        let files = list_images(dir)?;
        let mut warnings = Vec::new();
        if files.is_empty() {
            warnings.push(format!("no PGM or PNG images in {}", dir.display()));
        }
        let reports = self.run_files(&files, parallelism)?;
        Ok(BatchRun { reports, warnings })
    }

    pub fn run_files(&self, files: &[PathBuf], parallelism: usize) -> Result<Vec<ReadingReport>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism.max(1))
            .build()
            .map_err(|e| Error::config(format!("cannot start {parallelism} worker threads: {e}")))?;
        let mut reports: Vec<ReadingReport> = pool.install(|| files.par_iter().map(|p| self.run_path(p)).collect());
        reports.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(reports)
    }

    fn run(&self, img: &GrayImage, id: &str, mut stages: Option<&mut StageImages>) -> ReadingReport {
        let cfg = &self.cfg;
        let mut timer = Timer(BTreeMap::new());
        let mut out = ReadingOutcome::default();
        let mut error = None;
        let mut keep = |name: &'static str, img: &GrayImage| {
            if let Some(s) = stages.as_deref_mut() {
                s.push(name, img);
            }
        };

        let cropped = timer.time("crop", || match cfg.crop {
            None => img.clone(),
            Some(r) => match crop(img, r) {
                Ok(c) => {
                    out.crop = Some(r);
                    c
                }
                Err(e) => {
                    out.diagnostics.push(format!("{e}; using the whole frame"));
                    img.clone()
                }
            },
        });
        keep("crop", &cropped);

        let corrected = timer.time("brightness", || {
            let class = classify_brightness(rms_brightness(&cropped), cfg.brightness_thresholds)
                .expect("thresholds validated with the config");
            let gamma = cfg.gamma.gamma_for(class.class);
            out.brightness = Some(class);
            out.gamma = Some(gamma);
            let lut = build_gamma_lut(gamma).expect("gammas validated with the config");
            apply_lut(&cropped, &lut)
        });
        keep("gamma", &corrected);

        let levelled = timer.time("deskew", || match deskew(&corrected, &cfg.deskew) {
            Ok(d) => {
                out.deskew_angle_deg = Some(d.angle_deg);
                d.image
            }
            Err(e) => {
                out.diagnostics.push(format!("deskew skipped: {e}"));
                corrected.clone()
            }
        });
        keep("deskew", &levelled);

        let located = timer.time("locate", || locate_text(&levelled, &cfg.locate));
        let roi = match located {
            Ok(loc) => {
                for (name, img) in loc.stages.named() {
                    keep(name, img);
                }
                if loc.roi.is_none() {
                    out.diagnostics.push(format!(
                        "no text region among {} candidate components",
                        loc.components
                    ));
                }
                loc.roi
            }
            Err(e) => {
                out.diagnostics.push(format!("text localization failed: {e}"));
                None
            }
        };

        match roi {
            None => out.reading = Some(VerifiedReading::parse_failure(cfg.verification)),
            Some(roi) => {
                out.roi = Some(roi.bbox);
                keep("roi", &roi.image);
                if roi.image.width() >= 2 {
                    let (l, r) = split_roi(&roi.image, cfg.split_frac);
                    keep("left", &l);
                    keep("right", &r);
                }
                let source = Some(id);
                let result = timer.time("recognize", || match cfg.verification {
                    VerificationMethod::SinglePass => {
                        single_pass(&roi, self.engine.as_ref(), cfg.verify_options().policy, source)
                    }
                    VerificationMethod::SplitPass => {
                        cross_verify(&roi, self.engine.as_ref(), &cfg.verify_options(), source)
                    }
                });
                match result {
                    Ok((reading, texts)) => {
                        out.reading = Some(reading);
                        out.texts = texts;
                    }
                    Err(e) => error = Some(ReportError::from_error(&Error::Ocr(e))),
                }
            }
        }

        ReadingReport {
            id: id.to_string(),
            error,
            outcome: out,
            timings_ms: timer.0,
        }
    }
}

fn file_id(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Supported image files directly inside `dir`, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_supported_image(&path) {
            files.push(path);
        }
    }
    files.sort_by_key(|p| file_id(p));
    Ok(files)
}

/// Reads one image file with a freshly built pipeline.
pub fn run_single(image: &Path, cfg: &PipelineConfig) -> Result<ReadingReport> {
    Ok(Pipeline::new(cfg.clone())?.run_path(image))
}

pub fn run_batch(dir: &Path, cfg: &PipelineConfig, parallelism: usize) -> Result<BatchRun> {
    Pipeline::new(cfg.clone())?.run_batch(dir, parallelism)
}

/// The JSON document written for a batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema_version: String,
    pub images: Vec<ReadingReport>,
    pub metrics: Option<BatchMetrics>,
    pub config: PipelineConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BatchReport {
    pub fn new(run: BatchRun, metrics: Option<BatchMetrics>, config: PipelineConfig) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION.to_string(),
            images: run.reports,
            metrics,
            config,
            warnings: run.warnings,
        }
    }
}
