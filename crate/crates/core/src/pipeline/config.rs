use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DeskewParams;
use crate::ilu::{CheckPolicy, VerificationMethod};
use crate::imaging::{BrightnessThresholds, GammaMap, Rect};
use crate::locate::LocateParams;
use crate::ocr::{ExternalEngine, OcrEngine, ReplayEngine, ReplayScript, StubEngine};
use crate::synth::DEFAULT_CROP;
use crate::verify::{VerifyOptions, DEFAULT_SPLIT_FRAC};

/// Which recognizer the pipeline uses.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EngineConfig {
    #[default]
    Stub,
    /// A Tesseract-compatible executable; `$ILUSCAN_TESSERACT` overrides
    /// the path.
    External {
        #[serde(default = "default_exe")]
        path: PathBuf,
    },
    /// Scripted responses from a CSV file.
    Replay { script: PathBuf },
}

fn default_exe() -> PathBuf {
    PathBuf::from("tesseract")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Region of interest within each frame; `null` processes the whole
    /// frame.
    pub crop: Option<Rect>,
    pub brightness_thresholds: BrightnessThresholds,
    pub gamma: GammaMap,
    pub deskew: DeskewParams,
    pub locate: LocateParams,
    /// Position of the prefix / check-digit cut as a fraction of ROI width.
    pub split_frac: f64,
    pub verification: VerificationMethod,
    /// Reject codes whose check remainder is 10.
    pub strict_check: bool,
    pub engine: EngineConfig,
    /// Per-call limit for the external engine, seconds.
    pub timeout_s: f64,
    /// Worker threads for batches; `null` uses all available cores.
    pub parallelism: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            crop: Some(DEFAULT_CROP),
            brightness_thresholds: BrightnessThresholds::default(),
            gamma: GammaMap::default(),
            deskew: DeskewParams::default(),
            locate: LocateParams::default(),
            split_frac: DEFAULT_SPLIT_FRAC,
            verification: VerificationMethod::SplitPass,
            strict_check: false,
            engine: EngineConfig::Stub,
            timeout_s: 10.0,
            parallelism: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.crop {
            if r.w == 0 || r.h == 0 {
                return Err(Error::config(format!("crop must be nonempty, got {r:?}")));
            }
        }
        self.brightness_thresholds.validate()?;
        self.gamma.validate()?;
        self.deskew.validate()?;
        self.locate.validate()?;
        if !(self.split_frac > 0.0 && self.split_frac < 1.0) {
            return Err(Error::config(format!(
                "split_frac must lie strictly between 0 and 1, got {}",
                self.split_frac
            )));
        }
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(Error::config(format!("timeout_s must be positive, got {}", self.timeout_s)));
        }
        if self.parallelism == Some(0) {
            return Err(Error::config("parallelism must be at least 1"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            split_frac: self.split_frac,
            policy: CheckPolicy {
                strict: self.strict_check,
            },
        }
    }

    pub fn parallelism(&self) -> usize {
        self.parallelism
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// Constructs the configured engine; loading a replay script may fail.
    pub fn build_engine(&self) -> Result<Box<dyn OcrEngine>> {
        Ok(match &self.engine {
            EngineConfig::Stub => Box::new(StubEngine::default()),
            EngineConfig::External { path } => Box::new(ExternalEngine::from_env(path, self.timeout())),
            EngineConfig::Replay { script } => Box::new(ReplayEngine::new(ReplayScript::load(script)?)),
        })
    }
}
