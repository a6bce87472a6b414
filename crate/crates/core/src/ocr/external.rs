use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use wait_timeout::ChildExt;

use super::{CharsetFilter, OcrEngine, OcrError, OcrRequest, OcrResult, SegmentationMode};
use crate::imaging::GrayImage;
use crate::pnm::encode_pgm;

pub const TESSERACT_ENV: &str = "ILUSCAN_TESSERACT";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Longest stderr excerpt carried in an error.
const STDERR_EXCERPT: usize = 400;

/// Arguments following the executable:
/// `<image> stdout --psm <n> [-c tessedit_char_whitelist=<chars>]`.
pub fn command_args(image: &Path, mode: SegmentationMode, filter: CharsetFilter) -> Vec<String> {
    let mut args = vec![
        image.display().to_string(),
        "stdout".to_string(),
        "--psm".to_string(),
        mode.psm().to_string(),
    ];
    if let Some(chars) = filter.whitelist() {
        args.push("-c".to_string());
        args.push(format!("tessedit_char_whitelist={chars}"));
    }
    args
}

fn unavailable(reason: impl Into<String>, stderr: &[u8]) -> OcrError {
    let text = String::from_utf8_lossy(stderr);
    let text = text.trim();
    let excerpt: String = text.chars().take(STDERR_EXCERPT).collect();
    OcrError::EngineUnavailable {
        reason: reason.into(),
        stderr: excerpt,
    }
}

/// Writes `img` to a temporary PGM, runs `exe` on it and returns its
/// standard output. The text is trimmed but not charset-filtered.
pub fn exec_external_ocr(
    img: &GrayImage,
    mode: SegmentationMode,
    filter: CharsetFilter,
    exe: &Path,
    timeout: Duration,
) -> Result<OcrResult, OcrError> {
    let mut file = tempfile::Builder::new()
        .prefix("iluscan-")
        .suffix(".pgm")
        .tempfile()
        .map_err(|e| unavailable(format!("cannot create temp image: {e}"), b""))?;
    std::io::Write::write_all(&mut file, &encode_pgm(img))
        .map_err(|e| unavailable(format!("cannot write temp image: {e}"), b""))?;

    let mut child = Command::new(exe)
        .args(command_args(file.path(), mode, filter))
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| unavailable(format!("cannot start {}: {e}", exe.display()), b""))?;

    // Drain both pipes concurrently so a chatty engine cannot block on a
    // full pipe while we wait for it.
    let mut out_pipe = child.stdout.take().expect("stdout piped");
    let mut err_pipe = child.stderr.take().expect("stderr piped");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = out_pipe.read_to_end(&mut buf);
        buf
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = err_pipe.read_to_end(&mut buf);
        buf
    });

    let status = match child.wait_timeout(timeout) {
        Ok(Some(status)) => status,
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            // Grandchildren may still hold the pipes open, so the reader
            // threads are left to finish on their own.
            return Err(unavailable(
                format!("{} timed out after {:.1} s", exe.display(), timeout.as_secs_f64()),
                b"",
            ));
        }
        Err(e) => {
            let _ = child.kill();
            return Err(unavailable(format!("waiting for {} failed: {e}", exe.display()), b""));
        }
    };
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();

    if !status.success() {
        return Err(unavailable(format!("{} exited with {status}", exe.display()), &stderr));
    }
    let text = String::from_utf8(stdout)
        .map_err(|_| unavailable(format!("{} wrote non-UTF-8 output", exe.display()), &stderr))?;
    Ok(OcrResult {
        text: text.trim().to_string(),
        confidence: None,
    })
}

/// Adapter for a Tesseract-compatible command-line engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalEngine {
    pub exe: PathBuf,
    pub timeout: Duration,
}

impl ExternalEngine {
    pub fn new(exe: impl Into<PathBuf>, timeout: Duration) -> Self {
        Self {
            exe: exe.into(),
            timeout,
        }
    }

    /// Uses `$ILUSCAN_TESSERACT` when set, otherwise `default_exe`.
    pub fn from_env(default_exe: impl Into<PathBuf>, timeout: Duration) -> Self {
        let exe = std::env::var_os(TESSERACT_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| default_exe.into());
        Self::new(exe, timeout)
    }
}

impl OcrEngine for ExternalEngine {
    fn name(&self) -> &'static str {
        "external"
    }

    fn run(&self, req: &OcrRequest<'_>) -> Result<OcrResult, OcrError> {
        exec_external_ocr(req.image, req.mode, req.filter, &self.exe, self.timeout)
    }
}
