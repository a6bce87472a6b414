use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use iluscan_core::ilu::{parse_ilu, verify_code, VerificationMethod};
use iluscan_core::ocr::OcrError;
use iluscan_core::pipeline::{evaluate, BatchReport, EngineConfig, GroundTruth, Pipeline, PipelineConfig, ReadingReport};
use iluscan_core::synth::{manifest_path, synth_generate, MAX_DIFFICULTY};
use iluscan_core::Error;

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "iluscan", version, about = "Read and verify ILU codes in grayscale images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read one image.
    Scan {
        image: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Write intermediate images as `<stem>.<stage>.pgm` into this directory.
        #[arg(long, value_name = "DIR")]
        dump_stages: Option<PathBuf>,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Read every PGM/PNG image in a directory and write a JSON report.
    Batch {
        dir: PathBuf,
        /// Ground-truth CSV with `filename` and `code` columns.
        #[arg(long, value_name = "CSV")]
        gt: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads (default: all cores).
        #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
        parallel: Option<u32>,
        /// Report path; standard output when omitted.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Generate synthetic plates with a ground-truth manifest.
    Synth {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=MAX_DIFFICULTY as i64))]
        difficulty: u8,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Check the check digit of a code; exits 1 when it does not match.
    Verify { code: String },
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON pipeline configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    engine: Option<EngineKind>,
    /// Replay script for `--engine replay`.
    #[arg(long, value_name = "CSV")]
    replay: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineKind {
    Stub,
    External,
    Replay,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Single,
    Split,
}

impl RunArgs {
    fn config(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(mode) = self.mode {
            cfg.verification = match mode {
                Mode::Single => VerificationMethod::SinglePass,
                Mode::Split => VerificationMethod::SplitPass,
            };
        }
        match (self.engine, &self.replay) {
            (Some(EngineKind::Stub), _) => cfg.engine = EngineConfig::Stub,
            (Some(EngineKind::External), _) => {
                if !matches!(cfg.engine, EngineConfig::External { .. }) {
                    cfg.engine = EngineConfig::External {
                        path: PathBuf::from("tesseract"),
                    };
                }
            }
            (Some(EngineKind::Replay) | None, Some(script)) => {
                cfg.engine = EngineConfig::Replay { script: script.clone() };
            }
            (Some(EngineKind::Replay), None) => {
                if !matches!(cfg.engine, EngineConfig::Replay { .. }) {
                    return Err(Error::InvalidConfig("--engine replay needs --replay <csv>".into()).into());
                }
            }
            (None, None) => {}
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("iluscan: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Bad settings (including a missing engine) exit 2; unreadable or
/// unwritable files exit 3.
fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_config() => EXIT_CONFIG,
        Some(Error::Table { .. }) | Some(Error::Ocr(OcrError::EngineUnavailable { .. })) => EXIT_CONFIG,
        _ => EXIT_IO,
    }
}

fn run(cmd: Command) -> anyhow::Result<u8> {
    match cmd {
        Command::Scan {
            image,
            run,
            dump_stages,
            json,
        } => scan(&image, &run, dump_stages.as_deref(), json),
        Command::Batch {
            dir,
            gt,
            run,
            parallel,
            out,
        } => batch(&dir, gt.as_deref(), &run, parallel, out.as_deref()),
        Command::Synth {
            count,
            seed,
            difficulty,
            out,
        } => {
            let rows = synth_generate(count, seed, &out, difficulty)?;
            println!(
                "wrote {} plates and {}",
                rows.len(),
                manifest_path(&out).display()
            );
            Ok(0)
        }
        Command::Verify { code } => Ok(verify(&code)),
    }
}

fn scan(image: &Path, args: &RunArgs, dump: Option<&Path>, json: bool) -> anyhow::Result<u8> {
    let pipeline = Pipeline::new(args.config()?)?;
    let report = match dump {
        Some(dir) => {
            let img = iluscan_core::pnm::read_image(image)?;
            let id = image
                .file_name()
                .map_or_else(|| image.display().to_string(), |n| n.to_string_lossy().into_owned());
            let (report, stages) = pipeline.run_image_traced(&img, &id);
            let stem = image.file_stem().map_or("image".into(), |s| s.to_string_lossy());
            stages.write_all(dir, &stem)?;
            report
        }
        None => pipeline.run_path(image),
    };
    if let Some(err) = &report.error {
        if json {
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        let code = match err.kind {
            iluscan_core::pipeline::ReportErrorKind::EngineUnavailable => EXIT_CONFIG,
            _ => EXIT_IO,
        };
        eprintln!("iluscan: {}: {}", report.id, err.message);
        return Ok(code);
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{}", summary_line(&report));
    }
    Ok(if report.is_verified() { 0 } else { EXIT_VERIFY })
}

fn summary_line(report: &ReadingReport) -> String {
    match &report.outcome.reading {
        Some(r) if r.verified => {
            let code = r.code.as_ref().map(|c| c.display_form()).unwrap_or_default();
            format!("{}: {code} verified", report.id)
        }
        Some(r) => {
            let what = r.code.as_ref().map(|c| c.display_form()).unwrap_or_else(|| "-".into());
            let reason = r.rejection_reason.map_or("unverified", |x| x.as_str());
            format!("{}: {what} rejected ({reason})", report.id)
        }
        None => format!("{}: no reading", report.id),
    }
}

fn batch(dir: &Path, gt: Option<&Path>, args: &RunArgs, parallel: Option<u32>, out: Option<&Path>) -> anyhow::Result<u8> {
    let cfg = args.config()?;
    let truth = gt.map(GroundTruth::load).transpose()?;
    let parallelism = parallel.map_or_else(|| cfg.parallelism(), |n| n as usize);
    let pipeline = Pipeline::new(cfg.clone())?;
    let run = pipeline.run_batch(dir, parallelism)?;
    let unavailable = run
        .reports
        .iter()
        .find(|r| r.error.as_ref().is_some_and(|e| e.kind == iluscan_core::pipeline::ReportErrorKind::EngineUnavailable));
    if let Some(r) = unavailable {
        let msg = r.error.as_ref().map_or("", |e| e.message.as_str());
        eprintln!("iluscan: {}: {msg}", r.id);
        return Ok(EXIT_CONFIG);
    }
    let metrics = truth.as_ref().map(|t| evaluate(&run.reports, t));
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    let verified = run.reports.iter().filter(|r| r.is_verified()).count();
    let errors = run.reports.iter().filter(|r| r.error.is_some()).count();
    eprintln!("{} images, {verified} verified, {errors} errors", run.reports.len());
    if let Some(m) = &metrics {
        eprintln!(
            "code accuracy {:.4}, character accuracy {:.4}, false positive rate {:.4}",
            m.code_accuracy, m.char_accuracy, m.false_positive_rate
        );
    }
    let report = BatchReport::new(run, metrics, cfg);
    let text = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?,
        None => println!("{text}"),
    }
    Ok(0)
}

fn verify(text: &str) -> u8 {
    match parse_ilu(text) {
        Ok(code) => {
            let r = verify_code(&code);
            if r.verified {
                println!("{} valid", code.display_form());
                0
            } else {
                println!(
                    "{} invalid: check digit {} expected {}",
                    code.display_form(),
                    code.check_digit(),
                    r.computed_check.map_or("?".into(), |d| d.to_string())
                );
                EXIT_VERIFY
            }
        }
        Err(e) => {
            println!("invalid: {e}");
            EXIT_VERIFY
        }
    }
}
