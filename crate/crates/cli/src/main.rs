use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cstk_core::disfluency::{summary_csv, vectors_csv};
use cstk_core::error::Error;
use cstk_core::harness::{
    extract_features, load_dataset, load_experiment_config, parse_report_csv, render_report,
    run_experiment, synth_fixture, train_final, write_atomic, ExperimentConfig, ModelKind,
    ReportFormat,
};
use cstk_core::ingest::SessionRecord;
use cstk_core::nn::write_container;

#[derive(Parser)]
#[command(
    name = "cstk",
    version,
    about = "Speech and language feature pipeline for dementia screening experiments"
)]
struct Cli {
    /// Worker threads for bag training (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Override a config value, e.g. `--set train.epochs=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainModel {
    Cnn,
    #[value(name = "lr_comp")]
    LrComp,
    #[value(name = "lr_disfl")]
    LrDisfl,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleModel {
    A,
    B,
    C,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the dataset and list its speakers.
    Ingest {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write speakers.csv here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-utterance disfluency vectors and group summaries.
    ExtractDisfluency {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write disfluency.csv and disfluency_summary.csv here instead of
        /// printing the vectors.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Windowed feature contours for every speaker.
    ExtractContours {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write contours.csv here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a single model on all speakers and save it as a model container.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum, default_value = "cnn")]
        model: TrainModel,
        /// Seed for every random stream.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the `<model>.cstk` file (default: the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate the ensemble models (all configured ones, or one).
    Ensemble {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        model: Option<EnsembleModel>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
    },
    /// Cross-validate every configured model and write reports and a manifest.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
    },
    /// Generate a synthetic dataset with a ready-to-run experiment config.
    Synth {
        /// Speakers per class.
        #[arg(long, default_value_t = 40)]
        n: usize,
        /// Class separation multiplier (0 = identical classes).
        #[arg(long, default_value_t = 1.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render a report.csv.
    Report {
        /// Path to report.csv.
        input: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_validation() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 1, message }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Error
        } else {
            log::LevelFilter::Info
        })
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command, cli.quiet) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Loads the config. A config that cannot be read is a usage problem, so it
/// always maps to exit code 1.
fn load_config(args: &ConfigArgs) -> CliResult<(ExperimentConfig, PathBuf)> {
    let cfg =
        load_experiment_config(&args.config, &args.overrides).map_err(|e| usage(e.to_string()))?;
    let base = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    Ok((cfg, base))
}

fn apply_seed(cfg: &mut ExperimentConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        cfg.fold_seed = s;
        cfg.train.seed = s;
        cfg.bag.base_seed = s;
        cfg.stack.seed = s;
    }
}

/// `--out` is taken relative to the working directory; the config's own
/// `output_dir` is relative to the config file.
fn apply_out(cfg: &mut ExperimentConfig, out: Option<PathBuf>) -> CliResult {
    if let Some(out) = out {
        cfg.output_dir =
            std::path::absolute(&out).map_err(|e| usage(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}

fn emit(out: Option<&Path>, name: &str, bytes: &[u8]) -> CliResult {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure {
                code: 2,
                message: format!("{}: {e}", dir.display()),
            })?;
            write_atomic(&dir.join(name), bytes)?;
            Ok(())
        }
        None => {
            use std::io::Write;
            match std::io::stdout().write_all(bytes) {
                // A closed pipe (`cstk ... | head`) is not a failure.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| Failure {
                    code: 2,
                    message: format!("stdout: {e}"),
                }),
            }
        }
    }
}

fn run(command: Command, quiet: bool) -> CliResult {
    match command {
        Command::Ingest { cfg, out } => {
            let (cfg, base) = load_config(&cfg)?;
            let ds = load_dataset(&cfg.dataset, &base)?;
            let mut csv = String::from("speaker_id,label,n_utterances,n_words,n_sentences\n");
            for (id, d) in &ds.speakers {
                let n_words: usize = d.session.utterances().iter().map(|u| u.words().len()).sum();
                csv.push_str(&format!(
                    "{id},{},{},{n_words},{}\n",
                    d.label.as_str(),
                    d.session.utterances().len(),
                    d.sentences.len()
                ));
            }
            log::info!(
                "{} speakers, dataset fingerprint {}",
                ds.speakers.len(),
                ds.fingerprint
            );
            emit(out.as_deref(), "speakers.csv", csv.as_bytes())
        }
        Command::ExtractDisfluency { cfg, out } => {
            let (cfg, base) = load_config(&cfg)?;
            cfg.pause.validate()?;
            let ds = load_dataset(&cfg.dataset, &base)?;
            let sessions: Vec<SessionRecord> =
                ds.speakers.values().map(|d| d.session.clone()).collect();
            let vectors = vectors_csv(&sessions, &ds.lexicon, &cfg.pause);
            match out {
                Some(dir) => {
                    let summary = summary_csv(&sessions, &ds.lexicon, &cfg.pause)?;
                    emit(Some(&dir), "disfluency.csv", vectors.as_bytes())?;
                    emit(Some(&dir), "disfluency_summary.csv", summary.as_bytes())
                }
                None => emit(None, "", vectors.as_bytes()),
            }
        }
        Command::ExtractContours { cfg, out } => {
            let (cfg, base) = load_config(&cfg)?;
            let ds = load_dataset(&cfg.dataset, &base)?;
            let features = extract_features(&ds, &cfg.window, &cfg.pause)?;
            let mut csv = String::new();
            for (i, f) in features.values().enumerate() {
                let part = f.contour.to_csv();
                // Every speaker shares the header; keep only the first.
                let body = if i == 0 {
                    &part[..]
                } else {
                    part.split_once('\n').map_or("", |(_, b)| b)
                };
                csv.push_str(body);
            }
            emit(out.as_deref(), "contours.csv", csv.as_bytes())
        }
        Command::Train {
            cfg,
            model,
            seed,
            out,
        } => {
            let (mut cfg, base) = load_config(&cfg)?;
            apply_seed(&mut cfg, seed);
            let kind = match model {
                TrainModel::Cnn => ModelKind::Cnn,
                TrainModel::LrComp => ModelKind::LrComp,
                TrainModel::LrDisfl => ModelKind::LrDisfl,
            };
            let container = train_final(&cfg, &base, kind)?;
            let dir = out.unwrap_or_else(|| base.join(&cfg.output_dir));
            let name = format!("{}.cstk", kind.as_str());
            emit(Some(&dir), &name, &write_container(&container))?;
            log::info!("wrote {}", dir.join(name).display());
            Ok(())
        }
        Command::Ensemble {
            cfg,
            model,
            seed,
            out,
            format,
        } => {
            let (mut cfg, base) = load_config(&cfg)?;
            cfg.models = match model {
                Some(EnsembleModel::A) => vec![ModelKind::ModelA],
                Some(EnsembleModel::B) => vec![ModelKind::ModelB],
                Some(EnsembleModel::C) => vec![ModelKind::ModelC],
                None => {
                    let keep: Vec<ModelKind> = cfg
                        .models
                        .iter()
                        .copied()
                        .filter(|m| {
                            matches!(m, ModelKind::ModelA | ModelKind::ModelB | ModelKind::ModelC)
                        })
                        .collect();
                    if keep.is_empty() {
                        vec![ModelKind::ModelA, ModelKind::ModelB, ModelKind::ModelC]
                    } else {
                        keep
                    }
                }
            };
            evaluate(cfg, &base, seed, out, format, quiet)
        }
        Command::Evaluate {
            cfg,
            seed,
            out,
            format,
        } => {
            let (cfg, base) = load_config(&cfg)?;
            evaluate(cfg, &base, seed, out, format, quiet)
        }
        Command::Synth {
            n,
            separation,
            seed,
            out,
        } => {
            if n == 0 {
                return Err(usage("--n must be at least 1".into()));
            }
            if !(separation.is_finite() && separation >= 0.0) {
                return Err(usage(format!(
                    "--separation must be a finite value >= 0, got {separation}"
                )));
            }
            let fx = synth_fixture(n, separation, seed)?;
            fx.write(&out)?;
            log::info!("wrote {} speakers to {}", 2 * n, out.display());
            Ok(())
        }
        Command::Report { input, format, out } => {
            let bytes =
                std::fs::read(&input).map_err(|e| usage(format!("{}: {e}", input.display())))?;
            let reports = parse_report_csv(&bytes)?;
            let rendered = render_report(&reports, format.into());
            match out {
                Some(path) => write_atomic(&path, &rendered).map_err(Failure::from),
                None => emit(None, "", &rendered),
            }
        }
    }
}

fn evaluate(
    mut cfg: ExperimentConfig,
    base: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Format,
    quiet: bool,
) -> CliResult {
    apply_seed(&mut cfg, seed);
    apply_out(&mut cfg, out)?;
    let outcome = run_experiment(&cfg, base)?;
    log::info!("reports written to {}", outcome.output_dir.display());
    if !quiet {
        emit(None, "", &render_report(&outcome.reports, format.into()))?;
    }
    Ok(())
}
