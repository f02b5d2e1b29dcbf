//! Command-line front end. Every subcommand is a thin wrapper over the library.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus;
use crate::ensemble::{self, LabelDistribution, PredictionMatrix};
use crate::error::{Error, Result};
use crate::harness::{self, SimProfile, TableFormat};
use crate::jsonl::{self, PredictionFile};
use crate::label::{Label, Track};
use crate::lora::TrainConfig;
use crate::metrics::{self, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tutoreval", version, about = "Tutor-response evaluation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a raw dialogue corpus into one track's instruction JSONL
    Preprocess(PreprocessArgs),
    /// Score predictions against gold labels
    Score(ScoreArgs),
    /// Aggregate the votes of several models
    Ensemble(EnsembleArgs),
    /// Print the label frequency table of a label file
    Distribution(DistributionArgs),
    /// Generate a synthetic gold set and ensemble votes
    Simulate(SimulateArgs),
    /// Render result tables
    #[command(subcommand)]
    Report(ReportCommand),
    /// Training configuration
    #[command(subcommand)]
    Config(ConfigCommand),
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    /// mistake_identification, mistake_location, providing_guidance or actionability
    #[arg(long, value_parser = parse_track)]
    track: Track,
    /// Also emit responses with no annotation for the track
    #[arg(long)]
    include_unlabeled: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScoreMode {
    Strict,
    Lenient,
    Both,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    mode: ScoreMode,
    #[arg(long)]
    per_class: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// Comma-separated prediction files, or a single combined votes file
    #[arg(long, value_delimiter = ',', required = true)]
    preds: Vec<PathBuf>,
    /// Target frequency of "To some extent"
    #[arg(
        long,
        conflicts_with = "dev_gold",
        required_unless_present_any = ["dev_gold", "plurality_only"]
    )]
    tse_freq: Option<f64>,
    /// Gold label file whose distribution is the calibration reference
    #[arg(long)]
    dev_gold: Option<PathBuf>,
    /// Skip calibration and emit the plain plurality vote
    #[arg(long, conflicts_with_all = ["tse_freq", "dev_gold"])]
    plurality_only: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    audit: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DistributionArgs {
    #[arg(long)]
    labels: PathBuf,
    /// Column name (defaults to the file stem)
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    models: usize,
    #[arg(long)]
    seed: u64,
    /// JSON file with `gold_distribution` and `confusion`
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    out_gold: PathBuf,
    #[arg(long)]
    out_preds: PathBuf,
}

#[derive(Debug, Subcommand)]
enum ReportCommand {
    /// Per-track run results with column bests marked
    Runs {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_parser = parse_format, default_value = "markdown")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Side-by-side label distributions
    Distributions {
        /// Comma-separated name=path pairs of label files
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum ConfigCommand {
    /// Print the training configuration (defaults, or a file merged over them)
    Show {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_track(s: &str) -> std::result::Result<Track, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<TableFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code: 0 on success, 1 on validation or I/O errors, 2 on usage errors.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => jsonl::write_text(p, text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Preprocess(a) => {
            let dialogues = corpus::read_corpus(&a.input)?;
            corpus::write_track_jsonl(&a.out, &dialogues, a.track, a.include_unlabeled)?;
            Ok(())
        }
        Command::Score(a) => {
            let gold = jsonl::read_labels(&a.gold)?;
            let pred = jsonl::read_labels(&a.pred)?;
            let pairs = metrics::join_pairs(&gold, &pred)?;
            let modes: &[Mode] = match a.mode {
                ScoreMode::Strict => &[Mode::Strict],
                ScoreMode::Lenient => &[Mode::Lenient],
                ScoreMode::Both => &[Mode::Strict, Mode::Lenient],
            };
            let reports = modes
                .iter()
                .map(|m| metrics::score(&pairs, *m))
                .collect::<Result<Vec<_>>>()?;
            emit(&metrics::render_scores(&reports, a.per_class), a.out.as_deref(), stdout)
        }
        Command::Ensemble(a) => run_ensemble(a),
        Command::Distribution(a) => {
            let labels = jsonl::read_labels(&a.labels)?;
            let dist = LabelDistribution::from_labels(labels.iter().map(|(_, l)| *l))?;
            let name = a.name.unwrap_or_else(|| stem(&a.labels));
            let text = harness::render_distribution_report(&[(name, dist)])?;
            emit(&text, a.out.as_deref(), stdout)
        }
        Command::Simulate(a) => {
            let profile = SimProfile::from_file(&a.profile, a.n, a.models, a.seed)?;
            let (gold, matrix) = harness::simulate(&profile)?;
            jsonl::write_text(
                &a.out_gold,
                &jsonl::render_labels(gold.iter().map(|(id, l)| (id.as_str(), *l))),
            )?;
            jsonl::write_text(&a.out_preds, &jsonl::render_votes(&matrix.to_vote_records()))
        }
        Command::Report(ReportCommand::Runs { results, format, out }) => {
            let rows = harness::parse_run_tsv(&jsonl::read_text(&results)?)?;
            emit(&harness::render_run_table(&rows, format)?, out.as_deref(), stdout)
        }
        Command::Report(ReportCommand::Distributions { inputs, out }) => {
            let mut named = Vec::with_capacity(inputs.len());
            for spec in &inputs {
                let (name, path) = spec.split_once('=').ok_or_else(|| {
                    Error::Validation(format!("`{spec}` is not of the form name=path"))
                })?;
                let labels = jsonl::read_labels(path)?;
                named.push((
                    name.to_string(),
                    LabelDistribution::from_labels(labels.iter().map(|(_, l)| *l))?,
                ));
            }
            emit(&harness::render_distribution_report(&named)?, out.as_deref(), stdout)
        }
        Command::Config(ConfigCommand::Show { config }) => {
            let cfg = match config {
                Some(p) => TrainConfig::from_toml(&jsonl::read_text(&p)?)?,
                None => TrainConfig::default(),
            };
            emit(&cfg.to_toml(), None, stdout)
        }
    }
}

fn run_ensemble(a: EnsembleArgs) -> Result<()> {
    let files = a
        .preds
        .iter()
        .map(jsonl::read_predictions)
        .collect::<Result<Vec<_>>>()?;
    let matrix = match files.as_slice() {
        [PredictionFile::Votes(records)] => PredictionMatrix::from_vote_records(records.clone())?,
        _ => {
            let mut models = Vec::with_capacity(files.len());
            for (f, path) in files.into_iter().zip(&a.preds) {
                match f {
                    PredictionFile::Labels(l) => models.push(l),
                    PredictionFile::Votes(_) => {
                        return Err(Error::Validation(format!(
                            "{}: a combined votes file must be the only --preds input",
                            path.display()
                        )))
                    }
                }
            }
            PredictionMatrix::from_model_predictions(&models)?
        }
    };
    let decisions = if a.plurality_only {
        ensemble::plurality_decisions(&matrix)?
    } else if let Some(f) = a.tse_freq {
        ensemble::aggregate_with_tse_freq(&matrix, f)?
    } else {
        let path = a.dev_gold.as_ref().expect("clap enforces one reference");
        let gold = jsonl::read_labels(path)?;
        let reference = LabelDistribution::from_labels(gold.iter().map(|(_, l)| *l))?;
        ensemble::aggregate(&matrix, &reference)?
    };
    let labels: Vec<(&str, Label)> = decisions
        .iter()
        .map(|d| (d.instance_id.as_str(), d.final_label))
        .collect();
    jsonl::write_text(&a.out, &jsonl::render_labels(labels))?;
    if let Some(audit) = &a.audit {
        jsonl::write_text(audit, &ensemble::render_audit(&decisions))?;
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "labels".into())
}
