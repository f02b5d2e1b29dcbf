//! Seeded ensemble simulation, run-result tables, and label-distribution
//! reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::{self, LabelDistribution, PredictionMatrix};
use crate::error::{Error, Result};
use crate::label::{Label, Track};
use crate::metrics::{self, LabeledPair, Mode};
use crate::rng::XorShift64Star;

/// Synthetic ensemble: gold labels drawn from `gold_distribution`, then every
/// model votes by sampling the confusion row of the gold label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    pub n_instances: usize,
    pub n_models: usize,
    pub gold_distribution: LabelDistribution,
    /// Row-stochastic: gold label → distribution of a model's vote.
    pub confusion: BTreeMap<Label, LabelDistribution>,
    pub seed: u64,
}

/// The part of a profile stored on disk; size and seed come from the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub gold_distribution: LabelDistribution,
    pub confusion: BTreeMap<Label, LabelDistribution>,
}

impl SimProfile {
    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 || self.n_models == 0 {
            return Err(Error::Validation("simulation needs at least one instance and one model".into()));
        }
        for l in Label::ALL {
            if !self.confusion.contains_key(&l) {
                return Err(Error::Validation(format!("confusion profile has no row for {l}")));
            }
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>, n_instances: usize, n_models: usize, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ProfileFile = serde_json::from_str(&text)
            .map_err(|e| Error::from_json(e, &path.display().to_string()))?;
        let p = SimProfile {
            n_instances,
            n_models,
            gold_distribution: file.gold_distribution,
            confusion: file.confusion,
            seed,
        };
        p.validate()?;
        Ok(p)
    }
}

pub fn sim_instance_id(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len().max(6);
    format!("sim-{i:0width$}")
}

/// Draws gold labels and a prediction matrix. A pure function of `profile`.
pub fn simulate(profile: &SimProfile) -> Result<(Vec<(String, Label)>, PredictionMatrix)> {
    profile.validate()?;
    let mut rng = XorShift64Star::new(profile.seed);
    let weights = |d: &LabelDistribution| Label::ALL.map(|l| d.freq(l));
    let gold_w = weights(&profile.gold_distribution);
    let rows: BTreeMap<Label, [f64; 3]> =
        profile.confusion.iter().map(|(l, d)| (*l, weights(d))).collect();

    let n = profile.n_instances;
    let mut gold = Vec::with_capacity(n);
    let mut votes = Vec::with_capacity(n);
    for i in 0..n {
        let g = Label::ALL[rng.categorical(&gold_w)];
        let row = &rows[&g];
        votes.push((0..profile.n_models).map(|_| Label::ALL[rng.categorical(row)]).collect());
        gold.push((sim_instance_id(i, n), g));
    }
    let ids = gold.iter().map(|(id, _)| id.clone()).collect();
    Ok((gold, PredictionMatrix::new(ids, votes)?))
}

/// Plain plurality vs. calibrated aggregation on one simulated ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOutcome {
    pub gold_tse: f64,
    pub plurality_tse: f64,
    pub calibrated_tse: f64,
    pub plurality_macro_f1: f64,
    pub calibrated_macro_f1: f64,
}

/// Aggregates the simulated ensemble both ways, using the measured gold
/// distribution as the calibration reference.
pub fn compare_calibration(profile: &SimProfile) -> Result<CalibrationOutcome> {
    let (gold, matrix) = simulate(profile)?;
    let reference = LabelDistribution::from_labels(gold.iter().map(|(_, l)| *l))?;
    let plain = ensemble::plurality_decisions(&matrix)?;
    let calibrated = ensemble::aggregate(&matrix, &reference)?;
    let f1 = |ds: &[ensemble::EnsembleDecision]| -> Result<f64> {
        let pairs: Vec<LabeledPair> = gold
            .iter()
            .zip(ds)
            .map(|((id, g), d)| LabeledPair::new(id.clone(), *g, d.final_label))
            .collect();
        Ok(metrics::score(&pairs, Mode::Strict)?.macro_f1_f64())
    };
    let tse = |ds: &[ensemble::EnsembleDecision]| -> Result<f64> {
        Ok(ensemble::output_distribution(ds)?.freq(Label::ToSomeExtent))
    };
    Ok(CalibrationOutcome {
        gold_tse: reference.freq(Label::ToSomeExtent),
        plurality_tse: tse(&plain)?,
        calibrated_tse: tse(&calibrated)?,
        plurality_macro_f1: f1(&plain)?,
        calibrated_macro_f1: f1(&calibrated)?,
    })
}

/// A percentage held exactly to two decimals, as hundredths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent(u32);

impl Percent {
    pub fn from_hundredths(h: u32) -> Result<Self> {
        if h > 10_000 {
            return Err(Error::Range(format!("{}.{:02}% exceeds 100%", h / 100, h % 100)));
        }
        Ok(Percent(h))
    }

    /// From a fraction in [0, 1], rounded to the nearest hundredth of a percent.
    pub fn from_fraction(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Range(format!("fraction {x} is outside [0, 1]")));
        }
        Percent::from_hundredths((x * 10_000.0).round() as u32)
    }

    pub fn hundredths(&self) -> u32 {
        self.0
    }

    pub fn as_f64(&self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

/// Parses `71.54`, `71.5`, `71` or `71.54%`; more than two decimals is an error.
impl FromStr for Percent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_end_matches('%');
        let bad = || Error::Parse { position: format!("value `{s}`"), message: "not a percentage".into() };
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if int.is_empty() || frac.len() > 2 || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u32 = int.parse().map_err(|_| bad())?;
        let frac: u32 = if frac.is_empty() { 0 } else { format!("{frac:0<2}").parse().map_err(|_| bad())? };
        let h = int.checked_mul(100).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        Percent::from_hundredths(h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub track: Track,
    pub run_name: String,
    pub strict_f1: Percent,
    pub lenient_f1: Percent,
    pub strict_acc: Percent,
    pub lenient_acc: Percent,
}

impl RunResult {
    pub fn columns(&self) -> [Percent; 4] {
        [self.strict_f1, self.lenient_f1, self.strict_acc, self.lenient_acc]
    }
}

pub const RUN_COLUMNS: [&str; 4] = ["strict_f1", "lenient_f1", "strict_acc", "lenient_acc"];
pub const RUN_TSV_HEADER: &str = "track\trun\tstrict_f1\tlenient_f1\tstrict_acc\tlenient_acc";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Tsv,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "tsv" => Ok(TableFormat::Tsv),
            _ => Err(Error::Validation(format!("unknown table format `{s}`"))),
        }
    }
}

/// Rows grouped by track (in track order, input order within a track), each
/// paired with per-column best flags computed within its track. Equal maxima
/// are all flagged.
pub fn mark_bests(results: &[RunResult]) -> Vec<(&RunResult, [bool; 4])> {
    let mut out = Vec::with_capacity(results.len());
    for track in Track::ALL {
        let group: Vec<&RunResult> = results.iter().filter(|r| r.track == track).collect();
        let mut best = [Percent(0); 4];
        for r in &group {
            for (b, v) in best.iter_mut().zip(r.columns()) {
                *b = (*b).max(v);
            }
        }
        for r in group {
            let cols = r.columns();
            out.push((r, std::array::from_fn(|i| cols[i] == best[i])));
        }
    }
    out
}

pub fn render_run_table(results: &[RunResult], format: TableFormat) -> Result<String> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no run results".into()));
    }
    let rows = mark_bests(results);
    let mut out = String::new();
    match format {
        TableFormat::Tsv => {
            out.push_str(RUN_TSV_HEADER);
            out.push('\n');
            for (r, _) in rows {
                let [a, b, c, d] = r.columns();
                let _ = writeln!(out, "{}\t{}\t{a}\t{b}\t{c}\t{d}", r.track.cli_name(), r.run_name);
            }
        }
        TableFormat::Markdown => {
            out.push_str("| Track | Run | Strict F1 | Lenient F1 | Strict Acc. | Lenient Acc. | Best |\n");
            out.push_str("|---|---|---:|---:|---:|---:|---|\n");
            for (r, best) in rows {
                let [a, b, c, d] = r.columns();
                let marked: Vec<&str> = RUN_COLUMNS
                    .iter()
                    .zip(best)
                    .filter(|(_, b)| *b)
                    .map(|(n, _)| *n)
                    .collect();
                let _ = writeln!(
                    out,
                    "| {} | {} | {a}% | {b}% | {c}% | {d}% | {} |",
                    r.track.display_name(),
                    r.run_name,
                    marked.join(", ")
                );
            }
        }
    }
    Ok(out)
}

pub fn parse_run_tsv(text: &str) -> Result<Vec<RunResult>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.split('\t').map(str::trim).eq(RUN_TSV_HEADER.split('\t')) => {}
        Some((i, _)) => {
            return Err(Error::Parse {
                position: format!("line {}", i + 1),
                message: format!("expected header `{}`", RUN_TSV_HEADER.replace('\t', " ")),
            })
        }
        None => return Ok(Vec::new()),
    }
    lines
        .map(|(i, line)| {
            let ctx = |e: Error| match e {
                Error::Parse { message, .. } => Error::Parse { position: format!("line {}", i + 1), message },
                other => Error::Schema(format!("line {}: {other}", i + 1)),
            };
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 6 {
                return Err(ctx(Error::Parse {
                    position: String::new(),
                    message: format!("expected 6 tab-separated fields, found {}", f.len()),
                }));
            }
            Ok(RunResult {
                track: f[0].parse().map_err(ctx)?,
                run_name: f[1].to_string(),
                strict_f1: f[2].parse().map_err(ctx)?,
                lenient_f1: f[3].parse().map_err(ctx)?,
                strict_acc: f[4].parse().map_err(ctx)?,
                lenient_acc: f[5].parse().map_err(ctx)?,
            })
        })
        .collect()
}

/// One row per label, one percentage column per source, then the change of
/// every later source relative to the first.
pub fn render_distribution_report(named: &[(String, LabelDistribution)]) -> Result<String> {
    let Some((_, first)) = named.first() else {
        return Err(Error::EmptyInput("no distributions".into()));
    };
    let label_w = Label::ALL.iter().map(|l| l.as_str().len()).max().unwrap_or(0).max("label".len());
    let pct = |x: f64| format!("{:.2}%", x * 100.0);
    let delta = |x: f64| format!("{:+.2}", (x * 10_000.0).round() / 100.0 + 0.0);

    let mut headers: Vec<String> = named.iter().map(|(n, _)| n.clone()).collect();
    headers.extend(named.iter().skip(1).map(|(n, _)| format!("Δ{n}")));
    let mut body: Vec<Vec<String>> = Vec::new();
    for l in Label::ALL {
        let mut row: Vec<String> = named.iter().map(|(_, d)| pct(d.freq(l))).collect();
        row.extend(named.iter().skip(1).map(|(_, d)| delta(d.freq(l) - first.freq(l))));
        body.push(row);
    }
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| body.iter().map(|r| r[c].chars().count()).chain([headers[c].chars().count()]).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "label");
    for (h, w) in headers.iter().zip(&widths) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    for (l, row) in Label::ALL.iter().zip(&body) {
        let _ = write!(out, "{:<label_w$}", l.as_str());
        for (v, w) in row.iter().zip(&widths) {
            let _ = write!(out, "  {v:>w$}");
        }
        out.push('\n');
    }
    Ok(out)
}
