//! Strict (three-class) and lenient (two-class) macro-F1 and accuracy.
//!
//! All quantities are exact rationals. A precision, recall or F1 whose
//! denominator is zero is 0, and the macro average always runs over the full
//! class set, so a class missing from both gold and predictions contributes 0.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::label::{ClassLabel, Label, LenientLabel};

pub type Rational = Ratio<u128>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPair<L = Label> {
    pub instance_id: String,
    pub gold: L,
    pub predicted: L,
}

impl<L> LabeledPair<L> {
    pub fn new(instance_id: impl Into<String>, gold: L, predicted: L) -> Self {
        LabeledPair { instance_id: instance_id.into(), gold, predicted }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Lenient,
}

impl Mode {
    pub fn key(&self) -> &'static str {
        match self {
            Mode::Strict => "strict",
            Mode::Lenient => "lenient",
        }
    }
}

/// Counts indexed by (gold, predicted) over an ordered class set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<&'static str>,
    counts: Vec<Vec<u64>>,
    total: u64,
}

impl ConfusionMatrix {
    /// Builds a matrix from raw counts; rows are gold, columns predicted.
    pub fn from_counts(classes: Vec<&'static str>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = classes.len();
        if k == 0 || counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::Shape(format!("confusion counts must be {k}x{k}")));
        }
        let total = counts.iter().flatten().sum();
        Ok(ConfusionMatrix { classes, counts, total })
    }

    pub fn classes(&self) -> &[&'static str] {
        &self.classes
    }

    pub fn count(&self, gold: usize, predicted: usize) -> u64 {
        self.counts[gold][predicted]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn true_positives(&self, c: usize) -> u64 {
        self.counts[c][c]
    }

    /// Number of gold instances of class `c`.
    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn predicted_count(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn precision(&self, c: usize) -> Rational {
        ratio_or_zero(self.true_positives(c), self.predicted_count(c))
    }

    pub fn recall(&self, c: usize) -> Rational {
        ratio_or_zero(self.true_positives(c), self.support(c))
    }

    /// 2PR/(P+R), or 0 when P+R = 0.
    pub fn f1(&self, c: usize) -> Rational {
        let p = self.precision(c);
        let r = self.recall(c);
        let sum = p + r;
        if sum.is_zero() {
            Rational::zero()
        } else {
            Rational::from_integer(2) * p * r / sum
        }
    }

    pub fn macro_f1(&self) -> Rational {
        let k = self.classes.len();
        let sum = (0..k).fold(Rational::zero(), |acc, c| acc + self.f1(c));
        sum / Rational::from_integer(k as u128)
    }

    pub fn accuracy(&self) -> Result<Rational> {
        if self.total == 0 {
            return Err(Error::EmptyInput("accuracy of an empty confusion matrix".into()));
        }
        let trace: u64 = (0..self.classes.len()).map(|c| self.true_positives(c)).sum();
        Ok(Rational::new(trace as u128, self.total as u128))
    }
}

fn ratio_or_zero(num: u64, den: u64) -> Rational {
    if den == 0 {
        Rational::zero()
    } else {
        Rational::new(num as u128, den as u128)
    }
}

pub fn build_confusion<L: ClassLabel>(
    pairs: &[LabeledPair<L>],
    class_set: &[L],
) -> Result<ConfusionMatrix> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no labeled pairs".into()));
    }
    let pos = |l: L| {
        class_set
            .iter()
            .position(|c| *c == l)
            .ok_or_else(|| Error::Domain(format!("label `{}` is not in the class set", l.name())))
    };
    let k = class_set.len();
    let mut counts = vec![vec![0u64; k]; k];
    for p in pairs {
        counts[pos(p.gold)?][pos(p.predicted)?] += 1;
    }
    ConfusionMatrix::from_counts(class_set.iter().map(|c| c.name()).collect(), counts)
}

pub fn macro_f1(matrix: &ConfusionMatrix) -> Rational {
    matrix.macro_f1()
}

pub fn accuracy(matrix: &ConfusionMatrix) -> Result<Rational> {
    matrix.accuracy()
}

pub fn to_lenient(pairs: &[LabeledPair]) -> Vec<LabeledPair<LenientLabel>> {
    pairs
        .iter()
        .map(|p| LabeledPair {
            instance_id: p.instance_id.clone(),
            gold: p.gold.to_lenient(),
            predicted: p.predicted.to_lenient(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassScore {
    pub class: &'static str,
    pub precision: Rational,
    pub recall: Rational,
    pub f1: Rational,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreReport {
    pub mode: Mode,
    pub macro_f1: Rational,
    pub accuracy: Rational,
    pub per_class: Vec<ClassScore>,
}

impl ScoreReport {
    fn from_matrix(mode: Mode, m: &ConfusionMatrix) -> Result<Self> {
        let per_class = (0..m.classes().len())
            .map(|c| ClassScore {
                class: m.classes()[c],
                precision: m.precision(c),
                recall: m.recall(c),
                f1: m.f1(c),
                support: m.support(c),
            })
            .collect();
        Ok(ScoreReport { mode, macro_f1: m.macro_f1(), accuracy: m.accuracy()?, per_class })
    }

    pub fn macro_f1_f64(&self) -> f64 {
        to_f64(self.macro_f1)
    }

    pub fn accuracy_f64(&self) -> f64 {
        to_f64(self.accuracy)
    }
}

pub fn to_f64(r: Rational) -> f64 {
    r.to_f64().expect("bounded rational converts to f64")
}

/// A rational in [0, 1] as a percentage with two decimals, e.g. `66.67`.
pub fn percent(r: Rational) -> String {
    format!("{:.2}", to_f64(r) * 100.0)
}

pub fn score(pairs: &[LabeledPair], mode: Mode) -> Result<ScoreReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no labeled pairs".into()));
    }
    let mut seen = HashSet::with_capacity(pairs.len());
    for p in pairs {
        if p.instance_id.is_empty() {
            return Err(Error::Validation("empty instance id".into()));
        }
        if !seen.insert(p.instance_id.as_str()) {
            return Err(Error::DuplicateKey(p.instance_id.clone()));
        }
    }
    let matrix = match mode {
        Mode::Strict => build_confusion(pairs, &Label::ALL)?,
        Mode::Lenient => build_confusion(&to_lenient(pairs), LenientLabel::ALL)?,
    };
    ScoreReport::from_matrix(mode, &matrix)
}

/// Pairs gold and predicted labels by id, in gold order.
pub fn join_pairs(gold: &[(String, Label)], predicted: &[(String, Label)]) -> Result<Vec<LabeledPair>> {
    let pred = index_unique(predicted)?;
    let gold_ids = index_unique(gold)?;
    let missing_pred: Vec<&str> = gold
        .iter()
        .filter(|(id, _)| !pred.contains_key(id.as_str()))
        .map(|(id, _)| id.as_str())
        .collect();
    let missing_gold: Vec<&str> = predicted
        .iter()
        .filter(|(id, _)| !gold_ids.contains_key(id.as_str()))
        .map(|(id, _)| id.as_str())
        .collect();
    if !missing_pred.is_empty() || !missing_gold.is_empty() {
        let mut msg = String::new();
        if !missing_pred.is_empty() {
            let _ = write!(msg, "no prediction for {}", id_list(&missing_pred));
        }
        if !missing_gold.is_empty() {
            if !msg.is_empty() {
                msg.push_str("; ");
            }
            let _ = write!(msg, "no gold label for {}", id_list(&missing_gold));
        }
        return Err(Error::Join(msg));
    }
    Ok(gold
        .iter()
        .map(|(id, g)| LabeledPair::new(id.clone(), *g, pred[id.as_str()]))
        .collect())
}

fn index_unique(labels: &[(String, Label)]) -> Result<HashMap<&str, Label>> {
    let mut map = HashMap::with_capacity(labels.len());
    for (id, l) in labels {
        if map.insert(id.as_str(), *l).is_some() {
            return Err(Error::DuplicateKey(id.clone()));
        }
    }
    Ok(map)
}

fn id_list(ids: &[&str]) -> String {
    const SHOWN: usize = 10;
    let head = ids.iter().take(SHOWN).map(|s| format!("`{s}`")).collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        format!("{head} and {} more", ids.len() - SHOWN)
    } else {
        head
    }
}

/// Flat `key=value` rendering. Scores are percentages with two decimals.
pub fn render_scores(reports: &[ScoreReport], per_class: bool) -> String {
    let mut out = String::new();
    for r in reports {
        let m = r.mode.key();
        let _ = writeln!(out, "{m}_macro_f1={}", percent(r.macro_f1));
        let _ = writeln!(out, "{m}_accuracy={}", percent(r.accuracy));
    }
    if per_class {
        for r in reports {
            for c in &r.per_class {
                let _ = writeln!(out, "\n[{}.{}]", r.mode.key(), c.class);
                let _ = writeln!(out, "precision={}", percent(c.precision));
                let _ = writeln!(out, "recall={}", percent(c.recall));
                let _ = writeln!(out, "f1={}", percent(c.f1));
                let _ = writeln!(out, "support={}", c.support);
            }
        }
    }
    out
}
