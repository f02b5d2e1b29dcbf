//! Disagreement-aware aggregation of per-model votes.
//!
//! Unanimous instances keep their label. Split instances start from a
//! plurality label, then split instances holding at least one
//! "To some extent" vote are flipped to "To some extent" until the final share
//! of that label reaches the reference frequency. Flips only ever go toward
//! "To some extent"; instances already over quota are left alone.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::VoteRecord;
use crate::label::Label;

/// Tolerance on the total mass of a distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Ties go to the minority-leaning label first.
pub const DEFAULT_TIE_ORDER: [Label; 3] = [Label::ToSomeExtent, Label::No, Label::Yes];

/// Empirical class frequencies over the three labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelDistribution {
    freq: [f64; 3],
}

impl LabelDistribution {
    pub fn new(freq: impl IntoIterator<Item = (Label, f64)>) -> Result<Self> {
        let mut f = [0.0; 3];
        for (label, p) in freq {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Validation(format!("frequency of {label} is {p}")));
            }
            f[label.index()] += p;
        }
        let total: f64 = f.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::Validation(format!("frequencies sum to {total}, not 1")));
        }
        Ok(LabelDistribution { freq: f })
    }

    pub fn from_labels<I>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = Label>,
    {
        let mut counts = [0usize; 3];
        for l in labels {
            counts[l.index()] += 1;
        }
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyInput("no labels to measure".into()));
        }
        Ok(LabelDistribution { freq: counts.map(|c| c as f64 / n as f64) })
    }

    pub fn freq(&self, label: Label) -> f64 {
        self.freq[label.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, f64)> + '_ {
        Label::ALL.into_iter().map(|l| (l, self.freq(l)))
    }
}

impl Serialize for LabelDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<Label, f64> = self.iter().collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<Label, f64>::deserialize(d)?;
        LabelDistribution::new(map).map_err(serde::de::Error::custom)
    }
}

/// Votes of `M` models over a set of instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionMatrix {
    ids: Vec<String>,
    votes: Vec<Vec<Label>>,
    n_models: usize,
}

impl PredictionMatrix {
    pub fn new(ids: Vec<String>, votes: Vec<Vec<Label>>) -> Result<Self> {
        if ids.len() != votes.len() {
            return Err(Error::Shape(format!(
                "{} instance ids but {} vote lists",
                ids.len(),
                votes.len()
            )));
        }
        let n_models = votes.first().map_or(0, Vec::len);
        if !votes.is_empty() && n_models == 0 {
            return Err(Error::Shape("instances need at least one vote".into()));
        }
        if let Some((i, v)) = votes.iter().enumerate().find(|(_, v)| v.len() != n_models) {
            return Err(Error::Shape(format!(
                "instance `{}` has {} votes, expected {n_models}",
                ids[i],
                v.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateKey(id.clone()));
            }
        }
        Ok(PredictionMatrix { ids, votes, n_models })
    }

    /// Joins one label list per model on instance id. Every model must cover
    /// exactly the same ids; instances come out sorted by id.
    pub fn from_model_predictions(models: &[Vec<(String, Label)>]) -> Result<Self> {
        let Some(first) = models.first() else {
            return Err(Error::EmptyInput("no prediction files".into()));
        };
        let mut ids: Vec<String> = first.iter().map(|(id, _)| id.clone()).collect();
        ids.sort();
        let mut columns = Vec::with_capacity(models.len());
        for (m, preds) in models.iter().enumerate() {
            let mut map = BTreeMap::new();
            for (id, l) in preds {
                if map.insert(id.as_str(), *l).is_some() {
                    return Err(Error::DuplicateKey(id.clone()));
                }
            }
            if map.len() != ids.len() || !ids.iter().all(|id| map.contains_key(id.as_str())) {
                return Err(Error::Join(format!(
                    "prediction set {} does not cover the same ids as set 1",
                    m + 1
                )));
            }
            columns.push(map);
        }
        let votes = ids
            .iter()
            .map(|id| columns.iter().map(|c| c[id.as_str()]).collect())
            .collect();
        PredictionMatrix::new(ids, votes)
    }

    pub fn from_vote_records(records: Vec<VoteRecord>) -> Result<Self> {
        let mut records = records;
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let (ids, votes) = records.into_iter().map(|r| (r.id, r.votes)).unzip();
        PredictionMatrix::new(ids, votes)
    }

    pub fn to_vote_records(&self) -> Vec<VoteRecord> {
        self.ids
            .iter()
            .zip(&self.votes)
            .map(|(id, v)| VoteRecord { id: id.clone(), votes: v.clone() })
            .collect()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn votes(&self) -> &[Vec<Label>] {
        &self.votes
    }

    pub fn n_instances(&self) -> usize {
        self.ids.len()
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// The votes cast by model `m` on every instance.
    pub fn model_column(&self, m: usize) -> Vec<Label> {
        self.votes.iter().map(|v| v[m]).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VoteCounts([u32; 3]);

impl VoteCounts {
    pub fn from_votes(votes: &[Label]) -> Self {
        let mut c = [0u32; 3];
        for v in votes {
            c[v.index()] += 1;
        }
        VoteCounts(c)
    }

    pub fn get(&self, label: Label) -> u32 {
        self.0[label.index()]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// The label holding every vote, if any.
    pub fn unanimous(&self) -> Option<Label> {
        let total = self.total();
        (total > 0).then(|| Label::ALL.into_iter().find(|l| self.get(*l) == total)).flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, u32)> + '_ {
        Label::ALL.into_iter().map(|l| (l, self.get(l)))
    }
}

impl Serialize for VoteCounts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<Label, u32> = self.iter().filter(|(_, c)| *c > 0).collect();
        map.serialize(s)
    }
}

pub fn tally(matrix: &PredictionMatrix) -> Vec<VoteCounts> {
    matrix.votes.iter().map(|v| VoteCounts::from_votes(v)).collect()
}

/// Most-voted label; ties resolved by position in `tie_order`.
pub fn plurality(counts: &VoteCounts, tie_order: &[Label]) -> Label {
    let max = counts.max();
    tie_order
        .iter()
        .copied()
        .chain(Label::ALL)
        .find(|l| counts.get(*l) == max)
        .expect("some label holds the maximum")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Unanimous,
    Plurality,
    QuotaFlip,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Unanimous => "unanimous",
            Basis::Plurality => "plurality",
            Basis::QuotaFlip => "quota_flip",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnsembleDecision {
    #[serde(rename = "id")]
    pub instance_id: String,
    #[serde(rename = "final")]
    pub final_label: Label,
    pub basis: Basis,
    #[serde(rename = "counts")]
    pub vote_counts: VoteCounts,
}

/// Number of "To some extent" labels the output should reach:
/// `round(tse_freq * n)`, halves rounded away from zero.
pub fn tse_quota(tse_freq: f64, n: usize) -> usize {
    (tse_freq * n as f64).round() as usize
}

/// Unanimity-preserving plurality vote without any quota adjustment.
pub fn plurality_decisions(matrix: &PredictionMatrix) -> Result<Vec<EnsembleDecision>> {
    if matrix.is_empty() {
        return Err(Error::EmptyInput("prediction matrix has no instances".into()));
    }
    Ok(matrix
        .ids
        .iter()
        .zip(tally(matrix))
        .map(|(id, counts)| {
            let (final_label, basis) = match counts.unanimous() {
                Some(l) => (l, Basis::Unanimous),
                None => (plurality(&counts, &DEFAULT_TIE_ORDER), Basis::Plurality),
            };
            EnsembleDecision { instance_id: id.clone(), final_label, basis, vote_counts: counts }
        })
        .collect())
}

pub fn aggregate(
    matrix: &PredictionMatrix,
    reference: &LabelDistribution,
) -> Result<Vec<EnsembleDecision>> {
    aggregate_with_tse_freq(matrix, reference.freq(Label::ToSomeExtent))
}

/// [`aggregate`] driven directly by a target "To some extent" frequency.
pub fn aggregate_with_tse_freq(
    matrix: &PredictionMatrix,
    tse_freq: f64,
) -> Result<Vec<EnsembleDecision>> {
    if !(0.0..=1.0).contains(&tse_freq) {
        return Err(Error::Validation(format!("TSE frequency {tse_freq} is outside [0, 1]")));
    }
    let mut decisions = plurality_decisions(matrix)?;
    let quota = tse_quota(tse_freq, decisions.len());
    let tse_count = decisions
        .iter()
        .filter(|d| d.final_label == Label::ToSomeExtent)
        .count();
    if tse_count >= quota {
        return Ok(decisions);
    }

    let mut candidates: Vec<usize> = decisions
        .iter()
        .enumerate()
        .filter(|(_, d)| {
            d.basis != Basis::Unanimous
                && d.final_label != Label::ToSomeExtent
                && d.vote_counts.get(Label::ToSomeExtent) > 0
        })
        .map(|(i, _)| i)
        .collect();
    candidates.sort_by(|&a, &b| {
        let (da, db) = (&decisions[a], &decisions[b]);
        db.vote_counts
            .get(Label::ToSomeExtent)
            .cmp(&da.vote_counts.get(Label::ToSomeExtent))
            .then_with(|| da.instance_id.cmp(&db.instance_id))
    });

    for i in candidates.into_iter().take(quota - tse_count) {
        decisions[i].final_label = Label::ToSomeExtent;
        decisions[i].basis = Basis::QuotaFlip;
    }
    Ok(decisions)
}

pub fn output_distribution(decisions: &[EnsembleDecision]) -> Result<LabelDistribution> {
    LabelDistribution::from_labels(decisions.iter().map(|d| d.final_label))
}

pub fn render_audit(decisions: &[EnsembleDecision]) -> String {
    let mut out = String::new();
    for d in decisions {
        out.push_str(&serde_json::to_string(d).expect("decision serializes"));
        out.push('\n');
    }
    out
}
