//! Dialogue corpus model and conversion to per-track instruction JSONL.
//!
//! Raw input is a single JSON array of conversations:
//!
//! ```json
//! [{ "conversation_id": "c1", "source": "Bridge",
//!    "history": [{"speaker": "student", "text": "2+2=5"}],
//!    "tutor_responses": {
//!      "GPT4": {"text": "...", "annotations": {"Mistake_Identification": "Yes"}}
//!    } }]
//! ```
//!
//! Each exported line is `{"id", "instruction", "input", "output"?}` where
//! `id` is `conversation_id|tutor_id`.

pub mod templates;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{Label, Track};

pub use templates::template;

/// Separator between conversation id and tutor id in an instance id.
pub const ID_SEPARATOR: char = '|';

/// Text placed between the flattened dialogue and the candidate response.
pub const RESPONSE_JOINER: &str = "\n\nTutor response to evaluate:\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Student,
    Tutor,
}

impl Speaker {
    pub fn display_name(&self) -> &'static str {
        match self {
            Speaker::Student => "Student",
            Speaker::Tutor => "Tutor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TutorResponse {
    pub tutor_id: String,
    pub text: String,
    /// Empty for blind data.
    pub annotations: BTreeMap<Track, Label>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TutorDialogue {
    pub conversation_id: String,
    /// Provenance of the conversation (e.g. "Bridge" or "MathDial"), when known.
    pub source: Option<String>,
    pub history: Vec<Turn>,
    pub responses: BTreeMap<String, TutorResponse>,
}

impl TutorDialogue {
    pub fn validate(&self) -> Result<()> {
        let cid = &self.conversation_id;
        check_id_part(cid, "conversation_id")?;
        if self.history.is_empty() {
            return Err(Error::Schema(format!("conversation `{cid}`: history has no turns")));
        }
        for (i, turn) in self.history.iter().enumerate() {
            if turn.text.trim().is_empty() {
                return Err(Error::Schema(format!(
                    "conversation `{cid}`: history[{i}].text is empty"
                )));
            }
        }
        if self.responses.is_empty() {
            return Err(Error::Schema(format!(
                "conversation `{cid}`: tutor_responses is empty"
            )));
        }
        for (key, resp) in &self.responses {
            if key != &resp.tutor_id {
                return Err(Error::Schema(format!(
                    "conversation `{cid}`: response keyed `{key}` has tutor_id `{}`",
                    resp.tutor_id
                )));
            }
            check_id_part(key, "tutor_id")?;
            if resp.text.trim().is_empty() {
                return Err(Error::Schema(format!(
                    "conversation `{cid}`: tutor_responses.{key}.text is empty"
                )));
            }
        }
        Ok(())
    }
}

fn check_id_part(id: &str, field: &str) -> Result<()> {
    if id.is_empty() {
        return Err(Error::Schema(format!("{field} is empty")));
    }
    if id.contains(ID_SEPARATOR) {
        return Err(Error::Schema(format!(
            "{field} `{id}` contains the reserved separator `{ID_SEPARATOR}`"
        )));
    }
    Ok(())
}

pub fn instance_id(conversation_id: &str, tutor_id: &str) -> Result<String> {
    check_id_part(conversation_id, "conversation_id")?;
    check_id_part(tutor_id, "tutor_id")?;
    Ok(format!("{conversation_id}{ID_SEPARATOR}{tutor_id}"))
}

/// One flattened instruction-tuning instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstructionRecord {
    #[serde(rename = "id")]
    pub instance_id: String,
    pub instruction: String,
    pub input: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Label>,
}

impl InstructionRecord {
    fn validate(&self) -> Result<()> {
        match self.instance_id.split_once(ID_SEPARATOR) {
            Some((c, t)) if !c.is_empty() && !t.is_empty() && !t.contains(ID_SEPARATOR) => {}
            _ => {
                return Err(Error::Schema(format!(
                    "id `{}` is not of the form conversation|tutor",
                    self.instance_id
                )))
            }
        }
        if !self.instruction.starts_with("TASK DEFINITION:")
            || !self.instruction.contains("EVALUATION CRITERIA:")
        {
            return Err(Error::Schema(format!(
                "{}: instruction is not a track prompt",
                self.instance_id
            )));
        }
        Ok(())
    }
}

// Raw ingest schema.

#[derive(Serialize, Deserialize)]
struct RawDialogue {
    conversation_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    history: Vec<Turn>,
    tutor_responses: BTreeMap<String, RawResponse>,
}

#[derive(Serialize, Deserialize)]
struct RawResponse {
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotations: Option<BTreeMap<String, String>>,
}

/// Parses a raw corpus document. Conversation order is preserved.
pub fn parse_corpus(raw_document: &str) -> Result<Vec<TutorDialogue>> {
    let raw: Vec<RawDialogue> =
        serde_json::from_str(raw_document).map_err(|e| Error::from_json(e, "corpus"))?;
    let mut seen = HashSet::with_capacity(raw.len());
    let mut out = Vec::with_capacity(raw.len());
    for (index, rd) in raw.into_iter().enumerate() {
        let dialogue = convert_raw(rd).map_err(|e| match e {
            Error::Schema(m) => Error::Schema(format!("record {index}: {m}")),
            Error::LabelParse(l) => Error::Schema(format!("record {index}: unknown label `{l}`")),
            other => other,
        })?;
        if !seen.insert(dialogue.conversation_id.clone()) {
            return Err(Error::DuplicateKey(dialogue.conversation_id));
        }
        out.push(dialogue);
    }
    Ok(out)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<TutorDialogue>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

fn convert_raw(rd: RawDialogue) -> Result<TutorDialogue> {
    let mut responses = BTreeMap::new();
    for (tutor_id, rr) in rd.tutor_responses {
        let mut annotations = BTreeMap::new();
        for (key, value) in rr.annotations.unwrap_or_default() {
            let track = Track::from_annotation_key(&key).ok_or_else(|| {
                Error::Schema(format!(
                    "conversation `{}`: tutor `{tutor_id}` has unknown annotation key `{key}`",
                    rd.conversation_id
                ))
            })?;
            annotations.insert(track, value.parse::<Label>()?);
        }
        responses.insert(
            tutor_id.clone(),
            TutorResponse { tutor_id, text: rr.text, annotations },
        );
    }
    let dialogue = TutorDialogue {
        conversation_id: rd.conversation_id,
        source: rd.source,
        history: rd.history,
        responses,
    };
    dialogue.validate()?;
    Ok(dialogue)
}

/// Serializes dialogues back into the raw ingest schema.
pub fn write_corpus(dialogues: &[TutorDialogue]) -> String {
    let raw: Vec<RawDialogue> = dialogues
        .iter()
        .map(|d| RawDialogue {
            conversation_id: d.conversation_id.clone(),
            source: d.source.clone(),
            history: d.history.clone(),
            tutor_responses: d
                .responses
                .iter()
                .map(|(k, r)| {
                    let annotations = (!r.annotations.is_empty()).then(|| {
                        r.annotations
                            .iter()
                            .map(|(t, l)| (t.annotation_key().to_string(), l.as_str().to_string()))
                            .collect()
                    });
                    (k.clone(), RawResponse { text: r.text.clone(), annotations })
                })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&raw).expect("raw corpus serializes")
}

/// Renders the history as `Student: ...` / `Tutor: ...` lines.
pub fn flatten_dialogue(dialogue: &TutorDialogue) -> String {
    dialogue
        .history
        .iter()
        .map(|t| format!("{}: {}", t.speaker.display_name(), t.text))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn build_instruction_record(
    dialogue: &TutorDialogue,
    tutor_id: &str,
    track: Track,
) -> Result<InstructionRecord> {
    let response = dialogue.responses.get(tutor_id).ok_or_else(|| {
        Error::Lookup(format!(
            "conversation `{}` has no tutor `{tutor_id}`",
            dialogue.conversation_id
        ))
    })?;
    Ok(InstructionRecord {
        instance_id: instance_id(&dialogue.conversation_id, tutor_id)?,
        instruction: template(track).to_string(),
        input: format!("{}{RESPONSE_JOINER}{}", flatten_dialogue(dialogue), response.text),
        output: response.annotations.get(&track).copied(),
    })
}

/// Builds the records for one track, sorted by instance id.
///
/// Only responses annotated for `track` are emitted unless `include_unlabeled`
/// is set, in which case every response is emitted and `output` is present
/// wherever an annotation exists.
pub fn track_records(
    dialogues: &[TutorDialogue],
    track: Track,
    include_unlabeled: bool,
) -> Result<Vec<InstructionRecord>> {
    let mut records = Vec::new();
    for d in dialogues {
        for (tutor_id, resp) in &d.responses {
            if include_unlabeled || resp.annotations.contains_key(&track) {
                records.push(build_instruction_record(d, tutor_id, track)?);
            }
        }
    }
    records.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(records)
}

pub fn render_jsonl(records: &[InstructionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn export_track_jsonl(
    dialogues: &[TutorDialogue],
    track: Track,
    include_unlabeled: bool,
) -> Result<String> {
    Ok(render_jsonl(&track_records(dialogues, track, include_unlabeled)?))
}

pub fn write_track_jsonl(
    path: impl AsRef<Path>,
    dialogues: &[TutorDialogue],
    track: Track,
    include_unlabeled: bool,
) -> Result<usize> {
    let path = path.as_ref();
    let records = track_records(dialogues, track, include_unlabeled)?;
    std::fs::write(path, render_jsonl(&records)).map_err(|e| Error::io(path, e))?;
    Ok(records.len())
}

pub fn parse_instruction_jsonl(document: &str) -> Result<Vec<InstructionRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in document.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ctx = format!("line {}", i + 1);
        let record: InstructionRecord =
            serde_json::from_str(line).map_err(|e| Error::from_json(e, &ctx))?;
        record.validate().map_err(|e| Error::Schema(format!("{ctx}: {e}")))?;
        if !seen.insert(record.instance_id.clone()) {
            return Err(Error::DuplicateKey(record.instance_id));
        }
        out.push(record);
    }
    Ok(out)
}

/// Reference counts for the shared-task development set.
pub mod mrbench {
    pub const DIALOGUES: usize = 192;
    pub const BRIDGE_DIALOGUES: usize = 60;
    pub const MATHDIAL_DIALOGUES: usize = 132;
    pub const TUTOR_RESPONSES: usize = 1596;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub dialogues: usize,
    pub responses: usize,
    /// Dialogue count per `source`; dialogues without one are not counted here.
    pub by_source: BTreeMap<String, usize>,
    pub mean_turns_by_source: BTreeMap<String, f64>,
}

impl CorpusStats {
    pub fn compute(dialogues: &[TutorDialogue]) -> Self {
        let mut by_source = BTreeMap::new();
        let mut turns: BTreeMap<String, usize> = BTreeMap::new();
        for d in dialogues {
            if let Some(src) = &d.source {
                *by_source.entry(src.clone()).or_insert(0) += 1;
                *turns.entry(src.clone()).or_insert(0) += d.history.len();
            }
        }
        let mean_turns_by_source = turns
            .into_iter()
            .map(|(s, t)| {
                let n = by_source[&s];
                (s, t as f64 / n as f64)
            })
            .collect();
        CorpusStats {
            dialogues: dialogues.len(),
            responses: dialogues.iter().map(|d| d.responses.len()).sum(),
            by_source,
            mean_turns_by_source,
        }
    }

    /// Checks dialogue totals (and the Bridge/MathDial split when source
    /// metadata is present) against the published development-set counts.
    pub fn check_mrbench(&self) -> Result<()> {
        if self.dialogues != mrbench::DIALOGUES {
            return Err(Error::Validation(format!(
                "expected {} dialogues, found {}",
                mrbench::DIALOGUES,
                self.dialogues
            )));
        }
        if !self.by_source.is_empty() {
            let bridge = self.by_source.get("Bridge").copied().unwrap_or(0);
            let mathdial = self.by_source.get("MathDial").copied().unwrap_or(0);
            if bridge != mrbench::BRIDGE_DIALOGUES || mathdial != mrbench::MATHDIAL_DIALOGUES {
                return Err(Error::Validation(format!(
                    "expected {}/{} Bridge/MathDial dialogues, found {bridge}/{mathdial}",
                    mrbench::BRIDGE_DIALOGUES,
                    mrbench::MATHDIAL_DIALOGUES
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dialogues={}", self.dialogues)?;
        writeln!(f, "responses={}", self.responses)?;
        for (src, n) in &self.by_source {
            writeln!(f, "source.{src}={n}")?;
            writeln!(f, "source.{src}.mean_turns={:.2}", self.mean_turns_by_source[src])?;
        }
        Ok(())
    }
}
