//! C ABI over the `tutoreval` library.
//!
//! Every fallible function returns a [`TevStatus`]. On failure a message is
//! stored per thread and can be read with [`tev_last_error_message`]. Values
//! come back through out-pointers, which are written only on success.
//!
//! Label codes follow [`TevLabel`]: 0 is "Yes", 1 is "To some extent" and
//! 2 is "No". Matrices are dense, row-major `double` buffers.
//!
//! Strings returned by the library are owned by the caller. Release them with
//! [`tev_string_free`]. Opaque handles have matching `*_free` functions.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tutoreval::corpus::{self, CorpusStats, TutorDialogue};
use tutoreval::ensemble::{self, Basis, EnsembleDecision, PredictionMatrix};
use tutoreval::lora::{self, LoraAdapter, Matrix, TrainConfig};
use tutoreval::metrics::{self, LabeledPair, Mode};
use tutoreval::{Error, Label, Track};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TevStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Schema = 5,
    DuplicateKey = 6,
    Lookup = 7,
    EmptyInput = 8,
    Domain = 9,
    Join = 10,
    Shape = 11,
    Dimension = 12,
    Numeric = 13,
    Range = 14,
    Validation = 15,
    Io = 16,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TevLabel {
    Yes = 0,
    ToSomeExtent = 1,
    No = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TevMode {
    Strict = 0,
    Lenient = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TevTrack {
    MistakeIdentification = 0,
    MistakeLocation = 1,
    ProvidingGuidance = 2,
    Actionability = 3,
}

/// How an ensemble decision was reached.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TevBasis {
    Unanimous = 0,
    Plurality = 1,
    QuotaFlip = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TevScores {
    pub macro_f1: f64,
    pub accuracy: f64,
}

/// Plain-data mirror of the fine-tuning configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TevTrainConfig {
    pub rank: usize,
    pub alpha: f64,
    pub dropout: f64,
    pub learning_rate: f64,
    pub warmup_fraction: f64,
    pub weight_decay: f64,
    pub max_steps: u64,
    pub clip_norm: f64,
    pub max_seq_len: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub eval_every: u64,
    pub checkpoint_every: u64,
    pub checkpoint_retention: usize,
}

impl From<&TrainConfig> for TevTrainConfig {
    fn from(c: &TrainConfig) -> Self {
        TevTrainConfig {
            rank: c.rank,
            alpha: c.alpha,
            dropout: c.dropout,
            learning_rate: c.learning_rate,
            warmup_fraction: c.warmup_fraction,
            weight_decay: c.weight_decay,
            max_steps: c.max_steps,
            clip_norm: c.clip_norm,
            max_seq_len: c.max_seq_len,
            batch_size: c.batch_size,
            seed: c.seed,
            eval_every: c.eval_every,
            checkpoint_every: c.checkpoint_every,
            checkpoint_retention: c.checkpoint_retention,
        }
    }
}

impl From<&TevTrainConfig> for TrainConfig {
    fn from(c: &TevTrainConfig) -> Self {
        TrainConfig {
            rank: c.rank,
            alpha: c.alpha,
            dropout: c.dropout,
            learning_rate: c.learning_rate,
            warmup_fraction: c.warmup_fraction,
            weight_decay: c.weight_decay,
            max_steps: c.max_steps,
            clip_norm: c.clip_norm,
            max_seq_len: c.max_seq_len,
            batch_size: c.batch_size,
            seed: c.seed,
            eval_every: c.eval_every,
            checkpoint_every: c.checkpoint_every,
            checkpoint_retention: c.checkpoint_retention,
        }
    }
}

/// Parsed dialogue corpus.
pub struct TevCorpus {
    dialogues: Vec<TutorDialogue>,
}

/// Instances × models vote table.
pub struct TevPredictionMatrix {
    matrix: PredictionMatrix,
}

struct Failure {
    status: TevStatus,
    message: String,
}

impl Failure {
    fn new(status: TevStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }

    fn null(what: &str) -> Self {
        Failure::new(TevStatus::NullPointer, format!("`{what}` is null"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure::new(TevStatus::InvalidArgument, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } => TevStatus::Parse,
            Error::Schema(_) => TevStatus::Schema,
            Error::DuplicateKey(_) => TevStatus::DuplicateKey,
            Error::LabelParse(_) | Error::TrackParse(_) => TevStatus::InvalidArgument,
            Error::Lookup(_) => TevStatus::Lookup,
            Error::EmptyInput(_) => TevStatus::EmptyInput,
            Error::Domain(_) => TevStatus::Domain,
            Error::Join(_) => TevStatus::Join,
            Error::Shape(_) => TevStatus::Shape,
            Error::Dimension(_) => TevStatus::Dimension,
            Error::Numeric(_) => TevStatus::Numeric,
            Error::Range(_) => TevStatus::Range,
            Error::Validation(_) => TevStatus::Validation,
            Error::Io { .. } => TevStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TevStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TevStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {detail}"));
            TevStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(what));
    }
    out.write(value);
    Ok(())
}

/// Copies `values` into a caller buffer. Input and output may alias because
/// no Rust reference to the output is formed.
unsafe fn copy_out<T: Copy>(out: *mut T, values: &[T], what: &str) -> Result<(), Failure> {
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(Failure::null(what));
    }
    ptr::copy(values.as_ptr(), out, values.len());
    Ok(())
}

unsafe fn str_in<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(TevStatus::InvalidUtf8, format!("`{what}` is not UTF-8: {e}")))
}

fn string_out(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::invalid("output contains an interior NUL byte"))
}

fn label_from_code(code: i32) -> Result<Label, Failure> {
    usize::try_from(code)
        .ok()
        .and_then(Label::from_index)
        .ok_or_else(|| Failure::invalid(format!("label code {code} is not 0, 1 or 2")))
}

fn label_to_code(label: Label) -> TevLabel {
    match label {
        Label::Yes => TevLabel::Yes,
        Label::ToSomeExtent => TevLabel::ToSomeExtent,
        Label::No => TevLabel::No,
    }
}

fn track_from_code(code: i32) -> Result<Track, Failure> {
    usize::try_from(code)
        .ok()
        .and_then(|i| Track::ALL.get(i).copied())
        .ok_or_else(|| Failure::invalid(format!("track code {code} is not in 0..=3")))
}

fn matrix_in(data: &[f64], rows: usize, cols: usize) -> Result<Matrix, Failure> {
    Ok(Matrix::new(rows, cols, data.to_vec())?)
}

/// NUL-terminated library version. Static storage; do not free.
#[no_mangle]
pub extern "C" fn tev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL when no call
/// has failed yet. The pointer stays valid until the next failing call on
/// the same thread.
#[no_mangle]
pub extern "C" fn tev_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn tev_clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn tev_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Macro-F1 and accuracy of `n` positionally aligned gold and predicted label
/// codes under `mode` (a [`TevMode`] value).
#[no_mangle]
pub unsafe extern "C" fn tev_score(
    gold: *const i32,
    predicted: *const i32,
    n: usize,
    mode: i32,
    out: *mut TevScores,
) -> TevStatus {
    guard(|| {
        let mode = match mode {
            0 => Mode::Strict,
            1 => Mode::Lenient,
            other => return Err(Failure::invalid(format!("mode code {other} is not 0 or 1"))),
        };
        let gold = slice_in(gold, n, "gold")?;
        let predicted = slice_in(predicted, n, "predicted")?;
        let pairs = gold
            .iter()
            .zip(predicted)
            .enumerate()
            .map(|(i, (g, p))| Ok(LabeledPair::new(i.to_string(), label_from_code(*g)?, label_from_code(*p)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        let report = metrics::score(&pairs, mode)?;
        write_out(out, TevScores { macro_f1: report.macro_f1_f64(), accuracy: report.accuracy_f64() }, "out")
    })
}

/// Parses a JSON corpus document into a new handle.
#[no_mangle]
pub unsafe extern "C" fn tev_corpus_parse(json: *const c_char, out: *mut *mut TevCorpus) -> TevStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let dialogues = corpus::parse_corpus(str_in(json, "json")?)?;
        out.write(Box::into_raw(Box::new(TevCorpus { dialogues })));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tev_corpus_free(corpus: *mut TevCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tev_corpus_dialogue_count(corpus: *const TevCorpus, out: *mut usize) -> TevStatus {
    guard(|| {
        let c = corpus.as_ref().ok_or_else(|| Failure::null("corpus"))?;
        write_out(out, c.dialogues.len(), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn tev_corpus_response_count(corpus: *const TevCorpus, out: *mut usize) -> TevStatus {
    guard(|| {
        let c = corpus.as_ref().ok_or_else(|| Failure::null("corpus"))?;
        write_out(out, CorpusStats::compute(&c.dialogues).responses, "out")
    })
}

/// Instruction JSONL for one track (a [`TevTrack`] value). Free the result
/// with [`tev_string_free`].
#[no_mangle]
pub unsafe extern "C" fn tev_corpus_export_track(
    corpus: *const TevCorpus,
    track: i32,
    include_unlabeled: bool,
    out: *mut *mut c_char,
) -> TevStatus {
    guard(|| {
        let c = corpus.as_ref().ok_or_else(|| Failure::null("corpus"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let text = corpus::export_track_jsonl(&c.dialogues, track_from_code(track)?, include_unlabeled)?;
        out.write(string_out(text)?);
        Ok(())
    })
}

/// Builds a vote table from `n_instances` ids and a row-major
/// `n_instances × n_models` array of label codes.
#[no_mangle]
pub unsafe extern "C" fn tev_prediction_matrix_new(
    ids: *const *const c_char,
    votes: *const i32,
    n_instances: usize,
    n_models: usize,
    out: *mut *mut TevPredictionMatrix,
) -> TevStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let id_ptrs = slice_in(ids, n_instances, "ids")?;
        let cells = n_instances
            .checked_mul(n_models)
            .ok_or_else(|| Failure::invalid("n_instances * n_models overflows"))?;
        let codes = slice_in(votes, cells, "votes")?;
        let ids = id_ptrs
            .iter()
            .map(|p| str_in(*p, "ids[i]").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = if n_models == 0 {
            vec![Vec::new(); n_instances]
        } else {
            codes
                .chunks(n_models)
                .map(|row| row.iter().map(|c| label_from_code(*c)).collect())
                .collect::<Result<Vec<_>, _>>()?
        };
        let matrix = PredictionMatrix::new(ids, rows)?;
        out.write(Box::into_raw(Box::new(TevPredictionMatrix { matrix })));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tev_prediction_matrix_free(matrix: *mut TevPredictionMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tev_prediction_matrix_instances(
    matrix: *const TevPredictionMatrix,
    out: *mut usize,
) -> TevStatus {
    guard(|| {
        let m = matrix.as_ref().ok_or_else(|| Failure::null("matrix"))?;
        write_out(out, m.matrix.n_instances(), "out")
    })
}

unsafe fn emit_decisions(
    decisions: &[EnsembleDecision],
    out_labels: *mut TevLabel,
    out_basis: *mut TevBasis,
    len: usize,
) -> Result<(), Failure> {
    if len != decisions.len() {
        return Err(Failure::invalid(format!(
            "output buffers hold {len} entries, the matrix has {} instances",
            decisions.len()
        )));
    }
    let labels: Vec<TevLabel> = decisions.iter().map(|d| label_to_code(d.final_label)).collect();
    copy_out(out_labels, &labels, "out_labels")?;
    if !out_basis.is_null() {
        let basis: Vec<TevBasis> = decisions
            .iter()
            .map(|d| match d.basis {
                Basis::Unanimous => TevBasis::Unanimous,
                Basis::Plurality => TevBasis::Plurality,
                Basis::QuotaFlip => TevBasis::QuotaFlip,
            })
            .collect();
        copy_out(out_basis, &basis, "out_basis")?;
    }
    Ok(())
}

/// Calibrated ensemble labels in instance order. `tse_freq` is the target
/// "To some extent" frequency in [0, 1]. `out_basis` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn tev_ensemble_aggregate(
    matrix: *const TevPredictionMatrix,
    tse_freq: f64,
    out_labels: *mut TevLabel,
    out_basis: *mut TevBasis,
    len: usize,
) -> TevStatus {
    guard(|| {
        let m = matrix.as_ref().ok_or_else(|| Failure::null("matrix"))?;
        let decisions = ensemble::aggregate_with_tse_freq(&m.matrix, tse_freq)?;
        emit_decisions(&decisions, out_labels, out_basis, len)
    })
}

/// Plain plurality labels, with no quota adjustment.
#[no_mangle]
pub unsafe extern "C" fn tev_ensemble_plurality(
    matrix: *const TevPredictionMatrix,
    out_labels: *mut TevLabel,
    out_basis: *mut TevBasis,
    len: usize,
) -> TevStatus {
    guard(|| {
        let m = matrix.as_ref().ok_or_else(|| Failure::null("matrix"))?;
        let decisions = ensemble::plurality_decisions(&m.matrix)?;
        emit_decisions(&decisions, out_labels, out_basis, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn tev_train_config_default(out: *mut TevTrainConfig) -> TevStatus {
    guard(|| write_out(out, TevTrainConfig::from(&TrainConfig::default()), "out"))
}

/// TOML rendering of a configuration. Free the result with
/// [`tev_string_free`].
#[no_mangle]
pub unsafe extern "C" fn tev_train_config_to_toml(
    config: *const TevTrainConfig,
    out: *mut *mut c_char,
) -> TevStatus {
    guard(|| {
        let c = TrainConfig::from(config.as_ref().ok_or_else(|| Failure::null("config"))?);
        c.validate()?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        out.write(string_out(c.to_toml())?);
        Ok(())
    })
}

/// Learning rate at `step` under the warmup-then-constant schedule.
#[no_mangle]
pub unsafe extern "C" fn tev_warmup_lr(step: u64, config: *const TevTrainConfig, out: *mut f64) -> TevStatus {
    guard(|| {
        let c = TrainConfig::from(config.as_ref().ok_or_else(|| Failure::null("config"))?);
        write_out(out, lora::warmup_lr(step, &c)?, "out")
    })
}

/// Rescales `grad` to L2 norm at most `clip_norm`. `out` may equal `grad`.
#[no_mangle]
pub unsafe extern "C" fn tev_clip_gradient(
    grad: *const f64,
    len: usize,
    clip_norm: f64,
    out: *mut f64,
) -> TevStatus {
    guard(|| {
        let input = slice_in(grad, len, "grad")?.to_vec();
        let clipped = lora::clip_gradient(&input, clip_norm)?;
        copy_out(out, &clipped, "out")
    })
}

/// `ΔW = alpha·A·B` for `A` of shape `out_dim × rank` and `B` of shape
/// `rank × in_dim`. `out` receives `out_dim × in_dim` values.
#[no_mangle]
pub unsafe extern "C" fn tev_lora_delta_w(
    a: *const f64,
    b: *const f64,
    out_dim: usize,
    rank: usize,
    in_dim: usize,
    alpha: f64,
    out: *mut f64,
) -> TevStatus {
    guard(|| {
        let adapter = adapter_in(a, b, out_dim, rank, in_dim, alpha)?;
        copy_out(out, lora::delta_w(&adapter).as_slice(), "out")
    })
}

/// Gradients of a loss with respect to `A` and `B`, given the layer input
/// `x` (length `in_dim`) and `∂L/∂y` (length `out_dim`).
#[no_mangle]
pub unsafe extern "C" fn tev_lora_adapter_gradients(
    a: *const f64,
    b: *const f64,
    out_dim: usize,
    rank: usize,
    in_dim: usize,
    alpha: f64,
    x: *const f64,
    loss_grad: *const f64,
    out_grad_a: *mut f64,
    out_grad_b: *mut f64,
) -> TevStatus {
    guard(|| {
        let adapter = adapter_in(a, b, out_dim, rank, in_dim, alpha)?;
        let x = slice_in(x, in_dim, "x")?;
        let g = slice_in(loss_grad, out_dim, "loss_grad")?;
        let base = Matrix::zeros(out_dim, in_dim);
        let (ga, gb) = lora::adapter_gradients(&base, &adapter, x, g)?;
        copy_out(out_grad_a, ga.as_slice(), "out_grad_a")?;
        copy_out(out_grad_b, gb.as_slice(), "out_grad_b")
    })
}

unsafe fn adapter_in(
    a: *const f64,
    b: *const f64,
    out_dim: usize,
    rank: usize,
    in_dim: usize,
    alpha: f64,
) -> Result<LoraAdapter, Failure> {
    let a_len = out_dim.checked_mul(rank).ok_or_else(|| Failure::invalid("A size overflows"))?;
    let b_len = rank.checked_mul(in_dim).ok_or_else(|| Failure::invalid("B size overflows"))?;
    let a = matrix_in(slice_in(a, a_len, "a")?, out_dim, rank)?;
    let b = matrix_in(slice_in(b, b_len, "b")?, rank, in_dim)?;
    Ok(LoraAdapter::new(a, b, alpha)?)
}
