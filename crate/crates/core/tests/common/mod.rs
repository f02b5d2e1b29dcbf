//! Reference implementations used only by tests. None of these call into the
//! code paths they check.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use tutoreval::ensemble::{LabelDistribution, PredictionMatrix};
use tutoreval::label::Label;
use tutoreval::lora::{LoraAdapter, Matrix};
use tutoreval::rng::XorShift64Star;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Macro-F1 and accuracy straight from the definitions, on class indices
/// `0..k`. Zero denominators give 0.
pub fn brute_force_scores(gold: &[usize], pred: &[usize], k: usize) -> (f64, f64) {
    let n = gold.len();
    let mut f1_sum = 0.0;
    for c in 0..k {
        let mut tp = 0usize;
        let mut predicted = 0usize;
        let mut actual = 0usize;
        for i in 0..n {
            if pred[i] == c {
                predicted += 1;
            }
            if gold[i] == c {
                actual += 1;
            }
            if pred[i] == c && gold[i] == c {
                tp += 1;
            }
        }
        let p = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let r = if actual == 0 { 0.0 } else { tp as f64 / actual as f64 };
        f1_sum += if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    }
    let correct = (0..n).filter(|&i| gold[i] == pred[i]).count();
    (f1_sum / k as f64, correct as f64 / n as f64)
}

/// Strict label → index in (Yes, TSE, No); lenient → (Positive, No).
pub fn strict_index(l: Label) -> usize {
    match l {
        Label::Yes => 0,
        Label::ToSomeExtent => 1,
        Label::No => 2,
    }
}

pub fn lenient_index(l: Label) -> usize {
    match l {
        Label::No => 1,
        _ => 0,
    }
}

/// L = gᵀ (W + α A B) x, with plain loops.
pub fn linear_loss(w: &[Vec<f64>], a: &[Vec<f64>], b: &[Vec<f64>], alpha: f64, x: &[f64], g: &[f64]) -> f64 {
    let m = w.len();
    let n = x.len();
    let r = b.len();
    let mut loss = 0.0;
    for i in 0..m {
        let mut yi = 0.0;
        for j in 0..n {
            let mut ab = 0.0;
            for k in 0..r {
                ab += a[i][k] * b[k][j];
            }
            yi += (w[i][j] + alpha * ab) * x[j];
        }
        loss += g[i] * yi;
    }
    loss
}

pub const FD_STEP: f64 = 1e-5;

/// Central finite-difference gradients of [`linear_loss`] w.r.t. A and B.
pub fn finite_difference_grads(
    w: &[Vec<f64>],
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    alpha: f64,
    x: &[f64],
    g: &[f64],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let h = FD_STEP;
    let mut ga = vec![vec![0.0; a[0].len()]; a.len()];
    for i in 0..a.len() {
        for k in 0..a[0].len() {
            let mut ap = a.to_vec();
            let mut am = a.to_vec();
            ap[i][k] += h;
            am[i][k] -= h;
            ga[i][k] = (linear_loss(w, &ap, b, alpha, x, g) - linear_loss(w, &am, b, alpha, x, g)) / (2.0 * h);
        }
    }
    let mut gb = vec![vec![0.0; b[0].len()]; b.len()];
    for k in 0..b.len() {
        for j in 0..b[0].len() {
            let mut bp = b.to_vec();
            let mut bm = b.to_vec();
            bp[k][j] += h;
            bm[k][j] -= h;
            gb[k][j] = (linear_loss(w, a, &bp, alpha, x, g) - linear_loss(w, a, &bm, alpha, x, g)) / (2.0 * h);
        }
    }
    (ga, gb)
}

/// Entry-wise relative error; entries where both sides are below `floor` are
/// compared absolutely against `floor * tol`.
pub fn max_relative_error(analytic: &[Vec<f64>], numeric: &[Vec<f64>]) -> f64 {
    const FLOOR: f64 = 1e-4;
    analytic
        .iter()
        .flatten()
        .zip(numeric.iter().flatten())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(FLOOR))
        .fold(0.0, f64::max)
}

/// Numerical rank from singular values.
pub fn svd_rank(m: &Matrix) -> usize {
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let sv = dm.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = smax * (m.rows().max(m.cols()) as f64) * f64::EPSILON * 16.0;
    sv.iter().filter(|s| **s > tol.max(1e-300)).count()
}

/// Dense product with nalgebra, for cross-checking ΔW.
pub fn nalgebra_delta(adapter: &LoraAdapter) -> DMatrix<f64> {
    let a = DMatrix::from_row_slice(adapter.a().rows(), adapter.a().cols(), adapter.a().as_slice());
    let b = DMatrix::from_row_slice(adapter.b().rows(), adapter.b().cols(), adapter.b().as_slice());
    (a * b) * adapter.alpha()
}

pub fn random_rows(rng: &mut XorShift64Star, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.next_f64() * 2.0 - 1.0).collect()).collect()
}

pub fn random_label(rng: &mut XorShift64Star) -> Label {
    Label::ALL[(rng.next_u64() % 3) as usize]
}

/// Random matrix whose votes are drawn with a per-instance bias so that
/// unanimous, split and TSE-free rows all occur.
pub fn random_prediction_matrix(rng: &mut XorShift64Star, n: usize, m: usize) -> PredictionMatrix {
    let ids: Vec<String> = (0..n).map(|i| format!("inst-{:03}", (i * 37) % 1000)).collect();
    let votes = (0..n)
        .map(|_| {
            let anchor = random_label(rng);
            let noise = rng.next_f64() * 0.8;
            (0..m)
                .map(|_| if rng.next_f64() < noise { random_label(rng) } else { anchor })
                .collect()
        })
        .collect();
    PredictionMatrix::new(ids, votes).unwrap()
}

pub fn under_tse_profile() -> (LabelDistribution, Vec<(Label, LabelDistribution)>) {
    use Label::{No as N, ToSomeExtent as T, Yes as Y};
    (
        LabelDistribution::new([(Y, 0.55), (T, 0.18), (N, 0.27)]).unwrap(),
        vec![
            (Y, LabelDistribution::new([(Y, 0.80), (T, 0.08), (N, 0.12)]).unwrap()),
            (T, LabelDistribution::new([(Y, 0.50), (T, 0.35), (N, 0.15)]).unwrap()),
            (N, LabelDistribution::new([(Y, 0.12), (T, 0.06), (N, 0.82)]).unwrap()),
        ],
    )
}

/// A raw corpus document with the development-set shape: 60 Bridge dialogues
/// of 4 turns and 132 MathDial dialogues alternating 5 and 6 turns, with
/// 1,596 tutor responses in total (60 dialogues carry 9, the rest 8).
pub fn mrbench_shaped_corpus() -> String {
    let mut convs = Vec::new();
    for i in 0..192 {
        let (source, turns) = if i < 60 { ("Bridge", 4) } else { ("MathDial", 5 + (i % 2)) };
        let history: Vec<String> = (0..turns)
            .map(|t| {
                let speaker = if t % 2 == 0 { "tutor" } else { "student" };
                format!(r#"{{"speaker":"{speaker}","text":"turn {t} of dialogue {i}"}}"#)
            })
            .collect();
        let n_resp = if i < 60 { 9 } else { 8 };
        let responses: Vec<String> = (0..n_resp)
            .map(|r| {
                format!(
                    r#""tutor{r}":{{"text":"response {r}","annotations":{{"Mistake_Identification":"Yes","Mistake_Location":"No","Providing_Guidance":"To some extent","Actionability":"No"}}}}"#
                )
            })
            .collect();
        convs.push(format!(
            r#"{{"conversation_id":"{source}-{i:03}","source":"{source}","history":[{}],"tutor_responses":{{{}}}}}"#,
            history.join(","),
            responses.join(",")
        ));
    }
    format!("[{}]", convs.join(",\n"))
}
