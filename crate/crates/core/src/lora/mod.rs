//! Low-rank adapter numerics: `ΔW = α·A·B`, its gradients, the warmup
//! learning-rate schedule, and global-norm gradient clipping.
//!
//! `A` is `m×r` and `B` is `r×n`, so the adapter attaches to an `m×n` frozen
//! weight. The usual case is square (`m = n = d`). `α` is applied as-is, not
//! divided by `r`.

mod config;
mod matrix;

pub use config::TrainConfig;
pub use matrix::Matrix;

use crate::error::{Error, Result};
use crate::rng::XorShift64Star;

/// Standard deviation of the Gaussian used for `A` at initialization.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter {
    a: Matrix,
    b: Matrix,
    alpha: f64,
}

impl LoraAdapter {
    pub fn new(a: Matrix, b: Matrix, alpha: f64) -> Result<Self> {
        if a.cols() != b.rows() {
            return Err(Error::Dimension(format!(
                "A is {}x{} but B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if a.cols() > a.rows().min(b.cols()) {
            return Err(Error::Dimension(format!(
                "rank {} exceeds the {}x{} weight",
                a.cols(),
                a.rows(),
                b.cols()
            )));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Validation(format!("alpha must be positive, got {alpha}")));
        }
        Ok(LoraAdapter { a, b, alpha })
    }

    /// `A ~ N(0, 0.02²)`, `B = 0`, so the adapter starts as a no-op.
    pub fn init(out_dim: usize, in_dim: usize, rank: usize, alpha: f64, seed: u64) -> Result<Self> {
        if rank == 0 || out_dim == 0 || in_dim == 0 {
            return Err(Error::Dimension("adapter dimensions must be positive".into()));
        }
        let mut rng = XorShift64Star::new(seed);
        let a = Matrix::from_fn(out_dim, rank, |_, _| INIT_STD * rng.next_gaussian());
        LoraAdapter::new(a, Matrix::zeros(rank, in_dim), alpha)
    }

    pub fn init_square(dim: usize, rank: usize, alpha: f64, seed: u64) -> Result<Self> {
        LoraAdapter::init(dim, dim, rank, alpha, seed)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rank(&self) -> usize {
        self.a.cols()
    }

    /// Output dimension; equals the input dimension for square adapters.
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// Shape of the weight the adapter attaches to.
    pub fn weight_shape(&self) -> (usize, usize) {
        (self.a.rows(), self.b.cols())
    }

    fn check_base(&self, base: &Matrix) -> Result<()> {
        if base.shape() != self.weight_shape() {
            let (m, n) = self.weight_shape();
            return Err(Error::Dimension(format!(
                "base is {}x{}, adapter expects {m}x{n}",
                base.rows(),
                base.cols()
            )));
        }
        Ok(())
    }
}

pub fn delta_w(adapter: &LoraAdapter) -> Matrix {
    adapter
        .a
        .matmul(&adapter.b)
        .expect("adapter shapes are checked at construction")
        .scale(adapter.alpha)
}

pub fn effective_weight(base: &Matrix, adapter: &LoraAdapter) -> Result<Matrix> {
    adapter.check_base(base)?;
    base.add(&delta_w(adapter))
}

/// `y = (W + α·A·B)·x`.
pub fn forward(base: &Matrix, adapter: &LoraAdapter, x: &[f64]) -> Result<Vec<f64>> {
    effective_weight(base, adapter)?.matvec(x)
}

/// Gradients of `L` with respect to `A` and `B` given `∂L/∂y` for
/// `y = (W + α·A·B)·x`. The frozen `W` only fixes shapes.
///
/// `∂L/∂A = α·g·(Bx)ᵀ` and `∂L/∂B = α·(Aᵀg)·xᵀ`.
pub fn adapter_gradients(
    base: &Matrix,
    adapter: &LoraAdapter,
    input: &[f64],
    loss_grad: &[f64],
) -> Result<(Matrix, Matrix)> {
    adapter.check_base(base)?;
    if loss_grad.len() != base.rows() {
        return Err(Error::Dimension(format!(
            "loss gradient has length {}, expected {}",
            loss_grad.len(),
            base.rows()
        )));
    }
    let bx = adapter.b.matvec(input)?;
    let at_g = adapter.a.transpose().matvec(loss_grad)?;
    let grad_a = Matrix::outer(loss_grad, &bx).scale(adapter.alpha);
    let grad_b = Matrix::outer(&at_g, input).scale(adapter.alpha);
    Ok((grad_a, grad_b))
}

/// Linear warmup over the first `ceil(warmup_fraction·max_steps)` steps, then
/// constant.
pub fn warmup_lr(step: u64, config: &TrainConfig) -> Result<f64> {
    if step > config.max_steps {
        return Err(Error::Range(format!(
            "step {step} is past max_steps {}",
            config.max_steps
        )));
    }
    let w = config.warmup_steps();
    if step < w {
        Ok(config.learning_rate * (step as f64 / w as f64))
    } else {
        Ok(config.learning_rate)
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescales `g` onto the `clip_norm` ball when its L2 norm exceeds it.
pub fn clip_gradient(g: &[f64], clip_norm: f64) -> Result<Vec<f64>> {
    if !(clip_norm.is_finite() && clip_norm > 0.0) {
        return Err(Error::Validation(format!("clip norm must be positive, got {clip_norm}")));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("gradient has non-finite entries".into()));
    }
    let norm = l2_norm(g);
    if norm <= clip_norm {
        return Ok(g.to_vec());
    }
    let s = clip_norm / norm;
    Ok(g.iter().map(|x| x * s).collect())
}
