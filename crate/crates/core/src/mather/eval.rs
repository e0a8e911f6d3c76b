//! Shared evaluator interface for `α`, `β` and their transforms.

use std::sync::Arc;

/// A real function on `R^k`, immutable and shareable across threads.
pub trait Evaluator: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
}

/// Wraps a closure.
pub struct FnEvaluator {
    dim: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl FnEvaluator {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        FnEvaluator {
            dim,
            f: Arc::new(f),
        }
    }
}

impl Clone for FnEvaluator {
    fn clone(&self) -> Self {
        FnEvaluator {
            dim: self.dim,
            f: self.f.clone(),
        }
    }
}

impl std::fmt::Debug for FnEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FnEvaluator(dim = {})", self.dim)
    }
}

impl Evaluator for FnEvaluator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl<T: Evaluator + ?Sized> Evaluator for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
}

impl<T: Evaluator + ?Sized> Evaluator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
}

/// `½|x|²`, the `α` and `β` of the free particle.
pub fn half_square(dim: usize) -> FnEvaluator {
    FnEvaluator::new(dim, |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>())
}
