//! Compensated summation and deterministic parallel reductions.

use rayon::prelude::*;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut k = Self::new();
        for v in iter {
            k.add(v);
        }
        k.value()
    }
}

/// Evaluates `f` on every item in parallel, keeping input order.
pub fn ordered_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Like [`ordered_map`] but short-circuits on the first error in index order.
pub fn ordered_try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    let out: Vec<Result<R, E>> = items.par_iter().map(f).collect();
    out.into_iter().collect()
}

/// Weighted sum in index order with compensation.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    let mut k = KahanSum::new();
    for (w, v) in weights.iter().zip(values) {
        k.add(w * v);
    }
    k.value()
}
