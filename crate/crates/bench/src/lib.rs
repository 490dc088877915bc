//! Shared instances for the benchmarks.

use lintransfer::{fit_ols, make_transfer_operator, Dataset, FittedModel, TaskTag, TaskTruth, TransferOperator};
use nalgebra::{DMatrix, DVector};

pub struct Instance {
    pub source: FittedModel,
    pub target: FittedModel,
    pub truth: TaskTruth,
    pub op: TransferOperator,
    pub x: DVector<f64>,
}

// deterministic pseudo-random entries, so the benches need no RNG
fn entry(i: usize, j: usize, salt: f64) -> f64 {
    ((i as f64 * 12.9898 + j as f64 * 78.233 + salt).sin() * 43758.5453).fract() * 2.0 - 1.0
}

fn dataset(n: usize, d: usize, salt: f64, tag: TaskTag) -> Dataset {
    let x = DMatrix::from_fn(n, d, |i, j| entry(i, j, salt));
    let y = DVector::from_fn(n, |i, _| x.row(i).sum() + 0.1 * entry(i, d, salt + 1.0));
    Dataset::new(x, y, tag).expect("valid dataset")
}

/// Source with `4n` rows, target with `n` rows, dimension `d`, `k` steps.
pub fn instance(d: usize, n: usize, k: u64) -> Instance {
    let source = fit_ols(&dataset(4 * n, d, 0.5, TaskTag::Source)).expect("full rank");
    let target = fit_ols(&dataset(n, d, 1.5, TaskTag::Target)).expect("full rank");
    let alpha = lintransfer::pick_alpha(target.gram.matrix(), 10.0).expect("alpha");
    let op = make_transfer_operator(target.gram.matrix(), alpha, k).expect("operator");
    let beta_t = DVector::from_element(d, 1.0);
    let beta_s = DVector::from_fn(d, |j, _| 1.0 + 0.2 * entry(j, 0, 2.5));
    let truth = TaskTruth::new(beta_s, beta_t, 1.0, 1.0).expect("truth");
    let x = DVector::from_fn(d, |j, _| entry(j, 1, 3.5));
    Instance { source, target, truth, op, x }
}
