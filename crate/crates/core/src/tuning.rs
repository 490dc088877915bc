//! Choice of the step size `α`, the iteration count `k` and the prior radius `ρ`.
//!
//! * `α = α*/divisor` with `α* = 2/(λ_max(Σ_T) + λ_min(Σ_T))`.
//! * `k` maximizes the training average `Ū_k` of the log-variance term of the
//!   gain (plug-in variances); the first interior local maximum wins, with an
//!   elbow fallback when the curve has none.
//! * `ρ` is calibrated on the joint training data by comparing test rejections
//!   with the empirical per-sample winner of the two models.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::finetune::{fine_tune, make_transfer_operator, EigenDecomposition, TransferOperator};
use crate::gain::{variance_matrix, TaskTruth};
use crate::linalg::quad_form;
use crate::model::{fit_ols, Dataset, FittedModel};
use crate::transfer_test::{RhoPrior, StatisticParts};

pub const DEFAULT_ALPHA_DIVISOR: f64 = 10.0;

/// Minimum recall for a `ρ` grid point to count as having "good recall".
pub const MIN_RECALL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    LocalMax,
    Elbow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoPoint {
    pub rho: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UCurve {
    pub points: Vec<(u64, f64)>,
    /// Rows equal to zero, for which `U_k` is undefined.
    pub skipped_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoCalibration {
    pub rho_hat: f64,
    pub curve: Vec<RhoPoint>,
    pub positives: usize,
    /// Set when no training sample favours the fine-tuned model.
    pub no_positive_labels: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub alpha_star: f64,
    pub alpha: f64,
    pub k_hat: u64,
    pub rho_hat: f64,
    pub u_curve: Vec<(u64, f64)>,
    pub rho_curve: Vec<RhoPoint>,
    pub k_rule: KRule,
    pub no_positive_labels: bool,
}

/// `α* = 2/(λ_max + λ_min)` of the target Gram matrix.
pub fn alpha_star(gram_t: &DMatrix<f64>) -> Result<f64> {
    let eig = EigenDecomposition::new_spd(gram_t)?;
    Ok(2.0 / (eig.lambda_max() + eig.lambda_min()))
}

pub fn pick_alpha(gram_t: &DMatrix<f64>, divisor: f64) -> Result<f64> {
    if !(divisor > 0.0) {
        return Err(Error::Domain(format!("alpha divisor must be positive, got {divisor}")));
    }
    Ok(alpha_star(gram_t)? / divisor)
}

/// `0, 1, …, 10` followed by a geometric progression from 12 to 10 000.
pub fn default_k_grid() -> Vec<u64> {
    let mut grid: Vec<u64> = (0..=10).collect();
    let (lo, hi, n) = (12.0_f64, 10_000.0_f64, 49);
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    for i in 0..n {
        let k = (lo * ratio.powi(i as i32)).round() as u64;
        if k > *grid.last().unwrap() {
            grid.push(k);
        }
    }
    grid
}

/// 41 log-spaced values from 1e-5 to 1.
pub fn default_rho_grid() -> Vec<f64> {
    (0..=40).map(|i| 10f64.powf(-5.0 + i as f64 / 8.0)).collect()
}

/// `Ū_k` over `k_grid`, with variances replaced by their estimates.
pub fn u_bar_curve(
    source: &FittedModel,
    target: &FittedModel,
    joint_inputs: &DMatrix<f64>,
    alpha: f64,
    k_grid: &[u64],
) -> Result<UCurve> {
    if k_grid.is_empty() || k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("k grid must be non-empty and strictly increasing".into()));
    }
    let d = target.d;
    check_dim(d, joint_inputs.ncols())?;
    let base = make_transfer_operator(target.gram.matrix(), alpha, 0)?;
    let truth = TaskTruth::plug_in(source, target)?;

    let rows: Vec<DVector<f64>> = joint_inputs
        .row_iter()
        .map(|r| r.transpose())
        .filter(|x| x.iter().any(|v| *v != 0.0))
        .collect();
    let skipped_rows = joint_inputs.nrows() - rows.len();
    if rows.is_empty() {
        return Err(Error::ZeroVector);
    }
    let target_scale: Vec<f64> = rows
        .iter()
        .map(|x| truth.sigma2_t * quad_form(x, target.gram.inverse()))
        .collect();

    let points = k_grid
        .par_iter()
        .map(|&k| {
            let op = base.with_k(k);
            let v = variance_matrix(&truth, &source.gram, &op)?;
            let total: f64 = rows
                .iter()
                .zip(&target_scale)
                .map(|(x, &s)| -s * (quad_form(x, &v) / s).ln())
                .sum();
            Ok((k, total / rows.len() as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UCurve { points, skipped_rows })
}

/// Pick `k̂` from a `Ū_k` curve.
pub fn select_k(curve: &[(u64, f64)]) -> Result<(u64, KRule)> {
    if curve.len() < 3 {
        return Err(Error::CurveTooShort(curve.len()));
    }
    for w in curve.windows(3) {
        if w[1].1 > w[0].1 && w[1].1 > w[2].1 {
            return Ok((w[1].0, KRule::LocalMax));
        }
    }
    Ok((elbow(curve), KRule::Elbow))
}

/// Point of maximum distance to the chord joining the endpoints, both axes
/// rescaled to `[0, 1]`.
fn elbow(curve: &[(u64, f64)]) -> u64 {
    let scale = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    let (k0, k1) = (curve[0].0 as f64, curve[curve.len() - 1].0 as f64);
    let ymin = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .map(|&(k, u)| (scale(k as f64, k0, k1), scale(u, ymin, ymax)))
        .collect();
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = (dx * dx + dy * dy).sqrt();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, p) in pts.iter().enumerate() {
        let dist = if len > 0.0 {
            (dy * (p.0 - a.0) - dx * (p.1 - a.1)).abs() / len
        } else {
            0.0
        };
        if dist > best.1 {
            best = (i, dist);
        }
    }
    curve[best.0].0
}

/// Label each joint training sample by whether the fine-tuned prediction beats
/// the target-only one, then score the test's rejections against the labels
/// for every `ρ` in the grid.
pub fn calibrate_rho(
    source_data: &Dataset,
    target_data: &Dataset,
    source: &FittedModel,
    target: &FittedModel,
    op: &TransferOperator,
    rho_grid: &[f64],
    level: f64,
) -> Result<RhoCalibration> {
    if rho_grid.is_empty() || rho_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("rho grid must be non-empty and strictly increasing".into()));
    }
    let priors = rho_grid
        .iter()
        .map(|&r| RhoPrior::new(r))
        .collect::<Result<Vec<_>>>()?;
    let beta_k = fine_tune(&source.beta_hat, &target.beta_hat, op)?;

    let mut labels = Vec::new();
    let mut parts = Vec::new();
    for data in [source_data, target_data] {
        check_dim(op.dim(), data.d())?;
        for (row, &y) in data.x.row_iter().zip(data.y.iter()) {
            let x = row.transpose();
            let err_t = (y - x.dot(&target.beta_hat)).powi(2);
            let err_k = (y - x.dot(&beta_k)).powi(2);
            labels.push(err_t > err_k);
            parts.push(match StatisticParts::new(&x, source, target, op) {
                Ok(p) => Some(p),
                Err(Error::DegenerateDirection) => None,
                Err(e) => return Err(e),
            });
        }
    }
    let positives = labels.iter().filter(|&&l| l).count();

    let curve = priors
        .par_iter()
        .map(|&prior| {
            let (mut tp, mut fp) = (0usize, 0usize);
            for (p, &label) in parts.iter().zip(&labels) {
                let reject = match p {
                    Some(p) => p.result(prior, level)?.reject_null,
                    None => false,
                };
                match (reject, label) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    _ => {}
                }
            }
            let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
            let recall = if positives > 0 { tp as f64 / positives as f64 } else { 0.0 };
            Ok(RhoPoint {
                rho: prior.value(),
                precision,
                recall,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if positives == 0 {
        return Ok(RhoCalibration {
            rho_hat: *rho_grid.last().unwrap(),
            curve,
            positives,
            no_positive_labels: true,
        });
    }
    Ok(RhoCalibration {
        rho_hat: select_rho(&curve),
        curve,
        positives,
        no_positive_labels: false,
    })
}

/// Highest precision among points with recall ≥ [`MIN_RECALL`], ties to the
/// larger `ρ`; otherwise the point just before the largest recall drop.
pub fn select_rho(curve: &[RhoPoint]) -> f64 {
    let mut best: Option<&RhoPoint> = None;
    for p in curve.iter().filter(|p| p.recall >= MIN_RECALL) {
        if best.is_none_or(|b| p.precision >= b.precision) {
            best = Some(p);
        }
    }
    if let Some(b) = best {
        return b.rho;
    }
    let mut drop = (0usize, f64::NEG_INFINITY);
    for (i, w) in curve.windows(2).enumerate() {
        let d = w[0].recall - w[1].recall;
        if d > drop.1 {
            drop = (i, d);
        }
    }
    curve[drop.0].rho
}

/// Full tuning pass: fits both tasks, then chooses `α`, `k̂` and `ρ̂`.
pub fn tune(
    source_data: &Dataset,
    target_data: &Dataset,
    alpha_divisor: f64,
    k_grid: &[u64],
    rho_grid: &[f64],
    level: f64,
) -> Result<TuningReport> {
    let source = fit_ols(source_data)?;
    let target = fit_ols(target_data)?;
    tune_fitted(source_data, target_data, &source, &target, alpha_divisor, k_grid, rho_grid, level)
}

#[allow(clippy::too_many_arguments)]
pub fn tune_fitted(
    source_data: &Dataset,
    target_data: &Dataset,
    source: &FittedModel,
    target: &FittedModel,
    alpha_divisor: f64,
    k_grid: &[u64],
    rho_grid: &[f64],
    level: f64,
) -> Result<TuningReport> {
    let a_star = alpha_star(target.gram.matrix())?;
    let alpha = pick_alpha(target.gram.matrix(), alpha_divisor)?;
    let joint = stack_rows(&source_data.x, &target_data.x)?;
    let u = u_bar_curve(source, target, &joint, alpha, k_grid)?;
    let (k_hat, k_rule) = select_k(&u.points)?;
    let op = make_transfer_operator(target.gram.matrix(), alpha, k_hat)?;
    let rho = calibrate_rho(source_data, target_data, source, target, &op, rho_grid, level)?;
    Ok(TuningReport {
        alpha_star: a_star,
        alpha,
        k_hat,
        rho_hat: rho.rho_hat,
        u_curve: u.points,
        rho_curve: rho.curve,
        k_rule,
        no_positive_labels: rho.no_positive_labels,
    })
}

pub fn stack_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dim(a.ncols(), b.ncols())?;
    let (na, nb) = (a.nrows(), b.nrows());
    Ok(DMatrix::from_fn(na + nb, a.ncols(), |i, j| {
        if i < na {
            a[(i, j)]
        } else {
            b[(i - na, j)]
        }
    }))
}
