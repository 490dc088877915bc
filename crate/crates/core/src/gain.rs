//! Exact transfer gain of the fine-tuned estimator.
//!
//! For a new input `x`, the gain is the difference of quadratic prediction
//! risks between the target-only model and the fine-tuned model. It is the
//! quadratic form `xᵀ H_k x` with
//!
//! ```text
//! H_k = σ_T² (Σ_T⁻¹ − α² Ω_k Σ_T Ω_k) − σ_S² Aᵏ Σ_S⁻¹ Aᵏ − Aᵏ B Aᵏ
//! Ω_k = Σ_T⁻¹ (I − Aᵏ) / α,    B = (β_T − β_S)(β_T − β_S)ᵀ
//! ```
//!
//! Positive gain means transfer helps at `x`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::finetune::{EigenDecomposition, TransferOperator};
use crate::linalg::{quad_form, symmetrize};
use crate::model::{FittedModel, Gram};

/// True (or plugged-in) regression parameters and noise levels of both tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTruth {
    pub beta_s: Vec<f64>,
    pub beta_t: Vec<f64>,
    pub sigma2_s: f64,
    pub sigma2_t: f64,
}

impl TaskTruth {
    pub fn new(beta_s: DVector<f64>, beta_t: DVector<f64>, sigma2_s: f64, sigma2_t: f64) -> Result<Self> {
        check_dim(beta_t.len(), beta_s.len())?;
        if !(sigma2_s > 0.0 && sigma2_t > 0.0) {
            return Err(Error::Domain(format!(
                "noise variances must be positive, got {sigma2_s} and {sigma2_t}"
            )));
        }
        Ok(Self {
            beta_s: beta_s.iter().copied().collect(),
            beta_t: beta_t.iter().copied().collect(),
            sigma2_s,
            sigma2_t,
        })
    }

    /// Plug-in truth built from the two fits. Diagnostic only: the plug-in
    /// gain is a poor estimate of the true one.
    pub fn plug_in(source: &FittedModel, target: &FittedModel) -> Result<Self> {
        let floor = |s: f64| s.max(f64::MIN_POSITIVE);
        Self::new(
            source.beta_hat.clone(),
            target.beta_hat.clone(),
            floor(source.sigma2_hat),
            floor(target.sigma2_hat),
        )
    }

    pub fn dim(&self) -> usize {
        self.beta_t.len()
    }

    /// `β_T − β_S`.
    pub fn shift(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.beta_t.iter().zip(&self.beta_s).map(|(t, s)| t - s),
        )
    }

    /// `B = (β_T − β_S)(β_T − β_S)ᵀ`.
    pub fn bias_matrix(&self) -> DMatrix<f64> {
        let delta = self.shift();
        &delta * delta.transpose()
    }
}

/// `H_k` together with its extreme eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    pub h: DMatrix<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub k: u64,
    pub alpha: f64,
    pub eigen: EigenDecomposition,
}

/// Components of the gain split along the KL-divergence identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlTerms {
    /// `−2 σ_T² xᵀΣ_T⁻¹x · D_KL(N_k ‖ N_T)`, never positive.
    pub kl_term: f64,
    /// `U_k(x) = −σ_T² xᵀΣ_T⁻¹x · ln(xᵀV_k x / (σ_T² xᵀΣ_T⁻¹x))`.
    pub u_term: f64,
    pub kl_divergence: f64,
}

fn check_shapes(truth: &TaskTruth, source: &Gram, op: &TransferOperator) -> Result<usize> {
    let d = op.dim();
    check_dim(d, truth.dim())?;
    check_dim(d, source.dim())?;
    Ok(d)
}

/// `Ω_k = Σ_T⁻¹ (I − Aᵏ) / α`.
pub fn omega_matrix(op: &TransferOperator, gram_t_inv: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = op.dim();
    check_dim(d, gram_t_inv.nrows())?;
    check_dim(d, gram_t_inv.ncols())?;
    if !(op.alpha > 0.0) {
        return Err(Error::Domain("step size must be positive".into()));
    }
    Ok(gram_t_inv * (DMatrix::identity(d, d) - &op.a_pow_k) / op.alpha)
}

/// `σ_S² Aᵏ Σ_S⁻¹ Aᵏ`.
fn source_variance(truth: &TaskTruth, source: &Gram, op: &TransferOperator) -> DMatrix<f64> {
    symmetrize(&(&op.a_pow_k * source.inverse() * &op.a_pow_k)) * truth.sigma2_s
}

/// Build `H_k` and its spectrum.
pub fn gain_matrix(truth: &TaskTruth, source: &Gram, op: &TransferOperator) -> Result<GainReport> {
    check_shapes(truth, source, op)?;
    let bias = symmetrize(&(&op.a_pow_k * truth.bias_matrix() * &op.a_pow_k));
    let h = op.target_precision_gain() * truth.sigma2_t - source_variance(truth, source, op) - bias;
    let h = symmetrize(&h);
    let eigen = EigenDecomposition::new(&h);
    Ok(GainReport {
        lambda_min: eigen.lambda_min(),
        lambda_max: eigen.lambda_max(),
        h,
        k: op.k,
        alpha: op.alpha,
        eigen,
    })
}

/// `xᵀ H_k x`.
pub fn gain_at(x: &DVector<f64>, report: &GainReport) -> Result<f64> {
    check_dim(report.h.nrows(), x.len())?;
    Ok(quad_form(x, &report.h))
}

/// `(λ_min(H_k)‖x‖², λ_max(H_k)‖x‖²)`.
pub fn gain_bounds(x: &DVector<f64>, report: &GainReport) -> Result<(f64, f64)> {
    check_dim(report.h.nrows(), x.len())?;
    let n2 = x.norm_squared();
    Ok((report.lambda_min * n2, report.lambda_max * n2))
}

/// Covariance of the fine-tuned estimator,
/// `V_k = σ_S² Aᵏ Σ_S⁻¹ Aᵏ + σ_T² α² Ω_k Σ_T Ω_k`.
pub fn variance_matrix(truth: &TaskTruth, source: &Gram, op: &TransferOperator) -> Result<DMatrix<f64>> {
    check_shapes(truth, source, op)?;
    Ok(symmetrize(
        &(source_variance(truth, source, op) + op.target_variance_factor() * truth.sigma2_t),
    ))
}

/// Split the gain into the (non-positive) KL term and the log-variance term.
pub fn kl_decomposition(
    x: &DVector<f64>,
    truth: &TaskTruth,
    source: &Gram,
    op: &TransferOperator,
) -> Result<KlTerms> {
    let d = check_shapes(truth, source, op)?;
    check_dim(d, x.len())?;
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let target_inv = op.eigen.apply_spectral(|l| 1.0 / l);
    let s = truth.sigma2_t * quad_form(x, &target_inv);
    // s − v from the spectral form, so that v/s ≈ 1 keeps its digits
    let gap = truth.sigma2_t * quad_form(x, &op.target_precision_gain())
        - quad_form(x, &source_variance(truth, source, op));
    let bias = x.dot(&(&op.a_pow_k * truth.shift())).powi(2);
    let delta = -gap / s;
    let ln_ratio = delta.ln_1p();
    let excess = delta - ln_ratio;
    Ok(KlTerms {
        kl_term: -s * excess - bias,
        u_term: -s * ln_ratio,
        kl_divergence: 0.5 * (excess + bias / s),
    })
}
