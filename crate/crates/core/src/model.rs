//! Task datasets and ordinary least squares fits.
//!
//! The design matrix is used as given: no intercept column is added, so a
//! constant feature must be present in `x` when one is wanted.

use nalgebra::{Cholesky, ColPivQR, DMatrix, DVector, QR};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, symmetrize};

/// Relative threshold on the pivoted-QR diagonal below which the design is
/// treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskTag {
    Source,
    Target,
}

/// Design matrix and responses for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub tag: TaskTag,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, tag: TaskTag) -> Result<Self> {
        check_dim(x.nrows(), y.len())?;
        Ok(Self { x, y, tag })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }
}

/// A symmetric positive-definite Gram matrix together with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Gram {
    /// Inverts through a Cholesky factorization; fails if `matrix` is not SPD.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::NonSpdGram);
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::NonSpdGram);
        }
        let matrix = symmetrize(&matrix);
        let chol = Cholesky::new(matrix.clone()).ok_or(Error::NonSpdGram)?;
        let inverse = symmetrize(&chol.inverse());
        if !inverse.iter().all(|v| v.is_finite()) {
            return Err(Error::NonSpdGram);
        }
        Ok(Self { matrix, inverse })
    }

    /// `XᵀX` of a design matrix.
    pub fn from_design(x: &DMatrix<f64>) -> Result<Self> {
        Self::new(x.tr_mul(x))
    }

    /// Rebuild from a persisted pair without refactorizing.
    pub fn from_parts(matrix: DMatrix<f64>, inverse: DMatrix<f64>) -> Result<Self> {
        if matrix.shape() != inverse.shape() || !matrix.is_square() {
            return Err(Error::NonSpdGram);
        }
        Ok(Self { matrix, inverse })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// OLS estimate with the quantities reused by the transfer machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub beta_hat: DVector<f64>,
    pub gram: Gram,
    pub sigma2_hat: f64,
    pub n: usize,
    pub d: usize,
}

impl FittedModel {
    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.beta_hat)
    }
}

/// Least-squares fit `β̂ = (XᵀX)⁻¹ Xᵀ y`.
///
/// The coefficients come from a Householder QR solve; rank is checked first
/// with column-pivoted QR.
pub fn fit_ols(data: &Dataset) -> Result<FittedModel> {
    let (n, d) = (data.n(), data.d());
    if n <= d || d == 0 {
        return Err(Error::TooFewSamples { n, d });
    }

    let pivoted = ColPivQR::new(data.x.clone());
    let r = pivoted.r();
    let diag: Vec<f64> = (0..d).map(|i| r[(i, i)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if !(ratio > RANK_TOLERANCE) {
        return Err(Error::RankDeficient {
            ratio,
            threshold: RANK_TOLERANCE,
        });
    }

    let qr = QR::new(data.x.clone());
    let mut qty = data.y.clone();
    qr.q_tr_mul(&mut qty);
    let r = qr.r();
    let beta_hat = r
        .solve_upper_triangular(&qty.rows(0, d).into_owned())
        .ok_or(Error::RankDeficient {
            ratio,
            threshold: RANK_TOLERANCE,
        })?;

    let gram = Gram::from_design(&data.x)?;
    let sigma2_hat = estimate_noise_variance(data, &beta_hat)?;
    Ok(FittedModel {
        beta_hat,
        gram,
        sigma2_hat,
        n,
        d,
    })
}

/// Unbiased noise variance `‖y − Xβ̂‖² / (N − D)`.
pub fn estimate_noise_variance(data: &Dataset, beta_hat: &DVector<f64>) -> Result<f64> {
    let (n, d) = (data.n(), data.d());
    check_dim(d, beta_hat.len())?;
    if n <= d {
        return Err(Error::TooFewSamples { n, d });
    }
    let resid = &data.y - &data.x * beta_hat;
    Ok(resid.norm_squared() / (n - d) as f64)
}

/// Serializable form of a [`FittedModel`], row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelRecord {
    pub beta_hat: Vec<f64>,
    pub gram: Vec<Vec<f64>>,
    pub gram_inv: Vec<Vec<f64>>,
    pub sigma2_hat: f64,
    pub n: usize,
    pub d: usize,
}

impl From<&FittedModel> for ModelRecord {
    fn from(m: &FittedModel) -> Self {
        Self {
            beta_hat: m.beta_hat.iter().copied().collect(),
            gram: linalg::to_rows(m.gram.matrix()),
            gram_inv: linalg::to_rows(m.gram.inverse()),
            sigma2_hat: m.sigma2_hat,
            n: m.n,
            d: m.d,
        }
    }
}

impl TryFrom<ModelRecord> for FittedModel {
    type Error = Error;

    fn try_from(r: ModelRecord) -> Result<Self> {
        let bad = |what: &str| Error::SchemaMismatch(format!("model record: {what}"));
        let gram = linalg::from_rows(&r.gram).ok_or_else(|| bad("ragged gram"))?;
        let gram_inv = linalg::from_rows(&r.gram_inv).ok_or_else(|| bad("ragged gram_inv"))?;
        if r.beta_hat.len() != r.d || gram.nrows() != r.d || gram.ncols() != r.d {
            return Err(bad("dimension fields disagree"));
        }
        if r.n <= r.d {
            return Err(Error::TooFewSamples { n: r.n, d: r.d });
        }
        if !(r.sigma2_hat >= 0.0) {
            return Err(bad("negative sigma2_hat"));
        }
        Ok(FittedModel {
            beta_hat: DVector::from_vec(r.beta_hat),
            gram: Gram::from_parts(gram, gram_inv)?,
            sigma2_hat: r.sigma2_hat,
            n: r.n,
            d: r.d,
        })
    }
}
