//! Synthetic cubic-polynomial source/target pair.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::TaskTruth;
use crate::model::{Dataset, TaskTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialTaskConfig {
    pub beta_t: Vec<f64>,
    pub coef_noise_sd: f64,
    pub n_t: usize,
    pub n_s: usize,
    pub range_t: (f64, f64),
    pub range_s: (f64, f64),
    pub sigma2: f64,
    pub seed: u64,
}

impl Default for PolynomialTaskConfig {
    fn default() -> Self {
        Self {
            beta_t: vec![-1.0, -1.8, 1.2, 1.0],
            coef_noise_sd: 0.3,
            n_t: 60,
            n_s: 600,
            range_t: (-3.0, 1.0),
            range_s: (0.0, 3.0),
            sigma2: 1.0,
            seed: 0,
        }
    }
}

impl PolynomialTaskConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.beta_t.len() != 4 {
            return bad("beta_t must have 4 coefficients");
        }
        for (lo, hi) in [self.range_t, self.range_s] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad("sample ranges must be finite with lo < hi");
            }
        }
        if self.n_t == 0 || self.n_s == 0 {
            return bad("sample sizes must be positive");
        }
        if !(self.coef_noise_sd >= 0.0) || !(self.sigma2 > 0.0) {
            return bad("coefficient noise must be nonnegative and sigma2 positive");
        }
        Ok(())
    }
}

/// `(1, u, u², u³)`.
pub fn poly_features(u: f64) -> DVector<f64> {
    DVector::from_vec(vec![1.0, u, u * u, u * u * u])
}

pub fn poly_design(us: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(us.len(), 4, |i, j| us[i].powi(j as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTask {
    pub source: Dataset,
    pub target: Dataset,
    pub truth: TaskTruth,
    pub u_source: Vec<f64>,
    pub u_target: Vec<f64>,
}

fn sample_task(
    beta: &DVector<f64>,
    range: (f64, f64),
    n: usize,
    sigma: f64,
    tag: TaskTag,
    rng: &mut ChaCha8Rng,
) -> Result<(Dataset, Vec<f64>)> {
    let unif = Uniform::new(range.0, range.1).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let us: Vec<f64> = (0..n).map(|_| unif.sample(rng)).collect();
    let x = poly_design(&us);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let y = &x * beta + DVector::from_fn(n, |_, _| noise.sample(rng));
    Ok((Dataset::new(x, y, tag)?, us))
}

/// Draws `β_S = β_T + N(0, sd²)` per coordinate, then the target sample and
/// the source sample, all from one ChaCha8 stream seeded by `cfg.seed`.
pub fn gen_polynomial_task(cfg: &PolynomialTaskConfig) -> Result<PolynomialTask> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let beta_t = DVector::from_vec(cfg.beta_t.clone());
    let beta_s = if cfg.coef_noise_sd > 0.0 {
        let coef = Normal::new(0.0, cfg.coef_noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        beta_t.map(|b| b + coef.sample(&mut rng))
    } else {
        beta_t.clone()
    };
    let sigma = cfg.sigma2.sqrt();
    let (target, u_target) = sample_task(&beta_t, cfg.range_t, cfg.n_t, sigma, TaskTag::Target, &mut rng)?;
    let (source, u_source) = sample_task(&beta_s, cfg.range_s, cfg.n_s, sigma, TaskTag::Source, &mut rng)?;
    Ok(PolynomialTask {
        source,
        target,
        truth: TaskTruth::new(beta_s, beta_t, cfg.sigma2, cfg.sigma2)?,
        u_source,
        u_target,
    })
}

/// Fresh target-law sample on `range`, for evaluation.
pub fn sample_target(
    truth: &TaskTruth,
    range: (f64, f64),
    n: usize,
    rng: &mut impl Rng,
) -> Result<(Dataset, Vec<f64>)> {
    let unif = Uniform::new(range.0, range.1).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let noise = Normal::new(0.0, truth.sigma2_t.sqrt()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let us: Vec<f64> = (0..n).map(|_| unif.sample(rng)).collect();
    let x = poly_design(&us);
    let y = &x * DVector::from_column_slice(&truth.beta_t) + DVector::from_fn(n, |_, _| noise.sample(rng));
    Ok((Dataset::new(x, y, TaskTag::Target)?, us))
}
