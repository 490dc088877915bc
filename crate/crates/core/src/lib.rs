//! Transfer learning for linear regression by gradient-descent fine-tuning.
//!
//! A source OLS estimate is refined by `k` gradient steps on the target task,
//! which has the closed form `β̂_k = A^k β̂_S + (I − A^k) β̂_T` with
//! `A = I − αΣ_T`. The crate computes the exact excess-risk gain of the
//! fine-tuned predictor over the target-only one, an F test that flags
//! inputs where transfer may hurt, the tuning of `α`, `k` and `ρ`, and a
//! Monte-Carlo phase map of the gain over sample sizes.

pub mod data;
pub mod error;
pub mod experiment;
pub mod fdist;
pub mod finetune;
pub mod gain;
pub mod linalg;
pub mod model;
pub mod phase;
pub mod tuning;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use finetune::{fine_tune, make_transfer_operator, EigenDecomposition, TransferOperator};
pub use gain::{gain_at, gain_bounds, gain_matrix, kl_decomposition, GainReport, KlTerms, TaskTruth};
pub use model::{estimate_noise_variance, fit_ols, Dataset, FittedModel, Gram, ModelRecord, TaskTag};
pub use phase::{run_phase_grid, simulate_cell, PhaseConfig, PhaseGrid};
pub use transfer_test::{p_value, test_statistic, RhoPrior, TestResult};
pub use tuning::{calibrate_rho, pick_alpha, select_k, tune, TuningReport};
