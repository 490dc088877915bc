//! End-to-end runs: tune on training data, then compare the target-only,
//! fine-tuned, test-selected and oracle predictors on held-out data.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::electricity::{build_electricity_design, select_window, temperature_cuts, ElectricityFeatureSpec, LoadRecord};
use crate::data::metrics::{oracle_predict, rmse};
use crate::data::polynomial::{gen_polynomial_task, poly_features, sample_target, PolynomialTaskConfig};
use crate::data::preprocess::Preprocessor;
use crate::error::{check_dim, Error, Result};
use crate::finetune::{fine_tune, make_transfer_operator, TransferOperator};
use crate::gain::{gain_at, gain_matrix, GainReport, TaskTruth};
use crate::model::{fit_ols, Dataset, FittedModel, TaskTag};
use crate::phase::mix;
use crate::transfer_test::{RhoPrior, StatisticParts, DEFAULT_LEVEL};
use crate::tuning::{
    calibrate_rho, default_k_grid, default_rho_grid, tune_fitted, TuningReport, DEFAULT_ALPHA_DIVISOR,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub alpha_divisor: f64,
    pub k_grid: Vec<u64>,
    pub rho_grid: Vec<f64>,
    pub level: f64,
    /// Fixed `k` instead of `k̂`.
    pub k: Option<u64>,
    /// Fixed `ρ` instead of `ρ̂`.
    pub rho: Option<f64>,
    /// Iteration counts of the RMSE-vs-k table.
    pub curve_ks: Vec<u64>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            alpha_divisor: DEFAULT_ALPHA_DIVISOR,
            k_grid: default_k_grid(),
            rho_grid: default_rho_grid(),
            level: DEFAULT_LEVEL,
            k: None,
            rho: None,
            curve_ks: default_k_grid(),
        }
    }
}

/// Outcome of the transfer test at one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub gain_plugin: f64,
    pub psi: f64,
    pub p_value: f64,
    pub transfer: bool,
    /// `A^k x` vanished; the row falls back to the target model.
    pub degenerate: bool,
}

/// Test every row of `x`; plug-in gains use the two fits as truth.
pub fn decide(
    x: &DMatrix<f64>,
    source: &FittedModel,
    target: &FittedModel,
    op: &TransferOperator,
    prior: RhoPrior,
    level: f64,
) -> Result<Vec<Decision>> {
    check_dim(op.dim(), x.ncols())?;
    let plugin = gain_matrix(&TaskTruth::plug_in(source, target)?, &source.gram, op)?;
    x.row_iter()
        .map(|row| {
            let xv = row.transpose();
            let gain_plugin = gain_at(&xv, &plugin)?;
            match StatisticParts::new(&xv, source, target, op) {
                Ok(parts) => {
                    let r = parts.result(prior, level)?;
                    Ok(Decision {
                        gain_plugin,
                        psi: r.psi,
                        p_value: r.p_value,
                        transfer: r.reject_null,
                        degenerate: false,
                    })
                }
                Err(Error::DegenerateDirection) => Ok(Decision {
                    gain_plugin,
                    psi: f64::NAN,
                    p_value: f64::NAN,
                    transfer: false,
                    degenerate: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsePoint {
    pub k: u64,
    pub target_only: f64,
    pub fine_tuned: f64,
    pub test_selected: f64,
    pub oracle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub target_only: DVector<f64>,
    pub fine_tuned: DVector<f64>,
    pub test_selected: DVector<f64>,
    pub oracle: DVector<f64>,
    pub decisions: Vec<Decision>,
}

#[allow(clippy::too_many_arguments)]
fn predict_all(
    test: &Dataset,
    source: &FittedModel,
    target: &FittedModel,
    alpha: f64,
    k: u64,
    prior: RhoPrior,
    level: f64,
) -> Result<(Predictions, RmsePoint)> {
    let op = make_transfer_operator(target.gram.matrix(), alpha, k)?;
    let beta_k = fine_tune(&source.beta_hat, &target.beta_hat, &op)?;
    let decisions = decide(&test.x, source, target, &op, prior, level)?;
    let target_only = &test.x * &target.beta_hat;
    let fine_tuned = &test.x * &beta_k;
    let test_selected = DVector::from_fn(test.n(), |i, _| {
        if decisions[i].transfer {
            fine_tuned[i]
        } else {
            target_only[i]
        }
    });
    let oracle = oracle_predict(&test.y, &target_only, &fine_tuned)?;
    let point = RmsePoint {
        k,
        target_only: rmse(&test.y, &target_only)?,
        fine_tuned: rmse(&test.y, &fine_tuned)?,
        test_selected: rmse(&test.y, &test_selected)?,
        oracle: rmse(&test.y, &oracle)?,
    };
    Ok((
        Predictions {
            target_only,
            fine_tuned,
            test_selected,
            oracle,
            decisions,
        },
        point,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub n_s: usize,
    pub n_t: usize,
    pub n_test: usize,
    pub alpha_star: f64,
    pub alpha: f64,
    pub k_hat: u64,
    pub rho_hat: f64,
    pub k: u64,
    pub rho: f64,
    pub level: f64,
    pub rmse: RmsePoint,
    pub degenerate_rows: usize,
    pub transferred_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    pub tuning: TuningReport,
    pub source: FittedModel,
    pub target: FittedModel,
    pub curve: Vec<RmsePoint>,
    pub predictions: Predictions,
}

/// Tune on the training pair, then evaluate on `test` at `k̂, ρ̂` (or the
/// fixed values in `settings`) and along `settings.curve_ks`.
pub fn run_transfer_experiment(
    source_data: &Dataset,
    target_data: &Dataset,
    test: &Dataset,
    settings: &ExperimentSettings,
) -> Result<ExperimentOutcome> {
    check_dim(target_data.d(), test.d())?;
    let source = fit_ols(source_data)?;
    let target = fit_ols(target_data)?;
    let tuning = tune_fitted(
        source_data,
        target_data,
        &source,
        &target,
        settings.alpha_divisor,
        &settings.k_grid,
        &settings.rho_grid,
        settings.level,
    )?;
    let k = settings.k.unwrap_or(tuning.k_hat);
    let rho = match settings.rho {
        Some(r) => r,
        None if k == tuning.k_hat => tuning.rho_hat,
        None => {
            let op = make_transfer_operator(target.gram.matrix(), tuning.alpha, k)?;
            calibrate_rho(source_data, target_data, &source, &target, &op, &settings.rho_grid, settings.level)?.rho_hat
        }
    };
    let prior = RhoPrior::new(rho)?;

    let (predictions, rmse_at_k) = predict_all(test, &source, &target, tuning.alpha, k, prior, settings.level)?;
    let curve = settings
        .curve_ks
        .par_iter()
        .map(|&kc| predict_all(test, &source, &target, tuning.alpha, kc, prior, settings.level).map(|(_, p)| p))
        .collect::<Result<Vec<_>>>()?;

    let summary = ExperimentSummary {
        n_s: source_data.n(),
        n_t: target_data.n(),
        n_test: test.n(),
        alpha_star: tuning.alpha_star,
        alpha: tuning.alpha,
        k_hat: tuning.k_hat,
        rho_hat: tuning.rho_hat,
        k,
        rho,
        level: settings.level,
        rmse: rmse_at_k,
        degenerate_rows: predictions.decisions.iter().filter(|d| d.degenerate).count(),
        transferred_rows: predictions.decisions.iter().filter(|d| d.transfer).count(),
    };
    Ok(ExperimentOutcome {
        summary,
        tuning,
        source,
        target,
        curve,
        predictions,
    })
}

/// True gain and test outcome at one scalar input of the polynomial task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub u: f64,
    pub gain_true: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyExperimentConfig {
    pub task: PolynomialTaskConfig,
    pub test_range: (f64, f64),
    pub n_test: usize,
    pub grid_points: usize,
}

impl PolyExperimentConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            task: PolynomialTaskConfig::with_seed(seed),
            test_range: (-3.0, 3.0),
            n_test: 1000,
            grid_points: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyExperiment {
    pub outcome: ExperimentOutcome,
    pub truth: TaskTruth,
    pub gain_curve: Vec<GainPoint>,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn poly_experiment(cfg: &PolyExperimentConfig, settings: &ExperimentSettings) -> Result<PolyExperiment> {
    let task = gen_polynomial_task(&cfg.task)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.task.seed, &[1]));
    let (test, _) = sample_target(&task.truth, cfg.test_range, cfg.n_test, &mut rng)?;
    let outcome = run_transfer_experiment(&task.source, &task.target, &test, settings)?;

    let us = linspace(cfg.test_range.0, cfg.test_range.1, cfg.grid_points);
    let grid = DMatrix::from_fn(us.len(), 4, |i, j| poly_features(us[i])[j]);
    let op = make_transfer_operator(outcome.target.gram.matrix(), outcome.summary.alpha, outcome.summary.k)?;
    let decisions = decide(
        &grid,
        &outcome.source,
        &outcome.target,
        &op,
        RhoPrior::new(outcome.summary.rho)?,
        settings.level,
    )?;
    let true_gain: GainReport = gain_matrix(&task.truth, &outcome.source.gram, &op)?;
    let gain_curve = us
        .iter()
        .zip(decisions)
        .map(|(&u, decision)| {
            Ok(GainPoint {
                u,
                gain_true: gain_at(&poly_features(u), &true_gain)?,
                decision,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolyExperiment {
        outcome,
        truth: task.truth,
        gain_curve,
    })
}

/// Training and test windows of a two-zone load experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub source_train: (NaiveDate, NaiveDate),
    pub target_train: (NaiveDate, NaiveDate),
    pub test: (NaiveDate, NaiveDate),
    /// Window on which each zone's trend and scale are estimated.
    pub preprocess: (NaiveDate, NaiveDate),
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

impl Scenario {
    /// Source: all of 2004; target: Oct 1 – Dec 31 2004; test: 2005.
    pub fn a() -> Self {
        Self {
            name: "gefcom-a".into(),
            source_train: (ymd(2004, 1, 1), ymd(2004, 12, 31)),
            target_train: (ymd(2004, 10, 1), ymd(2004, 12, 31)),
            test: (ymd(2005, 1, 1), ymd(2005, 12, 31)),
            preprocess: (ymd(2004, 1, 1), ymd(2004, 12, 31)),
        }
    }

    /// Source: Apr 1 – Sep 30 2004; target: Sep 1 – Dec 31 2004; test: 2005.
    pub fn b() -> Self {
        Self {
            name: "gefcom-b".into(),
            source_train: (ymd(2004, 4, 1), ymd(2004, 9, 30)),
            target_train: (ymd(2004, 9, 1), ymd(2004, 12, 31)),
            test: (ymd(2005, 1, 1), ymd(2005, 12, 31)),
            preprocess: (ymd(2004, 1, 1), ymd(2004, 12, 31)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectricityExperiment {
    pub outcome: ExperimentOutcome,
    pub spec: ElectricityFeatureSpec,
    pub source_preprocessor: Preprocessor,
    pub target_preprocessor: Preprocessor,
    /// Date of every test row.
    pub test_dates: Vec<NaiveDate>,
}

fn window(records: &[LoadRecord], w: (NaiveDate, NaiveDate)) -> Result<Vec<LoadRecord>> {
    let out = select_window(records, w.0, w.1);
    if out.is_empty() {
        return Err(Error::Domain(format!("no records between {} and {}", w.0, w.1)));
    }
    Ok(out)
}

/// Each zone is detrended and standardized with statistics from
/// `scenario.preprocess`; cuts default to the terciles of the pooled training
/// temperatures and the day origin is the first training record of either zone.
pub fn electricity_experiment(
    source_records: &[LoadRecord],
    target_records: &[LoadRecord],
    scenario: &Scenario,
    temp_cuts: Option<(f64, f64)>,
    settings: &ExperimentSettings,
) -> Result<ElectricityExperiment> {
    let source_pre = Preprocessor::fit(&window(source_records, scenario.preprocess)?)?;
    let target_pre = Preprocessor::fit(&window(target_records, scenario.preprocess)?)?;
    let source_train = source_pre.apply(&window(source_records, scenario.source_train)?);
    let target_train = target_pre.apply(&window(target_records, scenario.target_train)?);
    let test = target_pre.apply(&window(target_records, scenario.test)?);

    let origin = source_train[0].date().min(target_train[0].date());
    let cuts = match temp_cuts {
        Some(c) => c,
        None => temperature_cuts(
            &source_train
                .iter()
                .chain(&target_train)
                .map(|r| r.temperature)
                .collect::<Vec<_>>(),
        )?,
    };
    let spec = ElectricityFeatureSpec::new(cuts, origin)?;
    let outcome = run_transfer_experiment(
        &build_electricity_design(&source_train, &spec, TaskTag::Source)?,
        &build_electricity_design(&target_train, &spec, TaskTag::Target)?,
        &build_electricity_design(&test, &spec, TaskTag::Target)?,
        settings,
    )?;
    Ok(ElectricityExperiment {
        outcome,
        spec,
        source_preprocessor: source_pre,
        target_preprocessor: target_pre,
        test_dates: test.iter().map(LoadRecord::date).collect(),
    })
}
