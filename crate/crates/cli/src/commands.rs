use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use lintransfer::data::csvio::{read_dataset_csv, read_inputs_csv, read_load_csv, write_dataset, write_load_rows};
use lintransfer::data::electricity::{simulate_loads, LoadSimConfig};
use lintransfer::data::{gen_polynomial_task, LoadCsvOptions, PolynomialTaskConfig, Station};
use lintransfer::experiment::{
    decide, electricity_experiment, poly_experiment, Decision, ExperimentOutcome, ExperimentSettings,
    PolyExperimentConfig, Scenario,
};
use lintransfer::phase::write_phase_csv;
use lintransfer::tuning::{calibrate_rho, default_k_grid, default_rho_grid, tune_fitted, TuningReport};
use lintransfer::{fit_ols, make_transfer_operator, pick_alpha, run_phase_grid, FittedModel, ModelRecord, PhaseConfig, RhoPrior, TaskTag};

use crate::output::{num, OutDir};
use crate::{ExperimentArgs, GenerateKind, Preset, TransferArgs};

pub const DEFAULT_SEED: u64 = 2024;

pub enum Status {
    Clean,
    Flagged(usize),
}

fn read_model(path: &Path) -> Result<FittedModel> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let record: ModelRecord =
        serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))?;
    Ok(FittedModel::try_from(record)?)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

#[derive(Serialize)]
struct FitConfig {
    data: String,
}

pub fn fit(data: &Path, out: &Path, seed: Option<u64>) -> Result<Status> {
    let dataset = read_dataset_csv(data, TaskTag::Target).with_context(|| format!("reading {}", data.display()))?;
    let model = fit_ols(&dataset)?;
    let mut dir = OutDir::create(out)?;
    dir.json("model.json", &ModelRecord::from(&model))?;
    dir.finish("fit", &FitConfig { data: path_str(data) }, seed.unwrap_or(DEFAULT_SEED))?;
    Ok(Status::Clean)
}

#[derive(Serialize)]
struct TransferConfig {
    source_model: String,
    target_model: String,
    inputs: String,
    source_data: Option<String>,
    target_data: Option<String>,
    alpha_divisor: f64,
    k: u64,
    rho: f64,
    tuned_k: bool,
    tuned_rho: bool,
    level: f64,
}

pub fn transfer(args: &TransferArgs, seed: Option<u64>) -> Result<Status> {
    let source = read_model(&args.source_model)?;
    let target = read_model(&args.target_model)?;
    if source.d != target.d {
        bail!("source model has dimension {} but target model has {}", source.d, target.d);
    }
    let x = read_inputs_csv(&args.inputs).with_context(|| format!("reading {}", args.inputs.display()))?;
    let alpha = pick_alpha(target.gram.matrix(), args.alpha_div)?;

    let mut tuning: Option<TuningReport> = None;
    let (k, rho) = match (args.k, args.rho) {
        (Some(k), Some(rho)) => (k, rho),
        (k_fixed, rho_fixed) => {
            let (Some(sp), Some(tp)) = (&args.source_data, &args.target_data) else {
                bail!("tuning k or rho needs --source-data and --target-data (or pass both --k and --rho)");
            };
            let source_data = read_dataset_csv(sp, TaskTag::Source).with_context(|| format!("reading {}", sp.display()))?;
            let target_data = read_dataset_csv(tp, TaskTag::Target).with_context(|| format!("reading {}", tp.display()))?;
            let report = tune_fitted(
                &source_data,
                &target_data,
                &source,
                &target,
                args.alpha_div,
                &default_k_grid(),
                &default_rho_grid(),
                args.level,
            )?;
            let k = k_fixed.unwrap_or(report.k_hat);
            let rho = match rho_fixed {
                Some(r) => r,
                None if k == report.k_hat => report.rho_hat,
                None => {
                    let op = make_transfer_operator(target.gram.matrix(), alpha, k)?;
                    calibrate_rho(&source_data, &target_data, &source, &target, &op, &default_rho_grid(), args.level)?
                        .rho_hat
                }
            };
            tuning = Some(report);
            (k, rho)
        }
    };

    let op = make_transfer_operator(target.gram.matrix(), alpha, k)?;
    let decisions = decide(&x, &source, &target, &op, RhoPrior::new(rho)?, args.level)?;
    let flagged = decisions.iter().filter(|d| d.degenerate).count();

    let mut dir = OutDir::create(&args.out)?;
    dir.csv(
        "decisions.csv",
        &["row", "gain_plugin", "psi", "p_value", "decision", "chosen_model", "flag"],
        decisions.iter().enumerate().map(|(i, d)| {
            vec![
                (i + 1).to_string(),
                num(d.gain_plugin),
                num(d.psi),
                num(d.p_value),
                if d.transfer { "transfer" } else { "target" }.into(),
                if d.transfer { "finetuned" } else { "target" }.into(),
                if d.degenerate { "degenerate" } else { "" }.into(),
            ]
        }),
    )?;
    if let Some(report) = &tuning {
        dir.json("tuning.json", report)?;
    }
    let config = TransferConfig {
        source_model: path_str(&args.source_model),
        target_model: path_str(&args.target_model),
        inputs: path_str(&args.inputs),
        source_data: args.source_data.as_deref().map(path_str),
        target_data: args.target_data.as_deref().map(path_str),
        alpha_divisor: args.alpha_div,
        k,
        rho,
        tuned_k: args.k.is_none(),
        tuned_rho: args.rho.is_none(),
        level: args.level,
    };
    dir.finish("transfer", &config, seed.unwrap_or(DEFAULT_SEED))?;
    Ok(if flagged > 0 { Status::Flagged(flagged) } else { Status::Clean })
}

fn settings(args: &ExperimentArgs) -> ExperimentSettings {
    ExperimentSettings {
        alpha_divisor: args.alpha_div,
        level: args.level,
        k: args.k,
        rho: args.rho,
        ..ExperimentSettings::default()
    }
}

fn decision_label(d: &Decision) -> &'static str {
    if d.transfer {
        "transfer"
    } else {
        "target"
    }
}

/// Files shared by every experiment preset.
fn write_outcome(dir: &mut OutDir, outcome: &ExperimentOutcome) -> Result<()> {
    dir.csv(
        "curves.csv",
        &["k", "target_only", "fine_tuned", "test_selected", "oracle"],
        outcome.curve.iter().map(|p| {
            vec![
                p.k.to_string(),
                num(p.target_only),
                num(p.fine_tuned),
                num(p.test_selected),
                num(p.oracle),
            ]
        }),
    )?;
    dir.csv(
        "u_curve.csv",
        &["k", "u_bar"],
        outcome.tuning.u_curve.iter().map(|&(k, u)| vec![k.to_string(), num(u)]),
    )?;
    dir.csv(
        "rho_curve.csv",
        &["rho", "precision", "recall"],
        outcome
            .tuning
            .rho_curve
            .iter()
            .map(|p| vec![num(p.rho), num(p.precision), num(p.recall)]),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct PolyReport<'a> {
    preset: &'static str,
    summary: &'a lintransfer::experiment::ExperimentSummary,
    k_rule: lintransfer::tuning::KRule,
    no_positive_labels: bool,
    truth: &'a lintransfer::TaskTruth,
}

#[derive(Serialize)]
struct GefcomReport<'a> {
    preset: &'a str,
    summary: &'a lintransfer::experiment::ExperimentSummary,
    k_rule: lintransfer::tuning::KRule,
    no_positive_labels: bool,
    features: &'a lintransfer::data::ElectricityFeatureSpec,
    source_preprocessor: &'a lintransfer::data::Preprocessor,
    target_preprocessor: &'a lintransfer::data::Preprocessor,
}

#[derive(Serialize)]
struct GefcomConfig<'a> {
    scenario: &'a Scenario,
    data: String,
    source_data: String,
    source: &'a LoadCsvOptions,
    target: &'a LoadCsvOptions,
    cuts: Option<(f64, f64)>,
    settings: &'a ExperimentSettings,
}

#[derive(Serialize)]
struct PolyConfig<'a> {
    experiment: &'a PolyExperimentConfig,
    settings: &'a ExperimentSettings,
}

pub fn experiment(args: &ExperimentArgs, seed: Option<u64>) -> Result<Status> {
    let seed = seed.unwrap_or(DEFAULT_SEED);
    let settings = settings(args);
    match args.preset {
        Preset::Poly => {
            let cfg = PolyExperimentConfig {
                n_test: args.n_test,
                ..PolyExperimentConfig::with_seed(seed)
            };
            let ex = poly_experiment(&cfg, &settings)?;
            let mut dir = OutDir::create(&args.out)?;
            dir.json(
                "report.json",
                &PolyReport {
                    preset: "poly",
                    summary: &ex.outcome.summary,
                    k_rule: ex.outcome.tuning.k_rule,
                    no_positive_labels: ex.outcome.tuning.no_positive_labels,
                    truth: &ex.truth,
                },
            )?;
            write_outcome(&mut dir, &ex.outcome)?;
            dir.csv(
                "pvalues.csv",
                &["u", "gain_true", "gain_plugin", "psi", "p_value", "decision"],
                ex.gain_curve.iter().map(|g| {
                    vec![
                        num(g.u),
                        num(g.gain_true),
                        num(g.decision.gain_plugin),
                        num(g.decision.psi),
                        num(g.decision.p_value),
                        decision_label(&g.decision).into(),
                    ]
                }),
            )?;
            dir.finish(
                "experiment poly",
                &PolyConfig {
                    experiment: &cfg,
                    settings: &settings,
                },
                seed,
            )?;
            Ok(Status::Clean)
        }
        Preset::GefcomA | Preset::GefcomB => {
            let Some(data) = &args.data else {
                bail!("the gefcom presets need --data <load.csv>");
            };
            let source_path = args.source_data.as_ref().unwrap_or(data);
            let station = match args.station {
                Some(i) => Station::Index(i),
                None => Station::Mean,
            };
            let opts = |column: &str| LoadCsvOptions {
                hour: Some(args.hour),
                station,
                load_column: column.to_string(),
            };
            let (source_opts, target_opts) = (opts(&args.source_column), opts(&args.target_column));
            let source_records =
                read_load_csv(source_path, &source_opts).with_context(|| format!("reading {}", source_path.display()))?;
            let target_records =
                read_load_csv(data, &target_opts).with_context(|| format!("reading {}", data.display()))?;
            let scenario = if args.preset == Preset::GefcomA {
                Scenario::a()
            } else {
                Scenario::b()
            };
            let cuts = match args.cuts.as_deref() {
                None => None,
                Some(&[c1, c2]) => Some((c1, c2)),
                Some(_) => bail!("--cuts takes exactly two values, e.g. --cuts 8,14"),
            };
            let ex = electricity_experiment(&source_records, &target_records, &scenario, cuts, &settings)?;

            let mut dir = OutDir::create(&args.out)?;
            dir.json(
                "report.json",
                &GefcomReport {
                    preset: &scenario.name,
                    summary: &ex.outcome.summary,
                    k_rule: ex.outcome.tuning.k_rule,
                    no_positive_labels: ex.outcome.tuning.no_positive_labels,
                    features: &ex.spec,
                    source_preprocessor: &ex.source_preprocessor,
                    target_preprocessor: &ex.target_preprocessor,
                },
            )?;
            write_outcome(&mut dir, &ex.outcome)?;
            let p = &ex.outcome.predictions;
            dir.csv(
                "pvalues.csv",
                &["date", "psi", "p_value", "decision", "target_only", "fine_tuned", "test_selected"],
                ex.test_dates.iter().enumerate().map(|(i, date)| {
                    let d = &p.decisions[i];
                    vec![
                        date.to_string(),
                        num(d.psi),
                        num(d.p_value),
                        decision_label(d).into(),
                        num(p.target_only[i]),
                        num(p.fine_tuned[i]),
                        num(p.test_selected[i]),
                    ]
                }),
            )?;
            dir.finish(
                &format!("experiment {}", scenario.name),
                &GefcomConfig {
                    scenario: &scenario,
                    data: path_str(data),
                    source_data: path_str(source_path),
                    source: &source_opts,
                    target: &target_opts,
                    cuts,
                    settings: &settings,
                },
                seed,
            )?;
            let flagged = ex.outcome.summary.degenerate_rows;
            Ok(if flagged > 0 { Status::Flagged(flagged) } else { Status::Clean })
        }
    }
}

pub fn phases(config: Option<&Path>, paper_scale: bool, out: &Path, seed: Option<u64>) -> Result<Status> {
    let mut cfg = match config {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            serde_json::from_reader::<_, PhaseConfig>(BufReader::new(file))
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None if paper_scale => PhaseConfig::paper_scale(DEFAULT_SEED),
        None => PhaseConfig::desk_scale(DEFAULT_SEED),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let grids = run_phase_grid(&cfg)?;
    let mut dir = OutDir::create(out)?;
    dir.with_writer("phases.csv", |w| write_phase_csv(&grids, w))?;
    dir.finish("phases", &cfg, cfg.seed)?;
    let failed: usize = grids
        .iter()
        .flat_map(|g| g.cells.iter().flatten())
        .filter(|c| c.completed == 0)
        .count();
    Ok(if failed > 0 { Status::Flagged(failed) } else { Status::Clean })
}

pub fn generate(kind: GenerateKind, out: &Path, seed: Option<u64>) -> Result<Status> {
    let seed = seed.unwrap_or(DEFAULT_SEED);
    let mut dir = OutDir::create(out)?;
    match kind {
        GenerateKind::Poly => {
            let cfg = PolynomialTaskConfig::with_seed(seed);
            let task = gen_polynomial_task(&cfg)?;
            dir.with_writer("source.csv", |w| write_dataset(&task.source, w))?;
            dir.with_writer("target.csv", |w| write_dataset(&task.target, w))?;
            dir.json("truth.json", &task.truth)?;
            dir.finish("generate poly", &cfg, seed)?;
        }
        GenerateKind::Load => {
            let cfg = LoadSimConfig::with_seed(seed);
            let sim = simulate_loads(&cfg)?;
            dir.with_writer("source.csv", |w| write_load_rows(&sim.rows(&sim.source), w))?;
            dir.with_writer("target.csv", |w| write_load_rows(&sim.rows(&sim.target), w))?;
            dir.finish("generate load", &cfg, seed)?;
        }
    }
    Ok(Status::Clean)
}
