use lintransfer::data::csvio::{read_dataset_csv, write_dataset};
use lintransfer::data::polynomial::{gen_polynomial_task, poly_design, PolynomialTaskConfig};
use lintransfer::experiment::{run_transfer_experiment, ExperimentSettings};
use lintransfer::{fit_ols, Dataset, TaskTag};
use nalgebra::DVector;
use std::fs::File;

#[test]
fn generated_data_survives_disk_and_runs_end_to_end() {
    let task = gen_polynomial_task(&PolynomialTaskConfig::with_seed(7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (sp, tp) = (dir.path().join("source.csv"), dir.path().join("target.csv"));
    write_dataset(&task.source, File::create(&sp).unwrap()).unwrap();
    write_dataset(&task.target, File::create(&tp).unwrap()).unwrap();
    let source = read_dataset_csv(&sp, TaskTag::Source).unwrap();
    let target = read_dataset_csv(&tp, TaskTag::Target).unwrap();
    assert_eq!(source.x, task.source.x);
    assert_eq!(target.y, task.target.y);

    let direct = fit_ols(&task.target).unwrap();
    assert_eq!(fit_ols(&target).unwrap().beta_hat, direct.beta_hat);

    let us: Vec<f64> = (0..200).map(|i| -3.0 + 6.0 * i as f64 / 199.0).collect();
    let x = poly_design(&us);
    let y = &x * DVector::from_vec(task.truth.beta_t.clone());
    let test = Dataset::new(x, y, TaskTag::Target).unwrap();
    let settings = ExperimentSettings { curve_ks: vec![0, 10], ..Default::default() };
    let out = run_transfer_experiment(&source, &target, &test, &settings).unwrap();

    let s = &out.summary;
    assert_eq!((s.n_s, s.n_t, s.n_test), (source.n(), target.n(), 200));
    assert!(s.alpha <= s.alpha_star);
    assert_eq!(out.predictions.decisions.len(), 200);
    assert_eq!(out.curve.len(), 2);
    for p in out.curve.iter().chain([&s.rmse]) {
        assert!(p.oracle <= p.target_only.min(p.fine_tuned) + 1e-12);
    }
    // at k = 0 the fine-tuned model is the source fit
    let src_rmse = ((&test.x * &out.source.beta_hat) - &test.y).norm() / (200f64).sqrt();
    assert!((out.curve[0].fine_tuned - src_rmse).abs() < 1e-12);
    assert_eq!(out.target.beta_hat, direct.beta_hat);
}
