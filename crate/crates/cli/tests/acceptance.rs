//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lintransfer::data::electricity::{simulate_loads, LoadSimConfig};
use lintransfer::experiment::{electricity_experiment, poly_experiment, ExperimentSettings, PolyExperimentConfig, Scenario};
use lintransfer::fdist::{f_cdf, f_quantile};
use lintransfer::finetune::fine_tune_eigen_coordinates;
use lintransfer::{
    fine_tune, fit_ols, gain_at, gain_bounds, gain_matrix, kl_decomposition, make_transfer_operator, p_value,
    run_phase_grid, Dataset, Gram, PhaseConfig, RhoPrior, TaskTag, TaskTruth,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normal_matrix(r: usize, c: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

fn normal_vector(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| normal(rng))
}

fn alpha_star(gram: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(gram.clone());
    2.0 / (eig.eigenvalues.max() + eig.eigenvalues.min())
}

fn random_gram(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let n = d + 2 + rng.random_range(0..3 * d + 1);
    let x = normal_matrix(n, d, rng);
    x.tr_mul(&x)
}

/// Random truth, source Gram and transfer operator for the gain checks.
fn random_gain_instance(rng: &mut impl Rng) -> (TaskTruth, Gram, lintransfer::TransferOperator) {
    let d = rng.random_range(1..=8);
    let gs = Gram::new(random_gram(d, rng)).unwrap();
    let gt = random_gram(d, rng);
    let bs = normal_vector(d, rng);
    let bt = &bs + normal_vector(d, rng) * rng.random_range(0.0..1.0);
    let truth = TaskTruth::new(bs, bt, rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)).unwrap();
    let alpha = alpha_star(&gt) / rng.random_range(1.5..20.0);
    let op = make_transfer_operator(&gt, alpha, rng.random_range(0..=200)).unwrap();
    (truth, gs, op)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=10);
        let n = d + 5 + rng.random_range(0..20);
        let x = normal_matrix(n, d, &mut rng);
        let y = normal_vector(n, &mut rng);
        let target = fit_ols(&Dataset::new(x.clone(), y.clone(), TaskTag::Target).unwrap()).unwrap();
        let beta_s = normal_vector(d, &mut rng);
        let k = rng.random_range(0..=200);
        let alpha = alpha_star(&x.tr_mul(&x)) / 10.0;

        let op = make_transfer_operator(target.gram.matrix(), alpha, k).unwrap();
        let closed = fine_tune(&beta_s, &target.beta_hat, &op).unwrap();
        let mut beta = beta_s.clone();
        for _ in 0..k {
            let grad = x.tr_mul(&(&x * &beta - &y));
            beta -= grad * alpha;
        }
        worst = worst.max((closed - beta).amax());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-8 && secs < 10.0,
        format!("max |closed form - GD loop| = {worst:.2e} (< 1e-8), {secs:.2}s (< 10s)"),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=10);
        let gt = random_gram(d, &mut rng);
        let alpha = alpha_star(&gt) / rng.random_range(1.5..20.0);
        let k = rng.random_range(0..=200);
        let (bs, bt) = (normal_vector(d, &mut rng), normal_vector(d, &mut rng));
        let op = make_transfer_operator(&gt, alpha, k).unwrap();
        let matrix_form = fine_tune(&bs, &bt, &op).unwrap();

        let eig = SymmetricEigen::new(gt.clone());
        let mut recombined = DVector::zeros(d);
        for i in 0..d {
            let p = eig.eigenvectors.column(i);
            let w = (1.0 - alpha * eig.eigenvalues[i]).powi(k as i32);
            recombined += p * (w * p.dot(&bs) + (1.0 - w) * p.dot(&bt));
        }
        let coords = fine_tune_eigen_coordinates(&bs, &bt, &op).unwrap();
        let from_library_coords = &op.eigen.vectors * coords;
        worst = worst
            .max((&matrix_form - &recombined).amax())
            .max((&matrix_form - from_library_coords).amax());
    }
    verdict(worst < 1e-10, format!("max |eigenbasis - matrix form| = {worst:.2e} (< 1e-10)"))
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    const DRAWS: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst_z = 0.0_f64;
    let mut lines = Vec::new();
    for _ in 0..5 {
        let d = 3;
        let xs = normal_matrix(30, d, &mut rng);
        let xt = normal_matrix(10, d, &mut rng);
        let (gs, gt) = (xs.tr_mul(&xs), xt.tr_mul(&xt));
        let bs = normal_vector(d, &mut rng);
        let bt = &bs + normal_vector(d, &mut rng) * 0.3;
        let (s2s, s2t) = (rng.random_range(0.5..1.5), rng.random_range(0.5..1.5));
        let k = rng.random_range(5..=60);
        let alpha = alpha_star(&gt) / 10.0;
        let x = normal_vector(d, &mut rng);

        let truth = TaskTruth::new(bs.clone(), bt.clone(), s2s, s2t).unwrap();
        let gram_s = Gram::new(gs.clone()).unwrap();
        let op = make_transfer_operator(&gt, alpha, k).unwrap();
        let exact = gain_at(&x, &gain_matrix(&truth, &gram_s, &op).unwrap()).unwrap();

        // β̂_S ~ N(β_S, σ_S² Σ_S⁻¹), β̂_T ~ N(β_T, σ_T² Σ_T⁻¹); only projections on x matter
        let ls = gs.clone().try_inverse().unwrap().cholesky().unwrap().l();
        let lt = gt.clone().try_inverse().unwrap().cholesky().unwrap().l();
        let mut ak = DMatrix::identity(d, d);
        let a = DMatrix::identity(d, d) - &gt * alpha;
        for _ in 0..k {
            ak = &a * ak;
        }
        let i_ak = DMatrix::identity(d, d) - &ak;
        let t_dir = lt.tr_mul(&x) * s2t.sqrt();
        let ks_dir = ls.tr_mul(&ak.tr_mul(&x)) * s2s.sqrt();
        let kt_dir = lt.tr_mul(&i_ak.tr_mul(&x)) * s2t.sqrt();
        let bias = x.dot(&(&ak * (&bs - &bt)));

        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..DRAWS {
            let z1 = normal_vector(d, &mut rng);
            let z2 = normal_vector(d, &mut rng);
            let err_t = t_dir.dot(&z2);
            let err_k = bias + ks_dir.dot(&z1) + kt_dir.dot(&z2);
            let diff = err_t * err_t - err_k * err_k;
            sum += diff;
            sum2 += diff * diff;
        }
        let n = DRAWS as f64;
        let mean = sum / n;
        let se = ((sum2 / n - mean * mean) * n / (n - 1.0)).sqrt() / n.sqrt();
        let z = (mean - exact).abs() / se;
        worst_z = worst_z.max(z);
        lines.push(format!("{exact:.4}~{mean:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst_z <= 3.0 && secs < 120.0,
        format!(
            "max |MC - exact| = {worst_z:.2} SE (<= 3), gains [{}], {secs:.1}s (< 120s)",
            lines.join(", ")
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut violations = 0;
    for _ in 0..1000 {
        let (truth, gs, op) = random_gain_instance(&mut rng);
        let report = gain_matrix(&truth, &gs, &op).unwrap();
        let x = normal_vector(truth.dim(), &mut rng);
        let g = gain_at(&x, &report).unwrap();
        let eig = SymmetricEigen::new(report.h.clone());
        let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
        let n2 = x.norm_squared();
        let tol = 1e-12 * lo.abs().max(hi.abs()) * n2;
        let (blo, bhi) = gain_bounds(&x, &report).unwrap();
        if g < lo * n2 - tol || g > hi * n2 + tol || g < blo - tol || g > bhi + tol {
            violations += 1;
        }
    }
    verdict(violations == 0, format!("{violations} sandwich violations in 1000 pairs"))
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let (truth, gs, op) = random_gain_instance(&mut rng);
        let report = gain_matrix(&truth, &gs, &op).unwrap();
        let x = normal_vector(truth.dim(), &mut rng);
        let g = gain_at(&x, &report).unwrap();
        let kl = kl_decomposition(&x, &truth, &gs, &op).unwrap();
        let scale = g.abs().max(kl.kl_term.abs() + kl.u_term.abs());
        worst = worst.max((kl.kl_term + kl.u_term - g).abs() / scale);
    }
    verdict(worst <= 1e-9, format!("max relative |kl + u - gain| = {worst:.2e} (<= 1e-9)"))
}

/// `∫_0^len f` by tanh-sinh quadrature; `f` may be singular at 0 only.
fn tanh_sinh(f: &dyn Fn(f64) -> f64, len: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let eval = |h: f64, offset: f64, step: f64| {
        let mut s = 0.0;
        let mut t = -6.0 + offset;
        while t <= 6.0 {
            let y = half_pi * t.sinh();
            let node = len / (1.0 + (-2.0 * y).exp());
            if node > 0.0 && node < len {
                let w = len * half_pi * t.cosh() / (2.0 * y.cosh().powi(2));
                if w.is_finite() {
                    s += w * f(node);
                }
            }
            t += step;
        }
        s * h
    };
    let mut h = 0.5;
    let mut total = eval(h, 0.0, h);
    for _ in 0..12 {
        // add the midpoints of the previous level
        let refined = total / 2.0 + eval(h / 2.0, h / 2.0, h);
        h /= 2.0;
        let done = (refined - total).abs() <= 1e-15 * refined.abs();
        total = refined;
        if done {
            break;
        }
    }
    total
}

/// `P(F ≤ f)` from the beta density integrated by quadrature and normalized
/// by its full integral.
fn f_cdf_oracle(f: f64, d1: u64, d2: u64) -> f64 {
    let (n1, n2) = (d1 as f64, d2 as f64);
    let (a, b) = (n1 / 2.0, n2 / 2.0);
    let x = n1 * f / (n1 * f + n2);
    let xc = n2 / (n1 * f + n2);
    let m = a / (a + b);
    let log_at = |t: f64, tc: f64| (a - 1.0) * t.ln() + (b - 1.0) * tc.ln();
    let shift = log_at(m, 1.0 - m);
    let lower = |t: f64| (log_at(t, 1.0 - t) - shift).exp();
    let upper = |s: f64| (log_at(1.0 - s, s) - shift).exp();
    let full = tanh_sinh(&lower, m) + tanh_sinh(&upper, 1.0 - m);
    if x <= m {
        tanh_sinh(&lower, x) / full
    } else {
        1.0 - tanh_sinh(&upper, xc) / full
    }
}

fn criterion_6() -> Verdict {
    let dofs = [1u64, 2, 3, 5, 10, 30, 100, 300, 600];
    let fs = [0.05, 0.2, 0.5, 0.9, 1.0, 1.1, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0];
    let mut quad = 0.0_f64;
    for &d1 in &dofs {
        for &d2 in &dofs {
            for &f in &fs {
                quad = quad.max((f_cdf(f, d1, d2).unwrap() - f_cdf_oracle(f, d1, d2)).abs());
            }
        }
    }
    let mut median = 0.0_f64;
    for d in 1..=600 {
        median = median.max((f_cdf(1.0, d, d).unwrap() - 0.5).abs());
    }
    let mut trip = 0.0_f64;
    for &d1 in &dofs {
        for &d2 in &dofs {
            for p in [1e-3, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 0.999] {
                let q = f_quantile(p, d1, d2).unwrap();
                trip = trip.max((f_cdf(q, d1, d2).unwrap() - p).abs());
            }
        }
    }
    verdict(
        quad < 1e-9 && median < 1e-12 && trip < 1e-9,
        format!("quadrature {quad:.2e} (< 1e-9), cdf(1,d,d) {median:.2e} (< 1e-12), round trip {trip:.2e} (< 1e-9)"),
    )
}

fn regression_sample(x: &DMatrix<f64>, beta: &DVector<f64>, sigma2: f64, tag: TaskTag, rng: &mut impl Rng) -> Dataset {
    let noise = normal_vector(x.nrows(), rng) * sigma2.sqrt();
    Dataset::new(x.clone(), x * beta + noise, tag).unwrap()
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    const REPS: usize = 5000;
    let bound = 0.05 + 2.0 * (0.05_f64 * 0.95 / REPS as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut rates = Vec::new();
    let mut valid = true;
    // (k, shift direction aligned with A^k x)
    for (k, aligned) in [(5u64, true), (50, false), (300, false)] {
        let d = 3;
        let xs = normal_matrix(200, d, &mut rng);
        let xt = normal_matrix(20, d, &mut rng);
        let (s2s, s2t) = (1.0, 1.5);
        let gram_s = Gram::new(xs.tr_mul(&xs)).unwrap();
        let op = make_transfer_operator(&xt.tr_mul(&xt), alpha_star(&xt.tr_mul(&xt)) / 10.0, k).unwrap();
        let x = normal_vector(d, &mut rng);
        let akx = &op.a_pow_k * &x;
        let u = if aligned {
            akx.normalize()
        } else {
            normal_vector(d, &mut rng).normalize()
        };
        let bs = normal_vector(d, &mut rng);
        let no_shift = TaskTruth::new(bs.clone(), bs.clone(), s2s, s2t).unwrap();
        let g0 = gain_at(&x, &gain_matrix(&no_shift, &gram_s, &op).unwrap()).unwrap();
        // shift size that brings the gain at x to zero
        let c = if g0 > 0.0 { g0.sqrt() / akx.dot(&u).abs() * (1.0 + 1e-9) } else { 0.0 };
        let bt = &bs + &u * c;
        let truth = TaskTruth::new(bs.clone(), bt.clone(), s2s, s2t).unwrap();
        let gain = gain_at(&x, &gain_matrix(&truth, &gram_s, &op).unwrap()).unwrap();
        let rho = (&bt - &bs).norm() / s2t.sqrt();
        valid &= gain <= 0.0;

        let prior = RhoPrior::new(rho).unwrap();
        let mut rejections = 0;
        for _ in 0..REPS {
            let source = fit_ols(&regression_sample(&xs, &bs, s2s, TaskTag::Source, &mut rng)).unwrap();
            let target = fit_ols(&regression_sample(&xt, &bt, s2t, TaskTag::Target, &mut rng)).unwrap();
            if p_value(&x, &source, &target, &op, prior, 0.05).unwrap().reject_null {
                rejections += 1;
            }
        }
        rates.push(rejections as f64 / REPS as f64);
    }
    let secs = start.elapsed().as_secs_f64();
    let worst = rates.iter().cloned().fold(0.0, f64::max);
    verdict(
        valid && worst <= bound && secs < 180.0,
        format!(
            "rejection rates {:?} (<= {bound:.4}), null configurations valid: {valid}, {secs:.1}s (< 180s)",
            rates.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()
        ),
    )
}

/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
fn ks_p_value(stat: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * stat;
    let mut p = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        p += 2.0 * (-1.0_f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

fn criterion_8() -> Verdict {
    const SIMS: usize = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let (d, n_s, n_t) = (3, 30, 15);
    let (s2s, s2t) = (2.0, 0.5);
    let xs = normal_matrix(n_s, d, &mut rng);
    let xt = normal_matrix(n_t, d, &mut rng);
    let (bs, bt) = (normal_vector(d, &mut rng), normal_vector(d, &mut rng));
    let mut pivots: Vec<f64> = (0..SIMS)
        .map(|_| {
            let s = fit_ols(&regression_sample(&xs, &bs, s2s, TaskTag::Source, &mut rng)).unwrap();
            let t = fit_ols(&regression_sample(&xt, &bt, s2t, TaskTag::Target, &mut rng)).unwrap();
            (t.sigma2_hat / s2t) / (s.sigma2_hat / s2s)
        })
        .collect();
    pivots.sort_by(f64::total_cmp);
    let n = SIMS as f64;
    let stat = pivots
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = f_cdf(v, (n_t - d) as u64, (n_s - d) as u64).unwrap();
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max);
    let p = ks_p_value(stat, SIMS);
    verdict(p >= 0.01, format!("KS D = {stat:.4}, p = {p:.3} (>= 0.01)"))
}

fn quick_settings() -> ExperimentSettings {
    ExperimentSettings {
        curve_ks: vec![0],
        ..ExperimentSettings::default()
    }
}

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let (mut positive, mut agree) = (0.0, 0.0);
    let mut k_hats = Vec::new();
    for seed in 0..20u64 {
        let ex = poly_experiment(&PolyExperimentConfig::with_seed(seed), &quick_settings()).unwrap();
        k_hats.push(ex.outcome.summary.k);
        let right: Vec<_> = ex.gain_curve.iter().filter(|g| g.u >= 1.0).collect();
        positive += right.iter().filter(|g| g.gain_true > 0.0).count() as f64 / right.len() as f64;
        agree += ex
            .gain_curve
            .iter()
            .filter(|g| g.decision.transfer == (g.gain_true > 0.0))
            .count() as f64
            / ex.gain_curve.len() as f64;
    }
    let (positive, agree) = (positive / 20.0, agree / 20.0);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        positive >= 0.9 && agree >= 0.85 && secs < 300.0,
        format!(
            "(a) positive gain on [1,3] {positive:.3} (>= 0.90), (b) decision/gain sign agreement {agree:.3} (>= 0.85), k in {}..{}, {secs:.1}s (< 300s)",
            k_hats.iter().min().unwrap(),
            k_hats.iter().max().unwrap()
        ),
    )
}

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let cfg = PhaseConfig::desk_scale(2024);
    let grids = run_phase_grid(&cfg).unwrap();
    let by_k = |k: u64| grids.iter().find(|g| g.k == k).unwrap();
    let (g0, g10, g50) = (by_k(0), by_k(10), by_k(50));
    let (ns, nt) = (cfg.grid_s.len(), cfg.grid_t.len());

    let corner = g0.mean(ns - 1, 0);
    let top_row_negative = (0..ns).all(|i| g0.mean(i, nt - 1) < 0.0);
    let a = corner > 0.0 && top_row_negative;

    let (below0, below10) = (g0.count_below(-0.05), g10.count_below(-0.05));
    let b = below10 < below0;

    let rows_above: Vec<usize> = (0..nt)
        .filter(|&j| (0..ns).any(|i| g50.mean(i, j) > 0.05))
        .map(|j| cfg.grid_t[j])
        .collect();
    let c = !rows_above.is_empty() && rows_above.iter().all(|&n| n <= cfg.grid_t[1]);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        a && b && c && secs < 600.0,
        format!(
            "(a) k=0 corner (N_T={}, N_S={}) {corner:.3} > 0, N_T={} row negative: {top_row_negative}; (b) cells < -0.05: k=10 {below10} < k=0 {below0}; (c) k=50 rows with cells > 0.05: N_T in {rows_above:?} (<= {}); {secs:.1}s (< 600s)",
            cfg.grid_t[0],
            cfg.grid_s[ns - 1],
            cfg.grid_t[nt - 1],
            cfg.grid_t[1]
        ),
    )
}

fn criterion_11() -> Verdict {
    let (mut poly_sel, mut poly_tgt) = (0.0, 0.0);
    for seed in 0..10u64 {
        let ex = poly_experiment(&PolyExperimentConfig::with_seed(seed), &quick_settings()).unwrap();
        poly_sel += ex.outcome.summary.rmse.test_selected;
        poly_tgt += ex.outcome.summary.rmse.target_only;
    }
    let (mut load_sel, mut load_tgt) = (0.0, 0.0);
    for seed in 0..10u64 {
        let sim = simulate_loads(&LoadSimConfig::with_seed(seed)).unwrap();
        let ex = electricity_experiment(&sim.source, &sim.target, &Scenario::a(), None, &quick_settings()).unwrap();
        load_sel += ex.outcome.summary.rmse.test_selected;
        load_tgt += ex.outcome.summary.rmse.target_only;
    }
    let ok = |sel: f64, tgt: f64| sel <= tgt * 1.005;
    verdict(
        ok(poly_sel, poly_tgt) && ok(load_sel, load_tgt),
        format!(
            "mean RMSE test-selected/target-only: polynomial {:.4}/{:.4} = {:.3}, load fixture {:.4}/{:.4} = {:.3} (<= 1.005)",
            poly_sel / 10.0,
            poly_tgt / 10.0,
            poly_sel / poly_tgt,
            load_sel / 10.0,
            load_tgt / 10.0,
            load_sel / load_tgt
        ),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_lintransfer"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn same_files(a: &Path, b: &Path) -> bool {
    let names = |dir: &Path| {
        let mut v: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        v.sort();
        v
    };
    let (na, nb) = (names(a), names(b));
    na == nb && na.iter().all(|n| fs::read(a.join(n)).unwrap() == fs::read(b.join(n)).unwrap())
}

fn criterion_12() -> Verdict {
    let tmp = tempfile::TempDir::new().unwrap();
    let root = tmp.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let gp = root.join("gen-poly");
    let gl = root.join("gen-load");
    let (ms, mt) = (root.join("model-s"), root.join("model-t"));
    // inputs shared by the later commands
    let setup = run_cli(&["--seed", "17", "generate", "poly", "--out", &s(&gp)])
        && run_cli(&["--seed", "17", "generate", "load", "--out", &s(&gl)])
        && run_cli(&["fit", "--data", &s(&gp.join("source.csv")), "--out", &s(&ms)])
        && run_cli(&["fit", "--data", &s(&gp.join("target.csv")), "--out", &s(&mt)]);
    if !setup {
        return verdict(false, "setup commands failed".into());
    }

    let commands: Vec<(&str, Vec<String>)> = vec![
        ("generate poly", vec!["--seed".into(), "17".into(), "generate".into(), "poly".into()]),
        ("generate load", vec!["--seed".into(), "17".into(), "generate".into(), "load".into()]),
        ("fit", vec!["fit".into(), "--data".into(), s(&gp.join("source.csv"))]),
        (
            "transfer",
            vec![
                "transfer".into(),
                "--source-model".into(),
                s(&ms.join("model.json")),
                "--target-model".into(),
                s(&mt.join("model.json")),
                "--inputs".into(),
                s(&gp.join("target.csv")),
                "--source-data".into(),
                s(&gp.join("source.csv")),
                "--target-data".into(),
                s(&gp.join("target.csv")),
            ],
        ),
        ("experiment poly", vec!["--seed".into(), "17".into(), "experiment".into(), "poly".into()]),
        (
            "experiment gefcom-a",
            vec![
                "experiment".into(),
                "gefcom-a".into(),
                "--data".into(),
                s(&gl.join("target.csv")),
                "--source-data".into(),
                s(&gl.join("source.csv")),
            ],
        ),
        (
            "experiment gefcom-b",
            vec![
                "experiment".into(),
                "gefcom-b".into(),
                "--data".into(),
                s(&gl.join("target.csv")),
                "--source-data".into(),
                s(&gl.join("source.csv")),
            ],
        ),
        ("phases", vec!["--seed".into(), "17".into(), "phases".into()]),
    ];
    let mut failed = Vec::new();
    for (i, (name, args)) in commands.iter().enumerate() {
        let dirs = [root.join(format!("run{i}-a")), root.join(format!("run{i}-b"))];
        let mut ran = true;
        for dir in &dirs {
            let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
            let out = s(dir);
            full.extend(["--out", &out]);
            ran &= run_cli(&full);
        }
        if !ran || !same_files(&dirs[0], &dirs[1]) {
            failed.push(*name);
        }
    }
    verdict(
        failed.is_empty(),
        format!("{} commands rerun byte-identically; mismatched: {failed:?}", commands.len() - failed.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("closed-form / gradient-descent equivalence", criterion_1),
        ("eigenbasis / matrix form equivalence", criterion_2),
        ("gain matches Monte-Carlo risk difference", criterion_3),
        ("gain sandwich bounds", criterion_4),
        ("KL decomposition identity", criterion_5),
        ("Fisher-Snedecor machinery", criterion_6),
        ("test level under the null", criterion_7),
        ("variance-ratio pivot distribution", criterion_8),
        ("polynomial task qualitative reproduction", criterion_9),
        ("phase diagram at desk scale", criterion_10),
        ("safety of the test-selected predictor", criterion_11),
        ("CLI determinism", criterion_12),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failures += 1;
        }
        println!("{} {:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    let total: Duration = start.elapsed();
    println!(
        "acceptance: {} passed, {failures} failed in {:.1}s",
        criteria.len() - failures,
        total.as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
