//! Monte-Carlo map of the average transfer gain over a grid of sample sizes.
//!
//! For every `(N_S, N_T)` cell and every `k`, design rows and the probe input
//! are drawn i.i.d. standard normal, the gain `xᵀH_k x` is computed exactly
//! from the sampled Gram matrices, and the mean over `reps` replications is
//! recorded (and clipped for display).
//!
//! Seeding: `cell_seed = mix(seed, N_S, N_T, k)` and
//! `replication_seed = mix(cell_seed, b)`, where `mix` chains the SplitMix64
//! finalizer. Each replication owns a ChaCha8 stream, so results do not
//! depend on the order in which cells are evaluated.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finetune::make_transfer_operator;
use crate::gain::{gain_at, gain_matrix, TaskTruth};
use crate::model::Gram;
use crate::tuning::pick_alpha;

/// Consecutive non-SPD draws tolerated before a replication is abandoned.
pub const MAX_CONSECUTIVE_FAILURES: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub d: usize,
    pub beta_s: Vec<f64>,
    pub beta_t: Vec<f64>,
    pub sigma2_s: f64,
    pub sigma2_t: f64,
    pub k_list: Vec<u64>,
    /// `α = α*/alpha_divisor`, recomputed from every sampled `Σ_T`.
    pub alpha_divisor: f64,
    pub grid_s: Vec<usize>,
    pub grid_t: Vec<usize>,
    pub reps: usize,
    pub clip: f64,
    pub seed: u64,
}

impl PhaseConfig {
    /// `D = 15`, `k ∈ {0, 10, 50}`, `α = α*/5`, `‖β_S − β_T‖ = 0.25`, unit
    /// noise, clip at 0.4, over the given grids.
    pub fn with_grids(grid_s: Vec<usize>, grid_t: Vec<usize>, reps: usize, seed: u64) -> Self {
        let d = 15;
        let (beta_s, beta_t) = draw_beta_pair(d, 0.25, seed);
        Self {
            d,
            beta_s,
            beta_t,
            sigma2_s: 1.0,
            sigma2_t: 1.0,
            k_list: vec![0, 10, 50],
            alpha_divisor: 5.0,
            grid_s,
            grid_t,
            reps,
            clip: 0.4,
            seed,
        }
    }

    /// Full grid: `N_S ∈ {30, 40, …, 1000}`, `N_T ∈ {30, 40, …, 500}`, 50 replications.
    pub fn paper_scale(seed: u64) -> Self {
        Self::with_grids((30..=1000).step_by(10).collect(), (30..=500).step_by(10).collect(), 50, seed)
    }

    /// Same ranges at coarse strides: `N_S ∈ {40, 100, …, 1000}`,
    /// `N_T ∈ {20, 60, …, 500}`, 50 replications.
    pub fn desk_scale(seed: u64) -> Self {
        Self::with_grids((40..=1000).step_by(60).collect(), (20..=500).step_by(40).collect(), 50, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.d == 0 {
            return bad("dimension must be positive".into());
        }
        if self.beta_s.len() != self.d || self.beta_t.len() != self.d {
            return bad(format!("coefficient vectors must have length {}", self.d));
        }
        if !(self.sigma2_s > 0.0 && self.sigma2_t > 0.0) {
            return bad("noise variances must be positive".into());
        }
        if self.k_list.is_empty() || self.grid_s.is_empty() || self.grid_t.is_empty() {
            return bad("k list and sample-size grids must be non-empty".into());
        }
        if let Some(n) = self.grid_s.iter().chain(&self.grid_t).find(|&&n| n <= self.d) {
            return bad(format!("grid value {n} must exceed dimension {}", self.d));
        }
        if self.reps == 0 {
            return bad("reps must be positive".into());
        }
        if !(self.clip > 0.0) || !(self.alpha_divisor > 0.0) {
            return bad("clip and alpha divisor must be positive".into());
        }
        Ok(())
    }

    pub fn truth(&self) -> Result<TaskTruth> {
        TaskTruth::new(
            DVector::from_vec(self.beta_s.clone()),
            DVector::from_vec(self.beta_t.clone()),
            self.sigma2_s,
            self.sigma2_t,
        )
    }
}

/// Coefficient pair at prescribed distance: `β_T ~ N(0, I)`, `β_S = β_T + r·u`
/// with `u` uniform on the unit sphere.
pub fn draw_beta_pair(d: usize, distance: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, &[0xBE7A]));
    let beta_t = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    dir /= dir.norm();
    let beta_s = &beta_t + dir * distance;
    (beta_s.iter().copied().collect(), beta_t.iter().copied().collect())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent and a path of integers.
pub fn mix(parent: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(parent), |h, &p| splitmix64(h ^ p))
}

pub fn cell_seed(seed: u64, n_s: usize, n_t: usize, k: u64) -> u64 {
    mix(seed, &[n_s as u64, n_t as u64, k])
}

pub fn replication_seed(cell_seed: u64, b: usize) -> u64 {
    mix(cell_seed, &[b as u64])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication {
    pub gain: f64,
    /// Non-SPD draws discarded before success.
    pub failures: u32,
}

fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// One draw of `xᵀH_k x`.
pub fn simulate_replication(
    n_s: usize,
    n_t: usize,
    k: u64,
    config: &PhaseConfig,
    truth: &TaskTruth,
    seed: u64,
) -> Result<Replication> {
    let d = config.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    loop {
        let xs = standard_normal_matrix(n_s, d, &mut rng);
        let xt = standard_normal_matrix(n_t, d, &mut rng);
        let x = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
        let attempt = (|| {
            let gs = Gram::from_design(&xs)?;
            let gt = Gram::from_design(&xt)?;
            let alpha = pick_alpha(gt.matrix(), config.alpha_divisor)?;
            let op = make_transfer_operator(gt.matrix(), alpha, k)?;
            gain_at(&x, &gain_matrix(truth, &gs, &op)?)
        })();
        match attempt {
            Ok(gain) => return Ok(Replication { gain, failures }),
            Err(Error::NonSpdGram) => {
                failures += 1;
                if failures >= MAX_CONSECUTIVE_FAILURES {
                    return Err(Error::NonSpdGram);
                }
            }
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    /// Mean over completed replications; NaN when none completed.
    pub mean_gain: f64,
    pub failures: u32,
    pub completed: usize,
}

/// Mean gain over `config.reps` replications of one cell.
pub fn simulate_cell(n_s: usize, n_t: usize, k: u64, config: &PhaseConfig, cell_seed: u64) -> Result<CellResult> {
    if n_s <= config.d || n_t <= config.d {
        return Err(Error::TooFewSamples {
            n: n_s.min(n_t),
            d: config.d,
        });
    }
    let truth = config.truth()?;
    let (mut sum, mut failures, mut completed) = (0.0, 0u32, 0usize);
    for b in 0..config.reps {
        match simulate_replication(n_s, n_t, k, config, &truth, replication_seed(cell_seed, b)) {
            Ok(r) => {
                sum += r.gain;
                failures += r.failures;
                completed += 1;
            }
            Err(Error::NonSpdGram) => failures += MAX_CONSECUTIVE_FAILURES,
            Err(e) => return Err(e),
        }
    }
    let mean_gain = if completed > 0 { sum / completed as f64 } else { f64::NAN };
    Ok(CellResult {
        mean_gain,
        failures,
        completed,
    })
}

/// Mean gains for one `k`; `mean[i][j]` is the cell `(grid_s[i], grid_t[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub k: u64,
    pub grid_s: Vec<usize>,
    pub grid_t: Vec<usize>,
    pub clip: f64,
    pub cells: Vec<Vec<CellResult>>,
}

impl PhaseGrid {
    pub fn mean(&self, i: usize, j: usize) -> f64 {
        self.cells[i][j].mean_gain
    }

    pub fn clipped(&self, i: usize, j: usize) -> f64 {
        let m = self.mean(i, j);
        if m.is_nan() {
            m
        } else {
            m.clamp(-self.clip, self.clip)
        }
    }

    /// Number of cells with mean gain below `threshold`.
    pub fn count_below(&self, threshold: f64) -> usize {
        self.cells.iter().flatten().filter(|c| c.mean_gain < threshold).count()
    }
}

/// Evaluate every cell for every `k` in `config.k_list`.
pub fn run_phase_grid(config: &PhaseConfig) -> Result<Vec<PhaseGrid>> {
    config.validate()?;
    let jobs: Vec<(u64, usize, usize)> = config
        .k_list
        .iter()
        .flat_map(|&k| {
            config
                .grid_s
                .iter()
                .flat_map(move |&s| config.grid_t.iter().map(move |&t| (k, s, t)))
        })
        .collect();
    let results: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(k, n_s, n_t)| {
            simulate_cell(n_s, n_t, k, config, cell_seed(config.seed, n_s, n_t, k)).unwrap_or(CellResult {
                mean_gain: f64::NAN,
                failures: MAX_CONSECUTIVE_FAILURES * config.reps as u32,
                completed: 0,
            })
        })
        .collect();

    let per_k = config.grid_s.len() * config.grid_t.len();
    Ok(config
        .k_list
        .iter()
        .zip(results.chunks(per_k))
        .map(|(&k, chunk)| PhaseGrid {
            k,
            grid_s: config.grid_s.clone(),
            grid_t: config.grid_t.clone(),
            clip: config.clip,
            cells: chunk.chunks(config.grid_t.len()).map(<[CellResult]>::to_vec).collect(),
        })
        .collect())
}

/// Long-format CSV: `k,N_S,N_T,mean_gain,clipped_gain,failures`.
pub fn write_phase_csv<W: Write>(grids: &[PhaseGrid], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["k", "N_S", "N_T", "mean_gain", "clipped_gain", "failures"])
        .map_err(io)?;
    for g in grids {
        for (i, &n_s) in g.grid_s.iter().enumerate() {
            for (j, &n_t) in g.grid_t.iter().enumerate() {
                w.write_record([
                    g.k.to_string(),
                    n_s.to_string(),
                    n_t.to_string(),
                    g.mean(i, j).to_string(),
                    g.clipped(i, j).to_string(),
                    g.cells[i][j].failures.to_string(),
                ])
                .map_err(io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
