//! Daily load records and the six-column calendar/temperature design.
//!
//! Row for day `t`:
//! `[1, |sin(ωt)|, WE_t, θ_t·1(θ_t < c₁), θ_t·1(c₁ ≤ θ_t < c₂), θ_t·1(θ_t ≥ c₂)]`.

use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::csvio::LoadRow;
use crate::error::{Error, Result};
use crate::model::{Dataset, TaskTag};

pub const ELECTRICITY_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadRecord {
    pub timestamp: NaiveDateTime,
    pub load: f64,
    pub temperature: f64,
}

impl LoadRecord {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricityFeatureSpec {
    pub omega: f64,
    pub temp_cuts: (f64, f64),
    /// Days counted from Monday = 0.
    pub weekend_days: Vec<u32>,
    /// Day with index `t = 1`.
    pub origin: NaiveDate,
}

impl ElectricityFeatureSpec {
    pub fn new(temp_cuts: (f64, f64), origin: NaiveDate) -> Result<Self> {
        let spec = Self {
            omega: 2.0 * PI / 365.0,
            temp_cuts,
            weekend_days: vec![5, 6],
            origin,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Cuts at the 33% and 66% empirical quantiles of `temperatures`.
    pub fn with_quantile_cuts(temperatures: &[f64], origin: NaiveDate) -> Result<Self> {
        Self::new(temperature_cuts(temperatures)?, origin)
    }

    pub fn validate(&self) -> Result<()> {
        let (c1, c2) = self.temp_cuts;
        if !(c1.is_finite() && c2.is_finite() && c1 < c2) {
            return Err(Error::InvalidConfig(format!(
                "temperature cuts must be strictly ascending, got ({c1}, {c2})"
            )));
        }
        if self.weekend_days.iter().any(|&d| d > 6) {
            return Err(Error::InvalidConfig("weekend day indices must be in 0..=6".into()));
        }
        if !(self.omega.is_finite()) {
            return Err(Error::InvalidConfig("omega must be finite".into()));
        }
        Ok(())
    }

    pub fn day_index(&self, date: NaiveDate) -> f64 {
        ((date - self.origin).num_days() + 1) as f64
    }

    pub fn is_weekend(&self, date: NaiveDate) -> bool {
        self.weekend_days.contains(&date.weekday().num_days_from_monday())
    }

    pub fn features(&self, date: NaiveDate, theta: f64) -> [f64; ELECTRICITY_DIM] {
        let t = self.day_index(date);
        let (c1, c2) = self.temp_cuts;
        let band = |inside: bool| if inside { theta } else { 0.0 };
        [
            1.0,
            (self.omega * t).sin().abs(),
            if self.is_weekend(date) { 1.0 } else { 0.0 },
            band(theta < c1),
            band(c1 <= theta && theta < c2),
            band(theta >= c2),
        ]
    }
}

/// Type-7 (linear interpolation) empirical quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn temperature_cuts(temperatures: &[f64]) -> Result<(f64, f64)> {
    if temperatures.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = temperatures.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cuts = (quantile_sorted(&sorted, 1.0 / 3.0), quantile_sorted(&sorted, 2.0 / 3.0));
    if cuts.0 < cuts.1 {
        Ok(cuts)
    } else {
        Err(Error::ConstantSeries)
    }
}

pub fn build_electricity_design(
    records: &[LoadRecord],
    spec: &ElectricityFeatureSpec,
    tag: TaskTag,
) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    spec.validate()?;
    let rows: Vec<[f64; ELECTRICITY_DIM]> = records
        .iter()
        .map(|r| spec.features(r.date(), r.temperature))
        .collect();
    let x = DMatrix::from_fn(rows.len(), ELECTRICITY_DIM, |i, j| rows[i][j]);
    let y = DVector::from_iterator(records.len(), records.iter().map(|r| r.load));
    Dataset::new(x, y, tag)
}

/// Keep records whose date lies in `[from, to]`.
pub fn select_window(records: &[LoadRecord], from: NaiveDate, to: NaiveDate) -> Vec<LoadRecord> {
    records
        .iter()
        .filter(|r| (from..=to).contains(&r.date()))
        .copied()
        .collect()
}

/// Simulated loads that follow the six-column model exactly, with the station
/// mean as temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSimConfig {
    pub start: NaiveDate,
    pub days: usize,
    pub hour: u32,
    pub stations: usize,
    pub station_noise_sd: f64,
    pub temp_cuts: (f64, f64),
    pub noise_sd: f64,
    pub beta_s: Vec<f64>,
    pub beta_t: Vec<f64>,
    pub seed: u64,
}

impl Default for LoadSimConfig {
    /// Two calendar years from 2004-01-01, three stations.
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2004, 1, 1).expect("valid date"),
            days: 731,
            hour: 8,
            stations: 3,
            station_noise_sd: 1.0,
            temp_cuts: (8.0, 14.0),
            noise_sd: 6.0,
            beta_s: vec![101.0, 29.0, -14.0, -3.1, -1.4, 2.6],
            beta_t: vec![100.0, 30.0, -15.0, -3.0, -1.5, 2.5],
            seed: 0,
        }
    }
}

impl LoadSimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_s.len() != ELECTRICITY_DIM || self.beta_t.len() != ELECTRICITY_DIM {
            return Err(Error::InvalidConfig(format!("load model needs {ELECTRICITY_DIM} coefficients")));
        }
        if self.days == 0 || self.stations == 0 || self.hour > 24 {
            return Err(Error::InvalidConfig("days and stations must be positive, hour in 0..=24".into()));
        }
        if !(self.noise_sd >= 0.0 && self.station_noise_sd >= 0.0) {
            return Err(Error::InvalidConfig("noise levels must be nonnegative".into()));
        }
        ElectricityFeatureSpec::new(self.temp_cuts, self.start).map(|_| ())
    }
}

/// Per-day station readings around `15 − 12 cos(2π(doy − 20)/365) + N(0, 3²)`,
/// recentred so their mean is the daily path value.
pub fn simulate_stations(cfg: &LoadSimConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let weather = Normal::new(0.0, 3.0).expect("positive sd");
    let station = Normal::new(0.0, cfg.station_noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let m = cfg.stations as f64;
    Ok((0..cfg.days)
        .map(|i| {
            let doy = (cfg.start + Duration::days(i as i64)).ordinal() as f64;
            let theta = 15.0 - 12.0 * (2.0 * PI * (doy - 20.0) / 365.0).cos() + weather.sample(rng);
            let mut temps: Vec<f64> = (0..cfg.stations).map(|_| theta + station.sample(rng)).collect();
            let shift = theta - temps.iter().sum::<f64>() / m;
            temps.iter_mut().for_each(|t| *t += shift);
            temps
        })
        .collect())
}

fn simulate_zone(
    cfg: &LoadSimConfig,
    beta: &[f64],
    stations: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LoadRecord>> {
    let spec = ElectricityFeatureSpec::new(cfg.temp_cuts, cfg.start)?;
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(stations
        .iter()
        .enumerate()
        .map(|(i, temps)| {
            let date = cfg.start + Duration::days(i as i64);
            let theta = temps.iter().sum::<f64>() / temps.len() as f64;
            let feats = spec.features(date, theta);
            let load = feats.iter().zip(beta).map(|(f, b)| f * b).sum::<f64>() + noise.sample(rng);
            LoadRecord {
                timestamp: date.and_hms_opt(0, 0, 0).expect("midnight") + Duration::hours(cfg.hour as i64),
                load,
                temperature: theta,
            }
        })
        .collect())
}

/// Simulated source and target zones sharing one weather path.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedLoads {
    pub source: Vec<LoadRecord>,
    pub target: Vec<LoadRecord>,
    pub stations: Vec<Vec<f64>>,
}

impl SimulatedLoads {
    pub fn rows(&self, records: &[LoadRecord]) -> Vec<LoadRow> {
        records
            .iter()
            .zip(&self.stations)
            .map(|(r, temps)| {
                let date = r.date();
                let hour = (r.timestamp - date.and_hms_opt(0, 0, 0).expect("midnight")).num_hours() as u32;
                LoadRow {
                    date,
                    hour,
                    load: r.load,
                    temps: temps.clone(),
                }
            })
            .collect()
    }
}

pub fn simulate_loads(cfg: &LoadSimConfig) -> Result<SimulatedLoads> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stations = simulate_stations(cfg, &mut rng)?;
    let source = simulate_zone(cfg, &cfg.beta_s, &stations, &mut rng)?;
    let target = simulate_zone(cfg, &cfg.beta_t, &stations, &mut rng)?;
    Ok(SimulatedLoads {
        source,
        target,
        stations,
    })
}
