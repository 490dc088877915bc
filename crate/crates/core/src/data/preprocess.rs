//! Linear detrending and standardization of load series.
//!
//! Parameters are estimated on one window and can be applied to (or inverted
//! on) any other, so a test period is transformed with training statistics.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::data::electricity::LoadRecord;
use crate::error::{Error, Result};

/// `load ≈ intercept + slope·τ`, with `τ` in days since `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendParams {
    pub intercept: f64,
    pub slope: f64,
    pub origin: NaiveDateTime,
}

impl TrendParams {
    fn days(&self, r: &LoadRecord) -> f64 {
        (r.timestamp - self.origin).num_seconds() as f64 / 86_400.0
    }

    pub fn value(&self, r: &LoadRecord) -> f64 {
        self.intercept + self.slope * self.days(r)
    }

    pub fn apply(&self, records: &[LoadRecord]) -> Vec<LoadRecord> {
        records
            .iter()
            .map(|r| LoadRecord {
                load: r.load - self.value(r),
                ..*r
            })
            .collect()
    }

    pub fn invert(&self, records: &[LoadRecord]) -> Vec<LoadRecord> {
        records
            .iter()
            .map(|r| LoadRecord {
                load: r.load + self.value(r),
                ..*r
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

impl ScaleParams {
    pub fn apply(&self, records: &[LoadRecord]) -> Vec<LoadRecord> {
        records
            .iter()
            .map(|r| LoadRecord {
                load: (r.load - self.mean) / self.sd,
                ..*r
            })
            .collect()
    }

    pub fn invert(&self, records: &[LoadRecord]) -> Vec<LoadRecord> {
        records
            .iter()
            .map(|r| LoadRecord {
                load: r.load * self.sd + self.mean,
                ..*r
            })
            .collect()
    }
}

fn require_two(records: &[LoadRecord]) -> Result<()> {
    match records.len() {
        0 => Err(Error::EmptyInput),
        1 => Err(Error::TooFewSamples { n: 1, d: 1 }),
        _ => Ok(()),
    }
}

/// OLS line of load against time.
pub fn fit_trend(records: &[LoadRecord]) -> Result<TrendParams> {
    require_two(records)?;
    let origin = records.iter().map(|r| r.timestamp).min().expect("non-empty");
    let mut params = TrendParams {
        intercept: 0.0,
        slope: 0.0,
        origin,
    };
    let n = records.len() as f64;
    let ts: Vec<f64> = records.iter().map(|r| params.days(r)).collect();
    let t_mean = ts.iter().sum::<f64>() / n;
    let y_mean = records.iter().map(|r| r.load).sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all records share one timestamp".into()));
    }
    let sxy: f64 = ts.iter().zip(records).map(|(t, r)| (t - t_mean) * (r.load - y_mean)).sum();
    params.slope = sxy / sxx;
    params.intercept = y_mean - params.slope * t_mean;
    Ok(params)
}

pub fn detrend(records: &[LoadRecord]) -> Result<(Vec<LoadRecord>, TrendParams)> {
    let params = fit_trend(records)?;
    Ok((params.apply(records), params))
}

pub fn fit_scale(records: &[LoadRecord]) -> Result<ScaleParams> {
    require_two(records)?;
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.load).sum::<f64>() / n;
    let var = records.iter().map(|r| (r.load - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::ConstantSeries);
    }
    Ok(ScaleParams { mean, sd: var.sqrt() })
}

pub fn normalize(records: &[LoadRecord]) -> Result<(Vec<LoadRecord>, ScaleParams)> {
    let params = fit_scale(records)?;
    Ok((params.apply(records), params))
}

/// Trend and scale fitted on one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub trend: TrendParams,
    pub scale: ScaleParams,
}

impl Preprocessor {
    /// Detrend, then standardize the detrended series.
    pub fn fit(records: &[LoadRecord]) -> Result<Self> {
        let (detrended, trend) = detrend(records)?;
        let scale = fit_scale(&detrended)?;
        Ok(Self { trend, scale })
    }

    pub fn apply(&self, records: &[LoadRecord]) -> Vec<LoadRecord> {
        self.scale.apply(&self.trend.apply(records))
    }

    pub fn invert(&self, records: &[LoadRecord]) -> Vec<LoadRecord> {
        self.trend.invert(&self.scale.invert(records))
    }
}
