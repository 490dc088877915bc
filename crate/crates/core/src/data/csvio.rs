//! CSV formats.
//!
//! * Dataset: header `x1,…,xD,y`.
//! * Inputs: header `x1,…,xD`, an optional trailing `y` column is ignored.
//! * Load: header `date,hour,<load columns>,temp1,…,tempM`, ISO-8601 dates.
//!   The load column is `load` by default; a file with several zone columns
//!   is read one zone at a time.
//!
//! Row numbers in errors count data rows from 1 (the header is row 0).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::electricity::LoadRecord;
use crate::error::{Error, Result};
use crate::model::{Dataset, TaskTag};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn csv_err(e: csv::Error, row: usize) -> Error {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            row,
            column: String::new(),
            reason: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::Parse {
            row,
            column: String::new(),
            reason: e.to_string(),
        },
    }
}

fn parse_f64(cell: &str, row: usize, column: &str) -> Result<f64> {
    if cell.is_empty() {
        return Err(Error::Parse {
            row,
            column: column.to_string(),
            reason: "missing value".into(),
        });
    }
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        reason: format!("'{cell}' is not a number"),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse {
            row,
            column: column.to_string(),
            reason: "non-finite value".into(),
        })
    }
}

fn feature_columns(headers: &csv::StringRecord, allow_y: bool) -> Result<(usize, bool)> {
    let names: Vec<&str> = headers.iter().collect();
    let has_y = names.last() == Some(&"y");
    if !allow_y && !has_y {
        return Err(Error::SchemaMismatch("last column must be 'y'".into()));
    }
    let d = names.len() - usize::from(has_y);
    if d == 0 {
        return Err(Error::SchemaMismatch("no feature columns".into()));
    }
    for (j, name) in names[..d].iter().enumerate() {
        if *name != format!("x{}", j + 1) {
            return Err(Error::SchemaMismatch(format!(
                "column {} is '{name}', expected 'x{}'",
                j + 1,
                j + 1
            )));
        }
    }
    Ok((d, has_y))
}

fn read_table<R: Read>(r: R, allow_missing_y: bool) -> Result<(DMatrix<f64>, Option<DVector<f64>>)> {
    let mut rdr = reader(r);
    let headers = rdr.headers().map_err(|e| csv_err(e, 0))?.clone();
    let (d, has_y) = feature_columns(&headers, allow_missing_y)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_err(e, row))?;
        for j in 0..d {
            xs.push(parse_f64(&rec[j], row, &headers[j])?);
        }
        if has_y {
            ys.push(parse_f64(&rec[d], row, "y")?);
        }
    }
    let n = ys.len().max(xs.len() / d);
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let x = DMatrix::from_row_slice(n, d, &xs);
    Ok((x, has_y.then(|| DVector::from_vec(ys))))
}

pub fn read_dataset<R: Read>(r: R, tag: TaskTag) -> Result<Dataset> {
    let (x, y) = read_table(r, false)?;
    Dataset::new(x, y.expect("schema requires y"), tag)
}

pub fn read_dataset_csv(path: &Path, tag: TaskTag) -> Result<Dataset> {
    read_dataset(open(path)?, tag)
}

/// Input rows to evaluate; a `y` column, if present, is dropped.
pub fn read_inputs<R: Read>(r: R) -> Result<DMatrix<f64>> {
    Ok(read_table(r, true)?.0)
}

pub fn read_inputs_csv(path: &Path) -> Result<DMatrix<f64>> {
    read_inputs(open(path)?)
}

pub fn write_dataset<W: Write>(data: &Dataset, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<String> = (1..=data.d()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    wtr.write_record(&header).map_err(io)?;
    for (row, y) in data.x.row_iter().zip(data.y.iter()) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(y.to_string());
        wtr.write_record(&rec).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Temperature used for a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Station {
    Mean,
    /// 1-based station number (`temp<i>`).
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadCsvOptions {
    /// Keep only rows at this hour; `None` keeps every row.
    pub hour: Option<u32>,
    pub station: Station,
    pub load_column: String,
}

impl Default for LoadCsvOptions {
    fn default() -> Self {
        Self {
            hour: Some(8),
            station: Station::Mean,
            load_column: "load".into(),
        }
    }
}

struct LoadLayout {
    load: usize,
    temps: Vec<usize>,
}

fn load_layout(headers: &csv::StringRecord, opts: &LoadCsvOptions) -> Result<LoadLayout> {
    if headers.get(0) != Some("date") || headers.get(1) != Some("hour") {
        return Err(Error::SchemaMismatch("load files start with 'date,hour'".into()));
    }
    let load = headers
        .iter()
        .position(|h| h == opts.load_column)
        .filter(|&i| i >= 2)
        .ok_or_else(|| Error::SchemaMismatch(format!("no load column '{}'", opts.load_column)))?;
    let temps: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("temp"))
        .map(|(i, _)| i)
        .collect();
    if temps.is_empty() {
        return Err(Error::SchemaMismatch("no temperature columns 'temp1..tempM'".into()));
    }
    for (m, &i) in temps.iter().enumerate() {
        if headers[i] != *format!("temp{}", m + 1) {
            return Err(Error::SchemaMismatch(format!(
                "temperature column '{}' out of order, expected 'temp{}'",
                &headers[i],
                m + 1
            )));
        }
    }
    let temps = match opts.station {
        Station::Mean => temps,
        Station::Index(s) if s >= 1 && s <= temps.len() => vec![temps[s - 1]],
        Station::Index(s) => {
            return Err(Error::SchemaMismatch(format!(
                "station {s} requested, file has {}",
                temps.len()
            )))
        }
    };
    Ok(LoadLayout { load, temps })
}

pub fn read_load_records<R: Read>(r: R, opts: &LoadCsvOptions) -> Result<Vec<LoadRecord>> {
    let mut rdr = reader(r);
    let headers = rdr.headers().map_err(|e| csv_err(e, 0))?.clone();
    let layout = load_layout(&headers, opts)?;
    let mut out: Vec<LoadRecord> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_err(e, row))?;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            row,
            column: "date".into(),
            reason: e.to_string(),
        })?;
        let hour: u32 = rec[1].parse().ok().filter(|h| *h <= 24).ok_or_else(|| Error::Parse {
            row,
            column: "hour".into(),
            reason: format!("'{}' is not an hour in 0..=24", &rec[1]),
        })?;
        if opts.hour.is_some_and(|h| h != hour) {
            continue;
        }
        let load = parse_f64(&rec[layout.load], row, &headers[layout.load])?;
        let mut temp_sum = 0.0;
        for &j in &layout.temps {
            temp_sum += parse_f64(&rec[j], row, &headers[j])?;
        }
        let timestamp = date.and_hms_opt(0, 0, 0).expect("midnight") + Duration::hours(hour as i64);
        if out.last().is_some_and(|p| p.timestamp >= timestamp) {
            return Err(Error::Parse {
                row,
                column: "date".into(),
                reason: "timestamps must be strictly increasing".into(),
            });
        }
        out.push(LoadRecord {
            timestamp,
            load,
            temperature: temp_sum / layout.temps.len() as f64,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

pub fn read_load_csv(path: &Path, opts: &LoadCsvOptions) -> Result<Vec<LoadRecord>> {
    read_load_records(open(path)?, opts)
}

/// One row of a load file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadRow {
    pub date: NaiveDate,
    pub hour: u32,
    pub load: f64,
    pub temps: Vec<f64>,
}

pub fn write_load_rows<W: Write>(rows: &[LoadRow], w: W) -> Result<()> {
    let m = rows.first().map_or(0, |r| r.temps.len());
    if m == 0 || rows.iter().any(|r| r.temps.len() != m) {
        return Err(Error::SchemaMismatch("every row needs the same non-zero number of stations".into()));
    }
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec!["date".to_string(), "hour".into(), "load".into()];
    header.extend((1..=m).map(|i| format!("temp{i}")));
    wtr.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![r.date.format("%Y-%m-%d").to_string(), r.hour.to_string(), r.load.to_string()];
        rec.extend(r.temps.iter().map(f64::to_string));
        wtr.write_record(&rec).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsvSchema {
    Dataset(TaskTag),
    Load(LoadCsvOptions),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CsvContents {
    Dataset(Dataset),
    Load(Vec<LoadRecord>),
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<CsvContents> {
    match schema {
        CsvSchema::Dataset(tag) => read_dataset_csv(path, *tag).map(CsvContents::Dataset),
        CsvSchema::Load(opts) => read_load_csv(path, opts).map(CsvContents::Load),
    }
}
