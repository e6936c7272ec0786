//! Price ingestion, percent log-returns and descriptive statistics.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trading days per year used for annualization.
pub const TRADING_DAYS: f64 = 252.0;

/// Dated daily closing prices, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
}

impl PriceSeries {
    /// Sorts rows by date and validates them.
    pub fn new(mut rows: Vec<(NaiveDate, f64)>) -> Result<Self> {
        rows.sort_by_key(|r| r.0);
        if rows.len() < 2 {
            return Err(Error::InvalidInput("price series needs at least 2 rows".into()));
        }
        for (i, w) in rows.windows(2).enumerate() {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(format!(
                    "duplicate date {} (sorted row {})",
                    w[1].0,
                    i + 2
                )));
            }
        }
        for (i, (d, c)) in rows.iter().enumerate() {
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "non-positive close {c} on {d} (sorted row {})",
                    i + 1
                )));
            }
        }
        let (dates, closes) = rows.into_iter().unzip();
        Ok(PriceSeries { dates, closes })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

/// Percent log-returns, optionally dated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if !dates.is_empty() && dates.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} dates for {} returns",
                dates.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "return".into(),
                t: i,
            });
        }
        Ok(ReturnSeries { dates, values })
    }

    /// Returns without calendar dates (e.g. simulated data).
    pub fn undated(values: Vec<f64>) -> Result<Self> {
        ReturnSeries::new(Vec::new(), values)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_dated(&self) -> bool {
        !self.dates.is_empty()
    }
}

/// `100 · ln(P_{t+1}/P_t)`, dated by the later day.
pub fn to_log_returns(p: &PriceSeries) -> ReturnSeries {
    let values = p
        .closes
        .windows(2)
        .map(|w| 100.0 * (w[1] / w[0]).ln())
        .collect();
    ReturnSeries {
        dates: p.dates[1..].to_vec(),
        values,
    }
}

/// Sample moments with the 1/N divisor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// `None` when the variance is zero.
    pub skewness: Option<f64>,
    /// Plain standardized fourth moment (3 for the Normal); `None` when the variance is zero.
    pub kurtosis: Option<f64>,
    pub annualized_vol_pct: f64,
}

pub fn annualized_vol_pct(variance: f64) -> f64 {
    TRADING_DAYS.sqrt() * variance.sqrt()
}

pub fn describe(values: &[f64]) -> Result<DescriptiveStats> {
    let n = values.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "describe needs at least 4 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    } else {
        (None, None)
    };
    Ok(DescriptiveStats {
        n,
        mean,
        variance: m2,
        skewness,
        kurtosis,
        annualized_vol_pct: annualized_vol_pct(m2),
    })
}

#[derive(Deserialize)]
struct PriceRow {
    date: String,
    close: f64,
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::InvalidInput(format!("bad date `{s}`: {e}")))
}

/// Reads a `date,close` CSV (rows in any order).
pub fn read_prices<R: Read>(reader: R) -> Result<PriceSeries> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<PriceRow>().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidInput(format!("row {}: {e}", i + 1)))?;
        rows.push((parse_date(&rec.date)?, rec.close));
    }
    PriceSeries::new(rows)
}

pub fn read_prices_file(path: &Path) -> Result<PriceSeries> {
    read_prices(std::fs::File::open(path)?)
}

/// Writes a `date,return_pct` CSV; undated series use the 1-based observation index.
pub fn write_returns<W: Write>(r: &ReturnSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "return_pct"])?;
    for (i, v) in r.values.iter().enumerate() {
        let d = match r.dates.get(i) {
            Some(d) => d.format("%Y-%m-%d").to_string(),
            None => (i + 1).to_string(),
        };
        w.write_record([d, format!("{v:.10}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_returns_file(r: &ReturnSeries, path: &Path) -> Result<()> {
    write_returns(r, std::fs::File::create(path)?)
}

/// Reads a `date,return_pct` CSV. The date column may hold ISO dates or observation indices.
pub fn read_returns<R: Read>(reader: R) -> Result<ReturnSeries> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut dated = true;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (d, v) = match (rec.get(0), rec.get(1)) {
            (Some(d), Some(v)) => (d, v),
            (Some(v), None) => {
                dated = false;
                ("", v)
            }
            _ => return Err(Error::InvalidInput(format!("row {}: missing fields", i + 1))),
        };
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| Error::InvalidInput(format!("row {}: bad return `{v}`: {e}", i + 1)))?;
        values.push(v);
        if dated {
            match parse_date(d) {
                Ok(d) => dates.push(d),
                Err(_) => dated = false,
            }
        }
    }
    if !dated {
        dates.clear();
    }
    ReturnSeries::new(dates, values)
}

pub fn read_returns_file(path: &Path) -> Result<ReturnSeries> {
    read_returns(std::fs::File::open(path)?)
}
