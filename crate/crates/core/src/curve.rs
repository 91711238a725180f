//! Rate-distortion points and curves, with the CSV / JSON curve files.
//!
//! CSV header is `beta,distortion,rate,log_base`, one row per point. `beta`
//! is empty for curves that are not produced by a slope sweep. The JSON file
//! is an array of objects with the same four keys (`beta` may be `null`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One point of a rate-distortion curve. `rate` is in units of
/// `log_base` per text symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RDPoint {
    pub beta: Option<f64>,
    pub distortion: f64,
    pub rate: f64,
    pub log_base: f64,
}

impl RDPoint {
    pub fn new(beta: Option<f64>, distortion: f64, rate: f64, log_base: f64) -> Self {
        Self {
            beta,
            distortion: distortion.max(0.0),
            rate: rate.max(0.0),
            log_base,
        }
    }

    /// Converts `information` nats over texts of mean length `mean_length`
    /// into a per-symbol rate in base `log_base`.
    pub fn from_nats(
        beta: Option<f64>,
        distortion: f64,
        information: f64,
        mean_length: f64,
        log_base: f64,
    ) -> Self {
        Self::new(
            beta,
            distortion,
            information / (mean_length * log_base.ln()),
            log_base,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidOption(format!("unknown format {other:?}"))),
        }
    }
}

impl OutputFormat {
    /// Guesses from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

/// Points ordered by ascending distortion.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RDCurve {
    points: Vec<RDPoint>,
}

impl RDCurve {
    /// Sorts `points` by distortion (stable for ties).
    pub fn new(mut points: Vec<RDPoint>) -> Self {
        points.sort_by(|a, b| a.distortion.total_cmp(&b.distortion));
        Self { points }
    }

    pub fn points(&self) -> &[RDPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Piecewise-linear rate at distortion `d`.
    ///
    /// Beyond the largest swept distortion the last rate is returned (the
    /// curve is non-increasing). Below the smallest one the value is unknown
    /// and `None` is returned.
    pub fn rate_at(&self, d: f64) -> Option<f64> {
        let first = self.points.first()?;
        if d < first.distortion {
            return None;
        }
        let i = self.points.partition_point(|p| p.distortion <= d);
        let lo = &self.points[i - 1];
        match self.points.get(i) {
            None => Some(lo.rate),
            Some(hi) => {
                let w = (d - lo.distortion) / (hi.distortion - lo.distortion);
                Some(lo.rate + w * (hi.rate - lo.rate))
            }
        }
    }

    /// Pairs of points where a larger distortion has a larger rate (beyond `tol`).
    pub fn monotonicity_violations(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.points.iter().enumerate() {
            for (j, b) in self.points.iter().enumerate().skip(i + 1) {
                if a.distortion < b.distortion && a.rate < b.rate - tol {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Indices of points lying above the chord of their neighbours (beyond `tol`).
    /// Neighbours with equal distortion are skipped.
    pub fn convexity_violations(&self, tol: f64) -> Vec<usize> {
        let p = &self.points;
        let mut out = Vec::new();
        for i in 1..p.len().saturating_sub(1) {
            let (a, b, c) = (&p[i - 1], &p[i], &p[i + 1]);
            if !(a.distortion < b.distortion && b.distortion < c.distortion) {
                continue;
            }
            let w = (b.distortion - a.distortion) / (c.distortion - a.distortion);
            let chord = a.rate + w * (c.rate - a.rate);
            if b.rate > chord + tol {
                out.push(i);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.points {
            w.serialize(p)?;
        }
        if self.points.is_empty() {
            w.write_record(["beta", "distortion", "rate", "log_base"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let points = r
            .deserialize()
            .collect::<std::result::Result<Vec<RDPoint>, _>>()?;
        Ok(Self::new(points))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.points)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    pub fn write<W: Write>(&self, mut writer: W, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(writer),
            OutputFormat::Json => {
                writer.write_all(self.to_json()?.as_bytes())?;
                writer.write_all(b"\n")?;
                Ok(())
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w, format)?;
        w.flush()?;
        Ok(())
    }

    /// Loads a curve file, choosing the parser from the extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        match OutputFormat::from_path(path) {
            OutputFormat::Csv => Self::read_csv(BufReader::new(File::open(path)?)),
            OutputFormat::Json => Self::from_json(&std::fs::read_to_string(path)?),
        }
    }
}
