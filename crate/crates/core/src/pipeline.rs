//! Dataset-level approximation from text embeddings.
//!
//! Records are grouped into token-length bins, each bin's sample covariance
//! is eigendecomposed, and the resulting spectra are water-filled. The same
//! grid also drives the evaluation of real summarizers from paired
//! text/summary embeddings.
//!
//! # SRDE files
//!
//! All integers little-endian, no padding:
//!
//! ```text
//! "SRDE"  u32 version = 1  u64 n  u32 m
//! n x ( u32 token_length  m x f32 )
//! ```

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::RDCurve;
use crate::error::{Error, Result};
use crate::gaussian::{eig_spectrum, gaussian_curve, SpectrumBin, SpectrumSet};

pub const SRDE_MAGIC: &[u8; 4] = b"SRDE";
pub const SRDE_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4;

/// Default minimum number of records per length bin.
pub const DEFAULT_MIN_BIN: usize = 2000;

/// Token lengths and embedding vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    lengths: Vec<u32>,
    data: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(lengths: Vec<u32>, vectors: &[Vec<f32>]) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "embedding dimension",
                expected: dim,
                found: bad.len(),
            });
        }
        Self::from_flat(dim, lengths, vectors.concat())
    }

    /// `data` holds `lengths.len()` consecutive vectors of `dim` values.
    pub fn from_flat(dim: usize, lengths: Vec<u32>, data: Vec<f32>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidOption("embedding set is empty".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidOption("embedding dimension is zero".into()));
        }
        if data.len() != lengths.len() * dim {
            return Err(Error::DimensionMismatch {
                what: "embedding values",
                expected: lengths.len() * dim,
                found: data.len(),
            });
        }
        if let Some(i) = lengths.iter().position(|&l| l == 0) {
            return Err(Error::InvalidOption(format!(
                "record {i} has token length 0"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding values"));
        }
        Ok(Self { dim, lengths, data })
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn mean_length(&self) -> f64 {
        self.lengths.iter().map(|&l| l as f64).sum::<f64>() / self.len() as f64
    }

    /// Records in the order given by `indices`.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut lengths = Vec::with_capacity(indices.len());
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidOption(format!(
                    "record index {i} out of range for {} records",
                    self.len()
                )));
            }
            lengths.push(self.lengths[i]);
            data.extend_from_slice(self.vector(i));
        }
        Self::from_flat(self.dim, lengths, data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.len() * (4 + 4 * self.dim));
        out.extend_from_slice(SRDE_MAGIC);
        out.extend_from_slice(&SRDE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (len, v) in self.lengths.iter().zip(self.vectors()) {
            out.extend_from_slice(&len.to_le_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != SRDE_MAGIC {
            return Err(parse_error(0, format!("bad magic {magic:?}")));
        }
        let version = r.u32("version")?;
        if version != SRDE_VERSION {
            return Err(parse_error(4, format!("unsupported version {version}")));
        }
        let n = r.u64("record count")?;
        let m = r.u32("dimension")? as usize;
        if n == 0 {
            return Err(parse_error(8, "record count is zero".into()));
        }
        if m == 0 {
            return Err(parse_error(16, "dimension is zero".into()));
        }
        let record = 4 + 4 * m as u64;
        let needed = (HEADER_LEN as u64).saturating_add(n.saturating_mul(record));
        if (bytes.len() as u64) < needed {
            let complete = (bytes.len() - HEADER_LEN) as u64 / record;
            return Err(parse_error(
                HEADER_LEN as u64 + complete * record,
                format!("truncated payload: header declares {n} records, found {complete}"),
            ));
        }
        if (bytes.len() as u64) > needed {
            return Err(parse_error(
                needed,
                "trailing bytes after last record".into(),
            ));
        }
        let n = n as usize;
        let mut lengths = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * m);
        for _ in 0..n {
            let at = r.pos as u64;
            let len = r.u32("token length")?;
            if len == 0 {
                return Err(parse_error(at, "token length is zero".into()));
            }
            lengths.push(len);
            for _ in 0..m {
                let at = r.pos as u64;
                let x = f32::from_le_bytes(r.take(4, "value")?.try_into().unwrap());
                if !x.is_finite() {
                    return Err(parse_error(at, format!("non-finite value {x}")));
                }
                data.push(x);
            }
        }
        Ok(Self {
            dim: m,
            lengths,
            data,
        })
    }
}

fn parse_error(offset: u64, message: String) -> Error {
    Error::Parse { offset, message }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(parse_error(
                self.pos as u64,
                format!("unexpected end of file reading {what}"),
            ));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    EmbeddingSet::from_bytes(&std::fs::read(path)?)
}

pub fn write_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&set.to_bytes())?;
    w.flush()?;
    Ok(())
}

/// Half-open token-length bins `[edges[i], edges[i + 1])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthGrid {
    pub edges: Vec<u32>,
    pub counts: Vec<usize>,
    /// Fewer records than the requested minimum; everything is in one bin.
    pub undersized: bool,
}

impl LengthGrid {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_of(&self, length: u32) -> Option<usize> {
        if length < self.edges[0] || length >= *self.edges.last()? {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= length) - 1)
    }

    /// Record indices per bin, in input order.
    pub fn assign(&self, lengths: &[u32]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_bins()];
        for (i, &l) in lengths.iter().enumerate() {
            if let Some(b) = self.bin_of(l) {
                out[b].push(i);
            }
        }
        out
    }
}

/// Equal-count bins: sorted lengths are accumulated until a bin holds at
/// least `min_bin` records, and the bin closes before the next distinct
/// length. A short remainder is merged into the previous bin.
pub fn build_length_grid(lengths: &[u32], min_bin: usize) -> Result<LengthGrid> {
    if min_bin == 0 {
        return Err(Error::InvalidOption("min_bin must be positive".into()));
    }
    if lengths.is_empty() {
        return Err(Error::InvalidOption("no lengths to bin".into()));
    }
    let mut histogram: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in lengths {
        *histogram.entry(l).or_default() += 1;
    }
    let first = *histogram.keys().next().unwrap();
    let last = *histogram.keys().next_back().unwrap();
    let upper = last
        .checked_add(1)
        .ok_or_else(|| Error::InvalidOption(format!("token length {last} is too large")))?;
    if lengths.len() < min_bin {
        return Ok(LengthGrid {
            edges: vec![first, upper],
            counts: vec![lengths.len()],
            undersized: true,
        });
    }

    let mut edges = vec![first];
    let mut counts = Vec::new();
    let mut acc = 0;
    let mut iter = histogram.iter().peekable();
    while let Some((_, &c)) = iter.next() {
        acc += c;
        if acc >= min_bin {
            if let Some((&next, _)) = iter.peek() {
                edges.push(next);
                counts.push(acc);
                acc = 0;
            }
        }
    }
    if acc >= min_bin || counts.is_empty() {
        counts.push(acc);
    } else if acc > 0 {
        edges.pop();
        *counts.last_mut().unwrap() += acc;
    }
    edges.push(upper);
    Ok(LengthGrid {
        edges,
        counts,
        undersized: false,
    })
}

/// Unbiased sample covariance about the sample mean, exactly symmetric.
pub fn sample_covariance<V: AsRef<[f32]>>(vectors: &[V]) -> Result<DMatrix<f64>> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let m = vectors[0].as_ref().len();
    let mut x = DMatrix::<f64>::zeros(n, m);
    for (i, v) in vectors.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != m {
            return Err(Error::DimensionMismatch {
                what: "covariance sample dimension",
                expected: m,
                found: v.len(),
            });
        }
        for (j, &val) in v.iter().enumerate() {
            x[(i, j)] = val as f64;
        }
    }
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }
    let mut cov = x.tr_mul(&x) / (n - 1) as f64;
    for i in 0..m {
        for j in i + 1..m {
            cov[(j, i)] = cov[(i, j)];
        }
    }
    Ok(cov)
}

/// Length grid and per-bin spectra for an embedding set. Bin weights are
/// record fractions; the mean length is over all records.
pub fn estimate_spectra(
    set: &EmbeddingSet,
    min_bin: usize,
    log_base: f64,
) -> Result<(SpectrumSet, LengthGrid)> {
    let grid = build_length_grid(set.lengths(), min_bin)?;
    let members = grid.assign(set.lengths());
    let n = set.len() as f64;
    let bins = members
        .par_iter()
        .map(|idx| {
            let vectors: Vec<&[f32]> = idx.iter().map(|&i| set.vector(i)).collect();
            let eigenvalues = eig_spectrum(&sample_covariance(&vectors)?)?;
            Ok(SpectrumBin {
                weight: idx.len() as f64 / n,
                eigenvalues,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spectra = SpectrumSet::new(bins, set.mean_length(), log_base)?;
    Ok((spectra, grid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxCurve {
    pub curve: RDCurve,
    pub spectra: SpectrumSet,
    pub grid: LengthGrid,
}

/// Gaussian approximation of the summarizer rate-distortion curve.
pub fn approx_rs_curve(
    set: &EmbeddingSet,
    min_bin: usize,
    distortion_grid: &[f64],
    log_base: f64,
) -> Result<ApproxCurve> {
    let (spectra, grid) = estimate_spectra(set, min_bin, log_base)?;
    let curve = gaussian_curve(&spectra, distortion_grid)?;
    Ok(ApproxCurve {
        curve,
        spectra,
        grid,
    })
}

/// Text index to summary index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    summary_of: Vec<Option<usize>>,
}

impl Pairing {
    pub fn identity(n: usize) -> Self {
        Self {
            summary_of: (0..n).map(Some).collect(),
        }
    }

    /// `(text, summary)` pairs over `n_texts` texts; a later pair for the
    /// same text replaces an earlier one.
    pub fn from_pairs(n_texts: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut summary_of = vec![None; n_texts];
        for &(t, s) in pairs {
            if t >= n_texts {
                return Err(Error::InvalidOption(format!(
                    "text index {t} out of range for {n_texts} texts"
                )));
            }
            summary_of[t] = Some(s);
        }
        Ok(Self { summary_of })
    }

    pub fn len(&self) -> usize {
        self.summary_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summary_of.is_empty()
    }

    pub fn summary_of(&self, text: usize) -> Option<usize> {
        self.summary_of.get(text).copied().flatten()
    }
}

/// Operating point of a real summarizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub distortion: f64,
    pub rate: f64,
    /// Pairs whose summary is longer than its text.
    pub violations: usize,
}

impl EvalPoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// `D` is the mean squared Euclidean distance over pairs. `R` is the
/// largest, over occupied text-length bins, of the mean summary/text
/// token-length ratio.
pub fn eval_summarizer_embeddings(
    texts: &EmbeddingSet,
    summaries: &EmbeddingSet,
    pairing: &Pairing,
    min_bin: usize,
) -> Result<EvalPoint> {
    if texts.dim() != summaries.dim() {
        return Err(Error::DimensionMismatch {
            what: "summary embedding dimension",
            expected: texts.dim(),
            found: summaries.dim(),
        });
    }
    if pairing.len() != texts.len() {
        return Err(Error::DimensionMismatch {
            what: "pairing size",
            expected: texts.len(),
            found: pairing.len(),
        });
    }
    let missing: Vec<usize> = (0..texts.len())
        .filter(|&t| pairing.summary_of(t).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Unpaired(missing));
    }
    let pairs: Vec<(usize, usize)> = (0..texts.len())
        .map(|t| (t, pairing.summary_of(t).unwrap()))
        .collect();
    if let Some(&(_, s)) = pairs.iter().find(|&&(_, s)| s >= summaries.len()) {
        return Err(Error::InvalidOption(format!(
            "summary index {s} out of range for {} summaries",
            summaries.len()
        )));
    }

    let mut total = 0.0;
    let mut violations = 0;
    for &(t, s) in &pairs {
        total += texts
            .vector(t)
            .iter()
            .zip(summaries.vector(s))
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum::<f64>();
        if summaries.lengths()[s] > texts.lengths()[t] {
            violations += 1;
        }
    }

    let grid = build_length_grid(texts.lengths(), min_bin)?;
    let mut ratio_sum = vec![0.0; grid.n_bins()];
    let mut ratio_count = vec![0usize; grid.n_bins()];
    for &(t, s) in &pairs {
        let b = grid
            .bin_of(texts.lengths()[t])
            .expect("grid covers all texts");
        ratio_sum[b] += summaries.lengths()[s] as f64 / texts.lengths()[t] as f64;
        ratio_count[b] += 1;
    }
    let rate = ratio_sum
        .iter()
        .zip(&ratio_count)
        .filter(|(_, &c)| c > 0)
        .map(|(&s, &c)| s / c as f64)
        .fold(0.0, f64::max);

    Ok(EvalPoint {
        distortion: total / pairs.len() as f64,
        rate,
        violations,
    })
}
