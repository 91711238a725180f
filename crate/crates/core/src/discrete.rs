//! Finite text sources, summarizer kernels and distortion matrices.
//!
//! A [`DiscreteSource`] is a finite set of strings with a probability mass
//! function. Texts are grouped into length classes `T_l = { t : len(t) = l }`;
//! every quantity in this crate that conditions on text length does so through
//! [`DiscreteSource::length_classes`].
//!
//! Information quantities are returned in nats. Conversion to base `|A|`
//! happens at the reporting boundary (see [`crate::curve::RDPoint`]).

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Tolerance on probability vectors before they are renormalized.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Validates a probability vector and renormalizes it exactly once.
pub(crate) fn normalize_pmf(values: &[f64], what: impl Fn() -> String) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::NotNormalized {
            what: what(),
            sum: 0.0,
        });
    }
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidProbability {
                what: what(),
                value: v,
            });
        }
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::NotNormalized { what: what(), sum });
    }
    Ok(values.iter().map(|v| v / sum).collect())
}

/// `p * ln(p / q)` with `0 ln(0/q) = 0`.
#[inline]
pub(crate) fn plogpq(p: f64, q: f64) -> f64 {
    if p > 0.0 {
        p * (p / q).ln()
    } else {
        0.0
    }
}

/// Texts sharing one length, with the conditional pmf `p(t | l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthClass {
    pub length: usize,
    /// `p(l)`, the total mass of the class.
    pub weight: f64,
    /// Indices of member texts, ascending.
    pub members: Vec<usize>,
    /// `p(t | l)` aligned with `members`.
    pub conditional: Vec<f64>,
}

/// A finite text source over an alphabet of `alphabet_size` letters.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSource {
    texts: Vec<String>,
    lengths: Vec<usize>,
    pmf: Vec<f64>,
    alphabet_size: usize,
}

impl DiscreteSource {
    pub fn new(texts: Vec<String>, pmf: Vec<f64>, alphabet_size: usize) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::InvalidSource("no texts".into()));
        }
        if alphabet_size < 2 {
            return Err(Error::InvalidSource(format!(
                "alphabet size must be at least 2, got {alphabet_size}"
            )));
        }
        if pmf.len() != texts.len() {
            return Err(Error::DimensionMismatch {
                what: "pmf length",
                expected: texts.len(),
                found: pmf.len(),
            });
        }
        let symbols: BTreeSet<char> = texts.iter().flat_map(|t| t.chars()).collect();
        if symbols.len() > alphabet_size {
            return Err(Error::InvalidSource(format!(
                "texts use {} distinct symbols but the alphabet has {alphabet_size}",
                symbols.len()
            )));
        }
        let lengths: Vec<usize> = texts.iter().map(|t| t.chars().count()).collect();
        if let Some(i) = lengths.iter().position(|&l| l == 0) {
            return Err(Error::InvalidSource(format!("text {i} is empty")));
        }
        let pmf = normalize_pmf(&pmf, || "source pmf".to_string())?;
        Ok(Self {
            texts,
            lengths,
            pmf,
            alphabet_size,
        })
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// `E[len(T)]`.
    pub fn mean_length(&self) -> f64 {
        self.pmf
            .iter()
            .zip(&self.lengths)
            .map(|(p, &l)| p * l as f64)
            .sum()
    }

    /// Length classes with positive mass, ordered by ascending length.
    pub fn length_classes(&self) -> Vec<LengthClass> {
        let mut by_length: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.lengths.iter().enumerate() {
            by_length.entry(l).or_default().push(i);
        }
        by_length
            .into_iter()
            .filter_map(|(length, members)| {
                let weight: f64 = members.iter().map(|&i| self.pmf[i]).sum();
                if weight <= 0.0 {
                    return None;
                }
                let conditional = members.iter().map(|&i| self.pmf[i] / weight).collect();
                Some(LengthClass {
                    length,
                    weight,
                    members,
                    conditional,
                })
            })
            .collect()
    }
}

/// Pairwise distortion `d(t, s)` between texts and candidate summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    values: Vec<f64>,
    n_texts: usize,
    summary_lengths: Vec<usize>,
}

impl DistortionMatrix {
    /// `rows[t][s]` is the distortion of summary `s` for text `t`.
    pub fn new(rows: Vec<Vec<f64>>, summary_lengths: Vec<usize>) -> Result<Self> {
        let n_summaries = summary_lengths.len();
        if n_summaries == 0 {
            return Err(Error::InvalidSource("no summaries".into()));
        }
        if let Some(s) = summary_lengths.iter().position(|&l| l == 0) {
            return Err(Error::InvalidSource(format!("summary {s} is empty")));
        }
        let n_texts = rows.len();
        let mut values = Vec::with_capacity(n_texts * n_summaries);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != n_summaries {
                return Err(Error::DimensionMismatch {
                    what: "distortion row length",
                    expected: n_summaries,
                    found: row.len(),
                });
            }
            for (s, v) in row.into_iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistortion {
                        text: t,
                        summary: s,
                        value: v,
                    });
                }
                values.push(v);
            }
        }
        Ok(Self {
            values,
            n_texts,
            summary_lengths,
        })
    }

    pub fn from_summaries<S: AsRef<str>>(rows: Vec<Vec<f64>>, summaries: &[S]) -> Result<Self> {
        let lengths = summaries
            .iter()
            .map(|s| s.as_ref().chars().count())
            .collect();
        Self::new(rows, lengths)
    }

    pub fn n_texts(&self) -> usize {
        self.n_texts
    }

    pub fn n_summaries(&self) -> usize {
        self.summary_lengths.len()
    }

    #[inline]
    pub fn get(&self, text: usize, summary: usize) -> f64 {
        self.values[text * self.n_summaries() + summary]
    }

    pub fn row(&self, text: usize) -> &[f64] {
        let m = self.n_summaries();
        &self.values[text * m..(text + 1) * m]
    }

    pub fn summary_lengths(&self) -> &[usize] {
        &self.summary_lengths
    }

    /// True iff every text has some summary at zero distortion.
    pub fn is_normal(&self) -> bool {
        (0..self.n_texts).all(|t| self.row(t).contains(&0.0))
    }

    /// Summaries no longer than `length`, ascending by index.
    pub fn admissible(&self, length: usize) -> Vec<usize> {
        (0..self.n_summaries())
            .filter(|&s| self.summary_lengths[s] <= length)
            .collect()
    }

    fn check_source(&self, source: &DiscreteSource) -> Result<()> {
        if self.n_texts != source.len() {
            return Err(Error::DimensionMismatch {
                what: "distortion matrix rows",
                expected: source.len(),
                found: self.n_texts,
            });
        }
        Ok(())
    }
}

/// Conditional distribution `p(s | t)` of a one-shot summarizer.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarizerKernel {
    cond: Vec<f64>,
    n_texts: usize,
    n_summaries: usize,
}

impl SummarizerKernel {
    /// Builds a kernel from rows `cond[t][s]`, validating stochasticity and
    /// that no mass falls on a summary longer than its text.
    pub fn new(
        cond: Vec<Vec<f64>>,
        source: &DiscreteSource,
        dmat: &DistortionMatrix,
    ) -> Result<Self> {
        dmat.check_source(source)?;
        if cond.len() != source.len() {
            return Err(Error::DimensionMismatch {
                what: "kernel rows",
                expected: source.len(),
                found: cond.len(),
            });
        }
        let m = dmat.n_summaries();
        let mut flat = Vec::with_capacity(cond.len() * m);
        for (t, row) in cond.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "kernel row length",
                    expected: m,
                    found: row.len(),
                });
            }
            let row = normalize_pmf(row, || format!("kernel row {t}"))?;
            for (s, &k) in row.iter().enumerate() {
                let (tl, sl) = (source.lengths()[t], dmat.summary_lengths()[s]);
                if k > 0.0 && sl > tl {
                    return Err(Error::LengthViolation {
                        text: t,
                        summary: s,
                        text_length: tl,
                        summary_length: sl,
                    });
                }
            }
            flat.extend(row);
        }
        Ok(Self {
            cond: flat,
            n_texts: source.len(),
            n_summaries: m,
        })
    }

    /// Kernel that maps text `t` to summary `choices[t]` with probability one.
    pub fn deterministic(
        choices: &[usize],
        source: &DiscreteSource,
        dmat: &DistortionMatrix,
    ) -> Result<Self> {
        let m = dmat.n_summaries();
        let rows = choices
            .iter()
            .map(|&s| {
                if s >= m {
                    return Err(Error::DimensionMismatch {
                        what: "summary index bound",
                        expected: m,
                        found: s,
                    });
                }
                let mut row = vec![0.0; m];
                row[s] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, source, dmat)
    }

    pub fn n_texts(&self) -> usize {
        self.n_texts
    }

    pub fn n_summaries(&self) -> usize {
        self.n_summaries
    }

    #[inline]
    pub fn get(&self, text: usize, summary: usize) -> f64 {
        self.cond[text * self.n_summaries + summary]
    }

    pub fn row(&self, text: usize) -> &[f64] {
        &self.cond[text * self.n_summaries..(text + 1) * self.n_summaries]
    }

    /// `lambda * self + (1 - lambda) * other`. Both inputs satisfy the length
    /// constraint, so the mixture does as well.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.n_texts != other.n_texts || self.n_summaries != other.n_summaries {
            return Err(Error::DimensionMismatch {
                what: "kernel size",
                expected: self.cond.len(),
                found: other.cond.len(),
            });
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidOption(format!(
                "mixing weight must lie in [0, 1], got {lambda}"
            )));
        }
        let cond = self
            .cond
            .iter()
            .zip(&other.cond)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Ok(Self {
            cond,
            n_texts: self.n_texts,
            n_summaries: self.n_summaries,
        })
    }

    fn check(&self, source: &DiscreteSource, dmat: Option<&DistortionMatrix>) -> Result<()> {
        if self.n_texts != source.len() {
            return Err(Error::DimensionMismatch {
                what: "kernel rows",
                expected: source.len(),
                found: self.n_texts,
            });
        }
        if let Some(dmat) = dmat {
            dmat.check_source(source)?;
            if dmat.n_summaries() != self.n_summaries {
                return Err(Error::DimensionMismatch {
                    what: "kernel columns",
                    expected: dmat.n_summaries(),
                    found: self.n_summaries,
                });
            }
        }
        Ok(())
    }
}

/// `sum_t p(t) sum_s k(s|t) d(t, s)`.
pub fn expected_distortion(
    source: &DiscreteSource,
    kernel: &SummarizerKernel,
    dmat: &DistortionMatrix,
) -> Result<f64> {
    kernel.check(source, Some(dmat))?;
    Ok(source
        .pmf()
        .iter()
        .enumerate()
        .map(|(t, &p)| {
            p * kernel
                .row(t)
                .iter()
                .zip(dmat.row(t))
                .map(|(k, d)| k * d)
                .sum::<f64>()
        })
        .sum())
}

/// Rate of a one-shot summarizer: the largest conditional expected
/// summary-to-text length ratio over the length classes in the support.
pub fn summarizer_rate(
    source: &DiscreteSource,
    kernel: &SummarizerKernel,
    dmat: &DistortionMatrix,
) -> Result<f64> {
    kernel.check(source, Some(dmat))?;
    let lens = dmat.summary_lengths();
    let rate = source
        .length_classes()
        .iter()
        .map(|class| {
            let mean_len: f64 = class
                .members
                .iter()
                .zip(&class.conditional)
                .map(|(&t, &p)| {
                    p * kernel
                        .row(t)
                        .iter()
                        .zip(lens)
                        .map(|(k, &l)| k * l as f64)
                        .sum::<f64>()
                })
                .sum();
            mean_len / class.length as f64
        })
        .fold(0.0, f64::max);
    Ok(rate)
}

/// `I(T; S | len(T))` in nats.
pub fn conditional_mutual_information(
    source: &DiscreteSource,
    kernel: &SummarizerKernel,
) -> Result<f64> {
    kernel.check(source, None)?;
    let m = kernel.n_summaries();
    let mut total = 0.0;
    for class in source.length_classes() {
        let mut marginal = vec![0.0; m];
        for (&t, &p) in class.members.iter().zip(&class.conditional) {
            for (r, k) in marginal.iter_mut().zip(kernel.row(t)) {
                *r += p * k;
            }
        }
        let info: f64 = class
            .members
            .iter()
            .zip(&class.conditional)
            .map(|(&t, &p)| {
                p * kernel
                    .row(t)
                    .iter()
                    .zip(&marginal)
                    .map(|(&k, &r)| plogpq(k, r))
                    .sum::<f64>()
            })
            .sum();
        total += class.weight * info;
    }
    Ok(total.max(0.0))
}

/// Best fixed summary for one length class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDMax {
    pub length: usize,
    pub weight: f64,
    /// `s_l*`, the admissible summary minimizing `E[d(T, s) | len(T) = l]`.
    pub summary: usize,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DMax {
    pub value: f64,
    pub classes: Vec<ClassDMax>,
}

impl DMax {
    pub fn best_summaries(&self) -> BTreeMap<usize, usize> {
        self.classes.iter().map(|c| (c.length, c.summary)).collect()
    }
}

/// Distortion of the best zero-information summarizer. Ties go to the lowest
/// summary index; only summaries no longer than the class length compete.
pub fn d_max(source: &DiscreteSource, dmat: &DistortionMatrix) -> Result<DMax> {
    dmat.check_source(source)?;
    let mut classes = Vec::new();
    for class in source.length_classes() {
        let mut best: Option<(usize, f64)> = None;
        for s in dmat.admissible(class.length) {
            let e: f64 = class
                .members
                .iter()
                .zip(&class.conditional)
                .map(|(&t, &p)| p * dmat.get(t, s))
                .sum();
            if best.is_none_or(|(_, b)| e < b) {
                best = Some((s, e));
            }
        }
        let (summary, distortion) = best.ok_or(Error::NoAdmissibleSummary {
            length: class.length,
        })?;
        classes.push(ClassDMax {
            length: class.length,
            weight: class.weight,
            summary,
            distortion,
        });
    }
    let value = classes.iter().map(|c| c.weight * c.distortion).sum();
    Ok(DMax { value, classes })
}

/// Sample means of block distortion and length ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverseEstimate {
    pub distortion: f64,
    pub rate: f64,
    pub distortion_std_error: f64,
    pub rate_std_error: f64,
}

/// Trials drawn from one generator; parallel batches keep results fixed.
const TRIALS_PER_BATCH: usize = 256;

/// Draws `trials` blocks of `n` i.i.d. texts, summarizes each text
/// independently with `kernel`, and averages the block distortion
/// `(1/n) sum d(t_i, s_i)` and length ratio `len(s^n) / len(t^n)`.
pub fn simulate_block_converse(
    source: &DiscreteSource,
    kernel: &SummarizerKernel,
    dmat: &DistortionMatrix,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ConverseEstimate> {
    kernel.check(source, Some(dmat))?;
    if n == 0 || trials == 0 {
        return Err(Error::InvalidOption(
            "block length and trial count must be positive".into(),
        ));
    }
    let texts = WeightedIndex::new(source.pmf())
        .map_err(|e| Error::InvalidOption(format!("source pmf: {e}")))?;
    let rows = (0..source.len())
        .map(|t| {
            WeightedIndex::new(kernel.row(t))
                .map_err(|e| Error::InvalidOption(format!("kernel row {t}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let text_lens = source.lengths();
    let summary_lens = dmat.summary_lengths();

    let batches = trials.div_ceil(TRIALS_PER_BATCH);
    let sums: Vec<[f64; 4]> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = TRIALS_PER_BATCH.min(trials - b * TRIALS_PER_BATCH);
            let mut acc = [0.0; 4];
            for _ in 0..count {
                let (mut dist, mut tl, mut sl) = (0.0, 0usize, 0usize);
                for _ in 0..n {
                    let t = texts.sample(&mut rng);
                    let s = rows[t].sample(&mut rng);
                    dist += dmat.get(t, s);
                    tl += text_lens[t];
                    sl += summary_lens[s];
                }
                let d = dist / n as f64;
                let r = sl as f64 / tl as f64;
                acc[0] += d;
                acc[1] += d * d;
                acc[2] += r;
                acc[3] += r * r;
            }
            acc
        })
        .collect();
    let mut total = [0.0; 4];
    for acc in &sums {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
    }
    let k = trials as f64;
    let mean_d = total[0] / k;
    let mean_r = total[2] / k;
    let std_error = |sum_sq: f64, mean: f64| {
        if trials < 2 {
            return 0.0;
        }
        let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
        (var / k).sqrt()
    };
    Ok(ConverseEstimate {
        distortion: mean_d,
        rate: mean_r,
        distortion_std_error: std_error(total[1], mean_d),
        rate_std_error: std_error(total[3], mean_r),
    })
}
