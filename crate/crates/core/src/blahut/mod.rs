//! Blahut-Arimoto iteration for the summarizer rate-distortion function.
//!
//! The Lagrangian `R_S - beta * D` separates over length classes, so each
//! class is solved on its own with the classical alternating update
//!
//! ```text
//! r_l(s)   = sum_t p(t|l) q_l(s|t)
//! q_l(s|t) = r_l(s) exp(beta' d(t,s)) / sum_s' r_l(s') exp(beta' d(t,s'))
//! ```
//!
//! and the class results are recombined with weights `p(l)`. A sweep over
//! slopes `beta < 0` traces the curve from `(D_max, 0)` towards `D = 0`.
//!
//! Slopes in [`BaOptions::beta_grid`] are tangent slopes of the reported
//! curve (rate in base `|A|` per text symbol). Inside a class solve the slope
//! is in nats per unit distortion: `beta' = beta * mean_length * ln |A|`.

mod oracle;

pub use oracle::{grid_oracle_rd, oracle_point_count, GridOracle, ORACLE_POINT_LIMIT};

use rayon::prelude::*;

use crate::curve::{RDCurve, RDPoint};
use crate::discrete::{normalize_pmf, plogpq, DiscreteSource, DistortionMatrix, SummarizerKernel};
use crate::error::{Error, Result};

/// `c(s) <= 1 + KKT_SLACK` for all `s` certifies the zero-information solution.
const KKT_SLACK: f64 = 1e-12;

/// A summary whose output mass falls below this fraction of the largest while
/// its KKT ratio is below one is removed from the support.
const PRUNE_RATIO: f64 = 0.05;

/// Accelerated cycles between drift searches, and the step multiples tried.
const DRIFT_WINDOW: usize = 10;
const DRIFT_FACTORS: [f64; 4] = [100.0, 30.0, 10.0, 3.0];

#[derive(Debug, Clone, PartialEq)]
pub struct BaOptions {
    pub max_iters: usize,
    /// Relative change of the Lagrangian objective that counts as converged.
    /// The same value bounds the last kernel update.
    pub tol: f64,
    /// Tangent slopes to sweep, all strictly negative.
    pub beta_grid: Vec<f64>,
}

impl Default for BaOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol: 1e-10,
            beta_grid: default_beta_grid(),
        }
    }
}

impl BaOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidOption("max_iters must be positive".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidOption(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if let Some(b) = self
            .beta_grid
            .iter()
            .find(|b| !(**b < 0.0 && b.is_finite()))
        {
            return Err(Error::InvalidOption(format!(
                "beta must be finite and negative, got {b}"
            )));
        }
        Ok(())
    }
}

/// 40 slopes, log-spaced in magnitude from `1e-4` to `1e2`.
pub fn default_beta_grid() -> Vec<f64> {
    log_spaced(1e-4, 1e2, 40).into_iter().map(|b| -b).collect()
}

pub(crate) fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// One class's data, checked and flattened.
#[derive(Debug, Clone)]
struct ClassProblem {
    pmf: Vec<f64>,
    distortion: Vec<f64>,
    cols: usize,
}

impl ClassProblem {
    fn new(class_pmf: &[f64], class_distortion: &[Vec<f64>]) -> Result<Self> {
        let pmf = normalize_pmf(class_pmf, || "class pmf".into())?;
        if class_distortion.len() != pmf.len() {
            return Err(Error::DimensionMismatch {
                what: "class distortion rows",
                expected: pmf.len(),
                found: class_distortion.len(),
            });
        }
        let cols = class_distortion[0].len();
        if cols == 0 {
            return Err(Error::NoAdmissibleSummary { length: 0 });
        }
        let mut distortion = Vec::with_capacity(pmf.len() * cols);
        for (t, row) in class_distortion.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "class distortion columns",
                    expected: cols,
                    found: row.len(),
                });
            }
            for (s, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistortion {
                        text: t,
                        summary: s,
                        value: v,
                    });
                }
            }
            distortion.extend_from_slice(row);
        }
        Ok(Self {
            pmf,
            distortion,
            cols,
        })
    }

    fn rows(&self) -> usize {
        self.pmf.len()
    }

    fn d(&self, t: usize) -> &[f64] {
        &self.distortion[t * self.cols..(t + 1) * self.cols]
    }
}

/// Iteration state for one length class.
///
/// Exposed so callers can drive the update by hand, e.g. to observe the
/// objective after every step.
#[derive(Debug, Clone)]
pub struct BlahutArimoto {
    problem: ClassProblem,
    beta: f64,
    kernel: Vec<f64>,
}

impl BlahutArimoto {
    /// Starts from the uniform kernel. `beta` is the natural-unit slope.
    pub fn new(class_pmf: &[f64], class_distortion: &[Vec<f64>], beta: f64) -> Result<Self> {
        let problem = ClassProblem::new(class_pmf, class_distortion)?;
        if !(beta < 0.0 && beta.is_finite()) {
            return Err(Error::InvalidOption(format!(
                "beta must be finite and negative, got {beta}"
            )));
        }
        let u = 1.0 / problem.cols as f64;
        let kernel = vec![u; problem.rows() * problem.cols];
        Ok(Self {
            problem,
            beta,
            kernel,
        })
    }

    /// Starts from `kernel` (rows over the class's summaries).
    pub fn with_kernel(
        class_pmf: &[f64],
        class_distortion: &[Vec<f64>],
        beta: f64,
        kernel: &[Vec<f64>],
    ) -> Result<Self> {
        let mut state = Self::new(class_pmf, class_distortion, beta)?;
        if kernel.len() != state.problem.rows() {
            return Err(Error::DimensionMismatch {
                what: "kernel rows",
                expected: state.problem.rows(),
                found: kernel.len(),
            });
        }
        let cols = state.problem.cols;
        for (t, row) in kernel.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "kernel columns",
                    expected: cols,
                    found: row.len(),
                });
            }
            let row = normalize_pmf(row, || format!("kernel row {t}"))?;
            state.kernel[t * cols..(t + 1) * cols].copy_from_slice(&row);
        }
        Ok(state)
    }

    fn row(&self, t: usize) -> &[f64] {
        let c = self.problem.cols;
        &self.kernel[t * c..(t + 1) * c]
    }

    /// `r(s) = sum_t p(t) q(s|t)`.
    pub fn output_marginal(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.problem.cols];
        for (t, &p) in self.problem.pmf.iter().enumerate() {
            for (r, q) in r.iter_mut().zip(self.row(t)) {
                *r += p * q;
            }
        }
        r
    }

    /// Applies one alternating update and returns the largest entry change.
    pub fn step(&mut self) -> f64 {
        let r = self.output_marginal();
        self.set_marginal(&r)
    }

    /// Sets `q(s|t) ∝ r(s) exp(beta d(t,s))` and returns the largest entry change.
    fn set_marginal(&mut self, r: &[f64]) -> f64 {
        let log_r: Vec<f64> = r.iter().map(|r| r.ln()).collect();
        let cols = self.problem.cols;
        let mut change: f64 = 0.0;
        let mut logits = vec![0.0; cols];
        for t in 0..self.problem.rows() {
            let d = self.problem.d(t);
            let mut max = f64::NEG_INFINITY;
            for s in 0..cols {
                logits[s] = log_r[s] + self.beta * d[s];
                max = max.max(logits[s]);
            }
            let mut z = 0.0;
            for l in logits.iter_mut() {
                *l = (*l - max).exp();
                z += *l;
            }
            let row = &mut self.kernel[t * cols..(t + 1) * cols];
            for (q, l) in row.iter_mut().zip(&logits) {
                let next = l / z;
                change = change.max((next - *q).abs());
                *q = next;
            }
        }
        change
    }

    /// Two updates followed by a squared extrapolation of the log output
    /// marginal. Working in logs keeps the marginal positive and follows
    /// the geometric decay of summaries that leave the support. The
    /// extrapolated kernel is kept only if it does not raise the objective
    /// above that of the two plain updates, so descent is preserved.
    /// Returns the number of updates applied.
    fn accelerated_cycle(&mut self) -> usize {
        let log = |r: Vec<f64>| -> Vec<f64> { r.into_iter().map(f64::ln).collect() };
        let x0 = log(self.output_marginal());
        self.step();
        let x1 = log(self.output_marginal());
        self.step();
        let x2 = log(self.output_marginal());
        let live: Vec<usize> = (0..x0.len()).filter(|&s| x0[s].is_finite()).collect();
        let d1: Vec<f64> = live.iter().map(|&s| x1[s] - x0[s]).collect();
        let d2: Vec<f64> = live.iter().map(|&s| x2[s] - 2.0 * x1[s] + x0[s]).collect();
        let n1 = d1.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n2 = d2.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(n1 > 0.0 && n2 > 0.0 && n1.is_finite() && n2.is_finite()) {
            return 2;
        }
        let plain = self.objective();
        let mut alpha = -n1 / n2;
        let mut evaluations = 0;
        while alpha < -1.0 {
            let x: Vec<f64> = (0..live.len())
                .map(|k| x0[live[k]] - 2.0 * alpha * d1[k] + alpha * alpha * d2[k])
                .collect();
            evaluations += 1;
            if self.try_log_marginal(&live, &x, plain) {
                break;
            }
            alpha = (alpha - 1.0) / 2.0;
        }
        2 + evaluations
    }

    /// Moves the log output marginal along its net drift since `anchor`,
    /// trying long steps first. Slow drifts arise when two summaries are
    /// nearly tied and the objective is almost flat between them. Returns
    /// the number of candidates evaluated.
    fn drift_search(&mut self, anchor: &[f64]) -> usize {
        let x: Vec<f64> = self.output_marginal().into_iter().map(f64::ln).collect();
        let live: Vec<usize> = (0..x.len())
            .filter(|&s| x[s].is_finite() && anchor[s].is_finite())
            .collect();
        let current = self.objective();
        let mut evaluations = 0;
        for factor in DRIFT_FACTORS {
            let trial: Vec<f64> = live
                .iter()
                .map(|&s| x[s] + factor * (x[s] - anchor[s]))
                .collect();
            evaluations += 1;
            if self.try_log_marginal(&live, &trial, current) {
                break;
            }
        }
        evaluations
    }

    /// Adopts the kernel induced by the marginal with logs `x` on `live` if
    /// its objective is below `bound`.
    fn try_log_marginal(&mut self, live: &[usize], x: &[f64], bound: f64) -> bool {
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut r = vec![0.0; self.problem.cols];
        let mut total = 0.0;
        for (&s, &v) in live.iter().zip(x) {
            // stay clear of underflow so no summary is dropped by accident
            r[s] = (v - max).max(-600.0).exp();
            total += r[s];
        }
        r.iter_mut().for_each(|v| *v /= total);
        let mut trial = self.clone();
        trial.set_marginal(&r);
        if trial.objective() < bound {
            *self = trial;
            true
        } else {
            false
        }
    }

    /// `I(T; S | L = l)` in nats for the current kernel.
    pub fn information(&self) -> f64 {
        let r = self.output_marginal();
        let info: f64 = self
            .problem
            .pmf
            .iter()
            .enumerate()
            .map(|(t, &p)| {
                p * self
                    .row(t)
                    .iter()
                    .zip(&r)
                    .map(|(&q, &r)| plogpq(q, r))
                    .sum::<f64>()
            })
            .sum();
        info.max(0.0)
    }

    pub fn distortion(&self) -> f64 {
        self.problem
            .pmf
            .iter()
            .enumerate()
            .map(|(t, &p)| {
                p * self
                    .row(t)
                    .iter()
                    .zip(self.problem.d(t))
                    .map(|(q, d)| q * d)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Lagrangian `I - beta * D`, which the update never increases.
    pub fn objective(&self) -> f64 {
        self.information() - self.beta * self.distortion()
    }

    pub fn kernel(&self) -> Vec<Vec<f64>> {
        (0..self.problem.rows())
            .map(|t| self.row(t).to_vec())
            .collect()
    }

    /// If placing all mass on one summary is optimal for this slope, returns
    /// that summary. Checks the optimality condition `c(s) <= 1` for
    /// `c(s) = sum_t p(t) exp(beta (d(t,s) - d(t,s0)))`.
    /// `c(s) = sum_t p(t) e^{beta d(t,s)} / sum_s' r(s') e^{beta d(t,s')}`.
    /// At the optimum `c(s) <= 1`, with equality on the support of `r`.
    fn kkt_ratios(&self, r: &[f64]) -> Vec<f64> {
        let p = &self.problem;
        let log_r: Vec<f64> = r.iter().map(|r| r.ln()).collect();
        let mut c = vec![0.0; p.cols];
        for t in 0..p.rows() {
            let d = p.d(t);
            let max = (0..p.cols)
                .map(|s| log_r[s] + self.beta * d[s])
                .fold(f64::NEG_INFINITY, f64::max);
            let lse = max
                + (0..p.cols)
                    .map(|s| (log_r[s] + self.beta * d[s] - max).exp())
                    .sum::<f64>()
                    .ln();
            for (c, &d) in c.iter_mut().zip(d) {
                *c += p.pmf[t] * (self.beta * d - lse).exp();
            }
        }
        c
    }

    /// Drops small, shrinking summaries that are not `pinned`.
    fn prune(&mut self, pinned: &[bool]) {
        let mut r = self.output_marginal();
        let max = r.iter().copied().fold(0.0, f64::max);
        let small = |s: usize, r: &[f64]| !pinned[s] && r[s] > 0.0 && r[s] < PRUNE_RATIO * max;
        if !(0..r.len()).any(|s| small(s, &r)) {
            return;
        }
        let c = self.kkt_ratios(&r);
        let mut dropped = false;
        for s in 0..r.len() {
            if small(s, &r) && c[s] < 1.0 {
                r[s] = 0.0;
                dropped = true;
            }
        }
        if dropped {
            let total: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= total);
            self.set_marginal(&r);
        }
    }

    /// Restores, and pins, every summary outside the support whose KKT ratio
    /// exceeds `1 + tol`. Returns whether any was restored.
    fn restore(&mut self, tol: f64, pinned: &mut [bool]) -> bool {
        let mut r = self.output_marginal();
        let c = self.kkt_ratios(&r);
        let max = r.iter().copied().fold(0.0, f64::max);
        let mut restored = false;
        for s in 0..r.len() {
            if r[s] == 0.0 && c[s] > 1.0 + tol {
                r[s] = PRUNE_RATIO * max;
                pinned[s] = true;
                restored = true;
            }
        }
        if restored {
            let total: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= total);
            self.set_marginal(&r);
        }
        restored
    }

    fn zero_information_optimum(&self) -> Option<usize> {
        let p = &self.problem;
        let mut s0 = 0;
        let mut best = f64::INFINITY;
        for s in 0..p.cols {
            let e: f64 = (0..p.rows()).map(|t| p.pmf[t] * p.d(t)[s]).sum();
            if e < best {
                best = e;
                s0 = s;
            }
        }
        let optimal = (0..p.cols).all(|s| {
            let c: f64 = (0..p.rows())
                .map(|t| p.pmf[t] * (self.beta * (p.d(t)[s] - p.d(t)[s0])).exp())
                .sum();
            c <= 1.0 + KKT_SLACK
        });
        optimal.then_some(s0)
    }
}

/// Converged (or flagged) kernel for one length class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSolution {
    /// Rows over texts in the class, columns over the admissible summaries.
    pub kernel: Vec<Vec<f64>>,
    /// Nats.
    pub information: f64,
    pub distortion: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs the alternating update for one class at natural-unit slope `beta`.
///
/// Before iterating, the zero-information solution is tested against the
/// optimality condition; when it holds, that solution is returned directly
/// (for small `|beta|` the iteration would otherwise approach it only
/// geometrically with ratio close to one).
///
/// Plain updates are interleaved with extrapolated ones that never raise the
/// objective. Summaries whose mass shrinks towards zero are removed, since
/// near a slope where the support changes that decay is only polynomial; a
/// removed summary is restored if it violates the optimality condition once
/// the rest has converged. The stopping test always follows a plain update.
pub fn ba_solve_length_class(
    class_pmf: &[f64],
    class_distortion: &[Vec<f64>],
    beta: f64,
    opts: &BaOptions,
) -> Result<ClassSolution> {
    let mut state = BlahutArimoto::new(class_pmf, class_distortion, beta)?;
    if let Some(s0) = state.zero_information_optimum() {
        let cols = state.problem.cols;
        for t in 0..state.problem.rows() {
            let row = &mut state.kernel[t * cols..(t + 1) * cols];
            row.fill(0.0);
            row[s0] = 1.0;
        }
        return Ok(ClassSolution {
            kernel: state.kernel(),
            information: 0.0,
            distortion: state.distortion(),
            iterations: 0,
            converged: true,
        });
    }

    let mut previous = state.objective();
    let mut converged = false;
    let mut iterations = 0;
    let mut pinned = vec![false; state.problem.cols];
    let mut anchor: Vec<f64> = state.output_marginal().into_iter().map(f64::ln).collect();
    let mut cycles = 0;
    while iterations < opts.max_iters {
        if iterations + 4 + DRIFT_FACTORS.len() <= opts.max_iters {
            iterations += state.accelerated_cycle();
            state.prune(&pinned);
            cycles += 1;
            if cycles % DRIFT_WINDOW == 0 {
                iterations += state.drift_search(&anchor);
                anchor = state.output_marginal().into_iter().map(f64::ln).collect();
            }
        }
        // the stopping test always looks at a plain update
        let change = state.step();
        iterations += 1;
        let objective = state.objective();
        let delta = (previous - objective).abs();
        if delta <= opts.tol * objective.abs() && change <= opts.tol {
            // a removed summary must satisfy the optimality condition
            if !state.restore(opts.tol, &mut pinned) {
                converged = true;
                break;
            }
        }
        previous = objective;
    }
    Ok(ClassSolution {
        kernel: state.kernel(),
        information: state.information(),
        distortion: state.distortion(),
        iterations,
        converged,
    })
}

/// Largest change one more update would make to `solution.kernel`.
pub fn ba_fixed_point_residual(
    solution: &ClassSolution,
    beta: f64,
    class_pmf: &[f64],
    class_distortion: &[Vec<f64>],
) -> Result<f64> {
    let mut state =
        BlahutArimoto::with_kernel(class_pmf, class_distortion, beta, &solution.kernel)?;
    Ok(state.step())
}

/// Solution of one class inside a sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassResult {
    pub length: usize,
    pub weight: f64,
    /// Source indices of the member texts (kernel rows).
    pub texts: Vec<usize>,
    /// `p(t | l)` aligned with `texts`.
    pub conditional: Vec<f64>,
    /// Summary indices admitted for this class (kernel columns).
    pub summaries: Vec<usize>,
    pub solution: ClassSolution,
}

impl ClassResult {
    /// The class's distortion submatrix, as passed to the solver.
    pub fn class_distortion(&self, dmat: &DistortionMatrix) -> Vec<Vec<f64>> {
        self.texts
            .iter()
            .map(|&t| self.summaries.iter().map(|&s| dmat.get(t, s)).collect())
            .collect()
    }
}

/// All class solves for one tangent slope, plus the aggregated point.
#[derive(Debug, Clone, PartialEq)]
pub struct BaResult {
    /// Tangent slope of the reported curve.
    pub beta: f64,
    /// Slope applied inside the class solves (nats per unit distortion).
    pub natural_beta: f64,
    pub classes: Vec<ClassResult>,
    pub point: RDPoint,
}

impl BaResult {
    pub fn converged(&self) -> bool {
        self.classes.iter().all(|c| c.solution.converged)
    }

    /// `sum_l p(l) I_l` in nats.
    pub fn information(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.weight * c.solution.information)
            .sum()
    }

    /// The optimizing kernel over the full text and summary sets.
    pub fn kernel(
        &self,
        source: &DiscreteSource,
        dmat: &DistortionMatrix,
    ) -> Result<SummarizerKernel> {
        let m = dmat.n_summaries();
        let mut rows = vec![vec![0.0; m]; source.len()];
        for (t, row) in rows.iter_mut().enumerate() {
            // texts outside every class have zero mass; any admissible row works
            if let Some(&s) = dmat.admissible(source.lengths()[t]).first() {
                row[s] = 1.0;
            }
        }
        for class in &self.classes {
            for (&t, q) in class.texts.iter().zip(&class.solution.kernel) {
                rows[t].fill(0.0);
                for (&s, &v) in class.summaries.iter().zip(q) {
                    rows[t][s] = v;
                }
            }
        }
        SummarizerKernel::new(rows, source, dmat)
    }
}

/// A swept curve together with the per-slope solves behind each point.
#[derive(Debug, Clone, PartialEq)]
pub struct BaSweep {
    /// Points sorted by ascending distortion.
    pub curve: RDCurve,
    /// Aligned with `curve.points()`.
    pub results: Vec<BaResult>,
}

impl BaSweep {
    pub fn unconverged(&self) -> usize {
        self.results.iter().filter(|r| !r.converged()).count()
    }
}

/// Solves every length class at one tangent slope and aggregates.
pub fn ba_point(
    source: &DiscreteSource,
    dmat: &DistortionMatrix,
    beta: f64,
    opts: &BaOptions,
) -> Result<BaResult> {
    if dmat.n_texts() != source.len() {
        return Err(Error::DimensionMismatch {
            what: "distortion matrix rows",
            expected: source.len(),
            found: dmat.n_texts(),
        });
    }
    if !(beta < 0.0 && beta.is_finite()) {
        return Err(Error::InvalidOption(format!(
            "beta must be finite and negative, got {beta}"
        )));
    }
    let mean_length = source.mean_length();
    let ln_base = (source.alphabet_size() as f64).ln();
    let natural_beta = beta * mean_length * ln_base;

    let mut classes = Vec::new();
    for class in source.length_classes() {
        let summaries = dmat.admissible(class.length);
        if summaries.is_empty() {
            return Err(Error::NoAdmissibleSummary {
                length: class.length,
            });
        }
        let sub: Vec<Vec<f64>> = class
            .members
            .iter()
            .map(|&t| summaries.iter().map(|&s| dmat.get(t, s)).collect())
            .collect();
        let solution = ba_solve_length_class(&class.conditional, &sub, natural_beta, opts)?;
        classes.push(ClassResult {
            length: class.length,
            weight: class.weight,
            texts: class.members,
            conditional: class.conditional,
            summaries,
            solution,
        });
    }

    // fixed summation order: ascending length
    let info: f64 = classes
        .iter()
        .map(|c| c.weight * c.solution.information)
        .sum();
    let distortion: f64 = classes
        .iter()
        .map(|c| c.weight * c.solution.distortion)
        .sum();
    let point = RDPoint::from_nats(
        Some(beta),
        distortion,
        info,
        mean_length,
        source.alphabet_size() as f64,
    );
    Ok(BaResult {
        beta,
        natural_beta,
        classes,
        point,
    })
}

/// Sweeps `opts.beta_grid` and returns the curve sorted by distortion.
/// Slopes are solved in parallel; the output does not depend on scheduling.
pub fn ba_curve(
    source: &DiscreteSource,
    dmat: &DistortionMatrix,
    opts: &BaOptions,
) -> Result<BaSweep> {
    opts.validate()?;
    if opts.beta_grid.is_empty() {
        return Err(Error::InvalidOption("beta grid is empty".into()));
    }
    let mut results: Vec<BaResult> = opts
        .beta_grid
        .par_iter()
        .map(|&b| ba_point(source, dmat, b, opts))
        .collect::<Result<_>>()?;
    results.sort_by(|a, b| a.point.distortion.total_cmp(&b.point.distortion));
    let curve = RDCurve::new(results.iter().map(|r| r.point).collect());
    Ok(BaSweep { curve, results })
}
