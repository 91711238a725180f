//! Exhaustive reference for small instances.
//!
//! Enumerates every row-stochastic kernel whose entries are multiples of a
//! grid resolution and keeps the smallest `I(T;S|L)` meeting the distortion
//! budget. Classes are enumerated separately and combined through their
//! `(D, I)` Pareto fronts, which is exact over the grid because both
//! quantities are sums of per-class terms. Only meant for tests.

use crate::discrete::{plogpq, DiscreteSource, DistortionMatrix};
use crate::error::{Error, Result};

/// Upper bound on the number of kernels enumerated.
pub const ORACLE_POINT_LIMIT: u128 = 10_000_000;

const COMPRESS_AT: usize = 1 << 18;

/// Lower-left staircase of `(distortion, information)` pairs.
#[derive(Default)]
struct ParetoFront {
    front: Vec<(f64, f64)>,
    pending: Vec<(f64, f64)>,
}

impl ParetoFront {
    fn push(&mut self, d: f64, i: f64) {
        self.pending.push((d, i));
        if self.pending.len() >= COMPRESS_AT {
            self.compress();
        }
    }

    fn compress(&mut self) {
        let mut all = std::mem::take(&mut self.pending);
        all.append(&mut self.front);
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut best = f64::INFINITY;
        for (d, i) in all {
            if i < best {
                self.front.push((d, i));
                best = i;
            }
        }
    }

    fn finish(mut self) -> Vec<(f64, f64)> {
        self.compress();
        self.front
    }
}

/// All points of `{x in (1/steps) Z^k : x >= 0, sum x = 1}`.
fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(k - 1, left - c, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, steps, steps, &mut Vec::with_capacity(k), &mut out);
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Pareto front of `(distortion, information)` over all grid kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOracle {
    /// Ascending distortion, strictly descending information (nats).
    front: Vec<(f64, f64)>,
    scale: f64,
}

impl GridOracle {
    /// Enumerates the grid kernels of every length class. Fails with
    /// [`Error::OracleTooLarge`] beyond [`ORACLE_POINT_LIMIT`] kernels.
    pub fn new(source: &DiscreteSource, dmat: &DistortionMatrix, resolution: f64) -> Result<Self> {
        build(source, dmat, resolution)
    }

    /// Smallest grid distortion.
    pub fn min_distortion(&self) -> f64 {
        self.front[0].0
    }

    /// Minimum of `I(T;S|L) / mean_length` (base `|A|`) over grid kernels
    /// with expected distortion at most `target_d`.
    pub fn rate(&self, target_d: f64) -> Result<f64> {
        let slack = 1e-12 * target_d.abs().max(1.0);
        let i = self.front.partition_point(|&(d, _)| d <= target_d + slack);
        if i == 0 {
            return Err(Error::Infeasible {
                target: target_d,
                minimum: self.min_distortion(),
            });
        }
        Ok(self.front[i - 1].1 / self.scale)
    }
}

/// One-shot form of [`GridOracle::rate`].
pub fn grid_oracle_rd(
    source: &DiscreteSource,
    dmat: &DistortionMatrix,
    target_d: f64,
    resolution: f64,
) -> Result<f64> {
    GridOracle::new(source, dmat, resolution)?.rate(target_d)
}

/// Number of grid kernels enumerated at `resolution`, summed over classes.
pub fn oracle_point_count(
    source: &DiscreteSource,
    dmat: &DistortionMatrix,
    resolution: f64,
) -> Result<u128> {
    let steps = grid_steps(resolution)?;
    let mut total: u128 = 0;
    for class in &source.length_classes() {
        let k = dmat.admissible(class.length).len();
        if k == 0 {
            return Err(Error::NoAdmissibleSummary {
                length: class.length,
            });
        }
        let per_row = binomial((steps + k - 1) as u128, (k - 1) as u128);
        let mut points: u128 = 1;
        for _ in &class.members {
            points = points.saturating_mul(per_row);
        }
        total = total.saturating_add(points);
    }
    Ok(total)
}

fn grid_steps(resolution: f64) -> Result<usize> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidOption(format!(
            "resolution must lie in (0, 1], got {resolution}"
        )));
    }
    let steps = (1.0 / resolution).round() as usize;
    if (steps as f64 * resolution - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidOption(format!(
            "1 / resolution must be an integer, got {resolution}"
        )));
    }
    Ok(steps)
}

fn build(source: &DiscreteSource, dmat: &DistortionMatrix, resolution: f64) -> Result<GridOracle> {
    let steps = grid_steps(resolution)?;
    if dmat.n_texts() != source.len() {
        return Err(Error::DimensionMismatch {
            what: "distortion matrix rows",
            expected: source.len(),
            found: dmat.n_texts(),
        });
    }

    let total = oracle_point_count(source, dmat, resolution)?;
    if total > ORACLE_POINT_LIMIT {
        return Err(Error::OracleTooLarge {
            points: total,
            limit: ORACLE_POINT_LIMIT,
        });
    }
    let classes = source.length_classes();
    let mut combined: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for class in &classes {
        let summaries = dmat.admissible(class.length);
        let grid = simplex_grid(summaries.len(), steps);
        let rows = class.members.len();
        let mut front = ParetoFront::default();
        let mut idx = vec![0usize; rows];
        let mut marginal = vec![0.0; summaries.len()];
        loop {
            marginal.fill(0.0);
            let mut dist = 0.0;
            for (row, (&t, &p)) in class.members.iter().zip(&class.conditional).enumerate() {
                let q = &grid[idx[row]];
                for (j, &s) in summaries.iter().enumerate() {
                    marginal[j] += p * q[j];
                    dist += p * q[j] * dmat.get(t, s);
                }
            }
            let mut info = 0.0;
            for (row, &p) in class.conditional.iter().enumerate() {
                let q = &grid[idx[row]];
                for j in 0..summaries.len() {
                    info += p * plogpq(q[j], marginal[j]);
                }
            }
            front.push(dist, info.max(0.0));

            // odometer over the rows
            let mut r = 0;
            while r < rows {
                idx[r] += 1;
                if idx[r] < grid.len() {
                    break;
                }
                idx[r] = 0;
                r += 1;
            }
            if r == rows {
                break;
            }
        }
        let class_front = front.finish();

        let mut next = ParetoFront::default();
        for &(d0, i0) in &combined {
            for &(d, i) in &class_front {
                next.push(d0 + class.weight * d, i0 + class.weight * i);
            }
        }
        combined = next.finish();
    }

    let ln_base = (source.alphabet_size() as f64).ln();
    Ok(GridOracle {
        front: combined,
        scale: source.mean_length() * ln_base,
    })
}
