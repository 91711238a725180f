//! Reverse water-filling for Gaussian embedding sources.
//!
//! Given per-length-bin covariance eigenvalues `lambda_{l,i}` with bin
//! weights `p(l)`, the summarizer rate-distortion function under squared
//! Euclidean distortion is
//!
//! ```text
//! R(D) = (1/L) sum_l p(l) sum_{i: lambda_{l,i} > c} 1/2 log(lambda_{l,i} / c)
//! D    =       sum_l p(l) sum_i min(c, lambda_{l,i})
//! ```
//!
//! with one water level `c` shared by all bins.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{RDCurve, RDPoint};
use crate::discrete::normalize_pmf;
use crate::error::{Error, Result};

/// Relative asymmetry tolerated by [`eig_spectrum`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;
/// Negative eigenvalues down to `-PSD_TOLERANCE * trace` are clipped to zero.
pub const PSD_TOLERANCE: f64 = 1e-8;
/// Eigenvalues at or below this fraction of the largest one count as zero.
pub const ZERO_EIGENVALUE_RATIO: f64 = 1e-12;
/// Bisection stops once `|D(c) - target| <= DISTORTION_TOLERANCE * max(1, target)`.
pub const DISTORTION_TOLERANCE: f64 = 1e-9;

/// Eigenvalues of a symmetric positive semidefinite matrix, largest first.
pub fn eig_spectrum(covariance: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = covariance.nrows();
    if n == 0 || covariance.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "covariance columns",
            expected: n,
            found: covariance.ncols(),
        });
    }
    if covariance.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance matrix"));
    }
    let scale = covariance.amax();
    for i in 0..n {
        for j in i + 1..n {
            let dev = (covariance[(i, j)] - covariance[(j, i)]).abs();
            if dev > SYMMETRY_TOLERANCE * scale {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    deviation: dev,
                });
            }
        }
    }
    let sym = (covariance + covariance.transpose()) * 0.5;
    let trace = sym.trace();
    let mut eig: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let threshold = PSD_TOLERANCE * trace.abs();
    if let Some(&low) = eig.last() {
        if low < -threshold {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: low,
                threshold,
            });
        }
    }
    Ok(eig.into_iter().map(|v| v.max(0.0)).collect())
}

/// Eigenvalues of one length bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBin {
    pub weight: f64,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SpectrumFile {
    mean_length: f64,
    log_base: f64,
    bins: Vec<SpectrumBin>,
}

/// Per-bin spectra with weights summing to one, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSet {
    bins: Vec<SpectrumBin>,
    mean_length: f64,
    log_base: f64,
}

impl SpectrumSet {
    /// Validates and normalizes the bins: weights must sum to one, eigenvalues
    /// sorted largest first, small negatives clipped and near-zero values
    /// (relative to the largest eigenvalue overall) set to exactly zero.
    pub fn new(bins: Vec<SpectrumBin>, mean_length: f64, log_base: f64) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidOption("spectrum set has no bins".into()));
        }
        if !(mean_length > 0.0 && mean_length.is_finite()) {
            return Err(Error::InvalidOption(format!(
                "mean length must be positive, got {mean_length}"
            )));
        }
        if !(log_base > 1.0 && log_base.is_finite()) {
            return Err(Error::InvalidOption(format!(
                "log base must exceed 1, got {log_base}"
            )));
        }
        let dim = bins[0].eigenvalues.len();
        if dim == 0 {
            return Err(Error::InvalidOption("empty eigenvalue list".into()));
        }
        let weights: Vec<f64> = bins.iter().map(|b| b.weight).collect();
        let weights = normalize_pmf(&weights, || "bin weights".into())?;

        let mut out = Vec::with_capacity(bins.len());
        for (bin, weight) in bins.into_iter().zip(weights) {
            if bin.eigenvalues.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "spectrum dimension",
                    expected: dim,
                    found: bin.eigenvalues.len(),
                });
            }
            if bin.eigenvalues.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("eigenvalues"));
            }
            let mass: f64 = bin.eigenvalues.iter().map(|v| v.abs()).sum();
            let threshold = PSD_TOLERANCE * mass;
            if let Some(&low) = bin.eigenvalues.iter().find(|&&v| v < -threshold) {
                return Err(Error::NotPositiveSemidefinite {
                    eigenvalue: low,
                    threshold,
                });
            }
            let mut eigenvalues: Vec<f64> = bin.eigenvalues.iter().map(|v| v.max(0.0)).collect();
            eigenvalues.sort_by(|a, b| b.total_cmp(a));
            out.push(SpectrumBin {
                weight,
                eigenvalues,
            });
        }
        let largest = out.iter().map(|b| b.eigenvalues[0]).fold(0.0, f64::max);
        let floor = ZERO_EIGENVALUE_RATIO * largest;
        for bin in &mut out {
            for v in &mut bin.eigenvalues {
                if *v <= floor {
                    *v = 0.0;
                }
            }
        }
        Ok(Self {
            bins: out,
            mean_length,
            log_base,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpectrumFile = serde_json::from_str(text)?;
        Self::new(file.bins, file.mean_length, file.log_base)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SpectrumFile {
            mean_length: self.mean_length,
            log_base: self.log_base,
            bins: self.bins.clone(),
        })?)
    }

    pub fn bins(&self) -> &[SpectrumBin] {
        &self.bins
    }

    pub fn mean_length(&self) -> f64 {
        self.mean_length
    }

    pub fn log_base(&self) -> f64 {
        self.log_base
    }

    pub fn dimension(&self) -> usize {
        self.bins[0].eigenvalues.len()
    }

    /// `sum_l p(l) sum_i lambda_{l,i}`, the distortion at zero rate.
    pub fn total_mass(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| b.weight * b.eigenvalues.iter().sum::<f64>())
            .sum()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| b.eigenvalues[0])
            .fold(0.0, f64::max)
    }

    fn distortion_at(&self, c: f64) -> f64 {
        self.bins
            .iter()
            .map(|b| b.weight * b.eigenvalues.iter().map(|&l| l.min(c)).sum::<f64>())
            .sum()
    }

    fn rate_at(&self, c: f64) -> f64 {
        let nats: f64 = self
            .bins
            .iter()
            .map(|b| {
                b.weight
                    * b.eigenvalues
                        .iter()
                        .filter(|&&l| l > c)
                        .map(|&l| 0.5 * (l / c).ln())
                        .sum::<f64>()
            })
            .sum();
        nats / (self.mean_length * self.log_base.ln())
    }
}

/// Distortion and rate at a fixed water level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPoint {
    pub distortion: f64,
    pub rate: f64,
}

/// Evaluates `(D(c), R(c))`. Zero eigenvalues contribute to neither.
pub fn water_fill_at_level(spectra: &SpectrumSet, c: f64) -> Result<LevelPoint> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidOption(format!(
            "water level must be positive, got {c}"
        )));
    }
    Ok(LevelPoint {
        distortion: spectra.distortion_at(c),
        rate: spectra.rate_at(c),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterFillSolution {
    pub level: f64,
    /// `allocations[l][i] = min(level, lambda_{l,i})`.
    pub allocations: Vec<Vec<f64>>,
    /// Achieved `sum_l p(l) sum_i allocations[l][i]`.
    pub distortion: f64,
    pub rate: f64,
    pub target: f64,
    /// The target exceeded the eigenvalue mass; rate is zero.
    pub saturated: bool,
}

/// Finds the water level meeting `target_d` by bisection on `c`.
pub fn solve_for_distortion(spectra: &SpectrumSet, target_d: f64) -> Result<WaterFillSolution> {
    if target_d.is_nan() {
        return Err(Error::NonFinite("target distortion"));
    }
    if target_d <= 0.0 {
        return Err(Error::ZeroDistortion(target_d));
    }
    let mass = spectra.total_mass();
    let top = spectra.max_eigenvalue();
    let tol = DISTORTION_TOLERANCE * target_d.max(1.0);

    let (level, saturated) = if target_d >= mass {
        (top, target_d > mass)
    } else {
        // D(c) is continuous and strictly increasing on (0, top)
        let (mut lo, mut hi) = (0.0, top);
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..2000 {
            mid = 0.5 * (lo + hi);
            let d = spectra.distortion_at(mid);
            if (d - target_d).abs() <= tol || mid <= lo || mid >= hi {
                break;
            }
            if d < target_d {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (mid, false)
    };

    let allocations: Vec<Vec<f64>> = spectra
        .bins
        .iter()
        .map(|b| b.eigenvalues.iter().map(|&l| l.min(level)).collect())
        .collect();
    let distortion = spectra
        .bins
        .iter()
        .zip(&allocations)
        .map(|(b, a)| b.weight * a.iter().sum::<f64>())
        .sum();
    let rate = if saturated || level <= 0.0 {
        0.0
    } else {
        spectra.rate_at(level)
    };
    Ok(WaterFillSolution {
        level,
        allocations,
        distortion,
        rate,
        target: target_d,
        saturated,
    })
}

/// One point per grid value, sorted by distortion. Points are solved in
/// parallel; a failing grid value is reported with its index.
pub fn gaussian_curve(spectra: &SpectrumSet, distortion_grid: &[f64]) -> Result<RDCurve> {
    let points = distortion_grid
        .par_iter()
        .enumerate()
        .map(|(index, &d)| {
            solve_for_distortion(spectra, d)
                .map(|sol| RDPoint::new(None, d, sol.rate, spectra.log_base))
                .map_err(|e| Error::GridPoint {
                    index,
                    value: d,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RDCurve::new(points))
}

/// `n` distortions log-spaced from `lo_fraction * mass` up to the eigenvalue mass.
pub fn default_distortion_grid(spectra: &SpectrumSet, n: usize, lo_fraction: f64) -> Vec<f64> {
    let mass = spectra.total_mass();
    crate::blahut::log_spaced(lo_fraction * mass, mass, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(eig: Vec<f64>, mean_length: f64, base: f64) -> SpectrumSet {
        SpectrumSet::new(
            vec![SpectrumBin {
                weight: 1.0,
                eigenvalues: eig,
            }],
            mean_length,
            base,
        )
        .unwrap()
    }

    #[test]
    fn identity_spectrum() {
        assert_eq!(
            eig_spectrum(&DMatrix::identity(3, 3)).unwrap(),
            vec![1.0; 3]
        );
        assert_eq!(eig_spectrum(&DMatrix::zeros(4, 4)).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn rotated_diagonal() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = DMatrix::from_row_slice(2, 2, &[h, -h, h, h]);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        let a = &q * d * q.transpose();
        let eig = eig_spectrum(&a).unwrap();
        assert!((eig[0] - 4.0).abs() < 1e-10 && (eig[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectrum_errors() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        assert!(matches!(
            eig_spectrum(&asym),
            Err(Error::NotSymmetric { .. })
        ));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            eig_spectrum(&indef),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-10]);
        assert_eq!(eig_spectrum(&tiny).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn level_above_all_eigenvalues() {
        let s = single(vec![4.0, 1.0], 1.0, 2.0);
        let p = water_fill_at_level(&s, 4.0).unwrap();
        assert_eq!(p.rate, 0.0);
        assert_eq!(p.distortion, 5.0);
        assert!(water_fill_at_level(&s, 0.0).is_err());
    }

    #[test]
    fn two_component_level() {
        let s = single(vec![4.0, 1.0], 1.0, 2.0);
        let p = water_fill_at_level(&s, 1.0).unwrap();
        assert_eq!(p.distortion, 2.0);
        assert!((p.rate - 1.0).abs() < 1e-15);
    }

    #[test]
    fn univariate_quarter_level() {
        for (lambda, lbar, base) in [(3.0, 1.0, 2.0), (0.7, 5.0, std::f64::consts::E)] {
            let s = single(vec![lambda], lbar, base);
            let p = water_fill_at_level(&s, lambda / 4.0).unwrap();
            let expect = 4f64.ln() / base.ln() / (2.0 * lbar);
            assert!((p.rate - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn two_bins_hand_solution() {
        let s = SpectrumSet::new(
            vec![
                SpectrumBin {
                    weight: 0.5,
                    eigenvalues: vec![2.0],
                },
                SpectrumBin {
                    weight: 0.5,
                    eigenvalues: vec![8.0],
                },
            ],
            1.0,
            2.0,
        )
        .unwrap();
        let sol = solve_for_distortion(&s, 2.0).unwrap();
        assert!((sol.level - 2.0).abs() < 1e-8);
        assert!((sol.allocations[0][0] - 2.0).abs() < 1e-8);
        assert!((sol.allocations[1][0] - 2.0).abs() < 1e-8);
        assert!((sol.rate - 0.5).abs() < 1e-8);
    }

    #[test]
    fn equal_eigenvalues_half_mass() {
        let (m, lambda, lbar) = (6, 3.0, 2.0);
        let s = single(vec![lambda; m], lbar, 2.0);
        let sol = solve_for_distortion(&s, m as f64 * lambda / 2.0).unwrap();
        assert!((sol.rate - m as f64 / (2.0 * lbar)).abs() < 1e-9);
    }

    #[test]
    fn saturation_and_zero_target() {
        let s = single(vec![4.0, 1.0], 1.0, 2.0);
        let at_mass = solve_for_distortion(&s, 5.0).unwrap();
        assert_eq!(at_mass.rate, 0.0);
        assert!(!at_mass.saturated);
        let above = solve_for_distortion(&s, 9.0).unwrap();
        assert!(above.saturated);
        assert_eq!(above.level, 4.0);
        assert_eq!(above.rate, 0.0);
        assert!(matches!(
            solve_for_distortion(&s, 0.0),
            Err(Error::ZeroDistortion(_))
        ));
    }

    #[test]
    fn rank_deficient_components_are_zero() {
        let s = single(vec![1e-14, 2.0, 1e-300], 1.0, 2.0);
        assert_eq!(s.bins()[0].eigenvalues, vec![2.0, 0.0, 0.0]);
        let p = water_fill_at_level(&s, 1.0).unwrap();
        assert_eq!(p.distortion, 1.0);
        assert!((p.rate - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spectrum_set_validation() {
        let bin = |w: f64, e: Vec<f64>| SpectrumBin {
            weight: w,
            eigenvalues: e,
        };
        assert!(SpectrumSet::new(vec![bin(0.5, vec![1.0])], 1.0, 2.0).is_err());
        assert!(SpectrumSet::new(
            vec![bin(0.5, vec![1.0]), bin(0.5, vec![1.0, 2.0])],
            1.0,
            2.0
        )
        .is_err());
        assert!(SpectrumSet::new(vec![bin(1.0, vec![1.0])], 0.0, 2.0).is_err());
        assert!(SpectrumSet::new(vec![bin(1.0, vec![1.0])], 1.0, 1.0).is_err());
        assert!(SpectrumSet::new(vec![bin(1.0, vec![1.0, -1.0])], 1.0, 2.0).is_err());
        let s = SpectrumSet::new(vec![bin(1.0, vec![1.0, 3.0, 2.0])], 1.0, 2.0).unwrap();
        assert_eq!(s.bins()[0].eigenvalues, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn spectrum_json_round_trip() {
        let text = r#"{"mean_length": 12.5, "log_base": 2,
                       "bins": [{"weight": 0.25, "eigenvalues": [3, 1]},
                                {"weight": 0.75, "eigenvalues": [2, 2]}]}"#;
        let s = SpectrumSet::from_json(text).unwrap();
        assert_eq!(s.dimension(), 2);
        assert_eq!(s.total_mass(), 0.25 * 4.0 + 0.75 * 4.0);
        assert_eq!(SpectrumSet::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn curve_reports_bad_grid_point() {
        let s = single(vec![4.0, 1.0], 1.0, 2.0);
        let err = gaussian_curve(&s, &[1.0, -2.0]).unwrap_err();
        assert!(matches!(err, Error::GridPoint { index: 1, .. }));
        let c = gaussian_curve(&s, &[5.0]).unwrap();
        assert_eq!(c.points(), &[RDPoint::new(None, 5.0, 0.0, 2.0)]);
    }
}
