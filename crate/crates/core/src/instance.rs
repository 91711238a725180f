//! JSON instance files for discrete problems.
//!
//! ```json
//! {
//!   "alphabet_size": 2,
//!   "texts": ["0000", "0010"],
//!   "pmf": [0.5, 0.5],
//!   "summaries": ["0", "10"],
//!   "distortion": [[0, 5], [1, 0]],
//!   "kernel": [[1, 0], [0, 1]]
//! }
//! ```
//!
//! `distortion[t][s]` and `kernel[t][s]` are indexed text first. `kernel` is
//! optional. String lengths (in Unicode scalar values) are the symbol counts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discrete::{DiscreteSource, DistortionMatrix, SummarizerKernel};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct InstanceFile {
    alphabet_size: usize,
    texts: Vec<String>,
    pmf: Vec<f64>,
    summaries: Vec<String>,
    distortion: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel: Option<Vec<Vec<f64>>>,
}

/// A validated source, summary set and distortion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub source: DiscreteSource,
    pub summaries: Vec<String>,
    pub distortion: DistortionMatrix,
    pub kernel: Option<SummarizerKernel>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let source = DiscreteSource::new(file.texts, file.pmf, file.alphabet_size)?;
        let distortion = DistortionMatrix::from_summaries(file.distortion, &file.summaries)?;
        let kernel = file
            .kernel
            .map(|k| SummarizerKernel::new(k, &source, &distortion))
            .transpose()?;
        let inst = Self {
            source,
            summaries: file.summaries,
            distortion,
            kernel,
        };
        if inst.distortion.n_texts() != inst.source.len() {
            return Err(crate::error::Error::DimensionMismatch {
                what: "distortion matrix rows",
                expected: inst.source.len(),
                found: inst.distortion.n_texts(),
            });
        }
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let n = self.distortion.n_summaries();
        let file = InstanceFile {
            alphabet_size: self.source.alphabet_size(),
            texts: self.source.texts().to_vec(),
            pmf: self.source.pmf().to_vec(),
            summaries: self.summaries.clone(),
            distortion: (0..self.source.len())
                .map(|t| self.distortion.row(t).to_vec())
                .collect(),
            kernel: self.kernel.as_ref().map(|k| {
                (0..k.n_texts())
                    .map(|t| (0..n).map(|s| k.get(t, s)).collect())
                    .collect()
            }),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Four equiprobable binary texts of length 4 and four summaries; the
    /// distortion is zero on the diagonal.
    pub fn example1() -> Self {
        let texts = ["0000", "0010", "0110", "0111"];
        let summaries = ["0", "10", "110", "111"];
        // rows are texts, columns summaries
        let d = vec![
            vec![0.0, 5.0, 5.0, 5.0],
            vec![1.0, 0.0, 5.0, 5.0],
            vec![2.0, 1.0, 0.0, 5.0],
            vec![3.0, 2.0, 1.0, 0.0],
        ];
        let source =
            DiscreteSource::new(texts.map(String::from).to_vec(), vec![0.25; 4], 2).unwrap();
        let distortion = DistortionMatrix::from_summaries(d, &summaries).unwrap();
        Self {
            source,
            summaries: summaries.map(String::from).to_vec(),
            distortion,
            kernel: None,
        }
    }

    /// The three one-shot summarizers of the example: always `"0"`; the
    /// zero-distortion diagonal; `"111"` for `0111` and `"0"` otherwise.
    pub fn example1_kernels() -> [SummarizerKernel; 3] {
        let inst = Self::example1();
        let k = |c: &[usize]| {
            SummarizerKernel::deterministic(c, &inst.source, &inst.distortion).unwrap()
        };
        [k(&[0, 0, 0, 0]), k(&[0, 1, 2, 3]), k(&[0, 0, 0, 3])]
    }
}
