#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sumrd::blahut::{oracle_point_count, ORACLE_POINT_LIMIT};
use sumrd::{DiscreteSource, DistortionMatrix, EmbeddingSet, Instance};

/// Binary strings of length 1 to 3.
fn binary_strings(max_len: usize) -> Vec<String> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        for bits in 0..(1u32 << len) {
            out.push(
                (0..len)
                    .rev()
                    .map(|i| if bits >> i & 1 == 1 { '1' } else { '0' })
                    .collect(),
            );
        }
    }
    out
}

/// A random instance with 1 to 3 binary texts of length 1 to 3 and 1 to 3
/// summaries. The shortest summary has length 1, so every text admits one.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let pool = binary_strings(3);
    let n = rng.random_range(1..=3);
    let texts: Vec<String> = pool.choose_multiple(rng, n).cloned().collect();
    let k = rng.random_range(1..=3);
    let mut summaries = vec![pool[rng.random_range(0..2)].clone()];
    let rest: Vec<String> = pool
        .iter()
        .filter(|s| s.len() <= 2 && **s != summaries[0])
        .cloned()
        .collect();
    summaries.extend(rest.choose_multiple(rng, k - 1).cloned());

    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let pmf = weights.iter().map(|w| w / total).collect();
    let rows = (0..n)
        .map(|_| (0..k).map(|_| rng.random_range(0.0..4.0)).collect())
        .collect();
    let source = DiscreteSource::new(texts, pmf, 2).unwrap();
    let distortion = DistortionMatrix::from_summaries(rows, &summaries).unwrap();
    Instance {
        source,
        summaries,
        distortion,
        kernel: None,
    }
}

/// Draws random instances until one fits the grid oracle at `resolution`.
pub fn oracle_sized_instance(rng: &mut ChaCha8Rng, resolution: f64) -> Instance {
    loop {
        let inst = random_instance(rng);
        let points = oracle_point_count(&inst.source, &inst.distortion, resolution).unwrap();
        if points <= ORACLE_POINT_LIMIT {
            return inst;
        }
    }
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_rotation(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

/// `n` draws of `N(0, Q diag(eigenvalues) Q^T)`, all with token length `length`.
pub fn gaussian_records(
    rng: &mut ChaCha8Rng,
    eigenvalues: &[f64],
    rotation: &DMatrix<f64>,
    n: usize,
    length: u32,
) -> (Vec<u32>, Vec<Vec<f32>>) {
    let scale = DVector::from_iterator(eigenvalues.len(), eigenvalues.iter().map(|l| l.sqrt()));
    let vectors = (0..n)
        .map(|_| {
            let z = DVector::from_fn(eigenvalues.len(), |_, _| StandardNormal.sample(rng));
            let x = rotation * z.component_mul(&scale);
            x.iter().map(|&v| v as f32).collect()
        })
        .collect();
    (vec![length; n], vectors)
}

pub fn embedding_set(parts: Vec<(Vec<u32>, Vec<Vec<f32>>)>) -> EmbeddingSet {
    let mut lengths = Vec::new();
    let mut vectors = Vec::new();
    for (l, v) in parts {
        lengths.extend(l);
        vectors.extend(v);
    }
    EmbeddingSet::new(lengths, &vectors).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
