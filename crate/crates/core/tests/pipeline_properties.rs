mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use sumrd::gaussian::eig_spectrum;
use sumrd::pipeline::{build_length_grid, sample_covariance, LengthGrid};
use sumrd::{approx_rs_curve, EmbeddingSet};

fn embedding_set() -> impl Strategy<Value = EmbeddingSet> {
    (1usize..=5, 1usize..=40).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(1u32..50, n),
            prop::collection::vec(-1e3f32..1e3, n * m),
        )
            .prop_map(move |(lengths, data)| EmbeddingSet::from_flat(m, lengths, data).unwrap())
    })
}

fn check_partition(
    grid: &LengthGrid,
    lengths: &[u32],
    min_bin: usize,
) -> Result<(), TestCaseError> {
    prop_assert!(grid.edges.windows(2).all(|w| w[0] < w[1]));
    prop_assert_eq!(grid.counts.iter().sum::<usize>(), lengths.len());
    let assigned = grid.assign(lengths);
    prop_assert_eq!(
        assigned.iter().map(Vec::len).collect::<Vec<_>>(),
        grid.counts.clone()
    );
    for &l in lengths {
        prop_assert!(grid.bin_of(l).is_some());
    }
    if !grid.undersized {
        prop_assert!(grid.counts.iter().all(|&c| c >= min_bin));
    }
    Ok(())
}

proptest! {
    #[test]
    fn srde_round_trip_is_bit_exact(set in embedding_set()) {
        let bytes = set.to_bytes();
        let back = EmbeddingSet::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
        prop_assert_eq!(back, set);
    }

    #[test]
    fn truncated_srde_is_rejected(set in embedding_set(), cut in 1usize..64) {
        let bytes = set.to_bytes();
        let cut = cut.min(bytes.len());
        let is_parse_error = matches!(
            EmbeddingSet::from_bytes(&bytes[..bytes.len() - cut]),
            Err(sumrd::Error::Parse { .. })
        );
        prop_assert!(is_parse_error);
    }

    #[test]
    fn length_grid_partitions_records(
        lengths in prop::collection::vec(1u32..200, 1..300),
        min_bin in 1usize..80,
    ) {
        let grid = build_length_grid(&lengths, min_bin).unwrap();
        check_partition(&grid, &lengths, min_bin)?;
        prop_assert_eq!(grid.undersized, lengths.len() < min_bin);
    }

    #[test]
    fn sample_covariance_is_symmetric_psd(set in embedding_set()) {
        prop_assume!(set.len() >= 2);
        let vectors: Vec<&[f32]> = set.vectors().collect();
        let cov = sample_covariance(&vectors).unwrap();
        prop_assert_eq!(&cov, &cov.transpose());
        prop_assert!(eig_spectrum(&cov).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn curve_is_invariant_under_record_order(seed in any::<u64>(), min_bin in 5usize..60) {
        let mut rng = common::rng(seed);
        let q = common::random_rotation(&mut rng, 4);
        let set = common::embedding_set(vec![
            common::gaussian_records(&mut rng, &[3.0, 2.0, 1.0, 0.5], &q, 60, 10),
            common::gaussian_records(&mut rng, &[1.0, 1.0, 0.2, 0.1], &q, 60, 30),
        ]);
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.shuffle(&mut rng);
        let shuffled = set.select(&order).unwrap();
        let grid = [0.5, 1.0, 2.0, 3.0];
        let a = approx_rs_curve(&set, min_bin, &grid, 2.0).unwrap();
        let b = approx_rs_curve(&shuffled, min_bin, &grid, 2.0).unwrap();
        prop_assert_eq!(&a.grid, &b.grid);
        for (p, q) in a.curve.points().iter().zip(b.curve.points()) {
            prop_assert!((p.rate - q.rate).abs() <= 1e-10);
        }
    }
}

#[test]
fn rank_deficient_bin_has_exact_zeros() {
    let mut rng = common::rng(1);
    let q = common::random_rotation(&mut rng, 8);
    let (_, vectors) = common::gaussian_records(&mut rng, &[1.0; 8], &q, 4, 1);
    let eig = eig_spectrum(&sample_covariance(&vectors).unwrap()).unwrap();
    let spectra = sumrd::SpectrumSet::new(
        vec![sumrd::gaussian::SpectrumBin {
            weight: 1.0,
            eigenvalues: eig,
        }],
        1.0,
        2.0,
    )
    .unwrap();
    // four samples span at most three directions
    let zeros = spectra.bins()[0]
        .eigenvalues
        .iter()
        .filter(|&&v| v == 0.0)
        .count();
    assert!(zeros >= 5, "{:?}", spectra.bins()[0].eigenvalues);
    let p = sumrd::gaussian::water_fill_at_level(&spectra, 1e-9).unwrap();
    assert!(p.rate.is_finite());
}

fn max_relative_eigen_error(seed: u64, n: usize, truth: &[f64]) -> f64 {
    let mut rng = common::rng(seed);
    let identity = nalgebra::DMatrix::identity(truth.len(), truth.len());
    let (_, vectors) = common::gaussian_records(&mut rng, truth, &identity, n, 1);
    let eig = eig_spectrum(&sample_covariance(&vectors).unwrap()).unwrap();
    eig.iter()
        .zip(truth)
        .map(|(e, t)| (e - t).abs() / t)
        .fold(0.0, f64::max)
}

#[test]
fn sample_spectrum_matches_known_gaussian() {
    let truth = [5.0, 3.0, 2.0, 1.0, 0.5];
    let err = max_relative_eigen_error(17, 50_000, &truth);
    assert!(err <= 0.05, "relative eigenvalue error {err}");
}

#[test]
fn more_samples_give_better_spectra() {
    let truth = [4.0, 2.0, 1.0, 0.5];
    let median = |n: usize, base: u64| {
        let mut errs: Vec<f64> = (0..5)
            .map(|r| max_relative_eigen_error(base + r, n, &truth))
            .collect();
        errs.sort_by(f64::total_cmp);
        errs[2]
    };
    for base in [100, 200] {
        let small = median(2_000, base);
        let large = median(4_000, base + 50);
        assert!(large < small, "n=2000: {small}, n=4000: {large}");
    }
}
