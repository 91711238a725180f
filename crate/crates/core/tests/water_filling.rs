use proptest::prelude::*;
use sumrd::gaussian::{default_distortion_grid, SpectrumBin};
use sumrd::{gaussian_curve, solve_for_distortion, SpectrumSet};

const STEP: f64 = 1e-3;

fn single_bin(eigenvalues: Vec<f64>) -> SpectrumSet {
    SpectrumSet::new(
        vec![SpectrumBin {
            weight: 1.0,
            eigenvalues,
        }],
        1.0,
        2.0,
    )
    .unwrap()
}

/// Smallest rate over per-component allocations on a `STEP` grid whose sum
/// stays within `target`. The last component takes whatever budget is left,
/// since rate only falls as its allocation grows.
fn brute_force_rate(eigenvalues: &[f64], target: f64) -> f64 {
    let rate = |l: f64, d: f64| if d >= l { 0.0 } else { 0.5 * (l / d).log2() };
    fn levels(l: f64) -> impl Iterator<Item = f64> {
        (1..).map(|k| k as f64 * STEP).take_while(move |&d| d <= l)
    }
    let (last, rest) = eigenvalues.split_last().unwrap();
    let finish = |used: f64, r: f64| {
        let left = target - used;
        if left <= 0.0 {
            f64::INFINITY
        } else {
            r + rate(*last, left.min(*last))
        }
    };
    match rest {
        [] => finish(0.0, 0.0),
        [a] => levels(*a)
            .map(|d| finish(d, rate(*a, d)))
            .fold(f64::INFINITY, f64::min),
        [a, b] => levels(*a)
            .flat_map(|da| levels(*b).map(move |db| (da, db)))
            .map(|(da, db)| finish(da + db, rate(*a, da) + rate(*b, db)))
            .fold(f64::INFINITY, f64::min),
        _ => unreachable!("at most three components"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn water_filling_matches_brute_force_allocation(
        eigenvalues in prop::collection::vec(0.2..2.0f64, 1..=3),
        fraction in 0.3..0.9f64,
    ) {
        let spectra = single_bin(eigenvalues);
        let target = fraction * spectra.total_mass();
        let sol = solve_for_distortion(&spectra, target).unwrap();
        let brute = brute_force_rate(&spectra.bins()[0].eigenvalues, target);
        // the grid only restricts the allocations, so it can never win
        prop_assert!(sol.rate <= brute + 1e-9, "water-filled {} above grid {}", sol.rate, brute);
        prop_assert!(brute - sol.rate <= 0.02, "grid {} far above water-filled {}", brute, sol.rate);
    }

    #[test]
    fn allocations_follow_the_water_level(
        raw in prop::collection::vec(
            (0.05..1.0f64, prop::collection::vec(0.0..10.0f64, 4)),
            1..=3,
        ),
        fraction in 0.01..1.0f64,
    ) {
        let total: f64 = raw.iter().map(|(w, _)| w).sum();
        let bins = raw
            .into_iter()
            .map(|(w, eigenvalues)| SpectrumBin { weight: w / total, eigenvalues })
            .collect();
        let spectra = SpectrumSet::new(bins, 3.0, 2.0).unwrap();
        prop_assume!(spectra.total_mass() > 0.0);
        let target = fraction * spectra.total_mass();
        let sol = solve_for_distortion(&spectra, target).unwrap();
        for (bin, alloc) in spectra.bins().iter().zip(&sol.allocations) {
            for (&l, &d) in bin.eigenvalues.iter().zip(alloc) {
                prop_assert_eq!(d, sol.level.min(l));
            }
        }
        prop_assert!((sol.distortion - target).abs() <= 1e-9 * target.max(1.0));
    }
}

#[test]
fn curve_matches_pointwise_solves() {
    let spectra = single_bin(vec![4.0, 1.0]);
    let grid = default_distortion_grid(&spectra, 50, 1e-3);
    let curve = gaussian_curve(&spectra, &grid).unwrap();
    assert_eq!(curve.len(), 50);
    for (p, &d) in curve.points().iter().zip(&grid) {
        let direct = solve_for_distortion(&spectra, d).unwrap();
        assert!((p.rate - direct.rate).abs() <= 1e-9 * direct.rate.max(1.0));
    }
}

#[test]
fn single_point_at_the_mass_has_zero_rate() {
    let spectra = single_bin(vec![4.0, 1.0]);
    let curve = gaussian_curve(&spectra, &[spectra.total_mass()]).unwrap();
    assert_eq!(curve.len(), 1);
    assert_eq!(curve.points()[0].distortion, 5.0);
    assert_eq!(curve.points()[0].rate, 0.0);
}
