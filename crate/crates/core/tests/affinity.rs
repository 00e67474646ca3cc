use proptest::prelude::*;
use treesne::affinity::{build_affinities, calibrate_bandwidths, conditional_row, knn, CalibrationOptions};
use treesne::dataset::{generate_synthetic, DataMatrix, SyntheticKind, SyntheticParams};

fn noise(n: usize, dim: usize, seed: u64) -> DataMatrix {
    generate_synthetic(SyntheticKind::UniformNoise, &SyntheticParams { n, dim, seed, ..Default::default() })
        .unwrap()
        .0
}

fn sq_dist(data: &DataMatrix, i: usize, j: usize) -> f64 {
    data.row(i).iter().zip(data.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[test]
fn knn_matches_brute_force() {
    let data = noise(500, 8, 1);
    let nn = knn(&data, 10).unwrap();
    for i in 0..500 {
        let mut all: Vec<(f64, usize)> = (0..500).filter(|&j| j != i).map(|j| (sq_dist(&data, i, j), j)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let expected: Vec<usize> = all.iter().take(10).map(|p| p.1).collect();
        assert_eq!(nn.indices(i), &expected[..], "point {i}");
        for (d, p) in nn.sq_dists(i).iter().zip(&all) {
            assert_eq!(*d, p.0);
        }
    }
}

#[test]
fn calibrated_rows_hit_target_entropy() {
    let data = noise(100, 5, 2);
    let nn = knn(&data, 45).unwrap();
    let calib = calibrate_bandwidths(&nn, 15.0, &CalibrationOptions::default()).unwrap();
    assert!(calib.unconverged.is_empty());
    let mut row = Vec::new();
    for i in 0..100 {
        conditional_row(nn.sq_dists(i), calib.sigmas[i], &mut row);
        let h: f64 = row.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
        assert!((h - 15f64.log2()).abs() < 1e-4, "point {i}: {h}");
    }
}

#[test]
fn affinities_match_dense_reference() {
    let n = 50;
    let data = noise(n, 4, 3);
    let nn = knn(&data, n - 1).unwrap();
    let calib = calibrate_bandwidths(&nn, 12.0, &CalibrationOptions::default()).unwrap();
    let p = build_affinities(&nn, &calib).unwrap();

    let cond = |i: usize, j: usize| {
        let s2 = 2.0 * calib.sigmas[i] * calib.sigmas[i];
        let num = (-sq_dist(&data, i, j) / s2).exp();
        let den: f64 = (0..n).filter(|&k| k != i).map(|k| (-sq_dist(&data, i, k) / s2).exp()).sum();
        num / den
    };
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { 0.0 } else { (cond(i, j) + cond(j, i)) / (2.0 * n as f64) };
            assert!((p.get(i, j) - expected).abs() < 1e-10, "({i}, {j})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn affinities_symmetric_and_normalized(seed in any::<u64>(), n in 12usize..60, perp in 2.0f64..5.0) {
        let data = noise(n, 3, seed);
        let nn = knn(&data, (3.0 * perp).ceil() as usize).unwrap();
        let calib = calibrate_bandwidths(&nn, perp, &CalibrationOptions::default()).unwrap();
        let p = build_affinities(&nn, &calib).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-12);
        for (i, j, v) in p.iter() {
            prop_assert!(i != j && v > 0.0);
            prop_assert_eq!(v, p.get(j, i));
        }
    }
}
