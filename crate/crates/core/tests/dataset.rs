use std::collections::BTreeSet;
use std::io::Write;

use proptest::prelude::*;
use treesne::dataset::{
    cluster_mean_features, generate_synthetic, load_matrix, pca_reduce, read_csv_matrix, subset_by_cluster,
    write_csv_matrix, write_raw_matrix, DataMatrix, LabelVector, MatrixFormat, SyntheticKind, SyntheticParams,
};
use treesne::Error;

fn noise(n: usize, dim: usize, seed: u64) -> DataMatrix {
    generate_synthetic(SyntheticKind::UniformNoise, &SyntheticParams { n, dim, seed, ..Default::default() })
        .unwrap()
        .0
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix; eigenvectors are
/// the columns of the returned row-major matrix.
fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[test]
fn pca_matches_jacobi_oracle() {
    let (n, d, k) = (200, 50, 10);
    let data = noise(n, d, 5);
    let means: Vec<f64> = (0..d).map(|j| data.column(j).iter().sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = data.iter_rows().map(|r| r.iter().zip(&means).map(|(x, m)| x - m).collect()).collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..d).map(|b| centered.iter().map(|r| r[a] * r[b]).sum::<f64>() / (n - 1) as f64).collect())
        .collect();
    let (vals, vecs) = jacobi(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

    let got = pca_reduce(&data, k).unwrap();
    assert_eq!((got.rows(), got.cols()), (n, k));
    for (c, &e) in order.iter().take(k).enumerate() {
        let proj: Vec<f64> = centered.iter().map(|r| (0..d).map(|j| r[j] * vecs[j][e]).sum()).collect();
        let col = got.column(c);
        let sign = if proj.iter().zip(&col).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for (a, b) in proj.iter().zip(&col) {
            assert!((sign * a - b).abs() < 1e-8, "component {c}: {a} vs {b}");
        }
    }
}

#[test]
fn full_rank_pca_preserves_distances() {
    let data = noise(40, 6, 9);
    let reduced = pca_reduce(&data, 6).unwrap();
    let dist = |m: &DataMatrix, i: usize, j: usize| {
        m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    for i in 0..40 {
        for j in 0..40 {
            assert!((dist(&data, i, j) - dist(&reduced, i, j)).abs() < 1e-9);
        }
    }
}

#[test]
fn blob_points_nearest_their_own_centroid() {
    let (data, labels) = generate_synthetic(
        SyntheticKind::GaussianBlobs,
        &SyntheticParams { n: 500, dim: 10, centers: 5, std: 1.0, separation: 20.0, seed: 3 },
    )
    .unwrap();
    let means = cluster_mean_features(&data, &labels).unwrap();
    assert_eq!(means.len(), 5);
    for (row, &l) in data.iter_rows().zip(labels.labels()) {
        let nearest = means
            .iter()
            .map(|(k, m)| (row.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), *k))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap()
            .1;
        assert_eq!(nearest, l);
    }
}

#[test]
fn means_match_naive_summation() {
    let data = noise(300, 4, 2);
    let labels = LabelVector::new((0..300).map(|i| (i * 7) % 3).collect(), "l");
    let means = cluster_mean_features(&data, &labels).unwrap();
    for (l, m) in &means {
        let members: Vec<&[f64]> = data.iter_rows().zip(labels.labels()).filter(|(_, x)| *x == l).map(|(r, _)| r).collect();
        for (j, &got) in m.iter().enumerate() {
            let mut s = 0.0;
            for r in &members {
                s += r[j];
            }
            assert!((got - s / members.len() as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn csv_and_raw_files_round_trip() {
    let data = noise(25, 3, 4);
    let dir = tempfile::tempdir().unwrap();

    let csv_path = dir.path().join("m.csv");
    let mut f = std::fs::File::create(&csv_path).unwrap();
    writeln!(f, "a,b,c").unwrap();
    write_csv_matrix(&data, &mut f).unwrap();
    drop(f);
    assert_eq!(load_matrix(&csv_path, MatrixFormat::Csv).unwrap().values(), data.values());

    let raw_path = dir.path().join("m.bin");
    write_raw_matrix(&data, std::fs::File::create(&raw_path).unwrap()).unwrap();
    assert_eq!(load_matrix(&raw_path, MatrixFormat::RawF64).unwrap(), data);

    let missing = load_matrix(dir.path().join("absent.csv"), MatrixFormat::Csv);
    assert!(matches!(missing, Err(Error::NoSuchFile { .. })));
}

#[test]
fn ragged_rows_are_rejected() {
    let err = read_csv_matrix("1,2\n3\n".as_bytes()).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
}

proptest! {
    #[test]
    fn subsets_of_a_label_split_partition_the_rows(
        labels in prop::collection::vec(0usize..4, 5..60),
        keep in prop::collection::btree_set(0usize..4, 1..4),
    ) {
        let n = labels.len();
        let data = DataMatrix::new(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let lv = LabelVector::new(labels.clone(), "l");
        let rest: BTreeSet<usize> = (0..4).filter(|l| !keep.contains(l)).collect();
        let rows = |set: &BTreeSet<usize>| -> Vec<f64> {
            match subset_by_cluster(&data, &lv, set) {
                Ok(m) => m.values().to_vec(),
                Err(Error::EmptySubset) => Vec::new(),
                Err(e) => panic!("{e}"),
            }
        };
        let (a, b) = (rows(&keep), if rest.is_empty() { Vec::new() } else { rows(&rest) });
        prop_assert_eq!(a.len() + b.len(), n);
        let mut all: Vec<f64> = a.iter().chain(&b).copied().collect();
        all.sort_by(f64::total_cmp);
        prop_assert_eq!(all, (0..n).map(|i| i as f64).collect::<Vec<_>>());
        prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), kind in 0usize..4) {
        let kind = [SyntheticKind::GaussianBlobs, SyntheticKind::SwissRoll, SyntheticKind::UniformNoise, SyntheticKind::UniformPlane][kind];
        let params = SyntheticParams { n: 30, dim: 4, centers: 3, seed, ..Default::default() };
        prop_assert_eq!(generate_synthetic(kind, &params).unwrap(), generate_synthetic(kind, &params).unwrap());
    }
}
