use treesne::dataset::{generate_synthetic, DataMatrix, LabelVector, SyntheticKind, SyntheticParams};
use treesne::embed1d::LearningRate;
use treesne::tree::{build_tree, make_schedule, TreeConfig, TreeEmbedding};

fn blobs(n: usize, seed: u64) -> (DataMatrix, LabelVector) {
    generate_synthetic(
        SyntheticKind::GaussianBlobs,
        &SyntheticParams { n, dim: 10, centers: 5, std: 1.0, separation: 20.0, seed },
    )
    .unwrap()
}

fn quick(iterations: usize, later: usize) -> TreeConfig {
    let mut cfg = TreeConfig::default();
    cfg.first.iterations = iterations;
    cfg.first.early_iterations = iterations / 4;
    cfg.later.iterations = later;
    cfg
}

fn intervals_disjoint(coords: &[f64], labels: &[usize]) -> bool {
    let mut spans: Vec<(f64, f64)> = (0..5)
        .map(|c| {
            coords
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)))
        })
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    spans.windows(2).all(|w| w[0].1 < w[1].0)
}

#[test]
fn two_layers_separate_blobs() {
    let (data, labels) = blobs(500, 1);
    let schedule = make_schedule(500, 2, 0.01).unwrap();
    let tree = build_tree(&data, &schedule, &TreeConfig::default()).unwrap();
    for layer in tree.layers() {
        assert!(intervals_disjoint(layer.coords.coords(), labels.labels()), "layer {}", layer.number);
    }
}

#[test]
fn frozen_later_layers_equal_layer_one() {
    let (data, _) = blobs(100, 2);
    let schedule = make_schedule(100, 5, 0.01).unwrap();
    let mut cfg = quick(200, 50);
    cfg.later.learning_rate = LearningRate::Fixed(0.0);
    let tree = build_tree(&data, &schedule, &cfg).unwrap();
    let first = tree.layers()[0].coords.coords();
    for layer in &tree.layers()[1..] {
        assert_eq!(layer.coords.coords(), first);
    }
}

fn run(seed: u64) -> TreeEmbedding {
    let (data, _) = blobs(150, 3);
    let schedule = make_schedule(150, 4, 0.01).unwrap();
    build_tree(&data, &schedule, &TreeConfig { seed, ..quick(200, 50) }).unwrap()
}

#[test]
fn same_seed_same_tree() {
    assert_eq!(run(9), run(9));
    assert_ne!(run(9), run(10));
}

#[test]
fn layers_move_less_than_the_span() {
    let (data, _) = blobs(400, 4);
    let schedule = make_schedule(400, 6, 0.01).unwrap();
    let tree = build_tree(&data, &schedule, &TreeConfig::default()).unwrap();
    let (lo, hi) = tree.coord_range();
    for pair in tree.layers().windows(2) {
        let (a, b) = (pair[0].coords.coords(), pair[1].coords.coords());
        let mean = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
        assert!(mean.is_finite() && mean < hi - lo, "layer {}: {mean} vs span {}", pair[1].number, hi - lo);
    }
}

#[test]
fn layer_metadata_follows_schedule() {
    let tree = run(0);
    let schedule = make_schedule(150, 4, 0.01).unwrap();
    assert_eq!(tree.alphas(), schedule.alphas());
    assert_eq!(tree.layers()[0].alpha, 1.0);
    assert!(tree.layers().iter().enumerate().all(|(i, l)| l.number == i + 1 && l.coords.len() == 150));
}
