//! Per-layer clustering: mutual nearest-neighbor (SNN) graphs on a 1D
//! embedding, component counting, and kNN label extension from a subsample.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabelVector;
use crate::tree::TreeEmbedding;
use crate::{Error, Result};

/// Relative zero-eigenvalue tolerance for [`count_components_spectral`].
pub const SPECTRAL_TOLERANCE: f64 = 1e-8;

/// Gaps no wider than this fraction of a layer's span count as zero when
/// building SNN graphs.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-12;

/// Undirected graph with an edge between `i` and `j` iff each lies in the
/// other's `k_used`-distance neighborhood (see [`knn_1d`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnnGraph {
    k_used: usize,
    adjacency: Vec<Vec<usize>>,
}

impl SnnGraph {
    /// Builds a graph from an edge list. Self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::param(format!("edge ({i}, {j}) out of range for {n} vertices")));
            }
            if i == j {
                return Err(Error::param(format!("self-loop at {i}")));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for a in &mut adjacency {
            a.sort_unstable();
            a.dedup();
        }
        Ok(Self { k_used: 0, adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn k_used(&self) -> usize {
        self.k_used
    }

    /// Sorted neighbors of vertex `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, a)| a.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }
}

/// `ceil(beta * ln n)` clamped to `[1, n - 1]`.
pub fn snn_neighbor_count(n: usize, beta: f64) -> usize {
    let k = (beta * (n as f64).ln()).ceil();
    let hi = n.saturating_sub(1).max(1);
    if k.is_nan() || k < 1.0 {
        1
    } else {
        (k.min(hi as f64) as usize).clamp(1, hi)
    }
}

/// The k-distance neighborhood of every point on the line: all points no
/// farther than its k-th nearest neighbor, so every point tied at that
/// distance is included. Lists are sorted by (distance, index) and hold at
/// least `min(k, n - 1)` entries.
pub fn knn_1d(coords: &[f64], k: usize) -> Vec<Vec<usize>> {
    let n = coords.len();
    let k = k.min(n.saturating_sub(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(n);
    out.resize_with(n, Vec::new);
    if k == 0 {
        return out;
    }
    for (s, &i) in order.iter().enumerate() {
        let x = coords[i];
        let dist = |pos: usize| (coords[order[pos]] - x).abs();
        // Distance of the k-th neighbor, by merging the two sides.
        let (mut l, mut r) = (s, s + 1);
        let mut kth = 0.0f64;
        for _ in 0..k {
            let dl = if l > 0 { dist(l - 1) } else { f64::INFINITY };
            let dr = if r < n { dist(r) } else { f64::INFINITY };
            if dl <= dr {
                kth = dl;
                l -= 1;
            } else {
                kth = dr;
                r += 1;
            }
        }
        while l > 0 && dist(l - 1) <= kth {
            l -= 1;
        }
        while r < n && dist(r) <= kth {
            r += 1;
        }
        let mut picked: Vec<usize> = order[l..r].iter().copied().filter(|&j| j != i).collect();
        picked.sort_by(|&a, &b| (coords[a] - x).abs().total_cmp(&(coords[b] - x).abs()).then(a.cmp(&b)));
        out[i] = picked;
    }
    out
}

/// Coordinates with every chain of gaps at most `rel_tol * span` collapsed
/// onto the chain's smallest value.
pub fn snap_coincident(coords: &[f64], rel_tol: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]).then(a.cmp(&b)));
    let mut out = coords.to_vec();
    let (Some(&lo), Some(&hi)) = (order.first(), order.last()) else {
        return out;
    };
    let tol = rel_tol * (coords[hi] - coords[lo]);
    for w in order.windows(2) {
        if coords[w[1]] - coords[w[0]] <= tol {
            out[w[1]] = out[w[0]];
        }
    }
    out
}

/// Mutual k-distance-neighbor graph on `coords` after [`snap_coincident`]
/// with [`COINCIDENCE_TOLERANCE`].
pub fn snn_graph(coords: &[f64], beta: f64) -> Result<SnnGraph> {
    let n = coords.len();
    if n < 3 {
        return Err(Error::param(format!("SNN graph needs at least 3 points, got {n}")));
    }
    if !(beta > 0.0) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    let k_used = snn_neighbor_count(n, beta);
    let mut lists = knn_1d(&snap_coincident(coords, COINCIDENCE_TOLERANCE), k_used);
    for l in &mut lists {
        l.sort_unstable();
    }
    let adjacency = (0..n)
        .map(|i| {
            lists[i]
                .iter()
                .copied()
                .filter(|&j| lists[j].binary_search(&i).is_ok())
                .collect()
        })
        .collect();
    Ok(SnnGraph { k_used, adjacency })
}

/// Number of eigenvalues of `L = D - W` below `tolerance` times the largest
/// eigenvalue. A graph without edges has `n` components.
pub fn count_components_spectral(graph: &SnnGraph, tolerance: f64) -> Result<usize> {
    let n = graph.n();
    if n == 0 {
        return Err(Error::param("empty graph"));
    }
    if graph.n_edges() == 0 {
        return Ok(n);
    }
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let nb = graph.neighbors(i);
        lap[(i, i)] = nb.len() as f64;
        for &j in nb {
            lap[(i, j)] = -1.0;
        }
    }
    let eig = SymmetricEigen::try_new(lap, 1e-14, 10_000)
        .ok_or_else(|| Error::Eigen(format!("no convergence on a {n}-vertex Laplacian")))?;
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    let cut = tolerance * top;
    Ok(eig.eigenvalues.iter().filter(|&&v| v < cut).count())
}

/// Connected components, numbered in order of their smallest vertex.
pub fn component_labels(graph: &SnnGraph) -> LabelVector {
    let n = graph.n();
    let mut labels = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut next = 0;
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in graph.neighbors(v) {
                if labels[w] == usize::MAX {
                    labels[w] = next;
                    queue.push_back(w);
                }
            }
        }
        next += 1;
    }
    LabelVector::new(labels, "components")
}

/// How clusters are counted on the SNN graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMethod {
    /// Breadth-first connected components.
    Components,
    /// Laplacian zero eigenvalues, with labels from the components.
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub beta: f64,
    pub subsample_cap: usize,
    /// Neighbors voting when labels are extended to unsampled points.
    pub knn_k: usize,
    pub seed: u64,
    /// Draw the same subsample for every layer instead of one per layer.
    pub fixed_subsample: bool,
    pub method: CountMethod,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            beta: 2.0,
            subsample_cap: 2000,
            knn_k: 10,
            seed: 0,
            fixed_subsample: false,
            method: CountMethod::Components,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerClustering {
    pub labels: LabelVector,
    pub k: usize,
    /// 1-based layer number.
    pub layer: usize,
    /// Points the graph was built on, in increasing order.
    pub subsample_indices: Vec<usize>,
}

pub fn cluster_layer(coords: &[f64], layer: usize, cfg: &ClusterConfig) -> Result<LayerClustering> {
    let n = coords.len();
    if n < 3 {
        return Err(Error::param(format!("clustering needs at least 3 points, got {n}")));
    }
    if cfg.subsample_cap < 3 || cfg.knn_k == 0 {
        return Err(Error::param("subsample_cap must be >= 3 and knn_k >= 1"));
    }
    let subsample: Vec<usize> = if n <= cfg.subsample_cap {
        (0..n).collect()
    } else {
        let seed = if cfg.fixed_subsample {
            cfg.seed
        } else {
            cfg.seed.wrapping_add(layer as u64)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, n, cfg.subsample_cap).into_vec();
        idx.sort_unstable();
        idx
    };
    let sub_coords: Vec<f64> = subsample.iter().map(|&i| coords[i]).collect();
    let graph = snn_graph(&sub_coords, cfg.beta)?;
    let sub_labels = component_labels(&graph);
    let k = match cfg.method {
        CountMethod::Components => sub_labels.n_distinct(),
        CountMethod::Spectral => {
            let k = count_components_spectral(&graph, SPECTRAL_TOLERANCE)?;
            if k != sub_labels.n_distinct() {
                return Err(Error::Eigen(format!(
                    "spectral count {k} disagrees with {} components",
                    sub_labels.n_distinct()
                )));
            }
            k
        }
    };
    let labels = if subsample.len() == n {
        sub_labels.labels().to_vec()
    } else {
        extend_labels(coords, &subsample, sub_labels.labels(), cfg.knn_k)
    };
    Ok(LayerClustering {
        labels: LabelVector::new(labels, format!("layer{layer}")),
        k,
        layer,
        subsample_indices: subsample,
    })
}

/// Majority vote over the `knn_k` nearest subsampled points; ties go to the
/// label of the single nearest one.
fn extend_labels(coords: &[f64], subsample: &[usize], sub_labels: &[usize], knn_k: usize) -> Vec<usize> {
    let mut sorted: Vec<(f64, usize)> = subsample.iter().zip(sub_labels).map(|(&i, &l)| (coords[i], l)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = sorted.len();
    let k = knn_k.min(m);
    let n_labels = sub_labels.iter().max().map_or(0, |&v| v + 1);
    let mut votes = vec![0usize; n_labels];
    let mut out = vec![0; coords.len()];
    let mut in_sub = vec![false; coords.len()];
    for (&i, &l) in subsample.iter().zip(sub_labels) {
        in_sub[i] = true;
        out[i] = l;
    }
    for (i, &x) in coords.iter().enumerate() {
        if in_sub[i] {
            continue;
        }
        let mut r = sorted.partition_point(|&(c, _)| c < x);
        let mut l = r;
        votes.iter_mut().for_each(|v| *v = 0);
        let mut nearest = None;
        for _ in 0..k {
            let dl = if l > 0 { x - sorted[l - 1].0 } else { f64::INFINITY };
            let dr = if r < m { sorted[r].0 - x } else { f64::INFINITY };
            let label = if dl <= dr {
                l -= 1;
                sorted[l].1
            } else {
                r += 1;
                sorted[r - 1].1
            };
            nearest.get_or_insert(label);
            votes[label] += 1;
        }
        let best = votes.iter().copied().max().unwrap_or(0);
        let nearest = nearest.unwrap_or(0);
        out[i] = if votes[nearest] == best {
            nearest
        } else {
            votes.iter().position(|&v| v == best).unwrap_or(nearest)
        };
    }
    out
}

/// Clusters every layer of the tree.
pub fn cluster_tree(tree: &TreeEmbedding, cfg: &ClusterConfig) -> Result<Vec<LayerClustering>> {
    tree.layers()
        .iter()
        .map(|l| {
            cluster_layer(l.coords.coords(), l.number, cfg).map_err(|e| Error::Layer {
                layer: l.number,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangles() -> SnnGraph {
        SnnGraph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap()
    }

    #[test]
    fn neighbor_count_rule() {
        assert_eq!(snn_neighbor_count(2000, 2.0), 16);
        assert_eq!(snn_neighbor_count(3, 2.0), 2);
        assert_eq!(snn_neighbor_count(100, 0.01), 1);
        assert_eq!(snn_neighbor_count(1000, 1.3), 9);
    }

    #[test]
    fn disjoint_triangles() {
        let g = triangles();
        assert_eq!(count_components_spectral(&g, SPECTRAL_TOLERANCE).unwrap(), 2);
        assert_eq!(component_labels(&g).labels(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn path_is_connected() {
        let edges: Vec<_> = (0..9).map(|i| (i, i + 1)).collect();
        let g = SnnGraph::from_edges(10, &edges).unwrap();
        assert_eq!(count_components_spectral(&g, SPECTRAL_TOLERANCE).unwrap(), 1);
        assert_eq!(component_labels(&g).n_distinct(), 1);
    }

    #[test]
    fn complete_graph_single_label() {
        let edges: Vec<_> = (0..8).flat_map(|i| (i + 1..8).map(move |j| (i, j))).collect();
        let g = SnnGraph::from_edges(8, &edges).unwrap();
        assert!(component_labels(&g).labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn edgeless_graph() {
        let g = SnnGraph::from_edges(4, &[]).unwrap();
        assert_eq!(count_components_spectral(&g, SPECTRAL_TOLERANCE).unwrap(), 4);
        assert_eq!(component_labels(&g).labels(), &[0, 1, 2, 3]);
    }

    #[test]
    fn self_loops_rejected() {
        assert!(SnnGraph::from_edges(3, &[(1, 1)]).is_err());
        assert!(SnnGraph::from_edges(3, &[(1, 3)]).is_err());
    }

    #[test]
    fn components_numbered_by_smallest_member() {
        let g = SnnGraph::from_edges(5, &[(4, 0), (1, 3)]).unwrap();
        assert_eq!(component_labels(&g).labels(), &[0, 1, 2, 1, 0]);
    }

    #[test]
    fn gap_separates_groups() {
        let mut coords: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        coords.extend((0..20).map(|i| 100.0 + i as f64 * 0.1));
        let g = snn_graph(&coords, 2.0).unwrap();
        assert!(g.k_used() < 20);
        assert!(g.edges().all(|(i, j)| (i < 20) == (j < 20)));
        assert_eq!(component_labels(&g).n_distinct(), 2);
    }

    #[test]
    fn knn_includes_ties_at_kth_distance() {
        let coords = [0.0, 1.0, -1.0, 1.0, 3.0];
        let nn = knn_1d(&coords, 2);
        assert_eq!(nn[0], vec![1, 2, 3]);
        assert_eq!(nn[4], vec![1, 3]);
        let nn = knn_1d(&[5.0, 5.0, 5.0, 5.0], 2);
        assert_eq!(nn[3], vec![0, 1, 2]);
    }

    #[test]
    fn coincident_points_form_one_component() {
        let mut coords = vec![2.0; 50];
        coords.extend(vec![-7.5; 30]);
        let g = snn_graph(&coords, 2.0).unwrap();
        assert_eq!(component_labels(&g).n_distinct(), 2);
    }

    #[test]
    fn rounding_noise_is_one_component() {
        let mut coords: Vec<f64> = (0..40).map(|i| 4.5 + (i % 4) as f64 * f64::EPSILON * 4.0).collect();
        coords.extend((0..40).map(|i| -4.5 - (i % 3) as f64 * f64::EPSILON * 4.0));
        let g = snn_graph(&coords, 2.0).unwrap();
        assert_eq!(component_labels(&g).n_distinct(), 2);
        assert_eq!(snap_coincident(&[3.0, 1.0, 1.0 + 1e-13, 2.0], 1e-12), vec![3.0, 1.0, 1.0, 2.0]);
        assert_eq!(snap_coincident(&[], 1e-12), Vec::<f64>::new());
    }

    #[test]
    fn snn_rejects_bad_input() {
        assert!(snn_graph(&[0.0, 1.0], 2.0).is_err());
        assert!(snn_graph(&[0.0, 1.0, 2.0], 0.0).is_err());
        assert!(cluster_layer(&[0.0, 1.0], 1, &ClusterConfig::default()).is_err());
    }

    #[test]
    fn two_gap_layer() {
        let coords: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { i as f64 * 0.01 } else { 50.0 + i as f64 * 0.01 }).collect();
        let c = cluster_layer(&coords, 1, &ClusterConfig::default()).unwrap();
        assert_eq!(c.k, 2);
        for (i, &l) in c.labels.labels().iter().enumerate() {
            assert_eq!(l, i % 2);
        }
        assert_eq!(c.subsample_indices, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn spectral_method_agrees_in_cluster_layer() {
        let coords: Vec<f64> = (0..60).map(|i| (i / 20) as f64 * 30.0 + (i % 20) as f64 * 0.05).collect();
        let cfg = ClusterConfig {
            method: CountMethod::Spectral,
            ..ClusterConfig::default()
        };
        assert_eq!(cluster_layer(&coords, 1, &cfg).unwrap().k, 3);
    }

    #[test]
    fn extension_majority_and_tie() {
        let coords = [0.0, 1.0, 2.0, 10.0, 11.0, 1.4];
        let sub = [0, 1, 2, 3, 4];
        let labels = [0, 0, 1, 1, 1];
        // Neighbors of 1.4 by distance: 1 (0), 2 (1), 0 (0) -> majority 0.
        assert_eq!(extend_labels(&coords, &sub, &labels, 3)[5], 0);
        // Two voters: 1 (label 0) and 2 (label 1) tie -> nearest wins.
        assert_eq!(extend_labels(&coords, &sub, &labels, 2)[5], 0);
        let labels = [1, 0, 1, 1, 1];
        // Voters 1 (label 0) and 2 (label 1): nearest is index 1.
        assert_eq!(extend_labels(&coords, &sub, &labels, 2)[5], 0);
    }
}
