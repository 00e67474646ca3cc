//! Tree-SNE: hierarchical visualization built from stacked one-dimensional
//! t-SNE embeddings, plus alpha-clustering on top of the stack.
//!
//! The pipeline is
//!
//! 1. [`dataset`] loads (and optionally PCA-reduces) an observation matrix,
//! 2. [`tree::build_tree`] optimizes one 1D embedding per layer while the
//!    kernel parameter α and the perplexity shrink geometrically, each layer
//!    warm-started from the one below,
//! 3. [`cluster::cluster_layer`] counts the connected components of a mutual
//!    nearest-neighbor graph on every layer,
//! 4. [`alphasel::select_alpha_clustering`] picks the clustering that stays
//!    stable over the widest α range,
//! 5. [`viz::render_tree`] draws the stack as an SVG.
//!
//! ```
//! use treesne::{dataset, tree, cluster, alphasel};
//!
//! let params = dataset::SyntheticParams { n: 120, dim: 4, centers: 3, std: 1.0, separation: 30.0, seed: 7 };
//! let (data, truth) = dataset::generate_synthetic(dataset::SyntheticKind::GaussianBlobs, &params).unwrap();
//! let schedule = tree::make_schedule(data.rows(), 4, 0.01).unwrap();
//! let mut cfg = tree::TreeConfig::default();
//! cfg.first.iterations = 300;
//! cfg.later.iterations = 60;
//! let stack = tree::build_tree(&data, &schedule, &cfg).unwrap();
//! let layers = cluster::cluster_tree(&stack, &cluster::ClusterConfig::default()).unwrap();
//! let best = alphasel::select_alpha_clustering(&layers, &stack.alphas()).unwrap();
//! assert!(alphasel::nmi(&best.labels, &truth).unwrap() > 0.9);
//! ```

pub mod affinity;
pub mod alphasel;
pub mod cluster;
pub mod dataset;
pub mod embed1d;
mod error;
pub mod tree;
pub mod viz;

pub use error::{Error, Result};
