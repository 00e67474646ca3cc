//! WebAssembly bindings for the browser demo in `www/`.

use wasm_bindgen::prelude::*;

use treesne::alphasel::{nmi, select_alpha_clustering};
use treesne::cluster::{cluster_tree, ClusterConfig};
use treesne::dataset::{generate_synthetic, SyntheticKind, SyntheticParams};
use treesne::embed1d::{kernel, KernelParam};
use treesne::tree::{build_tree, effective_perplexity, make_schedule, TreeConfig};
use treesne::viz::{render_tree, ColorSource, PlotSpec};

fn message(e: treesne::Error) -> String {
    e.to_string()
}

/// Per-layer α and perplexity for a dataset size.
#[wasm_bindgen]
pub struct Schedule {
    ratio: f64,
    alphas: Vec<f64>,
    perplexities: Vec<f64>,
}

#[wasm_bindgen]
impl Schedule {
    #[wasm_bindgen(getter)]
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    #[wasm_bindgen(getter)]
    pub fn alphas(&self) -> Vec<f64> {
        self.alphas.clone()
    }

    /// Perplexities after clamping to what `n_points` supports.
    #[wasm_bindgen(getter)]
    pub fn perplexities(&self) -> Vec<f64> {
        self.perplexities.clone()
    }
}

#[wasm_bindgen]
pub fn schedule(n_points: usize, n_layers: usize, alpha_floor: f64) -> Result<Schedule, String> {
    let s = make_schedule(n_points, n_layers, alpha_floor).map_err(message)?;
    Ok(Schedule {
        ratio: s.ratio(),
        alphas: s.alphas().to_vec(),
        perplexities: s.perplexities().iter().map(|&p| effective_perplexity(p, n_points)).collect(),
    })
}

/// `samples` evenly spaced values of the α-kernel on `[0, d_max]`.
#[wasm_bindgen]
pub fn kernel_curve(alpha: f64, d_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    let a = KernelParam::new(alpha).map_err(message)?;
    if samples < 2 || !(d_max > 0.0) {
        return Err("need at least 2 samples and a positive range".into());
    }
    Ok((0..samples).map(|i| kernel(d_max * i as f64 / (samples - 1) as f64, a)).collect())
}

/// Outcome of [`run_demo`].
#[wasm_bindgen]
pub struct DemoRun {
    svg: String,
    k: usize,
    nmi: f64,
    summary: String,
}

#[wasm_bindgen]
impl DemoRun {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn k(&self) -> usize {
        self.k
    }

    /// NMI of the selected clustering against the generating labels.
    #[wasm_bindgen(getter)]
    pub fn nmi(&self) -> f64 {
        self.nmi
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

/// Generates a synthetic dataset, builds a short tree, selects the
/// alpha-clustering and renders the tree colored by it.
#[wasm_bindgen]
pub fn run_demo(kind: &str, n: usize, centers: usize, n_layers: usize, seed: u64) -> Result<DemoRun, String> {
    let kind: SyntheticKind = kind.parse().map_err(message)?;
    let params = SyntheticParams { n, dim: 10, centers, seed, ..SyntheticParams::default() };
    let (data, truth) = generate_synthetic(kind, &params).map_err(message)?;
    let schedule = make_schedule(data.rows(), n_layers, 0.01).map_err(message)?;
    let mut cfg = TreeConfig { seed, ..TreeConfig::default() };
    cfg.first.iterations = 400;
    cfg.first.early_iterations = 100;
    cfg.later.iterations = 100;
    let tree = build_tree(&data, &schedule, &cfg).map_err(message)?;
    let layers = cluster_tree(&tree, &ClusterConfig { seed, ..ClusterConfig::default() }).map_err(message)?;
    let selected = select_alpha_clustering(&layers, &tree.alphas()).map_err(message)?;
    let spec = PlotSpec { width: 720, height: 420, ..PlotSpec::default() };
    let svg = render_tree(&tree, ColorSource::Labels(&selected.labels), &spec).map_err(message)?;
    let layer_k: Vec<String> = layers.iter().map(|l| l.k.to_string()).collect();
    Ok(DemoRun {
        svg,
        k: selected.k,
        nmi: nmi(&selected.labels, &truth).map_err(message)?,
        summary: format!("{selected}layer_k={}\n", layer_k.join(",")),
    })
}
