//! The layer stack: the geometric (alpha, perplexity) schedule and the
//! warm-started sequence of 1D embeddings built from it.

use std::io::{BufRead, BufReader, Read, Write};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::affinity::{self, CalibrationOptions};
use crate::dataset::{DataMatrix, LabelVector};
use crate::embed1d::{self, Embedding1D, KernelParam, LearningRate, OptimizerConfig};
use crate::{Error, Result};

/// Lowest perplexity a layer is calibrated at.
pub const MIN_PERPLEXITY: f64 = 2.0;

/// Per-layer kernel parameters: `alpha_1 = 1`, `alpha_{l+1} = r * alpha_l`,
/// `p_1 = sqrt(N)`, `p_{l+1} = p_l^r`, with `r = alpha_floor^(1 / n_layers)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSchedule {
    r: f64,
    alpha_floor: f64,
    alphas: Vec<f64>,
    perplexities: Vec<f64>,
}

impl LayerSchedule {
    pub fn n_layers(&self) -> usize {
        self.alphas.len()
    }

    pub fn ratio(&self) -> f64 {
        self.r
    }

    pub fn alpha_floor(&self) -> f64 {
        self.alpha_floor
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Raw scheduled perplexities, before any clamping.
    pub fn perplexities(&self) -> &[f64] {
        &self.perplexities
    }
}

pub fn make_schedule(n_points: usize, n_layers: usize, alpha_floor: f64) -> Result<LayerSchedule> {
    if n_layers < 2 {
        return Err(Error::param(format!("need at least 2 layers, got {n_layers}")));
    }
    if !(alpha_floor > 0.0 && alpha_floor < 1.0) {
        return Err(Error::param(format!("alpha_floor must be in (0, 1), got {alpha_floor}")));
    }
    if n_points < 2 {
        return Err(Error::param("need at least 2 points"));
    }
    let r = (alpha_floor.ln() / n_layers as f64).exp();
    let mut alphas = Vec::with_capacity(n_layers);
    let mut perplexities = Vec::with_capacity(n_layers);
    let (mut a, mut p) = (1.0f64, (n_points as f64).sqrt());
    for _ in 0..n_layers {
        alphas.push(a);
        perplexities.push(p);
        a *= r;
        p = p.powf(r);
    }
    Ok(LayerSchedule {
        r,
        alpha_floor,
        alphas,
        perplexities,
    })
}

/// Perplexity actually used for a layer: at least [`MIN_PERPLEXITY`], at most
/// `(N - 1) / 3`.
pub fn effective_perplexity(scheduled: f64, n_points: usize) -> f64 {
    let cap = (n_points as f64 - 1.0) / 3.0;
    scheduled.max(MIN_PERPLEXITY).min(cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// 1-based position in the stack.
    pub number: usize,
    pub alpha: f64,
    /// Perplexity the layer's affinities were calibrated at.
    pub perplexity: f64,
    pub coords: Embedding1D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEmbedding {
    n: usize,
    layers: Vec<Layer>,
}

impl TreeEmbedding {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let n = layers.first().map(|l| l.coords.len()).ok_or_else(|| Error::param("tree has no layers"))?;
        for (i, l) in layers.iter().enumerate() {
            if l.coords.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: l.coords.len(),
                });
            }
            if l.number != i + 1 {
                return Err(Error::param(format!("layer {} found at position {}", l.number, i + 1)));
            }
        }
        Ok(Self { n, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.alpha).collect()
    }

    /// Global coordinate range over all layers.
    pub fn coord_range(&self) -> (f64, f64) {
        self.layers
            .iter()
            .flat_map(|l| l.coords.coords())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Optimizer settings for the first layer and for every warm-started layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub first: OptimizerConfig,
    pub later: OptimizerConfig,
    pub calibration: CalibrationOptions,
    /// Standard deviation of the random first-layer initialization.
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            first: OptimizerConfig::default(),
            later: OptimizerConfig {
                iterations: 250,
                learning_rate: LearningRate::PerPoint(0.1 / 48.0),
                early_iterations: 0,
                ..OptimizerConfig::default()
            },
            calibration: CalibrationOptions::default(),
            init_std: 1e-4,
            seed: 0,
        }
    }
}

/// Optimizes one embedding per scheduled layer. Layer 1 starts from a small
/// random Gaussian; every later layer starts from the coordinates of the
/// layer below, with affinities recalibrated at its own perplexity over a
/// fixed neighbor graph.
pub fn build_tree(data: &DataMatrix, schedule: &LayerSchedule, cfg: &TreeConfig) -> Result<TreeEmbedding> {
    let n = data.rows();
    if n < 10 {
        return Err(Error::param(format!("tree-SNE needs at least 10 points, got {n}")));
    }
    cfg.first.validate()?;
    cfg.later.validate()?;

    let first_perplexity = effective_perplexity(schedule.perplexities[0], n);
    let k = affinity::support_size(n, first_perplexity);
    let neighbors = affinity::knn(data, k)?;
    info!("{n} points, {} layers, r = {:.6}, {k} neighbors", schedule.n_layers(), schedule.r);

    let clamped: Vec<usize> = (1..=schedule.n_layers())
        .filter(|&l| effective_perplexity(schedule.perplexities[l - 1], n) != schedule.perplexities[l - 1])
        .collect();
    if let (Some(first), Some(last)) = (clamped.first(), clamped.last()) {
        warn!("scheduled perplexity clamped to [{MIN_PERPLEXITY}, {}] on {} layers ({first}..={last})", (n - 1) as f64 / 3.0, clamped.len());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            cfg.init_std * z
        })
        .collect();
    let mean = init.iter().sum::<f64>() / n as f64;
    let mut current = Embedding1D::new(init.into_iter().map(|v| v - mean).collect())?;
    let mut layers = Vec::with_capacity(schedule.n_layers());

    for (idx, (&alpha, &scheduled)) in schedule.alphas.iter().zip(&schedule.perplexities).enumerate() {
        let number = idx + 1;
        let perplexity = effective_perplexity(scheduled, n);
        let wrap = |e: Error| Error::Layer {
            layer: number,
            source: Box::new(e),
        };
        let calib = affinity::calibrate_bandwidths(&neighbors, perplexity, &cfg.calibration).map_err(wrap)?;
        let p = affinity::build_affinities(&neighbors, &calib).map_err(wrap)?;
        let kernel = KernelParam::new(alpha).map_err(wrap)?;
        let mut opt = if number == 1 { cfg.first.clone() } else { cfg.later.clone() };
        opt.seed = cfg.seed.wrapping_add(number as u64);
        current = embed1d::optimize(&p, &current, kernel, &opt).map_err(wrap)?;
        info!("layer {number}: alpha {alpha:.5}, perplexity {perplexity:.3}");
        layers.push(Layer {
            number,
            alpha,
            perplexity,
            coords: current.clone(),
        });
    }
    TreeEmbedding::new(layers)
}

/// Writes `layer,point_index,coord,alpha,perplexity` rows (plus
/// `cluster_label` when per-layer labels are given), one per point per layer.
pub fn write_tree_csv<W: Write>(tree: &TreeEmbedding, labels: Option<&[LabelVector]>, mut out: W) -> Result<()> {
    if let Some(ls) = labels {
        if ls.len() != tree.n_layers() {
            return Err(Error::LengthMismatch {
                expected: tree.n_layers(),
                got: ls.len(),
            });
        }
        for l in ls {
            l.check_len(tree.n)?;
        }
    }
    let mut buf = String::new();
    buf.push_str("layer,point_index,coord,alpha,perplexity");
    if labels.is_some() {
        buf.push_str(",cluster_label");
    }
    buf.push('\n');
    for (li, layer) in tree.layers.iter().enumerate() {
        for (i, c) in layer.coords.coords().iter().enumerate() {
            buf.push_str(&format!("{},{},{},{},{}", layer.number, i, c, layer.alpha, layer.perplexity));
            if let Some(ls) = labels {
                buf.push_str(&format!(",{}", ls[li].labels()[i]));
            }
            buf.push('\n');
        }
        out.write_all(buf.as_bytes())?;
        buf.clear();
    }
    Ok(())
}

/// Parses what [`write_tree_csv`] writes. Returns per-layer labels when the
/// `cluster_label` column is present.
pub fn read_tree_csv<R: Read>(reader: R) -> Result<(TreeEmbedding, Option<Vec<LabelVector>>)> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines.next().ok_or(Error::NoRows)??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let with_labels = match cols.as_slice() {
        ["layer", "point_index", "coord", "alpha", "perplexity"] => false,
        ["layer", "point_index", "coord", "alpha", "perplexity", "cluster_label"] => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unexpected tree header '{header}'"),
            })
        }
    };
    let mut layers: Vec<(usize, f64, f64, Vec<f64>, Vec<usize>)> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx as u64 + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: line_no, msg };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad(format!("expected {} fields, found {}", cols.len(), fields.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{e}: '{s}'")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{e}: '{s}'")));
        let (number, point, coord, alpha, perp) =
            (int(fields[0])?, int(fields[1])?, real(fields[2])?, real(fields[3])?, real(fields[4])?);
        if layers.last().map(|l| l.0) != Some(number) {
            if number != layers.len() + 1 {
                return Err(bad(format!("layer {number} out of order")));
            }
            layers.push((number, alpha, perp, Vec::new(), Vec::new()));
        }
        let layer = layers.last_mut().unwrap();
        if point != layer.3.len() {
            return Err(bad(format!("point {point} out of order in layer {number}")));
        }
        layer.3.push(coord);
        if with_labels {
            layer.4.push(int(fields[5])?);
        }
    }
    let mut out = Vec::with_capacity(layers.len());
    let mut labels = Vec::with_capacity(layers.len());
    for (number, alpha, perplexity, coords, ls) in layers {
        out.push(Layer {
            number,
            alpha,
            perplexity,
            coords: Embedding1D::new(coords)?,
        });
        labels.push(LabelVector::new(ls, format!("layer{number}")));
    }
    let tree = TreeEmbedding::new(out)?;
    Ok((tree, with_labels.then_some(labels)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_ratios_match_layer_counts() {
        let s30 = make_schedule(1000, 30, 0.01).unwrap();
        assert!((s30.ratio() - 0.858).abs() <= 1e-3, "{}", s30.ratio());
        let s100 = make_schedule(1000, 100, 0.01).unwrap();
        assert!((s100.ratio() - 0.955).abs() <= 1e-3, "{}", s100.ratio());
    }

    #[test]
    fn schedule_endpoints() {
        let s = make_schedule(10_000, 30, 0.01).unwrap();
        assert_eq!(s.alphas()[0], 1.0);
        assert_eq!(s.perplexities()[0], 100.0);
        // The floor is one ratio step past the last layer.
        let last = *s.alphas().last().unwrap();
        assert!((last * s.ratio() - 0.01).abs() < 1e-12);
        assert!(last >= s.alpha_floor() - 1e-12);
    }

    #[test]
    fn schedule_is_geometric() {
        let s = make_schedule(5000, 40, 0.02).unwrap();
        for w in s.alphas().windows(2) {
            assert!((w[1] / w[0] - s.ratio()).abs() < 1e-12);
            assert!(w[1] < w[0]);
        }
        for w in s.perplexities().windows(2) {
            assert!((w[1].ln() - s.ratio() * w[0].ln()).abs() < 1e-9);
            assert!(w[1] < w[0] && w[1] > 1.0);
        }
    }

    #[test]
    fn schedule_rejects_bad_parameters() {
        assert!(make_schedule(100, 1, 0.01).is_err());
        assert!(make_schedule(100, 10, 0.0).is_err());
        assert!(make_schedule(100, 10, 1.0).is_err());
    }

    #[test]
    fn perplexity_clamps() {
        assert_eq!(effective_perplexity(1.3, 1000), MIN_PERPLEXITY);
        assert_eq!(effective_perplexity(40.0, 31), 10.0);
        assert_eq!(effective_perplexity(7.5, 1000), 7.5);
    }

    #[test]
    fn csv_round_trip() {
        let layers = vec![
            Layer { number: 1, alpha: 1.0, perplexity: 3.5, coords: Embedding1D::new(vec![0.1, -2.5e-7, 3.0]).unwrap() },
            Layer { number: 2, alpha: 0.5, perplexity: 2.0, coords: Embedding1D::new(vec![0.2, 1.0 / 3.0, -4.0]).unwrap() },
        ];
        let tree = TreeEmbedding::new(layers).unwrap();
        let mut buf = Vec::new();
        write_tree_csv(&tree, None, &mut buf).unwrap();
        let (back, labels) = read_tree_csv(buf.as_slice()).unwrap();
        assert_eq!(back, tree);
        assert!(labels.is_none());

        let ls = vec![LabelVector::new(vec![0, 0, 1], "a"), LabelVector::new(vec![0, 1, 2], "b")];
        let mut buf = Vec::new();
        write_tree_csv(&tree, Some(&ls), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("layer,point_index,coord,alpha,perplexity,cluster_label\n1,0,0.1,1,3.5,0\n"));
        let (_, labels) = read_tree_csv(buf.as_slice()).unwrap();
        assert_eq!(labels.unwrap()[1].labels(), &[0, 1, 2]);
    }

    #[test]
    fn malformed_tree_csv() {
        assert!(read_tree_csv("a,b\n".as_bytes()).is_err());
        let text = "layer,point_index,coord,alpha,perplexity\n1,0,0.5,1,2\n1,2,0.5,1,2\n";
        assert!(matches!(read_tree_csv(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let text = "layer,point_index,coord,alpha,perplexity\n1,0,x,1,2\n";
        assert!(matches!(read_tree_csv(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
