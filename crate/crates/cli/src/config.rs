//! Flat `key=value` run configuration shared by `embed`, `cluster` and `plot`.
//!
//! Files may contain blank lines and `#` comments. Later assignments win, so
//! command-line overrides are applied after the file. A manifest written by
//! [`RunConfig::manifest`] is itself a valid configuration file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use treesne::cluster::{ClusterConfig, CountMethod};
use treesne::dataset::MatrixFormat;
use treesne::embed1d::{LearningRate, OptimizerConfig, RepulsionMethod};
use treesne::tree::{LayerSchedule, TreeConfig};
use treesne::viz::PlotSpec;

use crate::error::{CliError, Result};

/// Keys the manifest records for reference only; they are skipped on input.
const DERIVED_KEYS: [&str; 4] = ["version", "n_points", "dim", "r"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorBy {
    /// Alpha-clustering labels if present, else `labels`, else one color.
    Auto,
    Single,
    /// The labels file named by the `labels` key.
    Labels,
    /// `alpha_labels.csv` in the output directory.
    Alpha,
    /// One column of the input matrix on a continuous ramp.
    Feature(usize),
}

impl FromStr for ColorBy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "single" => Ok(Self::Single),
            "labels" => Ok(Self::Labels),
            "alpha" => Ok(Self::Alpha),
            _ => match s.strip_prefix("feature:").map(str::parse) {
                Some(Ok(col)) => Ok(Self::Feature(col)),
                _ => Err(format!("expected auto, single, labels, alpha or feature:<column>, got '{s}'")),
            },
        }
    }
}

impl std::fmt::Display for ColorBy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Single => f.write_str("single"),
            Self::Labels => f.write_str("labels"),
            Self::Alpha => f.write_str("alpha"),
            Self::Feature(c) => write!(f, "feature:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: MatrixFormat,
    pub labels: Option<PathBuf>,
    pub pca_components: Option<usize>,
    pub n_layers: usize,
    pub alpha_floor: f64,
    pub beta: f64,
    pub subsample_cap: usize,
    pub knn_k: usize,
    pub fixed_subsample: bool,
    pub count_method: CountMethod,
    pub seed: u64,
    pub output: PathBuf,
    pub iterations_first: usize,
    pub early_iterations: usize,
    pub iterations_later: usize,
    /// First-layer learning rate per point (the rate is this times N).
    pub learning_rate_first: f64,
    pub learning_rate_later: f64,
    pub early_exaggeration: f64,
    pub exaggeration: f64,
    pub momentum_start: f64,
    pub momentum_late: f64,
    pub gains: bool,
    pub repulsion: RepulsionMethod,
    pub init_std: f64,
    pub plot_width: u32,
    pub plot_height: u32,
    pub plot_margin: u32,
    pub point_radius: f64,
    pub per_layer_x: bool,
    pub color_by: ColorBy,
}

impl Default for RunConfig {
    fn default() -> Self {
        let tree = TreeConfig::default();
        let cluster = ClusterConfig::default();
        let plot = PlotSpec::default();
        let per_point = |lr: LearningRate| match lr {
            LearningRate::PerPoint(f) | LearningRate::Fixed(f) => f,
        };
        Self {
            input: None,
            format: MatrixFormat::Csv,
            labels: None,
            pca_components: None,
            n_layers: 30,
            alpha_floor: 0.01,
            beta: cluster.beta,
            subsample_cap: cluster.subsample_cap,
            knn_k: cluster.knn_k,
            fixed_subsample: cluster.fixed_subsample,
            count_method: cluster.method,
            seed: 0,
            output: PathBuf::from("out"),
            iterations_first: tree.first.iterations,
            early_iterations: tree.first.early_iterations,
            iterations_later: tree.later.iterations,
            learning_rate_first: per_point(tree.first.learning_rate),
            learning_rate_later: per_point(tree.later.learning_rate),
            early_exaggeration: tree.first.early_exaggeration,
            exaggeration: tree.first.exaggeration,
            momentum_start: tree.first.momentum_start,
            momentum_late: tree.first.momentum_late,
            gains: tree.first.gains,
            repulsion: tree.first.repulsion,
            init_std: tree.init_std,
            plot_width: plot.width,
            plot_height: plot.height,
            plot_margin: plot.margin,
            point_radius: plot.point_radius,
            per_layer_x: plot.per_layer_x,
            color_by: ColorBy::Auto,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("{key}: {e}"))
}

fn optional<T: FromStr>(key: &str, value: &str) -> std::result::Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    match value {
        "none" | "" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!matches!(value, "none" | "")).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string())
}

fn repulsion_name(r: RepulsionMethod) -> &'static str {
    match r {
        RepulsionMethod::Exact => "exact",
        RepulsionMethod::Interpolated { .. } => "interpolated",
        RepulsionMethod::Auto => "auto",
    }
}

fn grid_name(r: RepulsionMethod) -> String {
    match r {
        RepulsionMethod::Interpolated { grid_size: Some(g) } => g.to_string(),
        _ => "auto".into(),
    }
}

impl RunConfig {
    /// Applies one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "input" => self.input = optional_path(v),
            "format" => self.format = v.parse().map_err(|e: treesne::Error| e.to_string())?,
            "labels" => self.labels = optional_path(v),
            "pca_components" => self.pca_components = optional("pca_components", v)?,
            "n_layers" => self.n_layers = parse("n_layers", v)?,
            "alpha_floor" => self.alpha_floor = parse("alpha_floor", v)?,
            "beta" => self.beta = parse("beta", v)?,
            "subsample_cap" => self.subsample_cap = parse("subsample_cap", v)?,
            "knn_k" => self.knn_k = parse("knn_k", v)?,
            "fixed_subsample" => self.fixed_subsample = parse("fixed_subsample", v)?,
            "count_method" => {
                self.count_method = match v {
                    "components" => CountMethod::Components,
                    "spectral" => CountMethod::Spectral,
                    _ => return Err(format!("count_method: expected components or spectral, got '{v}'")),
                }
            }
            "seed" => self.seed = parse("seed", v)?,
            "output" => self.output = PathBuf::from(v),
            "iterations_first" => self.iterations_first = parse("iterations_first", v)?,
            "early_iterations" => self.early_iterations = parse("early_iterations", v)?,
            "iterations_later" => self.iterations_later = parse("iterations_later", v)?,
            "learning_rate_first" => self.learning_rate_first = parse("learning_rate_first", v)?,
            "learning_rate_later" => self.learning_rate_later = parse("learning_rate_later", v)?,
            "early_exaggeration" => self.early_exaggeration = parse("early_exaggeration", v)?,
            "exaggeration" => self.exaggeration = parse("exaggeration", v)?,
            "momentum_start" => self.momentum_start = parse("momentum_start", v)?,
            "momentum_late" => self.momentum_late = parse("momentum_late", v)?,
            "gains" => self.gains = parse("gains", v)?,
            "repulsion" => {
                let grid = match self.repulsion {
                    RepulsionMethod::Interpolated { grid_size } => grid_size,
                    _ => None,
                };
                self.repulsion = match v {
                    "exact" => RepulsionMethod::Exact,
                    "auto" => RepulsionMethod::Auto,
                    "interpolated" => RepulsionMethod::Interpolated { grid_size: grid },
                    _ => return Err(format!("repulsion: expected auto, exact or interpolated, got '{v}'")),
                }
            }
            "grid_size" => {
                let g: Option<usize> = if v == "auto" { None } else { Some(parse("grid_size", v)?) };
                match (&mut self.repulsion, g) {
                    (RepulsionMethod::Interpolated { grid_size }, _) => *grid_size = g,
                    (_, None) => {}
                    (_, Some(_)) => return Err("grid_size needs repulsion=interpolated set first".into()),
                }
            }
            "init_std" => self.init_std = parse("init_std", v)?,
            "plot_width" => self.plot_width = parse("plot_width", v)?,
            "plot_height" => self.plot_height = parse("plot_height", v)?,
            "plot_margin" => self.plot_margin = parse("plot_margin", v)?,
            "point_radius" => self.point_radius = parse("point_radius", v)?,
            "per_layer_x" => self.per_layer_x = parse("per_layer_x", v)?,
            "color_by" => self.color_by = parse("color_by", v)?,
            k if DERIVED_KEYS.contains(&k) => {}
            k => return Err(format!("unknown key '{k}'")),
        }
        Ok(())
    }

    /// Applies every assignment in `text`. `origin` names the source in errors.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let config_err = |msg: String| CliError::Config { origin: origin.to_string(), line: i + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| config_err(format!("expected key=value, got '{line}'")))?;
            self.set(k, v).map_err(config_err)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides from the command line.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for (i, o) in overrides.iter().enumerate() {
            let o = o.as_ref();
            let err = |msg: String| CliError::Config { origin: "--set".into(), line: i + 1, msg };
            let (k, v) = o.split_once('=').ok_or_else(|| err(format!("expected key=value, got '{o}'")))?;
            self.set(k, v).map_err(err)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(CliError::Usage(m.to_string()));
        if self.n_layers < 2 {
            return usage("n_layers must be at least 2");
        }
        if !(self.alpha_floor > 0.0 && self.alpha_floor < 1.0) {
            return usage("alpha_floor must be in (0, 1)");
        }
        if !(self.beta > 0.0) {
            return usage("beta must be positive");
        }
        if self.subsample_cap < 3 || self.knn_k == 0 || self.pca_components == Some(0) {
            return usage("subsample_cap must be >= 3 and knn_k, pca_components positive");
        }
        if self.iterations_first == 0 || self.iterations_later == 0 {
            return usage("iteration counts must be positive");
        }
        if !(self.init_std > 0.0) {
            return usage("init_std must be positive");
        }
        self.tree_config().first.validate()?;
        self.tree_config().later.validate()?;
        self.plot_spec().validate()?;
        Ok(())
    }

    pub fn tree_config(&self) -> TreeConfig {
        let base = OptimizerConfig {
            momentum_start: self.momentum_start,
            momentum_late: self.momentum_late,
            exaggeration: self.exaggeration,
            early_exaggeration: self.early_exaggeration,
            gains: self.gains,
            repulsion: self.repulsion,
            ..OptimizerConfig::default()
        };
        TreeConfig {
            first: OptimizerConfig {
                iterations: self.iterations_first,
                learning_rate: LearningRate::PerPoint(self.learning_rate_first),
                early_iterations: self.early_iterations,
                ..base.clone()
            },
            later: OptimizerConfig {
                iterations: self.iterations_later,
                learning_rate: LearningRate::PerPoint(self.learning_rate_later),
                early_iterations: 0,
                ..base
            },
            init_std: self.init_std,
            seed: self.seed,
            ..TreeConfig::default()
        }
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            beta: self.beta,
            subsample_cap: self.subsample_cap,
            knn_k: self.knn_k,
            seed: self.seed,
            fixed_subsample: self.fixed_subsample,
            method: self.count_method,
        }
    }

    pub fn plot_spec(&self) -> PlotSpec {
        PlotSpec {
            width: self.plot_width,
            height: self.plot_height,
            margin: self.plot_margin,
            point_radius: self.point_radius,
            per_layer_x: self.per_layer_x,
            ..PlotSpec::default()
        }
    }

    /// Every setting as `(key, value)` in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("input", show_path(&self.input)),
            ("format", self.format.name().into()),
            ("labels", show_path(&self.labels)),
            ("pca_components", self.pca_components.map_or_else(|| "none".into(), |c| c.to_string())),
            ("n_layers", self.n_layers.to_string()),
            ("alpha_floor", self.alpha_floor.to_string()),
            ("beta", self.beta.to_string()),
            ("subsample_cap", self.subsample_cap.to_string()),
            ("knn_k", self.knn_k.to_string()),
            ("fixed_subsample", self.fixed_subsample.to_string()),
            (
                "count_method",
                match self.count_method {
                    CountMethod::Components => "components",
                    CountMethod::Spectral => "spectral",
                }
                .into(),
            ),
            ("seed", self.seed.to_string()),
            ("output", self.output.display().to_string()),
            ("iterations_first", self.iterations_first.to_string()),
            ("early_iterations", self.early_iterations.to_string()),
            ("iterations_later", self.iterations_later.to_string()),
            ("learning_rate_first", self.learning_rate_first.to_string()),
            ("learning_rate_later", self.learning_rate_later.to_string()),
            ("early_exaggeration", self.early_exaggeration.to_string()),
            ("exaggeration", self.exaggeration.to_string()),
            ("momentum_start", self.momentum_start.to_string()),
            ("momentum_late", self.momentum_late.to_string()),
            ("gains", self.gains.to_string()),
            ("repulsion", repulsion_name(self.repulsion).into()),
            ("grid_size", grid_name(self.repulsion)),
            ("init_std", self.init_std.to_string()),
            ("plot_width", self.plot_width.to_string()),
            ("plot_height", self.plot_height.to_string()),
            ("plot_margin", self.plot_margin.to_string()),
            ("point_radius", self.point_radius.to_string()),
            ("per_layer_x", self.per_layer_x.to_string()),
            ("color_by", self.color_by.to_string()),
        ]
    }

    /// Resolved settings followed by values derived from the data.
    pub fn manifest(&self, n_points: usize, dim: usize, schedule: &LayerSchedule) -> String {
        let mut out = String::from("# treesne run manifest\n");
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k}={v}");
        }
        out.push_str("# derived\n");
        let _ = writeln!(out, "version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "n_points={n_points}");
        let _ = writeln!(out, "dim={dim}");
        let _ = writeln!(out, "r={}", schedule.ratio());
        out
    }
}
