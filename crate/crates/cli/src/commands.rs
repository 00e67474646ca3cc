use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use treesne::alphasel::{nmi, select_alpha_clustering};
use treesne::cluster::cluster_tree;
use treesne::dataset::{
    self, cluster_mean_features, generate_synthetic, load_labels, load_matrix, pca_reduce, subset_by_cluster,
    DataMatrix, LabelVector, MatrixFormat, SyntheticKind, SyntheticParams,
};
use treesne::tree::{build_tree, make_schedule, read_tree_csv, write_tree_csv, TreeEmbedding};
use treesne::viz::{render_tree, ColorSource};

use crate::config::{ColorBy, RunConfig};
use crate::error::{CliError, Result};

pub const TREE_CSV: &str = "tree.csv";
pub const MANIFEST: &str = "manifest.txt";
pub const CLUSTERED_CSV: &str = "tree_clustered.csv";
pub const ALPHA_LABELS: &str = "alpha_labels.csv";
pub const ALPHA_SUMMARY: &str = "alpha_summary.txt";
pub const PLOT_SVG: &str = "tree.svg";

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn read_tree(path: &Path) -> Result<(TreeEmbedding, Option<Vec<LabelVector>>)> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(read_tree_csv(std::io::BufReader::new(file))?)
}

fn input_matrix(cfg: &RunConfig) -> Result<DataMatrix> {
    let path = cfg.input.as_ref().ok_or_else(|| CliError::Usage("no input set (use --input or input=)".into()))?;
    Ok(load_matrix(path, cfg.format)?)
}

/// Builds the layer stack and writes `tree.csv` and `manifest.txt`.
pub fn embed(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let mut data = input_matrix(cfg)?;
    if let Some(c) = cfg.pca_components {
        data = pca_reduce(&data, c)?;
    }
    let schedule = make_schedule(data.rows(), cfg.n_layers, cfg.alpha_floor)?;
    let tree = build_tree(&data, &schedule, &cfg.tree_config())?;

    let mut csv = Vec::new();
    write_tree_csv(&tree, None, &mut csv)?;
    let tree_path = cfg.output.join(TREE_CSV);
    write_file(&tree_path, &csv)?;
    write_file(&cfg.output.join(MANIFEST), cfg.manifest(data.rows(), data.cols(), &schedule).as_bytes())?;
    Ok(format!(
        "{}: {} points, {} layers, r={}",
        tree_path.display(),
        data.rows(),
        tree.n_layers(),
        schedule.ratio()
    ))
}

/// Clusters every layer, selects the alpha-clustering and writes the
/// labelled tree, the selected labels and a `key=value` summary.
pub fn cluster(cfg: &RunConfig, tree_path: Option<&Path>) -> Result<String> {
    cfg.validate()?;
    let tree_path = tree_path.map_or_else(|| cfg.output.join(TREE_CSV), Path::to_path_buf);
    let (tree, _) = read_tree(&tree_path)?;
    let layers = cluster_tree(&tree, &cfg.cluster_config())?;
    let selected = select_alpha_clustering(&layers, &tree.alphas())?;

    let per_layer: Vec<LabelVector> = layers.iter().map(|l| l.labels.clone()).collect();
    let mut csv = Vec::new();
    write_tree_csv(&tree, Some(&per_layer), &mut csv)?;
    write_file(&cfg.output.join(CLUSTERED_CSV), &csv)?;

    let mut labels = Vec::new();
    selected.write_labels(&mut labels)?;
    write_file(&cfg.output.join(ALPHA_LABELS), &labels)?;

    let mut summary = selected.to_string();
    let _ = writeln!(summary, "n_layers={}", tree.n_layers());
    let _ = writeln!(
        summary,
        "layer_k={}",
        layers.iter().map(|l| l.k.to_string()).collect::<Vec<_>>().join(",")
    );
    if let Some(truth) = &cfg.labels {
        let truth = load_labels(truth)?;
        let _ = writeln!(summary, "nmi_vs_labels={:.4}", nmi(&selected.labels, &truth)?);
    }
    write_file(&cfg.output.join(ALPHA_SUMMARY), summary.as_bytes())?;
    info!("selected k={} over layers {}..={}", selected.k, selected.layer_first, selected.layer_last);
    Ok(summary)
}

/// Renders the tree to SVG, colored per `color_by`.
pub fn plot(cfg: &RunConfig, tree_path: Option<&Path>, out: Option<&Path>) -> Result<String> {
    cfg.validate()?;
    let tree_path = tree_path.map_or_else(|| cfg.output.join(TREE_CSV), Path::to_path_buf);
    let (tree, _) = read_tree(&tree_path)?;
    let alpha_path = cfg.output.join(ALPHA_LABELS);

    let color_by = match cfg.color_by {
        ColorBy::Auto if alpha_path.exists() => ColorBy::Alpha,
        ColorBy::Auto if cfg.labels.is_some() => ColorBy::Labels,
        ColorBy::Auto => ColorBy::Single,
        other => other,
    };
    info!("coloring by {color_by}");
    let labels = match color_by {
        ColorBy::Alpha => Some(load_labels(&alpha_path)?),
        ColorBy::Labels => {
            let p = cfg.labels.as_ref().ok_or_else(|| CliError::Usage("color_by=labels needs labels=".into()))?;
            Some(load_labels(p)?)
        }
        _ => None,
    };
    let feature = match color_by {
        ColorBy::Feature(col) => {
            let data = input_matrix(cfg)?;
            if col >= data.cols() {
                return Err(CliError::Usage(format!("feature column {col} out of range ({} columns)", data.cols())));
            }
            Some(data.column(col))
        }
        _ => None,
    };
    let source = match (&labels, &feature) {
        (Some(l), _) => ColorSource::Labels(l),
        (_, Some(f)) => ColorSource::Feature(f),
        _ => ColorSource::Single,
    };
    let svg = render_tree(&tree, source, &cfg.plot_spec())?;
    let out = out.map_or_else(|| cfg.output.join(PLOT_SVG), Path::to_path_buf);
    write_file(&out, svg.as_bytes())?;
    Ok(out.display().to_string())
}

/// NMI between two label files, four decimals.
pub fn nmi_files(a: &Path, b: &Path) -> Result<String> {
    let (a, b) = (load_labels(a)?, load_labels(b)?);
    Ok(format!("{:.4}", nmi(&a, &b)?))
}

pub fn generate(kind: SyntheticKind, params: &SyntheticParams, out: &Path, labels_out: &Path) -> Result<String> {
    let (data, labels) = generate_synthetic(kind, params)?;
    let mut buf = Vec::new();
    dataset::write_csv_matrix(&data, &mut buf)?;
    write_file(out, &buf)?;
    let mut buf = Vec::new();
    dataset::write_labels(&labels, &mut buf)?;
    write_file(labels_out, &buf)?;
    Ok(format!("{}: {} x {} {}, labels in {}", out.display(), data.rows(), data.cols(), kind.name(), labels_out.display()))
}

pub struct SubsetArgs<'a> {
    pub input: &'a Path,
    pub format: MatrixFormat,
    pub labels: &'a Path,
    pub keep: &'a BTreeSet<usize>,
    pub out: &'a Path,
    pub labels_out: Option<&'a Path>,
}

/// Rows whose label is in `keep`, in input order.
pub fn subset(args: &SubsetArgs<'_>) -> Result<String> {
    let data = load_matrix(args.input, args.format)?;
    let labels = load_labels(args.labels)?;
    let rows = subset_by_cluster(&data, &labels, args.keep)?;
    let mut buf = Vec::new();
    dataset::write_csv_matrix(&rows, &mut buf)?;
    write_file(args.out, &buf)?;
    if let Some(path) = args.labels_out {
        let kept: Vec<usize> = labels.labels().iter().copied().filter(|l| args.keep.contains(l)).collect();
        let mut buf = Vec::new();
        dataset::write_labels(&LabelVector::new(kept, labels.name()), &mut buf)?;
        write_file(path, &buf)?;
    }
    Ok(format!("{}: {} of {} rows", args.out.display(), rows.rows(), data.rows()))
}

/// One `label,mean_0,...` row per cluster.
pub fn means(input: &Path, format: MatrixFormat, labels: &Path, out: &Path) -> Result<String> {
    let data = load_matrix(input, format)?;
    let labels = load_labels(labels)?;
    let means = cluster_mean_features(&data, &labels)?;
    let mut text = String::from("label");
    for j in 0..data.cols() {
        let _ = write!(text, ",mean_{j}");
    }
    text.push('\n');
    for (l, m) in &means {
        let _ = write!(text, "{l}");
        for v in m {
            let _ = write!(text, ",{v}");
        }
        text.push('\n');
    }
    write_file(out, text.as_bytes())?;
    Ok(format!("{}: {} clusters", out.display(), means.len()))
}

/// Parses a comma-separated label list such as `0,2`.
pub fn parse_keep(s: &str) -> std::result::Result<BTreeSet<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

/// `data.csv` -> `data_labels.csv`.
pub fn default_labels_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_labels.csv"))
}
