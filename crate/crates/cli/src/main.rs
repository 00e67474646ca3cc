mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use treesne::dataset::{MatrixFormat, SyntheticKind, SyntheticParams};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "treesne", version, about = "Hierarchical 1D t-SNE embeddings and alpha-clustering")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

/// Options resolved into a run configuration: defaults, then `--config`,
/// then `--set`, then the named flags.
#[derive(Args)]
struct RunArgs {
    /// Flat key=value configuration file (a previous manifest works).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Truth labels, used for NMI in the cluster summary and for coloring.
    #[arg(short, long)]
    labels: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    layers: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(&self.set)?;
        let mut named = Vec::new();
        let path = |p: &Path| p.display().to_string();
        if let Some(p) = &self.input {
            named.push(format!("input={}", path(p)));
        }
        if let Some(p) = &self.labels {
            named.push(format!("labels={}", path(p)));
        }
        if let Some(p) = &self.output {
            named.push(format!("output={}", path(p)));
        }
        if let Some(s) = self.seed {
            named.push(format!("seed={s}"));
        }
        if let Some(l) = self.layers {
            named.push(format!("n_layers={l}"));
        }
        cfg.apply_overrides(&named)?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset and its labels as CSV.
    Generate {
        /// gaussian-blobs, swiss-roll, uniform-noise or uniform-plane.
        #[arg(long)]
        kind: SyntheticKind,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        centers: usize,
        #[arg(long, default_value_t = 1.0)]
        std: f64,
        #[arg(long, default_value_t = 20.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        /// Defaults to `<out stem>_labels.csv` next to the data.
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
    /// Build the layer stack; writes tree.csv and manifest.txt.
    Embed(RunArgs),
    /// Cluster every layer and select the alpha-clustering.
    Cluster {
        #[command(flatten)]
        run: RunArgs,
        /// Tree CSV to read instead of `<output>/tree.csv`.
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Render the tree as SVG.
    Plot {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        tree: Option<PathBuf>,
        /// SVG path instead of `<output>/tree.svg`.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Print the NMI between two label files.
    Nmi { a: PathBuf, b: PathBuf },
    /// Keep the rows whose label is in a given set.
    Subset {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: MatrixFormat,
        #[arg(short, long)]
        labels: PathBuf,
        /// Comma-separated labels to keep, e.g. `1` or `0,2`.
        #[arg(long, value_parser = commands::parse_keep)]
        keep: std::collections::BTreeSet<usize>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
    /// Mean feature vector of every cluster.
    Means {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: MatrixFormat,
        #[arg(short, long)]
        labels: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> Result<String> {
    match command {
        Command::Generate { kind, n, dim, centers, std, separation, seed, out, labels_out } => {
            let params = SyntheticParams { n, dim, centers, std, separation, seed };
            let labels_out = labels_out.unwrap_or_else(|| commands::default_labels_path(&out));
            commands::generate(kind, &params, &out, &labels_out)
        }
        Command::Embed(run) => commands::embed(&run.resolve()?),
        Command::Cluster { run, tree } => commands::cluster(&run.resolve()?, tree.as_deref()),
        Command::Plot { run, tree, svg } => commands::plot(&run.resolve()?, tree.as_deref(), svg.as_deref()),
        Command::Nmi { a, b } => commands::nmi_files(&a, &b),
        Command::Subset { input, format, labels, keep, out, labels_out } => commands::subset(&commands::SubsetArgs {
            input: &input,
            format,
            labels: &labels,
            keep: &keep,
            out: &out,
            labels_out: labels_out.as_deref(),
        }),
        Command::Means { input, format, labels, out } => commands::means(&input, format, &labels, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli.command) {
        Ok(msg) => {
            println!("{}", msg.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
