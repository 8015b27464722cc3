//! Command-line pipeline: layout JSON to scene graphs, question datasets,
//! extractive form QA, scoring and summary statistics.
//!
//! Exit status is 0 on success, 1 on a data error (a JSON error object is
//! printed on stderr) and 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::funsd::parse_funsd_file;
use crate::funsd_qa::{emit_funsd_dataset, FunsdDataset};
use crate::layout::parse_layout_file;
use crate::metrics::{average_bleu, dataset_stats, exact_match_accuracy, funsd_stats, parse_predictions};
use crate::question::{emit_dataset, Dataset, EmitConfig, SplitRatios, TemplateBank, DEFAULT_RETRY_CAP};
use crate::scene_graph::{
    build_scene_graph, parse_scene_graphs, serialize_scene_graphs, SceneGraph, SceneGraphConfig,
    DEFAULT_MAX_CAPTION_GAP_FRAC,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "layoutqa", version, about = "Scene graphs and question datasets from document layouts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build scene graphs from a layout file
    BuildScenegraph {
        #[command(flatten)]
        io: InOut,
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Generate an abstractive QA dataset from layouts or scene graphs
    GenerateQa {
        #[command(flatten)]
        io: InOut,
        #[command(flatten)]
        graph: GraphArgs,
        /// Template bank JSON; the built-in bank when omitted
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Exact number of questions to emit
        #[arg(long)]
        total: usize,
        /// Split ratios, `train,val,test` or `train,test`
        #[arg(long, value_parser = parse_ratios)]
        ratios: SplitRatios,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Questions generated per page
        #[arg(long, default_value_t = 10)]
        quota: usize,
        #[arg(long, default_value_t = DEFAULT_RETRY_CAP)]
        retry_cap: usize,
    },
    /// Derive extractive QA pairs from FUNSD annotation files
    DeriveFunsdQa {
        /// Annotation files or directories of them; the page id is the file stem
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_ratios)]
        ratios: SplitRatios,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score predictions against a dataset
    Evaluate {
        #[command(flatten)]
        io: InOut,
        /// JSON-lines predictions
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Summarize a dataset
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InOut {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Caption search radius as a fraction of page height
    #[arg(long, default_value_t = DEFAULT_MAX_CAPTION_GAP_FRAC)]
    max_caption_gap_frac: f64,
}

impl GraphArgs {
    fn config(&self) -> Result<SceneGraphConfig, Failure> {
        let frac = self.max_caption_gap_frac;
        if !(frac.is_finite() && frac >= 0.0) {
            return Err(Failure::new("config", format!("--max-caption-gap-frac must be non-negative, got {frac}")));
        }
        Ok(SceneGraphConfig {
            max_caption_gap_frac: frac,
        })
    }
}

fn parse_ratios(s: &str) -> Result<SplitRatios, String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad ratio `{v}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    SplitRatios::from_values(&values)
}

/// A data error reported as `{"error": {"kind": .., "message": ..}}`.
#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            kind,
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::new("io", format!("cannot read {}: {e}", path.display())))
}

/// Write through a temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io_err = |e: std::io::Error| Failure::new("io", format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn build_graphs(bytes: &[u8], config: &SceneGraphConfig) -> Result<Vec<SceneGraph>, Failure> {
    let pages = parse_layout_file(bytes).map_err(|e| Failure::new("ingest", e.to_string()))?;
    pages
        .iter()
        .map(|p| build_scene_graph(p, config))
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::new("scene_graph", e.to_string()))
}

/// Accept either a layout file (`pages`) or a scene-graph file (`scene_graphs`).
fn load_graphs(bytes: &[u8], config: &SceneGraphConfig) -> Result<Vec<SceneGraph>, Failure> {
    let head: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Failure::new("ingest", format!("invalid JSON: {e}")))?;
    if head.get("scene_graphs").is_some() {
        parse_scene_graphs(bytes).map_err(|e| Failure::new("scene_graph", e.to_string()))
    } else {
        build_graphs(bytes, config)
    }
}

fn collect_funsd_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries = fs::read_dir(input)
                .map_err(|e| Failure::new("io", format!("cannot list {}: {e}", input.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn execute(command: Command) -> Result<Option<Vec<u8>>, Failure> {
    match command {
        Command::BuildScenegraph { io, graph } => {
            let graphs = build_graphs(&read(&io.input)?, &graph.config()?)?;
            write_atomic(&io.out, &serialize_scene_graphs(&graphs))?;
        }
        Command::GenerateQa {
            io,
            graph,
            templates,
            total,
            ratios,
            seed,
            quota,
            retry_cap,
        } => {
            let bank = match templates {
                Some(path) => TemplateBank::parse(&read(&path)?).map_err(|e| Failure::new("template", e.to_string()))?,
                None => TemplateBank::default(),
            };
            let graphs = load_graphs(&read(&io.input)?, &graph.config()?)?;
            let config = EmitConfig {
                total,
                ratios,
                seed,
                quota,
                retry_cap,
            };
            let dataset = emit_dataset(&graphs, &bank, &config).map_err(|e| Failure::new("generation", e.to_string()))?;
            write_atomic(&io.out, &dataset.to_json())?;
        }
        Command::DeriveFunsdQa {
            inputs,
            out,
            ratios,
            seed,
        } => {
            let mut forms = Vec::new();
            for path in collect_funsd_files(&inputs)? {
                let form = parse_funsd_file(&read(&path)?)
                    .map_err(|e| Failure::new("ingest", format!("{}: {e}", path.display())))?;
                let page_id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                forms.push((page_id, form));
            }
            let dataset = emit_funsd_dataset(&forms, &ratios, seed).map_err(|e| Failure::new("funsd_qa", e.to_string()))?;
            write_atomic(&out, &dataset.to_json())?;
        }
        Command::Evaluate { io, predictions } => {
            let refs = read(&io.input)?;
            let preds = String::from_utf8(read(&predictions)?)
                .map_err(|e| Failure::new("metrics", format!("predictions are not UTF-8: {e}")))?;
            let preds = parse_predictions(&preds).map_err(|e| Failure::new("metrics", e.to_string()))?;
            let report = if let Ok(ds) = Dataset::parse(&refs) {
                exact_match_accuracy(&ds, &preds)
            } else if let Ok(ds) = FunsdDataset::parse(&refs) {
                average_bleu(&ds, &preds)
            } else {
                return Err(Failure::new("metrics", format!("{} is not a generated dataset", io.input.display())));
            };
            let report = report.map_err(|e| Failure::new("metrics", e.to_string()))?;
            write_atomic(&io.out, &report.to_json())?;
        }
        Command::Stats { input, out } => {
            let bytes = read(&input)?;
            let stats = if let Ok(ds) = Dataset::parse(&bytes) {
                dataset_stats(&ds)
            } else if let Ok(ds) = FunsdDataset::parse(&bytes) {
                funsd_stats(&ds)
            } else {
                return Err(Failure::new("stats", format!("{} is not a generated dataset", input.display())));
            };
            match out {
                Some(path) => write_atomic(&path, &stats.to_json())?,
                None => return Ok(Some(stats.to_json())),
            }
        }
    }
    Ok(None)
}

/// Run the CLI on `argv` (program name first) and return the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(Some(stdout)) => {
            let _ = std::io::stdout().write_all(&stdout);
            EXIT_OK
        }
        Ok(None) => EXIT_OK,
        Err(f) => {
            eprintln!("{}", json!({"error": {"kind": f.kind, "message": f.message}}));
            EXIT_DATA
        }
    }
}
