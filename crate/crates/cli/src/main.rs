mod error;
mod output;

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use bwsrank_core::analysis::{
    agreement_report, compare_lists, compare_scales, subsample_report, time_stats, workload_minutes,
    workload_projection, GroupSelection, TimeGrouping, WorkloadProjection,
};
use bwsrank_core::formats::{self, ComparisonRow};
use bwsrank_core::simulate::run_campaign;
use bwsrank_core::{
    aggregate_scale, Design, Item, LatentWorld, RankedScale, RankingComparison, SyntheticAnnotator, Vote,
};
use bwsrank_service::store::MANIFEST_FILE;
use bwsrank_service::{Manifest, ProjectSettings, Registry};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, Result};
use crate::output::{emit, Format};

#[derive(Parser)]
#[command(name = "bwsrank", version, about = "Best-worst scaling projects, simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a project directory with a generated design.
    Init(InitArgs),
    /// Run the HTTP service over a data directory.
    Serve(ServeArgs),
    /// Collect synthetic votes for a project; writes a votes CSV.
    Simulate(SimulateArgs),
    /// Batch analyses.
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Args)]
struct InitArgs {
    /// Items TSV: id, text, definition, optional reference_label.
    #[arg(long)]
    items: PathBuf,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    votes_required: usize,
    /// Data directory; the project goes into <out>/<project id>.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    project_id: Option<String>,
    /// Only annotators of this group may register.
    #[arg(long)]
    group: Option<String>,
    /// Tasks each annotator is asked to complete (display only).
    #[arg(long)]
    quota: Option<usize>,
    /// Keep serving tasks that already have all required votes.
    #[arg(long)]
    overshoot: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Directory with the built web UI, served under `/`.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Project directory (the one holding project.json).
    #[arg(long)]
    project: PathBuf,
    #[arg(long)]
    annotators: usize,
    /// Perception noise as a fraction of the latent difficulty range.
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    seed: u64,
    /// Defaults to the project's required votes.
    #[arg(long)]
    votes_per_task: Option<usize>,
    #[arg(long, default_value = "sim")]
    group: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the latent order, one item id per line.
    #[arg(long)]
    latent_out: Option<PathBuf>,
}

/// Where the design comes from: a project directory, or items regenerated
/// with `--k` and `--design-seed`.
#[derive(Args)]
struct DesignSource {
    #[arg(long, conflicts_with = "items")]
    project: Option<PathBuf>,
    #[arg(long)]
    items: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long)]
    design_seed: Option<u64>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum By {
    Group,
    Annotator,
}

#[derive(Subcommand)]
enum Analyze {
    /// Aggregate votes into a ranked scale.
    Scale {
        #[command(flatten)]
        design: DesignSource,
        #[arg(long)]
        votes: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare two scales (JSON or CSV) or ranking lists (`item_id` header).
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Row label in CSV output.
        #[arg(long, default_value = "comparison")]
        label: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Scale from a per-task vote sample against the scale from all votes.
    Subsample {
        #[command(flatten)]
        design: DesignSource,
        #[arg(long)]
        votes: PathBuf,
        /// Votes kept per task; comma-separated for several rows.
        #[arg(long, value_delimiter = ',', required = true)]
        per_task: Vec<usize>,
        #[arg(long)]
        seed: u64,
        /// Restrict to one annotator group; `mixed` (default) pools all.
        #[arg(long)]
        group: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Percentage agreement between level labelings.
    Agreement {
        /// TSV with `id` and `label` (or `reference_label`); give two or more.
        #[arg(long = "labels", required = true, num_args = 1)]
        labels: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        tolerance: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Seconds per task, by group or annotator.
    Time {
        #[arg(long)]
        votes: PathBuf,
        #[arg(long, value_enum, default_value_t = By::Group)]
        by: By,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Minutes per worker to collect every vote.
    Workload {
        #[arg(long)]
        n_items: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long)]
        votes_per_task: usize,
        #[arg(long)]
        seconds: f64,
        #[arg(long)]
        workers: usize,
        /// Use this task count instead of generating a design.
        #[arg(long)]
        tasks: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn with_path<T>(path: &Path, r: bwsrank_core::Result<T>) -> Result<T> {
    r.map_err(|source| CliError::Input { path: path.to_path_buf(), source })
}

fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    Ok(serde_json::from_str(&read_text(&path)?)?)
}

fn load_votes(path: &Path) -> Result<Vec<Vote>> {
    with_path(path, formats::read_votes_csv(read_text(path)?.as_bytes()))
}

fn load_items(path: &Path) -> Result<Vec<Item>> {
    with_path(path, formats::parse_items_tsv(&read_text(path)?))
}

impl DesignSource {
    fn resolve(&self) -> Result<(Design, Vec<Item>)> {
        match (&self.project, &self.items, self.design_seed) {
            (Some(dir), None, None) => {
                let m = load_manifest(dir)?;
                Ok((m.design, m.items))
            }
            (None, Some(items), Some(seed)) => {
                let items = load_items(items)?;
                let design = bwsrank_core::generate_design(items.len(), self.k, seed)?;
                Ok((design, items))
            }
            _ => Err(CliError::Usage("give --project DIR, or --items FILE with --design-seed N".into())),
        }
    }
}

/// A scale file, or a plain ranking with an `item_id` header.
enum Ranking {
    Scale(RankedScale),
    List(Vec<String>),
}

impl Ranking {
    fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut lines = text.lines();
        if lines.next().map(str::trim) == Some("item_id") {
            return Ok(Ranking::List(lines.map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()));
        }
        Ok(Ranking::Scale(with_path(path, formats::parse_scale(&text))?))
    }

    fn order(&self) -> Vec<&str> {
        match self {
            Ranking::Scale(s) => s.order(),
            Ranking::List(l) => l.iter().map(String::as_str).collect(),
        }
    }
}

fn compare(a: &Ranking, b: &Ranking) -> Result<RankingComparison> {
    Ok(match (a, b) {
        (Ranking::Scale(a), Ranking::Scale(b)) => compare_scales(a, b)?,
        _ => compare_lists(&a.order(), &b.order())?,
    })
}

fn init(args: InitArgs) -> Result<()> {
    let items = load_items(&args.items)?;
    let registry = Registry::open(&args.out)?;
    let settings = ProjectSettings {
        project_id: args.project_id,
        block_size: args.k,
        seed: args.seed,
        votes_required: args.votes_required,
        group: args.group,
        overshoot_allowed: args.overshoot,
        expected_quota: args.quota,
    };
    let (summary, _) = registry.create_project(items, settings)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let registry = Arc::new(Registry::open(&args.data)?);
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("serving {} project(s) on http://{}", registry.project_ids().len(), args.listen);
    runtime.block_on(bwsrank_service::serve(registry, args.listen, args.static_dir))?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let manifest = load_manifest(&args.project)?;
    if !(args.sigma >= 0.0) {
        return Err(CliError::Usage(format!("--sigma must be non-negative, got {}", args.sigma)));
    }
    let votes_per_task = args.votes_per_task.unwrap_or(manifest.votes_required);
    let world = LatentWorld::evenly_spaced(&manifest.items, args.seed);
    let panel = SyntheticAnnotator::panel(args.annotators, args.sigma * world.range(), &args.group)?;
    let votes = run_campaign(&manifest.design, &manifest.items, &world, &panel, votes_per_task, args.seed)?;
    if let Some(path) = &args.latent_out {
        let mut text = String::from("item_id\n");
        for id in world.latent_order() {
            text.push_str(id);
            text.push('\n');
        }
        fs::write(path, text)?;
    }
    output::write_out(args.out.as_deref(), formats::votes_to_csv(&votes)?.as_bytes())
}

fn analyze(cmd: Analyze) -> Result<()> {
    match cmd {
        Analyze::Scale { design, votes, output } => {
            let (design, items) = design.resolve()?;
            let scale: RankedScale = aggregate_scale(&design, &items, &load_votes(&votes)?)?;
            emit(&output, &scale, |w| Ok(formats::write_scale_csv(&scale, w)?))
        }
        Analyze::Compare { first, second, label, output } => {
            let (a, b) = (Ranking::load(&first)?, Ranking::load(&second)?);
            let cmp = compare(&a, &b)?;
            let rows = [ComparisonRow { crowd: label, sample_size: a.order().len(), comparison: cmp.clone() }];
            emit(&output, &cmp, |w| Ok(formats::write_comparison_csv(&rows, w)?))
        }
        Analyze::Subsample { design, votes, per_task, seed, group, output } => {
            let (design, items) = design.resolve()?;
            let votes = load_votes(&votes)?;
            let selection = GroupSelection::from_flag(group.as_deref());
            let rows = per_task
                .iter()
                .map(|&k| {
                    Ok(ComparisonRow {
                        crowd: selection.label().to_string(),
                        sample_size: k,
                        comparison: subsample_report::<f64>(&design, &items, &votes, k, seed, &selection)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            emit(&output, &rows, |w| Ok(formats::write_comparison_csv(&rows, w)?))
        }
        Analyze::Agreement { labels, tolerance, output } => {
            let labelings = labels
                .iter()
                .map(|p| {
                    let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into());
                    Ok((name, with_path(p, formats::read_labels_tsv(read_text(p)?.as_bytes()))?))
                })
                .collect::<Result<Vec<_>>>()?;
            let report = agreement_report::<f64>(&labelings, tolerance)?;
            emit(&output, &report, |w| output::agreement_csv(&report, w))
        }
        Analyze::Time { votes, by, output } => {
            let grouping = match by {
                By::Group => TimeGrouping::Group,
                By::Annotator => TimeGrouping::Annotator,
            };
            let report = time_stats(&load_votes(&votes)?, grouping);
            emit(&output, &report, |w| output::time_csv(&report, w))
        }
        Analyze::Workload { n_items, k, votes_per_task, seconds, workers, tasks, seed, output } => {
            let projection = match tasks {
                Some(task_count) => WorkloadProjection {
                    n_items,
                    block_size: k,
                    task_count,
                    votes_per_task,
                    mean_seconds: seconds,
                    workers,
                    minutes_per_worker: workload_minutes(task_count, votes_per_task, seconds, workers)?,
                },
                None => workload_projection(n_items, k, votes_per_task, seconds, workers, seed)?,
            };
            emit(&output, &projection, |w| output::workload_csv(&projection, w))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Init(a) => init(a),
        Command::Serve(a) => serve(a),
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
