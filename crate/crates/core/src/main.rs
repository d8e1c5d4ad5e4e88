use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use topobias::classify::NbKind;
use topobias::generators::GeneratorSpec;
use topobias::io;
use topobias::pipeline::{self, FssMode, RunConfig, Stage};
use topobias::ExperimentConfig;

#[derive(Parser)]
#[command(name = "topobias", version, about = "Measure bias between wireless topology generators")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "TOPOBIAS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus of topologies.
    Gen(GenArgs),
    /// Add an external topology CSV to a corpus.
    Import(ImportArgs),
    /// Extract the feature matrix of a corpus.
    Extract(ExtractArgs),
    /// Rank generator subsets by bias index.
    #[command(alias = "rank")]
    Bias(BiasArgs),
    /// Cross-validate Naive Bayes classifiers.
    Classify(ClassifyArgs),
    /// Forward sequential feature selection.
    Fss(FssArgs),
    /// Render summary.md from the JSON reports in a directory.
    Report(ReportArgs),
    /// Run several stages in one go.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_delimiter = ',', default_value = "uniform,heavy,growth")]
    generators: Vec<String>,
    #[arg(long)]
    per_gen: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    area: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    area: f64,
    #[arg(long)]
    label: String,
    /// The file has only `x,y` rows, no id column or header.
    #[arg(long)]
    headerless: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    /// Corpus directory.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BiasArgs {
    #[arg(long)]
    features: PathBuf,
    /// JSON experiment config recorded in the report.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Only rank subsets of this size (default: every size).
    #[arg(long)]
    subset_size: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    features: PathBuf,
    /// JSON experiment config recorded in the report.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "gaussian")]
    kind: Vec<NbKind>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Restrict to two generators, e.g. `uniform,heavy`.
    #[arg(long, value_delimiter = ',')]
    pair: Option<Vec<String>>,
    /// Also cross-validate every pair of generators.
    #[arg(long)]
    pairwise: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cv,
    Fold,
}

#[derive(Args)]
struct FssArgs {
    #[arg(long)]
    features: PathBuf,
    /// JSON experiment config recorded in the report.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "gaussian")]
    kind: NbKind,
    #[arg(long, value_enum, default_value = "cv")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    fold: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    max_features: Option<usize>,
    /// Keep adding features after accuracy stops improving.
    #[arg(long)]
    full_trace: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding the JSON reports.
    #[arg(long = "in")]
    input: PathBuf,
    /// Defaults to `<in>/summary.md`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON run config; without it the desk-sized preset is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the reference-sized experiment instead of the desk preset.
    #[arg(long, conflicts_with = "config")]
    full: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    generators: Option<Vec<String>>,
    #[arg(long)]
    per_gen: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<String>>,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    dump_config: bool,
}

fn parse_generators(names: &[String]) -> Result<Vec<GeneratorSpec>> {
    names
        .iter()
        .map(|s| s.parse::<GeneratorSpec>().with_context(|| format!("bad generator {s:?}")))
        .collect()
}

fn load_experiment(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => io::read_json(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let mut cfg = RunConfig {
        experiment: load_experiment(args.config.as_deref())?,
        generators: parse_generators(&args.generators)?,
        output_dir: args.out,
        ..RunConfig::default()
    };
    let e = &mut cfg.experiment;
    if let Some(v) = args.per_gen {
        e.topologies_per_generator = v;
    }
    if let Some(v) = args.nodes {
        e.nodes_per_topology = v;
    }
    if let Some(v) = args.area {
        e.area_side = v;
    }
    if let Some(v) = args.seed {
        e.seed = v;
    }
    pipeline::run_gen(&cfg).context("gen stage")
}

fn import(args: ImportArgs) -> Result<()> {
    let t = io::import_topology(&args.file, args.area, &args.label, args.headerless)
        .with_context(|| format!("importing {}", args.file.display()))?;
    let cfg = ExperimentConfig {
        area_side: args.area,
        ..ExperimentConfig::default()
    };
    io::add_to_corpus(&args.out, &t, &cfg).context("import stage")?;
    info!("imported {} as {}", args.file.display(), t.id);
    Ok(())
}

fn extract(args: ExtractArgs) -> Result<()> {
    let config = match args.config {
        Some(p) => load_experiment(Some(&p))?,
        None => {
            let manifest: topobias::generators::CorpusManifest =
                io::read_json(&args.input.join(io::MANIFEST_FILE)).context("extract stage needs a corpus from gen")?;
            manifest.config
        }
    };
    pipeline::run_extract(&args.input, &config, &args.out).context("extract stage")?;
    Ok(())
}

fn bias(args: BiasArgs) -> Result<()> {
    let config = load_experiment(args.config.as_deref())?;
    pipeline::run_bias(&args.features, &config, args.subset_size, &args.out)
        .context("bias stage")?;
    Ok(())
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let mut cfg = RunConfig {
        experiment: load_experiment(args.config.as_deref())?,
        ..RunConfig::default()
    };
    cfg.experiment.folds = args.k;
    cfg.experiment.seed = args.seed;
    cfg.kinds = args.kind;
    cfg.pairwise = args.pairwise;
    let pair = match &args.pair {
        Some(p) if p.len() == 2 => Some((p[0].as_str(), p[1].as_str())),
        Some(_) => bail!("--pair takes exactly two labels"),
        None => None,
    };
    pipeline::run_classify(&args.features, &cfg, pair, &args.out).context("classify stage")?;
    Ok(())
}

fn fss(args: FssArgs) -> Result<()> {
    let mut cfg = RunConfig {
        experiment: load_experiment(args.config.as_deref())?,
        ..RunConfig::default()
    };
    cfg.experiment.folds = args.k;
    cfg.experiment.seed = args.seed;
    cfg.fss.kind = args.kind;
    cfg.fss.mode = match args.mode {
        ModeArg::Cv => FssMode::Cv,
        ModeArg::Fold => FssMode::Fold,
    };
    cfg.fss.fold = args.fold;
    cfg.fss.max_features = args.max_features;
    cfg.fss.full_trace = args.full_trace;
    pipeline::run_fss(&args.features, &cfg, &args.out).context("fss stage")?;
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let out = args.out.unwrap_or_else(|| args.input.join(pipeline::SUMMARY_FILE));
    pipeline::run_report(&args.input, &out).context("report stage")?;
    Ok(())
}

fn run_pipeline(args: PipelineArgs, threads: Option<usize>) -> Result<()> {
    let mut cfg = match (&args.config, args.full) {
        (Some(p), _) => RunConfig::load(p).with_context(|| format!("reading run config {}", p.display()))?,
        (None, true) => RunConfig::default(),
        (None, false) => RunConfig::desk(),
    };
    if let Some(o) = args.out {
        cfg.output_dir = o;
    }
    if let Some(g) = &args.generators {
        cfg.generators = parse_generators(g)?;
    }
    if let Some(v) = args.per_gen {
        cfg.experiment.topologies_per_generator = v;
    }
    if let Some(v) = args.nodes {
        cfg.experiment.nodes_per_topology = v;
    }
    if let Some(v) = args.seed {
        cfg.experiment.seed = v;
    }
    if let Some(s) = &args.stages {
        cfg.stages = s
            .iter()
            .map(|x| x.parse::<Stage>())
            .collect::<std::result::Result<_, _>>()?;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    if args.dump_config {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(());
    }
    pipeline::run_pipeline(&cfg)?;
    info!("artifacts written to {}", cfg.output_dir.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Import(a) => import(a),
        Command::Extract(a) => extract(a),
        Command::Bias(a) => bias(a),
        Command::Classify(a) => classify(a),
        Command::Fss(a) => fss(a),
        Command::Report(a) => report(a),
        Command::Pipeline(a) => run_pipeline(a, cli.threads),
    }
}
