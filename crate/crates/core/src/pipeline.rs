//! End-to-end orchestration: generate, extract, bias, classify, select, report.
//!
//! Every stage reads its inputs from the output directory and writes its
//! artifacts back there, so stages can be run one at a time and resumed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use crate::bias::{rank_all_subset_sizes, BiasReport};
use crate::classify::{
    confusion_and_pairwise, forward_sequential_selection, ConfusionAnalysis, Evaluation, FssTrace,
    GroundTruth, NbKind,
};
use crate::error::{Error, Result};
use crate::features::{extract_matrix, FeatureMatrix};
use crate::generators::{generate_corpus, GeneratorSpec};
use crate::io::{self, ReportFile};
use crate::topology::ExperimentConfig;

pub const FEATURES_FILE: &str = "features.csv";
pub const BIAS_FILE: &str = "bias_report.json";
pub const CLASSIFICATION_FILE: &str = "classification_report.json";
pub const FSS_FILE: &str = "fss.json";
pub const SUMMARY_FILE: &str = "summary.md";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Gen,
    Extract,
    Bias,
    Classify,
    Fss,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Gen,
        Stage::Extract,
        Stage::Bias,
        Stage::Classify,
        Stage::Fss,
        Stage::Report,
    ];
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gen" => Stage::Gen,
            "extract" => Stage::Extract,
            "bias" | "rank" => Stage::Bias,
            "classify" => Stage::Classify,
            "fss" => Stage::Fss,
            "report" => Stage::Report,
            other => return Err(Error::InvalidParameter(format!("unknown stage {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FssMode {
    Cv,
    Fold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FssOptions {
    pub kind: NbKind,
    pub mode: FssMode,
    /// Used in `fold` mode.
    pub fold: usize,
    /// `None` means every feature.
    pub max_features: Option<usize>,
    pub full_trace: bool,
}

impl Default for FssOptions {
    fn default() -> Self {
        FssOptions {
            kind: NbKind::Gaussian,
            mode: FssMode::Cv,
            fold: 0,
            max_features: None,
            full_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub generators: Vec<GeneratorSpec>,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
    pub kinds: Vec<NbKind>,
    /// Also cross-validate every pair of generators with the first kind.
    pub pairwise: bool,
    pub fss: FssOptions,
    pub stages: Vec<Stage>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: ExperimentConfig::default(),
            generators: default_generators(),
            output_dir: PathBuf::from("topobias-out"),
            threads: None,
            kinds: NbKind::ALL.to_vec(),
            pairwise: true,
            fss: FssOptions::default(),
            stages: Stage::ALL.to_vec(),
        }
    }
}

pub fn default_generators() -> Vec<GeneratorSpec> {
    ["uniform", "heavy", "growth"]
        .iter()
        .map(|s| s.parse().expect("built-in generator"))
        .collect()
}

impl RunConfig {
    /// 3 generators x 100 topologies x 200 nodes, everything else at the reference values.
    pub fn desk() -> Self {
        RunConfig {
            experiment: ExperimentConfig {
                nodes_per_topology: 200,
                topologies_per_generator: 100,
                ..ExperimentConfig::default()
            },
            ..RunConfig::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        if self.kinds.is_empty() {
            return Err(Error::InvalidParameter("at least one classifier kind is required".into()));
        }
        Ok(())
    }
}

/// Everything `classify` produces: one analysis per kind on all generators,
/// then the optional pairwise analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationBundle {
    pub analyses: Vec<ConfusionAnalysis>,
}

pub type BiasFile = ReportFile<Vec<BiasReport>>;
pub type ClassificationFile = ReportFile<ClassificationBundle>;
pub type FssFile = ReportFile<FssTrace>;

fn stage_error(stage: &str, e: Error) -> Error {
    match e {
        Error::MissingPrerequisite { .. } => e,
        other => Error::InvalidParameter(format!("{stage} stage failed: {other}")),
    }
}

pub fn run_gen(cfg: &RunConfig) -> Result<()> {
    info!(
        "generating {} x {} topologies with {} nodes",
        cfg.generators.len(),
        cfg.experiment.topologies_per_generator,
        cfg.experiment.nodes_per_topology
    );
    let (topologies, manifest) = generate_corpus(&cfg.generators, &cfg.experiment)?;
    io::write_corpus(&cfg.output_dir, &topologies, &manifest)
}

pub fn run_extract(corpus_dir: &Path, config: &ExperimentConfig, out: &Path) -> Result<FeatureMatrix> {
    let (topologies, _) = io::read_corpus(corpus_dir)?;
    info!("extracting features from {} topologies", topologies.len());
    let matrix = extract_matrix(&topologies, config)?;
    io::write_features(out, &matrix)?;
    Ok(matrix)
}

pub fn run_bias(features: &Path, config: &ExperimentConfig, subset_size: Option<usize>, out: &Path) -> Result<BiasFile> {
    let matrix = io::read_features(features)?;
    let reports = match subset_size {
        Some(p) => vec![crate::bias::rank_generator_subsets(&matrix, p)?],
        None => rank_all_subset_sizes(&matrix)?,
    };
    let file = ReportFile::new(config.clone(), reports);
    io::write_json(out, &file)?;
    Ok(file)
}

pub fn classification_bundle(
    gt: &GroundTruth,
    kinds: &[NbKind],
    k: usize,
    seed: u64,
    pairwise: bool,
) -> Result<ClassificationBundle> {
    let mut analyses = Vec::new();
    for &kind in kinds {
        info!("cross-validating {kind} naive bayes, k={k}");
        analyses.push(confusion_and_pairwise(gt, k, kind, seed, None)?);
    }
    if pairwise {
        let kind = kinds[0];
        for (i, a) in gt.labels.iter().enumerate() {
            for b in &gt.labels[i + 1..] {
                analyses.push(confusion_and_pairwise(gt, k, kind, seed, Some((a, b)))?);
            }
        }
    }
    Ok(ClassificationBundle { analyses })
}

pub fn run_classify(features: &Path, cfg: &RunConfig, pair: Option<(&str, &str)>, out: &Path) -> Result<ClassificationFile> {
    let matrix = io::read_features(features)?;
    let gt = GroundTruth::from_matrix(&matrix)?;
    let (k, seed) = (cfg.experiment.folds, cfg.experiment.seed);
    let bundle = match pair {
        Some(p) => ClassificationBundle {
            analyses: vec![confusion_and_pairwise(&gt, k, cfg.kinds[0], seed, Some(p))?],
        },
        None => classification_bundle(&gt, &cfg.kinds, k, seed, cfg.pairwise)?,
    };
    let file = ReportFile::new(cfg.experiment.clone(), bundle);
    io::write_json(out, &file)?;
    Ok(file)
}

pub fn run_fss(features: &Path, cfg: &RunConfig, out: &Path) -> Result<FssFile> {
    let matrix = io::read_features(features)?;
    let gt = GroundTruth::from_matrix(&matrix)?;
    let (k, seed) = (cfg.experiment.folds, cfg.experiment.seed);
    let evaluation = match cfg.fss.mode {
        FssMode::Cv => Evaluation::CrossValidated { k, seed },
        FssMode::Fold => Evaluation::SingleFold { k, seed, fold: cfg.fss.fold },
    };
    let max = cfg.fss.max_features.unwrap_or(gt.feature_count());
    info!("forward selection with {} up to {max} features", cfg.fss.kind);
    let trace = forward_sequential_selection(&gt, cfg.fss.kind, evaluation, max, cfg.fss.full_trace)?;
    let file = ReportFile::new(cfg.experiment.clone(), trace);
    io::write_json(out, &file)?;
    Ok(file)
}

fn read_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if path.exists() {
        io::read_json(path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn run_report(dir: &Path, out: &Path) -> Result<String> {
    let bias: Option<BiasFile> = read_optional(&dir.join(BIAS_FILE))?;
    let classification: Option<ClassificationFile> = read_optional(&dir.join(CLASSIFICATION_FILE))?;
    let fss: Option<FssFile> = read_optional(&dir.join(FSS_FILE))?;
    let text = emit_summary(
        bias.as_ref().map(|b| b.report.as_slice()),
        classification.as_ref().map(|c| &c.report),
        fss.as_ref().map(|f| &f.report),
    );
    io::write_file(out, text.as_bytes())?;
    Ok(text)
}

/// Runs the configured stages in order inside `cfg.output_dir`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| run_stages(cfg)),
        None => run_stages(cfg),
    }
}

fn run_stages(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.output_dir;
    let features = dir.join(FEATURES_FILE);
    let mut stages = cfg.stages.clone();
    stages.sort();
    stages.dedup();
    for stage in stages {
        match stage {
            Stage::Gen => run_gen(cfg).map_err(|e| stage_error("gen", e))?,
            Stage::Extract => {
                run_extract(dir, &cfg.experiment, &features).map_err(|e| stage_error("extract", e))?;
            }
            Stage::Bias => {
                run_bias(&features, &cfg.experiment, None, &dir.join(BIAS_FILE))
                    .map_err(|e| stage_error("bias", e))?;
            }
            Stage::Classify => {
                run_classify(&features, cfg, None, &dir.join(CLASSIFICATION_FILE))
                    .map_err(|e| stage_error("classify", e))?;
            }
            Stage::Fss => {
                run_fss(&features, cfg, &dir.join(FSS_FILE)).map_err(|e| stage_error("fss", e))?;
            }
            Stage::Report => {
                run_report(dir, &dir.join(SUMMARY_FILE)).map_err(|e| stage_error("report", e))?;
            }
        }
        info!("stage {stage:?} done");
    }
    Ok(())
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", header.iter().map(|_| "---").collect::<Vec<_>>().join("|"));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

/// Markdown summary: bias indices, accuracies, selection trace and confusion matrix.
pub fn emit_summary(
    bias: Option<&[BiasReport]>,
    classification: Option<&ClassificationBundle>,
    fss: Option<&FssTrace>,
) -> String {
    let mut out = String::from("# Topology generator bias summary\n\n");

    out.push_str("## Bias index\n\n");
    match bias {
        Some(reports) if !reports.is_empty() => {
            let mut rows = Vec::new();
            for r in reports {
                let mut entries: Vec<_> = r.entries.iter().collect();
                entries.sort_by(|a, b| a.bias_index.total_cmp(&b.bias_index));
                rows.extend(
                    entries
                        .into_iter()
                        .map(|e| vec![e.labels.join(" + "), format!("{:.3}", e.bias_index)]),
                );
            }
            table(&mut out, &["Generator(s)".into(), "Bias index".into()], &rows);
        }
        _ => out.push_str("Not run.\n\n"),
    }

    out.push_str("## Classification accuracy\n\n");
    let full = classification.and_then(|c| c.analyses.iter().find(|a| a.pair.is_none()));
    match classification {
        Some(c) if !c.analyses.is_empty() => {
            let rows: Vec<Vec<String>> = c
                .analyses
                .iter()
                .map(|a| {
                    vec![
                        a.report.kind.to_string(),
                        a.report.labels.join(" vs "),
                        format!("{:.3}", a.report.mean_accuracy),
                    ]
                })
                .collect();
            table(
                &mut out,
                &["Classifier".into(), "Classes".into(), "Accuracy".into()],
                &rows,
            );
        }
        _ => out.push_str("Not run.\n\n"),
    }

    out.push_str("## Forward sequential selection\n\n");
    match fss {
        Some(t) if !t.steps.is_empty() => {
            let rows: Vec<Vec<String>> = t
                .steps
                .iter()
                .map(|s| {
                    vec![
                        s.selected.len().to_string(),
                        format!("{:.3}", s.accuracy),
                        s.selected.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
                        s.feature_name.clone(),
                    ]
                })
                .collect();
            table(
                &mut out,
                &["Features".into(), "Accuracy".into(), "Feature IDs".into(), "Added".into()],
                &rows,
            );
            let _ = writeln!(
                out,
                "Stopped after {} step(s): {:?}.\n",
                t.converged_steps, t.stop_reason
            );
        }
        _ => out.push_str("Not run.\n\n"),
    }

    out.push_str("## Confusion matrix\n\n");
    match full {
        Some(a) => {
            let _ = writeln!(out, "{} naive bayes, {}-fold, rows are true labels.\n", a.report.kind, a.report.k);
            let mut header = vec!["true \\ predicted".to_string()];
            header.extend(a.report.labels.iter().cloned());
            header.push("error share".into());
            let rows: Vec<Vec<String>> = a
                .report
                .confusion
                .iter()
                .zip(&a.per_class)
                .map(|(row, c)| {
                    let mut r = vec![c.label.clone()];
                    r.extend(row.iter().map(|v| v.to_string()));
                    r.push(format!("{:.3}", c.share_of_errors));
                    r
                })
                .collect();
            table(&mut out, &header, &rows);
        }
        None => out.push_str("Not run.\n\n"),
    }
    out
}
