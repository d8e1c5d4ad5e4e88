//! Seeded node-placement models.
//!
//! Three families are provided: independent uniform placement, a grid of
//! cells with Pareto-distributed weights (nodes cluster in a few heavy
//! cells), and a growth process where new nodes prefer to join next to
//! well-connected existing nodes. Every generator is a pure function of its
//! parameters and a 64-bit seed.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Pareto;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{euclidean_distance, ExperimentConfig, Point, Topology};

pub const DEFAULT_TAIL_EXPONENT: f64 = 1.2;
pub const DEFAULT_GRID_DIVISIONS: usize = 10;
pub const DEFAULT_ATTACH_BIAS: f64 = 0.75;
/// Default attach radius as a fraction of the area side.
pub const DEFAULT_ATTACH_RADIUS_FRACTION: f64 = 1.0 / 20.0;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_common(n: usize, area_side: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("node count must be at least 1".into()));
    }
    if !(area_side.is_finite() && area_side > 0.0) {
        return Err(Error::InvalidParameter(format!("area side must be positive, got {area_side}")));
    }
    Ok(())
}

fn uniform_point<R: Rng>(rng: &mut R, x0: f64, y0: f64, side: f64) -> Point {
    Point::new(
        x0 + rng.random_range(0.0..=side),
        y0 + rng.random_range(0.0..=side),
    )
}

/// Every coordinate drawn independently and uniformly from `[0, D]`.
pub fn generate_uniform(n: usize, area_side: f64, seed: u64) -> Result<Vec<Point>> {
    check_common(n, area_side)?;
    let mut rng = rng_for(seed);
    Ok((0..n).map(|_| uniform_point(&mut rng, 0.0, 0.0, area_side)).collect())
}

/// Grid cells get Pareto(scale 1, shape `tail_exponent`) weights; nodes pick a
/// cell proportionally to its weight and land uniformly inside it.
pub fn generate_heavy_tailed(
    n: usize,
    area_side: f64,
    grid_divisions: usize,
    tail_exponent: f64,
    seed: u64,
) -> Result<Vec<Point>> {
    check_common(n, area_side)?;
    if grid_divisions == 0 {
        return Err(Error::InvalidParameter("grid divisions must be at least 1".into()));
    }
    if !(tail_exponent.is_finite() && tail_exponent > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail exponent must be positive, got {tail_exponent}"
        )));
    }
    let mut rng = rng_for(seed);
    let cells = grid_divisions * grid_divisions;
    let pareto = Pareto::new(1.0, tail_exponent)
        .map_err(|e| Error::InvalidParameter(format!("pareto: {e}")))?;
    let weights: Vec<f64> = (0..cells).map(|_| pareto.sample(&mut rng)).collect();
    // Shape close to zero can overflow to infinity; fall back to the finite maximum.
    let cap = weights.iter().copied().filter(|w| w.is_finite()).fold(1.0, f64::max);
    let weights: Vec<f64> = weights.into_iter().map(|w| if w.is_finite() { w } else { cap }).collect();
    let index = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidParameter(format!("cell weights: {e}")))?;
    let side = area_side / grid_divisions as f64;
    Ok((0..n)
        .map(|_| {
            let cell = index.sample(&mut rng);
            let (cx, cy) = (cell % grid_divisions, cell / grid_divisions);
            let p = uniform_point(&mut rng, cx as f64 * side, cy as f64 * side, side);
            Point::new(p.x.min(area_side), p.y.min(area_side))
        })
        .collect())
}

/// Sequential growth: with probability `attach_bias` a new node joins near an
/// existing node chosen with weight `1 + degree` at `attach_radius`, otherwise it
/// lands uniformly. Proposals outside the area are clamped to the boundary.
pub fn generate_growth(
    n: usize,
    area_side: f64,
    attach_bias: f64,
    attach_radius: f64,
    seed: u64,
) -> Result<Vec<Point>> {
    check_common(n, area_side)?;
    if !(0.0..=1.0).contains(&attach_bias) {
        return Err(Error::InvalidParameter(format!(
            "attach bias must lie in [0, 1], got {attach_bias}"
        )));
    }
    if !(attach_radius > 0.0 && attach_radius < area_side) {
        return Err(Error::InvalidParameter(format!(
            "attach radius must lie in (0, {area_side}), got {attach_radius}"
        )));
    }
    let mut rng = rng_for(seed);
    let mut nodes = Vec::with_capacity(n);
    let mut degree: Vec<u64> = Vec::with_capacity(n);
    // Running sum of (1 + degree) over existing nodes.
    let mut total_weight: u64 = 0;

    nodes.push(uniform_point(&mut rng, 0.0, 0.0, area_side));
    degree.push(0);
    total_weight += 1;

    while nodes.len() < n {
        let p = if rng.random_bool(attach_bias) {
            let mut ticket = rng.random_range(0..total_weight);
            let mut anchor = 0;
            for (i, d) in degree.iter().enumerate() {
                let w = 1 + d;
                if ticket < w {
                    anchor = i;
                    break;
                }
                ticket -= w;
            }
            let centre: Point = nodes[anchor];
            let rho = attach_radius * rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            Point::new(
                (centre.x + rho * theta.cos()).clamp(0.0, area_side),
                (centre.y + rho * theta.sin()).clamp(0.0, area_side),
            )
        } else {
            uniform_point(&mut rng, 0.0, 0.0, area_side)
        };
        let mut new_degree = 0;
        for (i, q) in nodes.iter().enumerate() {
            if euclidean_distance(p, *q) < attach_radius {
                degree[i] += 1;
                new_degree += 1;
            }
        }
        // each new edge adds one to both endpoints
        total_weight += 1 + 2 * new_degree;
        nodes.push(p);
        degree.push(new_degree);
    }
    Ok(nodes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlacementModel {
    Uniform,
    HeavyTailedGrid {
        grid_divisions: usize,
        tail_exponent: f64,
    },
    Growth {
        attach_bias: f64,
        /// `None` means `D / 20`.
        attach_radius: Option<f64>,
    },
}

impl PlacementModel {
    pub fn heavy_tailed_default() -> Self {
        PlacementModel::HeavyTailedGrid {
            grid_divisions: DEFAULT_GRID_DIVISIONS,
            tail_exponent: DEFAULT_TAIL_EXPONENT,
        }
    }

    pub fn growth_default() -> Self {
        PlacementModel::Growth {
            attach_bias: DEFAULT_ATTACH_BIAS,
            attach_radius: None,
        }
    }

    pub fn place(&self, n: usize, area_side: f64, seed: u64) -> Result<Vec<Point>> {
        match *self {
            PlacementModel::Uniform => generate_uniform(n, area_side, seed),
            PlacementModel::HeavyTailedGrid {
                grid_divisions,
                tail_exponent,
            } => generate_heavy_tailed(n, area_side, grid_divisions, tail_exponent, seed),
            PlacementModel::Growth {
                attach_bias,
                attach_radius,
            } => {
                let radius = attach_radius.unwrap_or(area_side * DEFAULT_ATTACH_RADIUS_FRACTION);
                generate_growth(n, area_side, attach_bias, radius, seed)
            }
        }
    }
}

/// A labelled generator taking part in a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub label: String,
    pub model: PlacementModel,
}

impl GeneratorSpec {
    pub fn new(label: impl Into<String>, model: PlacementModel) -> Self {
        GeneratorSpec {
            label: label.into(),
            model,
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Parses `kind` or `label:kind`, where kind is `uniform`, `heavy` or `growth`
/// (long forms `heavy_tailed_grid` / `heavy_tailed` are accepted too).
impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (label, kind) = match s.split_once(':') {
            Some((l, k)) => (l.trim(), k.trim()),
            None => (s, s),
        };
        if label.is_empty() {
            return Err(Error::InvalidParameter(format!("empty generator label in {s:?}")));
        }
        let model = match kind {
            "uniform" => PlacementModel::Uniform,
            "heavy" | "heavy_tailed" | "heavy_tailed_grid" => PlacementModel::heavy_tailed_default(),
            "growth" => PlacementModel::growth_default(),
            other => {
                return Err(Error::InvalidParameter(format!("unknown generator kind {other:?}")))
            }
        };
        Ok(GeneratorSpec::new(label, model))
    }
}

/// SplitMix64 finaliser (Steele, Lea and Flood), used to derive stream seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-topology seed. Injective in `(generator, index)` for indices below 2^32.
pub fn derive_seed(base_seed: u64, generator_index: usize, topology_index: usize) -> u64 {
    let key = ((generator_index as u64) << 32) | (topology_index as u64 & 0xFFFF_FFFF);
    splitmix64(splitmix64(base_seed) ^ key)
}

pub fn topology_id(label: &str, index: usize) -> String {
    format!("{label}-{index:05}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub label: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub tool_version: String,
    pub specs: Vec<GeneratorSpec>,
    pub config: ExperimentConfig,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn labels(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.label.as_str()).collect()
    }
}

/// Generates `topologies_per_generator` topologies for every spec, in parallel,
/// returned in (generator, index) order.
pub fn generate_corpus(
    specs: &[GeneratorSpec],
    config: &ExperimentConfig,
) -> Result<(Vec<Topology>, CorpusManifest)> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("at least one generator is required".into()));
    }
    if config.topologies_per_generator == 0 {
        return Err(Error::InvalidParameter("topologies per generator must be at least 1".into()));
    }
    let mut seen = BTreeSet::new();
    for s in specs {
        if !seen.insert(s.label.as_str()) {
            return Err(Error::DuplicateLabel(s.label.clone()));
        }
    }

    let per_gen = config.topologies_per_generator;
    let tasks: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|g| (0..per_gen).map(move |j| (g, j)))
        .collect();
    let topologies = tasks
        .par_iter()
        .map(|&(g, j)| {
            let spec = &specs[g];
            let seed = derive_seed(config.seed, g, j);
            let nodes = spec.model.place(config.nodes_per_topology, config.area_side, seed)?;
            Ok(Topology::new(
                topology_id(&spec.label, j),
                spec.label.clone(),
                config.area_side,
                nodes,
                Some(seed),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let entries = topologies
        .iter()
        .map(|t| ManifestEntry {
            id: t.id.clone(),
            label: t.generator_label.clone(),
            seed: t.seed,
        })
        .collect();
    let manifest = CorpusManifest {
        tool_version: crate::TOOL_VERSION.to_string(),
        specs: specs.to_vec(),
        config: config.clone(),
        entries,
    };
    Ok((topologies, manifest))
}

/// Reads an externally produced topology; see [`crate::io::read_topology`].
pub fn import_topology(
    path: &Path,
    expected_area_side: f64,
    label: &str,
    headerless: bool,
) -> Result<Topology> {
    crate::io::import_topology(path, expected_area_side, label, headerless)
}
