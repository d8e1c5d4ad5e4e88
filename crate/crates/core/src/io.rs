//! On-disk formats.
//!
//! * topology CSV v1: a `# topobias-topology v1,D=<real>,generator=<label>,seed=<u64|none>`
//!   line, an `id,x,y` header, then one row per node with 6-decimal coordinates.
//! * features CSV v1: `topology_id,generator,<feature names...>` with values in
//!   shortest round-trip decimal form.
//! * JSON reports wrapped in a [`ReportFile`] envelope.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureCatalogue, FeatureMatrix, FeatureRow, FeatureVector, CATALOGUE_VERSION};
use crate::generators::{CorpusManifest, ManifestEntry};
use crate::topology::{ExperimentConfig, Point, Topology};

pub const TOPOLOGY_MAGIC: &str = "# topobias-topology v1";
pub const TOPOLOGY_DIR: &str = "topologies";
pub const MANIFEST_FILE: &str = "manifest.json";

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn topology_to_csv(t: &Topology) -> String {
    let seed = t.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    let mut out = format!(
        "{TOPOLOGY_MAGIC},D={},generator={},seed={seed}\nid,x,y\n",
        t.area_side, t.generator_label
    );
    for (i, p) in t.nodes.iter().enumerate() {
        out.push_str(&format!("{i},{:.6},{:.6}\n", p.x, p.y));
    }
    out
}

pub fn write_topology(path: &Path, t: &Topology) -> Result<()> {
    write_file(path, topology_to_csv(t).as_bytes())
}

struct Header {
    area_side: f64,
    generator: String,
    seed: Option<u64>,
}

fn parse_header(path: &Path, line: &str) -> Result<Header> {
    let rest = line
        .strip_prefix(TOPOLOGY_MAGIC)
        .ok_or_else(|| Error::parse(path, 1, format!("expected {TOPOLOGY_MAGIC:?} header")))?;
    let (mut area, mut generator, mut seed) = (None, None, None);
    for field in rest.split(',').map(str::trim).filter(|f| !f.is_empty()) {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(path, 1, format!("malformed header field {field:?}")))?;
        match key {
            "D" => {
                area = Some(value.parse::<f64>().map_err(|_| {
                    Error::parse(path, 1, format!("bad area side {value:?}"))
                })?)
            }
            "generator" => generator = Some(value.to_string()),
            "seed" => {
                seed = Some(if value == "none" {
                    None
                } else {
                    Some(value.parse::<u64>().map_err(|_| {
                        Error::parse(path, 1, format!("bad seed {value:?}"))
                    })?)
                })
            }
            _ => {}
        }
    }
    Ok(Header {
        area_side: area.ok_or_else(|| Error::parse(path, 1, "header lacks D="))?,
        generator: generator.ok_or_else(|| Error::parse(path, 1, "header lacks generator="))?,
        seed: seed.unwrap_or(None),
    })
}

/// Parses coordinate rows; `first_line` is the 1-based file line of the first row.
fn parse_points(
    path: &Path,
    body: &str,
    first_line: u64,
    with_ids: bool,
    area_side: f64,
) -> Result<Vec<Point>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut nodes = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, first_line + line.saturating_sub(1), e.to_string())
        })?;
        let line = first_line + record.position().map_or(1, |p| p.line()) - 1;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let expected = if with_ids { 3 } else { 2 };
        if record.len() != expected {
            return Err(Error::parse(
                path,
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        let offset = if with_ids {
            let id: usize = record[0]
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad node id {:?}", &record[0])))?;
            if id != nodes.len() {
                return Err(Error::parse(
                    path,
                    line,
                    format!("node ids must ascend from 0, expected {} found {id}", nodes.len()),
                ));
            }
            1
        } else {
            0
        };
        let coord = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, line, format!("bad coordinate {s:?}")))
        };
        let p = Point::new(coord(&record[offset])?, coord(&record[offset + 1])?);
        if p.x < 0.0 || p.y < 0.0 || p.x > area_side || p.y > area_side {
            return Err(Error::parse(
                path,
                line,
                format!("coordinate ({}, {}) out of bounds for D={area_side}", p.x, p.y),
            ));
        }
        nodes.push(p);
    }
    if nodes.is_empty() {
        return Err(Error::parse(path, first_line, "no node rows"));
    }
    Ok(nodes)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "topology".to_string())
}

fn split_first_line(text: &str) -> (&str, &str) {
    match text.split_once('\n') {
        Some((first, rest)) => (first.trim_end_matches('\r'), rest),
        None => (text.trim_end_matches('\r'), ""),
    }
}

/// Reads a topology CSV v1 file. The id is the file stem.
pub fn read_topology(path: &Path) -> Result<Topology> {
    let text = read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::parse(path, 1, "empty file"));
    }
    let (first, rest) = split_first_line(&text);
    let header = parse_header(path, first)?;
    let (columns, body) = split_first_line(rest);
    if columns.replace(' ', "") != "id,x,y" {
        return Err(Error::parse(path, 2, format!("expected column header \"id,x,y\", found {columns:?}")));
    }
    let nodes = parse_points(path, body, 3, true, header.area_side)?;
    Ok(Topology::new(file_stem(path), header.generator, header.area_side, nodes, header.seed))
}

/// Reads an externally produced topology, either in topology CSV v1 format or,
/// with `headerless`, as bare `x,y` rows. Coordinates are checked against
/// `expected_area_side` and the topology is relabelled with `label`.
pub fn import_topology(path: &Path, expected_area_side: f64, label: &str, headerless: bool) -> Result<Topology> {
    if !(expected_area_side.is_finite() && expected_area_side > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "area side must be positive, got {expected_area_side}"
        )));
    }
    let text = read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::parse(path, 1, "empty file"));
    }
    let nodes = if headerless {
        parse_points(path, &text, 1, false, expected_area_side)?
    } else {
        let (first, rest) = split_first_line(&text);
        parse_header(path, first)?;
        let (columns, body) = split_first_line(rest);
        if columns.replace(' ', "") != "id,x,y" {
            return Err(Error::parse(path, 2, format!("expected column header \"id,x,y\", found {columns:?}")));
        }
        parse_points(path, body, 3, true, expected_area_side)?
    };
    let t = Topology::new(file_stem(path), label, expected_area_side, nodes, None);
    t.validate().into_result(&t.id)?;
    Ok(t)
}

/// Path of a topology inside a corpus directory.
pub fn topology_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(TOPOLOGY_DIR).join(format!("{id}.csv"))
}

pub fn write_corpus(dir: &Path, topologies: &[Topology], manifest: &CorpusManifest) -> Result<()> {
    for t in topologies {
        write_topology(&topology_path(dir, &t.id), t)?;
    }
    write_json(&dir.join(MANIFEST_FILE), manifest)
}

/// Loads every topology listed in the manifest, labelled from the manifest.
pub fn read_corpus(dir: &Path) -> Result<(Vec<Topology>, CorpusManifest)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::MissingPrerequisite { path: manifest_path, stage: "gen" });
    }
    let manifest: CorpusManifest = read_json(&manifest_path)?;
    let topologies = manifest
        .entries
        .iter()
        .map(|e| {
            let mut t = read_topology(&topology_path(dir, &e.id))?;
            t.generator_label = e.label.clone();
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((topologies, manifest))
}

/// Adds an imported topology to a corpus directory, creating the manifest if needed.
pub fn add_to_corpus(dir: &Path, t: &Topology, config: &ExperimentConfig) -> Result<()> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest: CorpusManifest = if manifest_path.exists() {
        read_json(&manifest_path)?
    } else {
        CorpusManifest {
            tool_version: crate::TOOL_VERSION.to_string(),
            specs: Vec::new(),
            config: config.clone(),
            entries: Vec::new(),
        }
    };
    if manifest.entries.iter().any(|e| e.id == t.id) {
        return Err(Error::InvalidParameter(format!("topology id {:?} already in corpus", t.id)));
    }
    write_topology(&topology_path(dir, &t.id), t)?;
    manifest.entries.push(ManifestEntry {
        id: t.id.clone(),
        label: t.generator_label.clone(),
        seed: t.seed,
    });
    write_json(&manifest_path, &manifest)
}

pub fn features_to_csv(matrix: &FeatureMatrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["topology_id".to_string(), "generator".to_string()];
    header.extend(matrix.catalogue.names());
    w.write_record(&header).map_err(csv_to_io)?;
    for row in &matrix.rows {
        let mut record = vec![row.topology_id.clone(), row.label.clone()];
        record.extend(row.features.values.iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(csv_to_io)?;
    }
    w.into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))
        .map_err(|e| Error::io("features.csv", e))
}

fn csv_to_io(e: csv::Error) -> Error {
    Error::io("features.csv", std::io::Error::other(e.to_string()))
}

pub fn write_features(path: &Path, matrix: &FeatureMatrix) -> Result<()> {
    write_file(path, &features_to_csv(matrix)?)
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    if !path.exists() {
        return Err(Error::MissingPrerequisite { path: path.to_path_buf(), stage: "extract" });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    if headers.len() < 3 || &headers[0] != "topology_id" || &headers[1] != "generator" {
        return Err(Error::parse(path, 1, "expected header topology_id,generator,<features...>"));
    }
    let names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let catalogue = FeatureCatalogue::from_names(&names)
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .skip(2)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::parse(path, line, format!("bad feature value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            topology_id: record[0].to_string(),
            label: record[1].to_string(),
            features: FeatureVector::new(values),
        });
    }
    FeatureMatrix::new(catalogue, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    /// Seconds since the Unix epoch; the only non-deterministic field.
    pub generated_unix: u64,
}

impl Metadata {
    pub fn now() -> Self {
        Metadata {
            generated_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

/// Common envelope of every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile<T> {
    pub tool_version: String,
    pub catalogue_version: String,
    pub config: ExperimentConfig,
    pub metadata: Metadata,
    pub report: T,
}

impl<T> ReportFile<T> {
    pub fn new(config: ExperimentConfig, report: T) -> Self {
        ReportFile {
            tool_version: crate::TOOL_VERSION.to_string(),
            catalogue_version: CATALOGUE_VERSION.to_string(),
            config,
            metadata: Metadata::now(),
            report,
        }
    }
}
