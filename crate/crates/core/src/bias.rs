//! Hedges' g effect sizes and the combined bias index.
//!
//! For each feature, the mean of a generator subset is compared with the mean
//! of the full corpus in units of their pooled standard deviation. The bias
//! index is the Euclidean norm of those per-feature effect sizes: lower means
//! the subset looks more like the whole corpus.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureCatalogue, FeatureMatrix};

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

pub fn mean(values: &[f64]) -> f64 {
    if is_constant(values) {
        return values.first().copied().unwrap_or(f64::NAN);
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance (n - 1 divisor); exactly zero for constant input.
pub fn sample_variance(values: &[f64]) -> f64 {
    if is_constant(values) {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

fn check_sizes(sub: &[f64], all: &[f64]) -> Result<()> {
    for p in [sub, all] {
        if p.len() < 2 {
            return Err(Error::PopulationTooSmall { needed: 2, got: p.len() });
        }
    }
    Ok(())
}

/// Pooled standard deviation of a subset and the full population.
pub fn pooled_std(sub: &[f64], all: &[f64]) -> Result<f64> {
    check_sizes(sub, all)?;
    let (n_all, n_sub) = (all.len() as f64, sub.len() as f64);
    let pooled = ((n_all - 1.0) * sample_variance(all) + (n_sub - 1.0) * sample_variance(sub))
        / (n_all + n_sub - 2.0);
    Ok(pooled.sqrt())
}

/// `(mean(all) - mean(sub)) / pooled_std(sub, all)`, without small-sample correction.
///
/// Zero pooled deviation with equal means yields 0; with different means it is
/// a [`Error::DegenerateFeature`].
pub fn hedges_g(sub: &[f64], all: &[f64]) -> Result<f64> {
    let s = pooled_std(sub, all)?;
    let diff = mean(all) - mean(sub);
    if s == 0.0 {
        if diff == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::DegenerateFeature {
            feature: String::from("<unnamed>"),
        });
    }
    Ok(diff / s)
}

/// Euclidean norm of per-feature effect sizes.
pub fn combine(per_feature_g: &[f64]) -> f64 {
    per_feature_g.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Feature rows belonging to a set of generator labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub labels: BTreeSet<String>,
    pub catalogue: FeatureCatalogue,
    pub rows: Vec<Vec<f64>>,
}

impl Population {
    pub fn new(labels: BTreeSet<String>, catalogue: FeatureCatalogue, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::PopulationTooSmall { needed: 1, got: 0 });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != catalogue.len()) {
            return Err(Error::CatalogueMismatch(format!(
                "row has {} values, catalogue has {}",
                r.len(),
                catalogue.len()
            )));
        }
        Ok(Population { labels, catalogue, rows })
    }

    /// Rows of `matrix` whose label is in `labels`.
    pub fn from_matrix(matrix: &FeatureMatrix, labels: &BTreeSet<String>) -> Result<Self> {
        let rows = matrix
            .rows
            .iter()
            .filter(|r| labels.contains(&r.label))
            .map(|r| r.features.values.clone())
            .collect();
        Population::new(labels.clone(), matrix.catalogue.clone(), rows)
    }

    pub fn everything(matrix: &FeatureMatrix) -> Result<Self> {
        let labels = matrix.labels().into_iter().collect();
        Population::from_matrix(matrix, &labels)
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEffect {
    pub feature: String,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEntry {
    pub labels: Vec<String>,
    pub per_feature: Vec<FeatureEffect>,
    pub bias_index: f64,
    /// 1-based position in the ascending ranking.
    pub rank: usize,
}

impl BiasEntry {
    pub fn g_values(&self) -> Vec<f64> {
        self.per_feature.iter().map(|e| e.g).collect()
    }
}

/// Per-feature effect sizes and their combined index for `sub` against `all`.
pub fn bias_index(sub: &Population, all: &Population) -> Result<BiasEntry> {
    sub.catalogue.ensure_same(&all.catalogue)?;
    let per_feature = (0..sub.catalogue.len())
        .into_par_iter()
        .map(|k| {
            let name = sub.catalogue.name(k);
            let g = hedges_g(&sub.column(k), &all.column(k)).map_err(|e| match e {
                Error::DegenerateFeature { .. } => Error::DegenerateFeature { feature: name.clone() },
                other => other,
            })?;
            Ok(FeatureEffect { feature: name, g })
        })
        .collect::<Result<Vec<_>>>()?;
    let g: Vec<f64> = per_feature.iter().map(|e| e.g).collect();
    Ok(BiasEntry {
        labels: sub.labels.iter().cloned().collect(),
        per_feature,
        bias_index: combine(&g),
        rank: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub subset_size: usize,
    /// Ascending by bias index, ties broken by label set.
    pub entries: Vec<BiasEntry>,
}

/// All `k`-element subsets of `items`, in lexicographic order.
fn combinations<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, head) in items.iter().enumerate() {
        for mut tail in combinations(&items[i + 1..], k - 1) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// Scores every `p`-generator subset against the whole corpus and ranks them.
pub fn rank_generator_subsets(matrix: &FeatureMatrix, p: usize) -> Result<BiasReport> {
    let labels = matrix.labels();
    if p == 0 || p >= labels.len() {
        return Err(Error::InvalidParameter(format!(
            "subset size must lie in 1..{}, got {p}",
            labels.len()
        )));
    }
    for l in &labels {
        let got = matrix.rows.iter().filter(|r| &r.label == l).count();
        if got < 2 {
            return Err(Error::InsufficientRows { label: l.clone(), got, needed: 2 });
        }
    }
    let all = Population::everything(matrix)?;
    let mut entries = combinations(&labels, p)
        .into_par_iter()
        .map(|subset| {
            let sub = Population::from_matrix(matrix, &subset.into_iter().collect())?;
            bias_index(&sub, &all)
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| {
        a.bias_index
            .total_cmp(&b.bias_index)
            .then_with(|| a.labels.cmp(&b.labels))
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(BiasReport { subset_size: p, entries })
}

/// Reports for every proper subset size `1..N_TG`.
pub fn rank_all_subset_sizes(matrix: &FeatureMatrix) -> Result<Vec<BiasReport>> {
    let n = matrix.labels().len();
    (1..n).map(|p| rank_generator_subsets(matrix, p)).collect()
}
