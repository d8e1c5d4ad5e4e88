//! How well can a classifier tell which generator produced a topology?
//!
//! Ground truth pairs each feature vector with its generator label. Accuracy
//! is estimated by stratified k-fold cross-validation of Naive Bayes models,
//! and forward sequential selection finds the features that carry the signal.

pub mod naive_bayes;
pub mod selection;
pub mod validation;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub use naive_bayes::{train_naive_bayes, NaiveBayesModel, NbKind};
pub use selection::{forward_sequential_selection, Evaluation, FssStep, FssTrace, StopReason};
pub use validation::{
    confusion_and_pairwise, kfold_cross_validate, stratified_folds, ClassBreakdown,
    ClassificationReport, ConfusionAnalysis,
};

/// Labelled feature vectors. `labels` is sorted; `targets[i]` indexes it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
    pub labels: Vec<String>,
}

impl GroundTruth {
    pub fn from_parts(feature_names: Vec<String>, rows: Vec<Vec<f64>>, row_labels: Vec<String>) -> Result<Self> {
        if rows.len() != row_labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rows but {} labels",
                rows.len(),
                row_labels.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != feature_names.len()) {
            return Err(Error::CatalogueMismatch(format!(
                "row has {} values, expected {}",
                r.len(),
                feature_names.len()
            )));
        }
        let index: BTreeMap<&str, usize> = row_labels
            .iter()
            .map(String::as_str)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        let labels = index.keys().map(|l| l.to_string()).collect();
        let targets = row_labels.iter().map(|l| index[l.as_str()]).collect();
        Ok(GroundTruth {
            feature_names,
            rows,
            targets,
            labels,
        })
    }

    pub fn from_matrix(matrix: &FeatureMatrix) -> Result<Self> {
        GroundTruth::from_parts(
            matrix.catalogue.names(),
            matrix.rows.iter().map(|r| r.features.values.clone()).collect(),
            matrix.rows.iter().map(|r| r.label.clone()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.labels.len()];
        for &t in &self.targets {
            sizes[t] += 1;
        }
        sizes
    }

    /// Keeps only rows whose label is one of `keep`.
    pub fn restrict(&self, keep: &[&str]) -> Result<Self> {
        for l in keep {
            if !self.labels.iter().any(|x| x == l) {
                return Err(Error::UnknownLabel(l.to_string()));
            }
        }
        let (rows, labels): (Vec<_>, Vec<_>) = self
            .rows
            .iter()
            .zip(&self.targets)
            .filter(|(_, &t)| keep.contains(&self.labels[t].as_str()))
            .map(|(r, &t)| (r.clone(), self.labels[t].clone()))
            .unzip();
        GroundTruth::from_parts(self.feature_names.clone(), rows, labels)
    }

    /// Same rows with labels randomly permuted; breaks any feature/label link.
    pub fn with_shuffled_labels(&self, seed: u64) -> Self {
        let mut targets = self.targets.clone();
        targets.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        GroundTruth {
            targets,
            ..self.clone()
        }
    }
}
