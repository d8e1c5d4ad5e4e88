//! Forward sequential feature selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::naive_bayes::NbKind;
use super::validation::{cross_validate_with, fold_accuracy, stratified_folds};
use super::GroundTruth;
use crate::error::{Error, Result};

/// How a candidate feature set is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Evaluation {
    /// Mean accuracy over all `k` folds.
    CrossValidated { k: usize, seed: u64 },
    /// Accuracy on fold `fold` of a `k`-fold plan, training on the others.
    SingleFold { k: usize, seed: u64, fold: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoImprovement,
    MaxFeatures,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssStep {
    pub feature: usize,
    pub feature_name: String,
    pub selected: Vec<usize>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssTrace {
    pub kind: NbKind,
    pub evaluation: Evaluation,
    pub steps: Vec<FssStep>,
    pub stop_reason: StopReason,
    /// Number of leading steps that strictly improved accuracy; later steps
    /// only appear in a full trace.
    pub converged_steps: usize,
}

impl FssTrace {
    /// Feature set and accuracy at the stop point.
    pub fn best(&self) -> Option<&FssStep> {
        self.converged_steps.checked_sub(1).map(|i| &self.steps[i])
    }
}

/// Greedy forward selection: each round adds the feature whose inclusion gives
/// the highest accuracy (smallest index on ties), stopping as soon as no
/// addition strictly improves on the previous round. With `full_trace` the
/// rounds continue to `max_features` and are recorded past the stop point.
pub fn forward_sequential_selection(
    gt: &GroundTruth,
    kind: NbKind,
    evaluation: Evaluation,
    max_features: usize,
    full_trace: bool,
) -> Result<FssTrace> {
    if gt.is_empty() {
        return Err(Error::InvalidParameter("ground truth is empty".into()));
    }
    let f = gt.feature_count();
    if max_features == 0 || max_features > f {
        return Err(Error::InvalidParameter(format!(
            "max features must lie in 1..={f}, got {max_features}"
        )));
    }
    let (k, seed) = match evaluation {
        Evaluation::CrossValidated { k, seed } => (k, seed),
        Evaluation::SingleFold { k, seed, fold } => {
            if fold >= k {
                return Err(Error::InvalidParameter(format!("fold {fold} out of range for k={k}")));
            }
            (k, seed)
        }
    };
    let folds = stratified_folds(gt, k, seed)?;
    let score = |active: &[usize]| -> Result<f64> {
        match evaluation {
            Evaluation::CrossValidated { .. } => {
                Ok(cross_validate_with(gt, &folds, k, seed, kind, active)?.mean_accuracy)
            }
            Evaluation::SingleFold { fold, .. } => {
                Ok(fold_accuracy(gt, &folds, fold, kind, active, None)?.0)
            }
        }
    };

    let mut selected: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    let mut best_accuracy = 0.0;
    let mut stopped: Option<(StopReason, usize)> = None;

    while selected.len() < max_features {
        let candidates: Vec<usize> = (0..f).filter(|c| !selected.contains(c)).collect();
        if candidates.is_empty() {
            break;
        }
        let scored = candidates
            .par_iter()
            .map(|&c| {
                let mut active = selected.clone();
                active.push(c);
                Ok((c, score(&active)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let (feature, accuracy) = scored
            .into_iter()
            .fold(None::<(usize, f64)>, |best, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
            .expect("at least one candidate");

        if stopped.is_none() && accuracy <= best_accuracy {
            stopped = Some((StopReason::NoImprovement, steps.len()));
            if !full_trace {
                break;
            }
        }
        if stopped.is_none() {
            best_accuracy = accuracy;
        }
        selected.push(feature);
        steps.push(FssStep {
            feature,
            feature_name: gt.feature_names[feature].clone(),
            selected: selected.clone(),
            accuracy,
        });
    }

    let (stop_reason, converged_steps) = stopped.unwrap_or_else(|| {
        let reason = if selected.len() >= max_features {
            StopReason::MaxFeatures
        } else {
            StopReason::Exhausted
        };
        (reason, steps.len())
    });
    Ok(FssTrace {
        kind,
        evaluation,
        steps,
        stop_reason,
        converged_steps,
    })
}
