//! Gaussian, Bernoulli and multinomial Naive Bayes over feature vectors.
//!
//! All likelihoods are accumulated in log space. Any data-dependent transform
//! (Bernoulli thresholds, multinomial bin ranges) is fitted on the training
//! rows only and stored in the model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::error::{Error, Result};

/// Relative variance floor added to every Gaussian variance.
pub const VAR_SMOOTHING: f64 = 1e-9;
/// Integer levels used by the multinomial quantizer.
pub const MULTINOMIAL_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NbKind {
    Gaussian,
    Bernoulli,
    Multinomial,
}

impl NbKind {
    pub const ALL: [NbKind; 3] = [NbKind::Gaussian, NbKind::Bernoulli, NbKind::Multinomial];

    pub fn as_str(self) -> &'static str {
        match self {
            NbKind::Gaussian => "gaussian",
            NbKind::Bernoulli => "bernoulli",
            NbKind::Multinomial => "multinomial",
        }
    }
}

impl fmt::Display for NbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NbKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NbKind::Gaussian),
            "bernoulli" => Ok(NbKind::Bernoulli),
            "multinomial" => Ok(NbKind::Multinomial),
            other => Err(Error::InvalidParameter(format!("unknown classifier kind {other:?}"))),
        }
    }
}

/// Per-class parameters; every inner vector is indexed like `active`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NbParams {
    Gaussian {
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
    Bernoulli {
        /// A value strictly above the threshold is "on".
        thresholds: Vec<f64>,
        on_probability: Vec<Vec<f64>>,
    },
    Multinomial {
        mins: Vec<f64>,
        maxs: Vec<f64>,
        bins: usize,
        log_theta: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub kind: NbKind,
    pub labels: Vec<String>,
    pub priors: Vec<f64>,
    pub active: Vec<usize>,
    pub feature_count: usize,
    pub params: NbParams,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn population_variance(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

fn quantize(x: f64, min: f64, max: f64, bins: usize) -> f64 {
    if max <= min {
        return 0.0;
    }
    let level = ((x - min) / (max - min) * bins as f64).floor();
    level.clamp(0.0, (bins - 1) as f64)
}

/// Fits a model on the rows `train` of `gt`, looking only at `active` features.
pub fn train_naive_bayes(
    kind: NbKind,
    gt: &GroundTruth,
    train: &[usize],
    active: &[usize],
) -> Result<NaiveBayesModel> {
    if active.is_empty() {
        return Err(Error::InvalidParameter("active feature set is empty".into()));
    }
    if let Some(&f) = active.iter().find(|&&f| f >= gt.feature_count()) {
        return Err(Error::InvalidParameter(format!("feature index {f} out of range")));
    }
    let n_classes = gt.labels.len();
    if n_classes < 2 {
        return Err(Error::InvalidParameter("at least two classes are required".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for &i in train {
        by_class[gt.targets[i]].push(i);
    }
    for (c, rows) in by_class.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::InsufficientRows {
                label: gt.labels[c].clone(),
                got: rows.len(),
                needed: 2,
            });
        }
    }
    let total = train.len() as f64;
    let priors: Vec<f64> = by_class.iter().map(|r| r.len() as f64 / total).collect();
    let value = |i: usize, f: usize| gt.rows[i][f];

    let params = match kind {
        NbKind::Gaussian => {
            let max_var = active
                .iter()
                .map(|&f| population_variance(train.iter().map(|&i| value(i, f))).1)
                .fold(0.0, f64::max);
            let epsilon = if max_var > 0.0 {
                VAR_SMOOTHING * max_var
            } else {
                VAR_SMOOTHING
            };
            let mut means = Vec::with_capacity(n_classes);
            let mut variances = Vec::with_capacity(n_classes);
            for rows in &by_class {
                let (m, v): (Vec<f64>, Vec<f64>) = active
                    .iter()
                    .map(|&f| {
                        let (m, v) = population_variance(rows.iter().map(|&i| value(i, f)));
                        (m, v + epsilon)
                    })
                    .unzip();
                means.push(m);
                variances.push(v);
            }
            NbParams::Gaussian { means, variances }
        }
        NbKind::Bernoulli => {
            let thresholds: Vec<f64> = active
                .iter()
                .map(|&f| median(&mut train.iter().map(|&i| value(i, f)).collect::<Vec<_>>()))
                .collect();
            let on_probability = by_class
                .iter()
                .map(|rows| {
                    active
                        .iter()
                        .zip(&thresholds)
                        .map(|(&f, &t)| {
                            let on = rows.iter().filter(|&&i| value(i, f) > t).count();
                            (on as f64 + 1.0) / (rows.len() as f64 + 2.0)
                        })
                        .collect()
                })
                .collect();
            NbParams::Bernoulli { thresholds, on_probability }
        }
        NbKind::Multinomial => {
            let bins = MULTINOMIAL_BINS;
            let (mins, maxs): (Vec<f64>, Vec<f64>) = active
                .iter()
                .map(|&f| {
                    train.iter().map(|&i| value(i, f)).fold(
                        (f64::INFINITY, f64::NEG_INFINITY),
                        |(lo, hi), v| (lo.min(v), hi.max(v)),
                    )
                })
                .unzip();
            let log_theta = by_class
                .iter()
                .map(|rows| {
                    let counts: Vec<f64> = active
                        .iter()
                        .enumerate()
                        .map(|(j, &f)| {
                            rows.iter()
                                .map(|&i| quantize(value(i, f), mins[j], maxs[j], bins))
                                .sum::<f64>()
                        })
                        .collect();
                    let denom = counts.iter().sum::<f64>() + active.len() as f64;
                    counts.iter().map(|c| ((c + 1.0) / denom).ln()).collect()
                })
                .collect();
            NbParams::Multinomial { mins, maxs, bins, log_theta }
        }
    };

    Ok(NaiveBayesModel {
        kind,
        labels: gt.labels.clone(),
        priors,
        active: active.to_vec(),
        feature_count: gt.feature_count(),
        params,
    })
}

impl NaiveBayesModel {
    /// Joint log score `log P(class) + sum log P(x_f | class)` for each class.
    pub fn log_scores(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.feature_count {
            return Err(Error::CatalogueMismatch(format!(
                "model expects {} features, got {}",
                self.feature_count,
                values.len()
            )));
        }
        let x = |j: usize| values[self.active[j]];
        let scores = (0..self.labels.len())
            .map(|c| {
                let likelihood: f64 = match &self.params {
                    NbParams::Gaussian { means, variances } => (0..self.active.len())
                        .map(|j| {
                            let (m, v) = (means[c][j], variances[c][j]);
                            -0.5 * (std::f64::consts::TAU * v).ln() - (x(j) - m).powi(2) / (2.0 * v)
                        })
                        .sum(),
                    NbParams::Bernoulli { thresholds, on_probability } => (0..self.active.len())
                        .map(|j| {
                            let p = on_probability[c][j];
                            if x(j) > thresholds[j] {
                                p.ln()
                            } else {
                                (1.0 - p).ln()
                            }
                        })
                        .sum(),
                    NbParams::Multinomial { mins, maxs, bins, log_theta } => (0..self.active.len())
                        .map(|j| quantize(x(j), mins[j], maxs[j], *bins) * log_theta[c][j])
                        .sum(),
                };
                self.priors[c].ln() + likelihood
            })
            .collect();
        Ok(scores)
    }

    /// Index of the best-scoring class; ties go to the lexicographically smaller label.
    pub fn predict_index(&self, values: &[f64]) -> Result<usize> {
        let scores = self.log_scores(values)?;
        let mut best = 0;
        for c in 1..scores.len() {
            let better = scores[c] > scores[best]
                || (scores[c] == scores[best] && self.labels[c] < self.labels[best]);
            if better {
                best = c;
            }
        }
        Ok(best)
    }

    pub fn predict(&self, values: &[f64]) -> Result<(String, Vec<f64>)> {
        let scores = self.log_scores(values)?;
        let best = self.predict_index(values)?;
        Ok((self.labels[best].clone(), scores))
    }
}
