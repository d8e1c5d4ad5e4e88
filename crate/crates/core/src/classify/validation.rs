use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::naive_bayes::{train_naive_bayes, NbKind};
use super::GroundTruth;
use crate::error::{Error, Result};

/// Fold index per row. Rows are shuffled by `seed`, then dealt class by class
/// in round-robin with a counter that carries across classes, so both per-class
/// and total fold sizes differ by at most one.
pub fn stratified_folds(gt: &GroundTruth, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    for (c, &size) in gt.class_sizes().iter().enumerate() {
        if size < k {
            return Err(Error::InsufficientRows {
                label: gt.labels[c].clone(),
                got: size,
                needed: k,
            });
        }
    }
    let mut order: Vec<usize> = (0..gt.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; gt.len()];
    let mut dealt = 0;
    for class in 0..gt.labels.len() {
        for &i in order.iter().filter(|&&i| gt.targets[i] == class) {
            folds[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub kind: NbKind,
    pub k: usize,
    pub seed: u64,
    pub labels: Vec<String>,
    pub fold_sizes: Vec<usize>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// `confusion[true][predicted]`, summed over folds.
    pub confusion: Vec<Vec<u64>>,
}

/// Accuracy on one fold after training on all the others.
pub(crate) fn fold_accuracy(
    gt: &GroundTruth,
    folds: &[usize],
    fold: usize,
    kind: NbKind,
    active: &[usize],
    confusion: Option<&mut Vec<Vec<u64>>>,
) -> Result<(f64, usize)> {
    let train: Vec<usize> = (0..gt.len()).filter(|&i| folds[i] != fold).collect();
    let test: Vec<usize> = (0..gt.len()).filter(|&i| folds[i] == fold).collect();
    let model = train_naive_bayes(kind, gt, &train, active)?;
    let mut correct = 0;
    let mut confusion = confusion;
    for &i in &test {
        let predicted = model.predict_index(&gt.rows[i])?;
        if predicted == gt.targets[i] {
            correct += 1;
        }
        if let Some(m) = confusion.as_deref_mut() {
            m[gt.targets[i]][predicted] += 1;
        }
    }
    Ok((correct as f64 / test.len() as f64, test.len()))
}

/// Cross-validated report for a fixed fold plan and feature subset.
pub(crate) fn cross_validate_with(
    gt: &GroundTruth,
    folds: &[usize],
    k: usize,
    seed: u64,
    kind: NbKind,
    active: &[usize],
) -> Result<ClassificationReport> {
    let n_classes = gt.labels.len();
    let per_fold = (0..k)
        .into_par_iter()
        .map(|l| {
            let mut confusion = vec![vec![0u64; n_classes]; n_classes];
            let (acc, size) = fold_accuracy(gt, folds, l, kind, active, Some(&mut confusion))?;
            Ok((acc, size, confusion))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    for (_, _, m) in &per_fold {
        for (row, add) in confusion.iter_mut().zip(m) {
            for (c, a) in row.iter_mut().zip(add) {
                *c += a;
            }
        }
    }
    let fold_accuracies: Vec<f64> = per_fold.iter().map(|p| p.0).collect();
    Ok(ClassificationReport {
        kind,
        k,
        seed,
        labels: gt.labels.clone(),
        fold_sizes: per_fold.iter().map(|p| p.1).collect(),
        mean_accuracy: fold_accuracies.iter().sum::<f64>() / k as f64,
        fold_accuracies,
        confusion,
    })
}

/// Stratified k-fold accuracy of a Naive Bayes model using every feature.
pub fn kfold_cross_validate(gt: &GroundTruth, k: usize, kind: NbKind, seed: u64) -> Result<ClassificationReport> {
    let folds = stratified_folds(gt, k, seed)?;
    let active: Vec<usize> = (0..gt.feature_count()).collect();
    cross_validate_with(gt, &folds, k, seed, kind, &active)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBreakdown {
    pub label: String,
    pub total: u64,
    pub correct: u64,
    pub misclassified: u64,
    /// Fraction of this class predicted as something else.
    pub error_rate: f64,
    /// This class's share of all misclassifications.
    pub share_of_errors: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionAnalysis {
    pub pair: Option<(String, String)>,
    pub report: ClassificationReport,
    pub per_class: Vec<ClassBreakdown>,
}

/// Cross-validates either the full ground truth or, given a pair of labels,
/// only the rows of those two generators, and breaks errors down per class.
pub fn confusion_and_pairwise(
    gt: &GroundTruth,
    k: usize,
    kind: NbKind,
    seed: u64,
    pair: Option<(&str, &str)>,
) -> Result<ConfusionAnalysis> {
    let restricted;
    let data = match pair {
        Some((a, b)) => {
            if a == b {
                return Err(Error::InvalidParameter(format!("pair needs two different labels, got {a} twice")));
            }
            restricted = gt.restrict(&[a, b])?;
            &restricted
        }
        None => gt,
    };
    let report = kfold_cross_validate(data, k, kind, seed)?;
    let total_errors: u64 = report
        .confusion
        .iter()
        .enumerate()
        .map(|(t, row)| row.iter().sum::<u64>() - row[t])
        .sum();
    let per_class = report
        .confusion
        .iter()
        .enumerate()
        .map(|(t, row)| {
            let total: u64 = row.iter().sum();
            let correct = row[t];
            let misclassified = total - correct;
            ClassBreakdown {
                label: report.labels[t].clone(),
                total,
                correct,
                misclassified,
                error_rate: if total > 0 { misclassified as f64 / total as f64 } else { 0.0 },
                share_of_errors: if total_errors > 0 {
                    misclassified as f64 / total_errors as f64
                } else {
                    0.0
                },
            }
        })
        .collect();
    Ok(ConfusionAnalysis {
        pair: pair.map(|(a, b)| (a.to_string(), b.to_string())),
        report,
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn separable(per_class: usize) -> GroundTruth {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..per_class {
            let jitter = (i as f64 * 0.37).sin();
            rows.push(vec![jitter, 1.0 + jitter]);
            labels.push("low".to_string());
            rows.push(vec![100.0 + jitter, -1.0 + jitter]);
            labels.push("high".to_string());
        }
        GroundTruth::from_parts(vec!["a".into(), "b".into()], rows, labels).unwrap()
    }

    #[test]
    fn perfect_separation() {
        let r = kfold_cross_validate(&separable(12), 3, NbKind::Gaussian, 5).unwrap();
        assert_eq!(r.mean_accuracy, 1.0);
        assert_eq!(r.fold_accuracies.len(), 3);
        assert_eq!(r.confusion, vec![vec![12, 0], vec![0, 12]]);
    }

    #[test]
    fn too_few_rows_per_class() {
        assert!(matches!(
            kfold_cross_validate(&separable(4), 5, NbKind::Gaussian, 1),
            Err(Error::InsufficientRows { .. })
        ));
        assert!(kfold_cross_validate(&separable(4), 1, NbKind::Gaussian, 1).is_err());
    }

    #[test]
    fn pairwise_and_breakdown() {
        let mut gt = separable(10);
        // add a third class identical to "low"
        let extra: Vec<Vec<f64>> = gt.rows.iter().zip(&gt.targets).filter(|(_, &t)| gt.labels[t] == "low").map(|(r, _)| r.clone()).collect();
        let mut labels: Vec<String> = gt.targets.iter().map(|&t| gt.labels[t].clone()).collect();
        for r in extra {
            gt.rows.push(r);
            labels.push("twin".into());
        }
        let gt = GroundTruth::from_parts(gt.feature_names.clone(), gt.rows.clone(), labels).unwrap();
        let a = confusion_and_pairwise(&gt, 5, NbKind::Gaussian, 3, Some(("high", "low"))).unwrap();
        assert_eq!(a.report.mean_accuracy, 1.0);
        assert_eq!(a.report.labels, vec!["high", "low"]);
        let full = confusion_and_pairwise(&gt, 5, NbKind::Gaussian, 3, None).unwrap();
        assert_eq!(full.per_class.len(), 3);
        assert_eq!(full.per_class[0].misclassified, 0);
        let shares: f64 = full.per_class.iter().map(|c| c.share_of_errors).sum();
        assert!((shares - 1.0).abs() < 1e-12);
        assert!(confusion_and_pairwise(&gt, 5, NbKind::Gaussian, 3, Some(("high", "nope"))).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(
            sizes in prop::collection::vec(5usize..40, 2..5),
            k in 2usize..6,
            seed in any::<u64>(),
        ) {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (c, &n) in sizes.iter().enumerate() {
                for i in 0..n {
                    rows.push(vec![i as f64]);
                    labels.push(format!("c{c}"));
                }
            }
            let gt = GroundTruth::from_parts(vec!["f".into()], rows, labels).unwrap();
            let folds = stratified_folds(&gt, k, seed).unwrap();
            prop_assert_eq!(folds.len(), gt.len());
            let mut total = vec![0usize; k];
            for &f in &folds {
                prop_assert!(f < k);
                total[f] += 1;
            }
            prop_assert!(total.iter().max().unwrap() - total.iter().min().unwrap() <= 1);
            for class in 0..gt.labels.len() {
                let mut per = vec![0usize; k];
                for (i, &f) in folds.iter().enumerate() {
                    if gt.targets[i] == class {
                        per[f] += 1;
                    }
                }
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
        }

        #[test]
        fn mean_is_average_of_folds(seed in any::<u64>()) {
            let gt = separable(15).with_shuffled_labels(seed);
            let r = kfold_cross_validate(&gt, 5, NbKind::Gaussian, seed).unwrap();
            let avg = r.fold_accuracies.iter().sum::<f64>() / 5.0;
            prop_assert!((r.mean_accuracy - avg).abs() < 1e-12);
            let scored: u64 = r.confusion.iter().flatten().sum();
            prop_assert_eq!(scored as usize, gt.len());
            prop_assert_eq!(r.fold_sizes.iter().sum::<usize>(), gt.len());
        }
    }
}
