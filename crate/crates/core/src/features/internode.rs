use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::topology::{euclidean_distance, Topology};

pub const INTERNODE_STATS: [&str; 7] = ["min", "max", "range", "mode", "mode_count", "mean", "std"];

/// Largest histogram we are willing to allocate densely before falling back to a map.
const DENSE_HISTOGRAM_LIMIT: usize = 1 << 22;

fn for_each_distance(t: &Topology, mut f: impl FnMut(f64)) {
    for (a, &pa) in t.nodes.iter().enumerate() {
        for &pb in &t.nodes[a + 1..] {
            f(euclidean_distance(pa, pb));
        }
    }
}

/// Min, max, range, quantized mode, mode count, mean and sample standard
/// deviation of all pairwise distances.
///
/// Only the mode and its count use distances rounded to the nearest multiple
/// of `quantization_step`; ties go to the smallest value.
pub fn internode_distance_features(t: &Topology, quantization_step: f64) -> Result<[f64; 7]> {
    let n = t.len();
    if n < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: n });
    }
    if !(quantization_step.is_finite() && quantization_step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quantization step must be positive, got {quantization_step}"
        )));
    }
    let pairs = n * (n - 1) / 2;
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for_each_distance(t, |d| {
        min = min.min(d);
        max = max.max(d);
        sum += d;
    });
    let mean = sum / pairs as f64;

    let bin = |d: f64| (d / quantization_step).round();
    let top_bin = bin(max);
    let mut sq = 0.0;
    let (mode_bin, mode_count) = if top_bin < DENSE_HISTOGRAM_LIMIT as f64 {
        let mut hist = vec![0u64; top_bin as usize + 1];
        for_each_distance(t, |d| {
            sq += (d - mean) * (d - mean);
            hist[bin(d) as usize] += 1;
        });
        // first maximum = smallest value among ties
        let (k, &c) = hist
            .iter()
            .enumerate()
            .fold((0, &0), |best, cur| if cur.1 > best.1 { cur } else { best });
        (k as f64, c)
    } else {
        let mut hist: HashMap<i64, u64> = HashMap::new();
        for_each_distance(t, |d| {
            sq += (d - mean) * (d - mean);
            *hist.entry(bin(d) as i64).or_default() += 1;
        });
        let (k, c) = hist
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("at least one pair");
        (k as f64, c)
    };
    let std = if pairs > 1 {
        (sq / (pairs - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok([
        min,
        max,
        max - min,
        mode_bin * quantization_step,
        mode_count as f64,
        mean,
        std,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Point;

    fn topo(points: &[(f64, f64)]) -> Topology {
        Topology::new(
            "t",
            "g",
            1000.0,
            points.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            None,
        )
    }

    #[test]
    fn triangle_example() {
        let f = internode_distance_features(&topo(&[(0.0, 0.0), (3.0, 4.0), (0.0, 8.0)]), 1.0).unwrap();
        assert_eq!(&f[..6], &[5.0, 8.0, 3.0, 5.0, 2.0, 6.0]);
        assert!((f[6] - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_pair() {
        let f = internode_distance_features(&topo(&[(0.0, 0.0), (1.0, 0.0)]), 1.0).unwrap();
        assert_eq!(f, [1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn translation_invariant() {
        let a = topo(&[(0.0, 0.0), (3.0, 4.0), (0.0, 8.0), (17.5, 2.25)]);
        let b = topo(&[(10.0, 10.0), (13.0, 14.0), (10.0, 18.0), (27.5, 12.25)]);
        let fa = internode_distance_features(&a, 1.0).unwrap();
        let fb = internode_distance_features(&b, 1.0).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn mode_ties_pick_smallest() {
        // distances {1, 2, 3}, each once
        let f = internode_distance_features(&topo(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)]), 1.0).unwrap();
        assert_eq!(f[3], 1.0);
        assert_eq!(f[4], 1.0);
        // step 4: 1 -> 0, 2 -> 4 (half rounds up), 3 -> 4
        let f = internode_distance_features(&topo(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)]), 4.0).unwrap();
        assert_eq!(f[3], 4.0);
        assert_eq!(f[4], 2.0);
        // {0,1,2,4} on a line: distances 1,2,4,1,3,2 -> bins 1 and 2 tie at two each
        let f = internode_distance_features(
            &topo(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (4.0, 0.0)]),
            1.0,
        )
        .unwrap();
        assert_eq!(f[3], 1.0);
        assert_eq!(f[4], 2.0);
    }

    #[test]
    fn errors() {
        assert!(internode_distance_features(&topo(&[(0.0, 0.0)]), 1.0).is_err());
        assert!(internode_distance_features(&topo(&[(0.0, 0.0), (1.0, 1.0)]), 0.0).is_err());
    }
}
