//! Planar topologies and the geometric primitives every other module uses.
//!
//! A topology is an ordered set of points inside a `D x D` square. Node
//! identity is the position in that order. Two nodes are neighbours at
//! radius `r` when their distance is strictly below `r`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Straight-line distance between two points.
pub fn euclidean_distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// One generated or imported node placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub id: String,
    pub generator_label: String,
    pub area_side: f64,
    pub nodes: Vec<Point>,
    /// `None` for imported topologies.
    pub seed: Option<u64>,
}

impl Topology {
    pub fn new(
        id: impl Into<String>,
        generator_label: impl Into<String>,
        area_side: f64,
        nodes: Vec<Point>,
        seed: Option<u64>,
    ) -> Self {
        Topology {
            id: id.into(),
            generator_label: generator_label.into(),
            area_side,
            nodes,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.nodes.len() {
            return Err(Error::NodeIndex {
                index,
                len: self.nodes.len(),
            });
        }
        Ok(())
    }

    /// All `N(N-1)/2` pairwise distances, in `(a, b)` lexicographic order with `a < b`.
    pub fn pairwise_distances(&self) -> Result<Vec<f64>> {
        let n = self.nodes.len();
        if n < 2 {
            return Err(Error::TooFewNodes { needed: 2, got: n });
        }
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for (a, &pa) in self.nodes.iter().enumerate() {
            for &pb in &self.nodes[a + 1..] {
                out.push(euclidean_distance(pa, pb));
            }
        }
        Ok(out)
    }

    /// Indices of the nodes strictly closer than `r` to node `a`, excluding `a`.
    pub fn neighbours(&self, a: usize, r: f64) -> Result<BTreeSet<usize>> {
        self.check_index(a)?;
        if r.is_nan() || r <= 0.0 {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        let pa = self.nodes[a];
        Ok(self
            .nodes
            .iter()
            .enumerate()
            .filter(|&(b, &pb)| b != a && euclidean_distance(pa, pb) < r)
            .map(|(b, _)| b)
            .collect())
    }

    pub fn validate(&self) -> ValidationReport {
        validate_topology(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self, id: &str) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidTopology {
                id: id.to_string(),
                violations: self.violations,
            })
        }
    }
}

/// Collects every violated topology invariant instead of stopping at the first.
pub fn validate_topology(t: &Topology) -> ValidationReport {
    let mut violations = Vec::new();
    if !(t.area_side.is_finite() && t.area_side > 0.0) {
        violations.push(format!("area side must be positive and finite, got {}", t.area_side));
    }
    if t.nodes.is_empty() {
        violations.push("no nodes".to_string());
    }
    for (i, p) in t.nodes.iter().enumerate() {
        if !p.is_finite() {
            violations.push(format!("node {i}: non-finite coordinate ({}, {})", p.x, p.y));
        } else if p.x < 0.0 || p.y < 0.0 || p.x > t.area_side || p.y > t.area_side {
            violations.push(format!(
                "node {i}: coordinate out of bounds ({}, {}) for D={}",
                p.x, p.y, t.area_side
            ));
        }
    }
    ValidationReport { violations }
}

/// Transmission radii, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RadiiConfig {
    radii: Vec<f64>,
}

impl RadiiConfig {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidParameter("at least one radius is required".into()));
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "radii must be strictly increasing, got {radii:?}"
            )));
        }
        Ok(RadiiConfig { radii })
    }

    /// The eight radii used in the reference experiments.
    pub fn reference() -> Self {
        RadiiConfig {
            radii: vec![5.0, 10.0, 20.0, 30.0, 40.0, 60.0, 80.0, 100.0],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn max(&self) -> f64 {
        *self.radii.last().expect("radii non-empty")
    }
}

impl TryFrom<Vec<f64>> for RadiiConfig {
    type Error = Error;

    fn try_from(radii: Vec<f64>) -> Result<Self> {
        RadiiConfig::new(radii)
    }
}

impl From<RadiiConfig> for Vec<f64> {
    fn from(r: RadiiConfig) -> Self {
        r.radii
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub area_side: f64,
    pub nodes_per_topology: usize,
    pub topologies_per_generator: usize,
    pub radii: RadiiConfig,
    pub quadrat_divisions: usize,
    pub folds: usize,
    pub seed: u64,
    /// Bin width used when taking the mode of pairwise distances.
    pub distance_quantization: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            area_side: 1000.0,
            nodes_per_topology: 1000,
            topologies_per_generator: 1000,
            radii: RadiiConfig::reference(),
            quadrat_divisions: 10,
            folds: 10,
            seed: 42,
            distance_quantization: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.area_side.is_finite() && self.area_side > 0.0) {
            return bad(format!("area side must be positive, got {}", self.area_side));
        }
        if self.nodes_per_topology == 0 {
            return bad("nodes per topology must be at least 1".into());
        }
        if self.topologies_per_generator == 0 {
            return bad("topologies per generator must be at least 1".into());
        }
        if self.quadrat_divisions == 0 {
            return bad("quadrat divisions must be at least 1".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.distance_quantization.is_finite() && self.distance_quantization > 0.0) {
            return bad(format!(
                "distance quantization must be positive, got {}",
                self.distance_quantization
            ));
        }
        if self.radii.max() >= self.area_side {
            return bad(format!(
                "every radius must be below the area side {}, got {}",
                self.area_side,
                self.radii.max()
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> Topology {
        Topology::new(
            "t",
            "g",
            1000.0,
            vec![Point::new(0.0, 0.0), Point::new(3.0, 4.0), Point::new(0.0, 8.0)],
            None,
        )
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(Point::new(0.0, 0.0), Point::new(3.0, 4.0)), 5.0);
        assert_eq!(euclidean_distance(Point::new(7.0, 7.0), Point::new(7.0, 7.0)), 0.0);
        let d = euclidean_distance(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        assert!((d - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(triangle().pairwise_distances().unwrap(), vec![5.0, 8.0, 5.0]);
        let two = Topology::new("t", "g", 10.0, vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], None);
        assert_eq!(two.pairwise_distances().unwrap(), vec![1.0]);
        let four = Topology::new("t", "g", 10.0, vec![Point::new(1.0, 1.0); 4], None);
        assert_eq!(four.pairwise_distances().unwrap().len(), 6);
        let one = Topology::new("t", "g", 10.0, vec![Point::new(1.0, 1.0)], None);
        assert!(matches!(one.pairwise_distances(), Err(Error::TooFewNodes { .. })));
    }

    #[test]
    fn neighbour_examples() {
        let t = triangle();
        assert_eq!(t.neighbours(1, 6.0).unwrap(), BTreeSet::from([0, 2]));
        assert!(t.neighbours(0, 5.0).unwrap().is_empty());
        assert_eq!(t.neighbours(0, 8.1).unwrap(), BTreeSet::from([1, 2]));
        assert!(matches!(t.neighbours(3, 1.0), Err(Error::NodeIndex { index: 3, len: 3 })));
    }

    #[test]
    fn coincident_nodes_are_neighbours() {
        let t = Topology::new("t", "g", 10.0, vec![Point::new(2.0, 2.0); 2], None);
        assert_eq!(t.neighbours(0, 1e-9).unwrap(), BTreeSet::from([1]));
    }

    #[test]
    fn validation() {
        assert!(triangle().validate().is_ok());
        let mut t = triangle();
        t.nodes.push(Point::new(-1.0, 5.0));
        let v = t.validate();
        assert_eq!(v.violations.len(), 1);
        assert!(v.violations[0].contains("coordinate out of bounds"));
        t.nodes.clear();
        assert_eq!(t.validate().violations, vec!["no nodes".to_string()]);
        t.nodes.push(Point::new(f64::NAN, 1.0));
        assert!(t.validate().violations[0].contains("non-finite"));
    }

    #[test]
    fn radii_must_increase() {
        assert!(RadiiConfig::new(vec![5.0, 5.0]).is_err());
        assert!(RadiiConfig::new(vec![]).is_err());
        assert!(RadiiConfig::new(vec![0.0, 1.0]).is_err());
        assert_eq!(RadiiConfig::reference().len(), 8);
        let cfg = ExperimentConfig {
            radii: RadiiConfig::new(vec![1000.0]).unwrap(),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    fn point() -> impl Strategy<Value = Point> {
        (0.0..1000.0f64, 0.0..1000.0f64).prop_map(|(x, y)| Point::new(x, y))
    }

    proptest! {
        #[test]
        fn distance_symmetric(a in point(), b in point()) {
            prop_assert_eq!(euclidean_distance(a, b), euclidean_distance(b, a));
            prop_assert!(euclidean_distance(a, b) >= 0.0);
        }

        #[test]
        fn triangle_inequality(a in point(), b in point(), c in point()) {
            let ab = euclidean_distance(a, b);
            let bc = euclidean_distance(b, c);
            let ac = euclidean_distance(a, c);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn neighbours_symmetric_and_monotone(
            pts in prop::collection::vec(point(), 2..20),
            r1 in 1.0..300.0f64,
            extra in 0.0..300.0f64,
        ) {
            let t = Topology::new("t", "g", 1000.0, pts, None);
            let r2 = r1 + extra;
            for a in 0..t.len() {
                let small = t.neighbours(a, r1).unwrap();
                let large = t.neighbours(a, r2).unwrap();
                prop_assert!(small.is_subset(&large));
                for &b in &small {
                    prop_assert!(t.neighbours(b, r1).unwrap().contains(&a));
                }
            }
        }
    }
}
