//! Topology feature vectors.
//!
//! A vector has `12 + 3 * radii` slots: seven inter-node distance statistics,
//! five quadrat-count statistics, then one block each of average node
//! density, average shared-neighbour count and average clustering
//! coefficient, one slot per radius.

pub mod internode;
pub mod neighbourhood;
pub mod spatial;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{ExperimentConfig, Topology};

pub use internode::internode_distance_features;
pub use neighbourhood::{
    clustering_coefficient, clustering_features, density_features, node_density,
    shared_neighbour_count, shared_neighbour_features,
};
pub use spatial::{quadrat_counts, spatial_distribution_features};

pub const CATALOGUE_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Internode,
    Spatial,
    Density,
    SharedNeighbours,
    Clustering,
}

impl FeatureGroup {
    fn prefix(self) -> &'static str {
        match self {
            FeatureGroup::Internode => "internode",
            FeatureGroup::Spatial => "spatial",
            FeatureGroup::Density => "density",
            FeatureGroup::SharedNeighbours => "shared",
            FeatureGroup::Clustering => "clustering",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub index: usize,
    pub group: FeatureGroup,
    pub statistic: String,
    pub radius: Option<f64>,
}

impl FeatureDescriptor {
    /// Stable name such as `internode.std` or `density.avg@20`.
    pub fn name(&self) -> String {
        format!("{}.{}", self.group.prefix(), self.statistic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCatalogue {
    pub version: String,
    pub descriptors: Vec<FeatureDescriptor>,
}

impl FeatureCatalogue {
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.descriptors.iter().map(FeatureDescriptor::name).collect()
    }

    pub fn name(&self, index: usize) -> String {
        self.descriptors[index].name()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.descriptors.iter().position(|d| d.name() == name)
    }

    /// Rebuilds a catalogue from column names, as found in a features file.
    pub fn from_names(names: &[String]) -> Result<Self> {
        let mut descriptors = Vec::with_capacity(names.len());
        for (index, name) in names.iter().enumerate() {
            let (prefix, statistic) = name
                .split_once('.')
                .ok_or_else(|| Error::CatalogueMismatch(format!("malformed feature name {name:?}")))?;
            let group = match prefix {
                "internode" => FeatureGroup::Internode,
                "spatial" => FeatureGroup::Spatial,
                "density" => FeatureGroup::Density,
                "shared" => FeatureGroup::SharedNeighbours,
                "clustering" => FeatureGroup::Clustering,
                other => {
                    return Err(Error::CatalogueMismatch(format!("unknown feature group {other:?}")))
                }
            };
            let radius = match statistic.split_once('@') {
                Some((_, r)) => Some(r.parse::<f64>().map_err(|_| {
                    Error::CatalogueMismatch(format!("bad radius in feature name {name:?}"))
                })?),
                None => None,
            };
            descriptors.push(FeatureDescriptor {
                index,
                group,
                statistic: statistic.to_string(),
                radius,
            });
        }
        Ok(FeatureCatalogue {
            version: CATALOGUE_VERSION.to_string(),
            descriptors,
        })
    }

    pub fn ensure_same(&self, other: &FeatureCatalogue) -> Result<()> {
        if self.names() != other.names() {
            return Err(Error::CatalogueMismatch(format!(
                "{} features vs {} features with different names",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

pub fn build_catalogue(config: &ExperimentConfig) -> FeatureCatalogue {
    let mut descriptors = Vec::new();
    let mut push = |group, statistic: String, radius| {
        descriptors.push(FeatureDescriptor {
            index: descriptors.len(),
            group,
            statistic,
            radius,
        })
    };
    for s in internode::INTERNODE_STATS {
        push(FeatureGroup::Internode, s.to_string(), None);
    }
    for s in spatial::SPATIAL_STATS {
        push(FeatureGroup::Spatial, s.to_string(), None);
    }
    for group in [
        FeatureGroup::Density,
        FeatureGroup::SharedNeighbours,
        FeatureGroup::Clustering,
    ] {
        for &r in config.radii.as_slice() {
            push(group, format!("avg@{r}"), Some(r));
        }
    }
    FeatureCatalogue {
        version: CATALOGUE_VERSION.to_string(),
        descriptors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub catalogue_version: String,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector {
            values,
            catalogue_version: CATALOGUE_VERSION.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes the full feature vector, in catalogue order.
pub fn extract_features(t: &Topology, config: &ExperimentConfig) -> Result<FeatureVector> {
    if t.len() < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: t.len() });
    }
    let mut values = Vec::with_capacity(12 + 3 * config.radii.len());
    values.extend(internode_distance_features(t, config.distance_quantization)?);
    values.extend(spatial_distribution_features(t, config.quadrat_divisions)?);
    let sweep = neighbourhood::sweep(t, &config.radii);
    values.extend(sweep.iter().map(|s| s.density));
    values.extend(sweep.iter().map(|s| s.shared));
    values.extend(sweep.iter().map(|s| s.clustering));
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidTopology {
            id: t.id.clone(),
            violations: vec![format!("feature {i} is not finite")],
        });
    }
    Ok(FeatureVector::new(values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub topology_id: String,
    pub label: String,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub catalogue: FeatureCatalogue,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn new(catalogue: FeatureCatalogue, rows: Vec<FeatureRow>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.features.len() != catalogue.len()) {
            return Err(Error::CatalogueMismatch(format!(
                "row {} has {} values, catalogue has {}",
                r.topology_id,
                r.features.len(),
                catalogue.len()
            )));
        }
        Ok(FeatureMatrix { catalogue, rows })
    }

    /// Distinct labels in sorted order.
    pub fn labels(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<&str> = self.rows.iter().map(|r| r.label.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.features.values[k]).collect()
    }
}

/// Extracts features for every topology in parallel; rows keep the input order.
pub fn extract_matrix(topologies: &[Topology], config: &ExperimentConfig) -> Result<FeatureMatrix> {
    let rows = topologies
        .par_iter()
        .map(|t| {
            Ok(FeatureRow {
                topology_id: t.id.clone(),
                label: t.generator_label.clone(),
                features: extract_features(t, config)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(build_catalogue(config), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{Point, RadiiConfig};

    #[test]
    fn default_catalogue() {
        let c = build_catalogue(&ExperimentConfig::default());
        assert_eq!(c.len(), 36);
        assert_eq!(c.name(0), "internode.min");
        assert_eq!(c.name(6), "internode.std");
        assert_eq!(c.name(11), "spatial.mode_count");
        assert_eq!(c.name(14), "density.avg@20");
        assert_eq!(c.name(23), "shared.avg@30");
        assert_eq!(c.name(30), "clustering.avg@20");
        assert_eq!(c.descriptors[14].radius, Some(20.0));
        assert_eq!(c.descriptors[3].radius, None);
        assert!(c.descriptors.iter().enumerate().all(|(i, d)| d.index == i));
        assert_eq!(FeatureCatalogue::from_names(&c.names()).unwrap(), c);
    }

    #[test]
    fn single_radius_catalogue() {
        let cfg = ExperimentConfig {
            radii: RadiiConfig::new(vec![7.5]).unwrap(),
            ..Default::default()
        };
        let c = build_catalogue(&cfg);
        assert_eq!(c.len(), 15);
        assert_eq!(c.name(12), "density.avg@7.5");
    }

    #[test]
    fn extraction_composes_groups() {
        let t = Topology::new(
            "t",
            "g",
            1000.0,
            vec![Point::new(0.0, 0.0), Point::new(3.0, 4.0), Point::new(0.0, 8.0)],
            None,
        );
        let cfg = ExperimentConfig::default();
        let f = extract_features(&t, &cfg).unwrap();
        assert_eq!(f.len(), 36);
        assert_eq!(&f.values[..7], &internode_distance_features(&t, 1.0).unwrap());
        assert_eq!(f, extract_features(&t, &cfg).unwrap());
        let one = Topology::new("t", "g", 1000.0, vec![Point::new(0.0, 0.0)], None);
        assert!(extract_features(&one, &cfg).is_err());
    }
}
