//! Radius-parameterised features: node density, shared neighbours and the
//! clustering coefficient.
//!
//! The per-node functions follow the definitions literally and are meant for
//! inspection and small inputs. The averaged features use [`sweep`], which
//! finds all pairs closer than the largest radius with a uniform grid, sorts
//! them by distance and grows one `N x N` adjacency bitmask radius by radius.

use crate::error::{Error, Result};
use crate::topology::{euclidean_distance, RadiiConfig, Topology};

/// `nd_r(a)`: number of other nodes strictly closer than `r`.
pub fn node_density(t: &Topology, a: usize, r: f64) -> Result<usize> {
    Ok(t.neighbours(a, r)?.len())
}

/// `snc_r(a, b)`: size of the intersection of the two neighbour sets.
pub fn shared_neighbour_count(t: &Topology, a: usize, b: usize, r: f64) -> Result<usize> {
    if a == b {
        return Err(Error::InvalidParameter(format!(
            "shared neighbours need two distinct nodes, got {a} twice"
        )));
    }
    let na = t.neighbours(a, r)?;
    let nb = t.neighbours(b, r)?;
    Ok(na.intersection(&nb).count())
}

/// `cc_r(a)`: pairs of neighbours of `a` lying at distance in `(0, r)` from
/// each other, divided by `nd_r(a)`. Zero for isolated nodes.
pub fn clustering_coefficient(t: &Topology, a: usize, r: f64) -> Result<f64> {
    let neigh: Vec<usize> = t.neighbours(a, r)?.into_iter().collect();
    if neigh.is_empty() {
        return Ok(0.0);
    }
    let mut linked = 0usize;
    for (i, &b) in neigh.iter().enumerate() {
        for &c in &neigh[i + 1..] {
            let d = euclidean_distance(t.nodes[b], t.nodes[c]);
            if d > 0.0 && d < r {
                linked += 1;
            }
        }
    }
    Ok(linked as f64 / neigh.len() as f64)
}

/// Averages for one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusAverages {
    pub radius: f64,
    pub density: f64,
    pub shared: f64,
    pub clustering: f64,
}

struct Grid {
    cell: f64,
    cols: usize,
    cells: Vec<Vec<u32>>,
}

impl Grid {
    /// Coarsest grid whose cells are at least `reach` wide, capped at 512 columns.
    fn new(t: &Topology, reach: f64) -> Self {
        let extent = t
            .nodes
            .iter()
            .fold(t.area_side, |m, p| m.max(p.x).max(p.y));
        let cell = reach.max(extent / 512.0);
        let cols = ((extent / cell).floor() as usize + 1).max(1);
        let mut cells = vec![Vec::new(); cols * cols];
        let mut grid = Grid { cell, cols, cells: Vec::new() };
        for (i, p) in t.nodes.iter().enumerate() {
            let (cx, cy) = (grid.coord(p.x), grid.coord(p.y));
            cells[cy * cols + cx].push(i as u32);
        }
        grid.cells = cells;
        grid
    }

    fn coord(&self, v: f64) -> usize {
        ((v / self.cell).floor().max(0.0) as usize).min(self.cols - 1)
    }

    /// Every unordered pair closer than `reach`, as `(a, b, distance)` with `a < b`.
    fn close_pairs(&self, t: &Topology, reach: f64) -> Vec<(u32, u32, f64)> {
        let mut out = Vec::new();
        let cols = self.cols as isize;
        for cy in 0..cols {
            for cx in 0..cols {
                let here = &self.cells[(cy * cols + cx) as usize];
                if here.is_empty() {
                    continue;
                }
                // half of the 3x3 stencil so each cell pair is visited once
                for (dx, dy) in [(0, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= cols || ny >= cols {
                        continue;
                    }
                    let there = &self.cells[(ny * cols + nx) as usize];
                    let same = dx == 0 && dy == 0;
                    for (i, &a) in here.iter().enumerate() {
                        let others = if same { &there[i + 1..] } else { &there[..] };
                        for &b in others {
                            let d = euclidean_distance(t.nodes[a as usize], t.nodes[b as usize]);
                            if d < reach {
                                out.push((a.min(b), a.max(b), d));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

struct BitMatrix {
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitMatrix { words, bits: vec![0; n * words] }
    }

    fn set_pair(&mut self, a: usize, b: usize) {
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
        self.bits[b * self.words + a / 64] |= 1 << (a % 64);
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }
}

fn and_popcount(x: &[u64], y: &[u64]) -> u64 {
    x.iter().zip(y).map(|(a, b)| (a & b).count_ones() as u64).sum()
}

fn set_bits(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let bit = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(w * 64 + bit)
        })
    })
}

/// Average density, shared-neighbour count and clustering coefficient for
/// every radius, in radius order.
///
/// The shared-neighbour sum over pairs uses the identity
/// `sum_{a<b} |N(a) & N(b)| = sum_c C(|N(c)|, 2)`, which holds because the
/// neighbour relation is symmetric and irreflexive.
pub fn sweep(t: &Topology, radii: &RadiiConfig) -> Vec<RadiusAverages> {
    let n = t.len();
    if n == 0 {
        return radii
            .as_slice()
            .iter()
            .map(|&radius| RadiusAverages { radius, density: 0.0, shared: 0.0, clustering: 0.0 })
            .collect();
    }
    let grid = Grid::new(t, radii.max());
    let mut pairs = grid.close_pairs(t, radii.max());
    pairs.sort_by(|x, y| x.2.total_cmp(&y.2).then((x.0, x.1).cmp(&(y.0, y.1))));

    let mut coincident: Option<BitMatrix> = None;
    for &(a, b, _) in pairs.iter().take_while(|p| p.2 == 0.0) {
        coincident
            .get_or_insert_with(|| BitMatrix::new(n))
            .set_pair(a as usize, b as usize);
    }

    let mut adjacency = BitMatrix::new(n);
    let mut degree = vec![0u64; n];
    let mut next = 0;
    let total_pairs = (n * n.saturating_sub(1) / 2) as f64;
    let mut out = Vec::with_capacity(radii.len());
    for &radius in radii.as_slice() {
        while next < pairs.len() && pairs[next].2 < radius {
            let (a, b, _) = pairs[next];
            adjacency.set_pair(a as usize, b as usize);
            degree[a as usize] += 1;
            degree[b as usize] += 1;
            next += 1;
        }

        let density = degree.iter().sum::<u64>() as f64 / n as f64;
        let shared = if n >= 2 {
            degree.iter().map(|&k| k * k.saturating_sub(1) / 2).sum::<u64>() as f64 / total_pairs
        } else {
            0.0
        };

        let mut cc_sum = 0.0;
        for (a, &deg) in degree.iter().enumerate() {
            if deg == 0 {
                continue;
            }
            let row_a = adjacency.row(a);
            let mut twice_linked = 0u64;
            for b in set_bits(row_a) {
                twice_linked += and_popcount(adjacency.row(b), row_a);
                if let Some(zero) = &coincident {
                    twice_linked -= and_popcount(zero.row(b), row_a);
                }
            }
            cc_sum += (twice_linked / 2) as f64 / deg as f64;
        }
        out.push(RadiusAverages {
            radius,
            density,
            shared,
            clustering: cc_sum / n as f64,
        });
    }
    out
}

/// Average node density per radius.
pub fn density_features(t: &Topology, radii: &RadiiConfig) -> Vec<f64> {
    sweep(t, radii).into_iter().map(|s| s.density).collect()
}

/// Average shared-neighbour count over all unordered node pairs, per radius.
pub fn shared_neighbour_features(t: &Topology, radii: &RadiiConfig) -> Result<Vec<f64>> {
    if t.len() < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: t.len() });
    }
    Ok(sweep(t, radii).into_iter().map(|s| s.shared).collect())
}

/// Average clustering coefficient per radius.
pub fn clustering_features(t: &Topology, radii: &RadiiConfig) -> Vec<f64> {
    sweep(t, radii).into_iter().map(|s| s.clustering).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Point;
    use proptest::prelude::*;

    fn topo(points: &[(f64, f64)]) -> Topology {
        Topology::new(
            "t",
            "g",
            1000.0,
            points.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            None,
        )
    }

    fn triangle() -> Topology {
        topo(&[(0.0, 0.0), (3.0, 4.0), (0.0, 8.0)])
    }

    fn radius(r: f64) -> RadiiConfig {
        RadiiConfig::new(vec![r]).unwrap()
    }

    /// Node 3 at the centre; 1 and 2 sit on opposite sides, 4 and 5 next to each other.
    fn clustering_figure() -> Topology {
        topo(&[
            (100.0, 100.0), // 0: far away, not involved
            (40.0, 50.0),   // 1
            (60.0, 50.0),   // 2
            (50.0, 50.0),   // 3
            (48.5, 59.0),   // 4
            (51.5, 59.0),   // 5
        ])
    }

    #[test]
    fn density_examples() {
        let t = triangle();
        assert_eq!(node_density(&t, 1, 6.0).unwrap(), 2);
        assert_eq!(node_density(&t, 0, 5.0).unwrap(), 0);
        assert_eq!(node_density(&topo(&[(1.0, 1.0)]), 0, 50.0).unwrap(), 0);
        let f = density_features(&t, &radius(6.0));
        assert!((f[0] - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(density_features(&t, &radius(1.0)), vec![0.0]);
        assert_eq!(density_features(&topo(&[(0.0, 0.0), (1.0, 0.0)]), &radius(2.0)), vec![1.0]);
    }

    #[test]
    fn shared_examples() {
        let t = triangle();
        assert_eq!(shared_neighbour_count(&t, 0, 2, 6.0).unwrap(), 1);
        assert_eq!(shared_neighbour_count(&t, 0, 2, 1.0).unwrap(), 0);
        assert!(shared_neighbour_count(&t, 1, 1, 6.0).is_err());
        let f = shared_neighbour_features(&t, &radius(6.0)).unwrap();
        assert!((f[0] - 1.0 / 3.0).abs() < 1e-12);
        let two = topo(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(shared_neighbour_features(&two, &radius(5.0)).unwrap(), vec![0.0]);
        assert!(shared_neighbour_features(&topo(&[(0.0, 0.0)]), &radius(5.0)).is_err());
    }

    #[test]
    fn shared_neighbours_of_two_hubs() {
        // 3 and 4 both reach 1 and 2
        let t = topo(&[(0.0, 0.0), (10.0, 4.0), (10.0, 10.0), (7.0, 7.0), (13.0, 7.0)]);
        assert_eq!(shared_neighbour_count(&t, 3, 4, 5.0).unwrap(), 2);
    }

    #[test]
    fn clustering_examples() {
        let t = clustering_figure();
        assert_eq!(node_density(&t, 3, 11.0).unwrap(), 4);
        assert_eq!(clustering_coefficient(&t, 3, 11.0).unwrap(), 0.25);
        assert_eq!(clustering_coefficient(&t, 0, 11.0).unwrap(), 0.0);
        assert_eq!(clustering_coefficient(&triangle(), 1, 6.0).unwrap(), 0.0);
        // three mutually close nodes: one linked pair per node over two neighbours
        let tri = topo(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(clustering_features(&tri, &radius(5.0)), vec![0.5]);
        assert_eq!(clustering_features(&triangle(), &radius(1.0)), vec![0.0]);
    }

    #[test]
    fn complete_neighbourhood_average() {
        let pts: Vec<(f64, f64)> = (0..7).map(|i| (i as f64, (i * i) as f64 * 0.1)).collect();
        let t = topo(&pts);
        let f = clustering_features(&t, &radius(100.0));
        assert!((f[0] - 5.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_pairs_do_not_cluster() {
        // nodes 1 and 2 coincide: both neighbours of 0 but d(1,2) = 0
        let t = topo(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0)]);
        assert_eq!(clustering_coefficient(&t, 0, 5.0).unwrap(), 0.0);
        let averaged = clustering_features(&t, &radius(5.0))[0];
        let direct: f64 = (0..3).map(|a| clustering_coefficient(&t, a, 5.0).unwrap()).sum::<f64>() / 3.0;
        assert_eq!(averaged, direct);
    }

    fn random_topology() -> impl Strategy<Value = Topology> {
        prop::collection::vec((0.0..=200.0f64, 0.0..=200.0f64), 2..40).prop_map(|pts| {
            Topology::new(
                "t",
                "g",
                200.0,
                pts.into_iter().map(|(x, y)| Point::new(x, y)).collect(),
                None,
            )
        })
    }

    proptest! {
        #[test]
        fn density_monotone_in_radius(t in random_topology(), r1 in 1.0..80.0f64, dr in 0.0..80.0f64) {
            for a in 0..t.len() {
                prop_assert!(node_density(&t, a, r1).unwrap() <= node_density(&t, a, r1 + dr).unwrap());
            }
            let radii = RadiiConfig::new(vec![r1, r1 + dr + 1e-6]).unwrap();
            let f = density_features(&t, &radii);
            prop_assert!(f[0] <= f[1]);
        }

        #[test]
        fn shared_count_symmetric(t in random_topology(), r in 1.0..120.0f64) {
            for a in 0..t.len() {
                for b in a + 1..t.len() {
                    prop_assert_eq!(
                        shared_neighbour_count(&t, a, b, r).unwrap(),
                        shared_neighbour_count(&t, b, a, r).unwrap()
                    );
                }
            }
        }

        #[test]
        fn clustering_bounds(t in random_topology(), r in 1.0..120.0f64) {
            for a in 0..t.len() {
                let cc = clustering_coefficient(&t, a, r).unwrap();
                let nd = node_density(&t, a, r).unwrap() as f64;
                prop_assert!(cc >= 0.0);
                prop_assert!(cc <= f64::max(0.0, (nd - 1.0) / 2.0) + 1e-12);
            }
        }

        #[test]
        fn sweep_matches_definitions(t in random_topology(), r in 1.0..120.0f64) {
            let s = sweep(&t, &RadiiConfig::new(vec![r]).unwrap())[0];
            let n = t.len() as f64;
            let density: f64 = (0..t.len()).map(|a| node_density(&t, a, r).unwrap() as f64).sum::<f64>() / n;
            let cc: f64 = (0..t.len()).map(|a| clustering_coefficient(&t, a, r).unwrap()).sum::<f64>() / n;
            let mut snc = 0.0;
            for a in 0..t.len() {
                for b in a + 1..t.len() {
                    snc += shared_neighbour_count(&t, a, b, r).unwrap() as f64;
                }
            }
            prop_assert!((s.density - density).abs() < 1e-9);
            prop_assert!((s.clustering - cc).abs() < 1e-9);
            prop_assert!((s.shared - snc / (n * (n - 1.0) / 2.0)).abs() < 1e-9);
        }

        #[test]
        fn translation_invariant(t in random_topology(), r in 1.0..120.0f64, dx in 0.0..100.0f64, dy in 0.0..100.0f64) {
            let mut moved = t.clone();
            moved.area_side = 400.0;
            for p in &mut moved.nodes {
                p.x += dx;
                p.y += dy;
            }
            let radii = RadiiConfig::new(vec![r]).unwrap();
            let a = sweep(&t, &radii)[0];
            let b = sweep(&moved, &radii)[0];
            // shifting can move a distance across the strict radius boundary only by rounding
            prop_assume!(t.pairwise_distances().unwrap().iter().all(|d| (d - r).abs() > 1e-9));
            prop_assert!((a.density - b.density).abs() < 1e-9);
            prop_assert!((a.shared - b.shared).abs() < 1e-9);
            prop_assert!((a.clustering - b.clustering).abs() < 1e-9);
        }
    }
}
