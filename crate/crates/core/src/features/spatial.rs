use crate::error::{Error, Result};
use crate::topology::Topology;

pub const SPATIAL_STATS: [&str; 5] = ["min", "max", "range", "mode", "mode_count"];

/// Node counts per quadrat, row-major over a `d x d` partition of the area.
/// Coordinates equal to `D` fall into the last row/column.
pub fn quadrat_counts(t: &Topology, divisions: usize) -> Result<Vec<u64>> {
    if divisions == 0 {
        return Err(Error::InvalidParameter("quadrat divisions must be at least 1".into()));
    }
    let side = t.area_side / divisions as f64;
    let cell = |v: f64| ((v / side).floor().max(0.0) as usize).min(divisions - 1);
    let mut counts = vec![0u64; divisions * divisions];
    for p in &t.nodes {
        counts[cell(p.y) * divisions + cell(p.x)] += 1;
    }
    Ok(counts)
}

/// Min, max, range, mode (smallest on ties) and mode count of the quadrat counts.
pub fn spatial_distribution_features(t: &Topology, divisions: usize) -> Result<[f64; 5]> {
    let counts = quadrat_counts(t, divisions)?;
    let min = *counts.iter().min().expect("at least one cell");
    let max = *counts.iter().max().expect("at least one cell");
    let mut freq = vec![0u64; max as usize + 1];
    for &c in &counts {
        freq[c as usize] += 1;
    }
    let (mode, &mode_count) = freq
        .iter()
        .enumerate()
        .fold((0, &0), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok([
        min as f64,
        max as f64,
        (max - min) as f64,
        mode as f64,
        mode_count as f64,
    ])
}
