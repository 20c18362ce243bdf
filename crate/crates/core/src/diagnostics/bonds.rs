//! Lattice statistics from a Delaunay triangulation of the vortex positions,
//! periodic in `y`.

use std::collections::{HashMap, HashSet};

use delaunator::{triangulate, Point};
use serde::{Deserialize, Serialize};

use super::vortices::VortexSet;
use crate::grid::GridSpec;

/// Bonds longer than this multiple of the median edge length are dropped.
pub const BOND_CUTOFF: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondStats {
    pub bonds: usize,
    pub mean_length: f64,
    /// Mean angle between adjacent bonds at a vortex, in radians.
    pub mean_angle: f64,
}

/// Identifies an edge independent of which periodic copy it was seen in:
/// the two vortex indices and the period offset between them.
fn edge_key(a: usize, sa: i32, b: usize, sb: i32) -> (usize, usize, i32) {
    match a.cmp(&b) {
        std::cmp::Ordering::Less => (a, b, sb - sa),
        std::cmp::Ordering::Greater => (b, a, sa - sb),
        std::cmp::Ordering::Equal => (a, a, (sb - sa).abs()),
    }
}

/// Returns `None` with fewer than three vortices or a degenerate
/// triangulation.
pub fn bond_statistics(v: &VortexSet, g: &GridSpec) -> Option<BondStats> {
    bond_statistics_with_cutoff(v, g, BOND_CUTOFF)
}

/// [`bond_statistics`] with bonds limited to `cutoff` times the median edge.
pub fn bond_statistics_with_cutoff(v: &VortexSet, g: &GridSpec, cutoff: f64) -> Option<BondStats> {
    let n = v.len();
    if n < 3 {
        return None;
    }
    let ly = g.period_y();
    // copies ordered -L, 0, +L; index = copy * n + vortex
    let shifts = [-1i32, 0, 1];
    let pts: Vec<Point> = shifts
        .iter()
        .flat_map(|&s| v.vortices.iter().map(move |p| Point { x: p.x, y: p.y + s as f64 * ly }))
        .collect();
    let tri = triangulate(&pts);
    if tri.triangles.is_empty() {
        return None;
    }
    let split = |k: usize| (k % n, shifts[k / n]);
    let length = |a: usize, b: usize| ((pts[a].x - pts[b].x).powi(2) + (pts[a].y - pts[b].y).powi(2)).sqrt();

    let mut edges: HashMap<(usize, usize, i32), f64> = HashMap::new();
    for t in tri.triangles.chunks_exact(3) {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            let ((va, sa), (vb, sb)) = (split(a), split(b));
            if sa != 0 && sb != 0 {
                continue;
            }
            edges.entry(edge_key(va, sa, vb, sb)).or_insert_with(|| length(a, b));
        }
    }
    let mut lens: Vec<f64> = edges.values().copied().collect();
    lens.sort_by(f64::total_cmp);
    let median = if lens.len() % 2 == 1 {
        lens[lens.len() / 2]
    } else {
        0.5 * (lens[lens.len() / 2 - 1] + lens[lens.len() / 2])
    };
    let cutoff = cutoff * median;
    let bonds: HashSet<(usize, usize, i32)> = edges.iter().filter(|(_, &l)| l < cutoff).map(|(k, _)| *k).collect();
    if bonds.is_empty() {
        return None;
    }
    let mut keys: Vec<_> = bonds.iter().copied().collect();
    keys.sort_unstable();
    let mean_length = keys.iter().map(|k| edges[k]).sum::<f64>() / keys.len() as f64;

    let mut angle_sum = 0.0;
    let mut angle_count = 0usize;
    for t in tri.triangles.chunks_exact(3) {
        for c in 0..3 {
            let (o, p, q) = (t[c], t[(c + 1) % 3], t[(c + 2) % 3]);
            let (vo, so) = split(o);
            if so != 0 {
                continue;
            }
            let (vp, sp) = split(p);
            let (vq, sq) = split(q);
            if !bonds.contains(&edge_key(vo, so, vp, sp)) || !bonds.contains(&edge_key(vo, so, vq, sq)) {
                continue;
            }
            let (ux, uy) = (pts[p].x - pts[o].x, pts[p].y - pts[o].y);
            let (wx, wy) = (pts[q].x - pts[o].x, pts[q].y - pts[o].y);
            angle_sum += (ux * wy - uy * wx).abs().atan2(ux * wx + uy * wy);
            angle_count += 1;
        }
    }
    let mean_angle = if angle_count > 0 { angle_sum / angle_count as f64 } else { f64::NAN };
    Some(BondStats { bonds: keys.len(), mean_length, mean_angle })
}
