use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{LabError, Result};

/// Neighbour offsets of the 16-connected stencil together with the nodes that
/// must lie in the closed domain for the straight edge to be admissible.
const MOVES: [(i64, i64); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (2, 1),
    (2, -1),
    (-2, 1),
    (-2, -1),
    (1, 2),
    (1, -2),
    (-1, 2),
    (-1, -2),
];

#[derive(Copy, Clone, PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.partial_cmp(&self.dist).unwrap_or(Ordering::Equal).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn edge_ok(grid: &Grid, i: usize, j: usize, di: i64, dj: i64) -> bool {
    let side = |a: i64, b: i64| grid.shift(i, j, a, b).is_some_and(|k| grid.in_domain(k));
    match (di.abs(), dj.abs()) {
        (1, 0) | (0, 1) => true,
        (1, 1) => side(di, 0) && side(0, dj),
        (2, 1) => {
            let interior = |a: i64, b: i64| grid.shift(i, j, a, b).is_some_and(|k| grid.is_interior(k));
            interior(di / 2, 0) && interior(di / 2, dj)
        }
        (1, 2) => {
            let interior = |a: i64, b: i64| grid.shift(i, j, a, b).is_some_and(|k| grid.is_interior(k));
            interior(0, dj / 2) && interior(di, dj / 2)
        }
        _ => false,
    }
}

/// Single-source shortest paths through the interior nodes. Returns the
/// distance and predecessor arrays; unreachable nodes carry infinity.
pub fn shortest_paths(grid: &Grid, source: usize, target: Option<usize>) -> (Vec<f64>, Vec<usize>) {
    let n = grid.len();
    let h = grid.spacing();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State { dist: 0.0, node: source });
    while let Some(State { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        if Some(node) == target {
            break;
        }
        let (i, j) = grid.ij(node);
        for &(di, dj) in &MOVES {
            let Some(next) = grid.shift(i, j, di, dj) else { continue };
            if !grid.is_interior(next) || !edge_ok(grid, i, j, di, dj) {
                continue;
            }
            let nd = d + h * ((di * di + dj * dj) as f64).sqrt();
            if nd < dist[next] {
                dist[next] = nd;
                prev[next] = node;
                heap.push(State { dist: nd, node: next });
            }
        }
    }
    (dist, prev)
}

fn interior_node_at(grid: &Grid, x: f64, y: f64) -> Result<usize> {
    grid.nearest_node(x, y).filter(|&k| grid.is_interior(k)).ok_or(LabError::NotInterior { x, y })
}

/// Length of the shortest 16-connected path between the interior nodes nearest to `a` and `b`.
pub fn geodesic_distance(grid: &Grid, a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    let s = interior_node_at(grid, a.0, a.1)?;
    let t = interior_node_at(grid, b.0, b.1)?;
    if s == t {
        return Ok(0.0);
    }
    let (dist, _) = shortest_paths(grid, s, Some(t));
    if dist[t].is_finite() {
        Ok(dist[t])
    } else {
        Err(LabError::Disconnected)
    }
}

/// Node polyline of a shortest path from `a` to `b`.
pub fn geodesic_path(grid: &Grid, a: (f64, f64), b: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let s = interior_node_at(grid, a.0, a.1)?;
    let t = interior_node_at(grid, b.0, b.1)?;
    let (dist, prev) = shortest_paths(grid, s, Some(t));
    if !dist[t].is_finite() {
        return Err(LabError::Disconnected);
    }
    let mut path = vec![grid.coords(t)];
    let mut cur = t;
    while cur != s {
        cur = prev[cur];
        path.push(grid.coords(cur));
    }
    path.reverse();
    Ok(path)
}

/// Sampled lower estimate of the geodesic diameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiameterEstimate {
    pub value: f64,
    pub endpoints: [(f64, f64); 2],
    pub sources: Vec<(f64, f64)>,
    pub sample_count: usize,
    pub seed: u64,
}

/// Largest shortest-path distance from a seeded sample of interior nodes plus
/// the extremal interior nodes in the x, y, x+y and x-y directions, followed by
/// one sweep from the farthest node found.
pub fn geodesic_diameter(grid: &Grid, sample_count: usize, seed: u64) -> Result<DiameterEstimate> {
    if sample_count < 16 {
        return Err(LabError::InvalidArgument(format!("sample_count {sample_count} must be at least 16")));
    }
    let interior = grid.interior_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = sample_count.min(interior.len());
    let mut sources: Vec<usize> = sample(&mut rng, interior.len(), take).into_iter().map(|p| interior[p]).collect();
    type Key = fn(f64, f64) -> f64;
    let keys: [Key; 4] = [|x, _| x, |_, y| y, |x, y| x + y, |x, y| x - y];
    for key in keys {
        let score = |k: &usize| {
            let (x, y) = grid.coords(*k);
            key(x, y)
        };
        let lo = interior.iter().min_by(|a, b| score(a).total_cmp(&score(b))).copied();
        let hi = interior.iter().max_by(|a, b| score(a).total_cmp(&score(b))).copied();
        sources.extend(lo.into_iter().chain(hi));
    }
    sources.sort_unstable();
    sources.dedup();

    let mut best = (0.0, sources[0], sources[0]);
    for &s in &sources {
        let (dist, _) = shortest_paths(grid, s, None);
        for &t in interior {
            if dist[t].is_finite() && dist[t] > best.0 {
                best = (dist[t], s, t);
            }
        }
    }
    let far = best.2;
    let (dist, _) = shortest_paths(grid, far, None);
    for &t in interior {
        if dist[t].is_finite() && dist[t] > best.0 {
            best = (dist[t], far, t);
        }
    }
    Ok(DiameterEstimate {
        value: best.0,
        endpoints: [grid.coords(best.1), grid.coords(best.2)],
        sources: sources.iter().map(|&k| grid.coords(k)).collect(),
        sample_count,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    /// Shortest path in the L-shape: straight if the segment avoids the removed
    /// quarter, otherwise through the re-entrant corner.
    fn l_shape_oracle(a: (f64, f64), b: (f64, f64)) -> f64 {
        let blocked = (0..=1000).any(|s| {
            let t = s as f64 / 1000.0;
            let x = a.0 + t * (b.0 - a.0);
            let y = a.1 + t * (b.1 - a.1);
            x >= 0.5 && y >= 0.5
        });
        let d = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).hypot(p.1 - q.1);
        if blocked {
            d(a, (0.5, 0.5)) + d((0.5, 0.5), b)
        } else {
            d(a, b)
        }
    }

    #[test]
    fn convex_square_diagonal() {
        let g = Grid::new(Domain::UnitSquare, 65).unwrap();
        let d = geodesic_distance(&g, (0.1, 0.1), (0.9, 0.9)).unwrap();
        let exact = 0.8 * 2f64.sqrt();
        assert!((d / exact - 1.0).abs() < 0.05);
        assert_eq!(geodesic_distance(&g, (0.3, 0.4), (0.3, 0.4)).unwrap(), 0.0);
    }

    #[test]
    fn l_shape_matches_corner_oracle() {
        let g = Grid::new(Domain::LShape, 129).unwrap();
        for (a, b) in [((0.1, 0.9), (0.9, 0.1)), ((0.25, 0.8), (0.8, 0.25)), ((0.2, 0.7), (0.6, 0.1))] {
            let got = geodesic_distance(&g, a, b).unwrap();
            let snap = |p: (f64, f64)| g.coords(g.nearest_node(p.0, p.1).unwrap());
            let want = l_shape_oracle(snap(a), snap(b));
            assert!(got >= want * (1.0 - 1e-9), "{a:?}->{b:?}: {got} < {want}");
            assert!((got / want - 1.0).abs() < 0.05, "{a:?}->{b:?}: {got} vs {want}");
        }
    }

    #[test]
    fn diameters() {
        let sq = Grid::new(Domain::UnitSquare, 65).unwrap();
        let d = geodesic_diameter(&sq, 16, 7).unwrap().value;
        assert!(d >= 2f64.sqrt() - 3.0 * sq.spacing() && d <= 2f64.sqrt() * 1.05, "{d}");
        let disk =
            Grid::new(Domain::Disk { cx: 0.5, cy: 0.5, radius: 0.5, bbox: Some([0.0, 0.0, 1.0, 1.0]) }, 65).unwrap();
        let d = geodesic_diameter(&disk, 16, 7).unwrap().value;
        assert!((d - 1.0).abs() < 0.05, "{d}");
        let l = Grid::new(Domain::LShape, 65).unwrap();
        let d = geodesic_diameter(&l, 16, 7).unwrap().value;
        let want = l_shape_oracle((0.0, 1.0), (1.0, 0.0));
        assert!((d / want - 1.0).abs() < 0.05, "{d} vs {want}");
        assert!(geodesic_diameter(&l, 8, 7).is_err());
    }

    #[test]
    fn geodesic_dominates_euclidean() {
        let g = Grid::new(Domain::LShape, 33).unwrap();
        let nodes = g.interior_nodes();
        let s = nodes[nodes.len() / 3];
        let (dist, _) = shortest_paths(&g, s, None);
        let (sx, sy) = g.coords(s);
        for &t in nodes {
            let (tx, ty) = g.coords(t);
            assert!(dist[t] + 1e-12 >= (sx - tx).hypot(sy - ty));
        }
    }

    #[test]
    fn exterior_points_rejected() {
        let g = Grid::new(Domain::LShape, 33).unwrap();
        assert!(matches!(geodesic_distance(&g, (0.8, 0.8), (0.1, 0.1)), Err(LabError::NotInterior { .. })));
    }
}
