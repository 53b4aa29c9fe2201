use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::domain::Domain;
use crate::error::{LabError, Result};

/// Node classification on the carrying rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

/// Serializable summary of a grid, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub domain: Domain,
    pub resolution: usize,
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub interior_nodes: usize,
    pub boundary_nodes: usize,
}

/// Uniform Cartesian discretization of a domain.
///
/// Nodes are indexed row-major, `k = j * nx + i`, with `x_i = x0 + i h`.
/// Interior nodes lie strictly inside the open domain and away from the
/// rectangle edge; boundary nodes are the non-interior nodes with at least one
/// interior 8-neighbour. Every 4-neighbour of an interior node is therefore an
/// interior or a boundary node.
#[derive(Debug)]
pub struct Grid {
    domain: Domain,
    resolution: usize,
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    h: f64,
    kinds: Vec<NodeKind>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// position of each interior node in `interior`, `usize::MAX` otherwise
    unknown_index: Vec<usize>,
    weights: Vec<f64>,
    normals: Vec<(f64, f64)>,
    boundary_distance: OnceLock<Vec<f64>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.nx == other.nx && self.ny == other.ny
    }
}

const CELL_SUBSAMPLES: usize = 16;

impl Grid {
    /// Builds the grid with `resolution` nodes across the x-extent of the
    /// bounding box. The y-extent must be a whole number of spacings.
    pub fn new(domain: Domain, resolution: usize) -> Result<Grid> {
        if resolution < 9 {
            return Err(LabError::ResolutionTooSmall(resolution));
        }
        domain.validate()?;
        let mut bbox = domain.bounding_box();
        let mut h = (bbox[2] - bbox[0]) / (resolution - 1) as f64;
        if let Domain::Disk { bbox: None, .. } = domain {
            // pad the tight box by two cells so the boundary ring fits
            let pad = 2.0 * (bbox[2] - bbox[0]) / (resolution - 5) as f64;
            h = pad / 2.0;
            bbox = [bbox[0] - pad, bbox[1] - pad, bbox[2] + pad, bbox[3] + pad];
        }
        let nx = resolution;
        let ny_f = (bbox[3] - bbox[1]) / h;
        let ny = ny_f.round() as usize + 1;
        if (ny_f - ny_f.round()).abs() > 1e-9 * ny_f.max(1.0) {
            return Err(LabError::DegenerateDomain(format!(
                "height {} is not a whole number of spacings {h}",
                bbox[3] - bbox[1]
            )));
        }
        if ny < 3 {
            return Err(LabError::DegenerateDomain("fewer than 3 rows".into()));
        }
        let mut grid = Grid {
            domain,
            resolution,
            nx,
            ny,
            x0: bbox[0],
            y0: bbox[1],
            x1: bbox[2],
            y1: bbox[3],
            h,
            kinds: vec![NodeKind::Exterior; nx * ny],
            interior: Vec::new(),
            boundary: Vec::new(),
            unknown_index: vec![usize::MAX; nx * ny],
            weights: vec![0.0; nx * ny],
            normals: Vec::new(),
            boundary_distance: OnceLock::new(),
        };
        grid.classify()?;
        grid.compute_weights();
        grid.compute_normals();
        Ok(grid)
    }

    fn classify(&mut self) -> Result<()> {
        let (nx, ny) = (self.nx, self.ny);
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                let (x, y) = self.coords(k);
                if self.domain.contains_open(x, y) {
                    self.kinds[k] = NodeKind::Interior;
                }
            }
        }
        for k in 0..nx * ny {
            if self.kinds[k] == NodeKind::Interior {
                continue;
            }
            let touches = self.neighbors8(k).any(|n| self.kinds[n] == NodeKind::Interior);
            if touches {
                self.kinds[k] = NodeKind::Boundary;
            }
        }
        // rectangle edge nodes are boundary even where no interior neighbour exists
        if self.domain.is_rectangular() {
            for k in 0..nx * ny {
                if self.kinds[k] == NodeKind::Exterior {
                    self.kinds[k] = NodeKind::Boundary;
                }
            }
        }
        for k in 0..nx * ny {
            match self.kinds[k] {
                NodeKind::Interior => {
                    self.unknown_index[k] = self.interior.len();
                    self.interior.push(k);
                }
                NodeKind::Boundary => self.boundary.push(k),
                NodeKind::Exterior => {}
            }
        }
        if self.interior.is_empty() {
            return Err(LabError::DegenerateDomain("no interior nodes".into()));
        }
        Ok(())
    }

    fn compute_weights(&mut self) {
        let h = self.h;
        for k in 0..self.nx * self.ny {
            if self.kinds[k] == NodeKind::Exterior {
                continue;
            }
            let (x, y) = self.coords(k);
            let frac = if self.domain.is_rectangular() {
                let fx = clip_len(x - 0.5 * h, x + 0.5 * h, self.x0, self.x1) / h;
                let fy = clip_len(y - 0.5 * h, y + 0.5 * h, self.y0, self.y1) / h;
                fx * fy
            } else {
                let s = CELL_SUBSAMPLES;
                let mut inside = 0usize;
                for a in 0..s {
                    for b in 0..s {
                        let px = x - 0.5 * h + (a as f64 + 0.5) * h / s as f64;
                        let py = y - 0.5 * h + (b as f64 + 0.5) * h / s as f64;
                        if self.domain.contains_closed(px, py) {
                            inside += 1;
                        }
                    }
                }
                inside as f64 / (s * s) as f64
            };
            self.weights[k] = frac * h * h;
        }
    }

    fn compute_normals(&mut self) {
        let mut normals = Vec::with_capacity(self.boundary.len());
        for &k in &self.boundary {
            let (x, y) = self.coords(k);
            let (mut nx, mut ny) = (0.0, 0.0);
            for n in self.neighbors8(k) {
                if self.kinds[n] == NodeKind::Interior {
                    let (px, py) = self.coords(n);
                    nx += x - px;
                    ny += y - py;
                }
            }
            if nx == 0.0 && ny == 0.0 {
                // rectangle corner or isolated edge node: point away from the centre
                let [x0, y0, x1, y1] = [self.x0, self.y0, self.x1, self.y1];
                nx = x - 0.5 * (x0 + x1);
                ny = y - 0.5 * (y0 + y1);
            }
            let norm = nx.hypot(ny);
            normals.push((nx / norm, ny / norm));
        }
        self.normals = normals;
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn resolution(&self) -> usize {
        self.resolution
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> (f64, f64) {
        (self.x0, self.y0)
    }
    pub fn kind(&self, k: usize) -> NodeKind {
        self.kinds[k]
    }
    pub fn is_interior(&self, k: usize) -> bool {
        self.kinds[k] == NodeKind::Interior
    }
    pub fn is_boundary(&self, k: usize) -> bool {
        self.kinds[k] == NodeKind::Boundary
    }
    pub fn in_domain(&self, k: usize) -> bool {
        self.kinds[k] != NodeKind::Exterior
    }
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }
    /// Domain nodes (interior and boundary) in index order.
    pub fn domain_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.in_domain(k))
    }
    /// Outward unit normals, aligned with [`Grid::boundary_nodes`].
    pub fn boundary_normals(&self) -> &[(f64, f64)] {
        &self.normals
    }
    /// Index of an interior node among the unknowns.
    pub fn unknown_index(&self, k: usize) -> Option<usize> {
        let u = self.unknown_index[k];
        (u != usize::MAX).then_some(u)
    }
    /// Quadrature weight: `h^2` times the fraction of the dual cell in the closed domain.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.ij(k);
        (self.x_at(i), self.y_at(j))
    }

    pub fn x_at(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.x1
        } else {
            self.x0 + (self.x1 - self.x0) * i as f64 / (self.nx - 1) as f64
        }
    }

    pub fn y_at(&self, j: usize) -> f64 {
        if j == self.ny - 1 {
            self.y1
        } else {
            self.y0 + (self.y1 - self.y0) * j as f64 / (self.ny - 1) as f64
        }
    }

    /// Nearest grid node to a point, if the point lies in the carrying rectangle.
    pub fn nearest_node(&self, x: f64, y: f64) -> Option<usize> {
        let fi = ((x - self.x0) / self.h).round();
        let fj = ((y - self.y0) / self.h).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some(self.index(fi as usize, fj as usize))
    }

    pub fn neighbors4(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.offsets(k, &[(1, 0), (-1, 0), (0, 1), (0, -1)])
    }

    pub fn neighbors8(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.offsets(k, &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)])
    }

    fn offsets<'a>(&'a self, k: usize, offs: &'a [(i64, i64)]) -> impl Iterator<Item = usize> + 'a {
        let (i, j) = self.ij(k);
        offs.iter().filter_map(move |&(di, dj)| self.shift(i, j, di, dj))
    }

    /// Node at `(i + di, j + dj)` if it exists on the grid.
    pub fn shift(&self, i: usize, j: usize, di: i64, dj: i64) -> Option<usize> {
        let ni = i as i64 + di;
        let nj = j as i64 + dj;
        if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
            None
        } else {
            Some(self.index(ni as usize, nj as usize))
        }
    }

    /// Distance from each node to the nearest boundary node (zero off the interior).
    pub fn boundary_distance(&self) -> &[f64] {
        self.boundary_distance.get_or_init(|| {
            let bpts: Vec<(f64, f64)> = self.boundary.iter().map(|&b| self.coords(b)).collect();
            (0..self.len())
                .map(|k| {
                    if !self.is_interior(k) {
                        return 0.0;
                    }
                    let (x, y) = self.coords(k);
                    bpts.iter()
                        .map(|&(bx, by)| (x - bx).powi(2) + (y - by).powi(2))
                        .fold(f64::INFINITY, f64::min)
                        .sqrt()
                })
                .collect()
        })
    }

    /// Distance from an arbitrary point to the nearest boundary node.
    pub fn distance_to_boundary(&self, x: f64, y: f64) -> f64 {
        self.boundary
            .iter()
            .map(|&b| {
                let (bx, by) = self.coords(b);
                (x - bx).powi(2) + (y - by).powi(2)
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta {
            domain: self.domain.clone(),
            resolution: self.resolution,
            nx: self.nx,
            ny: self.ny,
            spacing: self.h,
            interior_nodes: self.interior.len(),
            boundary_nodes: self.boundary.len(),
        }
    }
}

fn clip_len(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    (b.min(hi) - a.max(lo)).max(0.0)
}
