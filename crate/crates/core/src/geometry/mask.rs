use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{LabError, Result};

/// What a node subset stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskRole {
    /// Whole closed domain (interior and boundary nodes).
    Domain,
    /// Nodes at distance at least delta from the boundary.
    InteriorMargin,
    /// Nodes within delta of the boundary, boundary included.
    Collar,
    /// Observation region.
    Observation,
    /// Sub-domain used by the sub-domain stability regime.
    Subdomain,
    BoundaryPositive,
    BoundaryZero,
    BoundaryArc,
    /// Nodes where a positivity floor was active.
    FloorActive,
}

/// Subset of the nodes of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    role: MaskRole,
    member: Vec<bool>,
    nodes: Vec<usize>,
}

impl Mask {
    pub fn from_predicate(grid: &Grid, role: MaskRole, pred: impl Fn(usize) -> bool) -> Mask {
        let member: Vec<bool> = (0..grid.len()).map(pred).collect();
        let nodes = member.iter().enumerate().filter_map(|(k, &m)| m.then_some(k)).collect();
        Mask { role, member, nodes }
    }

    /// All domain nodes.
    pub fn domain(grid: &Grid) -> Mask {
        Mask::from_predicate(grid, MaskRole::Domain, |k| grid.in_domain(k))
    }

    /// Domain nodes whose coordinates fall in the closed box `[x0, x1] x [y0, y1]`.
    pub fn rectangle(grid: &Grid, role: MaskRole, x0: f64, y0: f64, x1: f64, y1: f64) -> Mask {
        let eps = 1e-9 * grid.spacing();
        Mask::from_predicate(grid, role, |k| {
            let (x, y) = grid.coords(k);
            grid.in_domain(k) && x >= x0 - eps && x <= x1 + eps && y >= y0 - eps && y <= y1 + eps
        })
    }

    pub fn role(&self) -> MaskRole {
        self.role
    }
    pub fn with_role(mut self, role: MaskRole) -> Mask {
        self.role = role;
        self
    }
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }
    pub fn contains(&self, k: usize) -> bool {
        self.member[k]
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    /// Number of grid nodes the mask was built over.
    pub fn grid_len(&self) -> usize {
        self.member.len()
    }

    pub fn union(&self, other: &Mask) -> Mask {
        let member: Vec<bool> = self.member.iter().zip(&other.member).map(|(a, b)| *a || *b).collect();
        let nodes = member.iter().enumerate().filter_map(|(k, &m)| m.then_some(k)).collect();
        Mask { role: self.role, member, nodes }
    }

    pub fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(LabError::EmptyMask(format!("{:?}", self.role)))
        } else {
            Ok(())
        }
    }
}

/// Interior nodes at distance at least `delta` from the discrete boundary.
pub fn interior_margin(grid: &Grid, delta: f64) -> Result<Mask> {
    if !(delta > 0.0) {
        return Err(LabError::InvalidArgument(format!("margin {delta} must be positive")));
    }
    let dist = grid.boundary_distance();
    let tol = 1e-9 * grid.spacing();
    let m = Mask::from_predicate(grid, MaskRole::InteriorMargin, |k| grid.is_interior(k) && dist[k] >= delta - tol);
    if m.is_empty() {
        return Err(LabError::EmptyMask(format!("interior margin {delta}")));
    }
    Ok(m)
}

/// Domain nodes within `delta` of the boundary (boundary nodes included).
pub fn collar(grid: &Grid, delta: f64) -> Mask {
    let dist = grid.boundary_distance();
    let tol = 1e-9 * grid.spacing();
    Mask::from_predicate(grid, MaskRole::Collar, |k| {
        grid.is_boundary(k) || (grid.is_interior(k) && dist[k] <= delta + tol)
    })
}
