//! Domains, grids, masks, disk/circle quadrature, geodesic distances, and
//! the ball constructions along paths and inside boundary cones.

mod chain;
mod domain;
mod geodesic;
mod grid;
mod mask;
mod quadrature;

pub use chain::{
    ball_chain, ball_chain_along_path, cone_ball_sequence, ChainReport, ConeBall, ConeSequence, ConeSpec, Polyline,
};
pub use domain::Domain;
pub use geodesic::{geodesic_diameter, geodesic_distance, geodesic_path, shortest_paths, DiameterEstimate};
pub use grid::{Grid, GridMeta, NodeKind};
pub use mask::{collar, interior_margin, Mask, MaskRole};
pub use quadrature::{ball_integral, ball_l2_norm, sphere_integral, Ball, BallQuadrature, SphereQuadrature};
