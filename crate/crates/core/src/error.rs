use thiserror::Error;

/// Errors produced by the laboratory. Every variant maps to a stable
/// machine-readable code (see [`LabError::code`]) and a CLI exit status.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("resolution {0} is below the minimum of 9 nodes per side")]
    ResolutionTooSmall(usize),
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),
    #[error("mask is empty: {0}")]
    EmptyMask(String),
    #[error("grid mismatch between fields")]
    GridMismatch,
    #[error("ball centered at ({x:.6}, {y:.6}) with radius {r:.6} leaves the domain")]
    BallOutsideDomain { x: f64, y: f64, r: f64 },
    #[error("point ({x:.6}, {y:.6}) is not an interior node")]
    NotInterior { x: f64, y: f64 },
    #[error("nodes are not connected through the interior")]
    Disconnected,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("path leaves the interior margin at ({x:.6}, {y:.6})")]
    PathOutsideMargin { x: f64, y: f64 },
    #[error("operator is (near) singular: smallest eigenvalue magnitude {lambda:.3e} below {threshold:.3e}")]
    Resonance { lambda: f64, threshold: f64 },
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },
    #[error("eigenvalue iteration stagnated after {0} iterations")]
    EigenStagnation(usize),
    #[error("boundary data is identically zero")]
    HIdenticallyZero,
    #[error("potential is negative at node {node}; internal data square root undefined")]
    NegativePotential { node: usize },
    #[error("boundary data below floor {floor:.3e} at boundary node {node} ({x:.6}, {y:.6})")]
    BoundaryBelowFloor { node: usize, x: f64, y: f64, floor: f64 },
    #[error("fixed-point iteration did not converge in {iterations} iterations (last update {update:.3e})")]
    FixedPointNonConvergence { iterations: usize, update: f64 },
    #[error("H vanishes at radius {r:.4e} (value {value:.3e}); input is out of class")]
    VanishingH { r: f64, value: f64 },
    #[error("vanishing ball norm at radius {0:.4e}")]
    VanishingNorm(f64),
    #[error("insufficient records: {0}")]
    InsufficientRecords(String),
    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),
    #[error("degenerate family: {0}")]
    DegenerateFamily(String),
    #[error("potential not admissible: {0}")]
    NotAdmissible(String),
    #[error("expression error: {0}")]
    Expression(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("config hash mismatch: data produced with {found}, config is {expected}")]
    ConfigHashMismatch { expected: String, found: String },
    #[error("io error: {0}")]
    Io(String),
}

impl LabError {
    /// Stable error code used in machine-readable error reports.
    pub fn code(&self) -> &'static str {
        match self {
            LabError::ResolutionTooSmall(_) => "RESOLUTION_TOO_SMALL",
            LabError::DegenerateDomain(_) => "DEGENERATE_DOMAIN",
            LabError::EmptyMask(_) => "EMPTY_MASK",
            LabError::GridMismatch => "GRID_MISMATCH",
            LabError::BallOutsideDomain { .. } => "BALL_OUTSIDE_DOMAIN",
            LabError::NotInterior { .. } => "NOT_INTERIOR",
            LabError::Disconnected => "DISCONNECTED",
            LabError::InvalidArgument(_) => "INVALID_ARGUMENT",
            LabError::PathOutsideMargin { .. } => "PATH_OUTSIDE_MARGIN",
            LabError::Resonance { .. } => "RESONANCE",
            LabError::SolverNonConvergence { .. } => "SOLVER_NON_CONVERGENCE",
            LabError::EigenStagnation(_) => "EIGEN_STAGNATION",
            LabError::HIdenticallyZero => "H_IDENTICALLY_ZERO",
            LabError::NegativePotential { .. } => "NEGATIVE_POTENTIAL",
            LabError::BoundaryBelowFloor { .. } => "BOUNDARY_BELOW_FLOOR",
            LabError::FixedPointNonConvergence { .. } => "FIXED_POINT_NON_CONVERGENCE",
            LabError::VanishingH { .. } => "VANISHING_H",
            LabError::VanishingNorm(_) => "VANISHING_NORM",
            LabError::InsufficientRecords(_) => "INSUFFICIENT_RECORDS",
            LabError::DegenerateRegression(_) => "DEGENERATE_REGRESSION",
            LabError::DegenerateFamily(_) => "DEGENERATE_FAMILY",
            LabError::NotAdmissible(_) => "NOT_ADMISSIBLE",
            LabError::Expression(_) => "EXPRESSION_ERROR",
            LabError::Config(_) => "CONFIG_ERROR",
            LabError::MissingInput(_) => "MISSING_INPUT",
            LabError::ConfigHashMismatch { .. } => "CONFIG_HASH_MISMATCH",
            LabError::Io(_) => "IO_ERROR",
        }
    }

    /// Process exit status: 2 validation, 3 numerical failure, 4 missing input.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Resonance { .. }
            | LabError::SolverNonConvergence { .. }
            | LabError::EigenStagnation(_)
            | LabError::FixedPointNonConvergence { .. }
            | LabError::VanishingH { .. }
            | LabError::VanishingNorm(_)
            | LabError::DegenerateRegression(_)
            | LabError::DegenerateFamily(_)
            | LabError::InsufficientRecords(_) => 3,
            LabError::MissingInput(_) => 4,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
