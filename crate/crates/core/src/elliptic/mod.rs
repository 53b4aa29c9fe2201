//! The operator `A_V = -Δ_h - V` with Dirichlet conditions, its linear solves
//! and spectral estimates, norms, and potential-class membership checks.
//!
//! Linear systems are solved by a banded `L D L^T` factorization with
//! iterative refinement; CG and MINRES serve as fallbacks.

mod band;
mod classes;
pub mod krylov;
mod norms;
mod operator;
mod solve;

pub use classes::{
    check_class_d0, check_class_d1, lipschitz_norm, ClassParameters, D0Report, D1Report, PotentialClassSpec,
};
pub use norms::{
    default_holder_cutoff, forward_gradient, h2_surrogate, holder_norm, holder_seminorm, norm_h1, norm_h1_seminorm,
    norm_l1, norm_l2, norm_linf,
};
pub use operator::{assemble_operator, DiscreteOperator};
pub use solve::{
    inverse_norm_estimate, resonance_threshold, smallest_eigenvalue, solve_dirichlet, solve_with_source, SOLVE_TOL,
};
