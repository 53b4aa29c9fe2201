//! Unique-continuation diagnostics: the quantities `H`, `D`, `K`, the
//! frequency `N = rD/H`, vanishing-order fits, three-ball fits and their
//! propagation along ball chains, the boundary lower-bound probe and the
//! weighted interpolation audit.

mod boundary;
mod quantities;
mod samples;
mod threeball;

pub use boundary::{
    boundary_lower_bound_probe, weight_nondegeneracy, weighted_interpolation_audit, BoundaryProbe, InterpolationAudit,
    InterpolationRecord, ProbeRecord,
};
pub use quantities::{
    d_quantity, default_radii, delta0, frequency, frequency_profile, h_quantity, k_quantity, unit_disk_lambda1,
    vanishing_order_fit, Delta0, FrequencyProfile, VanishingOrderFit,
};
pub use samples::{in_class_family, place_balls, test_function_family, InClassSample, SampleDescriptor};
pub use threeball::{
    audit_three_ball, propagation_of_smallness, three_ball_check, three_ball_exponent_fit, BallSample, ChainLink,
    HeldOutAudit, PropagationReport, ThreeBallFit, ThreeBallRecord,
};
