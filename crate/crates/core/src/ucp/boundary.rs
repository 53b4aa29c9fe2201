use serde::{Deserialize, Serialize};

use crate::elliptic::{default_holder_cutoff, holder_norm, norm_l1, norm_linf};
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::fit::envelope_fit;
use crate::geometry::{ball_l2_norm, Ball, ConeSpec, Mask};

const AUDIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub delta: f64,
    pub center: (f64, f64),
    /// `‖u‖_{L²(B(x̃ + δξ, δ))}`
    pub norm: f64,
    /// smallest `c ≥ 0` with `exp(-exp(c/δ)) ≤ norm`
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProbe {
    pub cone: ConeSpec,
    /// `‖u‖_{L∞(Γ)}`
    pub boundary_sup: f64,
    pub records: Vec<ProbeRecord>,
    pub empirical_c: f64,
}

/// Ball norms at `x̃ + δξ` with radius `δ` for each `δ`, and the implied
/// constants `c(δ) = max(0, δ ln ln(1/‖u‖))`.
pub fn boundary_lower_bound_probe(u: &ScalarField, cone: &ConeSpec, deltas: &[f64]) -> Result<BoundaryProbe> {
    cone.validate()?;
    if deltas.is_empty() {
        return Err(LabError::InvalidArgument("empty delta grid".into()));
    }
    let g = u.grid();
    let boundary_sup = g.boundary_nodes().iter().map(|&k| u.get(k).abs()).fold(0.0, f64::max);
    let mut records = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if !(delta > 0.0) {
            return Err(LabError::InvalidArgument(format!("delta {delta} must be positive")));
        }
        let center = (cone.apex.0 + delta * cone.axis.0, cone.apex.1 + delta * cone.axis.1);
        let norm = ball_l2_norm(u, &Ball::new(center.0, center.1, delta))?;
        let c = if norm <= 0.0 {
            f64::INFINITY
        } else if norm < 1.0 {
            (delta * (1.0 / norm).ln().ln()).max(0.0)
        } else {
            0.0
        };
        records.push(ProbeRecord { delta, center, norm, c });
    }
    let empirical_c = records.iter().map(|r| r.c).fold(0.0, f64::max);
    Ok(BoundaryProbe { cone: *cone, boundary_sup, records, empirical_c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRecord {
    pub index: usize,
    pub held_out: bool,
    /// `‖f‖_{L∞(ω)}`
    pub sup_omega: f64,
    /// `‖f‖_{C^{0,α}(Ω)}`
    pub holder: f64,
    /// `‖f u²‖_{L¹(Ω)}`
    pub weighted_l1: f64,
    /// `log C + μ log(L/H) - log(W/H)`; negative means violated
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationAudit {
    pub alpha: f64,
    pub mu: f64,
    pub c: f64,
    pub records: Vec<InterpolationRecord>,
    /// identically zero functions, for which the inequality is trivial
    pub skipped_zero: usize,
    pub violations: usize,
    pub held_out_count: usize,
}

/// Fits the smallest `(C, μ)` with
/// `‖f‖_{L∞(ω)} ≤ C ‖f‖^{1-μ}_{C^{0,α}} ‖f u²‖^μ_{L¹}` over `train`, then
/// counts violations on `held_out`.
pub fn weighted_interpolation_audit(
    train: &[ScalarField],
    held_out: &[ScalarField],
    u: &ScalarField,
    omega: &Mask,
    alpha: f64,
) -> Result<InterpolationAudit> {
    let g = u.grid();
    let domain = Mask::domain(g);
    let cutoff = default_holder_cutoff(g);
    let weight = u.map(|v| v * v);
    let mut records = Vec::new();
    let mut skipped_zero = 0;
    for (index, (f, is_held)) in train.iter().map(|f| (f, false)).chain(held_out.iter().map(|f| (f, true))).enumerate()
    {
        f.check_same_grid(u)?;
        let holder = holder_norm(f, &domain, alpha, cutoff)?;
        if holder == 0.0 {
            skipped_zero += 1;
            continue;
        }
        let sup_omega = norm_linf(f, omega)?;
        let weighted_l1 = norm_l1(&f.zip_map(&weight, |a, b| a * b)?, &domain)?;
        records.push(InterpolationRecord { index, held_out: is_held, sup_omega, holder, weighted_l1, slack: 0.0 });
    }
    let usable: Vec<&InterpolationRecord> =
        records.iter().filter(|r| !r.held_out && r.sup_omega > 0.0 && r.weighted_l1 > 0.0).collect();
    if usable.is_empty() {
        return Err(LabError::DegenerateFamily("no training function with positive norms".into()));
    }
    let x: Vec<f64> = usable.iter().map(|r| (r.weighted_l1 / r.holder).ln()).collect();
    let y: Vec<f64> = usable.iter().map(|r| (r.sup_omega / r.holder).ln()).collect();
    let env = envelope_fit(&x, &y, 0.0, 1.0)?;
    let (mu, log_c) = (env.slope, env.offset);
    for r in &mut records {
        r.slack = if r.sup_omega == 0.0 {
            f64::INFINITY
        } else if r.weighted_l1 == 0.0 {
            f64::NEG_INFINITY
        } else {
            log_c + mu * (r.weighted_l1 / r.holder).ln() - (r.sup_omega / r.holder).ln()
        };
    }
    let held: Vec<&InterpolationRecord> = records.iter().filter(|r| r.held_out).collect();
    Ok(InterpolationAudit {
        alpha,
        mu,
        c: log_c.exp(),
        violations: held.iter().filter(|r| r.slack < -AUDIT_TOL).count(),
        held_out_count: held.len(),
        records,
        skipped_zero,
    })
}

/// `min ‖u‖_{L²(B(x, r))}` over a lattice of centers (every `stride`-th node)
/// whose balls fit in the domain.
pub fn weight_nondegeneracy(u: &ScalarField, r: f64, stride: usize) -> Result<f64> {
    let g = u.grid();
    let stride = stride.max(1);
    let mut best = f64::INFINITY;
    for k in g.domain_nodes() {
        let (i, j) = g.ij(k);
        if i % stride != 0 || j % stride != 0 {
            continue;
        }
        let (x, y) = g.coords(k);
        if g.distance_to_boundary(x, y) < r {
            continue;
        }
        best = best.min(ball_l2_norm(u, &Ball::new(x, y, r))?);
    }
    if best.is_infinite() {
        return Err(LabError::InvalidArgument(format!("no ball of radius {r} fits in the domain")));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, Grid, MaskRole};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn square(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Domain::UnitSquare, n).unwrap())
    }

    fn bottom_cone() -> ConeSpec {
        ConeSpec { apex: (0.5, 0.0), axis: (0.0, 1.0), half_angle: PI / 6.0, length: 0.4 }
    }

    #[test]
    fn pointwise_floor_bounds_ball_norm() {
        let g = square(129);
        let u = ScalarField::from_fn(g, |x, y| x.cos() * y.cos());
        let deltas = [0.025, 0.05, 0.1, 0.2];
        let p = boundary_lower_bound_probe(&u, &bottom_cone(), &deltas).unwrap();
        let floor = 1f64.cos().powi(2);
        for r in &p.records {
            assert!(r.norm >= 0.99 * floor * PI.sqrt() * r.delta);
            assert!(r.c < 0.25, "{r:?}");
        }
        let tiny = boundary_lower_bound_probe(&u.scale(1e-6), &bottom_cone(), &deltas).unwrap();
        for (a, b) in p.records.iter().zip(&tiny.records) {
            // c(δ) = δ ln(ln(1/‖u‖) + ln 1e6)
            let want = a.delta * ((1.0 / a.norm).ln() + 1e6f64.ln()).ln();
            assert!((b.c - want).abs() < 1e-9 && b.c > a.c);
        }
        assert!(tiny.empirical_c > p.empirical_c);
    }

    #[test]
    fn probe_ball_leaving_domain() {
        let g = square(65);
        let u = ScalarField::constant(g, 1.0);
        let cone = ConeSpec { apex: (0.05, 0.0), axis: (0.0, 1.0), half_angle: PI / 6.0, length: 0.4 };
        assert!(matches!(boundary_lower_bound_probe(&u, &cone, &[0.2]), Err(LabError::BallOutsideDomain { .. })));
    }

    #[test]
    fn interpolation_trivial_cases() {
        let g = square(33);
        let omega = Mask::rectangle(&g, MaskRole::Observation, 0.25, 0.25, 0.75, 0.75);
        let one = ScalarField::constant(g.clone(), 1.0);
        let zero = ScalarField::zeros(g.clone());
        let a =
            weighted_interpolation_audit(std::slice::from_ref(&one), std::slice::from_ref(&zero), &one, &omega, 0.5)
                .unwrap();
        assert!((a.c - 1.0).abs() < 1e-12);
        assert_eq!(a.violations, 0);
        assert_eq!(a.skipped_zero, 1);
        assert!(weighted_interpolation_audit(&[zero], &[], &one, &omega, 0.5).is_err());
    }

    #[test]
    fn nondegenerate_weight() {
        let g = square(65);
        let u = ScalarField::from_fn(g.clone(), |x, y| x.cos() * y.cos());
        let m = weight_nondegeneracy(&u, 0.1, 4).unwrap();
        assert!(m >= 0.99 * 1f64.cos().powi(2) * PI.sqrt() * 0.1);
        let flat = ScalarField::from_fn(g, |x, _| (x - 0.5).max(0.0));
        assert_eq!(weight_nondegeneracy(&flat, 0.1, 4).unwrap(), 0.0);
    }
}
