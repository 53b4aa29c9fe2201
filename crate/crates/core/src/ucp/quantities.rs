use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::elliptic::{forward_gradient, smallest_eigenvalue, DiscreteOperator};
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::fit::linear_fit;
use crate::geometry::{Ball, BallQuadrature, Domain, Grid, SphereQuadrature};

/// Absolute level below which `H` counts as vanishing.
const H_FLOOR: f64 = 1e-14;
/// Relative quadrature slack in the `K ≤ rH` audit.
const KRH_SLACK: f64 = 1e-6;

/// `∫_{S(x0,r)} u²`.
pub fn h_quantity(u: &ScalarField, x0: (f64, f64), r: f64) -> Result<f64> {
    let q = SphereQuadrature::new(u.grid(), &Ball::new(x0.0, x0.1, r))?;
    Ok(q.integrate_square(u.values()))
}

/// `∫_{B(x0,r)} u²`.
pub fn k_quantity(u: &ScalarField, x0: (f64, f64), r: f64) -> Result<f64> {
    let q = BallQuadrature::new(u.grid(), &Ball::new(x0.0, x0.1, r))?;
    let v = u.values();
    Ok(q.integrate_with(|k| v[k] * v[k]))
}

fn d_with(u: &ScalarField, v: &ScalarField, grad: &(Vec<f64>, Vec<f64>), x0: (f64, f64), r: f64) -> Result<f64> {
    let q = BallQuadrature::new(u.grid(), &Ball::new(x0.0, x0.1, r))?;
    let (gx, gy) = grad;
    Ok(q.integrate_with(|k| gx[k] * gx[k] + gy[k] * gy[k] + v.get(k) * u.get(k) * u.get(k)))
}

/// `∫_{B(x0,r)} |∇u|² + V u²` with the forward-difference gradient.
pub fn d_quantity(u: &ScalarField, v: &ScalarField, x0: (f64, f64), r: f64) -> Result<f64> {
    u.check_same_grid(v)?;
    d_with(u, v, &forward_gradient(u), x0, r)
}

fn ratio(r: f64, d: f64, h: f64) -> Result<f64> {
    if !(h > H_FLOOR) {
        return Err(LabError::VanishingH { r, value: h });
    }
    Ok(r * d / h)
}

/// Frequency `N = rD/H`.
pub fn frequency(u: &ScalarField, v: &ScalarField, x0: (f64, f64), r: f64) -> Result<f64> {
    let d = d_quantity(u, v, x0, r)?;
    ratio(r, d, h_quantity(u, x0, r)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta0 {
    /// `√(λ₁(B(0,1)) / V0)`
    pub rho0: f64,
    /// `√((n-1)/V0)` with `n = 2`
    pub rho1: f64,
    pub delta: f64,
    pub value: f64,
}

pub fn delta0(v_upper: f64, delta: f64, lambda1: f64) -> Result<Delta0> {
    if !(v_upper > 0.0 && delta > 0.0 && lambda1 > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "delta0 needs positive inputs, got V0={v_upper}, delta={delta}, lambda1={lambda1}"
        )));
    }
    let rho0 = (lambda1 / v_upper).sqrt();
    let rho1 = (1.0 / v_upper).sqrt();
    Ok(Delta0 { rho0, rho1, delta, value: rho0.min(rho1).min(delta) })
}

/// First Dirichlet eigenvalue of the unit disk from the discrete operator at
/// 257 nodes per side, computed once per process.
pub fn unit_disk_lambda1() -> Result<f64> {
    static CACHE: OnceLock<Result<f64>> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            let domain = Domain::Disk { cx: 0.0, cy: 0.0, radius: 1.0, bbox: None };
            let g = Arc::new(Grid::new(domain, 257)?);
            smallest_eigenvalue(&DiscreteOperator::assemble(&ScalarField::zeros(g)))
        })
        .clone()
}

/// 12 log-spaced radii in `[4h, 0.9 dist(x0, Γ)]`.
pub fn default_radii(grid: &Grid, x0: (f64, f64)) -> Result<Vec<f64>> {
    let lo = 4.0 * grid.spacing();
    let hi = 0.9 * grid.distance_to_boundary(x0.0, x0.1);
    if !(hi > lo) {
        return Err(LabError::InvalidArgument(format!(
            "center ({:.4}, {:.4}) is too close to the boundary for a radius sweep",
            x0.0, x0.1
        )));
    }
    let n = 12;
    Ok((0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanishingOrderFit {
    /// slope of `log ‖u‖_{L²(B(x0,r))}` against `log r`
    pub c_fit: f64,
    /// `exp` of the intercept
    pub constant: f64,
    pub r2: f64,
    /// `min_r ‖u‖_{L²(B)} / r^{c_fit}`
    pub min_ratio: f64,
}

fn fit_norms(radii: &[f64], norms: &[f64]) -> Result<VanishingOrderFit> {
    if radii.len() < 5 {
        return Err(LabError::InsufficientRecords(format!("{} radii, need at least 5", radii.len())));
    }
    if let Some((r, _)) = radii.iter().zip(norms).find(|(_, n)| !(**n > 0.0)) {
        return Err(LabError::VanishingNorm(*r));
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let f = linear_fit(&lx, &ly)?;
    let min_ratio = radii.iter().zip(norms).map(|(r, n)| n / r.powf(f.slope)).fold(f64::INFINITY, f64::min);
    Ok(VanishingOrderFit { c_fit: f.slope, constant: f.intercept.exp(), r2: f.r2, min_ratio })
}

pub fn vanishing_order_fit(u: &ScalarField, x0: (f64, f64), radii: &[f64]) -> Result<VanishingOrderFit> {
    let norms = radii.iter().map(|&r| k_quantity(u, x0, r).map(|k| k.max(0.0).sqrt())).collect::<Result<Vec<_>>>()?;
    fit_norms(radii, &norms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub center: (f64, f64),
    pub radii: Vec<f64>,
    pub h: Vec<f64>,
    pub d: Vec<f64>,
    pub k: Vec<f64>,
    pub n: Vec<f64>,
    pub delta0: f64,
    /// `K ≤ rH` verdict per radius
    pub k_le_rh: Vec<bool>,
    pub k_rh_violations: usize,
    /// radius at which the normalizing frequency is taken
    pub reference_radius: f64,
    pub reference_frequency: f64,
    /// `sup_r N / max(N(reference), 1)`
    pub empirical_c: f64,
    pub vanishing: Option<VanishingOrderFit>,
}

/// Evaluates `H`, `D`, `K`, `N` on a radius grid below `δ0` and audits `K ≤ rH`.
/// The normalizing frequency is taken at `δ0` when that ball fits, else at the
/// largest radius of the grid.
pub fn frequency_profile(
    u: &ScalarField,
    v: &ScalarField,
    x0: (f64, f64),
    radii: &[f64],
    delta0: f64,
) -> Result<FrequencyProfile> {
    u.check_same_grid(v)?;
    if radii.is_empty() {
        return Err(LabError::InvalidArgument("radius grid is empty".into()));
    }
    if radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > 0.0) {
        return Err(LabError::InvalidArgument("radii must be positive and strictly increasing".into()));
    }
    let rmax = *radii.last().expect("nonempty");
    if rmax >= delta0 {
        return Err(LabError::InvalidArgument(format!("radius {rmax} is not below delta0 = {delta0}")));
    }
    let grad = forward_gradient(u);
    let (mut hs, mut ds, mut ks, mut ns, mut ok) = (vec![], vec![], vec![], vec![], vec![]);
    for &r in radii {
        let h = h_quantity(u, x0, r)?;
        let d = d_with(u, v, &grad, x0, r)?;
        let k = k_quantity(u, x0, r)?;
        let n = ratio(r, d, h)?;
        ok.push(k <= r * h * (1.0 + KRH_SLACK));
        hs.push(h);
        ds.push(d);
        ks.push(k);
        ns.push(n);
    }
    let fits = u.grid().distance_to_boundary(x0.0, x0.1) > delta0;
    let (reference_radius, reference_frequency) = if fits {
        let h = h_quantity(u, x0, delta0)?;
        (delta0, ratio(delta0, d_with(u, v, &grad, x0, delta0)?, h)?)
    } else {
        (rmax, *ns.last().expect("nonempty"))
    };
    let sup_n = ns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norms: Vec<f64> = ks.iter().map(|k| k.max(0.0).sqrt()).collect();
    let vanishing = if radii.len() >= 5 { fit_norms(radii, &norms).ok() } else { None };
    Ok(FrequencyProfile {
        center: x0,
        radii: radii.to_vec(),
        k_rh_violations: ok.iter().filter(|b| !**b).count(),
        k_le_rh: ok,
        h: hs,
        d: ds,
        k: ks,
        n: ns,
        delta0,
        reference_radius,
        reference_frequency,
        empirical_c: sup_n / reference_frequency.max(1.0),
        vanishing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Domain::UnitSquare, n).unwrap())
    }

    #[test]
    fn constant_field_quantities() {
        let g = square(129);
        let one = ScalarField::constant(g.clone(), 1.0);
        let v = ScalarField::constant(g.clone(), 2.0);
        let (c, r) = ((0.5, 0.5), 0.3);
        assert!((h_quantity(&one, c, r).unwrap() / (2.0 * PI * r) - 1.0).abs() < 1e-3);
        assert!((k_quantity(&one, c, r).unwrap() / (PI * r * r) - 1.0).abs() < 2e-3);
        let d = d_quantity(&one, &v, c, r).unwrap();
        assert!((d - 2.0 * k_quantity(&one, c, r).unwrap()).abs() < 1e-12);
        assert_eq!(frequency(&one, &ScalarField::zeros(g), c, r).unwrap(), 0.0);
    }

    #[test]
    fn linear_field_has_unit_frequency() {
        let g = square(129);
        let c = (0.5, 0.5);
        let u = ScalarField::from_fn(g.clone(), |x, _| x - c.0);
        let zero = ScalarField::zeros(g);
        for r in [0.1, 0.2, 0.3, 0.4] {
            assert!((h_quantity(&u, c, r).unwrap() / (PI * r.powi(3)) - 1.0).abs() < 0.02);
            assert!((d_quantity(&u, &zero, c, r).unwrap() / (PI * r * r) - 1.0).abs() < 0.02);
            let n = frequency(&u, &zero, c, r).unwrap();
            assert!((n - 1.0).abs() < 0.03, "{n}");
        }
        let scaled = u.scale(37.5);
        let (a, b) = (frequency(&u, &zero, c, 0.2).unwrap(), frequency(&scaled, &zero, c, 0.2).unwrap());
        assert!((a - b).abs() <= 1e-10 * a);
    }

    /// Polar midpoint reference for `cos x cos y` on a disk and its circle.
    fn polar_reference(c: (f64, f64), r: f64) -> (f64, f64, f64) {
        let f = |x: f64, y: f64| x.cos() * y.cos();
        let grad2 = |x: f64, y: f64| (x.sin() * y.cos()).powi(2) + (x.cos() * y.sin()).powi(2);
        let (nr, nt) = (400, 800);
        let (mut h, mut k, mut d) = (0.0, 0.0, 0.0);
        for b in 0..nt {
            let t = 2.0 * PI * (b as f64 + 0.5) / nt as f64;
            let (x, y) = (c.0 + r * t.cos(), c.1 + r * t.sin());
            h += f(x, y).powi(2) * r * 2.0 * PI / nt as f64;
            for a in 0..nr {
                let rho = r * (a as f64 + 0.5) / nr as f64;
                let (x, y) = (c.0 + rho * t.cos(), c.1 + rho * t.sin());
                let w = rho * (r / nr as f64) * (2.0 * PI / nt as f64);
                k += w * f(x, y).powi(2);
                d += w * (grad2(x, y) + 2.0 * f(x, y).powi(2));
            }
        }
        (h, d, k)
    }

    #[test]
    fn cos_product_matches_polar_reference() {
        let g = square(129);
        let u = ScalarField::from_fn(g.clone(), |x, y| x.cos() * y.cos());
        let v = ScalarField::constant(g, 2.0);
        let c = (0.45, 0.55);
        for r in [0.1, 0.25, 0.4] {
            let (h, d, k) = polar_reference(c, r);
            assert!((h_quantity(&u, c, r).unwrap() / h - 1.0).abs() < 0.01);
            assert!((k_quantity(&u, c, r).unwrap() / k - 1.0).abs() < 0.01);
            assert!((d_quantity(&u, &v, c, r).unwrap() / d - 1.0).abs() < 0.01);
            assert!((frequency(&u, &v, c, r).unwrap() / (r * d / h) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn delta0_examples() {
        let d = delta0(2.0, 1.0, 5.7832).unwrap();
        assert!((d.rho1 - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((d.rho0 - 1.7005).abs() < 1e-4);
        assert_eq!(d.value, d.rho1);
        assert_eq!(delta0(2.0, 0.3, 5.7832).unwrap().value, 0.3);
        assert!(delta0(0.0, 1.0, 5.7832).is_err());
    }

    #[test]
    fn disk_eigenvalue_matches_bessel_zero() {
        // j_{0,1} = 2.404825557695773
        let want = 2.404825557695773f64.powi(2);
        let got = unit_disk_lambda1().unwrap();
        assert!((got / want - 1.0).abs() < 0.01, "{got}");
    }

    #[test]
    fn vanishing_order_limits() {
        let g = square(129);
        let c = (0.5, 0.5);
        let radii = default_radii(&g, c).unwrap();
        assert_eq!(radii.len(), 12);
        let u = ScalarField::from_fn(g.clone(), |x, y| x.cos() * y.cos());
        let f = vanishing_order_fit(&u, c, &radii).unwrap();
        assert!((f.c_fit - 1.0).abs() < 0.05 && f.r2 >= 0.98, "{f:?}");
        let lin = ScalarField::from_fn(g.clone(), |x, _| x - 0.5);
        let f = vanishing_order_fit(&lin, c, &radii).unwrap();
        assert!((f.c_fit - 2.0).abs() < 0.1, "{f:?}");
        assert!(matches!(vanishing_order_fit(&ScalarField::zeros(g), c, &radii), Err(LabError::VanishingNorm(_))));
        assert!(vanishing_order_fit(&u, c, &radii[..4]).is_err());
    }

    #[test]
    fn profile_audit_for_constants() {
        let g = square(129);
        let one = ScalarField::constant(g.clone(), 1.0);
        let c = (0.5, 0.5);
        let radii = default_radii(&g, c).unwrap();
        let p = frequency_profile(&one, &ScalarField::zeros(g.clone()), c, &radii, 0.5).unwrap();
        assert_eq!(p.k_rh_violations, 0);
        for ((k, h), r) in p.k.iter().zip(&p.h).zip(&radii) {
            assert!((k / (r * h) - 0.5).abs() < 0.01);
        }
        assert!(frequency_profile(&one, &one, c, &[], 0.5).is_err());
        assert!(frequency_profile(&one, &one, c, &[0.1, 0.6], 0.5).is_err());
        let zero = ScalarField::zeros(g);
        assert!(matches!(frequency(&zero, &one, c, 0.1), Err(LabError::VanishingH { .. })));
    }

    #[test]
    fn scaling_equivariance() {
        let g = square(65);
        let u = ScalarField::from_fn(g.clone(), |x, y| (2.0 * x).sin() + y * y);
        let v = ScalarField::constant(g, 2.0);
        let t = 3.7;
        let ut = u.scale(t);
        let c = (0.4, 0.6);
        let r = 0.2;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs();
        assert!(rel(h_quantity(&u, c, r).unwrap() * t * t, h_quantity(&ut, c, r).unwrap()) < 1e-10);
        assert!(rel(k_quantity(&u, c, r).unwrap() * t * t, k_quantity(&ut, c, r).unwrap()) < 1e-10);
        assert!(rel(frequency(&u, &v, c, r).unwrap(), frequency(&ut, &v, c, r).unwrap()) < 1e-10);
    }

    #[test]
    fn ball_leaving_domain_is_rejected() {
        let g = square(33);
        let u = ScalarField::constant(g, 1.0);
        assert!(matches!(h_quantity(&u, (0.1, 0.5), 0.2), Err(LabError::BallOutsideDomain { .. })));
        assert!(matches!(k_quantity(&u, (0.1, 0.5), 0.2), Err(LabError::BallOutsideDomain { .. })));
    }
}
