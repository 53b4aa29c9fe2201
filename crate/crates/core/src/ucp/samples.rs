use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{check_class_d1, PotentialClassSpec};
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::forward::{forward, ForwardOptions};
use crate::geometry::Grid;

/// Shape parameters of one in-class sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDescriptor {
    pub index: usize,
    pub bump_center: (f64, f64),
    pub bump_width: f64,
    /// `V - V̄` amplitude as a signed fraction of the contraction threshold
    pub amplitude: f64,
    /// boundary data `cos(a x + b y + c)`
    pub wave: (f64, f64, f64),
}

#[derive(Debug, Clone)]
pub struct InClassSample {
    pub descriptor: SampleDescriptor,
    pub v: ScalarField,
    pub u: ScalarField,
}

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Solutions of `Δu + Vu = 0` with `V = V̄ + t·bump` inside the contraction
/// class and oscillating boundary data. Each sample draws from its own
/// ChaCha stream, so the family does not depend on the thread count.
pub fn in_class_family(spec: &PotentialClassSpec, count: usize, seed: u64) -> Result<Vec<InClassSample>> {
    let threshold = spec.d0_threshold()?;
    let grid = spec.reference.grid_arc().clone();
    (0..count)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream(seed, index);
            let center = (rng.random_range(0.3..0.7), rng.random_range(0.3..0.7));
            let width = rng.random_range(0.1..0.2);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let amplitude = sign * rng.random_range(0.2..0.8);
            let wave = (
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            );
            let t = amplitude * threshold;
            let bump = ScalarField::from_fn(grid.clone(), |x, y| {
                (-((x - center.0).powi(2) + (y - center.1).powi(2)) / (width * width)).exp()
            });
            let v = spec.reference.add(&bump.scale(t))?;
            if !check_class_d1(&v, spec)?.member {
                return Err(LabError::NotAdmissible(format!("sample {index} leaves the Lipschitz class")));
            }
            let h = ScalarField::from_fn(grid.clone(), |x, y| (wave.0 * x + wave.1 * y + wave.2).cos());
            let u = forward(&v, &h, spec, ForwardOptions::default())?.u;
            let descriptor = SampleDescriptor { index, bump_center: center, bump_width: width, amplitude, wave };
            Ok(InClassSample { descriptor, v, u })
        })
        .collect()
}

/// `count` random `(center, r)` pairs with `r ∈ [r_lo, r_hi]` and
/// `B(center, m·r)` at least one spacing inside the domain.
pub fn place_balls(
    grid: &Grid,
    count: usize,
    r_lo: f64,
    r_hi: f64,
    m: f64,
    seed: u64,
) -> Result<Vec<((f64, f64), f64)>> {
    if !(r_lo > 0.0 && r_lo <= r_hi && m > 0.0) {
        return Err(LabError::InvalidArgument(format!("radius range [{r_lo}, {r_hi}] with multiplier {m}")));
    }
    let (x0, y0) = grid.origin();
    let x1 = x0 + (grid.nx() - 1) as f64 * grid.spacing();
    let y1 = y0 + (grid.ny() - 1) as f64 * grid.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 10_000 * count.max(1) {
            return Err(LabError::InvalidArgument(format!("no room for balls of radius {m}·{r_hi}")));
        }
        let r = if r_hi > r_lo { rng.random_range(r_lo..=r_hi) } else { r_lo };
        let c = (rng.random_range(x0..x1), rng.random_range(y0..y1));
        if grid.domain().contains_closed(c.0, c.1) && grid.distance_to_boundary(c.0, c.1) >= m * r + grid.spacing() {
            out.push((c, r));
        }
    }
    Ok(out)
}

/// Gaussian bumps with widths log-spaced in `[0.04, 0.25]` and seeded centers
/// in the box `[x0, x1] × [y0, y1]`.
pub fn test_function_family(
    grid: &std::sync::Arc<Grid>,
    count: usize,
    region: [f64; 4],
    seed: u64,
) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [x0, y0, x1, y1] = region;
    (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            let w = 0.04 * (0.25f64 / 0.04).powf(t);
            let c = (rng.random_range(x0..=x1), rng.random_range(y0..=y1));
            ScalarField::from_fn(grid.clone(), |x, y| (-((x - c.0).powi(2) + (y - c.1).powi(2)) / (w * w)).exp())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::ClassParameters;
    use crate::geometry::Domain;
    use std::sync::Arc;

    #[test]
    fn family_is_deterministic_and_in_class() {
        let g = Arc::new(Grid::new(Domain::UnitSquare, 33).unwrap());
        let p = ClassParameters { v0: 1.0, v_upper: 4.0, k: 0.5, lipschitz: 20.0, kappa: 0.1, m_bound: 100.0 };
        let spec = PotentialClassSpec::new(p, ScalarField::constant(g.clone(), 2.0)).unwrap();
        let a = in_class_family(&spec, 4, 11).unwrap();
        let b = in_class_family(&spec, 4, 11).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.u.values(), y.u.values());
            assert_eq!(x.descriptor, y.descriptor);
            assert!(check_class_d1(&x.v, &spec).unwrap().member);
        }
        assert_ne!(a[0].descriptor, a[1].descriptor);
    }

    #[test]
    fn placed_balls_fit() {
        let g = Grid::new(Domain::UnitSquare, 65).unwrap();
        for (c, r) in place_balls(&g, 50, 0.03, 0.08, 3.0, 5).unwrap() {
            assert!(g.distance_to_boundary(c.0, c.1) >= 3.0 * r);
        }
        assert!(place_balls(&g, 1, 0.3, 0.3, 3.0, 5).is_err());
    }
}
