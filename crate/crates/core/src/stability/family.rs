use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elliptic::{check_class_d1, forward_gradient, D1Report, PotentialClassSpec};
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::geometry::{Domain, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpShape {
    pub center: (f64, f64),
    pub width: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// explicit bump shapes
    pub bumps: Vec<BumpShape>,
    /// extra seeded bumps
    pub random_bumps: usize,
    /// power of the boundary cutoff
    pub cutoff_exponent: f64,
    /// explicit amplitudes; otherwise `0` plus `amplitude_count` log-spaced values
    pub amplitudes: Option<Vec<f64>>,
    pub amplitude_count: usize,
    /// largest generated amplitude as a fraction of the class threshold
    pub max_fraction: f64,
    /// ratio between the largest and smallest nonzero generated amplitude
    pub amplitude_span: f64,
    pub seed: u64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            bumps: Vec::new(),
            random_bumps: 3,
            cutoff_exponent: 2.0,
            amplitudes: None,
            amplitude_count: 8,
            max_fraction: 0.9,
            amplitude_span: 100.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PerturbationFamily {
    pub base: ScalarField,
    pub shapes: Vec<BumpShape>,
    pub cutoff_exponent: f64,
    pub amplitudes: Vec<f64>,
    pub seed: u64,
    /// perturbation profile with `max |φ| = 1`
    pub phi: ScalarField,
    pub threshold: f64,
    /// `max_Γ |Ṽ - V̄|` over the family
    pub boundary_gap: f64,
    /// largest one-sided normal difference of `t_max φ` on the left edge
    pub edge_gradient_gap: f64,
    /// `edge_gradient_gap` is first order in the spacing
    pub edge_gradient_agrees: bool,
    pub d1: Vec<D1Report>,
}

impl PerturbationFamily {
    /// `V̄ + t φ`.
    pub fn member(&self, t: f64) -> ScalarField {
        let phi = self.phi.values();
        let vals = self.base.values().iter().zip(phi).map(|(b, p)| b + t * p).collect();
        ScalarField::from_values(self.base.grid_arc().clone(), vals).expect("same grid")
    }
}

/// Cutoff vanishing on `Γ`: the product of edge distances on rectangles,
/// the distance to the boundary elsewhere.
fn cutoff(grid: &Grid, x: f64, y: f64) -> f64 {
    match *grid.domain() {
        Domain::UnitSquare => (x * (1.0 - x) * y * (1.0 - y)).max(0.0),
        Domain::Rectangle { x0, y0, x1, y1 } => ((x - x0) * (x1 - x) * (y - y0) * (y1 - y)).max(0.0),
        _ => grid.distance_to_boundary(x, y),
    }
}

fn shapes(cfg: &FamilyConfig) -> Vec<BumpShape> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = cfg.bumps.clone();
    for _ in 0..cfg.random_bumps {
        let center = (rng.random_range(0.2..0.8), rng.random_range(0.2..0.8));
        let width = rng.random_range(0.08..0.2);
        let weight = rng.random_range(0.5..1.0);
        out.push(BumpShape { center, width, weight });
    }
    out
}

fn amplitudes(cfg: &FamilyConfig, threshold: f64) -> Result<Vec<f64>> {
    let ts = match &cfg.amplitudes {
        Some(ts) => ts.clone(),
        None => {
            if !(cfg.max_fraction > 0.0 && cfg.max_fraction <= 1.0) || !(cfg.amplitude_span >= 1.0) {
                return Err(LabError::Config(
                    "max_fraction must lie in (0, 1] and amplitude_span be at least 1".into(),
                ));
            }
            let top = cfg.max_fraction * threshold;
            let n = cfg.amplitude_count;
            let mut ts = vec![0.0];
            ts.extend((1..=n).map(|i| {
                let e = if n > 1 { (n - i) as f64 / (n - 1) as f64 } else { 0.0 };
                top * cfg.amplitude_span.powf(-e)
            }));
            ts
        }
    };
    if ts.windows(2).any(|w| !(w[0] < w[1])) || ts.first().is_some_and(|t| *t < 0.0) {
        return Err(LabError::Config("amplitudes must be nonnegative and strictly increasing".into()));
    }
    if let Some(t) = ts.iter().find(|t| **t > threshold) {
        return Err(LabError::NotAdmissible(format!("amplitude {t} exceeds the class threshold {threshold}")));
    }
    Ok(ts)
}

/// Builds `Ṽ = V̄ + t φ` with `φ = (Σ bumps)·cutoff^p / max`, checking class
/// membership at every amplitude and agreement with `V̄` on the boundary.
pub fn make_family(spec: &PotentialClassSpec, cfg: &FamilyConfig) -> Result<PerturbationFamily> {
    if !(cfg.cutoff_exponent >= 1.0) {
        return Err(LabError::Config(format!("cutoff exponent {} must be at least 1", cfg.cutoff_exponent)));
    }
    let shapes = shapes(cfg);
    if shapes.is_empty() {
        return Err(LabError::Config("family has no bumps".into()));
    }
    if let Some(b) = shapes.iter().find(|b| !(b.width > 0.0)) {
        return Err(LabError::Config(format!("bump width {} must be positive", b.width)));
    }
    let grid = spec.reference.grid_arc().clone();
    let p = cfg.cutoff_exponent;
    let raw = ScalarField::from_fn(grid.clone(), |x, y| {
        let s: f64 = shapes
            .iter()
            .map(|b| b.weight * (-((x - b.center.0).powi(2) + (y - b.center.1).powi(2)) / (b.width * b.width)).exp())
            .sum();
        s * cutoff(&grid, x, y).powf(p)
    });
    let peak = raw.max_abs();
    if !(peak > 0.0) {
        return Err(LabError::Config("perturbation profile vanishes".into()));
    }
    let mut phi = raw.scale(1.0 / peak);
    for &k in grid.boundary_nodes() {
        phi.values_mut()[k] = 0.0;
    }
    let threshold = spec.d0_threshold()?;
    let ts = amplitudes(cfg, threshold)?;
    let mut fam = PerturbationFamily {
        base: spec.reference.clone(),
        shapes,
        cutoff_exponent: p,
        amplitudes: ts.clone(),
        seed: cfg.seed,
        phi,
        threshold,
        boundary_gap: 0.0,
        edge_gradient_gap: 0.0,
        edge_gradient_agrees: true,
        d1: Vec::with_capacity(ts.len()),
    };
    for &t in &ts {
        let v = fam.member(t);
        let d1 = check_class_d1(&v, spec)?;
        if !d1.member {
            return Err(LabError::NotAdmissible(format!(
                "amplitude {t}: Lipschitz norm {:.4} exceeds the budget {:.4}",
                d1.lipschitz_norm, d1.budget
            )));
        }
        for &k in grid.boundary_nodes() {
            fam.boundary_gap = fam.boundary_gap.max((v.get(k) - spec.reference.get(k)).abs());
        }
        fam.d1.push(d1);
    }
    let t_max = ts.last().copied().unwrap_or(0.0);
    let h = grid.spacing();
    let (gx, gy) = forward_gradient(&fam.phi);
    let interior_grad = grid.domain_nodes().map(|k| gx[k].hypot(gy[k])).fold(0.0, f64::max);
    let left = grid.origin().0;
    let mut gap: f64 = 0.0;
    for &k in grid.boundary_nodes() {
        let (i, j) = grid.ij(k);
        if (grid.coords(k).0 - left).abs() > 1e-12 {
            continue;
        }
        if let Some(m) = grid.shift(i, j, 1, 0).filter(|&m| grid.in_domain(m)) {
            gap = gap.max(t_max * (fam.phi.get(m) - fam.phi.get(k)).abs() / h);
        }
    }
    fam.edge_gradient_gap = gap;
    fam.edge_gradient_agrees = gap <= 10.0 * h * t_max * interior_grad;
    Ok(fam)
}
