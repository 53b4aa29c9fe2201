//! Synthetic internal data: `u_V` from the Dirichlet problem, `I = V u²`,
//! `J = √I`, with class certificates for the pair `(V, h)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elliptic::{
    check_class_d1, h2_surrogate, resonance_threshold, smallest_eigenvalue, solve_dirichlet, D0Report, D1Report,
    DiscreteOperator, PotentialClassSpec,
};
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::geometry::{Grid, Mask, MaskRole};

/// Default floor separating `Γ₊` from `Γ₀`.
pub const PARTITION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardOptions {
    /// refuse potentials outside the contraction class
    pub require_d0: bool,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions { require_d0: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionClassReport {
    pub kappa: f64,
    /// `sup |u|` on the boundary
    pub boundary_sup: f64,
    /// `min |u|` on the boundary
    pub boundary_min: f64,
    pub weak_member: bool,
    pub strong_member: bool,
    pub weak_margin: f64,
    pub strong_margin: f64,
    pub h2_surrogate: f64,
    pub m_bound: f64,
    pub h2_within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardReport {
    pub smallest_eigenvalue: f64,
    pub resonance_threshold: f64,
    pub d0: D0Report,
    pub d1: D1Report,
    pub solution: SolutionClassReport,
    pub gamma_plus_nodes: usize,
    pub gamma_zero_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct ForwardResult {
    pub potential: ScalarField,
    pub u: ScalarField,
    pub intensity: ScalarField,
    pub amplitude: ScalarField,
    pub report: ForwardReport,
}

/// Boundary nodes split by `|h| > floor` into `(Γ₊, Γ₀)`.
pub fn boundary_partition(grid: &Grid, h: &ScalarField, floor: f64) -> Result<(Mask, Mask)> {
    if !(floor >= 0.0) {
        return Err(LabError::InvalidArgument(format!("partition floor {floor} must be nonnegative")));
    }
    if h.grid() != grid {
        return Err(LabError::GridMismatch);
    }
    let plus =
        Mask::from_predicate(grid, MaskRole::BoundaryPositive, |k| grid.is_boundary(k) && h.get(k).abs() > floor);
    let zero = Mask::from_predicate(grid, MaskRole::BoundaryZero, |k| grid.is_boundary(k) && h.get(k).abs() <= floor);
    Ok((plus, zero))
}

/// Weak (`sup|u| ≥ κ` on Γ) and strong (`|u| ≥ κ` on Γ) solution-class verdicts.
pub fn solution_class_report(u: &ScalarField, spec: &PotentialClassSpec) -> SolutionClassReport {
    let g = u.grid();
    let abs: Vec<f64> = g.boundary_nodes().iter().map(|&k| u.get(k).abs()).collect();
    let sup = abs.iter().copied().fold(0.0, f64::max);
    let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
    let h2 = h2_surrogate(u);
    SolutionClassReport {
        kappa: spec.kappa,
        boundary_sup: sup,
        boundary_min: min,
        weak_member: sup >= spec.kappa,
        strong_member: min >= spec.kappa,
        weak_margin: sup - spec.kappa,
        strong_margin: min - spec.kappa,
        h2_surrogate: h2,
        m_bound: spec.m_bound,
        h2_within_bound: h2 <= spec.m_bound,
    }
}

/// Solves for `u_V` and forms the internal data.
pub fn forward(
    v: &ScalarField,
    h: &ScalarField,
    spec: &PotentialClassSpec,
    opts: ForwardOptions,
) -> Result<ForwardResult> {
    v.check_same_grid(h)?;
    let grid = v.grid_arc().clone();
    let (plus, zero) = boundary_partition(&grid, h, PARTITION_FLOOR)?;
    if plus.is_empty() {
        return Err(LabError::HIdenticallyZero);
    }
    if let Some(k) = grid.domain_nodes().find(|&k| v.get(k) < 0.0) {
        return Err(LabError::NegativePotential { node: k });
    }
    let d1 = check_class_d1(v, spec)?;
    if opts.require_d0 && !d1.d0.member {
        return Err(LabError::NotAdmissible(format!(
            "|V - Vbar|_inf = {:.6e} exceeds the class threshold {:.6e}",
            d1.d0.deviation, d1.d0.threshold
        )));
    }
    let op = DiscreteOperator::assemble(v);
    let u = solve_dirichlet(&op, h)?;
    let lambda = smallest_eigenvalue(&op)?;
    let intensity = v.zip_map(&u, |vv, uu| vv * uu * uu)?;
    let amplitude = intensity.map(f64::sqrt);
    let solution = solution_class_report(&u, spec);
    Ok(ForwardResult {
        potential: v.clone(),
        u,
        intensity,
        amplitude,
        report: ForwardReport {
            smallest_eigenvalue: lambda,
            resonance_threshold: resonance_threshold(&op),
            d0: d1.d0,
            d1,
            solution,
            gamma_plus_nodes: plus.len(),
            gamma_zero_nodes: zero.len(),
        },
    })
}

impl ForwardResult {
    /// Writes `u`, `I`, `J`, `V` as CSV and binary blocks plus `report.json`.
    pub fn write_dir(&self, dir: &Path, config_hash: &str, seed: u64) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let comment = format!("config_sha256={config_hash} seed={seed}");
        for (name, f) in [("u", &self.u), ("I", &self.intensity), ("J", &self.amplitude), ("V", &self.potential)] {
            f.write_csv(&dir.join(format!("{name}.csv")), Some(&comment))?;
            f.write_binary(&dir.join(format!("{name}.bin")), name, Some(config_hash))?;
        }
        let doc = serde_json::json!({
            "config_hash": config_hash,
            "seed": seed,
            "grid": self.u.grid().meta(),
            "report": self.report,
        });
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::ClassParameters;
    use crate::geometry::Domain;
    use std::sync::Arc;

    fn spec(g: &Arc<Grid>, kappa: f64) -> PotentialClassSpec {
        let p = ClassParameters { v0: 1.0, v_upper: 4.0, k: 0.5, lipschitz: 20.0, kappa, m_bound: 100.0 };
        PotentialClassSpec::new(p, ScalarField::constant(g.clone(), 2.0)).unwrap()
    }

    fn square(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Domain::UnitSquare, n).unwrap())
    }

    #[test]
    fn manufactured_internal_data() {
        let g = square(65);
        let s = spec(&g, 0.25);
        let h = ScalarField::from_fn(g.clone(), |x, y| x.cos() * y.cos());
        let r = forward(&s.reference, &h, &s, ForwardOptions::default()).unwrap();
        let exact = ScalarField::from_fn(g.clone(), |x, y| 2.0 * (x.cos() * y.cos()).powi(2));
        assert!(r.intensity.sub(&exact).unwrap().max_abs() < 1e-4);
        for k in g.domain_nodes() {
            let (i, j) = (r.intensity.get(k), r.amplitude.get(k));
            assert!((j * j - i).abs() <= 1e-12 * i.max(1e-300));
            assert!((j - 2f64.sqrt() * r.u.get(k).abs()).abs() <= 1e-12 * j.max(1e-300));
        }
        for &b in g.boundary_nodes() {
            assert_eq!(r.u.get(b), h.get(b));
        }
        assert!(r.report.solution.strong_member);
        assert!((r.report.solution.boundary_min - 1f64.cos().powi(2)).abs() < 1e-12);
        assert_eq!(r.report.gamma_zero_nodes, 0);
    }

    #[test]
    fn zero_boundary_data_is_rejected() {
        let g = square(33);
        let s = spec(&g, 0.25);
        let err = forward(&s.reference, &ScalarField::zeros(g.clone()), &s, ForwardOptions::default()).unwrap_err();
        assert_eq!(err.code(), "H_IDENTICALLY_ZERO");
        let (plus, zero) = boundary_partition(&g, &ScalarField::zeros(g.clone()), PARTITION_FLOOR).unwrap();
        assert!(plus.is_empty() && zero.len() == g.boundary_nodes().len());
    }

    #[test]
    fn negative_potential_is_rejected() {
        let g = square(33);
        let s = spec(&g, 0.25);
        let v = ScalarField::from_fn(g.clone(), |x, _| x - 0.5);
        let h = ScalarField::constant(g, 1.0);
        let opts = ForwardOptions { require_d0: false };
        assert!(matches!(forward(&v, &h, &s, opts), Err(LabError::NegativePotential { .. })));
    }

    #[test]
    fn bump_potential_matches_refined_run() {
        let v = |x: f64, y: f64| 2.0 + 0.5 * (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.04).exp();
        let run = |n: usize| {
            let g = square(n);
            let s = spec(&g, 0.25);
            let h = ScalarField::from_fn(g.clone(), |x, y| x.cos() * y.cos());
            forward(&ScalarField::from_fn(g, v), &h, &s, ForwardOptions::default()).unwrap()
        };
        let (a, b, c) = (run(33), run(65), run(129));
        let err = |coarse: &ForwardResult| {
            let mut e: f64 = 0.0;
            for k in coarse.u.grid().domain_nodes() {
                let (x, y) = coarse.u.grid().coords(k);
                let kf = c.u.grid().nearest_node(x, y).unwrap();
                e = e.max((coarse.intensity.get(k) - c.intensity.get(kf)).abs());
            }
            e
        };
        let (ea, eb) = (err(&a), err(&b));
        // second order against the finest run: (4/3)/(1/3) → ratio ≈ 5 in exact arithmetic
        assert!(ea / eb > 3.0 && ea / eb < 6.0, "{ea} {eb}");
    }

    #[test]
    fn edge_vanishing_trace() {
        let g = square(65);
        // vanishes on the bottom edge y = 0 only
        let h = ScalarField::from_fn(g.clone(), |_, y| y);
        let (_, zero) = boundary_partition(&g, &h, PARTITION_FLOOR).unwrap();
        for &k in zero.nodes() {
            assert_eq!(g.coords(k).1, 0.0);
        }
        assert_eq!(zero.len(), 65);
        let s = spec(&g, 0.1);
        let r = forward(&s.reference, &h, &s, ForwardOptions::default()).unwrap();
        assert!(r.report.solution.weak_member && !r.report.solution.strong_member);
    }

    #[test]
    fn kappa_sweep_flips_at_measured_extremes() {
        let g = square(33);
        let h = ScalarField::from_fn(g.clone(), |x, y| x.cos() * y.cos());
        let s = spec(&g, 0.25);
        let r = forward(&s.reference, &h, &s, ForwardOptions::default()).unwrap();
        let (lo, hi) = (r.report.solution.boundary_min, r.report.solution.boundary_sup);
        let verdict = |kappa: f64| {
            let mut p = s.parameters();
            p.kappa = kappa;
            solution_class_report(&r.u, &s.with_parameters(p).unwrap())
        };
        assert!(verdict(lo * (1.0 - 1e-9)).strong_member && !verdict(lo * (1.0 + 1e-9)).strong_member);
        assert!(verdict(hi * (1.0 - 1e-9)).weak_member && !verdict(hi * (1.0 + 1e-9)).weak_member);
    }
}
