//! Recovery of `V` from `J = √I`: the amplitude `w = |u|` solves
//! `-Δw = J²/w` with `w = |h|` on the boundary, and then `V = J²/w²`.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elliptic::{norm_h1, norm_l2, norm_linf, solve_with_source, DiscreteOperator};
use crate::error::{LabError, Result};
use crate::field::{write_mask_csv, ScalarField};
use crate::fit::{power_law_fit, PowerLawFit};
use crate::geometry::{Mask, MaskRole};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionOptions {
    /// relaxation weight of the new iterate
    pub damping: f64,
    /// relative sup-norm update at which the iteration stops
    pub tol: f64,
    pub max_iters: usize,
    /// positivity floor for `w`; `None` means `1e-8 · max |w_boundary|`
    pub floor: Option<f64>,
    /// minimum admissible `|h|` on the boundary; `None` means the floor
    pub boundary_floor: Option<f64>,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions { damping: 0.7, tol: 1e-10, max_iters: 500, floor: None, boundary_floor: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    /// `‖-Δ_h w - J²/w‖_{L²} / ‖J²/w‖_{L²}` over the interior
    pub residual: f64,
    /// `max|w_new - w| / max|w_new|`
    pub update: f64,
}

#[derive(Debug, Clone)]
pub struct AmplitudeSolve {
    pub w: ScalarField,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub floor: f64,
    pub activation: Mask,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub w: ScalarField,
    pub v_rec: ScalarField,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    /// residual non-increasing after the first iteration
    pub residual_monotone: bool,
    pub floor: f64,
    pub activation: Mask,
}

fn fixed_point_residual(op: &DiscreteOperator, w: &ScalarField, j2: &[f64], floor: f64) -> Result<f64> {
    let lap = op.apply(w)?;
    let (mut num, mut den) = (0.0, 0.0);
    let g = w.grid();
    for &k in g.interior_nodes() {
        let s = j2[k] / w.get(k).max(floor);
        num += g.weight(k) * (lap.get(k) - s).powi(2);
        den += g.weight(k) * s * s;
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// Damped fixed point `w ← (1-λ) w + λ ŵ` with `-Δ_h ŵ = J²/max(w, floor)`,
/// started from the harmonic extension of the boundary data. Non-convergence
/// is reported through `converged`, not as an error.
pub fn reconstruct_amplitude(
    j: &ScalarField,
    w_boundary: &ScalarField,
    opts: &ReconstructionOptions,
) -> Result<AmplitudeSolve> {
    j.check_same_grid(w_boundary)?;
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(LabError::InvalidArgument(format!("damping {} outside (0, 1]", opts.damping)));
    }
    if !(opts.tol > 0.0) || opts.max_iters == 0 {
        return Err(LabError::InvalidArgument("tolerance and iteration cap must be positive".into()));
    }
    let g = j.grid_arc().clone();
    if let Some(k) = g.domain_nodes().find(|&k| !(j.get(k) >= 0.0)) {
        return Err(LabError::InvalidArgument(format!("J is negative or undefined at node {k}")));
    }
    let wb_max = g.boundary_nodes().iter().map(|&k| w_boundary.get(k).abs()).fold(0.0, f64::max);
    let floor = opts.floor.unwrap_or(1e-8 * wb_max);
    if !(floor > 0.0) {
        return Err(LabError::InvalidArgument(format!("floor {floor} must be positive")));
    }
    let gate = opts.boundary_floor.unwrap_or(floor);
    for &k in g.boundary_nodes() {
        if !(w_boundary.get(k) >= gate) {
            let (x, y) = g.coords(k);
            return Err(LabError::BoundaryBelowFloor { node: k, x, y, floor: gate });
        }
    }
    let j2: Vec<f64> = j.values().iter().map(|v| v * v).collect();
    let op = DiscreteOperator::assemble(&ScalarField::zeros(g.clone()));
    let mut w = solve_with_source(&op, w_boundary, None)?;
    let mut trace = Vec::new();
    let mut converged = false;
    for iter in 1..=opts.max_iters {
        let source: Vec<f64> = (0..g.len()).map(|k| j2[k] / w.get(k).max(floor)).collect();
        let hat = solve_with_source(&op, w_boundary, Some(&source))?;
        let lam = opts.damping;
        let next = w.zip_map(&hat, |a, b| ((1.0 - lam) * a + lam * b).max(floor))?;
        let mut diff: f64 = 0.0;
        for k in g.domain_nodes() {
            diff = diff.max((next.get(k) - w.get(k)).abs());
        }
        let update = diff / next.max_abs().max(f64::MIN_POSITIVE);
        w = next;
        let residual = fixed_point_residual(&op, &w, &j2, floor)?;
        trace.push(TraceEntry { iter, residual, update });
        if update < opts.tol && residual <= 10.0 * opts.tol {
            converged = true;
            break;
        }
    }
    let activation = Mask::from_predicate(&g, MaskRole::FloorActive, |k| g.is_interior(k) && w.get(k) <= floor);
    Ok(AmplitudeSolve { w, trace, converged, floor, activation })
}

/// `V_rec = J²/w²` with `w` clamped at the floor; clamped nodes form the mask.
pub fn recover_potential(j: &ScalarField, w: &ScalarField, floor: f64) -> Result<(ScalarField, Mask)> {
    if !(floor > 0.0) {
        return Err(LabError::InvalidArgument(format!("floor {floor} must be positive")));
    }
    let v = j.zip_map(w, |jj, ww| {
        let d = ww.max(floor);
        (jj / d) * (jj / d)
    })?;
    let g = w.grid();
    let mask = Mask::from_predicate(g, MaskRole::FloorActive, |k| g.is_interior(k) && w.get(k) <= floor);
    Ok((v, mask))
}

fn monotone(trace: &[TraceEntry]) -> bool {
    trace.windows(2).skip(1).all(|p| p[1].residual <= p[0].residual * (1.0 + 1e-6) + 1e-13)
}

/// Full pipeline from intensity `I` and boundary data `h`.
pub fn reconstruct(
    intensity: &ScalarField,
    h: &ScalarField,
    opts: &ReconstructionOptions,
) -> Result<ReconstructionResult> {
    intensity.check_same_grid(h)?;
    if let Some(k) = intensity.grid().domain_nodes().find(|&k| !(intensity.get(k) >= 0.0)) {
        return Err(LabError::InvalidArgument(format!("intensity is negative at node {k}")));
    }
    let j = intensity.map(f64::sqrt);
    let wb = h.map(f64::abs);
    let amp = reconstruct_amplitude(&j, &wb, opts)?;
    let (v_rec, _) = recover_potential(&j, &amp.w, amp.floor)?;
    Ok(ReconstructionResult {
        residual_monotone: monotone(&amp.trace),
        w: amp.w,
        v_rec,
        trace: amp.trace,
        converged: amp.converged,
        floor: amp.floor,
        activation: amp.activation,
    })
}

/// `‖I_V^{1/2} (V - Ṽ)‖_{L²(ω)}`.
pub fn weighted_l2_gap(v: &ScalarField, v_tilde: &ScalarField, intensity: &ScalarField, omega: &Mask) -> Result<f64> {
    v.check_same_grid(v_tilde)?;
    v.check_same_grid(intensity)?;
    let prod = ScalarField::from_values(
        v.grid_arc().clone(),
        (0..v.grid().len()).map(|k| intensity.get(k).max(0.0).sqrt() * (v.get(k) - v_tilde.get(k))).collect(),
    )?;
    norm_l2(&prod, omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub epsilon: f64,
    /// `‖J_noisy - J‖_{H¹(Ω)}`
    pub data_gap_h1: f64,
    /// `‖V_rec - V‖_{L∞(ω)}`
    pub v_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweep {
    pub records: Vec<NoiseRecord>,
    /// error non-decreasing in `ε` within a 10% band
    pub monotone: bool,
    pub response: Option<PowerLawFit>,
}

/// Reconstructs from `I (1 + ε g)` with one fixed ChaCha draw `g ∈ [-1, 1]`
/// per node, for each `ε`.
pub fn noise_sweep(
    v: &ScalarField,
    intensity: &ScalarField,
    h: &ScalarField,
    omega: &Mask,
    epsilons: &[f64],
    seed: u64,
    opts: &ReconstructionOptions,
) -> Result<NoiseSweep> {
    v.check_same_grid(intensity)?;
    let grid = intensity.grid_arc().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let j = intensity.map(f64::sqrt);
    let domain = Mask::domain(&grid);
    let mut records = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(0.0..1.0).contains(&eps) {
            return Err(LabError::InvalidArgument(format!("noise level {eps} outside [0, 1)")));
        }
        let noisy = ScalarField::from_values(
            grid.clone(),
            intensity.values().iter().zip(&noise).map(|(i, g)| i * (1.0 + eps * g)).collect(),
        )?;
        let r = reconstruct(&noisy, h, opts)?;
        let data_gap_h1 = norm_h1(&noisy.map(f64::sqrt).sub(&j)?, &domain)?;
        let v_error = norm_linf(&r.v_rec.sub(v)?, omega)?;
        records.push(NoiseRecord {
            epsilon: eps,
            data_gap_h1,
            v_error,
            iterations: r.trace.len(),
            converged: r.converged,
        });
    }
    let mut sorted = records.clone();
    sorted.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let monotone = sorted.windows(2).all(|p| p[1].v_error >= 0.9 * p[0].v_error);
    let pos: Vec<&NoiseRecord> = sorted.iter().filter(|r| r.data_gap_h1 > 0.0 && r.v_error > 0.0).collect();
    let response = if pos.len() >= 2 {
        let x: Vec<f64> = pos.iter().map(|r| r.data_gap_h1).collect();
        let y: Vec<f64> = pos.iter().map(|r| r.v_error).collect();
        power_law_fit(&x, &y).ok()
    } else {
        None
    };
    Ok(NoiseSweep { records, monotone, response })
}

impl ReconstructionResult {
    pub fn write_dir(&self, dir: &Path, config_hash: &str, seed: u64) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let comment = format!("config_sha256={config_hash} seed={seed}");
        for (name, f) in [("w", &self.w), ("V_rec", &self.v_rec)] {
            f.write_csv(&dir.join(format!("{name}.csv")), Some(&comment))?;
            f.write_binary(&dir.join(format!("{name}.bin")), name, Some(config_hash))?;
        }
        let mut it = std::fs::File::create(dir.join("iterations.csv"))?;
        writeln!(it, "# {comment}")?;
        writeln!(it, "iter,residual,update")?;
        for t in &self.trace {
            writeln!(it, "{},{:.17e},{:.17e}", t.iter, t.residual, t.update)?;
        }
        let mut m = std::fs::File::create(dir.join("floor_mask.csv"))?;
        writeln!(m, "# {comment}")?;
        write_mask_csv(self.w.grid(), &[(&self.activation, "floor_active")], &mut m)?;
        Ok(())
    }
}
