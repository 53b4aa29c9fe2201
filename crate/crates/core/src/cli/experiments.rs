use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::elliptic::{norm_h1, norm_linf, PotentialClassSpec};
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::forward::{forward, ForwardOptions, ForwardResult};
use crate::geometry::{
    ball_chain_along_path, cone_ball_sequence, geodesic_diameter, geodesic_path, ChainReport, ConeSequence, ConeSpec,
    Grid, Mask, MaskRole, Polyline,
};
use crate::reconstruction::{noise_sweep, reconstruct, NoiseSweep, ReconstructionResult};
use crate::stability::{make_family, regime_setup, run_regime, ForwardCache, Regime, RegimeReport, SweepOptions};
use crate::ucp::{
    audit_three_ball, delta0, frequency_profile, in_class_family, place_balls, propagation_of_smallness,
    test_function_family, three_ball_exponent_fit, unit_disk_lambda1, weight_nondegeneracy,
    weighted_interpolation_audit, BallSample, Delta0, FrequencyProfile, HeldOutAudit, InClassSample,
    InterpolationAudit, PropagationReport, ThreeBallFit,
};

/// Destination of one run; stamps every file with the config hash and seed.
#[derive(Debug, Clone)]
pub struct Output {
    pub dir: PathBuf,
    pub hash: String,
    pub seed: u64,
}

impl Output {
    pub fn new(dir: &Path, cfg: &ExperimentConfig) -> Result<Output> {
        std::fs::create_dir_all(dir)?;
        Ok(Output { dir: dir.to_path_buf(), hash: cfg.hash(), seed: cfg.seed })
    }

    pub fn stamp(&self) -> String {
        format!("config_sha256={} seed={}", self.hash, self.seed)
    }

    pub fn csv(&self, name: &str, header: &str, rows: &[String]) -> Result<()> {
        let mut s = format!("# {}\n{header}\n", self.stamp());
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        std::fs::write(self.dir.join(name), s)?;
        Ok(())
    }

    pub fn json(&self, name: &str, command: &str, grid: &Grid, body: Value) -> Result<()> {
        let doc = json!({
            "command": command,
            "config_hash": self.hash,
            "seed": self.seed,
            "grid": grid.meta(),
            "result": body,
        });
        std::fs::write(self.dir.join(name), serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(())
    }
}

fn centered_half(grid: &Grid) -> Mask {
    Mask::rectangle(grid, MaskRole::Observation, 0.25, 0.25, 0.75, 0.75)
}

fn row(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").expect("write to string");
    }
    s
}

struct Setup {
    grid: Arc<Grid>,
    spec: PotentialClassSpec,
    h: ScalarField,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let grid = cfg.grid()?;
    let spec = cfg.spec(&grid)?;
    let h = cfg.boundary_field(&grid)?;
    Ok(Setup { grid, spec, h })
}

pub fn run_forward(cfg: &ExperimentConfig, out: &Output) -> Result<ForwardResult> {
    let s = setup(cfg)?;
    let r = forward(&s.spec.reference, &s.h, &s.spec, ForwardOptions::default())?;
    r.write_dir(&out.dir, &out.hash, out.seed)?;
    let domain = Mask::domain(&s.grid);
    let body = json!({
        "report": r.report,
        "norms": {
            "u_linf": r.u.max_abs(),
            "intensity_linf": r.intensity.max_abs(),
            "amplitude_h1": norm_h1(&r.amplitude, &domain)?,
        },
    });
    out.json("summary.json", "forward", &s.grid, body)?;
    Ok(r)
}

/// Reconstruction outcome; `error` is present when ground truth is known.
#[derive(Debug, Clone)]
pub struct ReconstructOutcome {
    pub result: ReconstructionResult,
    pub error_linf_omega: Option<f64>,
    pub relative_error: Option<f64>,
    pub noise: Option<NoiseSweep>,
}

fn read_block(dir: &Path, name: &str, hash: &str) -> Result<ScalarField> {
    let path = dir.join(format!("{name}.bin"));
    if !path.exists() {
        return Err(LabError::MissingInput(format!("{} not found", path.display())));
    }
    let (header, field) = ScalarField::read_binary(&path)?;
    let found = header.config_hash.unwrap_or_default();
    if found != hash {
        return Err(LabError::ConfigHashMismatch { expected: hash.to_string(), found });
    }
    Ok(field)
}

pub fn run_reconstruct(cfg: &ExperimentConfig, out: &Output) -> Result<ReconstructOutcome> {
    let (grid, h, intensity, truth) = match &cfg.data_dir {
        Some(dir) => {
            let j = read_block(dir, "J", &out.hash)?;
            let truth = if dir.join("V.bin").exists() { Some(read_block(dir, "V", &out.hash)?) } else { None };
            let grid = j.grid_arc().clone();
            let h = cfg.boundary_field(&grid)?;
            (grid, h, j.map(|a| a * a), truth)
        }
        None => {
            let s = setup(cfg)?;
            let f = forward(&s.spec.reference, &s.h, &s.spec, ForwardOptions::default())?;
            (s.grid, s.h, f.intensity, Some(f.potential))
        }
    };
    let result = reconstruct(&intensity, &h, &cfg.reconstruction)?;
    result.write_dir(&out.dir, &out.hash, out.seed)?;
    let omega = centered_half(&grid);
    let (mut error_linf_omega, mut relative_error, mut noise) = (None, None, None);
    if let Some(v) = &truth {
        let e = norm_linf(&result.v_rec.sub(v)?, &omega)?;
        error_linf_omega = Some(e);
        relative_error = Some(e / v.max_abs().max(f64::MIN_POSITIVE));
        if let Some(nc) = &cfg.noise {
            let sweep = noise_sweep(v, &intensity, &h, &omega, &nc.levels, cfg.seed, &cfg.reconstruction)?;
            let rows: Vec<String> = sweep
                .records
                .iter()
                .map(|r| {
                    format!("{},{},{},{},{}", r.epsilon, r.data_gap_h1, r.v_error, r.iterations, r.converged as u8)
                })
                .collect();
            out.csv("noise.csv", "epsilon,data_gap_h1,v_error_linf_omega,iterations,converged", &rows)?;
            noise = Some(sweep);
        }
    } else if cfg.noise.is_some() {
        return Err(LabError::MissingInput("noise sweep needs the ground-truth potential V".into()));
    }
    let body = json!({
        "converged": result.converged,
        "iterations": result.trace.len(),
        "final_residual": result.trace.last().map(|t| t.residual),
        "residual_monotone": result.residual_monotone,
        "floor": result.floor,
        "floor_active_nodes": result.activation.len(),
        "v_error_linf_omega": error_linf_omega,
        "v_relative_error": relative_error,
        "noise": noise.as_ref().map(|n| json!({
            "monotone": n.monotone,
            "response": n.response,
        })),
    });
    out.json("summary.json", "reconstruct", &grid, body)?;
    if !result.converged {
        let update = result.trace.last().map_or(f64::NAN, |t| t.update);
        return Err(LabError::FixedPointNonConvergence { iterations: result.trace.len(), update });
    }
    Ok(ReconstructOutcome { result, error_linf_omega, relative_error, noise })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityOutcome {
    pub regimes: Vec<RegimeReport>,
    pub threshold: f64,
    pub amplitudes: Vec<f64>,
    pub edge_gradient_agrees: bool,
}

pub fn run_stability(cfg: &ExperimentConfig, out: &Output) -> Result<StabilityOutcome> {
    let s = setup(cfg)?;
    let family = make_family(&s.spec, &cfg.family_config())?;
    let regimes: Vec<Regime> = cfg.regime.map_or(Regime::ALL.to_vec(), |r| vec![r]);
    let opts = SweepOptions { workers: cfg.workers, reconstruct: false, reconstruction: cfg.reconstruction };
    let cache = ForwardCache::new();
    let mut reports = Vec::new();
    let mut failure = None;
    for regime in regimes {
        let setup = regime_setup(&s.grid, regime);
        let rep = run_regime(&family, &setup, &s.spec, &opts, &cache)?;
        let name = regime.name();
        let rows: Vec<String> = rep
            .records
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.t,
                    r.v_gap,
                    r.data_gap_h1,
                    r.data_gap_h1_sub.map_or(String::new(), |v| v.to_string()),
                    r.data_gap_h1_semi,
                    r.weighted_gap
                )
            })
            .collect();
        out.csv(
            &format!("stability_{name}.csv"),
            "t,v_gap_linf_omega,data_gap_h1,data_gap_h1_subdomain,data_gap_h1_seminorm,weighted_gap",
            &rows,
        )?;
        let plot: Vec<String> = rep
            .records
            .iter()
            .filter(|r| r.t > 0.0 && r.v_gap > 0.0)
            .filter_map(|r| {
                let x = r.data_gap_h1_sub.unwrap_or(r.data_gap_h1);
                (x > rep.discard_below).then(|| row(&[x.ln(), r.v_gap.ln()]))
            })
            .collect();
        out.csv(&format!("plot_{name}.csv"), "log_data_gap,log_v_gap", &plot)?;
        let dec: Vec<String> = rep
            .records
            .iter()
            .filter(|r| r.t > 0.0)
            .zip(&rep.decomposition_pairs)
            .map(|(r, d)| {
                format!(
                    "{},{},{},{},{},{},{},{},{}",
                    r.t,
                    d.identity_residual,
                    d.amplitude_identity_residual,
                    d.lhs,
                    d.intensity_term,
                    d.amplitude_term,
                    d.data_term,
                    d.potential_term,
                    d.ratio.map_or(String::new(), |v| v.to_string())
                )
            })
            .collect();
        out.csv(
            &format!("decomposition_{name}.csv"),
            "t,identity_residual,amplitude_identity_residual,lhs,intensity_term,amplitude_term,data_term,potential_term,ratio",
            &dec,
        )?;
        if failure.is_none() {
            failure = rep.error.clone();
        }
        reports.push(rep);
    }
    let mu = |r: Regime| reports.iter().find(|x| x.regime == r).and_then(|x| x.fit.map(|f| f.mu));
    let comparison = match (mu(Regime::Global), mu(Regime::Interior)) {
        (Some(g), Some(i)) => json!({ "global_mu": g, "interior_mu": i, "global_within_band": g >= 0.8 * i }),
        _ => Value::Null,
    };
    let outcome = StabilityOutcome {
        regimes: reports,
        threshold: family.threshold,
        amplitudes: family.amplitudes.clone(),
        edge_gradient_agrees: family.edge_gradient_agrees,
    };
    let body = json!({
        "family": {
            "shapes": family.shapes,
            "cutoff_exponent": family.cutoff_exponent,
            "amplitudes": family.amplitudes,
            "seed": family.seed,
            "threshold": family.threshold,
            "boundary_gap": family.boundary_gap,
            "edge_gradient_gap": family.edge_gradient_gap,
            "edge_gradient_agrees": family.edge_gradient_agrees,
        },
        "regimes": outcome.regimes.iter().map(|r| json!({
            "regime": r.regime,
            "mu_fit": r.fit.map(|f| f.mu),
            "fit": r.fit,
            "fit_error": r.fit_error,
            "fit_seminorm": r.fit_seminorm,
            "discard_below": r.discard_below,
            "increasing": r.increasing,
            "failure": r.failure,
            "weighted_gap": r.weighted_gap,
            "decomposition": r.decomposition,
        })).collect::<Vec<_>>(),
        "cross_regime": comparison,
        "forward_runs": cache.len(),
    });
    out.json("summary.json", "stability", &s.grid, body)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyOutcome {
    pub lambda1: f64,
    pub delta0: Delta0,
    pub radii: Vec<f64>,
    pub profiles: Vec<(usize, FrequencyProfile)>,
    pub k_rh_violations: usize,
    pub checks: usize,
}

/// `count` log-spaced radii in `[4h, 0.95 min(δ0, 0.9 dist(centers, Γ))]`.
pub fn frequency_radii(grid: &Grid, centers: &[(f64, f64)], delta0: f64, count: usize) -> Result<Vec<f64>> {
    let lo = 4.0 * grid.spacing();
    let dist = centers.iter().map(|c| grid.distance_to_boundary(c.0, c.1)).fold(f64::INFINITY, f64::min);
    let hi = 0.95 * delta0.min(0.9 * dist / 0.95);
    if !(hi > lo) || count < 2 {
        return Err(LabError::InvalidArgument(format!("no radius grid fits between {lo} and {hi}")));
    }
    Ok((0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect())
}

pub fn run_frequency(cfg: &ExperimentConfig, out: &Output) -> Result<FrequencyOutcome> {
    let s = setup(cfg)?;
    let fc = &cfg.frequency;
    let lambda1 = unit_disk_lambda1()?;
    let d0 = delta0(s.spec.v_upper, fc.delta, lambda1)?;
    let radii = match &cfg.radii {
        Some(r) => r.clone(),
        None => frequency_radii(&s.grid, &fc.centers, d0.value, 12)?,
    };
    let samples = in_class_family(&s.spec, fc.samples, cfg.seed)?;
    let mut profiles = Vec::new();
    for (i, smp) in samples.iter().enumerate() {
        for &c in &fc.centers {
            profiles.push((i, frequency_profile(&smp.u, &smp.v, c, &radii, d0.value)?));
        }
    }
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (i, p) in &profiles {
        for q in 0..p.radii.len() {
            rows.push(format!(
                "{i},{},{},{},{},{},{},{},{}",
                p.center.0, p.center.1, p.radii[q], p.h[q], p.d[q], p.k[q], p.n[q], p.k_le_rh[q] as u8
            ));
        }
        if let Some(v) = &p.vanishing {
            fits.push(format!("{i},{},{},{},{},{}", p.center.0, p.center.1, v.c_fit, v.constant, v.r2));
        }
    }
    out.csv("frequency.csv", "sample,cx,cy,r,H,D,K,N,k_le_rH", &rows)?;
    out.csv("vanishing.csv", "sample,cx,cy,c_fit,constant,r2", &fits)?;
    let k_rh_violations = profiles.iter().map(|(_, p)| p.k_rh_violations).sum();
    let checks = profiles.iter().map(|(_, p)| p.radii.len()).sum();
    let min_r2 = profiles.iter().filter_map(|(_, p)| p.vanishing.map(|v| v.r2)).fold(f64::INFINITY, f64::min);
    let body = json!({
        "lambda1_unit_disk": lambda1,
        "delta0": d0,
        "radii": radii,
        "samples": samples.iter().map(|s| s.descriptor).collect::<Vec<_>>(),
        "k_rh_checks": checks,
        "k_rh_violations": k_rh_violations,
        "max_empirical_c": profiles.iter().map(|(_, p)| p.empirical_c).fold(0.0, f64::max),
        "vanishing_min_r2": if min_r2.is_finite() { Some(min_r2) } else { None },
    });
    out.json("summary.json", "frequency", &s.grid, body)?;
    Ok(FrequencyOutcome { lambda1, delta0: d0, radii, profiles, k_rh_violations, checks })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThreeBallOutcome {
    pub fit: ThreeBallFit,
    pub audit: HeldOutAudit,
    pub held_out_samples: usize,
}

/// Sample index, held-out flag and ball.
pub type TaggedBall<'a> = (usize, bool, BallSample<'a>);

/// Fits the three-ball exponent on the first `threeball.samples` members of
/// `samples` and audits it on the rest.
pub fn three_ball_pipeline<'a>(
    samples: &'a [InClassSample],
    grid: &Grid,
    cfg: &ExperimentConfig,
) -> Result<(ThreeBallOutcome, Vec<TaggedBall<'a>>)> {
    let tc = &cfg.threeball;
    let (k, l, m) = tc.multipliers;
    let held: Vec<bool> = (0..samples.len()).map(|i| i >= tc.samples).collect();
    let mut balls = Vec::new();
    for (i, smp) in samples.iter().enumerate() {
        for (center, r) in
            place_balls(grid, tc.balls_per_sample, tc.r_min, tc.r_max, m, cfg.seed.wrapping_add(i as u64))?
        {
            balls.push((i, held[i], BallSample { field: &smp.u, center, r }));
        }
    }
    let train: Vec<BallSample> = balls.iter().filter(|b| !b.1).map(|b| b.2).collect();
    let test: Vec<BallSample> = balls.iter().filter(|b| b.1).map(|b| b.2).collect();
    let mut fit = three_ball_exponent_fit(&train, k, l, m)?;
    let audit = audit_three_ball(&fit, &test)?;
    fit.held_out = Some(audit.clone());
    let held_out_samples = held.iter().filter(|h| **h).count();
    Ok((ThreeBallOutcome { fit, audit, held_out_samples }, balls))
}

pub fn run_threeball(cfg: &ExperimentConfig, out: &Output) -> Result<ThreeBallOutcome> {
    let s = setup(cfg)?;
    let samples = in_class_family(&s.spec, cfg.threeball.samples + cfg.threeball.held_out, cfg.seed)?;
    let (outcome, balls) = three_ball_pipeline(&samples, &s.grid, cfg)?;
    let (k, l, m) = cfg.threeball.multipliers;
    let mut rows = Vec::new();
    for (i, held, b) in &balls {
        let (a, bb, c) = crate::ucp::three_ball_check(b.field, b.center, b.r, k, l, m)?;
        let slack = if a > 0.0 && bb > 0.0 && c > 0.0 {
            outcome.fit.log_c + outcome.fit.s * (a / c).ln() - (bb / c).ln()
        } else {
            f64::NAN
        };
        rows.push(format!("{i},{},{},{},{},{},{},{},{}", *held as u8, b.center.0, b.center.1, b.r, a, bb, c, slack));
    }
    out.csv("threeball.csv", "sample,held_out,cx,cy,r,a_k,a_l,a_m,slack", &rows)?;
    let body = json!({
        "multipliers": [k, l, m],
        "s": outcome.fit.s,
        "c": outcome.fit.c,
        "spread": outcome.fit.spread,
        "training_balls": outcome.fit.records.len(),
        "dropped": outcome.fit.dropped,
        "held_out_samples": outcome.held_out_samples,
        "held_out_balls": outcome.audit.samples,
        "held_out_violations": outcome.audit.violations,
        "held_out_min_slack": outcome.audit.min_slack,
    });
    out.json("summary.json", "threeball", &s.grid, body)?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpOutcome {
    pub audit: InterpolationAudit,
    /// `min ‖u‖_{L²(B)}` over balls, per in-class sample
    pub weight_minima: Vec<f64>,
}

pub fn run_interp(cfg: &ExperimentConfig, out: &Output) -> Result<InterpOutcome> {
    let s = setup(cfg)?;
    let ic = &cfg.interp;
    let weight = forward(&s.spec.reference, &s.h, &s.spec, ForwardOptions::default())?.u;
    let [x0, y0, x1, y1] = ic.omega;
    let omega = Mask::rectangle(&s.grid, MaskRole::Observation, x0, y0, x1, y1);
    let fns = test_function_family(&s.grid, ic.functions, ic.region, cfg.seed);
    let held = held_out_every_third(ic.functions, ic.held_out);
    let train: Vec<ScalarField> = fns.iter().zip(&held).filter(|p| !*p.1).map(|p| p.0.clone()).collect();
    let test: Vec<ScalarField> = fns.iter().zip(&held).filter(|p| *p.1).map(|p| p.0.clone()).collect();
    let audit = weighted_interpolation_audit(&train, &test, &weight, &omega, ic.alpha)?;
    let samples = in_class_family(&s.spec, cfg.frequency.samples, cfg.seed)?;
    let stride = ((ic.weight_radius / s.grid.spacing()).round() as usize).max(1);
    let mut weight_minima = vec![weight_nondegeneracy(&weight, ic.weight_radius, stride)?];
    for smp in &samples {
        weight_minima.push(weight_nondegeneracy(&smp.u, ic.weight_radius, stride)?);
    }
    let rows: Vec<String> = audit
        .records
        .iter()
        .map(|r| format!("{},{},{},{},{},{}", r.index, r.held_out as u8, r.sup_omega, r.holder, r.weighted_l1, r.slack))
        .collect();
    out.csv("interp.csv", "index,held_out,sup_omega,holder,weighted_l1,slack", &rows)?;
    let body = json!({
        "alpha": audit.alpha,
        "mu": audit.mu,
        "c": audit.c,
        "held_out": audit.held_out_count,
        "violations": audit.violations,
        "skipped_zero": audit.skipped_zero,
        "weight_radius": ic.weight_radius,
        "weight_minima": weight_minima,
    });
    out.json("summary.json", "interp", &s.grid, body)?;
    Ok(InterpOutcome { audit, weight_minima })
}

/// Held-out functions: every third index, starting at 2, until `held_out` are taken.
pub fn held_out_every_third(count: usize, held_out: usize) -> Vec<bool> {
    let mut taken = 0;
    (0..count)
        .map(|i| {
            let h = i % 3 == 2 && taken < held_out;
            taken += h as usize;
            h
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainOutcome {
    pub diameter: f64,
    pub chain: ChainReport,
    pub cone: ConeSequence,
    pub propagation: PropagationReport,
}

pub fn run_chain(cfg: &ExperimentConfig, out: &Output) -> Result<ChainOutcome> {
    let s = setup(cfg)?;
    let cc = &cfg.chain;
    let diameter = geodesic_diameter(&s.grid, cc.diameter_samples, cfg.seed)?.value;
    let path = Polyline::new(geodesic_path(&s.grid, cc.start, cc.end)?)?;
    let chain = ball_chain_along_path(&s.grid, &path, cc.delta, diameter)?;
    let [bx0, by0, bx1, _] = s.grid.domain().bounding_box();
    let cone = ConeSpec {
        apex: (0.5 * (bx0 + bx1), by0),
        axis: (0.0, 1.0),
        half_angle: cc.cone_half_angle,
        length: 2.0 * cc.cone_delta,
    };
    let sequence = cone_ball_sequence(&s.grid, &cone, cc.cone_delta)?;
    let samples = in_class_family(&s.spec, cfg.threeball.samples + cfg.threeball.held_out, cfg.seed)?;
    let (tb, _) = three_ball_pipeline(&samples, &s.grid, cfg)?;
    let u = forward(&s.spec.reference, &s.h, &s.spec, ForwardOptions::default())?.u;
    let propagation = propagation_of_smallness(&u, cc.start, cc.end, cc.delta, &tb.fit, diameter)?;
    let rows: Vec<String> = chain.centers.iter().enumerate().map(|(i, c)| format!("{i},{},{}", c.0, c.1)).collect();
    out.csv("chain.csv", "index,x,y", &rows)?;
    let cone_rows: Vec<String> = sequence
        .balls
        .iter()
        .enumerate()
        .map(|(i, b)| format!("{i},{},{},{},{}", b.center.0, b.center.1, b.rho, b.d))
        .collect();
    out.csv("cone.csv", "index,x,y,rho,d", &cone_rows)?;
    let link_rows: Vec<String> = propagation
        .links
        .iter()
        .map(|l| row(&[l.from.0, l.from.1, l.to.0, l.to.1, l.i_from, l.i_to, l.bound, l.slack]))
        .collect();
    out.csv("links.csv", "from_x,from_y,to_x,to_y,i_from,i_to,bound,slack", &link_rows)?;
    let body = json!({
        "diameter": diameter,
        "n": chain.n,
        "n0": chain.n0,
        "bound_holds": chain.bound_holds,
        "path_length": chain.path_length,
        "cone": { "mu": sequence.mu, "balls": sequence.balls.len(), "contained": sequence.contained, "nested": sequence.nested },
        "propagation": {
            "s": propagation.s,
            "beta": propagation.beta,
            "link_violations": propagation.link_violations,
            "end_holds": propagation.end_holds,
        },
    });
    out.json("summary.json", "chain", &s.grid, body)?;
    Ok(ChainOutcome { diameter, chain, cone: sequence, propagation })
}
