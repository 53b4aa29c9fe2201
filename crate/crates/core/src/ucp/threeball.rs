use serde::{Deserialize, Serialize};

use crate::elliptic::norm_l2;
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::fit::envelope_fit;
use crate::geometry::{ball_chain_along_path, ball_l2_norm, geodesic_path, Ball, ChainReport, Mask, Polyline};

/// Slack below which an audited inequality counts as violated.
const AUDIT_TOL: f64 = 1e-12;

/// `(‖v‖_{L²(B(y,kr))}, ‖v‖_{L²(B(y,ℓr))}, ‖v‖_{L²(B(y,mr))})`.
pub fn three_ball_check(v: &ScalarField, y: (f64, f64), r: f64, k: f64, l: f64, m: f64) -> Result<(f64, f64, f64)> {
    if !(k > 0.0 && k < l && l < m) {
        return Err(LabError::InvalidArgument(format!("multipliers must satisfy 0 < k < l < m, got ({k}, {l}, {m})")));
    }
    if !(r > 0.0) {
        return Err(LabError::InvalidArgument(format!("radius {r} must be positive")));
    }
    if !(m * r < v.grid().distance_to_boundary(y.0, y.1)) {
        return Err(LabError::BallOutsideDomain { x: y.0, y: y.1, r: m * r });
    }
    let at = |t: f64| ball_l2_norm(v, &Ball::new(y.0, y.1, t * r));
    Ok((at(k)?, at(l)?, at(m)?))
}

#[derive(Debug, Clone, Copy)]
pub struct BallSample<'a> {
    pub field: &'a ScalarField,
    pub center: (f64, f64),
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeBallRecord {
    pub center: (f64, f64),
    pub r: f64,
    pub a_k: f64,
    pub a_l: f64,
    pub a_m: f64,
    /// `log C + s·log(A_k/A_m) - log(A_ℓ/A_m)`; negative means violated
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutAudit {
    pub samples: usize,
    pub violations: usize,
    pub min_slack: f64,
    pub records: Vec<ThreeBallRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeBallFit {
    pub k: f64,
    pub l: f64,
    pub m: f64,
    pub s: f64,
    pub c: f64,
    pub log_c: f64,
    /// half-width of the residual band at the fitted exponent
    pub spread: f64,
    pub records: Vec<ThreeBallRecord>,
    /// samples with a vanishing ball norm, left out of the fit
    pub dropped: usize,
    pub held_out: Option<HeldOutAudit>,
}

fn records(samples: &[BallSample], k: f64, l: f64, m: f64) -> Result<(Vec<ThreeBallRecord>, usize)> {
    let mut out = Vec::new();
    let mut dropped = 0;
    for s in samples {
        let (a_k, a_l, a_m) = three_ball_check(s.field, s.center, s.r, k, l, m)?;
        if a_k > 0.0 && a_l > 0.0 && a_m > 0.0 {
            out.push(ThreeBallRecord { center: s.center, r: s.r, a_k, a_l, a_m, slack: 0.0 });
        } else {
            dropped += 1;
        }
    }
    Ok((out, dropped))
}

fn slack(log_c: f64, s: f64, r: &ThreeBallRecord) -> f64 {
    log_c + s * (r.a_k / r.a_m).ln() - (r.a_l / r.a_m).ln()
}

/// Fits `A_ℓ ≤ C A_k^s A_m^{1-s}` by a minimax line in
/// `(log(A_k/A_m), log(A_ℓ/A_m))` with `s ∈ [0, 1]`; `C` is the smallest
/// constant covering every training sample. Flat optima resolve to `s = 1/2`.
pub fn three_ball_exponent_fit(samples: &[BallSample], k: f64, l: f64, m: f64) -> Result<ThreeBallFit> {
    if samples.len() < 8 {
        return Err(LabError::InsufficientRecords(format!("{} samples, need at least 8", samples.len())));
    }
    let (mut recs, dropped) = records(samples, k, l, m)?;
    if recs.is_empty() {
        return Err(LabError::DegenerateFamily("every sample has a vanishing ball norm".into()));
    }
    let x: Vec<f64> = recs.iter().map(|r| (r.a_k / r.a_m).ln()).collect();
    let y: Vec<f64> = recs.iter().map(|r| (r.a_l / r.a_m).ln()).collect();
    let env = envelope_fit(&x, &y, 0.0, 1.0)?;
    for r in &mut recs {
        r.slack = slack(env.offset, env.slope, r);
    }
    Ok(ThreeBallFit {
        k,
        l,
        m,
        s: env.slope,
        c: env.offset.exp(),
        log_c: env.offset,
        spread: env.spread,
        records: recs,
        dropped,
        held_out: None,
    })
}

/// Checks the fitted inequality on samples not used in the fit.
pub fn audit_three_ball(fit: &ThreeBallFit, samples: &[BallSample]) -> Result<HeldOutAudit> {
    let (mut recs, _) = records(samples, fit.k, fit.l, fit.m)?;
    for r in &mut recs {
        r.slack = slack(fit.log_c, fit.s, r);
    }
    Ok(HeldOutAudit {
        samples: recs.len(),
        violations: recs.iter().filter(|r| r.slack < -AUDIT_TOL).count(),
        min_slack: recs.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
        records: recs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub i_from: f64,
    pub i_to: f64,
    /// `C M0^{1-s} I_from^s`
    pub bound: f64,
    /// `log bound - log I_to`
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub chain: ChainReport,
    /// `‖u‖_{L²(Ω)}`
    pub m0: f64,
    pub s: f64,
    pub c: f64,
    /// `s^{N+1}`
    pub beta: f64,
    /// `C^{(1-s^{N+1})/(1-s)}`
    pub c1: f64,
    pub links: Vec<ChainLink>,
    pub link_violations: usize,
    pub i0: f64,
    pub i_end: f64,
    /// `C1 M0^{1-β} I0^β`
    pub end_bound: f64,
    pub end_slack: f64,
    pub end_holds: bool,
}

/// Runs the chain from `y0` to `y` and audits the per-link bound
/// `I_{j+1} ≤ C M0^{1-s} I_j^s` and the iterated bound with `β = s^{N+1}`.
pub fn propagation_of_smallness(
    u: &ScalarField,
    y0: (f64, f64),
    y: (f64, f64),
    delta: f64,
    fit: &ThreeBallFit,
    diameter: f64,
) -> Result<PropagationReport> {
    let grid = u.grid();
    let path = if y0 == y { Polyline::new(vec![y0])? } else { Polyline::new(geodesic_path(grid, y0, y)?)? };
    let chain = ball_chain_along_path(grid, &path, delta, diameter)?;
    let m0 = norm_l2(u, &Mask::domain(grid))?;
    let mut points = chain.centers.clone();
    points.push(*path.points.last().expect("nonempty path"));
    let norms = points.iter().map(|p| ball_l2_norm(u, &Ball::new(p.0, p.1, delta))).collect::<Result<Vec<_>>>()?;
    let (s, log_c) = (fit.s, fit.log_c);
    let lm0 = m0.ln();
    let mut links = Vec::with_capacity(points.len() - 1);
    for j in 0..points.len() - 1 {
        let log_bound = log_c + (1.0 - s) * lm0 + s * norms[j].ln();
        links.push(ChainLink {
            from: points[j],
            to: points[j + 1],
            i_from: norms[j],
            i_to: norms[j + 1],
            bound: log_bound.exp(),
            slack: log_bound - norms[j + 1].ln(),
        });
    }
    let steps = links.len() as i32;
    let beta = s.powi(steps);
    // Σ_{j<steps} s^j
    let geometric = if (1.0 - s).abs() < 1e-15 { steps as f64 } else { (1.0 - beta) / (1.0 - s) };
    let log_c1 = log_c * geometric;
    let (i0, i_end) = (norms[0], *norms.last().expect("nonempty"));
    let log_end = log_c1 + (1.0 - beta) * lm0 + beta * i0.ln();
    let end_slack = log_end - i_end.ln();
    Ok(PropagationReport {
        chain,
        m0,
        s,
        c: fit.c,
        beta,
        c1: log_c1.exp(),
        link_violations: links.iter().filter(|l| !(l.slack >= -AUDIT_TOL)).count(),
        links,
        i0,
        i_end,
        end_bound: log_end.exp(),
        end_slack,
        end_holds: end_slack >= -AUDIT_TOL,
    })
}
