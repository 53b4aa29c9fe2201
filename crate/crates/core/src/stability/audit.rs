use serde::{Deserialize, Serialize};

use super::sweep::StabilityRecord;
use crate::error::{LabError, Result};
use crate::fit::linear_fit;
use crate::forward::ForwardResult;
use crate::geometry::Grid;

/// Which data-gap column an exponent is fitted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataColumn {
    Domain,
    Subdomain,
    /// gradient part of the domain-wide gap
    DomainSeminorm,
}

impl DataColumn {
    fn get(self, r: &StabilityRecord) -> Result<f64> {
        match self {
            DataColumn::Domain => Ok(r.data_gap_h1),
            DataColumn::DomainSeminorm => Ok(r.data_gap_h1_semi),
            DataColumn::Subdomain => {
                r.data_gap_h1_sub.ok_or_else(|| LabError::MissingInput("sub-domain data gap column".into()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub mu: f64,
    pub c: f64,
    pub r2: f64,
    pub used: usize,
    pub discarded: usize,
    /// largest `|log residual|` of the fit
    pub max_log_residual: f64,
}

/// Least squares `log ‖V-Ṽ‖ = μ log(data gap) + log C` over records whose data
/// gap exceeds `discard_below`.
pub fn fit_holder_exponent(records: &[StabilityRecord], column: DataColumn, discard_below: f64) -> Result<HolderFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for r in records {
        let d = column.get(r)?;
        if d > discard_below && r.v_gap > 0.0 {
            x.push(d.ln());
            y.push(r.v_gap.ln());
        }
    }
    if x.len() < 4 {
        return Err(LabError::InsufficientRecords(format!("{} usable records, need at least 4", x.len())));
    }
    let f = linear_fit(&x, &y)?;
    let max_log_residual = x.iter().zip(&y).map(|(a, b)| (b - f.slope * a - f.intercept).abs()).fold(0.0, f64::max);
    Ok(HolderFit {
        mu: f.slope,
        c: f.intercept.exp(),
        r2: f.r2,
        used: x.len(),
        discarded: records.len() - x.len(),
        max_log_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGapReport {
    /// least-squares slope before restriction to `(0, 1]`
    pub raw_slope: f64,
    pub mu_prime: f64,
    /// smallest `C` with `weighted gap ≤ C (Ω̃ data gap)^{μ'}` on the sweep
    pub c: f64,
    pub checked: usize,
    pub violations: usize,
    /// `C (data gap)^{μ'} / weighted gap` per record, `None` for the zero record
    pub ratios: Vec<Option<f64>>,
}

/// Fits the weighted gap against the sub-domain data gap and audits the
/// resulting power bound on every record.
pub fn verify_weighted_gap(records: &[StabilityRecord]) -> Result<WeightedGapReport> {
    let mut pts = Vec::new();
    for r in records {
        let x = DataColumn::Subdomain.get(r)?;
        if x > 0.0 && r.weighted_gap > 0.0 {
            pts.push((x, r.weighted_gap));
        }
    }
    if pts.len() < 2 {
        return Err(LabError::InsufficientRecords(format!("{} positive records, need at least 2", pts.len())));
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let raw_slope = linear_fit(&lx, &ly)?.slope;
    let mu_prime = raw_slope.clamp(1e-6, 1.0);
    let log_c = lx.iter().zip(&ly).map(|(a, b)| b - mu_prime * a).fold(f64::NEG_INFINITY, f64::max);
    let mut violations = 0;
    let mut ratios = Vec::with_capacity(records.len());
    for r in records {
        let x = DataColumn::Subdomain.get(r)?;
        if r.weighted_gap == 0.0 {
            ratios.push(None);
            continue;
        }
        let bound = log_c + mu_prime * x.ln();
        let slack = bound - r.weighted_gap.ln();
        if !(slack >= -1e-12) {
            violations += 1;
        }
        ratios.push(Some(slack.exp()));
    }
    Ok(WeightedGapReport { raw_slope, mu_prime, c: log_c.exp(), checked: records.len(), violations, ratios })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// max pointwise `|(V-Ṽ)u² - [I - Ĩ - Ṽ(|u|+|ũ|)(|u|-|ũ|)]|` over the scale
    pub identity_residual: f64,
    /// max pointwise `|u² - ũ² - [(I-Ĩ)/Ṽ - (I^{1/2}/(VṼ))(V-Ṽ)I^{1/2}]|` over the scale
    pub amplitude_identity_residual: f64,
    /// `‖(V-Ṽ)u²‖_{L¹(Ω)}`
    pub lhs: f64,
    /// `‖I - Ĩ‖_{L¹(Ω)}`
    pub intensity_term: f64,
    /// `‖Ṽ(|u|+|ũ|)(|u|-|ũ|)‖_{L¹(Ω)}`
    pub amplitude_term: f64,
    /// `lhs ≤ intensity_term + amplitude_term`
    pub triangle_holds: bool,
    /// `‖I^{1/2} - Ĩ^{1/2}‖_{L¹(Ω)}`
    pub data_term: f64,
    /// `‖(V-Ṽ)I^{1/2}‖_{L¹(Ω)}`
    pub potential_term: f64,
    /// `lhs / (data_term + potential_term)`, the constant this pair needs
    pub ratio: Option<f64>,
}

fn l1(grid: &Grid, f: impl Fn(usize) -> f64) -> f64 {
    grid.domain_nodes().map(|k| grid.weight(k) * f(k).abs()).sum()
}

/// Evaluates both pointwise identities and every term of the `L¹` estimate
/// for one forward pair.
pub fn decomposition_audit(a: &ForwardResult, b: &ForwardResult) -> Result<DecompositionReport> {
    a.u.check_same_grid(&b.u)?;
    let g = a.u.grid();
    let (v, vt) = (a.potential.values(), b.potential.values());
    let (u, ut) = (a.u.values(), b.u.values());
    let (i, it) = (a.intensity.values(), b.intensity.values());
    let (j, jt) = (a.amplitude.values(), b.amplitude.values());
    let (mut res1, mut scale1, mut res2, mut scale2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in g.domain_nodes() {
        let lhs = (v[k] - vt[k]) * u[k] * u[k];
        let cross = vt[k] * (u[k].abs() + ut[k].abs()) * (u[k].abs() - ut[k].abs());
        let rhs = i[k] - it[k] - cross;
        res1 = res1.max((lhs - rhs).abs());
        scale1 = scale1.max(lhs.abs()).max(i[k].abs()).max(it[k].abs()).max(cross.abs());
        if v[k] > 0.0 && vt[k] > 0.0 {
            let lhs2 = u[k] * u[k] - ut[k] * ut[k];
            let t1 = (i[k] - it[k]) / vt[k];
            let t2 = j[k] / (v[k] * vt[k]) * ((v[k] - vt[k]) * j[k]);
            res2 = res2.max((lhs2 - (t1 - t2)).abs());
            scale2 = scale2.max(lhs2.abs()).max(t1.abs()).max(t2.abs()).max(u[k] * u[k]);
        }
    }
    let rel = |r: f64, s: f64| if s > 0.0 { r / s } else { r };
    let lhs = l1(g, |k| (v[k] - vt[k]) * u[k] * u[k]);
    let intensity_term = l1(g, |k| i[k] - it[k]);
    let amplitude_term = l1(g, |k| vt[k] * (u[k].abs() + ut[k].abs()) * (u[k].abs() - ut[k].abs()));
    let data_term = l1(g, |k| j[k] - jt[k]);
    let potential_term = l1(g, |k| (v[k] - vt[k]) * j[k]);
    let denom = data_term + potential_term;
    Ok(DecompositionReport {
        identity_residual: rel(res1, scale1),
        amplitude_identity_residual: rel(res2, scale2),
        lhs,
        intensity_term,
        amplitude_term,
        triangle_holds: lhs <= (intensity_term + amplitude_term) * (1.0 + 1e-12),
        data_term,
        potential_term,
        ratio: (denom > 0.0).then(|| lhs / denom),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub max_identity_residual: f64,
    /// fitted constant: the largest per-pair ratio
    pub c: f64,
    pub c_min: f64,
    /// `(max - min) / max` of the per-pair ratios
    pub c_variation: f64,
    pub pairs: usize,
    pub violations: usize,
}

pub fn summarize_decomposition(reports: &[DecompositionReport]) -> Result<DecompositionSummary> {
    let ratios: Vec<f64> = reports.iter().filter_map(|r| r.ratio).collect();
    if ratios.is_empty() {
        return Err(LabError::InsufficientRecords("no pair with a nonzero right-hand side".into()));
    }
    let c = ratios.iter().copied().fold(0.0, f64::max);
    let c_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let violations = reports
        .iter()
        .filter(|r| r.lhs > c * (r.data_term + r.potential_term) * (1.0 + 1e-12) || !r.triangle_holds)
        .count();
    let max_identity_residual =
        reports.iter().map(|r| r.identity_residual.max(r.amplitude_identity_residual)).fold(0.0, f64::max);
    Ok(DecompositionSummary {
        max_identity_residual,
        c,
        c_min,
        c_variation: if c > 0.0 { (c - c_min) / c } else { 0.0 },
        pairs: reports.len(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, v_gap: f64, data: f64) -> StabilityRecord {
        StabilityRecord {
            t,
            v_gap,
            data_gap_h1: data,
            data_gap_h1_sub: Some(data),
            data_gap_h1_semi: data,
            weighted_gap: v_gap,
            reconstruction_error: None,
        }
    }

    #[test]
    fn exact_power_records() {
        let records: Vec<StabilityRecord> =
            (0..6).map(|i| 0.01 * 2f64.powi(i)).map(|x| rec(x, std::f64::consts::E * x.sqrt(), x)).collect();
        let f = fit_holder_exponent(&records, DataColumn::Domain, 0.0).unwrap();
        assert!((f.mu - 0.5).abs() < 1e-12 && (f.c - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn degenerate_records() {
        let same: Vec<StabilityRecord> = (0..5).map(|i| rec(i as f64, 1.0 + i as f64, 0.3)).collect();
        assert!(matches!(fit_holder_exponent(&same, DataColumn::Domain, 0.0), Err(LabError::DegenerateRegression(_))));
        let few: Vec<StabilityRecord> = (1..4).map(|i| rec(i as f64, i as f64, i as f64)).collect();
        assert!(matches!(fit_holder_exponent(&few, DataColumn::Domain, 0.0), Err(LabError::InsufficientRecords(_))));
        // the discard level removes records below it
        let mut r: Vec<StabilityRecord> = (1..=5).map(|i| rec(i as f64, i as f64, i as f64)).collect();
        r[0].data_gap_h1 = 1e-20;
        assert_eq!(fit_holder_exponent(&r, DataColumn::Domain, 1e-15).unwrap().discarded, 1);
        let mut missing = r.clone();
        missing[2].data_gap_h1_sub = None;
        assert!(matches!(verify_weighted_gap(&missing), Err(LabError::MissingInput(_))));
    }

    #[test]
    fn weighted_gap_proportional_records() {
        let mut records = vec![rec(0.0, 0.0, 0.0)];
        records.extend((1..=5).map(|i| rec(i as f64, 0.3 * i as f64, i as f64)));
        let r = verify_weighted_gap(&records).unwrap();
        assert!((r.mu_prime - 1.0).abs() < 1e-12 && (r.c - 0.3).abs() < 1e-12);
        assert_eq!(r.violations, 0);
        assert_eq!(r.ratios[0], None);
    }
}
