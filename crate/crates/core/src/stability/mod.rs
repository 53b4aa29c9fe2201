//! Hölder-stability experiments: admissible perturbation families, amplitude
//! sweeps in four data regimes, exponent fits and the weighted-gap and
//! decomposition audits.

mod audit;
mod family;
mod sweep;

pub use audit::{
    decomposition_audit, fit_holder_exponent, summarize_decomposition, verify_weighted_gap, DataColumn,
    DecompositionReport, DecompositionSummary, HolderFit, WeightedGapReport,
};
pub use family::{make_family, BumpShape, FamilyConfig, PerturbationFamily};
pub use sweep::{
    default_discard_below, forward_pair, regime_setup, run_stability_sweep, ForwardCache, Regime, RegimeSetup,
    StabilityRecord, SweepOptions, SweepResult,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::PotentialClassSpec;
use crate::error::{LabError, Result};

/// First failed amplitude of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeFailure {
    pub t: f64,
    pub code: String,
    pub message: String,
    pub exit_code: i32,
}

/// Sweep, exponent fit and audits of one regime.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub records: Vec<StabilityRecord>,
    pub failure: Option<RegimeFailure>,
    #[serde(skip)]
    pub error: Option<LabError>,
    pub increasing: bool,
    pub discard_below: f64,
    pub fit: Option<HolderFit>,
    pub fit_error: Option<String>,
    /// the same fit against the H¹ seminorm of the domain-wide gap
    pub fit_seminorm: Option<HolderFit>,
    pub weighted_gap: Option<WeightedGapReport>,
    pub decomposition: Option<DecompositionSummary>,
    pub decomposition_pairs: Vec<DecompositionReport>,
}

/// Runs the sweep of `setup.regime` and every audit that applies to it.
pub fn run_regime(
    family: &PerturbationFamily,
    setup: &RegimeSetup,
    spec: &PotentialClassSpec,
    opts: &SweepOptions,
    cache: &ForwardCache,
) -> Result<RegimeReport> {
    let sweep = run_stability_sweep(family, setup, spec, opts, cache)?;
    let discard_below = default_discard_below(&sweep);
    let column = if setup.subdomain.is_some() { DataColumn::Subdomain } else { DataColumn::Domain };
    let (fit, fit_error) = match fit_holder_exponent(&sweep.records, column, discard_below) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.code().to_string())),
    };
    let fit_seminorm = fit_holder_exponent(&sweep.records, DataColumn::DomainSeminorm, discard_below).ok();
    let weighted_gap = if setup.subdomain.is_some() { Some(verify_weighted_gap(&sweep.records)?) } else { None };
    let ts: Vec<f64> = sweep.records.iter().map(|r| r.t).filter(|t| *t > 0.0).collect();
    let decomposition_pairs: Vec<DecompositionReport> = sweep::pool(opts.workers)?.install(|| {
        ts.par_iter()
            .map(|&t| {
                let (a, b) = forward_pair(family, setup, spec, t, cache)?;
                decomposition_audit(&a, &b)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let decomposition =
        if decomposition_pairs.is_empty() { None } else { Some(summarize_decomposition(&decomposition_pairs)?) };
    Ok(RegimeReport {
        regime: sweep.regime,
        failure: sweep.failure.as_ref().map(|(t, e)| RegimeFailure {
            t: *t,
            code: e.code().into(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }),
        error: sweep.failure.map(|(_, e)| e),
        records: sweep.records,
        increasing: sweep.increasing,
        discard_below,
        fit,
        fit_error,
        fit_seminorm,
        weighted_gap,
        decomposition,
        decomposition_pairs,
    })
}
