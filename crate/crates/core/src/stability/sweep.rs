use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::family::PerturbationFamily;
use crate::elliptic::{norm_h1, norm_h1_seminorm, norm_linf, PotentialClassSpec, SOLVE_TOL};
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::forward::{forward, ForwardOptions, ForwardResult};
use crate::geometry::{Grid, Mask, MaskRole};
use crate::reconstruction::{reconstruct, weighted_l2_gap, ReconstructionOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// gap on a compact `ω`, data on `Ω`
    Interior,
    /// gap on all of `Ω` with boundary data bounded away from zero
    Global,
    /// data on the left half `Ω̃` only
    Subdomain,
    /// boundary data vanishing on the bottom edge
    VanishingH,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Interior, Regime::Global, Regime::Subdomain, Regime::VanishingH];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::Global => "global",
            Regime::Subdomain => "subdomain",
            Regime::VanishingH => "vanishing_h",
        }
    }
}

/// Boundary data and masks of one regime.
#[derive(Debug, Clone)]
pub struct RegimeSetup {
    pub regime: Regime,
    pub h: ScalarField,
    /// where `‖V - Ṽ‖_∞` and the weighted gap are measured
    pub omega: Mask,
    /// `Ω̃` for the sub-domain regime
    pub subdomain: Option<Mask>,
}

/// Default geometry on the unit square: `ω = [1/4, 3/4]²`; the sub-domain
/// regime uses `Ω̃ = [0, 1/2] × [0, 1]` and `ω = [1/8, 3/8] × [1/4, 3/4]`;
/// the vanishing regime uses `h = y` and `ω = [1/4, 3/4] × [2h, 1/2]`.
pub fn regime_setup(grid: &Arc<Grid>, regime: Regime) -> RegimeSetup {
    let cc = ScalarField::from_fn(grid.clone(), |x, y| x.cos() * y.cos());
    let obs = |x0, y0, x1, y1| Mask::rectangle(grid, MaskRole::Observation, x0, y0, x1, y1);
    match regime {
        Regime::Interior => RegimeSetup { regime, h: cc, omega: obs(0.25, 0.25, 0.75, 0.75), subdomain: None },
        Regime::Global => {
            RegimeSetup { regime, h: cc, omega: Mask::domain(grid).with_role(MaskRole::Observation), subdomain: None }
        }
        Regime::Subdomain => RegimeSetup {
            regime,
            h: cc,
            omega: obs(0.125, 0.25, 0.375, 0.75),
            subdomain: Some(Mask::rectangle(grid, MaskRole::Subdomain, 0.0, 0.0, 0.5, 1.0)),
        },
        Regime::VanishingH => {
            let two_h = 2.0 * grid.spacing();
            RegimeSetup {
                regime,
                h: ScalarField::from_fn(grid.clone(), |_, y| y),
                omega: obs(0.25, two_h, 0.75, 0.5),
                subdomain: None,
            }
        }
    }
}

/// Forward results keyed by a SHA-256 of `(V, h, grid)`.
#[derive(Debug, Default)]
pub struct ForwardCache {
    entries: Mutex<HashMap<[u8; 32], Arc<ForwardResult>>>,
}

fn content_key(v: &ScalarField, h: &ScalarField) -> [u8; 32] {
    let mut d = Sha256::new();
    let meta = serde_json::to_vec(&v.grid().meta()).expect("grid metadata serializes");
    d.update(&meta);
    for x in v.values().iter().chain(h.values()) {
        d.update(x.to_le_bytes());
    }
    d.finalize().into()
}

impl ForwardCache {
    pub fn new() -> ForwardCache {
        ForwardCache::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_run(
        &self,
        v: &ScalarField,
        h: &ScalarField,
        spec: &PotentialClassSpec,
    ) -> Result<Arc<ForwardResult>> {
        let key = content_key(v, h);
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let r = Arc::new(forward(v, h, spec, ForwardOptions::default())?);
        Ok(self.entries.lock().expect("cache lock").entry(key).or_insert(r).clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub t: f64,
    /// `‖V - Ṽ‖_{L∞(ω)}`
    pub v_gap: f64,
    /// `‖I_V^{1/2} - I_Ṽ^{1/2}‖_{H¹(Ω)}`
    pub data_gap_h1: f64,
    /// same over `Ω̃`
    pub data_gap_h1_sub: Option<f64>,
    /// `|I_V^{1/2} - I_Ṽ^{1/2}|_{H¹(Ω)}`, gradient part only
    pub data_gap_h1_semi: f64,
    /// `‖I_V^{1/2}(V - Ṽ)‖_{L²(ω)}`
    pub weighted_gap: f64,
    /// `‖V_rec(I_Ṽ) - Ṽ‖_{L∞(ω)}`
    pub reconstruction_error: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub workers: Option<usize>,
    pub reconstruct: bool,
    pub reconstruction: ReconstructionOptions,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub regime: Regime,
    /// records in amplitude order; truncated before the first failure
    pub records: Vec<StabilityRecord>,
    pub failure: Option<(f64, LabError)>,
    /// both gap columns strictly increase along the sweep
    pub increasing: bool,
    /// `‖I_V^{1/2}‖_{H¹(Ω)}`, the scale of the data
    pub data_scale: f64,
}

pub(super) fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| LabError::InvalidArgument(format!("thread pool: {e}")))
}

fn record(
    t: f64,
    base: &ForwardResult,
    other: &ForwardResult,
    setup: &RegimeSetup,
    opts: &SweepOptions,
) -> Result<StabilityRecord> {
    let g = base.u.grid_arc();
    let domain = Mask::domain(g);
    let dj = base.amplitude.sub(&other.amplitude)?;
    let v_gap = norm_linf(&base.potential.sub(&other.potential)?, &setup.omega)?;
    let data_gap_h1 = norm_h1(&dj, &domain)?;
    let data_gap_h1_semi = norm_h1_seminorm(&dj, &domain)?;
    let data_gap_h1_sub = setup.subdomain.as_ref().map(|m| norm_h1(&dj, m)).transpose()?;
    let weighted_gap = weighted_l2_gap(&base.potential, &other.potential, &base.intensity, &setup.omega)?;
    let reconstruction_error = if opts.reconstruct {
        let r = reconstruct(&other.intensity, &setup.h, &opts.reconstruction)?;
        Some(norm_linf(&r.v_rec.sub(&other.potential)?, &setup.omega)?)
    } else {
        None
    };
    Ok(StabilityRecord { t, v_gap, data_gap_h1, data_gap_h1_sub, data_gap_h1_semi, weighted_gap, reconstruction_error })
}

fn strictly_increasing(xs: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = xs.collect();
    v.windows(2).all(|w| w[0] < w[1])
}

/// One record per amplitude of the family; forward runs go through `cache`.
pub fn run_stability_sweep(
    family: &PerturbationFamily,
    setup: &RegimeSetup,
    spec: &PotentialClassSpec,
    opts: &SweepOptions,
    cache: &ForwardCache,
) -> Result<SweepResult> {
    family.base.check_same_grid(&setup.h)?;
    let base = cache.get_or_run(&family.base, &setup.h, spec)?;
    let outcomes: Vec<Result<StabilityRecord>> = pool(opts.workers)?.install(|| {
        family
            .amplitudes
            .par_iter()
            .map(|&t| {
                let other = cache.get_or_run(&family.member(t), &setup.h, spec)?;
                record(t, &base, &other, setup, opts)
            })
            .collect()
    });
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failure = None;
    for (t, o) in family.amplitudes.iter().zip(outcomes) {
        match o {
            Ok(r) => records.push(r),
            Err(e) => {
                failure = Some((*t, e));
                break;
            }
        }
    }
    let increasing = strictly_increasing(records.iter().map(|r| r.v_gap))
        && strictly_increasing(records.iter().map(|r| r.data_gap_h1_sub.unwrap_or(r.data_gap_h1)));
    let data_scale = norm_h1(&base.amplitude, &Mask::domain(base.u.grid()))?;
    Ok(SweepResult { regime: setup.regime, records, failure, increasing, data_scale })
}

/// Recomputes the forward pair at amplitude `t`, for audits that need fields.
pub fn forward_pair(
    family: &PerturbationFamily,
    setup: &RegimeSetup,
    spec: &PotentialClassSpec,
    t: f64,
    cache: &ForwardCache,
) -> Result<(Arc<ForwardResult>, Arc<ForwardResult>)> {
    Ok((cache.get_or_run(&family.base, &setup.h, spec)?, cache.get_or_run(&family.member(t), &setup.h, spec)?))
}

/// Smallest data gap regarded as signal: ten solver tolerances of the data scale.
pub fn default_discard_below(sweep: &SweepResult) -> f64 {
    10.0 * SOLVE_TOL * sweep.data_scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::ClassParameters;
    use crate::geometry::Domain;
    use crate::stability::{
        decomposition_audit, fit_holder_exponent, make_family, BumpShape, DataColumn, FamilyConfig,
    };

    fn spec(n: usize) -> PotentialClassSpec {
        let g = Arc::new(Grid::new(Domain::UnitSquare, n).unwrap());
        let p = ClassParameters { v0: 1.0, v_upper: 4.0, k: 0.5, lipschitz: 20.0, kappa: 0.25, m_bound: 100.0 };
        PotentialClassSpec::new(p, ScalarField::constant(g, 2.0)).unwrap()
    }

    fn centered(amplitudes: Option<Vec<f64>>) -> FamilyConfig {
        FamilyConfig {
            bumps: vec![BumpShape { center: (0.5, 0.5), width: 0.2, weight: 1.0 }],
            random_bumps: 0,
            amplitudes,
            ..Default::default()
        }
    }

    #[test]
    fn zero_amplitude_record_is_zero() {
        let s = spec(33);
        let fam = make_family(&s, &centered(Some(vec![0.0]))).unwrap();
        let cache = ForwardCache::new();
        for regime in Regime::ALL {
            let setup = regime_setup(s.reference.grid_arc(), regime);
            let r = run_stability_sweep(&fam, &setup, &s, &SweepOptions::default(), &cache).unwrap();
            let z = r.records[0];
            assert_eq!((z.v_gap, z.data_gap_h1, z.data_gap_h1_semi, z.weighted_gap), (0.0, 0.0, 0.0, 0.0));
            assert_eq!(z.data_gap_h1_sub, setup.subdomain.as_ref().map(|_| 0.0));
        }
    }

    #[test]
    fn interior_sweep_is_increasing_and_cached() {
        let s = spec(33);
        let fam = make_family(&s, &centered(None)).unwrap();
        let setup = regime_setup(s.reference.grid_arc(), Regime::Interior);
        let cache = ForwardCache::new();
        let opts = SweepOptions { workers: Some(2), ..Default::default() };
        let r = run_stability_sweep(&fam, &setup, &s, &opts, &cache).unwrap();
        assert!(r.failure.is_none() && r.increasing);
        assert_eq!(r.records.len(), 9);
        assert_eq!(cache.len(), 9);
        let again = run_stability_sweep(&fam, &setup, &s, &opts, &cache).unwrap();
        assert_eq!(cache.len(), 9);
        assert_eq!(again.records, r.records);
        let f = fit_holder_exponent(&r.records, DataColumn::Domain, default_discard_below(&r)).unwrap();
        assert!(f.mu > 0.0 && f.r2 >= 0.9, "{f:?}");
        let (a, b) = forward_pair(&fam, &setup, &s, fam.amplitudes[8], &cache).unwrap();
        let d = decomposition_audit(&a, &b).unwrap();
        assert!(d.identity_residual <= 1e-12 && d.amplitude_identity_residual <= 1e-12, "{d:?}");
        assert!(d.triangle_holds && d.ratio.unwrap() > 0.0);
        let same = decomposition_audit(&a, &a).unwrap();
        assert_eq!((same.lhs, same.data_term, same.potential_term, same.ratio), (0.0, 0.0, 0.0, None));
    }

    #[test]
    fn global_regime_measures_whole_domain() {
        let s = spec(33);
        let setup = regime_setup(s.reference.grid_arc(), Regime::Global);
        assert_eq!(setup.omega.len(), s.reference.grid().len());
        let min_h =
            s.reference.grid().boundary_nodes().iter().map(|&k| setup.h.get(k).abs()).fold(f64::INFINITY, f64::min);
        assert!((min_h - 1f64.cos().powi(2)).abs() < 1e-12);
    }
}
