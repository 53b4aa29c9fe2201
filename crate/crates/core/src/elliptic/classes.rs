use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::norms::forward_gradient;
use super::operator::DiscreteOperator;
use super::solve::inverse_norm_estimate;
use crate::error::{LabError, Result};
use crate::field::ScalarField;

/// Parameters of the potential classes and the solution classes.
#[derive(Debug, Clone)]
pub struct PotentialClassSpec {
    /// lower level `v0 > 0`
    pub v0: f64,
    /// upper bound `V0 >= v0`
    pub v_upper: f64,
    /// contraction factor in `(0, 1)`
    pub k: f64,
    pub reference: ScalarField,
    /// Lipschitz budget
    pub lipschitz: f64,
    /// boundary floor
    pub kappa: f64,
    /// solution bound
    pub m_bound: f64,
    reference_inverse_norm: Arc<OnceLock<Result<f64>>>,
}

/// Scalar part of a [`PotentialClassSpec`], suitable for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParameters {
    pub v0: f64,
    pub v_upper: f64,
    pub k: f64,
    pub lipschitz: f64,
    pub kappa: f64,
    pub m_bound: f64,
}

impl PotentialClassSpec {
    pub fn new(params: ClassParameters, reference: ScalarField) -> Result<PotentialClassSpec> {
        let spec = PotentialClassSpec {
            v0: params.v0,
            v_upper: params.v_upper,
            k: params.k,
            reference,
            lipschitz: params.lipschitz,
            kappa: params.kappa,
            m_bound: params.m_bound,
            reference_inverse_norm: Arc::new(OnceLock::new()),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn parameters(&self) -> ClassParameters {
        ClassParameters {
            v0: self.v0,
            v_upper: self.v_upper,
            k: self.k,
            lipschitz: self.lipschitz,
            kappa: self.kappa,
            m_bound: self.m_bound,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if !(self.v0 > 0.0) {
            return bad(format!("v0 = {} must be positive", self.v0));
        }
        if !(self.v_upper >= self.v0) {
            return bad(format!("V0 = {} must be at least v0 = {}", self.v_upper, self.v0));
        }
        if !(self.k > 0.0 && self.k < 1.0) {
            return bad(format!("k = {} must lie in (0, 1)", self.k));
        }
        if !(self.lipschitz > 0.0) || !(self.kappa >= 0.0) || !(self.m_bound > 0.0) {
            return bad("K, kappa and M must be positive".into());
        }
        let g = self.reference.grid();
        if let Some(k) = g.domain_nodes().find(|&k| self.reference.get(k) < 2.0 * self.v0 - 1e-12) {
            let (x, y) = g.coords(k);
            return bad(format!(
                "reference potential {} at ({x:.4}, {y:.4}) is below 2 v0 = {}",
                self.reference.get(k),
                2.0 * self.v0
            ));
        }
        Ok(())
    }

    /// `‖A_{V̄}^{-1}‖`, computed once per spec.
    pub fn reference_inverse_norm(&self) -> Result<f64> {
        self.reference_inverse_norm
            .get_or_init(|| inverse_norm_estimate(&DiscreteOperator::assemble(&self.reference)))
            .clone()
    }

    /// `min(k / ‖A_{V̄}^{-1}‖, v0)`.
    pub fn d0_threshold(&self) -> Result<f64> {
        Ok((self.k / self.reference_inverse_norm()?).min(self.v0))
    }

    /// Same spec with other scalar parameters, sharing the cached reference norm.
    pub fn with_parameters(&self, params: ClassParameters) -> Result<PotentialClassSpec> {
        let spec = PotentialClassSpec {
            v0: params.v0,
            v_upper: params.v_upper,
            k: params.k,
            reference: self.reference.clone(),
            lipschitz: params.lipschitz,
            kappa: params.kappa,
            m_bound: params.m_bound,
            reference_inverse_norm: self.reference_inverse_norm.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D0Report {
    /// `‖V - V̄‖_∞`
    pub deviation: f64,
    pub reference_inverse_norm: f64,
    /// `k / ‖A_{V̄}^{-1}‖`
    pub contraction_bound: f64,
    pub threshold: f64,
    pub member: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D1Report {
    pub d0: D0Report,
    pub sup: f64,
    pub max_gradient: f64,
    /// `sup|V| + max|∇_h V|`
    pub lipschitz_norm: f64,
    pub budget: f64,
    pub member: bool,
}

pub fn check_class_d0(v: &ScalarField, spec: &PotentialClassSpec) -> Result<D0Report> {
    v.check_same_grid(&spec.reference)?;
    let deviation = v.sub(&spec.reference)?.max_abs();
    let inv = spec.reference_inverse_norm()?;
    let contraction_bound = spec.k / inv;
    let threshold = contraction_bound.min(spec.v0);
    Ok(D0Report {
        deviation,
        reference_inverse_norm: inv,
        contraction_bound,
        threshold,
        member: deviation <= threshold,
    })
}

/// Discrete Lipschitz norm `sup|V| + max |∇_h V|` over the domain.
pub fn lipschitz_norm(v: &ScalarField) -> (f64, f64) {
    let (gx, gy) = forward_gradient(v);
    let grad = v.grid().domain_nodes().map(|k| gx[k].hypot(gy[k])).fold(0.0, f64::max);
    (v.max_abs(), grad)
}

pub fn check_class_d1(v: &ScalarField, spec: &PotentialClassSpec) -> Result<D1Report> {
    let d0 = check_class_d0(v, spec)?;
    let (sup, max_gradient) = lipschitz_norm(v);
    let lip = sup + max_gradient;
    Ok(D1Report {
        d0,
        sup,
        max_gradient,
        lipschitz_norm: lip,
        budget: spec.lipschitz,
        member: d0.member && lip <= spec.lipschitz,
    })
}
