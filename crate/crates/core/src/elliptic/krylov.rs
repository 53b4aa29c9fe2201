//! Conjugate gradients and MINRES for symmetric operators given as closures.

use crate::error::{LabError, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a Krylov solve.
#[derive(Debug, Clone)]
pub struct KrylovResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// final relative residual `|b - A x| / |b|`
    pub residual: f64,
    pub converged: bool,
    /// CG met a non-positive curvature direction
    pub indefinite: bool,
}

impl KrylovResult {
    pub fn into_result(self) -> Result<Vec<f64>> {
        if self.converged {
            Ok(self.x)
        } else {
            Err(LabError::SolverNonConvergence { iterations: self.iterations, residual: self.residual })
        }
    }
}

/// Conjugate gradients from a zero initial guess.
pub fn conjugate_gradient(apply: impl Fn(&[f64], &mut [f64]), b: &[f64], tol: f64, max_iter: usize) -> KrylovResult {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return KrylovResult { x, iterations: 0, residual: 0.0, converged: true, indefinite: false };
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            let residual = rr.sqrt() / bnorm;
            return KrylovResult { x, iterations: it, residual, converged: false, indefinite: true };
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * bnorm {
            return KrylovResult {
                x,
                iterations: it,
                residual: rr_new.sqrt() / bnorm,
                converged: true,
                indefinite: false,
            };
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    KrylovResult { x, iterations: max_iter, residual: rr.sqrt() / bnorm, converged: false, indefinite: false }
}

/// MINRES (Paige-Saunders) from a zero initial guess; handles symmetric indefinite systems.
pub fn minres(apply: impl Fn(&[f64], &mut [f64]), b: &[f64], tol: f64, max_iter: usize) -> KrylovResult {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return KrylovResult { x, iterations: 0, residual: 0.0, converged: true, indefinite: false };
    }
    let mut v_old = vec![0.0; n];
    let mut v = b.iter().map(|&bi| bi / bnorm).collect::<Vec<_>>();
    let mut beta = bnorm;
    let mut w_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    let (mut c_old, mut s_old, mut c, mut s) = (1.0, 0.0, 1.0, 0.0);
    let mut eta = bnorm;
    let mut av = vec![0.0; n];
    let mut res = bnorm;
    for it in 1..=max_iter {
        apply(&v, &mut av);
        let alpha = dot(&v, &av);
        for i in 0..n {
            av[i] -= alpha * v[i] + beta * v_old[i];
        }
        let beta_new = norm(&av);
        // apply the two previous rotations to the new column
        let delta = c * alpha - c_old * s * beta;
        let rho2 = s * alpha + c_old * c * beta;
        let rho3 = s_old * beta;
        let rho1 = delta.hypot(beta_new);
        if rho1 == 0.0 {
            break;
        }
        let c_new = delta / rho1;
        let s_new = beta_new / rho1;
        let mut w_new = vec![0.0; n];
        for i in 0..n {
            w_new[i] = (v[i] - rho3 * w_old[i] - rho2 * w[i]) / rho1;
            x[i] += c_new * eta * w_new[i];
        }
        eta *= -s_new;
        res = eta.abs();
        if res <= tol * bnorm {
            return KrylovResult { x, iterations: it, residual: res / bnorm, converged: true, indefinite: false };
        }
        if beta_new == 0.0 {
            break;
        }
        for i in 0..n {
            v_old[i] = v[i];
            v[i] = av[i] / beta_new;
        }
        w_old = std::mem::replace(&mut w, w_new);
        beta = beta_new;
        c_old = c;
        s_old = s;
        c = c_new;
        s = s_new;
    }
    KrylovResult { x, iterations: max_iter, residual: res / bnorm, converged: res <= tol * bnorm, indefinite: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(shift: f64) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            let n = x.len();
            for i in 0..n {
                let mut v = (2.0 - shift) * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                y[i] = v;
            }
        }
    }

    fn residual(apply: &impl Fn(&[f64], &mut [f64]), x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        apply(x, &mut ax);
        norm(&ax.iter().zip(b).map(|(a, c)| a - c).collect::<Vec<_>>()) / norm(b)
    }

    #[test]
    fn cg_solves_spd() {
        let a = tridiag(0.0);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).cos()).collect();
        let r = conjugate_gradient(&a, &b, 1e-12, 200);
        assert!(r.converged);
        assert!(residual(&a, &r.x, &b) < 1e-11);
    }

    #[test]
    fn cg_flags_indefinite_and_minres_solves_it() {
        let a = tridiag(1.5);
        let b: Vec<f64> = (0..50).map(|i| 1.0 + (i as f64).sin()).collect();
        let r = conjugate_gradient(&a, &b, 1e-12, 200);
        assert!(!r.converged);
        let m = minres(&a, &b, 1e-12, 500);
        assert!(m.converged, "{}", m.residual);
        assert!(residual(&a, &m.x, &b) < 1e-10);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = tridiag(0.0);
        let r = minres(&a, &[0.0; 5], 1e-12, 10);
        assert!(r.converged && r.x.iter().all(|&v| v == 0.0));
    }
}
