use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operator::DiscreteOperator;
use crate::error::{LabError, Result};
use crate::field::ScalarField;

/// Relative residual demanded of every linear solve.
pub const SOLVE_TOL: f64 = 1e-12;

const EIGEN_SEED: u64 = 0x1f0b_5eed;
const EIGEN_MAX_ITER: usize = 500;

/// Threshold below which `|λ_min|` counts as a zero eigenvalue: `1e-6 max(|V|_∞, 1)`.
pub fn resonance_threshold(op: &DiscreteOperator) -> f64 {
    1e-6 * op.potential_sup().max(1.0)
}

/// Eigenvalue of smallest magnitude by inverse iteration with shift zero and
/// a Rayleigh-quotient estimate. Cached on the operator.
pub fn smallest_eigenvalue(op: &DiscreteOperator) -> Result<f64> {
    op.eigen.get_or_init(|| inverse_iteration(op)).clone()
}

fn rayleigh(op: &DiscreteOperator, x: &[f64], ax: &mut [f64]) -> f64 {
    op.apply_unknowns(x, ax);
    let num: f64 = x.iter().zip(ax.iter()).map(|(a, b)| a * b).sum();
    let den: f64 = x.iter().map(|a| a * a).sum();
    num / den
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

fn inverse_iteration(op: &DiscreteOperator) -> Result<f64> {
    let n = op.unknowns();
    if n == 0 {
        return Err(LabError::EmptyMask("no interior unknowns".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(EIGEN_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    normalize(&mut x);
    let mut ax = vec![0.0; n];
    let mut lambda = rayleigh(op, &x, &mut ax);
    let abs_tol = 1e-14 * op.norm_bound();
    for _ in 0..EIGEN_MAX_ITER {
        let mut y = op.solve_inexact(&x);
        normalize(&mut y);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(LabError::EigenStagnation(0));
        }
        x = y;
        let next = rayleigh(op, &x, &mut ax);
        let change = (next - lambda).abs();
        lambda = next;
        if change <= abs_tol || change <= 1e-13 * lambda.abs() {
            return Ok(lambda);
        }
    }
    Err(LabError::EigenStagnation(EIGEN_MAX_ITER))
}

/// `1/|λ_min|`, the L²-operator norm of `A^{-1}` for the symmetric operator.
pub fn inverse_norm_estimate(op: &DiscreteOperator) -> Result<f64> {
    let lambda = smallest_eigenvalue(op)?;
    let threshold = resonance_threshold(op);
    if lambda.abs() < threshold {
        return Err(LabError::Resonance { lambda, threshold });
    }
    Ok(1.0 / lambda.abs())
}

/// Solves `A u = f` in the interior with `u = g` on boundary nodes, without
/// the resonance gate. `source` is a nodal field (only interior values used).
pub fn solve_with_source(op: &DiscreteOperator, g: &ScalarField, source: Option<&[f64]>) -> Result<ScalarField> {
    if *g.grid() != *op.grid() {
        return Err(LabError::GridMismatch);
    }
    let mut rhs = op.lift(g.values());
    if let Some(f) = source {
        for (r, &k) in rhs.iter_mut().zip(op.unknown_nodes()) {
            *r += f[k];
        }
    }
    let x = op.solve_unknowns(&rhs, SOLVE_TOL)?;
    ScalarField::from_values(op.grid_arc().clone(), op.scatter(&x, g.values()))
}

/// Solves `Δu + Vu = 0` with `u = h` on the boundary nodes. Refuses operators
/// whose smallest eigenvalue magnitude falls below [`resonance_threshold`].
pub fn solve_dirichlet(op: &DiscreteOperator, h: &ScalarField) -> Result<ScalarField> {
    inverse_norm_estimate(op)?;
    solve_with_source(op, h, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, Grid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn square(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Domain::UnitSquare, n).unwrap())
    }

    fn manufactured_error(n: usize) -> f64 {
        let g = square(n);
        let op = DiscreteOperator::assemble(&ScalarField::constant(g.clone(), 2.0));
        let exact = ScalarField::from_fn(g, |x, y| x.cos() * y.cos());
        let u = solve_dirichlet(&op, &exact).unwrap();
        u.sub(&exact).unwrap().max_abs()
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let (a, b) = (manufactured_error(33), manufactured_error(65));
        assert!((3.4..=4.6).contains(&(a / b)), "{}", a / b);
        assert!(b <= 0.05 / (64.0 * 64.0));
    }

    #[test]
    fn zero_boundary_data_gives_zero() {
        let g = square(33);
        let op = DiscreteOperator::assemble(&ScalarField::constant(g.clone(), 2.0));
        let u = solve_dirichlet(&op, &ScalarField::zeros(g)).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn bump_potential_matches_refined_reference() {
        let v = |x: f64, y: f64| 2.0 + 0.5 * (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.04).exp();
        let solve = |n: usize| {
            let g = square(n);
            let op = DiscreteOperator::assemble(&ScalarField::from_fn(g.clone(), v));
            solve_dirichlet(&op, &ScalarField::from_fn(g, |x, y| x.cos() * y.cos())).unwrap()
        };
        let coarse = solve(33);
        let fine = solve(129);
        let h = 1.0 / 32.0;
        let mut err: f64 = 0.0;
        for k in coarse.grid().domain_nodes() {
            let (x, y) = coarse.grid().coords(k);
            let kf = fine.grid().nearest_node(x, y).unwrap();
            err = err.max((coarse.get(k) - fine.get(kf)).abs());
        }
        assert!(err <= 4.0 * h * h, "{err}");
    }

    /// Dense symmetric eigensolve of the same matrix.
    fn dense_min_abs_eigenvalue(op: &DiscreteOperator) -> f64 {
        let n = op.unknowns();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (i, j, a) in op.entries() {
            m[(i, j)] = a;
        }
        let eig = nalgebra::SymmetricEigen::new(m);
        eig.eigenvalues.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap()
    }

    #[test]
    fn smallest_eigenvalue_matches_dense_oracle() {
        for c in [0.0, 2.0, 40.0] {
            let g = square(17);
            let op = DiscreteOperator::assemble(&ScalarField::constant(g, c));
            let got = smallest_eigenvalue(&op).unwrap();
            let want = dense_min_abs_eigenvalue(&op);
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "c={c}: {got} vs {want}");
        }
    }

    #[test]
    fn laplacian_spectrum_on_fine_grid() {
        let g = square(129);
        let lap = DiscreteOperator::assemble(&ScalarField::zeros(g.clone()));
        let l0 = smallest_eigenvalue(&lap).unwrap();
        assert!((l0 / (2.0 * PI * PI) - 1.0).abs() < 5e-3);
        let shifted = DiscreteOperator::assemble(&ScalarField::constant(g, 2.0));
        let l2 = smallest_eigenvalue(&shifted).unwrap();
        assert!((l2 / (2.0 * PI * PI - 2.0) - 1.0).abs() < 5e-3);
        assert!(((l0 - l2) - 2.0).abs() <= 1e-8 * l0);
        let inv = inverse_norm_estimate(&shifted).unwrap();
        assert!((inv / (1.0 / (2.0 * PI * PI - 2.0)) - 1.0).abs() < 0.01);
        assert_eq!(inv, inverse_norm_estimate(&shifted).unwrap());
    }

    #[test]
    fn resonant_potential_is_detected() {
        let g = square(33);
        let lap = DiscreteOperator::assemble(&ScalarField::zeros(g.clone()));
        let mu = smallest_eigenvalue(&lap).unwrap();
        // reference 2 plus the constant that lands on the first discrete eigenvalue
        let op = DiscreteOperator::assemble(&ScalarField::constant(g.clone(), 2.0 + (mu - 2.0)));
        let h = ScalarField::from_fn(g, |x, y| x.cos() * y.cos());
        assert!(matches!(solve_dirichlet(&op, &h), Err(LabError::Resonance { .. })));
    }

    #[test]
    fn indefinite_operator_solves() {
        // between the first two Dirichlet eigenvalues 2π² and 5π²
        let g = square(33);
        let op = DiscreteOperator::assemble(&ScalarField::constant(g.clone(), 30.0));
        assert!(smallest_eigenvalue(&op).unwrap() < 0.0);
        let h = ScalarField::from_fn(g, |x, y| x + y);
        let u = solve_dirichlet(&op, &h).unwrap();
        let r = op.apply(&u).unwrap();
        assert!(r.max_abs() <= 1e-8 * op.norm_bound() * u.max_abs());
    }
}
