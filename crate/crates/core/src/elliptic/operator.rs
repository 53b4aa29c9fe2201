use std::sync::{Arc, OnceLock};

use super::band::BandLdl;
use super::krylov::{conjugate_gradient, minres};
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::geometry::Grid;

const NONE: usize = usize::MAX;

/// `A_V = -Δ_h - V` on the interior unknowns with homogeneous Dirichlet rows
/// eliminated. Boundary data enters through [`DiscreteOperator::lift`].
#[derive(Debug)]
pub struct DiscreteOperator {
    grid: Arc<Grid>,
    potential: Vec<f64>,
    inv_h2: f64,
    /// grid node of each unknown
    nodes: Vec<usize>,
    /// unknown index of the east, west, north, south neighbour or `NONE`
    nbr: Vec<[usize; 4]>,
    /// boundary neighbours per unknown
    lift_nodes: Vec<Vec<usize>>,
    diag: Vec<f64>,
    bandwidth: usize,
    factor: OnceLock<Option<BandLdl>>,
    pub(super) eigen: OnceLock<Result<f64>>,
}

/// Builds `A_V` for the potential `v` on `grid`.
pub fn assemble_operator(grid: &Arc<Grid>, v: &ScalarField) -> Result<DiscreteOperator> {
    if !(Arc::ptr_eq(grid, v.grid_arc()) || **grid == *v.grid()) {
        return Err(LabError::GridMismatch);
    }
    Ok(DiscreteOperator::assemble(v))
}

impl DiscreteOperator {
    pub fn assemble(v: &ScalarField) -> DiscreteOperator {
        let grid = v.grid_arc().clone();
        let h = grid.spacing();
        let inv_h2 = 1.0 / (h * h);
        let nodes = grid.interior_nodes().to_vec();
        let mut nbr = Vec::with_capacity(nodes.len());
        let mut lift_nodes = Vec::with_capacity(nodes.len());
        let mut diag = Vec::with_capacity(nodes.len());
        let mut bandwidth = 0;
        for (u, &k) in nodes.iter().enumerate() {
            let (i, j) = grid.ij(k);
            let mut row = [NONE; 4];
            let mut lifts = Vec::new();
            for (slot, (di, dj)) in [(1, 0), (-1, 0), (0, 1), (0, -1)].into_iter().enumerate() {
                let m = grid.shift(i, j, di, dj).expect("interior nodes are off the rectangle edge");
                match grid.unknown_index(m) {
                    Some(w) => {
                        row[slot] = w;
                        bandwidth = bandwidth.max(u.abs_diff(w));
                    }
                    None => lifts.push(m),
                }
            }
            nbr.push(row);
            lift_nodes.push(lifts);
            diag.push(4.0 * inv_h2 - v.get(k));
        }
        DiscreteOperator {
            grid,
            potential: v.values().to_vec(),
            inv_h2,
            nodes,
            nbr,
            lift_nodes,
            diag,
            bandwidth,
            factor: OnceLock::new(),
            eigen: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }
    pub fn unknowns(&self) -> usize {
        self.nodes.len()
    }
    pub fn unknown_nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Largest `|V|` over domain nodes.
    pub fn potential_sup(&self) -> f64 {
        self.grid.domain_nodes().map(|k| self.potential[k].abs()).fold(0.0, f64::max)
    }

    /// Upper bound on the operator norm, used to scale tolerances.
    pub fn norm_bound(&self) -> f64 {
        8.0 * self.inv_h2 + self.potential_sup()
    }

    /// `y = A x` on unknowns.
    pub fn apply_unknowns(&self, x: &[f64], y: &mut [f64]) {
        let c = self.inv_h2;
        for u in 0..x.len() {
            let mut s = self.diag[u] * x[u];
            for &w in &self.nbr[u] {
                if w != NONE {
                    s -= c * x[w];
                }
            }
            y[u] = s;
        }
    }

    /// Sparse entries `(row, col, value)` of the matrix on unknowns.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for u in 0..self.unknowns() {
            out.push((u, u, self.diag[u]));
            for &w in &self.nbr[u] {
                if w != NONE {
                    out.push((u, w, -self.inv_h2));
                }
            }
        }
        out
    }

    /// `(-Δ_h - V) f` at interior nodes using the full nodal values of `f`
    /// (boundary values included); zero elsewhere.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        if *f.grid() != *self.grid {
            return Err(LabError::GridMismatch);
        }
        let vals = f.values();
        let mut out = vec![0.0; vals.len()];
        for (u, &k) in self.nodes.iter().enumerate() {
            let (i, j) = self.grid.ij(k);
            let mut s = self.diag[u] * vals[k];
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let m = self.grid.shift(i, j, di, dj).expect("interior");
                s -= self.inv_h2 * vals[m];
            }
            out[k] = s;
        }
        ScalarField::from_values(self.grid.clone(), out)
    }

    /// Right-hand-side contribution of Dirichlet data on the unknowns.
    pub fn lift(&self, boundary: &[f64]) -> Vec<f64> {
        self.lift_nodes.iter().map(|ms| self.inv_h2 * ms.iter().map(|&m| boundary[m]).sum::<f64>()).collect()
    }

    fn band_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if self.nbr[i].contains(&j) {
            -self.inv_h2
        } else {
            0.0
        }
    }

    fn factorization(&self) -> Option<&BandLdl> {
        self.factor
            .get_or_init(|| BandLdl::factor(self.unknowns(), self.bandwidth, |i, j| self.band_entry(i, j)))
            .as_ref()
    }

    /// True when the factorization has only positive pivots.
    pub fn is_positive_definite(&self) -> Option<bool> {
        self.factorization().map(BandLdl::positive_definite)
    }

    fn residual_norm(&self, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
        let mut ax = vec![0.0; x.len()];
        self.apply_unknowns(x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        (r, n)
    }

    /// Solves `A x = b` on unknowns to relative residual `tol`: band `L D L^T`
    /// with iterative refinement, then CG or MINRES if refinement stalls.
    pub fn solve_unknowns(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        if let Some(f) = self.factorization() {
            let mut x = f.solve(b);
            for _ in 0..4 {
                let (r, rn) = self.residual_norm(&x, b);
                if !rn.is_finite() {
                    break;
                }
                if rn <= tol * bnorm {
                    return Ok(x);
                }
                let dx = f.solve(&r);
                for (xi, di) in x.iter_mut().zip(&dx) {
                    *xi += di;
                }
            }
        }
        self.solve_krylov(b, tol)
    }

    /// Krylov solve only: CG, switching to MINRES on negative curvature.
    pub fn solve_krylov(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let max_iter = 20 * self.unknowns().max(100);
        let apply = |x: &[f64], y: &mut [f64]| self.apply_unknowns(x, y);
        let cg = conjugate_gradient(apply, b, tol, max_iter);
        if cg.converged {
            return Ok(cg.x);
        }
        minres(apply, b, tol, max_iter).into_result()
    }

    /// Best-effort solve for inverse iteration; accuracy is not required.
    pub(super) fn solve_inexact(&self, b: &[f64]) -> Vec<f64> {
        if let Some(f) = self.factorization() {
            let x = f.solve(b);
            if x.iter().all(|v| v.is_finite()) {
                return x;
            }
        }
        let apply = |x: &[f64], y: &mut [f64]| self.apply_unknowns(x, y);
        minres(apply, b, 1e-12, 20 * self.unknowns().max(100)).x
    }

    /// Scatters unknowns into a full nodal vector with the given boundary values.
    pub fn scatter(&self, x: &[f64], boundary: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for &b in self.grid.boundary_nodes() {
            out[b] = boundary[b];
        }
        for (u, &k) in self.nodes.iter().enumerate() {
            out[k] = x[u];
        }
        out
    }

    /// Interior values of a nodal vector in unknown order.
    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&k| full[k]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use proptest::prelude::*;

    fn square(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Domain::UnitSquare, n).unwrap())
    }

    #[test]
    fn linear_fields_are_discretely_harmonic() {
        let g = square(33);
        let op = DiscreteOperator::assemble(&ScalarField::zeros(g.clone()));
        let f = ScalarField::from_fn(g.clone(), |x, y| 3.0 * x - 2.0 * y + 1.0);
        let r = op.apply(&f).unwrap();
        assert!(r.max_abs() < 1e-9);
    }

    #[test]
    fn constant_potential_on_constant_field() {
        let g = square(33);
        let op = DiscreteOperator::assemble(&ScalarField::constant(g.clone(), 1.5));
        let r = op.apply(&ScalarField::constant(g.clone(), 1.0)).unwrap();
        for &k in g.interior_nodes() {
            assert!((r.get(k) + 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn cos_product_residual_is_second_order() {
        let res = |n: usize| {
            let g = square(n);
            let op = DiscreteOperator::assemble(&ScalarField::constant(g.clone(), 2.0));
            let f = ScalarField::from_fn(g, |x, y| x.cos() * y.cos());
            op.apply(&f).unwrap().max_abs()
        };
        let (a, b, c) = (res(33), res(65), res(129));
        for ratio in [a / b, b / c] {
            assert!((3.6..4.4).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let v = ScalarField::zeros(square(17));
        assert!(matches!(assemble_operator(&square(33), &v), Err(LabError::GridMismatch)));
    }

    #[test]
    fn direct_and_krylov_solves_agree() {
        let g = Arc::new(Grid::new(Domain::LShape, 33).unwrap());
        let v = ScalarField::from_fn(g.clone(), |x, y| 2.0 + x * y);
        let op = DiscreteOperator::assemble(&v);
        let b: Vec<f64> = (0..op.unknowns()).map(|u| ((u * 7) % 13) as f64 - 6.0).collect();
        let x1 = op.solve_unknowns(&b, 1e-12).unwrap();
        let x2 = op.solve_krylov(&b, 1e-12).unwrap();
        let diff = x1.iter().zip(&x2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = x1.iter().map(|a| a.abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-9 * scale);
    }

    proptest! {
        #[test]
        fn operator_is_exactly_symmetric(seed in 0u64..1000, res in 9usize..24) {
            let domain = match seed % 3 { 0 => Domain::UnitSquare, 1 => Domain::LShape,
                _ => Domain::Disk { cx: 0.0, cy: 0.0, radius: 1.0, bbox: None } };
            let g = Arc::new(Grid::new(domain, res).unwrap());
            let v = ScalarField::from_fn(g.clone(), |x, y| ((seed as f64) * x + y).sin());
            let op = DiscreteOperator::assemble(&v);
            let e = op.entries();
            let map: std::collections::HashMap<(usize, usize), f64> = e.iter().map(|&(i, j, a)| ((i, j), a)).collect();
            for &(i, j, a) in &e {
                prop_assert_eq!(map.get(&(j, i)).copied(), Some(a));
            }
        }
    }
}
