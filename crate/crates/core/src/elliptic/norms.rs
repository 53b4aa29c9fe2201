use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::geometry::{Grid, Mask};

fn check(field: &ScalarField, mask: &Mask) -> Result<()> {
    mask.require_nonempty()?;
    if mask.grid_len() != field.grid().len() {
        return Err(LabError::GridMismatch);
    }
    Ok(())
}

fn weighted_sum_sq(grid: &Grid, mask: &Mask, f: impl Fn(usize) -> f64) -> f64 {
    mask.nodes().iter().map(|&k| grid.weight(k) * f(k).powi(2)).sum()
}

/// `L²` norm with the dual-cell node weights of the grid.
pub fn norm_l2(field: &ScalarField, mask: &Mask) -> Result<f64> {
    check(field, mask)?;
    let v = field.values();
    Ok(weighted_sum_sq(field.grid(), mask, |k| v[k]).sqrt())
}

/// `L¹` norm with the same weights.
pub fn norm_l1(field: &ScalarField, mask: &Mask) -> Result<f64> {
    check(field, mask)?;
    let v = field.values();
    Ok(mask.nodes().iter().map(|&k| field.grid().weight(k) * v[k].abs()).sum())
}

pub fn norm_linf(field: &ScalarField, mask: &Mask) -> Result<f64> {
    check(field, mask)?;
    let v = field.values();
    Ok(mask.nodes().iter().map(|&k| v[k].abs()).fold(0.0, f64::max))
}

/// Forward-difference gradient at every domain node, falling back to the
/// backward difference where the forward neighbour is off the domain.
pub fn forward_gradient(field: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let g = field.grid();
    let v = field.values();
    let h = g.spacing();
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    let diff = |i: usize, j: usize, di: i64, dj: i64| -> f64 {
        let k = g.index(i, j);
        let fwd = g.shift(i, j, di, dj).filter(|&m| g.in_domain(m));
        let bwd = g.shift(i, j, -di, -dj).filter(|&m| g.in_domain(m));
        match (fwd, bwd) {
            (Some(m), _) => (v[m] - v[k]) / h,
            (None, Some(m)) => (v[k] - v[m]) / h,
            _ => 0.0,
        }
    };
    for k in g.domain_nodes() {
        let (i, j) = g.ij(k);
        gx[k] = diff(i, j, 1, 0);
        gy[k] = diff(i, j, 0, 1);
    }
    (gx, gy)
}

/// `‖∇f‖_{L²(mask)}` with the forward-difference gradient.
pub fn norm_h1_seminorm(field: &ScalarField, mask: &Mask) -> Result<f64> {
    check(field, mask)?;
    let (gx, gy) = forward_gradient(field);
    Ok(weighted_sum_sq(field.grid(), mask, |k| gx[k].hypot(gy[k])).sqrt())
}

/// Full `H¹` norm `sqrt(‖f‖² + ‖∇f‖²)`.
pub fn norm_h1(field: &ScalarField, mask: &Mask) -> Result<f64> {
    let l2 = norm_l2(field, mask)?;
    let semi = norm_h1_seminorm(field, mask)?;
    Ok(l2.hypot(semi))
}

/// Discrete `H²` surrogate: `H¹` norm plus `L²` norms of the second
/// differences `D_xx`, `D_yy`, `D_xy` over interior nodes.
pub fn h2_surrogate(field: &ScalarField) -> f64 {
    let g = field.grid();
    let v = field.values();
    let h = g.spacing();
    let domain = Mask::domain(g);
    let h1 = norm_h1(field, &domain).unwrap_or(0.0);
    let at = |i: usize, j: usize, di: i64, dj: i64| g.shift(i, j, di, dj).filter(|&m| g.in_domain(m)).map(|m| v[m]);
    let mut second = 0.0;
    for &k in g.interior_nodes() {
        let (i, j) = g.ij(k);
        let c = v[k];
        let (e, w, n, s) = (at(i, j, 1, 0), at(i, j, -1, 0), at(i, j, 0, 1), at(i, j, 0, -1));
        let dxx = e.zip(w).map_or(0.0, |(e, w)| (e - 2.0 * c + w) / (h * h));
        let dyy = n.zip(s).map_or(0.0, |(n, s)| (n - 2.0 * c + s) / (h * h));
        let corners = [at(i, j, 1, 1), at(i, j, -1, -1), at(i, j, 1, -1), at(i, j, -1, 1)];
        let dxy = match corners {
            [Some(a), Some(b), Some(p), Some(q)] => (a + b - p - q) / (4.0 * h * h),
            _ => 0.0,
        };
        second += g.weight(k) * (dxx * dxx + dyy * dyy + 2.0 * dxy * dxy);
    }
    (h1 * h1 + second).sqrt()
}

/// Default pair-scan cutoff: the whole mask up to 65 nodes per side, 0.25 above.
pub fn default_holder_cutoff(grid: &Grid) -> Option<f64> {
    if grid.resolution() <= 65 {
        None
    } else {
        Some(0.25)
    }
}

/// `max |f(x)-f(y)| / |x-y|^α` over node pairs of `mask` within `cutoff`
/// (`None` scans all pairs).
pub fn holder_seminorm(field: &ScalarField, mask: &Mask, alpha: f64, cutoff: Option<f64>) -> Result<f64> {
    check(field, mask)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LabError::InvalidArgument(format!("Hölder exponent {alpha} outside (0, 1]")));
    }
    let g = field.grid();
    let h = g.spacing();
    if let Some(c) = cutoff {
        if c < h {
            return Err(LabError::InvalidArgument(format!("cutoff {c} below grid spacing {h}")));
        }
    }
    let v = field.values();
    let reach = cutoff.map_or(g.nx().max(g.ny()) as i64, |c| (c / h).floor() as i64);
    let limit2 = cutoff.map_or(f64::INFINITY, |c| (c / h) * (c / h) * (1.0 + 1e-12));
    // half-plane stencil so each unordered pair is visited once
    let mut stencil = Vec::new();
    for dj in 0..=reach {
        for di in -reach..=reach {
            let r2 = (di * di + dj * dj) as f64;
            if (dj == 0 && di <= 0) || r2 > limit2 {
                continue;
            }
            stencil.push((di, dj, (h * r2.sqrt()).powf(-alpha)));
        }
    }
    let mut best: f64 = 0.0;
    for &k in mask.nodes() {
        let (i, j) = g.ij(k);
        for &(di, dj, inv) in &stencil {
            let Some(m) = g.shift(i, j, di, dj) else { continue };
            if mask.contains(m) {
                best = best.max((v[m] - v[k]).abs() * inv);
            }
        }
    }
    Ok(best)
}

/// `sup|f| + [f]_α` over the mask.
pub fn holder_norm(field: &ScalarField, mask: &Mask, alpha: f64, cutoff: Option<f64>) -> Result<f64> {
    Ok(norm_linf(field, mask)? + holder_seminorm(field, mask, alpha, cutoff)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use std::sync::Arc;

    fn square(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Domain::UnitSquare, n).unwrap())
    }

    #[test]
    fn constant_field_norms() {
        let g = square(33);
        let m = Mask::domain(&g);
        let f = ScalarField::constant(g, 1.7);
        assert!((norm_l2(&f, &m).unwrap() - 1.7).abs() < 1e-12);
        assert_eq!(norm_linf(&f, &m).unwrap(), 1.7);
        assert!((norm_h1(&f, &m).unwrap() - 1.7).abs() < 1e-12);
        assert_eq!(holder_seminorm(&f, &m, 0.5, None).unwrap(), 0.0);
    }

    #[test]
    fn linear_field_norms() {
        let g = square(129);
        let m = Mask::domain(&g);
        let f = ScalarField::from_fn(g, |x, _| x);
        let h1 = norm_h1(&f, &m).unwrap();
        assert!((h1 / (1.0f64 / 3.0 + 1.0).sqrt() - 1.0).abs() < 0.01);
        assert!((holder_seminorm(&f, &m, 1.0, Some(0.25)).unwrap() - 1.0).abs() < 1e-12);
        assert!(h1 >= norm_l2(&f, &m).unwrap());
    }

    #[test]
    fn cos_product_matches_closed_form() {
        let g = square(129);
        let m = Mask::domain(&g);
        let f = ScalarField::from_fn(g, |x, y| x.cos() * y.cos());
        // ∫_0^1 cos² = (1 + sin 2 / 2) / 2, ∫_0^1 sin² = (1 - sin 2 / 2) / 2
        let c2 = (1.0 + 2f64.sin() / 2.0) / 2.0;
        let s2 = (1.0 - 2f64.sin() / 2.0) / 2.0;
        let l2 = c2 * c2;
        let grad = 2.0 * s2 * c2;
        assert!((norm_l2(&f, &m).unwrap() / l2.sqrt() - 1.0).abs() < 0.01);
        assert!((norm_h1(&f, &m).unwrap() / (l2 + grad).sqrt() - 1.0).abs() < 0.01);
    }

    #[test]
    fn square_root_distance_holder_bound() {
        // |√a - √b| <= √|a-b| so the 1/2-seminorm of √|x - p| is at most 1,
        // attained along rays from p
        let g = square(33);
        let m = Mask::domain(&g);
        let f = ScalarField::from_fn(g, |x, y| (x - 0.5).hypot(y - 0.5).sqrt());
        let s = holder_seminorm(&f, &m, 0.5, None).unwrap();
        assert!((0.9..=1.0 + 1e-12).contains(&s), "{s}");
    }

    #[test]
    fn argument_checks() {
        let g = square(17);
        let m = Mask::domain(&g);
        let f = ScalarField::zeros(g.clone());
        assert!(holder_seminorm(&f, &m, 0.0, None).is_err());
        assert!(holder_seminorm(&f, &m, 0.5, Some(0.01)).is_err());
        let empty = Mask::from_predicate(&g, crate::geometry::MaskRole::Observation, |_| false);
        assert!(matches!(norm_l2(&f, &empty), Err(LabError::EmptyMask(_))));
    }

    #[test]
    fn h2_surrogate_of_quadratic() {
        // f = x²: D_xx = 2 exactly, H² norm² = 1/5 + 4/3 + 4
        let g = square(129);
        let f = ScalarField::from_fn(g, |x, _| x * x);
        let want = (0.2f64 + 4.0 / 3.0 + 4.0).sqrt();
        assert!((h2_surrogate(&f) / want - 1.0).abs() < 0.02);
    }
}
