use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{LabError, Result};
use crate::field::ScalarField;

/// Closed disk `B(center, radius)`; its boundary circle is `S(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Ball {
    pub fn new(x: f64, y: f64, radius: f64) -> Ball {
        Ball { center: (x, y), radius }
    }

    pub fn scaled(&self, factor: f64) -> Ball {
        Ball { center: self.center, radius: self.radius * factor }
    }

    fn outside(&self) -> LabError {
        LabError::BallOutsideDomain { x: self.center.0, y: self.center.1, r: self.radius }
    }
}

const BALL_SUBSAMPLES: usize = 16;

/// Node weights for integrating over a disk: `h^2` times the fraction of each
/// dual cell covered by the disk, estimated on a 16x16 sub-sample for cut cells.
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    pub entries: Vec<(usize, f64)>,
}

impl BallQuadrature {
    pub fn new(grid: &Grid, ball: &Ball) -> Result<BallQuadrature> {
        if !(ball.radius > 0.0) {
            return Err(LabError::InvalidArgument(format!("ball radius {}", ball.radius)));
        }
        let h = grid.spacing();
        let (ox, oy) = grid.origin();
        let (cx, cy) = ball.center;
        let r = ball.radius;
        let lo_i = ((cx - r - ox) / h - 0.5).floor();
        let hi_i = ((cx + r - ox) / h + 0.5).ceil();
        let lo_j = ((cy - r - oy) / h - 0.5).floor();
        let hi_j = ((cy + r - oy) / h + 0.5).ceil();
        let mut entries = Vec::new();
        let half = 0.5 * h;
        for fj in (lo_j as i64)..=(hi_j as i64) {
            for fi in (lo_i as i64)..=(hi_i as i64) {
                let x = ox + fi as f64 * h;
                let y = oy + fj as f64 * h;
                // nearest and farthest distance from the centre to the dual cell
                let dx = ((cx - x).abs() - half).max(0.0);
                let dy = ((cy - y).abs() - half).max(0.0);
                let near = dx.hypot(dy);
                if near >= r {
                    continue;
                }
                let fx = (cx - x).abs() + half;
                let fy = (cy - y).abs() + half;
                let far = fx.hypot(fy);
                let frac = if far <= r {
                    1.0
                } else {
                    let s = BALL_SUBSAMPLES;
                    let mut inside = 0usize;
                    for a in 0..s {
                        for b in 0..s {
                            let px = x - half + (a as f64 + 0.5) * h / s as f64;
                            let py = y - half + (b as f64 + 0.5) * h / s as f64;
                            if (px - cx).powi(2) + (py - cy).powi(2) <= r * r {
                                inside += 1;
                            }
                        }
                    }
                    inside as f64 / (s * s) as f64
                };
                if frac == 0.0 {
                    continue;
                }
                if fi < 0 || fj < 0 || fi >= grid.nx() as i64 || fj >= grid.ny() as i64 {
                    return Err(ball.outside());
                }
                let k = grid.index(fi as usize, fj as usize);
                if !grid.in_domain(k) {
                    return Err(ball.outside());
                }
                entries.push((k, frac * h * h));
            }
        }
        Ok(BallQuadrature { entries })
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.entries.iter().map(|&(k, w)| w * values[k]).sum()
    }

    pub fn integrate_with(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.entries.iter().map(|&(k, w)| w * f(k)).sum()
    }
}

/// Trapezoid rule on a circle with bilinear interpolation of nodal values.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub points: Vec<([usize; 4], [f64; 4])>,
    /// arc-length weight per point
    pub arc_weight: f64,
}

impl SphereQuadrature {
    pub fn new(grid: &Grid, ball: &Ball) -> Result<SphereQuadrature> {
        if !(ball.radius > 0.0) {
            return Err(LabError::InvalidArgument(format!("sphere radius {}", ball.radius)));
        }
        let h = grid.spacing();
        let r = ball.radius;
        let base = (2.0 * std::f64::consts::PI * r / h).ceil() as usize;
        let n = (2 * base).max(64);
        let (ox, oy) = grid.origin();
        let mut points = Vec::with_capacity(n);
        for p in 0..n {
            let t = 2.0 * std::f64::consts::PI * p as f64 / n as f64;
            let x = ball.center.0 + r * t.cos();
            let y = ball.center.1 + r * t.sin();
            let fx = (x - ox) / h;
            let fy = (y - oy) / h;
            let eps = 1e-9;
            if fx < -eps || fy < -eps || fx > (grid.nx() - 1) as f64 + eps || fy > (grid.ny() - 1) as f64 + eps {
                return Err(ball.outside());
            }
            let i = (fx.floor().max(0.0) as usize).min(grid.nx() - 2);
            let j = (fy.floor().max(0.0) as usize).min(grid.ny() - 2);
            let a = (fx - i as f64).clamp(0.0, 1.0);
            let b = (fy - j as f64).clamp(0.0, 1.0);
            let nodes = [grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1), grid.index(i + 1, j + 1)];
            let w = [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b];
            for (&k, &wk) in nodes.iter().zip(&w) {
                if wk > 0.0 && !grid.in_domain(k) {
                    return Err(ball.outside());
                }
            }
            points.push((nodes, w));
        }
        Ok(SphereQuadrature { points, arc_weight: 2.0 * std::f64::consts::PI * r / n as f64 })
    }

    /// Bilinear interpolant of `values` at each quadrature point.
    pub fn interpolate<'a>(&'a self, values: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.points.iter().map(move |(nodes, w)| nodes.iter().zip(w).map(|(&k, &wk)| wk * values[k]).sum())
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.arc_weight * self.interpolate(values).sum::<f64>()
    }

    /// Integral of the square of the interpolated values.
    pub fn integrate_square(&self, values: &[f64]) -> f64 {
        self.arc_weight * self.interpolate(values).map(|v| v * v).sum::<f64>()
    }
}

/// Integral of a field over a disk.
pub fn ball_integral(field: &ScalarField, ball: &Ball) -> Result<f64> {
    let q = BallQuadrature::new(field.grid(), ball)?;
    Ok(q.integrate(field.values()))
}

/// Arc-length integral of a field over a circle.
pub fn sphere_integral(field: &ScalarField, ball: &Ball) -> Result<f64> {
    let q = SphereQuadrature::new(field.grid(), ball)?;
    Ok(q.integrate(field.values()))
}

/// `L^2(B)` norm of a field.
pub fn ball_l2_norm(field: &ScalarField, ball: &Ball) -> Result<f64> {
    let q = BallQuadrature::new(field.grid(), ball)?;
    let v = field.values();
    Ok(q.integrate_with(|k| v[k] * v[k]).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use std::f64::consts::PI;
    use std::sync::Arc;

    /// Polar Gauss-free reference: midpoint rule in (rho, theta) on a fine mesh.
    fn polar_reference(f: impl Fn(f64, f64) -> f64, cx: f64, cy: f64, r: f64) -> f64 {
        let (nr, nt) = (2000, 2000);
        let mut s = 0.0;
        for a in 0..nr {
            let rho = (a as f64 + 0.5) * r / nr as f64;
            for b in 0..nt {
                let t = (b as f64 + 0.5) * 2.0 * PI / nt as f64;
                s += f(cx + rho * t.cos(), cy + rho * t.sin()) * rho;
            }
        }
        s * (r / nr as f64) * (2.0 * PI / nt as f64)
    }

    fn square(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Domain::UnitSquare, n).unwrap())
    }

    #[test]
    fn constant_ball_and_sphere() {
        let g = square(65);
        let one = ScalarField::constant(g.clone(), 1.0);
        let b = Ball::new(0.5, 0.5, 0.3);
        let area = ball_integral(&one, &b).unwrap();
        assert!((area / (PI * 0.09) - 1.0).abs() < 0.02);
        let len = sphere_integral(&one, &b).unwrap();
        assert!((len / (2.0 * PI * 0.3) - 1.0).abs() < 0.01);
        let zero = ScalarField::constant(g, 0.0);
        assert_eq!(ball_integral(&zero, &b).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_ball_matches_polar_reference() {
        let g = square(65);
        let f = ScalarField::from_fn(g, |x, _| x * x);
        let got = ball_integral(&f, &Ball::new(0.5, 0.5, 0.2)).unwrap();
        let reference = polar_reference(|x, _| x * x, 0.5, 0.5, 0.2);
        assert!((got / reference - 1.0).abs() < 0.01, "{got} vs {reference}");
    }

    #[test]
    fn x_squared_on_circle_about_origin() {
        let g = Arc::new(Grid::new(Domain::Rectangle { x0: -1.0, y0: -1.0, x1: 1.0, y1: 1.0 }, 129).unwrap());
        let f = ScalarField::from_fn(g, |x, _| x * x);
        for r in [0.1, 0.3, 0.6] {
            let got = sphere_integral(&f, &Ball::new(0.0, 0.0, r)).unwrap();
            assert!((got / (PI * r * r * r) - 1.0).abs() < 0.01, "r={r}: {got}");
        }
    }

    #[test]
    fn cos_product_on_circle_matches_reference() {
        let g = square(129);
        let f = ScalarField::from_fn(g, |x, y| x.cos() * y.cos());
        let got = sphere_integral(&f, &Ball::new(0.5, 0.5, 0.2)).unwrap();
        let n = 20000;
        let reference: f64 = (0..n)
            .map(|p| {
                let t = 2.0 * PI * p as f64 / n as f64;
                (0.5 + 0.2 * t.cos()).cos() * (0.5 + 0.2 * t.sin()).cos()
            })
            .sum::<f64>()
            * 2.0
            * PI
            * 0.2
            / n as f64;
        assert!((got / reference - 1.0).abs() < 0.005);
    }

    #[test]
    fn ball_leaving_domain_is_rejected() {
        let g = square(33);
        let one = ScalarField::constant(g, 1.0);
        let b = Ball::new(0.1, 0.5, 0.2);
        assert!(matches!(ball_integral(&one, &b), Err(LabError::BallOutsideDomain { .. })));
        assert!(matches!(sphere_integral(&one, &b), Err(LabError::BallOutsideDomain { .. })));
        // tangent to the edge is fine
        assert!(ball_integral(&one, &Ball::new(0.2, 0.5, 0.2)).is_ok());
    }

    #[test]
    fn area_and_length_converge_under_refinement() {
        for n in [17, 33, 65, 129] {
            let one = ScalarField::constant(square(n), 1.0);
            let b = Ball::new(0.5, 0.5, 0.3);
            let ea = (ball_integral(&one, &b).unwrap() - PI * 0.09).abs();
            let el = (sphere_integral(&one, &b).unwrap() - 2.0 * PI * 0.3).abs();
            let h = 1.0 / (n - 1) as f64;
            assert!(ea <= 0.3 * h && el <= 0.3 * h, "n={n}: {ea} {el}");
        }
    }
}
