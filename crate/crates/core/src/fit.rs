//! Regression helpers shared by the experiment modules.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(LabError::InvalidArgument(format!("{} abscissae vs {} ordinates", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(LabError::InsufficientRecords(format!("{n} points, need at least 2")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(LabError::DegenerateRegression("non-finite data".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 1e-300) || sxx <= 1e-24 * x.iter().map(|a| a * a).sum::<f64>() {
        return Err(LabError::DegenerateRegression("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, r2, points: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub constant: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits `y = C x^μ` by least squares in log-log coordinates.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(LabError::DegenerateRegression("power law needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let f = linear_fit(&lx, &ly)?;
    Ok(PowerLawFit { exponent: f.slope, constant: f.intercept.exp(), r2: f.r2, points: f.points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub slope: f64,
    /// smallest `c` with `y_i ≤ slope·x_i + c` for every point
    pub offset: f64,
    /// half-width of the residual band at the chosen slope
    pub spread: f64,
}

fn band(x: &[f64], y: &[f64], s: f64) -> (f64, f64) {
    x.iter().zip(y).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
        let r = b - s * a;
        (lo.min(r), hi.max(r))
    })
}

/// Minimax line fit with slope restricted to `[lo, hi]`: minimizes the
/// residual band width over the slope, breaks ties toward the midpoint
/// `(lo + hi)/2`, and returns the upper envelope offset at that slope.
pub fn envelope_fit(x: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<EnvelopeFit> {
    if x.len() != y.len() || x.is_empty() {
        return Err(LabError::InsufficientRecords("envelope fit needs matching nonempty data".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(LabError::DegenerateFamily("non-finite sample".into()));
    }
    if !(lo < hi) {
        return Err(LabError::InvalidArgument(format!("slope interval [{lo}, {hi}] is empty")));
    }
    let width = |s: f64| {
        let (a, b) = band(x, y, s);
        (b - a) / 2.0
    };
    // the width is convex and piecewise linear in the slope
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if width(m1) <= width(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let s_star = 0.5 * (a + b);
    let best = width(s_star).min(width(lo)).min(width(hi));
    let scale = x.iter().chain(y).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let flat = |s: f64| width(s) <= best + 1e-12 * scale;
    let mid = 0.5 * (lo + hi);
    let slope = if flat(mid) {
        mid
    } else {
        // walk from the minimizer toward the midpoint until the width rises
        let anchor = [s_star, lo, hi].into_iter().find(|&s| flat(s)).unwrap_or(s_star);
        let (mut inside, mut outside) = (anchor, mid);
        for _ in 0..200 {
            let m = 0.5 * (inside + outside);
            if flat(m) {
                inside = m;
            } else {
                outside = m;
            }
        }
        inside
    };
    let (rlo, rhi) = band(x, y, slope);
    Ok(EnvelopeFit { slope, offset: rhi, spread: (rhi - rlo) / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (1..=6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_power_law() {
        let x: Vec<f64> = (1..=8).map(|i| 0.1 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| std::f64::consts::E * v.sqrt()).collect();
        let f = power_law_fit(&x, &y).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12);
        assert!((f.constant - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(linear_fit(&[1.0], &[2.0]), Err(LabError::InsufficientRecords(_))));
        assert!(matches!(linear_fit(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), Err(LabError::DegenerateRegression(_))));
        assert!(power_law_fit(&[0.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn envelope_recovers_line_and_covers_points() {
        let x: Vec<f64> = (0..20).map(|i| -0.1 * i as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 0.3 * v + 0.01 * ((i * 7) % 5) as f64).collect();
        let f = envelope_fit(&x, &y, 0.0, 1.0).unwrap();
        assert!((f.slope - 0.3).abs() < 0.02, "{}", f.slope);
        for (a, b) in x.iter().zip(&y) {
            assert!(*b <= f.slope * a + f.offset + 1e-15);
        }
    }

    #[test]
    fn envelope_tie_break_on_single_point() {
        let f = envelope_fit(&[-1.0, -1.0], &[-0.4, -0.4], 0.0, 1.0).unwrap();
        assert_eq!(f.slope, 0.5);
        assert!((f.offset - 0.1).abs() < 1e-15);
    }

    #[test]
    fn envelope_is_shift_invariant() {
        let x = [-1.0, -2.0, -3.5, -0.7];
        let y = [-0.3, -0.9, -1.2, -0.1];
        let a = envelope_fit(&x, &y, 0.0, 1.0).unwrap();
        let b = envelope_fit(&x, &y.map(|v| v + 2.0), 0.0, 1.0).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-12 && (a.offset + 2.0 - b.offset).abs() < 1e-12);
    }
}
