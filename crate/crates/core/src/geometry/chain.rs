//! Chains of balls along interior paths and ball sequences inside boundary cones.

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{LabError, Result};

type Point = (f64, f64);

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Piecewise-linear path parametrized by arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Point>,
}

impl Polyline {
    pub fn new(points: Vec<Point>) -> Result<Polyline> {
        if points.is_empty() {
            return Err(LabError::InvalidArgument("empty path".into()));
        }
        Ok(Polyline { points })
    }

    pub fn segment(a: Point, b: Point) -> Polyline {
        Polyline { points: vec![a, b] }
    }

    /// Circular arc sampled with `n` chords.
    pub fn arc(center: Point, radius: f64, from: f64, to: f64, n: usize) -> Polyline {
        let points = (0..=n)
            .map(|i| {
                let t = from + (to - from) * i as f64 / n as f64;
                (center.0 + radius * t.cos(), center.1 + radius * t.sin())
            })
            .collect();
        Polyline { points }
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    fn start(&self) -> Point {
        self.points[0]
    }
}

/// Ball centres produced by marching along a path with step `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub centers: Vec<Point>,
    pub delta: f64,
    /// number of steps; `centers.len() == n + 1`
    pub n: usize,
    pub path_length: f64,
    pub diameter: f64,
    /// `floor(2 (diameter + 1) / delta)`
    pub n0: usize,
    pub bound_holds: bool,
}

/// Position `(segment, local parameter)` on a polyline.
#[derive(Debug, Clone, Copy)]
struct Cursor {
    seg: usize,
    t: f64,
}

fn at(path: &Polyline, c: Cursor) -> Point {
    let a = path.points[c.seg];
    let b = path.points[(c.seg + 1).min(path.points.len() - 1)];
    (a.0 + c.t * (b.0 - a.0), a.1 + c.t * (b.1 - a.1))
}

/// First point after `from` leaving the open ball `B(center, delta)`, or
/// `None` when the rest of the path stays inside.
fn exit_point(path: &Polyline, from: Cursor, center: Point, delta: f64) -> Option<Cursor> {
    let nseg = path.points.len().saturating_sub(1);
    let mut seg = from.seg;
    let mut t0 = from.t;
    while seg < nseg {
        let a = path.points[seg];
        let b = path.points[seg + 1];
        let seg_len = dist(a, b);
        let end = Cursor { seg, t: 1.0 };
        // the distance to the centre is convex along a segment, so a crossing
        // exists here exactly when the segment end is outside
        if seg_len > 0.0 && dist(at(path, end), center) >= delta {
            let (mut lo, mut hi) = (t0, 1.0);
            let tol = 1e-10 / seg_len;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if dist(at(path, Cursor { seg, t: mid }), center) >= delta {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(Cursor { seg, t: hi });
        }
        seg += 1;
        t0 = 0.0;
    }
    None
}

/// Marches along `path`: `y_0` is the start and `y_{k+1}` the first exit from
/// `B(y_k, delta)`. Stops once the remainder of the path stays in the last ball.
pub fn ball_chain(path: &Polyline, delta: f64, diameter: f64) -> Result<ChainReport> {
    if !(delta > 0.0) {
        return Err(LabError::InvalidArgument(format!("step {delta} must be positive")));
    }
    let mut centers = vec![path.start()];
    let mut cursor = Cursor { seg: 0, t: 0.0 };
    let cap = (path.length() / delta).ceil() as usize * 4 + 8;
    while let Some(next) = exit_point(path, cursor, *centers.last().expect("nonempty"), delta) {
        centers.push(at(path, next));
        cursor = next;
        if centers.len() > cap {
            return Err(LabError::InvalidArgument("ball chain failed to terminate".into()));
        }
    }
    let n = centers.len() - 1;
    let n0 = (2.0 * (diameter + 1.0) / delta).floor() as usize;
    Ok(ChainReport { centers, delta, n, path_length: path.length(), diameter, n0, bound_holds: n <= n0 })
}

/// [`ball_chain`] after checking the path keeps distance `3 delta` from the boundary.
pub fn ball_chain_along_path(grid: &Grid, path: &Polyline, delta: f64, diameter: f64) -> Result<ChainReport> {
    if !(delta > 0.0) {
        return Err(LabError::InvalidArgument(format!("step {delta} must be positive")));
    }
    let step = 0.5 * grid.spacing();
    let mut samples = vec![path.start()];
    for w in path.points.windows(2) {
        let m = (dist(w[0], w[1]) / step).ceil().max(1.0) as usize;
        for s in 1..=m {
            let t = s as f64 / m as f64;
            samples.push((w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1)));
        }
    }
    let tol = 1e-9 * grid.spacing();
    for &(x, y) in &samples {
        let inside = grid.nearest_node(x, y).is_some_and(|k| grid.is_interior(k));
        if !inside || grid.distance_to_boundary(x, y) < 3.0 * delta - tol {
            return Err(LabError::PathOutsideMargin { x, y });
        }
    }
    ball_chain(path, delta, diameter)
}

/// Truncated circular cone `{x : 0 < |x - apex| < length, (x - apex).axis > |x - apex| cos(half_angle)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub apex: Point,
    pub axis: Point,
    pub half_angle: f64,
    pub length: f64,
}

impl ConeSpec {
    pub fn validate(&self) -> Result<()> {
        let norm = self.axis.0.hypot(self.axis.1);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(LabError::InvalidArgument(format!("cone axis has norm {norm}")));
        }
        if !(self.half_angle > 0.0 && self.half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(LabError::InvalidArgument(format!("cone half-angle {}", self.half_angle)));
        }
        if !(self.length > 0.0) {
            return Err(LabError::InvalidArgument(format!("cone length {}", self.length)));
        }
        Ok(())
    }

    /// Membership in the closed cone with absolute slack `tol`.
    pub fn contains_closed(&self, p: Point, tol: f64) -> bool {
        let v = (p.0 - self.apex.0, p.1 - self.apex.1);
        let r = v.0.hypot(v.1);
        if r > self.length + tol {
            return false;
        }
        v.0 * self.axis.0 + v.1 * self.axis.1 >= r * self.half_angle.cos() - tol
    }

    /// Distance from a point on the axis to the lateral boundary.
    fn lateral_distance(&self, d: f64) -> f64 {
        d * self.half_angle.sin()
    }

    /// Ratio `(3 - 2 sin a) / (3 - sin a)` between consecutive balls.
    pub fn ratio(&self) -> f64 {
        let s = self.half_angle.sin();
        (3.0 - 2.0 * s) / (3.0 - s)
    }

    /// Checks that the cone lies in the closed domain, both on a polar sample
    /// and nodewise.
    pub fn check_inside(&self, grid: &Grid) -> Result<()> {
        let h = grid.spacing();
        let (nr, na) = (((self.length / h).ceil() as usize).max(8), 32);
        let base = self.axis.1.atan2(self.axis.0);
        for a in 0..=na {
            let phi = base - self.half_angle + 2.0 * self.half_angle * a as f64 / na as f64;
            for s in 1..=nr {
                let t = self.length * s as f64 / nr as f64;
                let p = (self.apex.0 + t * phi.cos(), self.apex.1 + t * phi.sin());
                if !grid.domain().contains_closed(p.0, p.1) {
                    return Err(LabError::InvalidArgument(format!(
                        "cone point ({:.4}, {:.4}) lies outside the domain",
                        p.0, p.1
                    )));
                }
            }
        }
        let (ox, oy) = grid.origin();
        let r = self.length;
        let lo_i = (((self.apex.0 - r - ox) / h).floor().max(0.0)) as usize;
        let hi_i = (((self.apex.0 + r - ox) / h).ceil() as usize).min(grid.nx() - 1);
        let lo_j = (((self.apex.1 - r - oy) / h).floor().max(0.0)) as usize;
        let hi_j = (((self.apex.1 + r - oy) / h).ceil() as usize).min(grid.ny() - 1);
        for j in lo_j..=hi_j {
            for i in lo_i..=hi_i {
                let k = grid.index(i, j);
                let p = grid.coords(k);
                if dist(p, self.apex) > 0.0 && self.contains_closed(p, -1e-12) && !grid.in_domain(k) {
                    return Err(LabError::InvalidArgument(format!(
                        "cone node ({:.4}, {:.4}) lies outside the domain",
                        p.0, p.1
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeBall {
    pub center: Point,
    pub rho: f64,
    /// distance from the centre to the apex
    pub d: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeSequence {
    pub mu: f64,
    pub balls: Vec<ConeBall>,
    /// the sequence is cut once `rho_k` drops below this (two grid spacings)
    pub min_radius: f64,
    /// every `B(x_k, 3 rho_k)` passed the analytic and nodewise cone test
    pub contained: bool,
    /// every `B(x_{k+1}, rho_{k+1})` lies in `B(x_k, 2 rho_k)`
    pub nested: bool,
}

/// Balls marching down the cone axis toward the apex: `x_0 = apex + delta axis`,
/// `d_k = mu^k delta`, `rho_k = sin(a) d_k / 3`, `x_{k+1} = x_k - (1 - mu) d_k axis`.
pub fn cone_ball_sequence(grid: &Grid, cone: &ConeSpec, delta: f64) -> Result<ConeSequence> {
    cone.validate()?;
    if !(delta > 0.0 && delta <= cone.length / 2.0) {
        return Err(LabError::InvalidArgument(format!(
            "delta {delta} must lie in (0, length/2 = {}]",
            cone.length / 2.0
        )));
    }
    cone.check_inside(grid)?;
    let mu = cone.ratio();
    let vartheta = cone.half_angle.sin() / 3.0;
    let h = grid.spacing();
    let mut balls = Vec::new();
    let mut center = (cone.apex.0 + delta * cone.axis.0, cone.apex.1 + delta * cone.axis.1);
    let mut d = delta;
    let mut rho = vartheta * d;
    let min_radius = 2.0 * h;
    while rho >= min_radius {
        balls.push(ConeBall { center, rho, d });
        let alpha = (1.0 - mu) * d;
        center = (center.0 - alpha * cone.axis.0, center.1 - alpha * cone.axis.1);
        d *= mu;
        rho *= mu;
    }

    let scale = delta.max(h);
    let tol = 1e-12 * scale;
    let mut contained = true;
    for b in &balls {
        let analytic = cone.lateral_distance(b.d) >= 3.0 * b.rho - tol && b.d + 3.0 * b.rho <= cone.length + tol;
        contained &= analytic && nodes_in_cone(grid, cone, b.center, 3.0 * b.rho, tol);
    }
    let nested = balls.windows(2).all(|w| dist(w[0].center, w[1].center) + w[1].rho <= 2.0 * w[0].rho + tol);
    Ok(ConeSequence { mu, balls, min_radius, contained, nested })
}

fn nodes_in_cone(grid: &Grid, cone: &ConeSpec, c: Point, r: f64, tol: f64) -> bool {
    let h = grid.spacing();
    let (ox, oy) = grid.origin();
    let lo_i = ((c.0 - r - ox) / h).floor().max(0.0) as usize;
    let hi_i = (((c.0 + r - ox) / h).ceil() as usize).min(grid.nx() - 1);
    let lo_j = ((c.1 - r - oy) / h).floor().max(0.0) as usize;
    let hi_j = (((c.1 + r - oy) / h).ceil() as usize).min(grid.ny() - 1);
    for j in lo_j..=hi_j {
        for i in lo_i..=hi_i {
            let k = grid.index(i, j);
            let p = grid.coords(k);
            if dist(p, c) <= r && (!cone.contains_closed(p, tol) || !grid.in_domain(k)) {
                return false;
            }
        }
    }
    true
}
