use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Continuous domain descriptor. The discrete stand-in is built by
/// [`Grid::new`](super::Grid::new).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    UnitSquare,
    Rectangle {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
    /// Disk of the given radius masked out of its bounding rectangle.
    Disk {
        cx: f64,
        cy: f64,
        radius: f64,
        /// Bounding rectangle `[x0, y0, x1, y1]`; defaults to the tight box
        /// padded by two spacings at grid construction.
        #[serde(default)]
        bbox: Option<[f64; 4]>,
    },
    /// Unit square with the closed upper-right quarter `[1/2, 1] x [1/2, 1]` removed.
    LShape,
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::UnitSquare | Domain::LShape => Ok(()),
            Domain::Rectangle { x0, y0, x1, y1 } => {
                if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
                    return Err(LabError::DegenerateDomain(format!("rectangle [{x0}, {x1}] x [{y0}, {y1}]")));
                }
                Ok(())
            }
            Domain::Disk { cx, cy, radius, bbox } => {
                if !(radius > 0.0) || !cx.is_finite() || !cy.is_finite() {
                    return Err(LabError::DegenerateDomain(format!("disk radius {radius}")));
                }
                if let Some([x0, y0, x1, y1]) = bbox {
                    if x0 > cx - radius || x1 < cx + radius || y0 > cy - radius || y1 < cy + radius {
                        return Err(LabError::DegenerateDomain("disk does not fit in its bounding box".into()));
                    }
                }
                Ok(())
            }
        }
    }

    /// Rectangle `[x0, y0, x1, y1]` carrying the grid.
    pub fn bounding_box(&self) -> [f64; 4] {
        match *self {
            Domain::UnitSquare | Domain::LShape => [0.0, 0.0, 1.0, 1.0],
            Domain::Rectangle { x0, y0, x1, y1 } => [x0, y0, x1, y1],
            Domain::Disk { bbox: Some(b), .. } => b,
            Domain::Disk { cx, cy, radius, bbox: None } => [cx - radius, cy - radius, cx + radius, cy + radius],
        }
    }

    pub fn is_rectangular(&self) -> bool {
        matches!(self, Domain::UnitSquare | Domain::Rectangle { .. })
    }

    /// Membership in the open domain.
    pub fn contains_open(&self, x: f64, y: f64) -> bool {
        let [x0, y0, x1, y1] = self.bounding_box();
        match *self {
            Domain::UnitSquare | Domain::Rectangle { .. } => x > x0 && x < x1 && y > y0 && y < y1,
            Domain::Disk { cx, cy, radius, .. } => (x - cx).powi(2) + (y - cy).powi(2) < radius * radius,
            Domain::LShape => x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0 && !(x >= 0.5 && y >= 0.5),
        }
    }

    /// Membership in the closed domain.
    pub fn contains_closed(&self, x: f64, y: f64) -> bool {
        let [x0, y0, x1, y1] = self.bounding_box();
        match *self {
            Domain::UnitSquare | Domain::Rectangle { .. } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
            Domain::Disk { cx, cy, radius, .. } => (x - cx).powi(2) + (y - cy).powi(2) <= radius * radius,
            Domain::LShape => (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) && !(x > 0.5 && y > 0.5),
        }
    }

    /// Euclidean diameter of the continuous domain.
    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Disk { radius, .. } => 2.0 * radius,
            _ => {
                let [x0, y0, x1, y1] = self.bounding_box();
                (x1 - x0).hypot(y1 - y0)
            }
        }
    }

    /// Nonnegative Lipschitz profile vanishing on the boundary and scaled to
    /// a maximum of one. Rectangles use the product `16 (x-x0)(x1-x)(y-y0)(y1-y)/(w^2 h^2)`.
    pub fn cutoff(&self, x: f64, y: f64) -> f64 {
        let [x0, y0, x1, y1] = self.bounding_box();
        match *self {
            Domain::UnitSquare | Domain::Rectangle { .. } => {
                let w = x1 - x0;
                let h = y1 - y0;
                let v = 16.0 * (x - x0) * (x1 - x) * (y - y0) * (y1 - y) / (w * w * h * h);
                v.max(0.0)
            }
            Domain::Disk { cx, cy, radius, .. } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                ((radius * radius - r2) / (radius * radius)).max(0.0)
            }
            Domain::LShape => {
                let rect = 16.0 * x * (1.0 - x) * y * (1.0 - y);
                // distance to the removed quarter, saturated at 1/4
                let dx = (0.5 - x).max(0.0);
                let dy = (0.5 - y).max(0.0);
                let d = dx.hypot(dy).min(0.25) * 4.0;
                if self.contains_closed(x, y) {
                    (rect * d).max(0.0)
                } else {
                    0.0
                }
            }
        }
    }
}
