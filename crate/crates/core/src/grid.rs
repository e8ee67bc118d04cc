use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Minimum node count: a one-sided fourth-order stencil for the third
/// derivative needs seven nodes, plus margin for the pole reflections.
pub const MIN_POINTS: usize = 9;

/// Uniform grid in the signed distance coordinate `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_points: usize,
    pub spacing: f64,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, n_points: usize) -> Result<Self> {
        if n_points < MIN_POINTS {
            return Err(GeomError::Grid(format!(
                "need at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        if !(r_max > r_min) || !r_min.is_finite() || !r_max.is_finite() {
            return Err(GeomError::Grid(format!("empty interval [{r_min}, {r_max}]")));
        }
        Ok(RadialGrid {
            r_min,
            r_max,
            n_points,
            spacing: (r_max - r_min) / (n_points - 1) as f64,
        })
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.r_max
        } else {
            self.r_min + i as f64 * self.spacing
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.r(i)).collect()
    }

    /// Fractional node index of `r`.
    #[inline]
    pub fn position(&self, r: f64) -> f64 {
        (r - self.r_min) / self.spacing
    }

    pub fn contains(&self, r: f64) -> bool {
        let tol = 1e-9 * self.spacing;
        r >= self.r_min - tol && r <= self.r_max + tol
    }

    /// Index of the node at `r` if `r` is (numerically) a grid node.
    pub fn node_at(&self, r: f64) -> Option<usize> {
        let p = self.position(r);
        let i = p.round();
        if (p - i).abs() < 1e-7 && i >= 0.0 && (i as usize) < self.n_points {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn length(&self) -> f64 {
        self.r_max - self.r_min
    }
}
