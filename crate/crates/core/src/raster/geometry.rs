use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in pixel coordinates.
///
/// `x` is the column (increasing to the right) and `y` the row (increasing
/// downwards). Pixel `(i, j)` has its center at `x = i`, `y = j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Nearest pixel index, or `None` when that pixel lies outside a
    /// `width` x `height` grid.
    pub fn nearest_pixel(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        let x = (self.x + 0.5).floor();
        let y = (self.y + 0.5).floor();
        if x < 0.0 || y < 0.0 || x >= width as f64 || y >= height as f64 {
            return None;
        }
        Some((x as usize, y as usize))
    }
}

/// A 2x3 affine map `p -> A p + b` from source to destination coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    /// Row-major `[[a, b, tx], [c, d, ty]]`.
    pub matrix: [[f64; 3]; 2],
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineTransform {
    pub const fn identity() -> Self {
        AffineTransform {
            matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        }
    }

    pub fn new(matrix: [[f64; 3]; 2]) -> Result<Self> {
        let t = AffineTransform { matrix };
        if !matrix.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::invalid("affine matrix has non-finite entries"));
        }
        if t.determinant() == 0.0 {
            return Err(Error::invalid("affine matrix is singular"));
        }
        Ok(t)
    }

    pub const fn translation(dx: f64, dy: f64) -> Self {
        AffineTransform {
            matrix: [[1.0, 0.0, dx], [0.0, 1.0, dy]],
        }
    }

    /// Scale about the origin.
    pub const fn scaling(sx: f64, sy: f64) -> Self {
        AffineTransform {
            matrix: [[sx, 0.0, 0.0], [0.0, sy, 0.0]],
        }
    }

    /// Area-aligned rescaling of a pixel grid: the edges of the source grid
    /// (at `-0.5` and `n - 0.5`) map to the edges of the scaled grid, so
    /// `dst = (src + 0.5) * s - 0.5`.
    pub fn grid_scaling(sx: f64, sy: f64) -> Self {
        AffineTransform {
            matrix: [[sx, 0.0, 0.5 * (sx - 1.0)], [0.0, sy, 0.5 * (sy - 1.0)]],
        }
    }

    /// Rotation by `angle` about `center`. Positive angles turn `+x` toward
    /// `+y` (clockwise on screen, since `y` points down).
    pub fn rotation_about(center: Point2, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        AffineTransform {
            matrix: [
                [c, -s, center.x - c * center.x + s * center.y],
                [s, c, center.y - s * center.x - c * center.y],
            ],
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let m = &self.matrix;
        Point2 {
            x: m[0][0] * p.x + m[0][1] * p.y + m[0][2],
            y: m[1][0] * p.x + m[1][1] * p.y + m[1][2],
        }
    }

    /// The transform that applies `self` first and then `next`.
    pub fn then(&self, next: &AffineTransform) -> AffineTransform {
        let a = &next.matrix;
        let b = &self.matrix;
        let mut out = [[0.0; 3]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
            row[2] += a[r][2];
        }
        AffineTransform { matrix: out }
    }

    pub fn inverse(&self) -> Result<AffineTransform> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::invalid("affine matrix is singular"));
        }
        let [[a, b, tx], [c, d, ty]] = self.matrix;
        let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
        Ok(AffineTransform {
            matrix: [
                [ia, ib, -(ia * tx + ib * ty)],
                [ic, id, -(ic * tx + id * ty)],
            ],
        })
    }
}
