use super::{LabeledMask, Point2};
use crate::error::{Error, Result};

/// Binary mask of the rotated ellipse: pixel centers `p` with
/// `((p - c)·u / r1)^2 + ((p - c)·u⊥ / r2)^2 <= 1`, `u = (cos a, sin a)`.
pub fn rasterize_ellipse(
    center: Point2,
    radii: (f64, f64),
    angle: f64,
    grid: (usize, usize),
) -> Result<LabeledMask> {
    let (r1, r2) = radii;
    if !(r1 > 0.0 && r2 > 0.0 && r1.is_finite() && r2.is_finite()) {
        return Err(Error::invalid(format!("ellipse radii must be positive, got {radii:?}")));
    }
    if !center.is_finite() || !angle.is_finite() {
        return Err(Error::invalid("ellipse center and angle must be finite"));
    }
    let (s, c) = angle.sin_cos();
    let inv_r2 = 1.0 / (r2 * r2);
    // a^2/r1^2 + b^2/r2^2 with b^2 = |d|^2 - a^2; the second form makes
    // circles independent of the angle.
    let cross = 1.0 / (r1 * r1) - inv_r2;
    let (w, h) = grid;

    // Only scan the bounding box of the enclosing circle.
    let reach = r1.max(r2);
    let x_lo = ((center.x - reach).floor().max(0.0) as usize).min(w);
    let x_hi = ((center.x + reach).ceil().max(-1.0) + 1.0).clamp(0.0, w as f64) as usize;
    let y_lo = ((center.y - reach).floor().max(0.0) as usize).min(h);
    let y_hi = ((center.y + reach).ceil().max(-1.0) + 1.0).clamp(0.0, h as f64) as usize;

    let mut mask = LabeledMask::zeros(w, h);
    for y in y_lo..y_hi {
        for x in x_lo..x_hi {
            let dx = x as f64 - center.x;
            let dy = y as f64 - center.y;
            let along = dx * c + dy * s;
            let q = (dx * dx + dy * dy) * inv_r2 + along * along * cross;
            if q <= 1.0 {
                mask.set(x, y, 1);
            }
        }
    }
    Ok(mask)
}
