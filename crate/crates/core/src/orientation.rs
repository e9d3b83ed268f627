//! Rotation that puts the RVIP direction (anterior -> inferior) on +y, so
//! the septum sits on the same side of every slice.

use std::f64::consts::FRAC_PI_2;

use crate::anatomy::wrap_angle;
use crate::error::{Error, Result};
use crate::raster::{
    ensure_same_grid, rotate_about, rotate_mask_about, AffineTransform, GrayImage, Interp, LabeledMask,
    Point2,
};

/// Angle in `(-pi, pi]` that rotates `inferior - anterior` onto +y.
pub fn orientation_angle(anterior: Point2, inferior: Point2) -> Result<f64> {
    if !(anterior.is_finite() && inferior.is_finite()) {
        return Err(Error::DegenerateLandmarks("non-finite RVIP coordinates".into()));
    }
    let (dx, dy) = (inferior.x - anterior.x, inferior.y - anterior.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateLandmarks("anterior and inferior RVIPs coincide".into()));
    }
    Ok(wrap_angle(FRAC_PI_2 - dy.atan2(dx)))
}

#[derive(Debug, Clone)]
pub struct OrientedSlice {
    pub image: GrayImage,
    pub masks: Vec<LabeledMask>,
    pub anterior: Point2,
    pub inferior: Point2,
    pub angle: f64,
    pub transform: AffineTransform,
}

/// Rotate image (bilinear, zero fill), masks (nearest) and landmarks
/// (exactly) about `center`.
pub fn normalize_orientation(
    img: &GrayImage,
    masks: &[LabeledMask],
    anterior: Point2,
    inferior: Point2,
    center: Point2,
) -> Result<OrientedSlice> {
    for m in masks {
        ensure_same_grid(m, img.width(), img.height())?;
    }
    let angle = orientation_angle(anterior, inferior)?;
    let (image, transform) = rotate_about(img, center, angle, Interp::Bilinear, 0.0)?;
    let masks = masks
        .iter()
        .map(|m| rotate_mask_about(m, center, angle).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrientedSlice {
        image,
        masks,
        anterior: transform.apply(anterior),
        inferior: transform.apply(inferior),
        angle,
        transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angle_cases() {
        let a = Point2::new(10.0, 10.0);
        assert_eq!(orientation_angle(a, Point2::new(10.0, 20.0)).unwrap(), 0.0);
        assert!((orientation_angle(a, Point2::new(20.0, 10.0)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((orientation_angle(a, Point2::new(0.0, 10.0)).unwrap() + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(orientation_angle(a, Point2::new(10.0, 0.0)).unwrap(), PI);
        assert!(matches!(orientation_angle(a, a), Err(Error::DegenerateLandmarks(_))));
    }

    #[test]
    fn landmarks_end_up_vertical() {
        let img = GrayImage::from_fn(64, 64, (1.0, 1.0), |x, y| (x * y) as f64).unwrap();
        let (a, b) = (Point2::new(20.0, 30.0), Point2::new(41.0, 37.5));
        let out = normalize_orientation(&img, &[], a, b, Point2::new(32.0, 32.0)).unwrap();
        assert!((out.anterior.x - out.inferior.x).abs() < 1e-9);
        assert!(out.inferior.y > out.anterior.y);
        assert!((out.anterior.distance(out.inferior) - a.distance(b)).abs() < 1e-9);
    }

    #[test]
    fn aligned_input_is_untouched() {
        let img = GrayImage::from_fn(16, 12, (1.0, 1.0), |x, y| (x + 3 * y) as f64 * 0.1).unwrap();
        let mask = LabeledMask::from_fn(16, 12, |x, y| ((x + y) % 3) as u32);
        let out = normalize_orientation(
            &img,
            &[mask.clone()],
            Point2::new(5.0, 2.0),
            Point2::new(5.0, 9.0),
            Point2::new(7.3, 5.1),
        )
        .unwrap();
        assert_eq!(out.image, img);
        assert_eq!(out.masks[0], mask);
    }
}
