//! Fixed preprocessing chain: resample to 1 mm, crop 112 x 112 around the
//! myocardium, upsample 2x to 224 x 224, cap at the 98th percentile and
//! min-max normalize.

use crate::error::{Error, Result};
use crate::raster::{
    centroid, crop, crop_mask, ensure_same_grid, minmax_normalize, percentile, resample, resample_mask,
    AffineTransform, GrayImage, Interp, LabeledMask, Point2,
};

pub const INTERMEDIATE_SPACING_MM: f64 = 1.0;
pub const CROP_SIZE: usize = 112;
pub const UPSAMPLE_FACTOR: usize = 2;
pub const OUTPUT_SIZE: usize = CROP_SIZE * UPSAMPLE_FACTOR;
pub const OUTPUT_SPACING_MM: f64 = INTERMEDIATE_SPACING_MM / UPSAMPLE_FACTOR as f64;
pub const CAP_PERCENTILE: f64 = 98.0;

#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    pub image: GrayImage,
    pub myo_mask: LabeledMask,
    pub anterior: Point2,
    pub inferior: Point2,
    /// Input pixel coordinates to output pixel coordinates.
    pub transform: AffineTransform,
}

/// Top-left corner of the crop window that centers `c` (a point on the
/// 1 mm grid) as well as a whole-pixel window can.
pub fn crop_origin(c: Point2) -> (isize, isize) {
    let half = (CROP_SIZE as f64 - 1.0) / 2.0;
    ((c.x - half).round() as isize, (c.y - half).round() as isize)
}

/// Clip intensities above the given percentile, then min-max normalize.
pub fn cap_and_normalize(img: &GrayImage, q: f64) -> Result<GrayImage> {
    let cap = percentile(img, q)?;
    Ok(minmax_normalize(&img.map(|v| v.min(cap))?))
}

pub fn preprocess(img: &GrayImage, myo_mask: &LabeledMask, landmarks: (Point2, Point2)) -> Result<PreprocessOutput> {
    ensure_same_grid(myo_mask, img.width(), img.height())?;
    let (anterior, inferior) = landmarks;
    if !(anterior.is_finite() && inferior.is_finite()) {
        return Err(Error::rejected("RVIP coordinates must be finite"));
    }
    let c = centroid(&myo_mask.select(|l| l != 0), 1)
        .map_err(|_| Error::rejected("myocardium mask is empty"))?;

    let one_mm = (INTERMEDIATE_SPACING_MM, INTERMEDIATE_SPACING_MM);
    let (iso, to_iso) = resample(img, one_mm, Interp::Bilinear)?;
    let (iso_mask, _) = resample_mask(myo_mask, img.spacing(), one_mm)?;

    let (x0, y0) = crop_origin(to_iso.apply(c));
    let (cropped, to_crop) = crop(&iso, x0, y0, CROP_SIZE, CROP_SIZE);
    let cropped_mask = crop_mask(&iso_mask, x0, y0, CROP_SIZE, CROP_SIZE);

    let out_spacing = (OUTPUT_SPACING_MM, OUTPUT_SPACING_MM);
    let (up, to_up) = resample(&cropped, out_spacing, Interp::Bilinear)?;
    let (up_mask, _) = resample_mask(&cropped_mask, one_mm, out_spacing)?;
    if up_mask.count_nonzero() == 0 {
        return Err(Error::rejected("myocardium falls outside the crop window"));
    }

    let transform = to_iso.then(&to_crop).then(&to_up);
    Ok(PreprocessOutput {
        image: cap_and_normalize(&up, CAP_PERCENTILE)?,
        myo_mask: up_mask,
        anterior: transform.apply(anterior),
        inferior: transform.apply(inferior),
        transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize, spacing: f64, c: Point2) -> (GrayImage, LabeledMask) {
        let mask = LabeledMask::from_fn(n, n, |x, y| {
            let r = (x as f64 - c.x).hypot(y as f64 - c.y) * spacing;
            u32::from((18.0..=28.0).contains(&r))
        });
        let img = GrayImage::from_fn(n, n, (spacing, spacing), |x, y| {
            0.2 + 0.6 * f64::from(mask.get(x, y)) + 0.001 * (x + 2 * y) as f64
        })
        .unwrap();
        (img, mask)
    }

    #[test]
    fn output_contract() {
        let (img, mask) = ring(150, 1.5, Point2::new(70.0, 80.0));
        let out = preprocess(&img, &mask, (Point2::new(60.0, 62.0), Point2::new(52.0, 85.0))).unwrap();
        assert_eq!(out.image.dims(), (OUTPUT_SIZE, OUTPUT_SIZE));
        assert_eq!(out.myo_mask.dims(), (OUTPUT_SIZE, OUTPUT_SIZE));
        assert_eq!(out.image.spacing(), (0.5, 0.5));
        assert_eq!(out.image.min(), 0.0);
        assert_eq!(out.image.max(), 1.0);
        assert!(out.myo_mask.alphabet().is_subset(&[0, 1].into()));
        let c = centroid(&out.myo_mask, 1).unwrap();
        assert!((c.x - 111.5).abs() <= 1.5 && (c.y - 111.5).abs() <= 1.5, "{c:?}");
    }

    #[test]
    fn already_isotropic_centered_input_is_a_pure_upsample() {
        let (img, mask) = ring(112, 1.0, Point2::new(55.5, 55.5));
        let a = Point2::new(40.0, 50.0);
        let out = preprocess(&img, &mask, (a, a)).unwrap();
        assert_eq!(out.transform, AffineTransform::grid_scaling(2.0, 2.0));
        assert_eq!(out.anterior, Point2::new(80.5, 100.5));
    }

    #[test]
    fn rejects_bad_input() {
        let (img, _) = ring(60, 1.0, Point2::new(30.0, 30.0));
        let p = Point2::new(1.0, 1.0);
        assert!(matches!(
            preprocess(&img, &LabeledMask::zeros(60, 60), (p, p)),
            Err(Error::RejectedInput(_))
        ));
        assert!(preprocess(&img, &LabeledMask::zeros(59, 60), (p, p)).is_err());
        let (img, mask) = ring(60, 1.0, Point2::new(30.0, 30.0));
        assert!(preprocess(&img, &mask, (Point2::new(f64::NAN, 0.0), p)).is_err());
    }

    #[test]
    fn crop_origin_centres_the_window() {
        assert_eq!(crop_origin(Point2::new(55.5, 55.5)), (0, 0));
        assert_eq!(crop_origin(Point2::new(100.0, 60.2)), (45, 5));
    }
}
