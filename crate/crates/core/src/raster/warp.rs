use super::{check_spacing, AffineTransform, GrayImage, Interp, LabeledMask, Point2};
use crate::error::{Error, Result};

/// What a sample outside the source grid reads.
#[derive(Debug, Clone, Copy)]
enum Edge {
    Clamp,
    Fill(f64),
}

fn sample(img: &GrayImage, x: f64, y: f64, interp: Interp, edge: Edge) -> f64 {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let at = |ix: isize, iy: isize| -> f64 {
        match edge {
            Edge::Clamp => img.get(ix.clamp(0, w - 1) as usize, iy.clamp(0, h - 1) as usize),
            Edge::Fill(v) => {
                if ix < 0 || iy < 0 || ix >= w || iy >= h {
                    v
                } else {
                    img.get(ix as usize, iy as usize)
                }
            }
        }
    };
    match interp {
        Interp::Nearest => at((x + 0.5).floor() as isize, (y + 0.5).floor() as isize),
        Interp::Bilinear => {
            let (xf, yf) = (x.floor(), y.floor());
            let (fx, fy) = (x - xf, y - yf);
            let (ix, iy) = (xf as isize, yf as isize);
            (1.0 - fx) * (1.0 - fy) * at(ix, iy)
                + fx * (1.0 - fy) * at(ix + 1, iy)
                + (1.0 - fx) * fy * at(ix, iy + 1)
                + fx * fy * at(ix + 1, iy + 1)
        }
    }
}

fn sample_label(mask: &LabeledMask, x: f64, y: f64, fill: Option<u32>) -> u32 {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let ix = (x + 0.5).floor() as isize;
    let iy = (y + 0.5).floor() as isize;
    match fill {
        None => mask.get(ix.clamp(0, w - 1) as usize, iy.clamp(0, h - 1) as usize),
        Some(v) => {
            if ix < 0 || iy < 0 || ix >= w || iy >= h {
                v
            } else {
                mask.get(ix as usize, iy as usize)
            }
        }
    }
}

/// Resample `img` onto a `width` x `height` grid through `transform`
/// (source -> destination). Samples outside the source read `fill`.
pub fn warp_image(
    img: &GrayImage,
    transform: &AffineTransform,
    width: usize,
    height: usize,
    spacing: (f64, f64),
    interp: Interp,
    fill: f64,
) -> Result<GrayImage> {
    if !fill.is_finite() {
        return Err(Error::invalid("fill value must be finite"));
    }
    warp_with_edge(img, transform, width, height, spacing, interp, Edge::Fill(fill))
}

fn warp_with_edge(
    img: &GrayImage,
    transform: &AffineTransform,
    width: usize,
    height: usize,
    spacing: (f64, f64),
    interp: Interp,
    edge: Edge,
) -> Result<GrayImage> {
    check_spacing(spacing)?;
    let inv = transform.inverse()?;
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let s = inv.apply(Point2::new(x as f64, y as f64));
            data.push(sample(img, s.x, s.y, interp, edge));
        }
    }
    Ok(GrayImage::from_parts(width, height, spacing, data))
}

/// Nearest-neighbour warp of a label raster; outside samples read `fill`.
pub fn warp_mask(
    mask: &LabeledMask,
    transform: &AffineTransform,
    width: usize,
    height: usize,
    fill: u32,
) -> Result<LabeledMask> {
    warp_mask_with_edge(mask, transform, width, height, Some(fill))
}

fn warp_mask_with_edge(
    mask: &LabeledMask,
    transform: &AffineTransform,
    width: usize,
    height: usize,
    fill: Option<u32>,
) -> Result<LabeledMask> {
    let inv = transform.inverse()?;
    Ok(LabeledMask::from_fn(width, height, |x, y| {
        let s = inv.apply(Point2::new(x as f64, y as f64));
        sample_label(mask, s.x, s.y, fill)
    }))
}

fn resampled_grid(
    dims: (usize, usize),
    spacing: (f64, f64),
    target: (f64, f64),
) -> Result<(usize, usize, AffineTransform)> {
    check_spacing(target)?;
    let sx = spacing.0 / target.0;
    let sy = spacing.1 / target.1;
    let w = (dims.0 as f64 * sx).round() as usize;
    let h = (dims.1 as f64 * sy).round() as usize;
    if w == 0 || h == 0 {
        return Err(Error::rejected(format!(
            "resampling {}x{} at {:?} mm/px to {:?} mm/px yields an empty grid",
            dims.0, dims.1, spacing, target
        )));
    }
    Ok((w, h, AffineTransform::grid_scaling(sx, sy)))
}

/// Resample to `target_spacing` (mm/px). Output dimensions are
/// `round(n * spacing / target)`; samples beyond the source edge replicate
/// the border pixel. The returned transform maps source pixel centers to
/// destination pixel centers.
pub fn resample(
    img: &GrayImage,
    target_spacing: (f64, f64),
    interp: Interp,
) -> Result<(GrayImage, AffineTransform)> {
    let (w, h, t) = resampled_grid(img.dims(), img.spacing(), target_spacing)?;
    let out = warp_with_edge(img, &t, w, h, target_spacing, interp, Edge::Clamp)?;
    Ok((out, t))
}

/// Nearest-neighbour counterpart of [`resample`] for label rasters, which
/// carry no spacing of their own.
pub fn resample_mask(
    mask: &LabeledMask,
    spacing: (f64, f64),
    target_spacing: (f64, f64),
) -> Result<(LabeledMask, AffineTransform)> {
    check_spacing(spacing)?;
    let (w, h, t) = resampled_grid(mask.dims(), spacing, target_spacing)?;
    let out = warp_mask_with_edge(mask, &t, w, h, None)?;
    Ok((out, t))
}

/// Rotate about `center` by `angle` radians (+x toward +y). Output keeps the
/// input grid; source samples outside the image read `fill`.
pub fn rotate_about(
    img: &GrayImage,
    center: Point2,
    angle: f64,
    interp: Interp,
    fill: f64,
) -> Result<(GrayImage, AffineTransform)> {
    if !angle.is_finite() || !center.is_finite() {
        return Err(Error::invalid("rotation angle and center must be finite"));
    }
    let t = AffineTransform::rotation_about(center, angle);
    let (w, h) = img.dims();
    let out = warp_image(img, &t, w, h, img.spacing(), interp, fill)?;
    Ok((out, t))
}

/// Nearest-neighbour rotation of a label raster; uncovered pixels become 0.
pub fn rotate_mask_about(
    mask: &LabeledMask,
    center: Point2,
    angle: f64,
) -> Result<(LabeledMask, AffineTransform)> {
    if !angle.is_finite() || !center.is_finite() {
        return Err(Error::invalid("rotation angle and center must be finite"));
    }
    let t = AffineTransform::rotation_about(center, angle);
    let (w, h) = mask.dims();
    Ok((warp_mask(mask, &t, w, h, 0)?, t))
}

/// Cut a `width` x `height` window whose top-left pixel is `(x0, y0)`;
/// pixels outside the source are zero.
pub fn crop(
    img: &GrayImage,
    x0: isize,
    y0: isize,
    width: usize,
    height: usize,
) -> (GrayImage, AffineTransform) {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height as isize {
        for x in 0..width as isize {
            let (sx, sy) = (x + x0, y + y0);
            data.push(if sx >= 0 && sy >= 0 && sx < w && sy < h {
                img.get(sx as usize, sy as usize)
            } else {
                0.0
            });
        }
    }
    (
        GrayImage::from_parts(width, height, img.spacing(), data),
        AffineTransform::translation(-(x0 as f64), -(y0 as f64)),
    )
}

pub fn crop_mask(mask: &LabeledMask, x0: isize, y0: isize, width: usize, height: usize) -> LabeledMask {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    LabeledMask::from_fn(width, height, |x, y| {
        let (sx, sy) = (x as isize + x0, y as isize + y0);
        if sx >= 0 && sy >= 0 && sx < w && sy < h {
            mask.get(sx as usize, sy as usize)
        } else {
            0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ramp(w: usize, h: usize, spacing: f64) -> GrayImage {
        GrayImage::from_fn(w, h, (spacing, spacing), |x, y| {
            (x as f64 * 0.37 + y as f64 * 1.3).sin() + 2.0
        })
        .unwrap()
    }

    #[test]
    fn resample_dims_follow_spacing_ratio() {
        let img = GrayImage::filled(192, 192, (1.5, 1.5), 0.5).unwrap();
        let (out, _) = resample(&img, (1.0, 1.0), Interp::Bilinear).unwrap();
        assert_eq!(out.dims(), (288, 288));
        assert_eq!(out.spacing(), (1.0, 1.0));
    }

    #[test]
    fn resample_at_same_spacing_is_identity() {
        let img = ramp(17, 11, 1.25);
        let (out, t) = resample(&img, (1.25, 1.25), Interp::Bilinear).unwrap();
        assert_eq!(t, AffineTransform::identity());
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn resample_to_empty_grid_rejected() {
        let img = GrayImage::filled(2, 2, (0.1, 0.1), 0.0).unwrap();
        assert!(matches!(
            resample(&img, (1.0, 1.0), Interp::Bilinear),
            Err(Error::RejectedInput(_))
        ));
    }

    #[test]
    fn checkerboard_upsample_matches_containing_pixel() {
        let img = GrayImage::from_fn(4, 4, (2.0, 2.0), |x, y| ((x + y) % 2) as f64).unwrap();
        let (out, _) = resample(&img, (1.0, 1.0), Interp::Nearest).unwrap();
        assert_eq!(out.dims(), (8, 8));
        // Oracle: a destination pixel center (j + 0.5) / 2 source-pixel widths
        // from the grid edge lies inside source pixel floor((j + 0.5) / 2).
        for y in 0..8 {
            for x in 0..8 {
                let sx = ((x as f64 + 0.5) / 2.0).floor() as usize;
                let sy = ((y as f64 + 0.5) / 2.0).floor() as usize;
                assert_eq!(out.get(x, y), img.get(sx, sy), "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn zero_rotation_is_bit_identical() {
        let img = ramp(13, 9, 1.0);
        let (out, t) = rotate_about(&img, Point2::new(4.3, 2.2), 0.0, Interp::Bilinear, 0.0).unwrap();
        assert_eq!(out, img);
        assert_eq!(t, AffineTransform::identity());
    }

    #[test]
    fn full_turn_restores_interior() {
        let img = ramp(20, 20, 1.0);
        let (out, _) = rotate_about(&img, Point2::new(9.5, 9.5), 2.0 * PI, Interp::Bilinear, 0.0).unwrap();
        for y in 1..19 {
            for x in 1..19 {
                assert!((out.get(x, y) - img.get(x, y)).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn bright_pixel_lands_at_rotated_location() {
        let mut data = vec![0.0; 16 * 16];
        data[5 * 16 + 10] = 1.0;
        let img = GrayImage::new(16, 16, (1.0, 1.0), data).unwrap();
        let center = Point2::new(8.0, 8.0);
        let (out, _) = rotate_about(&img, center, FRAC_PI_2, Interp::Bilinear, 0.0).unwrap();
        // Analytic: (10,5) - (8,8) = (2,-3) turns to (3,2), giving (11,10).
        let (mut sx, mut sy, mut mass) = (0.0, 0.0, 0.0);
        for y in 0..16 {
            for x in 0..16 {
                let v = out.get(x, y);
                sx += v * x as f64;
                sy += v * y as f64;
                mass += v;
            }
        }
        assert!(mass > 0.5);
        assert!((sx / mass - 11.0).abs() <= 0.5 && (sy / mass - 10.0).abs() <= 0.5);
    }

    #[test]
    fn rotation_out_of_bounds_reads_fill() {
        let img = GrayImage::filled(8, 8, (1.0, 1.0), 1.0).unwrap();
        let (out, _) = rotate_about(&img, Point2::new(0.0, 0.0), PI, Interp::Nearest, -3.0).unwrap();
        assert_eq!(out.get(7, 7), -3.0);
        assert_eq!(out.get(0, 0), 1.0);
    }

    #[test]
    fn mask_rotation_keeps_alphabet() {
        let mask = LabeledMask::from_fn(21, 21, |x, y| ((x * 3 + y) % 4) as u32);
        let (out, _) = rotate_mask_about(&mask, Point2::new(10.0, 10.0), 0.7).unwrap();
        assert!(out.alphabet().is_subset(&mask.alphabet()));
    }

    #[test]
    fn crop_pads_with_zeros() {
        let img = GrayImage::filled(4, 4, (1.0, 1.0), 5.0).unwrap();
        let (out, t) = crop(&img, -1, 2, 3, 3);
        assert_eq!(out.data(), &[0.0, 5.0, 5.0, 0.0, 5.0, 5.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.apply(Point2::new(0.0, 2.0)), Point2::new(1.0, 0.0));
    }
}
