use super::{GrayImage, LabeledMask, Point2};
use crate::error::{Error, Result};

/// Linear-interpolation percentile over all pixels: sorted values at the
/// fractional rank `(q / 100) * (n - 1)`.
pub fn percentile(img: &GrayImage, q: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::invalid(format!("percentile must be in [0, 100], got {q}")));
    }
    if img.data().is_empty() {
        return Err(Error::invalid("percentile of an empty image"));
    }
    let mut v = img.data().to_vec();
    v.sort_by(f64::total_cmp);
    let rank = q / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Ok(if lo == hi {
        v[lo]
    } else {
        v[lo] + frac * (v[hi] - v[lo])
    })
}

/// Linear map of the intensity range onto `[0, 1]`. A constant image maps
/// to all zeros.
pub fn minmax_normalize(img: &GrayImage) -> GrayImage {
    let (lo, hi) = (img.min(), img.max());
    let range = hi - lo;
    let data = if img.data().is_empty() || !(range > 0.0) {
        vec![0.0; img.data().len()]
    } else {
        img.data().iter().map(|&v| (v - lo) / range).collect()
    };
    GrayImage::from_parts(img.width(), img.height(), img.spacing(), data)
}

/// Mean pixel-center coordinate of every pixel carrying `label`.
pub fn centroid(mask: &LabeledMask, label: u32) -> Result<Point2> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (i, &l) in mask.labels().iter().enumerate() {
        if l == label {
            sx += (i % mask.width()) as f64;
            sy += (i / mask.width()) as f64;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::invalid(format!("no pixel carries label {label}")));
    }
    Ok(Point2::new(sx / n as f64, sy / n as f64))
}
