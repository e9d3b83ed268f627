use super::GrayImage;
use crate::error::{Error, Result};

/// Normalized 1D Gaussian kernel truncated at radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("kernel sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

/// Gaussian blur with a `ceil(3 sigma)`-radius kernel and zero padding.
///
/// The 2D kernel is the outer product of the normalized 1D kernel, so the
/// two separable passes below compute exactly the direct 2D convolution.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::invalid(format!("sigma must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma)?;
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let src = img.data();

    let mut rows = vec![0.0; src.len()];
    for y in 0..h {
        let row = (y * w) as usize;
        for x in 0..w {
            let lo = (x - r).max(0);
            let hi = (x + r).min(w - 1);
            let mut acc = 0.0;
            for sx in lo..=hi {
                acc += kernel[(sx - x + r) as usize] * src[row + sx as usize];
            }
            rows[row + x as usize] = acc;
        }
    }

    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        let lo = (y - r).max(0);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            let mut acc = 0.0;
            for sy in lo..=hi {
                acc += kernel[(sy - y + r) as usize] * rows[(sy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    Ok(GrayImage::from_parts(img.width(), img.height(), img.spacing(), out))
}
