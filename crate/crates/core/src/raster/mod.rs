//! Raster and geometry primitives shared by the whole pipeline.
//!
//! All rasters are row-major. Pixel `(x, y)` lives at index `y * width + x`
//! and its center sits at the real coordinate `(x, y)`.

mod distance;
mod draw;
mod filter;
mod geometry;
mod stats;
mod warp;

use std::collections::BTreeSet;

pub use distance::{distance_transform, DistanceField};
pub use draw::rasterize_ellipse;
pub use filter::{gaussian_kernel, gaussian_smooth};
pub use geometry::{AffineTransform, Point2};
pub use stats::{centroid, minmax_normalize, percentile};
pub use warp::{
    crop, crop_mask, resample, resample_mask, rotate_about, rotate_mask_about, warp_image,
    warp_mask,
};

use crate::error::{Error, Result};

/// Interpolation used when sampling a raster at non-integer positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    Nearest,
    #[default]
    Bilinear,
}

/// A 2D grayscale image with physical pixel spacing in mm/px.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    spacing: (f64, f64),
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, spacing: (f64, f64), data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "image data has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        check_spacing(spacing)?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite intensity at index {i}")));
        }
        Ok(GrayImage {
            width,
            height,
            spacing,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, spacing: (f64, f64), value: f64) -> Result<Self> {
        Self::new(width, height, spacing, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        spacing: (f64, f64),
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, spacing, data)
    }

    /// Internal constructor for buffers whose invariants the caller already
    /// guarantees.
    pub(crate) fn from_parts(width: usize, height: usize, spacing: (f64, f64), data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        GrayImage {
            width,
            height,
            spacing,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn spacing(&self) -> (f64, f64) {
        self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn with_spacing(mut self, spacing: (f64, f64)) -> Result<Self> {
        check_spacing(spacing)?;
        self.spacing = spacing;
        Ok(self)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Pixelwise map; the closure must return finite values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.spacing,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// An integer label raster; `0` is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledMask {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabeledMask {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::invalid(format!(
                "mask has {} labels, expected {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        Ok(LabeledMask {
            width,
            height,
            labels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        LabeledMask {
            width,
            height,
            labels: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u32) -> Self {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        LabeledMask {
            width,
            height,
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: u32) {
        self.labels[y * self.width + x] = label;
    }

    /// Distinct labels present, including background if any pixel is 0.
    pub fn alphabet(&self) -> BTreeSet<u32> {
        self.labels.iter().copied().collect()
    }

    pub fn count(&self, label: u32) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn count_nonzero(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    /// Binary mask: `1` wherever the predicate holds on the label.
    pub fn select(&self, pred: impl Fn(u32) -> bool) -> LabeledMask {
        LabeledMask {
            width: self.width,
            height: self.height,
            labels: self.labels.iter().map(|&l| u32::from(pred(l))).collect(),
        }
    }

    /// Pixel coordinates carrying `label`, in row-major order.
    pub fn pixels_with(&self, label: u32) -> Vec<(usize, usize)> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }

    pub fn same_grid(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }
}

pub(crate) fn check_spacing(spacing: (f64, f64)) -> Result<()> {
    if !(spacing.0 > 0.0 && spacing.1 > 0.0 && spacing.0.is_finite() && spacing.1.is_finite()) {
        return Err(Error::invalid(format!(
            "pixel spacing must be positive, got {spacing:?}"
        )));
    }
    Ok(())
}

pub(crate) fn ensure_same_grid(mask: &LabeledMask, width: usize, height: usize) -> Result<()> {
    if !mask.same_grid(width, height) {
        return Err(Error::invalid(format!(
            "grid mismatch: mask is {}x{}, expected {}x{}",
            mask.width(),
            mask.height(),
            width,
            height
        )));
    }
    Ok(())
}
