//! Per-record preparation: preprocess, normalize orientation, and derive the
//! anatomy maps scars are placed against.

use crate::anatomy::{AnatomyMaps, SliceLevel};
use crate::error::{Error, Result};
use crate::orientation::normalize_orientation;
use crate::preprocess::preprocess;
use crate::raster::{centroid, AffineTransform, GrayImage, LabeledMask, Point2};

#[derive(Debug, Clone)]
pub struct PreparedSlice {
    /// 224 x 224, values in `[0, 1]`, oriented.
    pub image: GrayImage,
    pub myo: LabeledMask,
    pub anterior: Point2,
    pub inferior: Point2,
    /// LV centroid on the output grid.
    pub center: Point2,
    pub level: SliceLevel,
    pub lge_negative: bool,
    /// Input pixel coordinates to output pixel coordinates.
    pub transform: AffineTransform,
    /// Segment and layer maps, or why they could not be built.
    pub anatomy: std::result::Result<AnatomyMaps, String>,
}

impl PreparedSlice {
    /// Wrap an already preprocessed, oriented slice.
    pub fn from_oriented(
        image: GrayImage,
        myo: LabeledMask,
        anterior: Point2,
        inferior: Point2,
        level: SliceLevel,
        lge_negative: bool,
        transform: AffineTransform,
    ) -> Result<Self> {
        let center = centroid(&myo.select(|l| l != 0), 1)
            .map_err(|_| Error::rejected("myocardium mask is empty"))?;
        let anatomy = AnatomyMaps::compute(&myo, center, anterior, inferior, level).map_err(|e| e.to_string());
        Ok(PreparedSlice {
            image,
            myo,
            anterior,
            inferior,
            center,
            level,
            lge_negative,
            transform,
            anatomy,
        })
    }
}

/// Preprocess then orient about the LV centroid.
pub fn prepare_slice(
    image: &GrayImage,
    myo_mask: &LabeledMask,
    anterior: Point2,
    inferior: Point2,
    level: SliceLevel,
    lge_negative: bool,
) -> Result<PreparedSlice> {
    let pre = preprocess(image, myo_mask, (anterior, inferior))?;
    let center = centroid(&pre.myo_mask.select(|l| l != 0), 1)?;
    let oriented = normalize_orientation(&pre.image, &[pre.myo_mask], pre.anterior, pre.inferior, center)?;
    let myo = oriented.masks.into_iter().next().expect("one mask in, one out");
    if myo.count_nonzero() == 0 {
        return Err(Error::rejected("myocardium rotated out of the field of view"));
    }
    PreparedSlice::from_oriented(
        oriented.image,
        myo,
        oriented.anterior,
        oriented.inferior,
        level,
        lge_negative,
        pre.transform.then(&oriented.transform),
    )
}
