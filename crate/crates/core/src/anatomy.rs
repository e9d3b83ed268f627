//! AHA-style partitioning of a short-axis myocardium mask.
//!
//! Segments are numbered as in the AHA 17-segment model (basal 1-6, mid
//! 7-12, apical 13-16). Sectors are anchored on the ray from the LV center
//! to the anterior RV insertion point and swept toward the inferior one, so
//! the first sector is always septal.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{distance_transform, ensure_same_grid, LabeledMask, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceLevel {
    Basal,
    Mid,
    Apical,
}

impl SliceLevel {
    pub const ALL: [SliceLevel; 3] = [SliceLevel::Basal, SliceLevel::Mid, SliceLevel::Apical];

    pub fn as_str(self) -> &'static str {
        match self {
            SliceLevel::Basal => "basal",
            SliceLevel::Mid => "mid",
            SliceLevel::Apical => "apical",
        }
    }

    pub fn sector_count(self) -> usize {
        match self {
            SliceLevel::Basal | SliceLevel::Mid => 6,
            SliceLevel::Apical => 4,
        }
    }

    /// Segment IDs used at this level.
    pub fn segment_ids(self) -> std::ops::RangeInclusive<u32> {
        match self {
            SliceLevel::Basal => 1..=6,
            SliceLevel::Mid => 7..=12,
            SliceLevel::Apical => 13..=16,
        }
    }

    /// Segment ID of the `k`-th sector counted from the anterior RVIP in
    /// the septal sweep direction.
    pub fn segment_for_sector(self, k: usize) -> u32 {
        let n = self.sector_count();
        debug_assert!(k < n);
        // Sector 0 is anteroseptal (2/8) or septal (14); the last sector
        // wraps around to anterior (1/7/13).
        let offset = ((k + 1) % n) as u32;
        match self {
            SliceLevel::Basal => 1 + offset,
            SliceLevel::Mid => 7 + offset,
            SliceLevel::Apical => 13 + offset,
        }
    }
}

impl fmt::Display for SliceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SliceLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basal" => Ok(SliceLevel::Basal),
            "mid" => Ok(SliceLevel::Mid),
            "apical" => Ok(SliceLevel::Apical),
            other => Err(Error::invalid(format!("unknown slice level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WallBase {
    Anterior,
    Inferior,
    Posterior,
}

impl WallBase {
    pub const ALL: [WallBase; 3] = [WallBase::Anterior, WallBase::Inferior, WallBase::Posterior];

    pub fn as_str(self) -> &'static str {
        match self {
            WallBase::Anterior => "anterior",
            WallBase::Inferior => "inferior",
            WallBase::Posterior => "posterior",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            WallBase::Anterior => "antero",
            WallBase::Inferior => "infero",
            WallBase::Posterior => "postero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WallAxis {
    Lateral,
    Septal,
}

impl WallAxis {
    pub const ALL: [WallAxis; 2] = [WallAxis::Lateral, WallAxis::Septal];

    pub fn as_str(self) -> &'static str {
        match self {
            WallAxis::Lateral => "lateral",
            WallAxis::Septal => "septal",
        }
    }
}

/// A wall location such as `anterior`, `septal` or `inferoseptal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct WallLocation {
    base: Option<WallBase>,
    axis: Option<WallAxis>,
}

impl WallLocation {
    pub fn new(base: Option<WallBase>, axis: Option<WallAxis>) -> Result<Self> {
        if base.is_none() && axis.is_none() {
            return Err(Error::invalid("wall location needs a base or an axis word"));
        }
        Ok(WallLocation { base, axis })
    }

    pub fn base(base: WallBase) -> Self {
        WallLocation {
            base: Some(base),
            axis: None,
        }
    }

    pub fn axis(axis: WallAxis) -> Self {
        WallLocation {
            base: None,
            axis: Some(axis),
        }
    }

    pub fn combined(base: WallBase, axis: WallAxis) -> Self {
        WallLocation {
            base: Some(base),
            axis: Some(axis),
        }
    }

    pub fn base_word(&self) -> Option<WallBase> {
        self.base
    }

    pub fn axis_word(&self) -> Option<WallAxis> {
        self.axis
    }

    /// All eleven locations the grammar can express.
    pub fn all() -> Vec<WallLocation> {
        let mut out: Vec<_> = WallBase::ALL.into_iter().map(WallLocation::base).collect();
        out.extend(WallAxis::ALL.into_iter().map(WallLocation::axis));
        for b in WallBase::ALL {
            for a in WallAxis::ALL {
                out.push(WallLocation::combined(b, a));
            }
        }
        out
    }

    /// Clinical token, e.g. `inferoseptal`.
    pub fn token(&self) -> String {
        match (self.base, self.axis) {
            (Some(b), Some(a)) => format!("{}{}", b.prefix(), a.as_str()),
            (Some(b), None) => b.as_str().to_string(),
            (None, Some(a)) => a.as_str().to_string(),
            (None, None) => unreachable!("validated on construction"),
        }
    }
}

impl fmt::Display for WallLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl FromStr for WallLocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WallLocation::all()
            .into_iter()
            .find(|loc| loc.token() == s)
            .ok_or_else(|| Error::invalid(format!("unknown wall location {s:?}")))
    }
}

impl TryFrom<String> for WallLocation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WallLocation> for String {
    fn from(loc: WallLocation) -> String {
        loc.token()
    }
}

/// Radial extent of a scar through the wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Extent {
    #[serde(rename = "sub-endocardial")]
    SubEndocardial,
    #[serde(rename = "mid-myocardial")]
    MidMyocardial,
    #[serde(rename = "epicardial")]
    Epicardial,
    /// Spanning more than half of the wall thickness.
    #[serde(rename = "transmural")]
    Transmural,
}

impl Extent {
    pub const ALL: [Extent; 4] = [
        Extent::SubEndocardial,
        Extent::MidMyocardial,
        Extent::Epicardial,
        Extent::Transmural,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Extent::SubEndocardial => "sub-endocardial",
            Extent::MidMyocardial => "mid-myocardial",
            Extent::Epicardial => "epicardial",
            Extent::Transmural => "transmural",
        }
    }

    /// Layer labels (1 endocardial, 2 mid, 3 epicardial) this extent covers.
    pub fn layers(self) -> &'static [u32] {
        match self {
            Extent::SubEndocardial => &[1],
            Extent::MidMyocardial => &[2],
            Extent::Epicardial => &[3],
            Extent::Transmural => &[1, 2, 3],
        }
    }
}

impl fmt::Display for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Extent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Extent::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown extent {s:?}")))
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(mut d: f64) -> f64 {
    d = d.rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    d
}

/// Angular sector geometry shared by the segment map and its consumers.
#[derive(Debug, Clone, Copy)]
struct SectorFrame {
    center: Point2,
    anchor: f64,
    sweep: f64,
    width: f64,
    level: SliceLevel,
}

impl SectorFrame {
    fn new(center: Point2, anterior: Point2, inferior: Point2, level: SliceLevel) -> Result<Self> {
        if !(center.is_finite() && anterior.is_finite() && inferior.is_finite()) {
            return Err(Error::DegenerateLandmarks("non-finite coordinates".into()));
        }
        for (name, p) in [("anterior", anterior), ("inferior", inferior)] {
            if p.distance(center) < 1e-6 {
                return Err(Error::DegenerateLandmarks(format!(
                    "{name} RVIP coincides with the LV center"
                )));
            }
        }
        let anchor = (anterior.y - center.y).atan2(anterior.x - center.x);
        let to_inferior = (inferior.y - center.y).atan2(inferior.x - center.x);
        let d = wrap_angle(to_inferior - anchor);
        if d.abs() < 1e-12 {
            return Err(Error::DegenerateLandmarks(
                "both RVIPs lie on the same ray from the LV center".into(),
            ));
        }
        if PI - d.abs() < 1e-9 {
            return Err(Error::AmbiguousAnatomy(
                "inferior RVIP is diametrically opposite the anterior RVIP; septum side is undefined"
                    .into(),
            ));
        }
        Ok(SectorFrame {
            center,
            anchor,
            sweep: d.signum(),
            width: TAU / level.sector_count() as f64,
            level,
        })
    }

    fn sector(&self, x: f64, y: f64) -> usize {
        let theta = (y - self.center.y).atan2(x - self.center.x);
        let offset = (self.sweep * (theta - self.anchor)).rem_euclid(TAU);
        ((offset / self.width) as usize).min(self.level.sector_count() - 1)
    }
}

/// Label every myocardial pixel (nonzero in `myo`) with its AHA segment.
pub fn angular_segments(
    myo: &LabeledMask,
    center: Point2,
    anterior_rvip: Point2,
    inferior_rvip: Point2,
    level: SliceLevel,
) -> Result<LabeledMask> {
    if myo.count_nonzero() == 0 {
        return Err(Error::rejected("myocardium mask is empty"));
    }
    let frame = SectorFrame::new(center, anterior_rvip, inferior_rvip, level)?;
    Ok(LabeledMask::from_fn(myo.width(), myo.height(), |x, y| {
        if myo.get(x, y) == 0 {
            0
        } else {
            level.segment_for_sector(frame.sector(x as f64, y as f64))
        }
    }))
}

/// Distances from each myocardial pixel to the endocardial and epicardial
/// borders.
///
/// Background connected (4-neighbourhood) to the image border is exterior;
/// every other background pixel is cavity. A border lies half a pixel beyond
/// the center of the last myocardial pixel, so both distances are the
/// center-to-center distance to the nearest cavity/exterior pixel minus 0.5.
#[derive(Debug, Clone)]
pub struct WallDepth {
    width: usize,
    height: usize,
    d_in: Vec<f64>,
    d_out: Vec<f64>,
    myo: Vec<bool>,
}

impl WallDepth {
    pub fn compute(myo: &LabeledMask) -> Result<Self> {
        let (w, h) = myo.dims();
        let is_myo: Vec<bool> = myo.labels().iter().map(|&l| l != 0).collect();
        if !is_myo.iter().any(|&m| m) {
            return Err(Error::rejected("myocardium mask is empty"));
        }

        let mut exterior = vec![false; w * h];
        let mut queue = VecDeque::new();
        let mut seed = |x: usize, y: usize, q: &mut VecDeque<usize>| {
            let i = y * w + x;
            if !is_myo[i] && !exterior[i] {
                exterior[i] = true;
                q.push_back(i);
            }
        };
        for x in 0..w {
            seed(x, 0, &mut queue);
            seed(x, h - 1, &mut queue);
        }
        for y in 0..h {
            seed(0, y, &mut queue);
            seed(w - 1, y, &mut queue);
        }
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !is_myo[j] && !exterior[j] {
                    exterior[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }

        let cavity: Vec<bool> = (0..w * h).map(|i| !is_myo[i] && !exterior[i]).collect();
        if !cavity.iter().any(|&c| c) {
            return Err(Error::Topology(
                "myocardium encloses no cavity, so there is no endocardial border".into(),
            ));
        }
        if !exterior.iter().any(|&e| e) {
            return Err(Error::Topology(
                "myocardium leaves no exterior background, so there is no epicardial border".into(),
            ));
        }

        let to_cavity = LabeledMask::new(w, h, cavity.iter().map(|&c| u32::from(!c)).collect())?;
        let to_exterior = LabeledMask::new(w, h, exterior.iter().map(|&e| u32::from(!e)).collect())?;
        let d_in = distance_transform(&to_cavity, 1)
            .values()
            .iter()
            .map(|d| d - 0.5)
            .collect();
        let d_out = distance_transform(&to_exterior, 1)
            .values()
            .iter()
            .map(|d| d - 0.5)
            .collect();
        Ok(WallDepth {
            width: w,
            height: h,
            d_in,
            d_out,
            myo: is_myo,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn is_myocardium(&self, x: usize, y: usize) -> bool {
        self.myo[y * self.width + x]
    }

    /// `(d_in, d_out)` for a myocardial pixel.
    pub fn distances(&self, x: usize, y: usize) -> Option<(f64, f64)> {
        let i = y * self.width + x;
        self.myo[i].then(|| (self.d_in[i], self.d_out[i]))
    }

    /// Relative depth `d_in / (d_in + d_out)`: 0 at the endocardium, 1 at
    /// the epicardium.
    pub fn relative_depth(&self, x: usize, y: usize) -> Option<f64> {
        self.distances(x, y).map(|(a, b)| a / (a + b))
    }

    /// Local wall thickness `d_in + d_out`.
    pub fn thickness(&self, x: usize, y: usize) -> Option<f64> {
        self.distances(x, y).map(|(a, b)| a + b)
    }

    /// Endocardial (1), mid-wall (2) and epicardial (3) thirds.
    pub fn layer_map(&self) -> LabeledMask {
        LabeledMask::from_fn(self.width, self.height, |x, y| match self.relative_depth(x, y) {
            None => 0,
            Some(t) if t < 1.0 / 3.0 => 1,
            Some(t) if t < 2.0 / 3.0 => 2,
            Some(_) => 3,
        })
    }
}

pub fn concentric_layers(myo: &LabeledMask) -> Result<LabeledMask> {
    Ok(WallDepth::compute(myo)?.layer_map())
}

/// Wall thickness (pixels) at the myocardial pixel nearest to `p`.
pub fn thickness_at(myo: &LabeledMask, p: Point2) -> Result<f64> {
    let (x, y) = p
        .nearest_pixel(myo.width(), myo.height())
        .filter(|&(x, y)| myo.get(x, y) != 0)
        .ok_or_else(|| Error::invalid(format!("point ({}, {}) is outside the myocardium", p.x, p.y)))?;
    let depth = WallDepth::compute(myo)?;
    Ok(depth.thickness(x, y).expect("pixel is myocardial"))
}

/// Fixed translation of a wall location at a slice level into AHA segment IDs.
pub fn location_to_segments(loc: WallLocation, level: SliceLevel) -> BTreeSet<u32> {
    use WallAxis::*;
    use WallBase::*;

    let ids: &[u32] = match level {
        SliceLevel::Basal | SliceLevel::Mid => match (loc.base, loc.axis) {
            (Some(Anterior), None) => &[1],
            (Some(Inferior), None) => &[4],
            // Posterior is read as the inferolateral territory.
            (Some(Posterior), None) => &[5],
            (None, Some(Lateral)) => &[5, 6],
            (None, Some(Septal)) => &[2, 3],
            (Some(Anterior), Some(Septal)) => &[2],
            (Some(Inferior), Some(Septal)) | (Some(Posterior), Some(Septal)) => &[3],
            (Some(Anterior), Some(Lateral)) => &[6],
            (Some(Inferior), Some(Lateral)) | (Some(Posterior), Some(Lateral)) => &[5],
            (None, None) => unreachable!("validated on construction"),
        },
        SliceLevel::Apical => match (loc.base, loc.axis) {
            (_, Some(Septal)) => &[14],
            (_, Some(Lateral)) => &[16],
            (Some(Anterior), None) => &[13],
            (Some(Inferior), None) => &[15],
            (Some(Posterior), None) => &[15, 16],
            (None, None) => unreachable!("validated on construction"),
        },
    };
    let shift = if level == SliceLevel::Mid { 6 } else { 0 };
    ids.iter().map(|id| id + shift).collect()
}

/// Pixels in one of `segments` whose wall layer matches `extent`.
pub fn candidate_region(
    myo: &LabeledMask,
    segments: &BTreeSet<u32>,
    extent: Extent,
    segment_map: &LabeledMask,
    layer_map: &LabeledMask,
) -> Result<LabeledMask> {
    ensure_same_grid(segment_map, myo.width(), myo.height())?;
    ensure_same_grid(layer_map, myo.width(), myo.height())?;
    if segments.is_empty() {
        return Err(Error::invalid("no segments requested"));
    }
    let layers = extent.layers();
    let region = LabeledMask::from_fn(myo.width(), myo.height(), |x, y| {
        u32::from(
            myo.get(x, y) != 0
                && segments.contains(&segment_map.get(x, y))
                && layers.contains(&layer_map.get(x, y)),
        )
    });
    if region.count_nonzero() == 0 {
        return Err(Error::EmptyCandidate);
    }
    Ok(region)
}

/// Segment map, layer map and wall depths of one slice; these depend only
/// on the anatomy, never on the sampled scar.
#[derive(Debug, Clone)]
pub struct AnatomyMaps {
    pub segments: LabeledMask,
    pub layers: LabeledMask,
    pub depth: WallDepth,
}

impl AnatomyMaps {
    pub fn compute(
        myo: &LabeledMask,
        center: Point2,
        anterior_rvip: Point2,
        inferior_rvip: Point2,
        level: SliceLevel,
    ) -> Result<Self> {
        let segments = angular_segments(myo, center, anterior_rvip, inferior_rvip, level)?;
        let depth = WallDepth::compute(myo)?;
        Ok(AnatomyMaps {
            segments,
            layers: depth.layer_map(),
            depth,
        })
    }
}
