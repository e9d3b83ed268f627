//! Scar controller and image synthesis.
//!
//! A record is augmented by drawing, in this fixed order, from its own
//! generator: the gate (`u < lambda`), the location mode, the location
//! words, the extent, the candidate pixel used as the scar center, both
//! radii, the orientation, the smoothing uniform, the brightness `gamma`,
//! and finally the caption noun. Empty rasterizations redraw center, radii
//! and orientation only.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anatomy::{
    candidate_region, location_to_segments, AnatomyMaps, Extent, SliceLevel, WallAxis, WallBase,
    WallDepth, WallLocation,
};
use crate::captions::{self, Caption, ENHANCEMENT_NOUNS};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::pipeline::PreparedSlice;
use crate::raster::{
    ensure_same_grid, gaussian_smooth, minmax_normalize, rasterize_ellipse, GrayImage, LabeledMask,
    Point2,
};
use crate::rng::{record_rng, record_seed, UniformSource};

/// Rasterization attempts before a candidate region is given up on.
pub const MAX_ATTEMPTS: usize = 5;

/// Smallest radius bound, in pixels; thinner ellipses rasterize to nothing.
pub const MIN_RADIUS_PX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScarSpec {
    pub location: WallLocation,
    pub extent: Extent,
    pub level: SliceLevel,
}

/// Concrete geometry of one synthetic scar, in output-grid pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScarParams {
    pub center: Point2,
    pub radii: (f64, f64),
    pub alpha: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub seed: u64,
    /// Wall thickness at `center`.
    pub thickness: f64,
    /// `(r_min, r_max)` the radii were drawn from.
    pub radius_bounds: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoRange {
    pub min: f64,
    pub max: f64,
}

impl RhoRange {
    pub const fn new(min: f64, max: f64) -> Self {
        RhoRange { min, max }
    }
}

/// Radius ranges as fractions of the local wall thickness, per extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoTable {
    pub sub_endocardial: RhoRange,
    pub mid_myocardial: RhoRange,
    pub epicardial: RhoRange,
    pub transmural: RhoRange,
}

impl RhoTable {
    pub fn get(&self, extent: Extent) -> RhoRange {
        match extent {
            Extent::SubEndocardial => self.sub_endocardial,
            Extent::MidMyocardial => self.mid_myocardial,
            Extent::Epicardial => self.epicardial,
            Extent::Transmural => self.transmural,
        }
    }

    fn get_mut(&mut self, extent: Extent) -> &mut RhoRange {
        match extent {
            Extent::SubEndocardial => &mut self.sub_endocardial,
            Extent::MidMyocardial => &mut self.mid_myocardial,
            Extent::Epicardial => &mut self.epicardial,
            Extent::Transmural => &mut self.transmural,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Probability that an LGE-negative record receives a scar.
    pub lambda: f64,
    pub rho: RhoTable,
    /// Absolute lower bound on `r_min` before the 1 px floor.
    pub rho_floor: f64,
    pub s1: f64,
    pub s2: f64,
    pub b1: f64,
    pub b2: f64,
    pub master_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let single_layer = RhoRange::new(0.1, 0.4);
        SynthConfig {
            lambda: 0.7,
            rho: RhoTable {
                sub_endocardial: single_layer,
                mid_myocardial: single_layer,
                epicardial: single_layer,
                transmural: RhoRange::new(0.7, 1.0),
            },
            rho_floor: 0.01,
            s1: 2.0,
            s2: 2.0,
            b1: 0.8,
            b2: 1.0,
            master_seed: 0,
        }
    }
}

fn rho_key(extent: Extent) -> String {
    format!("rho_{}", extent.as_str().replace('-', "_"))
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda must be in [0, 1], got {}", self.lambda)));
        }
        for e in Extent::ALL {
            let r = self.rho.get(e);
            if !(r.min > 0.0 && r.min <= r.max && r.max <= 1.0) {
                return Err(Error::invalid(format!(
                    "{} must satisfy 0 < min <= max <= 1, got ({}, {})",
                    rho_key(e),
                    r.min,
                    r.max
                )));
            }
        }
        if !(self.rho_floor >= 0.0 && self.rho_floor.is_finite()) {
            return Err(Error::invalid("rho_floor must be a non-negative number"));
        }
        if !(self.s1 >= 0.0 && self.s2 >= 0.0 && (self.s1 + self.s2).is_finite()) {
            return Err(Error::invalid("s1 and s2 must be non-negative"));
        }
        if !(0.0 <= self.b1 && self.b1 <= self.b2 && self.b2.is_finite()) {
            return Err(Error::invalid(format!(
                "brightness bounds must satisfy 0 <= b1 <= b2, got ({}, {})",
                self.b1, self.b2
            )));
        }
        Ok(())
    }

    /// Canonical `key = value` text; [`SynthConfig::parse`] reads it back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lambda = {}", self.lambda);
        for e in Extent::ALL {
            let r = self.rho.get(e);
            let _ = writeln!(s, "{} = {}, {}", rho_key(e), r.min, r.max);
        }
        let _ = writeln!(s, "rho_floor = {}", self.rho_floor);
        let _ = writeln!(s, "s1 = {}", self.s1);
        let _ = writeln!(s, "s2 = {}", self.s2);
        let _ = writeln!(s, "b1 = {}", self.b1);
        let _ = writeln!(s, "b2 = {}", self.b2);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        s
    }

    /// Apply `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are ignored; unknown keys are errors.
    pub fn parse_onto(mut self, text: &str) -> Result<Self> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::invalid(format!("config line {}: {msg}", n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("{key}: {v:?} is not a number")))
            };
            match key {
                "lambda" => self.lambda = num(value)?,
                "rho_floor" => self.rho_floor = num(value)?,
                "s1" => self.s1 = num(value)?,
                "s2" => self.s2 = num(value)?,
                "b1" => self.b1 = num(value)?,
                "b2" => self.b2 = num(value)?,
                "master_seed" => {
                    self.master_seed = value
                        .parse()
                        .map_err(|_| bad(format!("master_seed: {value:?} is not a u64")))?
                }
                _ => {
                    let extent = Extent::ALL
                        .into_iter()
                        .find(|e| rho_key(*e) == key)
                        .ok_or_else(|| bad(format!("unknown key {key:?}")))?;
                    let (lo, hi) = value
                        .split_once(',')
                        .ok_or_else(|| bad(format!("{key}: expected \"min, max\"")))?;
                    *self.rho.get_mut(extent) = RhoRange::new(num(lo)?, num(hi)?);
                }
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        SynthConfig::default().parse_onto(text)
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Draw a scar description: location mode (base only, axis only, or both),
/// the words for that mode, then the extent, all uniform.
pub fn sample_scar_spec<R: UniformSource + ?Sized>(rng: &mut R, level: SliceLevel) -> ScarSpec {
    let location = match rng.index(3) {
        0 => WallLocation::base(WallBase::ALL[rng.index(WallBase::ALL.len())]),
        1 => WallLocation::axis(WallAxis::ALL[rng.index(WallAxis::ALL.len())]),
        _ => {
            let base = WallBase::ALL[rng.index(WallBase::ALL.len())];
            let axis = WallAxis::ALL[rng.index(WallAxis::ALL.len())];
            WallLocation::combined(base, axis)
        }
    };
    let extent = Extent::ALL[rng.index(Extent::ALL.len())];
    ScarSpec {
        location,
        extent,
        level,
    }
}

/// Render the scar field `M` for fixed geometry: the ellipse clipped to the
/// candidate region, smoothed, restricted to the myocardium and min-max
/// normalized. Returns `None` when the clipped ellipse is empty.
pub fn render_scar_field(
    candidate: &LabeledMask,
    myo: &LabeledMask,
    spacing: (f64, f64),
    center: Point2,
    radii: (f64, f64),
    alpha: f64,
    sigma: f64,
) -> Result<Option<GrayImage>> {
    let (w, h) = candidate.dims();
    ensure_same_grid(myo, w, h)?;
    let ellipse = rasterize_ellipse(center, radii, alpha, (w, h))?;
    let clipped: Vec<f64> = ellipse
        .labels()
        .iter()
        .zip(candidate.labels())
        .map(|(&e, &c)| if e != 0 && c != 0 { 1.0 } else { 0.0 })
        .collect();
    if !clipped.iter().any(|&v| v > 0.0) {
        return Ok(None);
    }
    let smoothed = gaussian_smooth(&GrayImage::new(w, h, spacing, clipped)?, sigma)?;
    let masked: Vec<f64> = smoothed
        .data()
        .iter()
        .zip(myo.labels())
        .map(|(&v, &m)| if m != 0 { v } else { 0.0 })
        .collect();
    Ok(Some(minmax_normalize(&GrayImage::from_parts(w, h, spacing, masked))))
}

/// Sample scar geometry inside `candidate` and render its field. The
/// returned parameters carry `seed = 0`; callers that know the record seed
/// fill it in.
pub fn synthesize_scar_field<R: UniformSource + ?Sized>(
    rng: &mut R,
    candidate: &LabeledMask,
    myo: &LabeledMask,
    cfg: &SynthConfig,
    extent: Extent,
) -> Result<(GrayImage, ScarParams)> {
    let depth = WallDepth::compute(myo)?;
    synthesize_scar_field_with_depth(rng, candidate, myo, &depth, (1.0, 1.0), cfg, extent)
}

/// [`synthesize_scar_field`] with precomputed wall depths and the spacing
/// to stamp on the field.
pub fn synthesize_scar_field_with_depth<R: UniformSource + ?Sized>(
    rng: &mut R,
    candidate: &LabeledMask,
    myo: &LabeledMask,
    depth: &WallDepth,
    spacing: (f64, f64),
    cfg: &SynthConfig,
    extent: Extent,
) -> Result<(GrayImage, ScarParams)> {
    let (w, h) = candidate.dims();
    ensure_same_grid(myo, w, h)?;
    if depth.dims() != (w, h) {
        return Err(Error::invalid("wall depth map does not match the candidate grid"));
    }
    let pixels: Vec<(usize, usize)> = candidate
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != 0)
        .map(|(i, _)| (i % w, i / w))
        .collect();
    if pixels.is_empty() {
        return Err(Error::EmptyCandidate);
    }
    let rho = cfg.rho.get(extent);

    for _ in 0..MAX_ATTEMPTS {
        let (cx, cy) = pixels[rng.index(pixels.len())];
        let thickness = depth.thickness(cx, cy).ok_or_else(|| {
            Error::ContractViolation(format!("candidate pixel ({cx}, {cy}) is outside the myocardium"))
        })?;
        let r_min = cfg.rho_floor.max(thickness * rho.min).max(MIN_RADIUS_PX);
        let r_max = (thickness * rho.max).max(MIN_RADIUS_PX).max(r_min);
        let r1 = rng.uniform_range(r_min, r_max);
        let r2 = rng.uniform_range(r_min, r_max);
        let alpha = rng.uniform_range(0.0, std::f64::consts::PI);
        let center = Point2::new(cx as f64, cy as f64);

        if render_scar_field(candidate, myo, spacing, center, (r1, r2), alpha, 0.0)?.is_none() {
            continue;
        }
        let sigma = rng.next_uniform() * cfg.s1 + cfg.s2;
        let gamma = rng.uniform_range(cfg.b1, cfg.b2);
        let field = render_scar_field(candidate, myo, spacing, center, (r1, r2), alpha, sigma)?
            .expect("non-empty clipped ellipse");
        return Ok((
            field,
            ScarParams {
                center,
                radii: (r1, r2),
                alpha,
                sigma,
                gamma,
                seed: 0,
                thickness,
                radius_bounds: (r_min, r_max),
            },
        ));
    }
    Err(Error::EmptyCandidate)
}

/// `I * (1 - M) + gamma * max(I) * M`, pixelwise.
pub fn blend(img: &GrayImage, field: &GrayImage, gamma: f64) -> Result<GrayImage> {
    if img.dims() != field.dims() {
        return Err(Error::invalid(format!(
            "scar field is {:?}, image is {:?}",
            field.dims(),
            img.dims()
        )));
    }
    if !gamma.is_finite() {
        return Err(Error::invalid("gamma must be finite"));
    }
    if let Some(v) = field.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("scar field value {v} outside [0, 1]")));
    }
    let peak = gamma * img.max();
    let data = img
        .data()
        .iter()
        .zip(field.data())
        .map(|(&i, &m)| i * (1.0 - m) + peak * m)
        .collect();
    GrayImage::new(img.width(), img.height(), img.spacing(), data)
}

/// Everything needed to regenerate a synthetic record exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: ScarSpec,
    pub params: ScarParams,
    pub noun: String,
    pub record_seed: u64,
    pub gate_draw: f64,
    pub config_digest: String,
    /// RVIPs in the output grid, after orientation normalization.
    pub rvip_anterior: Point2,
    pub rvip_inferior: Point2,
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    pub image: GrayImage,
    pub caption: Caption,
    pub scar_field: Option<GrayImage>,
    pub provenance: Option<Provenance>,
    /// Set when a scar was due but could not be placed.
    pub warning: Option<String>,
}

impl Augmentation {
    pub fn synthetic(&self) -> bool {
        self.provenance.is_some()
    }

    fn pass_through(slice: &PreparedSlice, warning: Option<String>) -> Self {
        Augmentation {
            image: slice.image.clone(),
            caption: captions::negative_caption(slice.level),
            scar_field: None,
            provenance: None,
            warning,
        }
    }
}

fn candidate_for(slice: &PreparedSlice, anatomy: &AnatomyMaps, spec: &ScarSpec) -> Result<LabeledMask> {
    let segments: BTreeSet<u32> = location_to_segments(spec.location, spec.level);
    candidate_region(&slice.myo, &segments, spec.extent, &anatomy.segments, &anatomy.layers)
}

/// Augment one LGE-negative slice with probability `cfg.lambda`, using the
/// generator derived from `(cfg.master_seed, record_index)`.
pub fn augment_record(slice: &PreparedSlice, cfg: &SynthConfig, record_index: u64) -> Result<Augmentation> {
    let seed = record_seed(cfg.master_seed, record_index);
    augment_with_source(slice, cfg, &mut record_rng(cfg.master_seed, record_index), seed)
}

/// [`augment_record`] over an arbitrary draw source; `seed` is recorded in
/// the provenance as-is.
pub fn augment_with_source<R: UniformSource + ?Sized>(
    slice: &PreparedSlice,
    cfg: &SynthConfig,
    rng: &mut R,
    seed: u64,
) -> Result<Augmentation> {
    if !slice.lge_negative {
        return Err(Error::ContractViolation(
            "synthetic scars are only added to LGE-negative slices".into(),
        ));
    }
    cfg.validate()?;

    let gate = rng.next_uniform();
    if gate >= cfg.lambda {
        return Ok(Augmentation::pass_through(slice, None));
    }
    let spec = sample_scar_spec(rng, slice.level);

    let anatomy = match &slice.anatomy {
        Ok(a) => a,
        Err(e) => {
            return Ok(Augmentation::pass_through(
                slice,
                Some(format!("anatomy unavailable, scar skipped: {e}")),
            ))
        }
    };
    let placed = candidate_for(slice, anatomy, &spec).and_then(|candidate| {
        synthesize_scar_field_with_depth(
            rng,
            &candidate,
            &slice.myo,
            &anatomy.depth,
            slice.image.spacing(),
            cfg,
            spec.extent,
        )
    });
    let (field, mut params) = match placed {
        Ok(v) => v,
        Err(Error::EmptyCandidate) => {
            return Ok(Augmentation::pass_through(
                slice,
                Some(format!(
                    "no room for a {} scar in {} wall at {} level; passed through",
                    spec.extent, spec.location, spec.level
                )),
            ))
        }
        Err(e) => return Err(e),
    };
    params.seed = seed;

    let image = blend(&slice.image, &field, params.gamma)?;
    let caption = captions::generate_positive_caption(&spec, rng);
    let noun = ENHANCEMENT_NOUNS
        .iter()
        .find(|n| caption.text.contains(&format!(" {n} in ")))
        .expect("caption uses a known noun")
        .to_string();
    Ok(Augmentation {
        image,
        caption,
        scar_field: Some(field),
        provenance: Some(Provenance {
            spec,
            params,
            noun,
            record_seed: seed,
            gate_draw: gate,
            config_digest: cfg.digest(),
            rvip_anterior: slice.anterior,
            rvip_inferior: slice.inferior,
        }),
        warning: None,
    })
}

/// Rebuild a synthetic record from its provenance without any sampling.
pub fn replay_augmentation(slice: &PreparedSlice, provenance: &Provenance) -> Result<Augmentation> {
    let anatomy = slice
        .anatomy
        .as_ref()
        .map_err(|e| Error::rejected(format!("anatomy unavailable for replay: {e}")))?;
    let spec = provenance.spec;
    let p = &provenance.params;
    let candidate = candidate_for(slice, anatomy, &spec)?;
    let field = render_scar_field(
        &candidate,
        &slice.myo,
        slice.image.spacing(),
        p.center,
        p.radii,
        p.alpha,
        p.sigma,
    )?
    .ok_or(Error::EmptyCandidate)?;
    let image = blend(&slice.image, &field, p.gamma)?;
    Ok(Augmentation {
        image,
        caption: Caption {
            text: captions::render_positive(&spec, &provenance.noun),
            label: Label::Positive,
            level: spec.level,
            spec: Some(spec),
        },
        scar_field: Some(field),
        provenance: Some(provenance.clone()),
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded_rng, ScriptedUniforms};

    fn row(values: &[f64]) -> GrayImage {
        GrayImage::new(values.len(), 1, (1.0, 1.0), values.to_vec()).unwrap()
    }

    #[test]
    fn blend_hand_values() {
        let out = blend(&row(&[0.2, 0.4, 1.0]), &row(&[0.5, 0.0, 0.0]), 0.8).unwrap();
        assert_eq!(out.data(), &[0.5, 0.4, 1.0]);
    }

    #[test]
    fn blend_degenerate_fields() {
        let img = row(&[0.3, 0.9, 0.1]);
        assert_eq!(blend(&img, &row(&[0.0; 3]), 0.9).unwrap(), img);
        let out = blend(&img, &row(&[1.0, 0.0, 0.0]), 1.0).unwrap();
        assert_eq!(out.get(0, 0), 0.9);
        assert!(blend(&img, &row(&[1.5, 0.0, 0.0]), 1.0).is_err());
        assert!(blend(&img, &row(&[-0.1, 0.0, 0.0]), 1.0).is_err());
        assert!(blend(&img, &row(&[0.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn spec_draw_order() {
        // mode 2 (combined), base index 1 (inferior), axis index 1 (septal), extent 3.
        let mut s = ScriptedUniforms::new(vec![0.9, 0.4, 0.6, 0.8]);
        let spec = sample_scar_spec(&mut s, SliceLevel::Basal);
        assert_eq!(spec.location.token(), "inferoseptal");
        assert_eq!(spec.extent, Extent::Transmural);
        assert_eq!(s.consumed(), 4);

        let mut s = ScriptedUniforms::new(vec![0.5, 0.1, 0.0]);
        let spec = sample_scar_spec(&mut s, SliceLevel::Apical);
        assert_eq!(spec.location.token(), "lateral");
        assert_eq!(spec.extent, Extent::SubEndocardial);
        assert_eq!(spec.level, SliceLevel::Apical);
    }

    #[test]
    fn spec_sampling_is_deterministic() {
        let a = sample_scar_spec(&mut seeded_rng(5), SliceLevel::Mid);
        let b = sample_scar_spec(&mut seeded_rng(5), SliceLevel::Mid);
        assert_eq!(a, b);
    }

    #[test]
    fn config_text_round_trip_and_validation() {
        let cfg = SynthConfig {
            master_seed: 99,
            lambda: 0.25,
            ..SynthConfig::default()
        };
        assert_eq!(SynthConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(SynthConfig::default().digest(), SynthConfig::parse("").unwrap().digest());
        let parsed = SynthConfig::parse("# paper values\nrho_transmural = 0.7, 1.0\nb1=0.9\n").unwrap();
        assert_eq!(parsed.b1, 0.9);
        assert!(SynthConfig::parse("rho_transmural = 0.7, 0.1").is_err());
        assert!(SynthConfig::parse("lambda = 1.5").is_err());
        assert!(SynthConfig::parse("gamma = 1").is_err());
        assert!(SynthConfig::parse("s1 2").is_err());
    }

    #[test]
    fn scar_field_stays_in_myocardium() {
        let c = Point2::new(40.0, 40.0);
        let myo = LabeledMask::from_fn(80, 80, |x, y| {
            let r = (x as f64 - c.x).hypot(y as f64 - c.y);
            u32::from((15.0..=27.0).contains(&r))
        });
        let candidate = myo.clone();
        let cfg = SynthConfig::default();
        let mut rng = seeded_rng(1);
        for _ in 0..50 {
            let (m, p) = synthesize_scar_field(&mut rng, &candidate, &myo, &cfg, Extent::Transmural).unwrap();
            assert_eq!(m.max(), 1.0);
            for (v, l) in m.data().iter().zip(myo.labels()) {
                assert!((0.0..=1.0).contains(v));
                assert!(*v == 0.0 || *l != 0);
            }
            let (cx, cy) = (p.center.x as usize, p.center.y as usize);
            assert_eq!(candidate.get(cx, cy), 1);
            assert!(p.radius_bounds.0 >= MIN_RADIUS_PX);
            assert!((2.0..4.0).contains(&p.sigma));
            assert!((0.8..1.0).contains(&p.gamma));
        }
    }
}
