//! Annulus "hearts" with analytically known geometry, used as fixtures and
//! for demo datasets.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::anatomy::SliceLevel;
use crate::dataset::{save_image, save_mask, write_manifest, DatasetRecord};
use crate::error::{Error, Result};
use crate::raster::{GrayImage, LabeledMask, Point2};
use crate::rng::record_rng;

/// Myocardium is `r_inner <= |p - center| <= r_outer`. The wall has
/// intensity `base`, the cavity `base / 2` and the exterior `base / 4`,
/// plus optional Gaussian noise.
pub fn make_annulus<R: Rng + ?Sized>(
    center: Point2,
    r_inner: f64,
    r_outer: f64,
    grid: (usize, usize),
    base_intensity: f64,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<(GrayImage, LabeledMask)> {
    if !(r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
        return Err(Error::invalid(format!(
            "annulus radii must satisfy 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
        )));
    }
    if !center.is_finite() || !base_intensity.is_finite() || !(noise_sigma >= 0.0) {
        return Err(Error::invalid("annulus center, intensity and noise must be finite and noise >= 0"));
    }
    let (w, h) = grid;
    let radius = |x: usize, y: usize| (x as f64 - center.x).hypot(y as f64 - center.y);
    let mask = LabeledMask::from_fn(w, h, |x, y| {
        let r = radius(x, y);
        u32::from(r >= r_inner && r <= r_outer)
    });
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let image = GrayImage::from_fn(w, h, (1.0, 1.0), |x, y| {
        let r = radius(x, y);
        let v = if mask.get(x, y) != 0 {
            base_intensity
        } else if r < r_inner {
            0.5 * base_intensity
        } else {
            0.25 * base_intensity
        };
        if noise_sigma > 0.0 {
            v + noise.sample(rng)
        } else {
            v
        }
    })?;
    Ok((image, mask))
}

/// Anterior RVIP at `anterior_angle` on the circle, inferior RVIP
/// `separation` further along (positive angles turn +x toward +y).
pub fn place_rvips(center: Point2, radius: f64, anterior_angle: f64, separation: f64) -> (Point2, Point2) {
    let at = |a: f64| Point2::new(center.x + radius * a.cos(), center.y + radius * a.sin());
    (at(anterior_angle), at(anterior_angle + separation))
}

#[derive(Debug, Clone)]
pub struct PhantomSlice {
    pub image: GrayImage,
    pub mask: LabeledMask,
    pub anterior: Point2,
    pub inferior: Point2,
    pub level: SliceLevel,
    pub patient_id: String,
}

/// Scanner-like grids: (pixels per side, spacing in mm).
const GRIDS: [(usize, f64); 3] = [(192, 1.5), (160, 1.8), (144, 2.0)];

/// A randomized but seed-determined phantom slice: roughly 20 mm cavity
/// radius, 8-11 mm wall, RVIPs on the epicardium 1.8-2.4 rad apart.
pub fn random_phantom(seed: u64, index: u64) -> Result<PhantomSlice> {
    let mut rng = record_rng(seed, index);
    let (n, spacing) = GRIDS[(index % GRIDS.len() as u64) as usize];
    let mm = |v: f64| v / spacing;
    let half = n as f64 / 2.0;
    let center = Point2::new(
        half + rng.random_range(-mm(6.0)..mm(6.0)),
        half + rng.random_range(-mm(6.0)..mm(6.0)),
    );
    let r_in = mm(rng.random_range(18.0..22.0));
    let r_out = r_in + mm(rng.random_range(8.0..11.0));
    let (mut image, mask) = make_annulus(center, r_in, r_out, (n, n), 0.6, 0.02, &mut rng)?;
    image = image.with_spacing((spacing, spacing))?;
    let anterior_angle = rng.random_range(-PI..PI);
    let separation = rng.random_range(1.8..2.4);
    let (anterior, inferior) = place_rvips(center, r_out, anterior_angle, separation);
    Ok(PhantomSlice {
        image,
        mask,
        anterior,
        inferior,
        level: SliceLevel::ALL[(index / 2 % 3) as usize],
        patient_id: format!("phantom-{:03}", index / 3),
    })
}

/// Write `count` phantom slices and a manifest listing them; every third
/// slice is marked LGE-positive.
pub fn write_phantom_dataset(dir: &Path, count: usize, seed: u64) -> Result<PathBuf> {
    let mut records = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let p = random_phantom(seed, i)?;
        let image_path = PathBuf::from(format!("phantoms/{i:05}.f32"));
        let mask_path = PathBuf::from(format!("phantoms/{i:05}_myo.png"));
        save_image(&p.image, &dir.join(&image_path))?;
        save_mask(&p.mask, &dir.join(&mask_path))?;
        records.push(DatasetRecord {
            image_path,
            myo_mask_path: mask_path,
            rvip_anterior: p.anterior,
            rvip_inferior: p.inferior,
            spacing_mm: p.image.spacing(),
            slice_level: p.level,
            lge_negative: i % 3 != 2,
            patient_id: p.patient_id,
        });
    }
    let manifest = dir.join("phantoms.jsonl");
    write_manifest(&manifest, &records)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    #[test]
    fn annulus_area_matches_analytic() {
        let c = Point2::new(111.5, 111.5);
        let (_, mask) = make_annulus(c, 20.0, 30.0, (224, 224), 1.0, 0.0, &mut seeded_rng(0)).unwrap();
        let area = PI * (30.0f64.powi(2) - 20.0f64.powi(2));
        let n = mask.count_nonzero() as f64;
        assert!((n - area).abs() / area < 0.02, "{n} vs {area}");
    }

    #[test]
    fn noiseless_annulus_is_deterministic_and_ordered() {
        let c = Point2::new(30.0, 30.0);
        let a = make_annulus(c, 10.0, 15.0, (60, 60), 0.8, 0.0, &mut seeded_rng(1)).unwrap();
        let b = make_annulus(c, 10.0, 15.0, (60, 60), 0.8, 0.0, &mut seeded_rng(2)).unwrap();
        assert_eq!(a.0, b.0);
        assert!(a.0.get(30, 30) < a.0.get(42, 30));
        assert!(a.0.get(0, 0) < a.0.get(30, 30));
    }

    #[test]
    fn invalid_radii() {
        let c = Point2::new(5.0, 5.0);
        for (a, b) in [(0.0, 3.0), (4.0, 4.0), (5.0, 3.0), (-1.0, 2.0)] {
            assert!(make_annulus(c, a, b, (10, 10), 1.0, 0.0, &mut seeded_rng(0)).is_err());
        }
    }

    #[test]
    fn rvips_lie_on_the_circle() {
        let c = Point2::new(50.0, 40.0);
        let (a, i) = place_rvips(c, 25.0, -PI / 2.0, 2.0 * PI / 3.0);
        assert!((a.distance(c) - 25.0).abs() < 1e-9);
        assert!((i.distance(c) - 25.0).abs() < 1e-9);
        assert!(a.y < c.y && (a.x - c.x).abs() < 1e-9);
        // -pi/2 + 2pi/3 = pi/6: lower right.
        assert!(i.x > c.x && i.y > c.y);
    }

    #[test]
    fn random_phantoms_are_reproducible() {
        let a = random_phantom(7, 4).unwrap();
        let b = random_phantom(7, 4).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.anterior, b.anterior);
        assert!(a.mask.count_nonzero() > 0);
    }
}
