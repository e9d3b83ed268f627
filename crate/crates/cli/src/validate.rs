//! `validate`: re-derive every dataset invariant from the files on disk.

use std::path::Path;

use scarforge_core::anatomy::{candidate_region, location_to_segments, AnatomyMaps};
use scarforge_core::captions::{parse_caption, with_slice_suffix, ParsedCaption, POSITIVE_QUERY};
use scarforge_core::dataset::{
    dataset_hash, load_image, load_mask, read_augmented_manifest, recorded_hash, AugmentedRecord, MANIFEST_FILE,
};
use scarforge_core::preprocess::OUTPUT_SIZE;
use scarforge_core::raster::{centroid, GrayImage, LabeledMask};
use scarforge_core::Label;

use crate::{CmdResult, Failure};

pub(crate) fn validate(out: &Path) -> CmdResult {
    let records = read_augmented_manifest(&out.join(MANIFEST_FILE))?;
    let mut violations = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        if let Err(problems) = check_record(out, rec) {
            violations.extend(problems.into_iter().map(|p| format!("record {i}: {p}")));
        }
    }

    let hash = dataset_hash(out)?;
    match recorded_hash(out) {
        Ok(h) if h == hash => {}
        Ok(h) => violations.push(format!("dataset hash is {hash}, but {h} was recorded")),
        Err(e) => violations.push(format!("no recorded dataset hash: {e}")),
    }

    for v in &violations {
        println!("FAIL {v}");
    }
    println!("dataset sha256: {hash}");
    if violations.is_empty() {
        println!("{} records ok", records.len());
        Ok(())
    } else {
        Err(Failure::Invariant(format!(
            "{} problems in {} records",
            violations.len(),
            records.len()
        )))
    }
}

fn check_record(out: &Path, rec: &AugmentedRecord) -> Result<(), Vec<String>> {
    let mut problems = Vec::new();
    let mut fail = |m: String| problems.push(m);

    let image = load_image(&out.join(&rec.output_image_path));
    let mask = load_mask(&out.join(&rec.output_mask_path));
    let (image, mask) = match (image, mask) {
        (Ok(i), Ok(m)) => (i, m),
        (i, m) => {
            for e in [i.err(), m.err()].into_iter().flatten() {
                fail(e.to_string());
            }
            return Err(problems);
        }
    };
    check_image(&image, &mask, &mut fail);

    let positive = rec.label == Label::Positive;
    let has_prov = rec.provenance.is_some();
    if rec.synthetic != has_prov {
        fail(format!("synthetic = {} but provenance present = {has_prov}", rec.synthetic));
    }
    if rec.synthetic && !positive {
        fail("synthetic record is not labeled positive".into());
    }
    if rec.synthetic != rec.scar_field_path.is_some() {
        fail("scar field path must be present exactly for synthetic records".into());
    }
    if !rec.synthetic && positive && rec.source.lge_negative {
        fail("LGE-negative source labeled positive without a synthetic scar".into());
    }
    if rec.synthetic && !rec.source.lge_negative {
        fail("synthetic scar added to an LGE-positive source".into());
    }

    match (parse_caption(&rec.caption), &rec.provenance) {
        (Ok(ParsedCaption::Positive(spec)), Some(p)) => {
            if spec != p.spec {
                fail(format!("caption describes {spec:?}, provenance says {:?}", p.spec));
            }
        }
        (Ok(ParsedCaption::Negative(level)), None) if !positive => {
            if level != rec.slice_level {
                fail(format!("caption level {level} differs from record level {}", rec.slice_level));
            }
        }
        (_, None) if positive && rec.caption == with_slice_suffix(POSITIVE_QUERY, rec.slice_level) => {}
        (Ok(parsed), _) => fail(format!("caption {parsed:?} does not match label {}", rec.label)),
        (Err(e), _) => fail(format!("caption does not parse: {e}")),
    }

    if let (Some(p), Some(field_path)) = (&rec.provenance, &rec.scar_field_path) {
        if p.spec.level != rec.slice_level {
            fail("provenance level differs from record level".into());
        }
        match load_image(&out.join(field_path)) {
            Err(e) => fail(e.to_string()),
            Ok(m) => check_field(&m, &mask, &mut fail),
        }
        match centroid(&mask.select(|l| l != 0), 1).and_then(|c| {
            let maps = AnatomyMaps::compute(&mask, c, p.rvip_anterior, p.rvip_inferior, p.spec.level)?;
            candidate_region(
                &mask,
                &location_to_segments(p.spec.location, p.spec.level),
                p.spec.extent,
                &maps.segments,
                &maps.layers,
            )
        }) {
            Err(e) => fail(format!("cannot rebuild candidate region: {e}")),
            Ok(candidate) => {
                let inside = p
                    .params
                    .center
                    .nearest_pixel(candidate.width(), candidate.height())
                    .is_some_and(|(x, y)| candidate.get(x, y) != 0);
                if !inside {
                    fail(format!(
                        "scar center ({}, {}) lies outside the candidate region",
                        p.params.center.x, p.params.center.y
                    ));
                }
            }
        }
    }

    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}

fn check_image(image: &GrayImage, mask: &LabeledMask, fail: &mut impl FnMut(String)) {
    if image.dims() != (OUTPUT_SIZE, OUTPUT_SIZE) {
        fail(format!("image is {:?}, expected {OUTPUT_SIZE}x{OUTPUT_SIZE}", image.dims()));
    }
    if mask.dims() != image.dims() {
        fail(format!("mask is {:?}, image is {:?}", mask.dims(), image.dims()));
    }
    if !image.data().iter().all(|v| (0.0..=1.0).contains(v)) {
        fail("image intensities leave [0, 1]".into());
    }
    if mask.count_nonzero() == 0 {
        fail("myocardium mask is empty".into());
    }
}

fn check_field(m: &GrayImage, mask: &LabeledMask, fail: &mut impl FnMut(String)) {
    if m.dims() != mask.dims() {
        fail(format!("scar field is {:?}, mask is {:?}", m.dims(), mask.dims()));
        return;
    }
    if !m.data().iter().all(|v| (0.0..=1.0).contains(v)) {
        fail("scar field leaves [0, 1]".into());
    }
    if m.max() != 1.0 {
        fail(format!("scar field peaks at {}, expected 1", m.max()));
    }
    let leaks = m
        .data()
        .iter()
        .zip(mask.labels())
        .filter(|(&v, &l)| v > 0.0 && l == 0)
        .count();
    if leaks > 0 {
        fail(format!("scar field reaches {leaks} pixels outside the myocardium"));
    }
}
