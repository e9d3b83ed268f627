use scarforge_core::anatomy::SliceLevel;
use scarforge_core::captions::{parse_caption, ParsedCaption};
use scarforge_core::phantoms::{make_annulus, place_rvips, random_phantom};
use scarforge_core::pipeline::{prepare_slice, PreparedSlice};
use scarforge_core::raster::{centroid, Point2};
use scarforge_core::rng::{seeded_rng, ScriptedUniforms};
use scarforge_core::synth::{augment_record, augment_with_source, replay_augmentation, SynthConfig};
use scarforge_core::{Error, Label};

fn phantom_slice(index: u64, lge_negative: bool) -> PreparedSlice {
    let p = random_phantom(11, index).unwrap();
    prepare_slice(&p.image, &p.mask, p.anterior, p.inferior, p.level, lge_negative).unwrap()
}

#[test]
fn prepared_slices_are_normalized_and_oriented() {
    for i in 0..6 {
        let p = random_phantom(3, i).unwrap();
        let s = prepare_slice(&p.image, &p.mask, p.anterior, p.inferior, p.level, true).unwrap();
        assert_eq!(s.image.dims(), (224, 224));
        assert_eq!(s.image.spacing(), (0.5, 0.5));
        assert!(s.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((s.anterior.x - s.inferior.x).abs() < 1e-6);
        assert!(s.anterior.y < s.inferior.y);
        let c = centroid(&s.myo, 1).unwrap();
        assert!((c.x - 111.5).abs() <= 2.0 && (c.y - 111.5).abs() <= 2.0, "{c:?}");
        assert!(s.anatomy.is_ok());
        // Landmarks follow the composed transform.
        assert!(s.transform.apply(p.anterior).distance(s.anterior) < 1e-9);
    }
}

#[test]
fn augmentation_is_deterministic_and_replayable() {
    let slice = phantom_slice(0, true);
    let cfg = SynthConfig { lambda: 1.0, master_seed: 5, ..SynthConfig::default() };
    let mut synthetic = 0;
    for idx in 0..8 {
        let a = augment_record(&slice, &cfg, idx).unwrap();
        let b = augment_record(&slice, &cfg, idx).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.caption, b.caption);
        let Some(prov) = &a.provenance else { continue };
        synthetic += 1;
        assert_eq!(a.caption.label, Label::Positive);
        assert_eq!(parse_caption(&a.caption.text).unwrap(), ParsedCaption::Positive(prov.spec));
        let r = replay_augmentation(&slice, prov).unwrap();
        assert_eq!(r.image, a.image);
        assert_eq!(r.scar_field, a.scar_field);
        assert_eq!(r.caption.text, a.caption.text);

        let m = a.scar_field.as_ref().unwrap();
        assert_eq!(m.max(), 1.0);
        for (i, (&v, &l)) in m.data().iter().zip(slice.myo.labels()).enumerate() {
            assert!((0.0..=1.0).contains(&v));
            assert!(v == 0.0 || l != 0);
            if v == 0.0 {
                assert_eq!(a.image.data()[i].to_bits(), slice.image.data()[i].to_bits());
            }
        }
    }
    assert!(synthetic >= 6, "only {synthetic} of 8 records got a scar");
}

#[test]
fn closed_gate_consumes_one_draw() {
    let slice = phantom_slice(1, true);
    let cfg = SynthConfig::default();
    let mut draws = ScriptedUniforms::new(vec![0.7]);
    let a = augment_with_source(&slice, &cfg, &mut draws, 0).unwrap();
    assert_eq!(draws.consumed(), 1);
    assert!(a.provenance.is_none());
    assert_eq!(a.caption.label, Label::Negative);
    assert_eq!(a.image, slice.image);
}

#[test]
fn lge_positive_slices_are_refused() {
    let slice = phantom_slice(2, false);
    assert!(matches!(
        augment_record(&slice, &SynthConfig::default(), 0),
        Err(Error::ContractViolation(_))
    ));
}

#[test]
fn solid_disk_passes_through_with_warning() {
    // No cavity: layers are undefined, so no scar can be placed.
    let c = Point2::new(60.0, 60.0);
    let (img, _) = make_annulus(c, 0.5, 25.0, (120, 120), 0.6, 0.0, &mut seeded_rng(0)).unwrap();
    let disk = scarforge_core::raster::LabeledMask::from_fn(120, 120, |x, y| {
        u32::from((x as f64 - c.x).hypot(y as f64 - c.y) <= 25.0)
    });
    let (a, i) = place_rvips(c, 25.0, -1.2, 2.0);
    let slice = prepare_slice(&img, &disk, a, i, SliceLevel::Mid, true).unwrap();
    assert!(slice.anatomy.is_err());
    let cfg = SynthConfig { lambda: 1.0, ..SynthConfig::default() };
    let out = augment_record(&slice, &cfg, 0).unwrap();
    assert!(out.provenance.is_none());
    assert!(out.warning.is_some());
}

#[test]
fn lambda_extremes() {
    let slice = phantom_slice(3, true);
    let never = SynthConfig { lambda: 0.0, ..SynthConfig::default() };
    let always = SynthConfig { lambda: 1.0, ..SynthConfig::default() };
    for i in 0..10 {
        let a = augment_record(&slice, &never, i).unwrap();
        assert!(a.provenance.is_none());
        assert_eq!(a.image, slice.image);
        assert_eq!(a.caption.label, Label::Negative);

        let b = augment_record(&slice, &always, i).unwrap();
        assert!(b.provenance.is_some(), "{:?}", b.warning);
        assert_eq!(b.caption.label, Label::Positive);
    }
}

#[test]
fn augmented_manifest_round_trip() {
    use scarforge_core::dataset::{
        dataset_hash, read_augmented_manifest, recorded_hash, write_augmented, AugmentedRecord, RecordOutput,
        SourceRef, MANIFEST_FILE,
    };

    let slice = phantom_slice(4, true);
    let cfg = SynthConfig { lambda: 0.5, master_seed: 12, ..SynthConfig::default() };
    let outputs: Vec<RecordOutput> = (0..6u64)
        .map(|i| {
            let a = augment_record(&slice, &cfg, i).unwrap();
            let (img, mask, scar) = AugmentedRecord::file_names(i, a.scar_field.is_some());
            RecordOutput {
                record: AugmentedRecord {
                    output_image_path: img,
                    output_mask_path: mask,
                    scar_field_path: scar,
                    caption: a.caption.text,
                    label: a.caption.label,
                    synthetic: a.provenance.is_some(),
                    slice_level: slice.level,
                    provenance: a.provenance,
                    source: SourceRef {
                        patient_id: "p".into(),
                        image_path: "src.f32".into(),
                        record_index: i,
                        lge_negative: true,
                    },
                },
                image: a.image,
                mask: slice.myo.clone(),
                scar_field: a.scar_field,
            }
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_augmented(&outputs, dir.path()).unwrap();
    assert_eq!(manifest, dir.path().join(MANIFEST_FILE));
    let back = read_augmented_manifest(&manifest).unwrap();
    let written: Vec<AugmentedRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    assert_eq!(back, written);
    assert!(back.iter().any(|r| r.synthetic) && back.iter().any(|r| !r.synthetic));
    for r in back.iter().filter(|r| !r.synthetic) {
        assert!(r.provenance.is_none());
    }
    assert_eq!(dataset_hash(dir.path()).unwrap(), recorded_hash(dir.path()).unwrap());
}
