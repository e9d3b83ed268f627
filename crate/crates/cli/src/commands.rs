use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use scarforge_core::captions::{negative_caption, Caption, with_slice_suffix, POSITIVE_QUERY};
use scarforge_core::dataset::{
    read_augmented_manifest, read_manifest, save_image, save_mask, write_augmented_manifest, write_manifest,
    AugmentedRecord, DatasetRecord, RecordOutput, SourceRef,
};
use scarforge_core::phantoms::write_phantom_dataset;
use scarforge_core::pipeline::{prepare_slice, PreparedSlice};
use scarforge_core::synth::{augment_record, replay_augmentation, Augmentation, Provenance, SynthConfig};
use scarforge_core::Label;

use crate::config::config_for_run;
use crate::{CmdResult, Failure, SynthArgs};

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Data(format!("cannot start {jobs} worker threads: {e}")))
}

fn prepare(index: usize, rec: &DatasetRecord) -> Result<PreparedSlice, Failure> {
    let context = |e: scarforge_core::Error| {
        Failure::Data(format!("record {index} ({}): {e}", rec.image_path.display()))
    };
    let (image, mask) = rec.load().map_err(context)?;
    prepare_slice(
        &image,
        &mask,
        rec.rvip_anterior,
        rec.rvip_inferior,
        rec.slice_level,
        rec.lge_negative,
    )
    .map_err(context)
}

/// Run `f` over the records on `jobs` threads; results keep input order.
fn par_map<T: Send>(
    jobs: usize,
    records: &[DatasetRecord],
    f: impl Fn(usize, &DatasetRecord) -> Result<T, Failure> + Sync,
) -> Result<Vec<T>, Failure> {
    pool(jobs)?.install(|| records.par_iter().enumerate().map(|(i, r)| f(i, r)).collect())
}

pub(crate) fn preprocess(manifest: &Path, out: &Path, jobs: usize) -> CmdResult {
    let records = read_manifest(manifest)?;
    let prepared = par_map(jobs, &records, |i, rec| {
        let s = prepare(i, rec)?;
        let image_path = PathBuf::from(format!("images/{i:05}.f32"));
        let mask_path = PathBuf::from(format!("masks/{i:05}.png"));
        save_image(&s.image, &out.join(&image_path))?;
        save_mask(&s.myo, &out.join(&mask_path))?;
        Ok(DatasetRecord {
            image_path,
            myo_mask_path: mask_path,
            rvip_anterior: s.anterior,
            rvip_inferior: s.inferior,
            spacing_mm: s.image.spacing(),
            slice_level: rec.slice_level,
            lge_negative: rec.lge_negative,
            patient_id: rec.patient_id.clone(),
        })
    })?;
    let path = out.join("manifest.jsonl");
    write_manifest(&path, &prepared)?;
    println!("preprocessed {} records -> {}", prepared.len(), path.display());
    Ok(())
}

pub(crate) fn segments(index: usize, manifest: &Path, out: &Path) -> CmdResult {
    let records = read_manifest(manifest)?;
    let rec = records.get(index).ok_or_else(|| {
        Failure::Usage(format!("record {index} out of range; manifest has {} records", records.len()))
    })?;
    let slice = prepare(index, rec)?;
    let maps = slice
        .anatomy
        .map_err(|e| Failure::Data(format!("record {index}: {e}")))?;
    save_mask(&maps.segments, &out.join("segments.png"))?;
    save_mask(&maps.layers, &out.join("layers.png"))?;
    let ids: Vec<String> = maps
        .segments
        .alphabet()
        .into_iter()
        .filter(|&l| l != 0)
        .map(|l| l.to_string())
        .collect();
    println!("segments: {}", ids.join(" "));
    println!("wrote {} and {}", out.join("segments.png").display(), out.join("layers.png").display());
    Ok(())
}

/// Pass-through for slices that already carry real enhancement.
fn real_positive(slice: &PreparedSlice) -> Augmentation {
    Augmentation {
        image: slice.image.clone(),
        caption: Caption {
            text: with_slice_suffix(POSITIVE_QUERY, slice.level),
            label: Label::Positive,
            level: slice.level,
            spec: None,
        },
        scar_field: None,
        provenance: None,
        warning: None,
    }
}

fn replay_plan(path: &Path, records: &[DatasetRecord]) -> Result<BTreeMap<u64, Option<Provenance>>, Failure> {
    let previous = read_augmented_manifest(path)?;
    if previous.len() != records.len() {
        return Err(Failure::Data(format!(
            "replay manifest has {} records but the input manifest has {}",
            previous.len(),
            records.len()
        )));
    }
    let mut plan = BTreeMap::new();
    for prev in previous {
        let i = prev.source.record_index as usize;
        let rec = records.get(i).ok_or_else(|| {
            Failure::Data(format!("replay manifest refers to record {i}, which does not exist"))
        })?;
        if rec.patient_id != prev.source.patient_id || rec.image_path != prev.source.image_path {
            return Err(Failure::Data(format!(
                "replay record {i} was made from {} ({}), not {} ({})",
                prev.source.image_path.display(),
                prev.source.patient_id,
                rec.image_path.display(),
                rec.patient_id
            )));
        }
        plan.insert(prev.source.record_index, prev.provenance);
    }
    Ok(plan)
}

pub(crate) fn synth(args: &SynthArgs) -> CmdResult {
    let cfg: SynthConfig = config_for_run(args.config.as_deref(), args.seed)?;
    let records = read_manifest(&args.manifest)?;
    let plan = match &args.replay {
        Some(p) => Some(replay_plan(p, &records)?),
        None => None,
    };

    let outputs = par_map(args.jobs.into(), &records, |i, rec| {
        let slice = prepare(i, rec)?;
        let index = i as u64;
        let aug = if !rec.lge_negative {
            real_positive(&slice)
        } else if let Some(plan) = &plan {
            match plan.get(&index).and_then(Option::as_ref) {
                Some(prov) => replay_augmentation(&slice, prov)
                    .map_err(|e| Failure::Data(format!("record {i}: replay failed: {e}")))?,
                None => Augmentation {
                    image: slice.image.clone(),
                    caption: negative_caption(slice.level),
                    scar_field: None,
                    provenance: None,
                    warning: None,
                },
            }
        } else {
            augment_record(&slice, &cfg, index).map_err(|e| Failure::Data(format!("record {i}: {e}")))?
        };
        if let Some(w) = &aug.warning {
            log::warn!("record {i}: {w}");
        }
        let (image_path, mask_path, scar_path) = AugmentedRecord::file_names(index, aug.scar_field.is_some());
        let output = RecordOutput {
            record: AugmentedRecord {
                output_image_path: image_path,
                output_mask_path: mask_path,
                scar_field_path: scar_path,
                caption: aug.caption.text,
                label: aug.caption.label,
                synthetic: aug.provenance.is_some(),
                slice_level: rec.slice_level,
                provenance: aug.provenance,
                source: SourceRef {
                    patient_id: rec.patient_id.clone(),
                    image_path: rec.image_path.clone(),
                    record_index: index,
                    lge_negative: rec.lge_negative,
                },
            },
            image: aug.image,
            mask: slice.myo,
            scar_field: aug.scar_field,
        };
        output.write_files(&args.out)?;
        Ok(output.record)
    })?;

    write_augmented_manifest(&outputs, &args.out)?;
    let synthetic = outputs.iter().filter(|r| r.synthetic).count();
    println!(
        "wrote {} records ({synthetic} synthetic) to {}",
        outputs.len(),
        args.out.display()
    );
    println!("dataset sha256: {}", scarforge_core::dataset::recorded_hash(&args.out)?);
    Ok(())
}

pub(crate) fn phantom(out: &Path, count: usize, seed: u64) -> CmdResult {
    let manifest = write_phantom_dataset(out, count, seed)?;
    println!("{}", manifest.display());
    Ok(())
}
