//! Manifests and image files.
//!
//! Manifests are JSON lines. Images are 8/16-bit grayscale PNG or a raw
//! float format: an ASCII header `F32 <width> <height> <sx> <sy>\n`
//! followed by `width * height` little-endian `f32` values, row-major.
//!
//! PNG quantization: on save, `code = round(clamp(v, 0, 1) * 65535)` as
//! 16-bit; on load, `v = code / max_code` (255 or 65535). Label masks are
//! stored as raw codes, 8-bit when every label fits, else 16-bit.

use std::fs;
use std::io::{BufRead, BufReader, Cursor};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anatomy::SliceLevel;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::raster::{GrayImage, LabeledMask, Point2};
use crate::synth::Provenance;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const HASH_FILE: &str = "dataset.sha256";

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";
const F32_MAGIC: &[u8] = b"F32 ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub image_path: PathBuf,
    pub myo_mask_path: PathBuf,
    pub rvip_anterior: Point2,
    pub rvip_inferior: Point2,
    pub spacing_mm: (f64, f64),
    pub slice_level: SliceLevel,
    pub lge_negative: bool,
    pub patient_id: String,
}

impl DatasetRecord {
    /// Load the image (with the record's spacing) and mask, and check that
    /// grids and landmarks agree.
    pub fn load(&self) -> Result<(GrayImage, LabeledMask)> {
        let image = load_image(&self.image_path)?
            .with_spacing(self.spacing_mm)
            .map_err(|e| Error::format(&self.image_path, e.to_string()))?;
        let mask = load_mask(&self.myo_mask_path)?;
        if mask.dims() != image.dims() {
            return Err(Error::format(
                &self.myo_mask_path,
                format!("mask is {:?} but the image is {:?}", mask.dims(), image.dims()),
            ));
        }
        let (w, h) = (image.width() as f64, image.height() as f64);
        for (name, p) in [("rvip_anterior", self.rvip_anterior), ("rvip_inferior", self.rvip_inferior)] {
            if !(p.is_finite() && (-0.5..=w - 0.5).contains(&p.x) && (-0.5..=h - 0.5).contains(&p.y)) {
                return Err(Error::rejected(format!(
                    "{name} ({}, {}) lies outside the {}x{} image {}",
                    p.x,
                    p.y,
                    w,
                    h,
                    self.image_path.display()
                )));
            }
        }
        Ok((image, mask))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parse a JSON-lines manifest. Relative paths are resolved against the
/// manifest's directory; blank lines are skipped but still counted.
pub fn read_manifest(path: &Path) -> Result<Vec<DatasetRecord>> {
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    read_json_lines(path, |line, mut rec: DatasetRecord| {
        let at = |message: String| Error::Manifest {
            path: path.to_path_buf(),
            line,
            message,
        };
        let (sx, sy) = rec.spacing_mm;
        if !(sx > 0.0 && sy > 0.0 && sx.is_finite() && sy.is_finite()) {
            return Err(at(format!("spacing_mm must be positive, got ({sx}, {sy})")));
        }
        rec.image_path = resolve(&base, &rec.image_path);
        rec.myo_mask_path = resolve(&base, &rec.myo_mask_path);
        for p in [&rec.image_path, &rec.myo_mask_path] {
            if !p.is_file() {
                return Err(at(format!("referenced file not found: {}", p.display())));
            }
        }
        Ok(rec)
    })
}

fn read_json_lines<T: for<'de> Deserialize<'de>>(
    path: &Path,
    mut check: impl FnMut(usize, T) -> Result<T>,
) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(check(i + 1, rec)?);
    }
    Ok(out)
}

fn write_json_lines<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut text = String::new();
    for row in rows {
        text.push_str(&serde_json::to_string(row).expect("manifest rows serialize"));
        text.push('\n');
    }
    write_file(path, text.as_bytes())
}

pub fn write_manifest(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    write_json_lines(path, records)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

struct F32Raster {
    width: usize,
    height: usize,
    spacing: (f64, f64),
    values: Vec<f32>,
}

fn decode_f32(path: &Path, bytes: &[u8]) -> Result<F32Raster> {
    let bad = |m: String| Error::format(path, m);
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("F32 header has no line terminator".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("F32 header is not ASCII".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 5 || fields[0] != "F32" {
        return Err(bad(format!("malformed F32 header {header:?}")));
    }
    let dim = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad dimension {s:?}")));
    let sp = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad spacing {s:?}")));
    let (width, height) = (dim(fields[1])?, dim(fields[2])?);
    let spacing = (sp(fields[3])?, sp(fields[4])?);
    if width == 0 || height == 0 {
        return Err(bad(format!("degenerate dimensions {width}x{height}")));
    }
    let payload = &bytes[nl + 1..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad("dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(bad(format!(
            "payload is {} bytes, expected {expected} for {width}x{height}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(F32Raster {
        width,
        height,
        spacing,
        values,
    })
}

fn encode_f32(width: usize, height: usize, spacing: (f64, f64), values: impl Iterator<Item = f32>) -> Vec<u8> {
    let mut out = format!("F32 {width} {height} {} {}\n", spacing.0, spacing.1).into_bytes();
    out.reserve(width * height * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

enum PngGray {
    Eight(u32, u32, Vec<u8>),
    Sixteen(u32, u32, Vec<u16>),
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<PngGray> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::format(path, format!("PNG decode failed: {e}")))?;
    match img {
        DynamicImage::ImageLuma8(b) => Ok(PngGray::Eight(b.width(), b.height(), b.into_raw())),
        DynamicImage::ImageLuma16(b) => Ok(PngGray::Sixteen(b.width(), b.height(), b.into_raw())),
        other => Err(Error::format(
            path,
            format!("expected a grayscale PNG, found {:?}", other.color()),
        )),
    }
}

fn encode_png<P>(path: &Path, buf: ImageBuffer<Luma<P>, Vec<P>>) -> Result<Vec<u8>>
where
    P: image::Primitive,
    ImageBuffer<Luma<P>, Vec<P>>: Into<DynamicImage>,
{
    let mut out = Cursor::new(Vec::new());
    let dynamic: DynamicImage = buf.into();
    dynamic
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::format(path, format!("PNG encode failed: {e}")))?;
    Ok(out.into_inner())
}

/// Load a grayscale image. PNGs carry no spacing and load at 1 mm.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let bytes = read_file(path)?;
    if bytes.starts_with(PNG_MAGIC) {
        let (w, h, data): (u32, u32, Vec<f64>) = match decode_png(path, &bytes)? {
            PngGray::Eight(w, h, px) => (w, h, px.into_iter().map(|c| f64::from(c) / 255.0).collect()),
            PngGray::Sixteen(w, h, px) => (w, h, px.into_iter().map(|c| f64::from(c) / 65535.0).collect()),
        };
        GrayImage::new(w as usize, h as usize, (1.0, 1.0), data).map_err(|e| Error::format(path, e.to_string()))
    } else if bytes.starts_with(F32_MAGIC) {
        let r = decode_f32(path, &bytes)?;
        GrayImage::new(
            r.width,
            r.height,
            r.spacing,
            r.values.into_iter().map(f64::from).collect(),
        )
        .map_err(|e| Error::format(path, e.to_string()))
    } else {
        Err(Error::format(path, "unknown image format (expected PNG or F32)"))
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Save by extension: `.png` (16-bit, quantized) or `.f32` (lossless for
/// values representable as `f32`).
pub fn save_image(img: &GrayImage, path: &Path) -> Result<()> {
    let bytes = match extension(path).as_str() {
        "png" => {
            let codes: Vec<u16> = img
                .data()
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
                .collect();
            let buf = ImageBuffer::<Luma<u16>, _>::from_raw(img.width() as u32, img.height() as u32, codes)
                .expect("buffer length matches dimensions");
            encode_png(path, buf)?
        }
        "f32" => encode_f32(
            img.width(),
            img.height(),
            img.spacing(),
            img.data().iter().map(|&v| v as f32),
        ),
        _ => return Err(Error::format(path, "image files must end in .png or .f32")),
    };
    write_file(path, &bytes)
}

pub fn load_mask(path: &Path) -> Result<LabeledMask> {
    let bytes = read_file(path)?;
    let (w, h, labels): (usize, usize, Vec<u32>) = if bytes.starts_with(PNG_MAGIC) {
        match decode_png(path, &bytes)? {
            PngGray::Eight(w, h, px) => (w as usize, h as usize, px.into_iter().map(u32::from).collect()),
            PngGray::Sixteen(w, h, px) => (w as usize, h as usize, px.into_iter().map(u32::from).collect()),
        }
    } else if bytes.starts_with(F32_MAGIC) {
        let r = decode_f32(path, &bytes)?;
        let labels = r
            .values
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && v <= 16_777_216.0 {
                    Ok(v as u32)
                } else {
                    Err(Error::format(path, format!("mask value {v} is not a label")))
                }
            })
            .collect::<Result<_>>()?;
        (r.width, r.height, labels)
    } else {
        return Err(Error::format(path, "unknown mask format (expected PNG or F32)"));
    };
    LabeledMask::new(w, h, labels).map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_mask(mask: &LabeledMask, path: &Path) -> Result<()> {
    let (w, h) = (mask.width() as u32, mask.height() as u32);
    let top = mask.labels().iter().copied().max().unwrap_or(0);
    let bytes = match extension(path).as_str() {
        "png" if top <= u32::from(u8::MAX) => {
            let px = mask.labels().iter().map(|&l| l as u8).collect();
            encode_png(path, ImageBuffer::<Luma<u8>, _>::from_raw(w, h, px).expect("sized"))?
        }
        "png" if top <= u32::from(u16::MAX) => {
            let px = mask.labels().iter().map(|&l| l as u16).collect();
            encode_png(path, ImageBuffer::<Luma<u16>, _>::from_raw(w, h, px).expect("sized"))?
        }
        "png" => return Err(Error::format(path, format!("label {top} does not fit in a 16-bit PNG"))),
        "f32" => encode_f32(
            mask.width(),
            mask.height(),
            (1.0, 1.0),
            mask.labels().iter().map(|&l| l as f32),
        ),
        _ => return Err(Error::format(path, "mask files must end in .png or .f32")),
    };
    write_file(path, &bytes)
}

/// Where an augmented record came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceRef {
    pub patient_id: String,
    pub image_path: PathBuf,
    pub record_index: u64,
    pub lge_negative: bool,
}

/// One line of an emitted dataset manifest. Paths are relative to the
/// dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentedRecord {
    pub output_image_path: PathBuf,
    pub output_mask_path: PathBuf,
    pub scar_field_path: Option<PathBuf>,
    pub caption: String,
    pub label: Label,
    pub synthetic: bool,
    pub slice_level: SliceLevel,
    pub provenance: Option<Provenance>,
    pub source: SourceRef,
}

impl AugmentedRecord {
    /// Standard relative output paths for the record at `index`.
    pub fn file_names(index: u64, with_scar: bool) -> (PathBuf, PathBuf, Option<PathBuf>) {
        (
            PathBuf::from(format!("images/{index:05}.f32")),
            PathBuf::from(format!("masks/{index:05}.png")),
            with_scar.then(|| PathBuf::from(format!("scars/{index:05}.f32"))),
        )
    }

    /// Every file the record references, in hashing order.
    pub fn files(&self) -> Vec<&Path> {
        let mut v = vec![self.output_image_path.as_path(), self.output_mask_path.as_path()];
        v.extend(self.scar_field_path.as_deref());
        v
    }
}

/// A record together with the rasters it points at.
#[derive(Debug, Clone)]
pub struct RecordOutput {
    pub record: AugmentedRecord,
    pub image: GrayImage,
    pub mask: LabeledMask,
    pub scar_field: Option<GrayImage>,
}

impl RecordOutput {
    /// Write the rasters under `out_dir`. Distinct records touch distinct
    /// files, so this is safe to run in parallel.
    pub fn write_files(&self, out_dir: &Path) -> Result<()> {
        let r = &self.record;
        save_image(&self.image, &out_dir.join(&r.output_image_path))?;
        save_mask(&self.mask, &out_dir.join(&r.output_mask_path))?;
        match (&self.scar_field, &r.scar_field_path) {
            (Some(m), Some(p)) => save_image(m, &out_dir.join(p)),
            (None, None) => Ok(()),
            _ => Err(Error::ContractViolation(
                "scar field and scar field path must be present together".into(),
            )),
        }
    }
}

/// Write every record's rasters, the manifest and the content hash;
/// returns the manifest path.
pub fn write_augmented(outputs: &[RecordOutput], out_dir: &Path) -> Result<PathBuf> {
    for o in outputs {
        o.write_files(out_dir)?;
    }
    let records: Vec<AugmentedRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    write_augmented_manifest(&records, out_dir)
}

/// Write the manifest for records whose files already exist, then the
/// content hash.
pub fn write_augmented_manifest(records: &[AugmentedRecord], out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join(MANIFEST_FILE);
    write_json_lines(&path, records)?;
    let hash = dataset_hash(out_dir)?;
    write_file(&out_dir.join(HASH_FILE), format!("{hash}\n").as_bytes())?;
    Ok(path)
}

pub fn read_augmented_manifest(path: &Path) -> Result<Vec<AugmentedRecord>> {
    read_json_lines(path, |_, r| Ok(r))
}

/// SHA-256 over the manifest bytes followed by, for each record in order,
/// each referenced file's relative path and contents.
pub fn dataset_hash(out_dir: &Path) -> Result<String> {
    let manifest = out_dir.join(MANIFEST_FILE);
    let mut hasher = Sha256::new();
    hasher.update(read_file(&manifest)?);
    for rec in read_augmented_manifest(&manifest)? {
        for rel in rec.files() {
            hasher.update(rel.to_string_lossy().as_bytes());
            hasher.update([0u8]);
            let bytes = read_file(&out_dir.join(rel))?;
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
        }
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Hash recorded next to the manifest, if any.
pub fn recorded_hash(out_dir: &Path) -> Result<String> {
    let p = out_dir.join(HASH_FILE);
    Ok(String::from_utf8_lossy(&read_file(&p)?).trim().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient() -> GrayImage {
        GrayImage::from_fn(7, 5, (0.5, 0.75), |x, y| (x as f64 * 0.13 + y as f64 * 0.07).fract()).unwrap()
    }

    #[test]
    fn f32_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.f32");
        let img = gradient().map(|v| f64::from(v as f32)).unwrap();
        save_image(&img, &p).unwrap();
        let back = load_image(&p).unwrap();
        assert_eq!(back, img);
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"F32 7 5 0.5 0.75\n"));
    }

    #[test]
    fn png16_quantization_bound() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = gradient().with_spacing((1.0, 1.0)).unwrap();
        save_image(&img, &p).unwrap();
        let back = load_image(&p).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / (2.0 * 65535.0) + 1e-15);
        }
    }

    #[test]
    fn png8_loads_by_max_code() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let buf = ImageBuffer::<Luma<u8>, _>::from_raw(3, 1, vec![0u8, 51, 255]).unwrap();
        fs::write(&p, encode_png(&p, buf).unwrap()).unwrap();
        assert_eq!(load_image(&p).unwrap().data(), &[0.0, 0.2, 1.0]);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.f32");
        for bytes in [
            &b"F32 0 0 1 1\n"[..],
            b"F32 2 1 1 1\n\0\0\0\0",
            b"F32 1 1 1 1\n\0\0\0\0\0",
            b"F32 1 1 1\n\0\0\0\0",
            b"GIF89a",
        ] {
            fs::write(&p, bytes).unwrap();
            assert!(load_image(&p).is_err(), "{bytes:?}");
        }
        fs::write(&p, [&b"F32 1 1 1 1\n"[..], &f32::NAN.to_le_bytes()].concat()).unwrap();
        assert!(load_image(&p).is_err());
        assert!(save_image(&gradient(), &dir.path().join("a.tif")).is_err());
    }

    #[test]
    fn masks_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let small = LabeledMask::from_fn(9, 4, |x, y| ((x * y) % 17) as u32);
        let big = LabeledMask::from_fn(9, 4, |x, _| (x * 1000) as u32);
        for (m, name) in [(&small, "s.png"), (&big, "b.png"), (&big, "b.f32")] {
            let p = dir.path().join(name);
            save_mask(m, &p).unwrap();
            assert_eq!(&load_mask(&p).unwrap(), m);
        }
    }

    fn record(dir: &Path) -> DatasetRecord {
        let img = GrayImage::filled(10, 8, (1.0, 1.0), 0.5).unwrap();
        save_image(&img, &dir.join("img.f32")).unwrap();
        save_mask(&LabeledMask::zeros(10, 8), &dir.join("myo.png")).unwrap();
        DatasetRecord {
            image_path: "img.f32".into(),
            myo_mask_path: "myo.png".into(),
            rvip_anterior: Point2::new(2.0, 3.0),
            rvip_inferior: Point2::new(2.5, 6.0),
            spacing_mm: (1.25, 1.25),
            slice_level: SliceLevel::Mid,
            lge_negative: true,
            patient_id: "p0".into(),
        }
    }

    #[test]
    fn manifest_reading() {
        let dir = tempfile::tempdir().unwrap();
        let rec = record(dir.path());
        let path = dir.path().join("m.jsonl");

        fs::write(&path, "").unwrap();
        assert!(read_manifest(&path).unwrap().is_empty());

        write_manifest(&path, std::slice::from_ref(&rec)).unwrap();
        let got = read_manifest(&path).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].image_path, dir.path().join("img.f32"));
        assert_eq!(got[0].patient_id, "p0");
        let (img, _) = got[0].load().unwrap();
        assert_eq!(img.spacing(), (1.25, 1.25));

        let mut v = serde_json::to_value(&rec).unwrap();
        v.as_object_mut().unwrap().remove("spacing_mm");
        fs::write(&path, format!("\n{}\n{v}\n", serde_json::to_string(&rec).unwrap())).unwrap();
        match read_manifest(&path) {
            Err(Error::Manifest { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("spacing_mm"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }

        let missing = DatasetRecord {
            image_path: "nope.f32".into(),
            ..rec.clone()
        };
        write_manifest(&path, &[missing]).unwrap();
        let err = read_manifest(&path).unwrap_err().to_string();
        assert!(err.contains("nope.f32"), "{err}");
    }

    #[test]
    fn landmarks_must_lie_in_the_image() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = record(dir.path());
        rec.image_path = dir.path().join("img.f32");
        rec.myo_mask_path = dir.path().join("myo.png");
        rec.rvip_inferior = Point2::new(20.0, 3.0);
        assert!(matches!(rec.load(), Err(Error::RejectedInput(_))));
    }
}
