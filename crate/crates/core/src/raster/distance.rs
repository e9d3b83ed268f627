//! Exact Euclidean distance transform (Felzenszwalb & Huttenlocher lower
//! envelope of parabolas, one pass per axis).

use super::LabeledMask;
use crate::error::{Error, Result};

/// Per-pixel distance, in pixels, to the nearest pixel not carrying the
/// foreground label. `+inf` everywhere when the mask has no such pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// For callers that need every distance to be finite.
    pub fn require_finite(self) -> Result<Self> {
        if self.values.is_empty() || self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NoBackground)
        }
    }
}

// Larger than any squared distance on a realistic grid, small enough that
// the envelope arithmetic never overflows.
const FAR: f64 = 1e20;

pub fn distance_transform(mask: &LabeledMask, foreground_label: u32) -> DistanceField {
    let (w, h) = mask.dims();
    let mut sq: Vec<f64> = mask
        .labels()
        .iter()
        .map(|&l| if l == foreground_label { FAR } else { 0.0 })
        .collect();

    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for x in 0..w {
        for y in 0..h {
            f[y] = sq[y * w + x];
        }
        envelope(&f[..h], &mut d[..h], &mut v, &mut z);
        for y in 0..h {
            sq[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&sq[y * w..(y + 1) * w]);
        envelope(&f[..w], &mut d[..w], &mut v, &mut z);
        sq[y * w..(y + 1) * w].copy_from_slice(&d[..w]);
    }

    let values = sq
        .into_iter()
        .map(|s| if s >= FAR * 0.5 { f64::INFINITY } else { s.sqrt() })
        .collect();
    DistanceField {
        width: w,
        height: h,
        values,
    }
}

/// 1D squared distance transform of a sampled function `f`.
fn envelope(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        loop {
            let p = v[k];
            let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                // v[0] has z = -inf, so k never underflows here.
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}
