//! Scoring math for CLIP-style image/text embeddings: cosine similarity,
//! the symmetric cross-entropy alignment loss, zero-shot decisions and
//! balanced accuracy.

use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("embedding has no components"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding has non-finite components"));
        }
        Ok(Embedding(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, k: f64) -> Result<Embedding> {
        Embedding::new(self.0.iter().map(|v| v * k).collect())
    }
}

/// Row-aligned image and text embeddings: row `i` of each side is a pair.
#[derive(Debug, Clone)]
pub struct EmbeddingBatch {
    images: Vec<Embedding>,
    texts: Vec<Embedding>,
}

impl EmbeddingBatch {
    pub fn new(images: Vec<Embedding>, texts: Vec<Embedding>) -> Result<Self> {
        if images.len() != texts.len() {
            return Err(Error::invalid(format!(
                "{} image rows but {} text rows",
                images.len(),
                texts.len()
            )));
        }
        let dim = images.first().map(Embedding::dim);
        if images.iter().chain(&texts).any(|e| Some(e.dim()) != dim) {
            return Err(Error::invalid("embedding dimensions differ within the batch"));
        }
        Ok(EmbeddingBatch { images, texts })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[Embedding] {
        &self.images
    }

    pub fn texts(&self) -> &[Embedding] {
        &self.texts
    }
}

pub fn l2_normalize(v: &Embedding) -> Result<Embedding> {
    let n = v.norm();
    if n == 0.0 {
        return Err(Error::invalid("cannot normalize a zero vector"));
    }
    Ok(Embedding(v.0.iter().map(|x| x / n).collect()))
}

/// Dot product of the L2-normalized vectors.
pub fn similarity(v: &Embedding, t: &Embedding) -> Result<f64> {
    if v.dim() != t.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            v.dim(),
            t.dim()
        )));
    }
    let (vn, tn) = (l2_normalize(v)?, l2_normalize(t)?);
    let s: f64 = vn.0.iter().zip(&tn.0).map(|(a, b)| a * b).sum();
    Ok(s.clamp(-1.0, 1.0))
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Symmetric InfoNCE: the mean of the image->text and text->image
/// softmax cross-entropies over logits `sim(v_i, t_j) / tau`, with the
/// matching pair as the target.
pub fn clip_loss(batch: &EmbeddingBatch, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("temperature must be positive, got {tau}")));
    }
    let n = batch.len();
    if n < 2 {
        return Err(Error::invalid("clip loss needs at least two pairs"));
    }
    let images: Vec<Embedding> = batch.images.iter().map(l2_normalize).collect::<Result<_>>()?;
    let texts: Vec<Embedding> = batch.texts.iter().map(l2_normalize).collect::<Result<_>>()?;
    let logits: Vec<Vec<f64>> = images
        .iter()
        .map(|v| {
            texts
                .iter()
                .map(|t| v.0.iter().zip(&t.0).map(|(a, b)| a * b).sum::<f64>() / tau)
                .collect()
        })
        .collect();

    let rows: f64 = (0..n)
        .map(|i| log_sum_exp(logits[i].iter().copied()) - logits[i][i])
        .sum();
    let cols: f64 = (0..n)
        .map(|j| log_sum_exp(logits.iter().map(|row| row[j])) - logits[j][j])
        .sum();
    Ok(0.5 * (rows / n as f64 + cols / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroShotDecision {
    pub label: Label,
    /// `sim(v, t_pos) - sim(v, t_neg)`.
    pub margin: f64,
}

/// Positive iff the image is strictly closer to the positive query; ties
/// go to the negative class.
pub fn zero_shot_decide(v: &Embedding, t_pos: &Embedding, t_neg: &Embedding) -> Result<ZeroShotDecision> {
    let s_pos = similarity(v, t_pos)?;
    let s_neg = similarity(v, t_neg)?;
    Ok(ZeroShotDecision {
        label: if s_pos > s_neg { Label::Positive } else { Label::Negative },
        margin: s_pos - s_neg,
    })
}

/// Mean of the per-class recalls.
pub fn balanced_accuracy(preds: &[Label], truth: &[Label]) -> Result<f64> {
    if preds.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (p, t) in preds.iter().zip(truth) {
        match (t, p) {
            (Label::Positive, Label::Positive) => tp += 1,
            (Label::Positive, Label::Negative) => fn_ += 1,
            (Label::Negative, Label::Negative) => tn += 1,
            (Label::Negative, Label::Positive) => fp += 1,
        }
    }
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(Error::UndefinedMetric(
            "balanced accuracy needs both classes in the ground truth".into(),
        ));
    }
    Ok(0.5 * (tp as f64 / (tp + fn_) as f64 + tn as f64 / (tn + fp) as f64))
}
