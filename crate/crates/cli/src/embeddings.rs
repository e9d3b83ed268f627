//! `score`: zero-shot decisions from embedding files.
//!
//! Embedding files hold one vector per line as whitespace-separated
//! numbers; blank lines and `#` comments are skipped. The text file has
//! either two rows (positive then negative query, shared by every image)
//! or two rows per image, interleaved positive/negative. The optional
//! labels file has one `positive`/`negative` (or `1`/`0`) per line.

use std::path::Path;

use scarforge_core::contrastive::{balanced_accuracy, zero_shot_decide, Embedding};
use scarforge_core::Label;

use crate::{CmdResult, Failure};

fn content_lines(path: &Path) -> Result<Vec<(usize, String)>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

pub(crate) fn read_embeddings(path: &Path) -> Result<Vec<Embedding>, Failure> {
    let rows = content_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let bad = |m: String| Failure::Data(format!("{}:{n}: {m}", path.display()));
            let values = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad(format!("{t:?} is not a number"))))
                .collect::<Result<Vec<_>, _>>()?;
            Embedding::new(values).map_err(|e| bad(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(first) = rows.first() {
        if let Some(i) = rows.iter().position(|r| r.dim() != first.dim()) {
            return Err(Failure::Data(format!(
                "{}: row {} has dimension {}, expected {}",
                path.display(),
                i + 1,
                rows[i].dim(),
                first.dim()
            )));
        }
    }
    Ok(rows)
}

fn read_labels(path: &Path) -> Result<Vec<Label>, Failure> {
    content_lines(path)?
        .into_iter()
        .map(|(n, l)| {
            l.parse::<Label>()
                .map_err(|e| Failure::Data(format!("{}:{n}: {e}", path.display())))
        })
        .collect()
}

pub(crate) fn score(image_emb: &Path, text_emb: &Path, labels: Option<&Path>, tau: f64) -> CmdResult {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Failure::Usage(format!("--tau must be positive, got {tau}")));
    }
    let images = read_embeddings(image_emb)?;
    let texts = read_embeddings(text_emb)?;
    let n = images.len();
    if n == 0 {
        return Err(Failure::Data(format!("{}: no image embeddings", image_emb.display())));
    }
    let query = |i: usize| -> (&Embedding, &Embedding) {
        if texts.len() == 2 {
            (&texts[0], &texts[1])
        } else {
            (&texts[2 * i], &texts[2 * i + 1])
        }
    };
    if texts.len() != 2 && texts.len() != 2 * n {
        return Err(Failure::Data(format!(
            "{} text rows for {n} images; expected 2 (shared queries) or {}",
            texts.len(),
            2 * n
        )));
    }
    let truth = labels.map(read_labels).transpose()?;
    if let Some(t) = &truth {
        if t.len() != n {
            return Err(Failure::Data(format!("{} labels for {n} images", t.len())));
        }
    }

    println!("index\tprediction\tmargin\tp_positive");
    let mut preds = Vec::with_capacity(n);
    for (i, v) in images.iter().enumerate() {
        let (pos, neg) = query(i);
        let d = zero_shot_decide(v, pos, neg).map_err(|e| Failure::Data(format!("image {i}: {e}")))?;
        // Two-way softmax over the similarities scaled by 1 / tau.
        let p_pos = 1.0 / (1.0 + (-d.margin / tau).exp());
        println!("{i}\t{}\t{:.6}\t{:.6}", d.label, d.margin, p_pos);
        preds.push(d.label);
    }
    if let Some(t) = truth {
        let ba = balanced_accuracy(&preds, &t).map_err(|e| Failure::Data(e.to_string()))?;
        println!("balanced_accuracy\t{ba:.6}");
    }
    Ok(())
}
