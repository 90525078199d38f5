use super::Tensor;
use crate::error::{Error, Result};

/// Row-wise softmax of an `N x K` matrix, max-shifted for stability.
pub fn softmax(logits: &Tensor) -> Tensor {
    let k = logits.row_len();
    let mut data = Vec::with_capacity(logits.len());
    for r in 0..logits.rows() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = data.len();
        data.extend(row.iter().map(|v| (v - max).exp()));
        let total: f64 = data[start..start + k].iter().sum();
        data[start..].iter_mut().for_each(|v| *v /= total);
    }
    Tensor {
        shape: logits.shape.clone(),
        data,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    /// Mean of `-log p_target` over the batch.
    pub loss: f64,
    pub probabilities: Tensor,
    /// Gradient of `loss` with respect to the logits: `(softmax - onehot) / N`.
    pub grad_logits: Tensor,
}

pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<LossOutput> {
    let n = logits.rows();
    let k = logits.row_len();
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} rows", labels.len())));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(&label) = labels.iter().find(|l| **l >= k) {
        return Err(Error::LabelRange { label, classes: k });
    }
    if logits.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }
    let probabilities = softmax(logits);
    let mut loss = 0.0;
    let mut grad = probabilities.data.clone();
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - row[label];
        grad[r * k + label] -= 1.0;
    }
    grad.iter_mut().for_each(|g| *g /= n as f64);
    Ok(LossOutput {
        loss: loss / n as f64,
        probabilities,
        grad_logits: Tensor {
            shape: logits.shape.clone(),
            data: grad,
        },
    })
}
