use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Mean cross-entropy of row-wise softmax, with its gradient `(softmax - onehot) / B`.
pub fn softmax_cross_entropy<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let (b, k) = logits.dims2("softmax_cross_entropy")?;
    if labels.len() != b {
        return Err(Error::shape("softmax_cross_entropy labels", &[b], &[labels.len()]));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {k} classes"
        )));
    }
    let bf = T::lit(b as f64);
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); b * k];
    for (bi, &label) in labels.iter().enumerate() {
        let row = &logits.data()[bi * k..(bi + 1) * k];
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        loss += lse - row[label];
        for c in 0..k {
            let p = (row[c] - lse).exp();
            let target = if c == label { T::one() } else { T::zero() };
            grad[bi * k + c] = (p - target) / bf;
        }
    }
    Ok((loss / bf, Tensor::new(vec![b, k], grad)?))
}
