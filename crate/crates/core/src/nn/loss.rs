use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied inside the logarithm of the cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

/// Max-shifted softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// `−ln(max(p[label], 1e-12))`; NaN propagates.
pub fn cross_entropy<T: Scalar>(probs: &[T], label: usize) -> Result<T> {
    let p = *probs
        .get(label)
        .ok_or_else(|| Error::invalid(format!("label {label} outside {} classes", probs.len())))?;
    let floor = T::lit(PROB_FLOOR);
    Ok(-(if p < floor { floor } else { p }).ln())
}

/// Gradient of `cross_entropy(softmax(z), label)` with respect to `z`.
pub fn softmax_cross_entropy_grad<T: Scalar>(probs: &[T], label: usize) -> Result<Vec<T>> {
    if label >= probs.len() {
        return Err(Error::invalid(format!(
            "label {label} outside {} classes",
            probs.len()
        )));
    }
    let mut g = probs.to_vec();
    g[label] -= T::one();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_cases() {
        let p = softmax(&[2.0f64; 5]);
        assert!(p.iter().all(|v| (v - 0.2).abs() < 1e-15));
        let a = softmax(&[0.1f64, -2.0, 3.0]);
        let b = softmax(&[100.1f64, 98.0, 103.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let p = softmax(&[0.0f64, 3f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        let big = softmax(&[1e4f64, 0.0]);
        assert!(big.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn cross_entropy_cases() {
        assert_eq!(cross_entropy(&[0.0f64, 1.0], 1).unwrap(), 0.0);
        let k = 7;
        let u = vec![1.0 / k as f64; k];
        assert!((cross_entropy(&u, 3).unwrap() - (k as f64).ln()).abs() < 1e-14);
        assert!((cross_entropy(&[0.25f64, 0.75], 1).unwrap() - 0.287682).abs() < 1e-6);
        assert!(cross_entropy(&[0.5f64, 0.5], 2).is_err());
        assert!((cross_entropy(&[1.0f64, 0.0], 1).unwrap() - 27.631021).abs() < 1e-5);
    }
}
