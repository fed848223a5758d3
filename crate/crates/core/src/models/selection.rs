use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Joint probability (or score) of every beam pair, `N_t × N_r` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix<T> {
    pub n_t: usize,
    pub n_r: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> PairMatrix<T> {
    pub fn get(&self, p: usize, q: usize) -> T {
        self.values[p * self.n_r + q]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Flat indices in descending score order, ties by lower index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| {
            self.values[b]
                .partial_cmp(&self.values[a])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn unflatten(&self, flat: usize) -> (usize, usize) {
        (flat / self.n_r, flat % self.n_r)
    }
}

/// Outer product of the TX and RX beam distributions.
pub fn pair_probabilities<T: Scalar>(p_tx: &[T], p_rx: &[T]) -> PairMatrix<T> {
    let mut values = Vec::with_capacity(p_tx.len() * p_rx.len());
    for &a in p_tx {
        values.extend(p_rx.iter().map(|&b| a * b));
    }
    PairMatrix {
        n_t: p_tx.len(),
        n_r: p_rx.len(),
        values,
    }
}

/// The `n_b` most probable pairs, best first.
pub fn top_nb_candidates<T: Scalar>(
    pairs: &PairMatrix<T>,
    n_b: usize,
) -> Result<Vec<(usize, usize)>> {
    if n_b == 0 || n_b > pairs.len() {
        return Err(Error::invalid(format!(
            "n_b = {n_b} outside 1..={}",
            pairs.len()
        )));
    }
    Ok(pairs
        .ranking()
        .into_iter()
        .take(n_b)
        .map(|i| pairs.unflatten(i))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_products() {
        let m = pair_probabilities(&[0.25, 0.75], &[0.5, 0.5]);
        assert_eq!(m.values, vec![0.125, 0.125, 0.375, 0.375]);
        let one_hot = pair_probabilities(&[0.0, 1.0, 0.0], &[1.0, 0.0]);
        assert_eq!(one_hot.values, vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let u = pair_probabilities(&[1.0 / 4.0; 4], &[1.0 / 2.0; 2]);
        assert!(u.values.iter().all(|v| (*v - 0.125f64).abs() < 1e-15));
    }

    #[test]
    fn candidates() {
        let m = PairMatrix {
            n_t: 2,
            n_r: 2,
            values: vec![0.4, 0.3, 0.2, 0.1],
        };
        assert_eq!(top_nb_candidates(&m, 2).unwrap(), vec![(0, 0), (0, 1)]);
        assert_eq!(top_nb_candidates(&m, 4).unwrap().len(), 4);
        assert!(top_nb_candidates(&m, 0).is_err());
        assert!(top_nb_candidates(&m, 5).is_err());
        let one_hot = pair_probabilities(&[0.0, 1.0], &[0.0, 0.0, 1.0]);
        assert_eq!(top_nb_candidates(&one_hot, 1).unwrap(), vec![(1, 2)]);
        let ties = PairMatrix {
            n_t: 1,
            n_r: 3,
            values: vec![0.2, 0.4, 0.4],
        };
        assert_eq!(top_nb_candidates(&ties, 2).unwrap(), vec![(0, 1), (0, 2)]);
    }
}
