use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Tensor;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: T) -> Self {
        Self {
            learning_rate,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update using each tensor's gradient buffer. The moment
    /// buffers are sized on the first call; later calls must pass tensors of
    /// the same shapes in the same order.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>]) -> Result<()> {
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != params.len()
            || self
                .first
                .iter()
                .zip(params.iter())
                .any(|(m, p)| m.len() != p.len())
        {
            return Err(Error::ShapeMismatch(
                "parameter set changed between Adam steps".into(),
            ));
        }
        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            for i in 0..p.len() {
                let g = p.grad[i];
                m[i] = self.beta1 * m[i] + (T::one() - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (T::one() - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.values[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(values: Vec<f64>, grad: Vec<f64>) -> Tensor<f64> {
        let mut t = Tensor::from_vec(&[values.len()], values).unwrap();
        t.grad = grad;
        t
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut p = tensor(vec![1.0, -2.0], vec![0.0, 0.0]);
        let mut adam = Adam::new(1e-3);
        for _ in 0..5 {
            adam.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.values, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let mut p = tensor(vec![0.0, 0.0, 0.0], vec![3.0, -0.02, 1e-3]);
        Adam::new(1e-3).step(&mut [&mut p]).unwrap();
        // m̂ = g, v̂ = g², Δ = −lr·g/(|g| + ε).
        for (v, g) in p.values.iter().zip([3.0f64, -0.02, 1e-3]) {
            let expected = -1e-3 * g / (g.abs() + 1e-8);
            assert!((v - expected).abs() < 1e-15);
            assert!((v + 1e-3 * g.signum()).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_gradient_gives_unit_steps() {
        let mut p = tensor(vec![0.0], vec![0.5]);
        let mut adam = Adam::new(1e-3);
        let mut prev = 0.0;
        for _ in 0..1000 {
            adam.step(&mut [&mut p]).unwrap();
            let step = prev - p.values[0];
            assert!((step - 1e-3).abs() < 1e-9);
            prev = p.values[0];
        }
    }

    #[test]
    fn shape_change_is_rejected() {
        let mut adam = Adam::new(1e-3);
        let mut a = tensor(vec![0.0], vec![1.0]);
        adam.step(&mut [&mut a]).unwrap();
        let mut b = tensor(vec![0.0, 1.0], vec![1.0, 1.0]);
        assert!(adam.step(&mut [&mut b]).is_err());
    }
}
