//! Fully connected baseline: UE pose in, one logit per beam pair out.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    cross_entropy, softmax, softmax_cross_entropy_grad, Matrix, Mlp, MlpTape, Parameterized, Tensor,
};
use crate::scalar::Scalar;

use super::context::{InputLayout, UeContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DnnConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
}

impl Default for DnnConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            hidden_width: 256,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DnnModel<T> {
    pub config: DnnConfig,
    pub layout: InputLayout,
    pub n_t: usize,
    pub n_r: usize,
    pub mlp: Mlp<T>,
    tape: Option<(MlpTape<T>, Vec<T>)>,
}

impl<T: Scalar> DnnModel<T> {
    fn sizes(config: &DnnConfig, layout: InputLayout, n_t: usize, n_r: usize) -> Vec<usize> {
        let mut s = vec![layout.dnn_input_dim()];
        s.extend(std::iter::repeat_n(
            config.hidden_width,
            config.hidden_layers,
        ));
        s.push(n_t * n_r);
        s
    }

    pub fn new<R: Rng + ?Sized>(
        config: DnnConfig,
        layout: InputLayout,
        n_t: usize,
        n_r: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self {
            mlp: Mlp::new(&Self::sizes(&config, layout, n_t, n_r), rng)?,
            config,
            layout,
            n_t,
            n_r,
            tape: None,
        })
    }

    pub fn zeros(config: DnnConfig, layout: InputLayout, n_t: usize, n_r: usize) -> Result<Self> {
        Ok(Self {
            mlp: Mlp::zeros(&Self::sizes(&config, layout, n_t, n_r))?,
            config,
            layout,
            n_t,
            n_r,
            tape: None,
        })
    }

    fn input(&self, ctx: &UeContext<T>) -> Matrix<T> {
        let f = ctx.dnn_features(self.layout);
        Matrix {
            rows: 1,
            cols: f.len(),
            data: f,
        }
    }

    /// Probabilities over all `N_t · N_r` pairs, flat index `p · N_r + q`.
    pub fn forward(&self, ctx: &UeContext<T>) -> Result<Vec<T>> {
        let logits = self.mlp.forward(&self.input(ctx))?;
        if !logits.all_finite() {
            return Err(Error::NonFinite("dnn logits".into()));
        }
        Ok(softmax(&logits.data))
    }

    pub fn forward_train(&mut self, ctx: &UeContext<T>) -> Result<Vec<T>> {
        let (logits, tape) = self.mlp.forward_record(&self.input(ctx))?;
        if !logits.all_finite() {
            return Err(Error::NonFinite("dnn logits".into()));
        }
        let probs = softmax(&logits.data);
        self.tape = Some((tape, probs.clone()));
        Ok(probs)
    }

    /// Cross-entropy against the flat pair index; consumes the recorded pass.
    pub fn backward(&mut self, label: usize) -> Result<T> {
        let (tape, probs) = self.tape.take().ok_or(Error::BackwardBeforeForward)?;
        let loss = cross_entropy(&probs, label)?;
        let grad = softmax_cross_entropy_grad(&probs, label)?;
        self.mlp
            .backward(&tape, &Matrix::from_vec(1, grad.len(), grad)?)?;
        if self.mlp.parameters().iter().any(|t| !t.all_finite()) {
            return Err(Error::NonFinite("dnn gradients".into()));
        }
        Ok(loss)
    }

    pub fn loss(&self, ctx: &UeContext<T>, label: usize) -> Result<T> {
        cross_entropy(&self.forward(ctx)?, label)
    }
}

impl<T: Scalar> Parameterized<T> for DnnModel<T> {
    fn parameters(&self) -> Vec<&Tensor<T>> {
        self.mlp.parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.mlp.parameters_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Orientation, Vec3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx() -> UeContext<f64> {
        UeContext {
            location: Vec3::new(-0.2, 0.9, 0.0),
            orientation: Orientation::yaw(5.0),
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = DnnModel::<f64>::zeros(DnnConfig::default(), InputLayout::Linear, 4, 2).unwrap();
        assert!(m
            .forward(&ctx())
            .unwrap()
            .iter()
            .all(|v| (v - 0.125).abs() < 1e-15));
    }

    #[test]
    fn output_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = DnnModel::<f64>::new(DnnConfig::default(), InputLayout::Linear, 8, 4, &mut rng)
            .unwrap();
        let p = m.forward(&ctx()).unwrap();
        assert_eq!(p.len(), 32);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backward_before_forward() {
        let mut m =
            DnnModel::<f64>::zeros(DnnConfig::default(), InputLayout::Linear, 4, 2).unwrap();
        assert!(matches!(m.backward(0), Err(Error::BackwardBeforeForward)));
    }

    #[test]
    fn parameter_count_includes_biases() {
        let m = DnnModel::<f64>::zeros(DnnConfig::default(), InputLayout::Linear, 64, 16).unwrap();
        let weights = 4 * 256 + 2 * 256 * 256 + 256 * 1024;
        assert_eq!(m.parameter_count(), weights + 3 * 256 + 1024);
    }
}
