use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{Matrix, Parameterized, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Identity => x,
        }
    }

    fn derivative<T: Scalar>(self, pre: T) -> T {
        match self {
            Activation::Relu => {
                if pre > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
        }
    }
}

/// Affine layer `y = x W + b` with `W` stored `[in, out]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[inputs, outputs]),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let mut layer = Self::zeros(inputs, outputs);
        for w in &mut layer.weight.values {
            *w = T::lit(rng.random_range(-limit..limit));
        }
        layer
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let (n_in, n_out) = (self.inputs(), self.outputs());
        if x.cols != n_in {
            return Err(Error::ShapeMismatch(format!(
                "dense layer expects {n_in} inputs, got {}",
                x.cols
            )));
        }
        let w = &self.weight.values;
        let mut out = Matrix::zeros(x.rows, n_out);
        for r in 0..x.rows {
            let xr = x.row(r);
            let yr = out.row_mut(r);
            yr.copy_from_slice(&self.bias.values);
            for (i, &xi) in xr.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let wrow = &w[i * n_out..(i + 1) * n_out];
                for (y, &wv) in yr.iter_mut().zip(wrow) {
                    *y += xi * wv;
                }
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients and returns `∂L/∂x`.
    pub fn backward(&mut self, x: &Matrix<T>, grad_out: &Matrix<T>) -> Matrix<T> {
        let (n_in, n_out) = (self.inputs(), self.outputs());
        let mut grad_in = Matrix::zeros(x.rows, n_in);
        for r in 0..x.rows {
            let g = grad_out.row(r);
            for (b, &gv) in self.bias.grad.iter_mut().zip(g) {
                *b += gv;
            }
            let xr = x.row(r);
            let gi = grad_in.row_mut(r);
            for i in 0..n_in {
                let wrow = &self.weight.values[i * n_out..(i + 1) * n_out];
                let mut acc = T::zero();
                for (&wv, &gv) in wrow.iter().zip(g) {
                    acc += wv * gv;
                }
                gi[i] = acc;
                let xi = xr[i];
                if xi != T::zero() {
                    let grow = &mut self.weight.grad[i * n_out..(i + 1) * n_out];
                    for (gw, &gv) in grow.iter_mut().zip(g) {
                        *gw += xi * gv;
                    }
                }
            }
        }
        grad_in
    }
}

/// Multi-layer perceptron: ReLU on hidden layers, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
    pub hidden_activation: Activation,
}

/// Inputs and pre-activations recorded by [`Mlp::forward_record`].
#[derive(Debug, Clone)]
pub struct MlpTape<T> {
    inputs: Vec<Matrix<T>>,
    pre: Vec<Matrix<T>>,
}

impl<T: Scalar> Mlp<T> {
    /// Layer widths `sizes[0] → … → sizes[last]`, Glorot-initialized.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self {
            layers: sizes
                .windows(2)
                .map(|w| Dense::glorot(w[0], w[1], rng))
                .collect(),
            hidden_activation: Activation::Relu,
        })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            hidden_activation: Activation::Relu,
        })
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_size()];
        s.extend(self.layers.iter().map(Dense::outputs));
        s
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            Activation::Identity
        } else {
            self.hidden_activation
        }
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut h = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let act = self.activation_for(l);
            h = layer.forward(&h)?;
            h.data.iter_mut().for_each(|v| *v = act.apply(*v));
        }
        Ok(h)
    }

    pub fn forward_record(&self, x: &Matrix<T>) -> Result<(Matrix<T>, MlpTape<T>)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let act = self.activation_for(l);
            let z = layer.forward(&h)?;
            inputs.push(h);
            h = z.clone();
            h.data.iter_mut().for_each(|v| *v = act.apply(*v));
            pre.push(z);
        }
        Ok((h, MlpTape { inputs, pre }))
    }

    /// Back-propagates `grad_out` through the recorded pass, accumulating
    /// parameter gradients; returns the gradient with respect to the input.
    pub fn backward(&mut self, tape: &MlpTape<T>, grad_out: &Matrix<T>) -> Result<Matrix<T>> {
        if tape.inputs.len() != self.layers.len() {
            return Err(Error::ShapeMismatch(
                "tape does not match this network".into(),
            ));
        }
        let mut g = grad_out.clone();
        for l in (0..self.layers.len()).rev() {
            let act = self.activation_for(l);
            let z = &tape.pre[l];
            if g.rows != z.rows || g.cols != z.cols {
                return Err(Error::ShapeMismatch(format!(
                    "gradient {}x{} vs activation {}x{}",
                    g.rows, g.cols, z.rows, z.cols
                )));
            }
            for (gv, &zv) in g.data.iter_mut().zip(&z.data) {
                *gv *= act.derivative(zv);
            }
            g = self.layers[l].backward(&tape.inputs[l], &g);
        }
        Ok(g)
    }
}

impl<T: Scalar> Parameterized<T> for Mlp<T> {
    fn parameters(&self) -> Vec<&Tensor<T>> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }
}
