//! Beam classifiers and candidate-set formation.

pub mod complexity;
mod context;
mod dnn;
mod gnn;
mod selection;
pub mod store;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use context::{InputLayout, InputNormalizer, UeContext};
pub use dnn::{DnnConfig, DnnModel};
pub use gnn::{GnnConfig, GnnModel};
pub use selection::{pair_probabilities, top_nb_candidates, PairMatrix};

use crate::codebook::Codebook;
use crate::error::Result;
use crate::graph::build_graph;
use crate::nn::{Parameterized, Tensor};
use crate::scalar::Scalar;

/// Inference contract shared by the classifiers.
pub trait BeamSelector<T: Scalar>: Sync {
    fn name(&self) -> &'static str;
    /// `(N_t, N_r)`.
    fn dims(&self) -> (usize, usize);
    fn pair_probabilities(&self, ctx: &UeContext<T>) -> Result<PairMatrix<T>>;
}

/// Training contract: per-sample loss with gradient accumulation.
pub trait TrainableSelector<T: Scalar>: BeamSelector<T> + Parameterized<T> + Send {
    /// Forward + backward for one labeled context; returns the loss and adds
    /// its gradient to the parameter buffers.
    fn accumulate_gradients(&mut self, ctx: &UeContext<T>, label: (usize, usize)) -> Result<T>;
    fn loss(&self, ctx: &UeContext<T>, label: (usize, usize)) -> Result<T>;
}

/// Independent TX and RX GNNs; the pair distribution is the outer product of
/// their beam distributions and the loss is the sum of both cross-entropies.
#[derive(Debug, Clone)]
pub struct GnnBeamSelector<T> {
    pub tx: GnnModel<T>,
    pub rx: GnnModel<T>,
}

impl<T: Scalar> GnnBeamSelector<T> {
    pub fn new(
        config: GnnConfig,
        layout: InputLayout,
        tx_cb: &Codebook<T>,
        rx_cb: &Codebook<T>,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tx = GnnModel::new(config, layout, build_graph(tx_cb)?, &mut rng)?;
        let rx = GnnModel::new(config, layout, build_graph(rx_cb)?, &mut rng)?;
        Ok(Self { tx, rx })
    }

    pub fn zeros(
        config: GnnConfig,
        layout: InputLayout,
        tx_cb: &Codebook<T>,
        rx_cb: &Codebook<T>,
    ) -> Result<Self> {
        Ok(Self {
            tx: GnnModel::zeros(config, layout, build_graph(tx_cb)?)?,
            rx: GnnModel::zeros(config, layout, build_graph(rx_cb)?)?,
        })
    }
}

impl<T: Scalar> BeamSelector<T> for GnnBeamSelector<T> {
    fn name(&self) -> &'static str {
        "gnn"
    }

    fn dims(&self) -> (usize, usize) {
        (self.tx.beam_count(), self.rx.beam_count())
    }

    fn pair_probabilities(&self, ctx: &UeContext<T>) -> Result<PairMatrix<T>> {
        Ok(pair_probabilities(
            &self.tx.forward(ctx)?,
            &self.rx.forward(ctx)?,
        ))
    }
}

impl<T: Scalar> Parameterized<T> for GnnBeamSelector<T> {
    fn parameters(&self) -> Vec<&Tensor<T>> {
        let mut p = self.tx.parameters();
        p.extend(self.rx.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut p = self.tx.parameters_mut();
        p.extend(self.rx.parameters_mut());
        p
    }
}

impl<T: Scalar> TrainableSelector<T> for GnnBeamSelector<T> {
    fn accumulate_gradients(&mut self, ctx: &UeContext<T>, label: (usize, usize)) -> Result<T> {
        self.tx.forward_train(ctx)?;
        let l_tx = self.tx.backward(label.0)?;
        self.rx.forward_train(ctx)?;
        let l_rx = self.rx.backward(label.1)?;
        Ok(l_tx + l_rx)
    }

    fn loss(&self, ctx: &UeContext<T>, label: (usize, usize)) -> Result<T> {
        Ok(self.tx.loss(ctx, label.0)? + self.rx.loss(ctx, label.1)?)
    }
}

impl<T: Scalar> BeamSelector<T> for DnnModel<T> {
    fn name(&self) -> &'static str {
        "dnn"
    }

    fn dims(&self) -> (usize, usize) {
        (self.n_t, self.n_r)
    }

    fn pair_probabilities(&self, ctx: &UeContext<T>) -> Result<PairMatrix<T>> {
        Ok(PairMatrix {
            n_t: self.n_t,
            n_r: self.n_r,
            values: self.forward(ctx)?,
        })
    }
}

impl<T: Scalar> TrainableSelector<T> for DnnModel<T> {
    fn accumulate_gradients(&mut self, ctx: &UeContext<T>, label: (usize, usize)) -> Result<T> {
        self.forward_train(ctx)?;
        self.backward(label.0 * self.n_r + label.1)
    }

    fn loss(&self, ctx: &UeContext<T>, label: (usize, usize)) -> Result<T> {
        DnnModel::loss(self, ctx, label.0 * self.n_r + label.1)
    }
}
