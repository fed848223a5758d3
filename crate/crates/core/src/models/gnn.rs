//! Per-array GNN beam classifier.
//!
//! Every beam of a codebook is a graph node. A node's initial feature is an
//! affine embedding of the UE pose and the beam's pointing angles. Each
//! message-passing round computes one message per directed edge from the
//! concatenated features of its endpoints, sums the incoming messages of
//! every node, and updates the node from its own feature concatenated with
//! that sum. A final affine readout scores each node and a softmax over the
//! nodes gives the beam distribution.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BeamGraph;
use crate::nn::{
    cross_entropy, softmax, softmax_cross_entropy_grad, Matrix, Mlp, MlpTape, Parameterized, Tensor,
};
use crate::scalar::Scalar;

use super::context::{InputLayout, UeContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnnConfig {
    /// Node feature width.
    pub feature_dim: usize,
    /// Edge message width.
    pub message_dim: usize,
    /// Message-passing rounds.
    pub iterations: usize,
    /// Hidden layers inside the message and update networks.
    pub hidden_layers: usize,
    pub hidden_width: usize,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            feature_dim: 16,
            message_dim: 16,
            iterations: 1,
            hidden_layers: 1,
            hidden_width: 32,
        }
    }
}

impl GnnConfig {
    fn mlp_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        s.push(output);
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 || self.message_dim == 0 || self.hidden_width == 0 {
            return Err(Error::invalid("gnn widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct RoundTape<T> {
    message: MlpTape<T>,
    update: MlpTape<T>,
}

#[derive(Debug, Clone)]
struct GnnTape<T> {
    embed: MlpTape<T>,
    rounds: Vec<RoundTape<T>>,
    readout: MlpTape<T>,
    probs: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct GnnModel<T> {
    pub config: GnnConfig,
    pub layout: InputLayout,
    pub embed: Mlp<T>,
    pub message: Mlp<T>,
    pub update: Mlp<T>,
    pub readout: Mlp<T>,
    graph: BeamGraph<T>,
    tape: Option<GnnTape<T>>,
}

impl<T: Scalar> GnnModel<T> {
    pub fn new<R: Rng + ?Sized>(
        config: GnnConfig,
        layout: InputLayout,
        graph: BeamGraph<T>,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let (f_n, f_m) = (config.feature_dim, config.message_dim);
        Ok(Self {
            embed: Mlp::new(&[layout.node_input_dim(), f_n], rng)?,
            message: Mlp::new(&config.mlp_sizes(2 * f_n, f_m), rng)?,
            update: Mlp::new(&config.mlp_sizes(f_n + f_m, f_n), rng)?,
            readout: Mlp::new(&[f_n, 1], rng)?,
            config,
            layout,
            graph,
            tape: None,
        })
    }

    /// Same architecture with every parameter zero.
    pub fn zeros(config: GnnConfig, layout: InputLayout, graph: BeamGraph<T>) -> Result<Self> {
        config.validate()?;
        let (f_n, f_m) = (config.feature_dim, config.message_dim);
        Ok(Self {
            embed: Mlp::zeros(&[layout.node_input_dim(), f_n])?,
            message: Mlp::zeros(&config.mlp_sizes(2 * f_n, f_m))?,
            update: Mlp::zeros(&config.mlp_sizes(f_n + f_m, f_n))?,
            readout: Mlp::zeros(&[f_n, 1])?,
            config,
            layout,
            graph,
            tape: None,
        })
    }

    pub fn graph(&self) -> &BeamGraph<T> {
        &self.graph
    }

    /// Same weights on another graph with the same node count.
    pub fn with_graph(&self, graph: BeamGraph<T>) -> Result<Self> {
        if graph.node_count() != self.graph.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "graph has {} nodes, model was built for {}",
                graph.node_count(),
                self.graph.node_count()
            )));
        }
        Ok(Self {
            graph,
            tape: None,
            ..self.clone()
        })
    }

    pub fn beam_count(&self) -> usize {
        self.graph.node_count()
    }

    /// One row per beam: pose features followed by the beam angles over π.
    pub fn node_inputs(&self, ctx: &UeContext<T>) -> Matrix<T> {
        let pose = ctx.pose_features(self.layout);
        let n = self.graph.node_count();
        let width = self.layout.node_input_dim();
        let mut data = Vec::with_capacity(n * width);
        for &(phi, theta) in self.graph.node_angles() {
            data.extend_from_slice(&pose);
            data.push(phi / T::PI());
            if self.layout == InputLayout::Planar {
                data.push(theta / T::PI());
            }
        }
        Matrix {
            rows: n,
            cols: width,
            data,
        }
    }

    fn aggregate(&self, messages: &Matrix<T>) -> Matrix<T> {
        let mut agg = Matrix::zeros(self.graph.node_count(), messages.cols);
        for (e, &(_, dst)) in self.graph.edges().iter().enumerate() {
            for (a, &m) in agg.row_mut(dst).iter_mut().zip(messages.row(e)) {
                *a += m;
            }
        }
        agg
    }

    fn edge_inputs(&self, h: &Matrix<T>) -> Matrix<T> {
        let edges = self.graph.edges();
        let mut x = Matrix::zeros(edges.len(), 2 * h.cols);
        for (e, &(src, dst)) in edges.iter().enumerate() {
            let row = x.row_mut(e);
            row[..h.cols].copy_from_slice(h.row(src));
            row[h.cols..].copy_from_slice(h.row(dst));
        }
        x
    }

    fn run(&self, ctx: &UeContext<T>, record: bool) -> Result<(Vec<T>, Option<GnnTape<T>>)> {
        let x = self.node_inputs(ctx);
        let (mut h, embed_tape) = self.embed.forward_record(&x)?;
        let mut rounds = Vec::with_capacity(self.config.iterations);
        for _ in 0..self.config.iterations {
            let (messages, message_tape) = self.message.forward_record(&self.edge_inputs(&h))?;
            let upd_in = h.hcat(&self.aggregate(&messages))?;
            let (next, update_tape) = self.update.forward_record(&upd_in)?;
            h = next;
            if record {
                rounds.push(RoundTape {
                    message: message_tape,
                    update: update_tape,
                });
            }
        }
        let (logits, readout_tape) = self.readout.forward_record(&h)?;
        if !logits.all_finite() {
            return Err(Error::NonFinite("gnn logits".into()));
        }
        let probs = softmax(&logits.data);
        let tape = record.then(|| GnnTape {
            embed: embed_tape,
            rounds,
            readout: readout_tape,
            probs: probs.clone(),
        });
        Ok((probs, tape))
    }

    /// Beam probabilities for one UE context.
    pub fn forward(&self, ctx: &UeContext<T>) -> Result<Vec<T>> {
        Ok(self.run(ctx, false)?.0)
    }

    /// Forward pass that keeps the activations for a following [`Self::backward`].
    pub fn forward_train(&mut self, ctx: &UeContext<T>) -> Result<Vec<T>> {
        let (probs, tape) = self.run(ctx, true)?;
        self.tape = tape;
        Ok(probs)
    }

    /// Back-propagates the cross-entropy of the recorded pass against `label`,
    /// accumulating into the gradient buffers. Consumes the recorded pass.
    pub fn backward(&mut self, label: usize) -> Result<T> {
        let probs = self
            .tape
            .as_ref()
            .ok_or(Error::BackwardBeforeForward)?
            .probs
            .clone();
        let loss = cross_entropy(&probs, label)?;
        let grad = softmax_cross_entropy_grad(&probs, label)?;
        self.backward_logits(&grad)?;
        Ok(loss)
    }

    /// Back-propagates an arbitrary gradient with respect to the node logits.
    pub fn backward_logits(&mut self, grad_logits: &[T]) -> Result<()> {
        let tape = self.tape.take().ok_or(Error::BackwardBeforeForward)?;
        let n = self.graph.node_count();
        if grad_logits.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} logit gradients for {n} beams",
                grad_logits.len()
            )));
        }
        let f_n = self.config.feature_dim;
        let g = Matrix::from_vec(n, 1, grad_logits.to_vec())?;
        let mut dh = self.readout.backward(&tape.readout, &g)?;
        for round in tape.rounds.iter().rev() {
            let d_upd = self.update.backward(&round.update, &dh)?;
            let (mut dh_prev, d_agg) = d_upd.hsplit(f_n);
            let edges = self.graph.edges().to_vec();
            let mut d_msg = Matrix::zeros(edges.len(), d_agg.cols);
            for (e, &(_, dst)) in edges.iter().enumerate() {
                d_msg.row_mut(e).copy_from_slice(d_agg.row(dst));
            }
            let d_edge_in = self.message.backward(&round.message, &d_msg)?;
            for (e, &(src, dst)) in edges.iter().enumerate() {
                let row = d_edge_in.row(e);
                for (a, &v) in dh_prev.row_mut(src).iter_mut().zip(&row[..f_n]) {
                    *a += v;
                }
                for (a, &v) in dh_prev.row_mut(dst).iter_mut().zip(&row[f_n..]) {
                    *a += v;
                }
            }
            dh = dh_prev;
        }
        self.embed.backward(&tape.embed, &dh)?;
        if self.parameters().iter().any(|t| !t.all_finite()) {
            return Err(Error::NonFinite("gnn gradients".into()));
        }
        Ok(())
    }

    /// Cross-entropy without touching gradients.
    pub fn loss(&self, ctx: &UeContext<T>, label: usize) -> Result<T> {
        cross_entropy(&self.forward(ctx)?, label)
    }
}

impl<T: Scalar> Parameterized<T> for GnnModel<T> {
    fn parameters(&self) -> Vec<&Tensor<T>> {
        let mut p = self.embed.parameters();
        p.extend(self.message.parameters());
        p.extend(self.update.parameters());
        p.extend(self.readout.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut p = self.embed.parameters_mut();
        p.extend(self.message.parameters_mut());
        p.extend(self.update.parameters_mut());
        p.extend(self.readout.parameters_mut());
        p
    }
}
