//! Location- and orientation-assisted mmWave beam alignment.
//!
//! The crate covers the full pipeline: an image-source indoor channel,
//! DFT beam codebooks and link metrics, the angular-correlation beam graph,
//! a GNN beam classifier with a dense baseline, dataset generation and
//! persistence, training with early stopping, and misalignment / spectral
//! efficiency evaluation.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! dataset and experiment layers work in `f64`. Aliases for the common
//! instantiations live at the crate root.

mod bytes;
pub mod channel;
pub mod codebook;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod geometry;
pub mod graph;
pub mod models;
pub mod nn;
mod scalar;
pub mod svg;
pub mod train;

pub use error::{Error, ErrorKind, FormatError, Result};
pub use scalar::Scalar;

pub type Vec3f = geometry::Vec3<f64>;
pub type Orientationf = geometry::Orientation<f64>;
pub type Posef = geometry::Pose<f64>;
pub type Scenef = geometry::Scene<f64>;
pub type PathComponentf = channel::PathComponent<f64>;
pub type ChannelMatrixf = channel::CMatrix<f64>;
pub type TraceConfigf = channel::TraceConfig<f64>;
pub type Codebookf = codebook::Codebook<f64>;
pub type SystemParamsf = codebook::SystemParams<f64>;
pub type BeamGraphf = graph::BeamGraph<f64>;
pub type GnnModelf = models::GnnModel<f64>;
pub type GnnSelectorf = models::GnnBeamSelector<f64>;
pub type DnnModelf = models::DnnModel<f64>;
pub type GnnModel32 = models::GnnModel<f32>;
