//! Model files: the parameter blob at `path` plus a JSON sidecar at
//! `path.json` describing how to rebuild the architecture.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::ArrayGeometry;
use crate::codebook::dft_codebook;
use crate::error::{Error, FormatError, Result};
use crate::nn::{checkpoint, Parameterized, Tensor};

use super::{
    BeamSelector, DnnConfig, DnnModel, GnnBeamSelector, GnnConfig, InputLayout, InputNormalizer,
    PairMatrix, TrainableSelector, UeContext,
};

pub const META_FORMAT: &str = "beamlab-model";
pub const META_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gnn,
    Dnn,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gnn" => Ok(ModelKind::Gnn),
            "dnn" => Ok(ModelKind::Dnn),
            other => Err(Error::invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Gnn => "gnn",
            ModelKind::Dnn => "dnn",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub layout: InputLayout,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub gnn: Option<GnnConfig>,
    pub dnn: Option<DnnConfig>,
    pub normalizer: InputNormalizer,
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub train_fraction: f64,
    pub split_seed: u64,
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Gnn(GnnBeamSelector<f64>),
    Dnn(DnnModel<f64>),
}

impl TrainedModel {
    /// Randomly initialized model described by `meta`.
    pub fn build(meta: &ModelMeta) -> Result<Self> {
        match meta.kind {
            ModelKind::Gnn => {
                let cfg = meta.gnn.unwrap_or_default();
                let tx = dft_codebook(&meta.tx);
                let rx = dft_codebook(&meta.rx);
                Ok(TrainedModel::Gnn(GnnBeamSelector::new(
                    cfg,
                    meta.layout,
                    &tx,
                    &rx,
                    meta.seed,
                )?))
            }
            ModelKind::Dnn => {
                let cfg = meta.dnn.unwrap_or_default();
                let mut rng =
                    <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(meta.seed);
                Ok(TrainedModel::Dnn(DnnModel::new(
                    cfg,
                    meta.layout,
                    meta.tx.len(),
                    meta.rx.len(),
                    &mut rng,
                )?))
            }
        }
    }
}

impl BeamSelector<f64> for TrainedModel {
    fn name(&self) -> &'static str {
        match self {
            TrainedModel::Gnn(m) => m.name(),
            TrainedModel::Dnn(m) => m.name(),
        }
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            TrainedModel::Gnn(m) => m.dims(),
            TrainedModel::Dnn(m) => m.dims(),
        }
    }

    fn pair_probabilities(&self, ctx: &UeContext<f64>) -> Result<PairMatrix<f64>> {
        match self {
            TrainedModel::Gnn(m) => m.pair_probabilities(ctx),
            TrainedModel::Dnn(m) => BeamSelector::pair_probabilities(m, ctx),
        }
    }
}

impl Parameterized<f64> for TrainedModel {
    fn parameters(&self) -> Vec<&Tensor<f64>> {
        match self {
            TrainedModel::Gnn(m) => m.parameters(),
            TrainedModel::Dnn(m) => m.parameters(),
        }
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor<f64>> {
        match self {
            TrainedModel::Gnn(m) => m.parameters_mut(),
            TrainedModel::Dnn(m) => m.parameters_mut(),
        }
    }
}

impl TrainableSelector<f64> for TrainedModel {
    fn accumulate_gradients(&mut self, ctx: &UeContext<f64>, label: (usize, usize)) -> Result<f64> {
        match self {
            TrainedModel::Gnn(m) => m.accumulate_gradients(ctx, label),
            TrainedModel::Dnn(m) => m.accumulate_gradients(ctx, label),
        }
    }

    fn loss(&self, ctx: &UeContext<f64>, label: (usize, usize)) -> Result<f64> {
        match self {
            TrainedModel::Gnn(m) => m.loss(ctx, label),
            TrainedModel::Dnn(m) => TrainableSelector::loss(m, ctx, label),
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_model<M: Parameterized<f64> + ?Sized>(
    path: &Path,
    model: &M,
    meta: &ModelMeta,
) -> Result<()> {
    checkpoint::save(model, path)?;
    let json = serde_json::to_string_pretty(meta).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(TrainedModel, ModelMeta)> {
    let text = std::fs::read_to_string(sidecar_path(path))?;
    let meta: ModelMeta = serde_json::from_str(&text)
        .map_err(|e| FormatError::Inconsistent(format!("model metadata: {e}")))?;
    if meta.format != META_FORMAT || meta.version != META_VERSION {
        return Err(FormatError::UnsupportedVersion {
            found: meta.version,
            expected: META_VERSION,
        }
        .into());
    }
    let mut model = TrainedModel::build(&meta)?;
    checkpoint::load_into(&mut model, path)?;
    Ok((model, meta))
}
