use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Orientation, Vec3};
use crate::scalar::Scalar;

/// Which pose components the models see: yaw only (linear arrays) or the
/// full three-angle orientation (planar arrays).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputLayout {
    Linear,
    Planar,
}

impl InputLayout {
    /// Width of a GNN node input row.
    pub fn node_input_dim(self) -> usize {
        match self {
            InputLayout::Linear => 6,
            InputLayout::Planar => 11,
        }
    }

    pub fn dnn_input_dim(self) -> usize {
        match self {
            InputLayout::Linear => 4,
            InputLayout::Planar => 6,
        }
    }
}

/// Normalized UE location and raw orientation; built once per sample by
/// [`InputNormalizer::context`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeContext<T> {
    pub location: Vec3<T>,
    pub orientation: Orientation<T>,
}

impl<T: Scalar> UeContext<T> {
    /// Shared pose prefix of a GNN node row: `x̂, ŷ, ẑ` then sin/cos of each angle in use.
    pub(crate) fn pose_features(&self, layout: InputLayout) -> Vec<T> {
        let l = self.location;
        let mut f = vec![l.x, l.y, l.z];
        let (sa, ca) = self.orientation.alpha.sin_cos();
        f.extend([sa, ca]);
        if layout == InputLayout::Planar {
            let (sb, cb) = self.orientation.beta.sin_cos();
            let (sg, cg) = self.orientation.gamma.sin_cos();
            f.extend([sb, cb, sg, cg]);
        }
        f
    }

    /// DNN input: `x̂, ŷ, ẑ, α/π − 1` (plus scaled tilts for planar arrays).
    pub(crate) fn dnn_features(&self, layout: InputLayout) -> Vec<T> {
        let l = self.location;
        let o = self.orientation;
        let mut f = vec![l.x, l.y, l.z, o.alpha / T::PI() - T::one()];
        if layout == InputLayout::Planar {
            f.extend([o.beta / T::FRAC_PI_4(), o.gamma / T::FRAC_PI_4()]);
        }
        f
    }
}

/// Affinely maps locations in the receiver region onto `[-1, 1]` per axis.
/// Degenerate axes map to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputNormalizer {
    pub region: Aabb<f64>,
}

impl InputNormalizer {
    pub fn new(region: Aabb<f64>) -> Self {
        Self { region }
    }

    pub fn context<T: Scalar>(
        &self,
        location: Vec3<f64>,
        orientation: Orientation<f64>,
    ) -> UeContext<T> {
        let scale = |axis: usize| {
            let (lo, hi) = (self.region.min.get(axis), self.region.max.get(axis));
            if hi - lo <= f64::EPSILON {
                0.0
            } else {
                2.0 * (location.get(axis) - lo) / (hi - lo) - 1.0
            }
        };
        UeContext {
            location: Vec3::new(T::lit(scale(0)), T::lit(scale(1)), T::lit(scale(2))),
            orientation: orientation.cast(),
        }
    }
}
