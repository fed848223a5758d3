#![allow(dead_code)]

use beamlab::channel::ArrayGeometry;
use beamlab::codebook::dft_codebook;
use beamlab::dataset::{generate_dataset, Dataset, GenerationConfig};
use beamlab::models::{
    GnnBeamSelector, GnnConfig, InputLayout, InputNormalizer, TrainableSelector, UeContext,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ula_config(n_t: usize, n_r: usize) -> GenerationConfig {
    GenerationConfig::living_room(ArrayGeometry::Ula { n: n_t }, ArrayGeometry::Ula { n: n_r })
}

pub fn ula_dataset(n_t: usize, n_r: usize, n: usize, seed: u64) -> (Dataset, InputNormalizer) {
    let cfg = ula_config(n_t, n_r);
    let d = generate_dataset(&cfg, n, seed).expect("dataset");
    (d, InputNormalizer::new(cfg.scene.rx_region))
}

pub fn gnn(n_t: usize, n_r: usize, seed: u64) -> GnnBeamSelector<f64> {
    let tx = dft_codebook(&ArrayGeometry::Ula { n: n_t });
    let rx = dft_codebook(&ArrayGeometry::Ula { n: n_r });
    GnnBeamSelector::new(GnnConfig::default(), InputLayout::Linear, &tx, &rx, seed).expect("gnn")
}

/// Outcome of a central finite-difference check on random parameter coordinates.
#[derive(Debug)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst: (usize, usize, f64, f64),
}

fn total_loss<M: TrainableSelector<f64>>(m: &M, batch: &[(UeContext<f64>, (usize, usize))]) -> f64 {
    batch
        .iter()
        .map(|(c, l)| m.loss(c, *l).expect("loss"))
        .sum()
}

/// Compares analytic gradients of the summed batch loss against
/// `(L(θ+h) − L(θ−h)) / 2h` on `coords` uniformly drawn coordinates.
/// Relative error is `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check<M: TrainableSelector<f64>>(
    model: &mut M,
    batch: &[(UeContext<f64>, (usize, usize))],
    coords: usize,
    h: f64,
    seed: u64,
) -> GradCheck {
    model.zero_grad();
    for (c, l) in batch {
        model.accumulate_gradients(c, *l).expect("backward");
    }
    let analytic: Vec<Vec<f64>> = model.parameters().iter().map(|t| t.grad.clone()).collect();
    let sizes: Vec<usize> = analytic.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradCheck {
        checked: 0,
        max_rel_error: 0.0,
        worst: (0, 0, 0.0, 0.0),
    };
    for _ in 0..coords {
        let mut flat = rng.random_range(0..total);
        let mut t = 0;
        while flat >= sizes[t] {
            flat -= sizes[t];
            t += 1;
        }
        let orig = model.parameters()[t].values[flat];
        model.parameters_mut()[t].values[flat] = orig + h;
        let plus = total_loss(model, batch);
        model.parameters_mut()[t].values[flat] = orig - h;
        let minus = total_loss(model, batch);
        model.parameters_mut()[t].values[flat] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        let a = analytic[t][flat];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        out.checked += 1;
        if rel > out.max_rel_error {
            out.max_rel_error = rel;
            out.worst = (t, flat, a, numeric);
        }
    }
    out
}
