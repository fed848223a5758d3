//! Beam-alignment evaluation: candidate sets from a model ranking, pilot
//! measurement over the candidates, misalignment, effective spectral
//! efficiency and achieved RSS.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{watts_to_dbm, SystemParams};
use crate::dataset::{perturb, sample_rng, Dataset, Sample};
use crate::error::{Error, Result};
use crate::models::{top_nb_candidates, BeamSelector, InputNormalizer, PairMatrix};

pub const DEFAULT_NB_GRID: [usize; 8] = [1, 2, 3, 5, 8, 13, 21, 34];

pub const CSV_HEADER: &str = "model,n_b,sigma_p,sigma_o,misalignment,ese_bps_hz,rss_dbm,n_samples";

/// Strongest pair of `candidates` by stored RSS. Ties in the 32-bit storage
/// go to the sample's full-precision label, then to the lowest flat index.
pub fn select_best(
    candidates: &[(usize, usize)],
    sample: &Sample,
    n_r: usize,
) -> Result<(usize, usize)> {
    let mut best: Option<((usize, usize), f32)> = None;
    for &(p, q) in candidates {
        let v = *sample
            .rss
            .get(p * n_r + q)
            .filter(|_| q < n_r)
            .ok_or_else(|| Error::invalid(format!("candidate ({p}, {q}) outside the codebooks")))?;
        let better = match best {
            None => true,
            Some((pair, bv)) => {
                v > bv
                    || (v == bv
                        && (pair != sample.label)
                        && ((p, q) == sample.label || (p, q) < pair))
            }
        };
        if better {
            best = Some(((p, q), v));
        }
    }
    best.map(|b| b.0)
        .ok_or_else(|| Error::invalid("candidate set is empty"))
}

/// Measures every candidate and returns the strongest one whose SNR clears
/// the detection threshold, or `None` when no candidate is detectable.
pub fn measure_and_select(
    candidates: &[(usize, usize)],
    sample: &Sample,
    n_r: usize,
    params: &SystemParams<f64>,
) -> Result<Option<(usize, usize)>> {
    let threshold = params.snr_threshold_linear();
    let detectable: Vec<(usize, usize)> = candidates
        .iter()
        .copied()
        .filter(|&(p, q)| {
            q < n_r
                && sample
                    .rss
                    .get(p * n_r + q)
                    .is_some_and(|&v| f64::from(v) / params.sigma_n2 >= threshold)
        })
        .collect();
    if detectable.is_empty() {
        if candidates.is_empty() {
            return Err(Error::invalid("candidate set is empty"));
        }
        select_best(candidates, sample, n_r)?;
        return Ok(None);
    }
    select_best(&detectable, sample, n_r).map(Some)
}

/// Share of the frame left for data after scanning `n_b` pairs, floored at 0.
pub fn ese_prefactor(n_b: usize, params: &SystemParams<f64>) -> f64 {
    ((params.t_fr - n_b as f64 * params.t_s) / params.t_fr).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub n_b: usize,
    /// Fraction of samples whose measured best candidate differs from the label.
    pub misalignment: f64,
    /// Mean effective spectral efficiency; undetectable links contribute 0.
    pub ese_bps_hz: f64,
    /// Mean received power of the chosen pair (averaged in watts), in dBm.
    pub rss_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub sigma_p: f64,
    pub sigma_o: f64,
    pub n_samples: usize,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn row(&self, n_b: usize) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.n_b == n_b)
    }

    pub fn write_csv_rows<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{:.9},{:.9},{:.6},{}",
                self.model,
                r.n_b,
                self.sigma_p,
                self.sigma_o,
                r.misalignment,
                r.ese_bps_hz,
                r.rss_dbm,
                self.n_samples
            )?;
        }
        Ok(())
    }
}

pub fn write_reports_csv<W: Write>(reports: &[EvalReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        r.write_csv_rows(&mut w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    misaligned: usize,
    ese: f64,
    rss: f64,
}

fn score_sample(
    pairs: &PairMatrix<f64>,
    sample: &Sample,
    n_b_list: &[usize],
    params: &SystemParams<f64>,
) -> Result<Vec<Tally>> {
    let n_r = pairs.n_r;
    n_b_list
        .iter()
        .map(|&n_b| {
            let candidates = top_nb_candidates(pairs, n_b)?;
            let chosen = select_best(&candidates, sample, n_r)?;
            let rss = sample.rss_at(chosen.0, chosen.1, n_r);
            let ese = match measure_and_select(&candidates, sample, n_r, params)? {
                Some((p, q)) => {
                    let snr = sample.rss_at(p, q, n_r) / params.sigma_n2;
                    ese_prefactor(n_b, params) * (1.0 + snr).log2()
                }
                None => 0.0,
            };
            Ok(Tally {
                misaligned: usize::from(chosen != sample.label),
                ese,
                rss,
            })
        })
        .collect()
}

fn check_grid(n_b_list: &[usize], n_pairs: usize) -> Result<()> {
    if n_b_list.is_empty() {
        return Err(Error::invalid("empty N_b list"));
    }
    if let Some(bad) = n_b_list.iter().find(|&&n| n == 0 || n > n_pairs) {
        return Err(Error::invalid(format!("N_b = {bad} outside 1..={n_pairs}")));
    }
    Ok(())
}

/// Evaluates an arbitrary per-sample pair scorer. Samples are scored in
/// parallel and reduced in sample order.
pub fn evaluate_with<F>(
    model: &str,
    test: &[Sample],
    dims: (usize, usize),
    n_b_list: &[usize],
    params: &SystemParams<f64>,
    predict: F,
) -> Result<EvalReport>
where
    F: Fn(usize, &Sample) -> Result<PairMatrix<f64>> + Sync,
{
    if test.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let (n_t, n_r) = dims;
    check_grid(n_b_list, n_t * n_r)?;
    let per_sample = test
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            if s.rss.len() != n_t * n_r {
                return Err(Error::invalid(format!(
                    "sample {i} has {} RSS entries, expected {}",
                    s.rss.len(),
                    n_t * n_r
                )));
            }
            let pairs = predict(i, s)?;
            if (pairs.n_t, pairs.n_r) != dims {
                return Err(Error::invalid(format!(
                    "scorer produced {}x{} pairs",
                    pairs.n_t, pairs.n_r
                )));
            }
            if pairs.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("pair scores of sample {i}")));
            }
            score_sample(&pairs, s, n_b_list, params)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = test.len() as f64;
    let rows = n_b_list
        .iter()
        .enumerate()
        .map(|(k, &n_b)| {
            let mut t = Tally::default();
            for s in &per_sample {
                t.misaligned += s[k].misaligned;
                t.ese += s[k].ese;
                t.rss += s[k].rss;
            }
            EvalRow {
                n_b,
                misalignment: t.misaligned as f64 / n,
                ese_bps_hz: t.ese / n,
                rss_dbm: watts_to_dbm(t.rss / n),
            }
        })
        .collect();
    Ok(EvalReport {
        model: model.to_string(),
        sigma_p: 0.0,
        sigma_o: 0.0,
        n_samples: test.len(),
        rows,
    })
}

pub fn evaluate<M: BeamSelector<f64> + ?Sized>(
    model: &M,
    normalizer: &InputNormalizer,
    test: &Dataset,
    n_b_list: &[usize],
    params: &SystemParams<f64>,
) -> Result<EvalReport> {
    check_dims(model, test)?;
    evaluate_with(
        model.name(),
        &test.samples,
        model.dims(),
        n_b_list,
        params,
        |_, s| model.pair_probabilities(&normalizer.context(s.location, s.orientation)),
    )
}

fn check_dims<M: BeamSelector<f64> + ?Sized>(model: &M, test: &Dataset) -> Result<()> {
    let data = (test.header.tx.len(), test.header.rx.len());
    if model.dims() != data {
        return Err(Error::invalid(format!(
            "model is {:?} but the dataset is {data:?}",
            model.dims()
        )));
    }
    Ok(())
}

/// Re-evaluates with Gaussian pose errors on the model inputs; labels and
/// RSS stay those of the true pose. Sample `i` draws from stream `i` of `seed`.
pub fn robustness_sweep<M: BeamSelector<f64> + ?Sized>(
    model: &M,
    normalizer: &InputNormalizer,
    test: &Dataset,
    sigmas: &[(f64, f64)],
    n_b_list: &[usize],
    params: &SystemParams<f64>,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    check_dims(model, test)?;
    let planar = test.header.is_planar();
    sigmas
        .iter()
        .map(|&(sigma_p, sigma_o)| {
            let mut r = evaluate_with(
                model.name(),
                &test.samples,
                model.dims(),
                n_b_list,
                params,
                |i, s| {
                    let noisy =
                        perturb(s, sigma_p, sigma_o, planar, &mut sample_rng(seed, i as u64))?;
                    model.pair_probabilities(&normalizer.context(noisy.location, noisy.orientation))
                },
            )?;
            r.sigma_p = sigma_p;
            r.sigma_o = sigma_o;
            Ok(r)
        })
        .collect()
}
