//! Labeled sample generation, pose perturbation, splitting and the `BMAL`
//! binary dataset format.
//!
//! File layout (all little-endian):
//!
//! ```text
//! "BMAL" u32:version
//! tx geometry, rx geometry      u8 kind (0 = ULA, 1 = UPA), u32 n_h, u32 n_v
//! system params                 f64 × 6: p_t [W], σ² [W], T_fr, T_s, carrier, SNR_TH [dB]
//! u64 scene hash, u64 seed
//! rx region                     f64 × 6: min xyz, max xyz
//! u64 sample count
//! records                       f64 × 6 pose, u32 p*, u32 q*, f32 × N_t·N_r RSS [W]
//! ```

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bytes::{put_f32, put_f64, put_u32, put_u64, Reader};
use crate::channel::{channel_matrix, trace_paths, ArrayGeometry, TraceConfig};
use crate::codebook::{dft_codebook, rss_matrix, Codebook, SystemParams};
use crate::error::{Error, FormatError, Result};
use crate::geometry::{sample_rx_pose_with, Aabb, Orientation, Pose, Scene, Vec3};

pub const MAGIC: [u8; 4] = *b"BMAL";
pub const VERSION: u32 = 1;

const MAX_POSE_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub location: Vec3<f64>,
    pub orientation: Orientation<f64>,
    /// `N_t × N_r` noiseless RSS in watts, row = TX beam.
    pub rss: Vec<f32>,
    /// Best `(tx beam, rx beam)`, 0-based.
    pub label: (usize, usize),
}

impl Sample {
    pub fn rss_at(&self, p: usize, q: usize, n_r: usize) -> f64 {
        f64::from(self.rss[p * n_r + q])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub version: u32,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub params: SystemParams<f64>,
    pub scene_hash: u64,
    pub seed: u64,
    pub rx_region: Aabb<f64>,
}

impl DatasetHeader {
    pub fn pair_count(&self) -> usize {
        self.tx.len() * self.rx.len()
    }

    pub fn is_planar(&self) -> bool {
        self.tx.is_planar() || self.rx.is_planar()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<Sample>,
}

/// Everything needed to synthesize samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationConfig {
    pub scene: Scene<f64>,
    pub trace: TraceConfig<f64>,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub params: SystemParams<f64>,
}

impl GenerationConfig {
    pub fn living_room(tx: ArrayGeometry, rx: ArrayGeometry) -> Self {
        let planar = tx.is_planar() || rx.is_planar();
        Self {
            scene: if planar {
                Scene::living_room_planar()
            } else {
                Scene::living_room()
            },
            trace: TraceConfig::default(),
            tx,
            rx,
            params: SystemParams::paper_defaults(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.tx.validate()?;
        self.rx.validate()?;
        self.params.validate()
    }

    /// First 8 bytes of SHA-256 over the canonical JSON of scene and tracer settings.
    pub fn scene_hash(&self) -> u64 {
        let json = serde_json::to_vec(&(&self.scene, &self.trace)).expect("scene serializes");
        let digest = Sha256::digest(&json);
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

/// Flat argmax of an RSS matrix with lowest-index tie-break.
pub fn label(rss: &[f64], n_r: usize) -> (usize, usize) {
    let mut best = 0;
    for (i, v) in rss.iter().enumerate() {
        if *v > rss[best] {
            best = i;
        }
    }
    (best / n_r, best % n_r)
}

/// Deterministic per-sample generator: stream `index` of the master seed.
pub fn sample_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Traces the channel at `pose` and labels it.
pub fn synthesize_sample(
    cfg: &GenerationConfig,
    tx_cb: &Codebook<f64>,
    rx_cb: &Codebook<f64>,
    pose: &Pose<f64>,
) -> Result<Sample> {
    let paths = trace_paths(&cfg.scene, &cfg.scene.tx, pose, &cfg.trace)?;
    let h = channel_matrix(&paths, &cfg.tx, &cfg.rx);
    let m = rss_matrix(&h, tx_cb, rx_cb, &cfg.params)?;
    let label = label(&m.values, m.n_r);
    Ok(Sample {
        location: pose.position,
        orientation: pose.orientation,
        rss: m.values.iter().map(|&v| v as f32).collect(),
        label,
    })
}

/// Draws a pose for sample `index`; poses inside furniture are redrawn from
/// the same stream.
pub fn sample_pose(cfg: &GenerationConfig, master_seed: u64, index: u64) -> Result<Pose<f64>> {
    let mut rng = sample_rng(master_seed, index);
    for _ in 0..MAX_POSE_ATTEMPTS {
        let pose = sample_rx_pose_with(&cfg.scene, &mut rng);
        if !cfg.scene.inside_obstacle(pose.position) {
            return Ok(pose);
        }
    }
    Err(Error::invalid("receiver region is covered by obstacles"))
}

pub fn generate_dataset(
    cfg: &GenerationConfig,
    n_samples: usize,
    master_seed: u64,
) -> Result<Dataset> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    cfg.validate()?;
    let tx_cb = dft_codebook(&cfg.tx);
    let rx_cb = dft_codebook(&cfg.rx);
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let pose = sample_pose(cfg, master_seed, i as u64)?;
            synthesize_sample(cfg, &tx_cb, &rx_cb, &pose)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        header: DatasetHeader {
            version: VERSION,
            tx: cfg.tx,
            rx: cfg.rx,
            params: cfg.params,
            scene_hash: cfg.scene_hash(),
            seed: master_seed,
            rx_region: cfg.scene.rx_region,
        },
        samples,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w >= std::f64::consts::TAU {
        0.0
    } else {
        w
    }
}

/// Adds Gaussian pose errors: each coordinate gets `N(0, σ_p²)`, alpha (and
/// for planar arrays beta, gamma) gets `N(0, σ_o²)`. Alpha wraps into
/// `[0, 2π)`, tilts clamp into `[-π/4, π/4)`. RSS and label stay untouched.
pub fn perturb<R: Rng + ?Sized>(
    s: &Sample,
    sigma_p: f64,
    sigma_o: f64,
    planar: bool,
    rng: &mut R,
) -> Result<Sample> {
    if !(sigma_p >= 0.0 && sigma_o >= 0.0) {
        return Err(Error::invalid("perturbation sigmas must be non-negative"));
    }
    let mut out = s.clone();
    if sigma_p > 0.0 {
        let n = Normal::new(0.0, sigma_p).map_err(|e| Error::invalid(e.to_string()))?;
        out.location = s.location + Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
    }
    if sigma_o > 0.0 {
        let n = Normal::new(0.0, sigma_o).map_err(|e| Error::invalid(e.to_string()))?;
        out.orientation.alpha = wrap_angle(s.orientation.alpha + n.sample(rng));
        if planar {
            let q = std::f64::consts::FRAC_PI_4;
            let clamp = |a: f64| a.clamp(-q, q.next_down());
            out.orientation.beta = clamp(s.orientation.beta + n.sample(rng));
            out.orientation.gamma = clamp(s.orientation.gamma + n.sample(rng));
        }
    }
    Ok(out)
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn with_samples(&self, samples: Vec<Sample>) -> Dataset {
        Dataset {
            header: self.header.clone(),
            samples,
        }
    }

    /// The first `n` samples.
    pub fn head(&self, n: usize) -> Dataset {
        self.with_samples(self.samples[..n.min(self.len())].to_vec())
    }

    /// Seeded random partition into `(train, test)`.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid("train fraction must lie in (0, 1)"));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = (self.len() as f64 * train_fraction).round() as usize;
        let pick = |ids: &[usize]| ids.iter().map(|&i| self.samples[i].clone()).collect();
        Ok((
            self.with_samples(pick(&idx[..n_train])),
            self.with_samples(pick(&idx[n_train..])),
        ))
    }

    pub fn encode(&self) -> Vec<u8> {
        let h = &self.header;
        let n_pairs = h.pair_count();
        let mut out = Vec::with_capacity(128 + self.len() * (56 + 4 * n_pairs));
        out.extend_from_slice(&MAGIC);
        put_u32(&mut out, VERSION);
        for g in [h.tx, h.rx] {
            let (kind, a, b) = match g {
                ArrayGeometry::Ula { n } => (0u8, n, 1),
                ArrayGeometry::Upa { n_h, n_v } => (1u8, n_h, n_v),
            };
            out.push(kind);
            put_u32(&mut out, a as u32);
            put_u32(&mut out, b as u32);
        }
        let p = &h.params;
        for v in [p.p_t, p.sigma_n2, p.t_fr, p.t_s, p.carrier_hz, p.snr_th_db] {
            put_f64(&mut out, v);
        }
        put_u64(&mut out, h.scene_hash);
        put_u64(&mut out, h.seed);
        for v in [h.rx_region.min, h.rx_region.max] {
            put_f64(&mut out, v.x);
            put_f64(&mut out, v.y);
            put_f64(&mut out, v.z);
        }
        put_u64(&mut out, self.len() as u64);
        for s in &self.samples {
            let o = s.orientation;
            for v in [
                s.location.x,
                s.location.y,
                s.location.z,
                o.alpha,
                o.beta,
                o.gamma,
            ] {
                put_f64(&mut out, v);
            }
            put_u32(&mut out, s.label.0 as u32);
            put_u32(&mut out, s.label.1 as u32);
            for &r in &s.rss {
                put_f32(&mut out, r);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Dataset> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion {
                found: version,
                expected: VERSION,
            }
            .into());
        }
        let mut geom = || -> Result<ArrayGeometry> {
            let kind = r.u8()?;
            let (a, b) = (r.u32()? as usize, r.u32()? as usize);
            let g = match kind {
                0 if b == 1 => ArrayGeometry::Ula { n: a },
                1 => ArrayGeometry::Upa { n_h: a, n_v: b },
                _ => {
                    return Err(FormatError::Inconsistent(format!(
                        "array kind {kind} with dims {a}x{b}"
                    ))
                    .into())
                }
            };
            if g.is_empty() {
                return Err(FormatError::Inconsistent("array with zero elements".into()).into());
            }
            Ok(g)
        };
        let tx = geom()?;
        let rx = geom()?;
        let params = SystemParams {
            p_t: r.f64()?,
            sigma_n2: r.f64()?,
            t_fr: r.f64()?,
            t_s: r.f64()?,
            carrier_hz: r.f64()?,
            snr_th_db: r.f64()?,
        };
        let scene_hash = r.u64()?;
        let seed = r.u64()?;
        let mut v3 = || -> Result<Vec3<f64>> { Ok(Vec3::new(r.f64()?, r.f64()?, r.f64()?)) };
        let rx_region = Aabb::new(v3()?, v3()?);
        let count = r.u64()? as usize;
        let (n_t, n_r) = (tx.len(), rx.len());
        let stride = 6 * 8 + 8 + 4 * n_t * n_r;
        if count
            .checked_mul(stride)
            .is_none_or(|need| need > r.remaining())
        {
            let need = count.saturating_mul(stride);
            // Report the offset of the first incomplete record.
            let complete = r.remaining() / stride;
            return Err(FormatError::Truncated {
                offset: (r.offset() + complete * stride) as u64,
                needed: need - r.remaining(),
            }
            .into());
        }
        let mut samples = Vec::with_capacity(count);
        for i in 0..count {
            let loc = Vec3::new(r.f64()?, r.f64()?, r.f64()?);
            let o = Orientation::new(r.f64()?, r.f64()?, r.f64()?);
            let label = (r.u32()? as usize, r.u32()? as usize);
            if label.0 >= n_t || label.1 >= n_r {
                return Err(FormatError::Inconsistent(format!(
                    "sample {i}: label {label:?} outside {n_t}x{n_r}"
                ))
                .into());
            }
            let mut rss = Vec::with_capacity(n_t * n_r);
            for _ in 0..n_t * n_r {
                rss.push(r.f32()?);
            }
            samples.push(Sample {
                location: loc,
                orientation: o,
                rss,
                label,
            });
        }
        if r.remaining() != 0 {
            return Err(FormatError::Inconsistent(format!(
                "{} trailing bytes after {count} samples",
                r.remaining()
            ))
            .into());
        }
        Ok(Dataset {
            header: DatasetHeader {
                version,
                tx,
                rx,
                params,
                scene_hash,
                seed,
                rx_region,
            },
            samples,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        Dataset::decode(&std::fs::read(path)?)
    }

    /// One row per sample: pose, label and optionally every RSS entry.
    pub fn write_csv<W: Write>(&self, mut w: W, include_rss: bool) -> std::io::Result<()> {
        let planar = self.header.is_planar();
        let (n_t, n_r) = (self.header.tx.len(), self.header.rx.len());
        let mut cols = vec!["x", "y", "z", "alpha"];
        if planar {
            cols.extend(["beta", "gamma"]);
        }
        cols.extend(["p", "q"]);
        let mut head = cols.join(",");
        if include_rss {
            for p in 0..n_t {
                for q in 0..n_r {
                    head.push_str(&format!(",rss_{p}_{q}"));
                }
            }
        }
        writeln!(w, "{head}")?;
        for s in &self.samples {
            let mut row = format!(
                "{},{},{},{}",
                s.location.x, s.location.y, s.location.z, s.orientation.alpha
            );
            if planar {
                row.push_str(&format!(",{},{}", s.orientation.beta, s.orientation.gamma));
            }
            row.push_str(&format!(",{},{}", s.label.0, s.label.1));
            if include_rss {
                for v in &s.rss {
                    row.push_str(&format!(",{v:e}"));
                }
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}
