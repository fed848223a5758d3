//! TOML experiment configuration and the sweep drivers that turn it into
//! datasets, trained models, metric CSVs, SVG charts and a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ArrayGeometry, TraceConfig};
use crate::codebook::SystemParams;
use crate::dataset::{generate_dataset, sample_rng, Dataset, GenerationConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate, robustness_sweep, write_reports_csv, EvalReport, DEFAULT_NB_GRID};
use crate::geometry::Scene;
use crate::models::complexity::{
    count_dnn_multiplications, count_dnn_parameters, count_gnn_multiplications,
    count_gnn_parameters,
};
use crate::models::store::{
    save_model, ModelKind, ModelMeta, TrainedModel, META_FORMAT, META_VERSION,
};
use crate::models::{DnnConfig, GnnConfig, InputLayout, InputNormalizer};
use crate::nn::Parameterized;
use crate::svg::{LineChart, Series};
use crate::train::{train, TrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenePreset {
    /// Living room with yaw-only receivers for linear arrays, tilted receivers for planar ones.
    #[default]
    Auto,
    LivingRoom,
    LivingRoomPlanar,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSection {
    pub preset: ScenePreset,
    /// Replaces the preset entirely when present.
    pub custom: Option<Scene<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraysSection {
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
}

impl Default for ArraysSection {
    fn default() -> Self {
        Self {
            tx: ArrayGeometry::Ula { n: 64 },
            rx: ArrayGeometry::Ula { n: 16 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub p_t_dbm: f64,
    pub noise_dbm: f64,
    pub t_fr: f64,
    pub t_s: f64,
    pub carrier_hz: f64,
    pub snr_th_db: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            p_t_dbm: 0.0,
            noise_dbm: -84.0,
            t_fr: 20e-3,
            t_s: 0.1e-3,
            carrier_hz: 60e9,
            snr_th_db: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    pub reflection_loss_db: f64,
    pub max_order: u8,
    pub max_paths: usize,
}

impl Default for TraceSection {
    fn default() -> Self {
        let t = TraceConfig::<f64>::default();
        Self {
            reflection_loss_db: t.reflection_loss_db,
            max_order: t.max_order,
            max_paths: t.max_paths,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub n_samples: usize,
    pub train_fraction: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub n_b: Vec<usize>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            n_b: DEFAULT_NB_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Size,
    Noise,
    Antenna,
}

impl std::str::FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size" => Ok(SweepKind::Size),
            "noise" => Ok(SweepKind::Noise),
            "antenna" => Ok(SweepKind::Antenna),
            other => Err(Error::invalid(format!("unknown sweep kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for SweepKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepKind::Size => "size",
            SweepKind::Noise => "noise",
            SweepKind::Antenna => "antenna",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Sweeps run by `run_experiment`.
    pub kinds: Vec<SweepKind>,
    pub models: Vec<ModelKind>,
    /// Fractions of the training split used by the size sweep.
    pub size_fractions: Vec<f64>,
    /// Location error standard deviations, meters (orientation error 0).
    pub sigma_p: Vec<f64>,
    /// Orientation error standard deviations, radians (location error 0).
    pub sigma_o: Vec<f64>,
    /// TX element counts for the antenna sweep.
    pub antenna_n_t: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kinds: vec![SweepKind::Size],
            models: vec![ModelKind::Gnn, ModelKind::Dnn],
            size_fractions: vec![0.2, 1.0],
            sigma_p: vec![0.0, 0.1, 0.25, 0.5],
            sigma_o: vec![0.0, 0.1, 0.2, 0.4],
            antenna_n_t: vec![16, 32, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scene: SceneSection,
    pub arrays: ArraysSection,
    pub system: SystemSection,
    pub trace: TraceSection,
    pub dataset: DatasetSection,
    pub gnn: GnnConfig,
    pub dnn: DnnConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
    pub sweep: SweepSection,
}

/// Independent seeds for each randomized stage, all derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageSeeds {
    pub master: u64,
    pub data: u64,
    pub split: u64,
    pub init: u64,
    pub train: u64,
    pub noise: u64,
}

impl StageSeeds {
    pub fn derive(master: u64) -> Self {
        let tag = |t: u64| sample_rng(master, 0x5eed_0000 + t).next_u64();
        Self {
            master,
            data: tag(1),
            split: tag(2),
            init: tag(3),
            train: tag(4),
            noise: tag(5),
        }
    }
}

fn in_unit_open(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| Error::config("<document>", e.message().to_string()))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." {
                "<document>".to_string()
            } else {
                path
            };
            Error::config(path, e.inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn seeds(&self) -> StageSeeds {
        StageSeeds::derive(self.seed)
    }

    pub fn system_params(&self) -> Result<SystemParams<f64>> {
        let s = &self.system;
        SystemParams::from_dbm(
            s.p_t_dbm,
            s.noise_dbm,
            s.t_fr,
            s.t_s,
            s.carrier_hz,
            s.snr_th_db,
        )
    }

    pub fn layout(&self) -> InputLayout {
        layout_for(&self.arrays.tx, &self.arrays.rx)
    }

    pub fn scene(&self) -> Scene<f64> {
        if let Some(s) = &self.scene.custom {
            return s.clone();
        }
        let planar = match self.scene.preset {
            ScenePreset::Auto => self.layout() == InputLayout::Planar,
            ScenePreset::LivingRoom => false,
            ScenePreset::LivingRoomPlanar => true,
        };
        if planar {
            Scene::living_room_planar()
        } else {
            Scene::living_room()
        }
    }

    pub fn generation_config(&self) -> Result<GenerationConfig> {
        let params = self.system_params()?;
        Ok(GenerationConfig {
            scene: self.scene(),
            trace: TraceConfig {
                carrier_hz: params.carrier_hz,
                reflection_loss_db: self.trace.reflection_loss_db,
                max_order: self.trace.max_order,
                max_paths: self.trace.max_paths,
            },
            tx: self.arrays.tx,
            rx: self.arrays.rx,
            params,
        })
    }

    /// Checks every value and names the offending field.
    pub fn validate(&self) -> Result<()> {
        let wrap = |path: &str, r: Result<()>| {
            r.map_err(|e| match e {
                Error::Config { path: p, message } => Error::config(format!("{path}.{p}"), message),
                other => Error::config(path, other.to_string()),
            })
        };
        for (name, g) in [
            ("arrays.tx", &self.arrays.tx),
            ("arrays.rx", &self.arrays.rx),
        ] {
            wrap(name, g.validate())?;
            if g.len() < 3 {
                return Err(Error::config(
                    name,
                    "needs at least 3 elements to form a beam graph",
                ));
            }
        }
        wrap("system", self.system_params().map(|_| ()))?;
        if self.trace.max_order > 2 {
            return Err(Error::config("trace.max_order", "must be 0, 1 or 2"));
        }
        if self.trace.max_paths == 0 {
            return Err(Error::config("trace.max_paths", "must be positive"));
        }
        if !(self.trace.reflection_loss_db.is_finite() && self.trace.reflection_loss_db <= 0.0) {
            return Err(Error::config(
                "trace.reflection_loss_db",
                "must be a finite non-positive dB value",
            ));
        }
        wrap("scene", self.scene().validate())?;
        if self.dataset.n_samples < 2 {
            return Err(Error::config("dataset.n_samples", "must be at least 2"));
        }
        if !in_unit_open(self.dataset.train_fraction) {
            return Err(Error::config(
                "dataset.train_fraction",
                "must lie in (0, 1)",
            ));
        }
        wrap("gnn", self.gnn.validate())?;
        if self.dnn.hidden_width == 0 {
            return Err(Error::config("dnn.hidden_width", "must be positive"));
        }
        wrap("train", self.train.validate())?;
        let pairs = self.arrays.tx.len() * self.arrays.rx.len();
        if self.eval.n_b.is_empty() {
            return Err(Error::config("eval.n_b", "must not be empty"));
        }
        for (i, &n) in self.eval.n_b.iter().enumerate() {
            if n == 0 || n > pairs {
                return Err(Error::config(
                    format!("eval.n_b[{i}]"),
                    format!("{n} outside 1..={pairs}"),
                ));
            }
        }
        for (i, &f) in self.sweep.size_fractions.iter().enumerate() {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::config(
                    format!("sweep.size_fractions[{i}]"),
                    "must lie in (0, 1]",
                ));
            }
        }
        for (name, list) in [
            ("sweep.sigma_p", &self.sweep.sigma_p),
            ("sweep.sigma_o", &self.sweep.sigma_o),
        ] {
            for (i, &s) in list.iter().enumerate() {
                if !(s >= 0.0 && s.is_finite()) {
                    return Err(Error::config(
                        format!("{name}[{i}]"),
                        "must be finite and non-negative",
                    ));
                }
            }
        }
        for (i, &n) in self.sweep.antenna_n_t.iter().enumerate() {
            if let Err(e) = antenna_variant(&self.arrays.tx, n) {
                return Err(Error::config(
                    format!("sweep.antenna_n_t[{i}]"),
                    e.to_string(),
                ));
            }
        }
        if self.sweep.models.is_empty() {
            return Err(Error::config("sweep.models", "must not be empty"));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn layout_for(tx: &ArrayGeometry, rx: &ArrayGeometry) -> InputLayout {
    if tx.is_planar() || rx.is_planar() {
        InputLayout::Planar
    } else {
        InputLayout::Linear
    }
}

/// The TX geometry with `n` elements: a ULA, or a UPA keeping its vertical size.
pub fn antenna_variant(tx: &ArrayGeometry, n: usize) -> Result<ArrayGeometry> {
    let g = match *tx {
        ArrayGeometry::Ula { .. } => ArrayGeometry::Ula { n },
        ArrayGeometry::Upa { n_v, .. } => {
            if n % n_v != 0 {
                return Err(Error::invalid(format!(
                    "{n} elements do not tile {n_v} rows"
                )));
            }
            ArrayGeometry::Upa { n_h: n / n_v, n_v }
        }
    };
    g.validate()?;
    if g.len() < 3 {
        return Err(Error::invalid("needs at least 3 elements"));
    }
    Ok(g)
}

pub struct TrainedArtifact {
    pub model: TrainedModel,
    pub meta: ModelMeta,
    pub report: TrainReport,
}

/// Initializes a model of `kind` for `train_set` and fits it.
pub fn fit(
    cfg: &ExperimentConfig,
    kind: ModelKind,
    train_set: &Dataset,
    split: (f64, u64),
) -> Result<TrainedArtifact> {
    let seeds = cfg.seeds();
    let h = &train_set.header;
    let meta = ModelMeta {
        format: META_FORMAT.to_string(),
        version: META_VERSION,
        kind,
        layout: layout_for(&h.tx, &h.rx),
        tx: h.tx,
        rx: h.rx,
        gnn: (kind == ModelKind::Gnn).then_some(cfg.gnn),
        dnn: (kind == ModelKind::Dnn).then_some(cfg.dnn),
        normalizer: InputNormalizer::new(h.rx_region),
        seed: seeds.init,
        epochs: 0,
        best_epoch: 0,
        learning_rate: cfg.train.learning_rate,
        batch_size: cfg.train.batch_size,
        train_fraction: split.0,
        split_seed: split.1,
    };
    let mut model = TrainedModel::build(&meta)?;
    let tc = TrainConfig {
        seed: seeds.train,
        ..cfg.train
    };
    let report = train(&mut model, &meta.normalizer, train_set, &tc)?;
    let meta = ModelMeta {
        epochs: report.epochs_run(),
        best_epoch: report.best_epoch,
        ..meta
    };
    Ok(TrainedArtifact {
        model,
        meta,
        report,
    })
}

/// Splits `data` per the config and fits on the training part.
pub fn train_on_dataset(
    cfg: &ExperimentConfig,
    kind: ModelKind,
    data: &Dataset,
) -> Result<TrainedArtifact> {
    let split_seed = cfg.seeds().split;
    let (train_set, _) = data.split(cfg.dataset.train_fraction, split_seed)?;
    fit(
        cfg,
        kind,
        &train_set,
        (cfg.dataset.train_fraction, split_seed),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityRow {
    pub method: String,
    /// `None` for counts read off a built model.
    pub multiplications: Option<u64>,
    pub parameters: u64,
}

/// Closed-form counts at the configured sizes, followed by the parameter
/// counts of the models as built here.
pub fn complexity_rows(cfg: &ExperimentConfig) -> Result<Vec<ComplexityRow>> {
    let (n_t, n_r) = (cfg.arrays.tx.len() as u64, cfg.arrays.rx.len() as u64);
    let g = &cfg.gnn;
    let d = &cfg.dnn;
    let mut rows = vec![
        ComplexityRow {
            method: "gnn_formula".into(),
            multiplications: Some(count_gnn_multiplications(
                n_t,
                n_r,
                g.feature_dim as u64,
                g.message_dim as u64,
                g.iterations as u64,
                g.hidden_layers as u64,
                g.hidden_width as u64,
            )),
            parameters: count_gnn_parameters(
                g.feature_dim as u64,
                g.message_dim as u64,
                g.hidden_layers as u64,
                g.hidden_width as u64,
            ),
        },
        ComplexityRow {
            method: "dnn_formula".into(),
            multiplications: Some(count_dnn_multiplications(
                n_t,
                n_r,
                d.hidden_layers as u64,
                d.hidden_width as u64,
            )),
            parameters: count_dnn_parameters(
                n_t,
                n_r,
                d.hidden_layers as u64,
                d.hidden_width as u64,
            ),
        },
    ];
    for kind in [ModelKind::Gnn, ModelKind::Dnn] {
        let meta = ModelMeta {
            format: META_FORMAT.into(),
            version: META_VERSION,
            kind,
            layout: cfg.layout(),
            tx: cfg.arrays.tx,
            rx: cfg.arrays.rx,
            gnn: Some(cfg.gnn),
            dnn: Some(cfg.dnn),
            normalizer: InputNormalizer::new(cfg.scene().rx_region),
            seed: 0,
            epochs: 0,
            best_epoch: 0,
            learning_rate: cfg.train.learning_rate,
            batch_size: cfg.train.batch_size,
            train_fraction: cfg.dataset.train_fraction,
            split_seed: 0,
        };
        rows.push(ComplexityRow {
            method: format!("{kind}_model"),
            multiplications: None,
            parameters: TrainedModel::build(&meta)?.parameter_count() as u64,
        });
    }
    Ok(rows)
}

pub fn write_complexity_csv<W: std::io::Write>(
    rows: &[ComplexityRow],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "method,multiplications,parameters")?;
    for r in rows {
        let m = r.multiplications.map(|m| m.to_string()).unwrap_or_default();
        writeln!(w, "{},{m},{}", r.method, r.parameters)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    sweep: String,
    config_sha256: String,
    seeds: StageSeeds,
    config: &'a ExperimentConfig,
    files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub reports: Vec<EvalReport>,
    pub files: Vec<PathBuf>,
}

fn size_tag(f: f64) -> String {
    format!("{}", (f * 100.0).round() as i64)
}

fn series_name(r: &EvalReport, kind: SweepKind) -> String {
    match kind {
        SweepKind::Noise => format!("{} sp={} so={}", r.model, r.sigma_p, r.sigma_o),
        _ => r.model.clone(),
    }
}

fn charts(reports: &[EvalReport], kind: SweepKind) -> Vec<(&'static str, LineChart)> {
    let metric = |name: &str, y: &str, f: fn(&crate::eval::EvalRow) -> f64| LineChart {
        title: format!("{name} ({kind} sweep)"),
        x_label: "N_b".into(),
        y_label: y.into(),
        series: reports
            .iter()
            .map(|r| Series {
                name: series_name(r, kind),
                points: r.rows.iter().map(|row| (row.n_b as f64, f(row))).collect(),
            })
            .collect(),
    };
    vec![
        (
            "misalignment.svg",
            metric("Misalignment probability", "probability", |r| {
                r.misalignment
            }),
        ),
        (
            "ese.svg",
            metric("Effective spectral efficiency", "bits/s/Hz", |r| {
                r.ese_bps_hz
            }),
        ),
        (
            "rss.svg",
            metric("Received signal strength", "dBm", |r| r.rss_dbm),
        ),
    ]
}

/// Runs one sweep and writes `results.csv`, one SVG per metric, the trained
/// models under `models/` and `manifest.json` into `out_dir`.
pub fn run_sweep(cfg: &ExperimentConfig, kind: SweepKind, out_dir: &Path) -> Result<SweepOutput> {
    cfg.validate()?;
    let seeds = cfg.seeds();
    let params = cfg.system_params()?;
    let models_dir = out_dir.join("models");
    fs::create_dir_all(&models_dir)?;
    let mut files = Vec::new();
    let mut reports = Vec::new();

    let mut fit_and_save = |c: &ExperimentConfig,
                            model: ModelKind,
                            train_set: &Dataset,
                            name: &str|
     -> Result<TrainedArtifact> {
        log::info!("training {name} on {} samples", train_set.len());
        let art = fit(c, model, train_set, (c.dataset.train_fraction, seeds.split))?;
        let path = models_dir.join(format!("{name}.bin"));
        save_model(&path, &art.model, &art.meta)?;
        files.push(path);
        Ok(art)
    };

    match kind {
        SweepKind::Size | SweepKind::Noise => {
            let data =
                generate_dataset(&cfg.generation_config()?, cfg.dataset.n_samples, seeds.data)?;
            let (train_set, test_set) = data.split(cfg.dataset.train_fraction, seeds.split)?;
            if kind == SweepKind::Size {
                for &f in &cfg.sweep.size_fractions {
                    let n = ((train_set.len() as f64 * f).round() as usize).max(1);
                    let subset = train_set.head(n);
                    for &m in &cfg.sweep.models {
                        let label = format!("{m}@{}%", size_tag(f));
                        let art =
                            fit_and_save(cfg, m, &subset, &format!("{m}_size{}", size_tag(f)))?;
                        let mut r = evaluate(
                            &art.model,
                            &art.meta.normalizer,
                            &test_set,
                            &cfg.eval.n_b,
                            &params,
                        )?;
                        r.model = label;
                        reports.push(r);
                    }
                }
            } else {
                let mut sigmas: Vec<(f64, f64)> =
                    cfg.sweep.sigma_p.iter().map(|&s| (s, 0.0)).collect();
                for &s in &cfg.sweep.sigma_o {
                    if !sigmas.contains(&(0.0, s)) {
                        sigmas.push((0.0, s));
                    }
                }
                for &m in &cfg.sweep.models {
                    let art = fit_and_save(cfg, m, &train_set, &format!("{m}_full"))?;
                    reports.extend(robustness_sweep(
                        &art.model,
                        &art.meta.normalizer,
                        &test_set,
                        &sigmas,
                        &cfg.eval.n_b,
                        &params,
                        seeds.noise,
                    )?);
                }
            }
        }
        SweepKind::Antenna => {
            for &n_t in &cfg.sweep.antenna_n_t {
                let mut c = cfg.clone();
                c.arrays.tx = antenna_variant(&cfg.arrays.tx, n_t)?;
                let pairs = c.arrays.tx.len() * c.arrays.rx.len();
                c.eval.n_b.retain(|&n| n <= pairs);
                let data =
                    generate_dataset(&c.generation_config()?, c.dataset.n_samples, seeds.data)?;
                let (train_set, test_set) = data.split(c.dataset.train_fraction, seeds.split)?;
                for &m in &c.sweep.models {
                    let art = fit_and_save(&c, m, &train_set, &format!("{m}_nt{n_t}"))?;
                    let mut r = evaluate(
                        &art.model,
                        &art.meta.normalizer,
                        &test_set,
                        &c.eval.n_b,
                        &params,
                    )?;
                    r.model = format!("{m}@nt{n_t}");
                    reports.push(r);
                }
            }
        }
    }

    let csv_path = out_dir.join("results.csv");
    let mut csv = Vec::new();
    write_reports_csv(&reports, &mut csv)?;
    fs::write(&csv_path, csv)?;
    files.push(csv_path);
    for (name, chart) in charts(&reports, kind) {
        let p = out_dir.join(name);
        fs::write(&p, chart.render())?;
        files.push(p);
    }

    let manifest = Manifest {
        tool: "beamlab",
        version: env!("CARGO_PKG_VERSION"),
        sweep: kind.to_string(),
        config_sha256: cfg.hash(),
        seeds,
        config: cfg,
        files: files
            .iter()
            .map(|p| p.strip_prefix(out_dir).unwrap_or(p).display().to_string())
            .collect(),
    };
    let manifest_path = out_dir.join("manifest.json");
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(&manifest_path, json + "\n")?;
    files.push(manifest_path);
    Ok(SweepOutput { reports, files })
}

/// Runs every sweep listed under `sweep.kinds`, each into its own subdirectory.
pub fn run_experiment(config_path: &Path, out_dir: &Path) -> Result<Vec<SweepOutput>> {
    let cfg = ExperimentConfig::load(config_path)?;
    fs::create_dir_all(out_dir)?;
    fs::copy(config_path, out_dir.join("config.toml"))?;
    cfg.sweep
        .kinds
        .iter()
        .map(|&k| run_sweep(&cfg, k, &out_dir.join(k.to_string())))
        .collect()
}
