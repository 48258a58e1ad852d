//! Experiment configuration: TOML with fixed sections, unknown keys rejected.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aircomp::noise_std_for_snr_db;
use crate::channel::{FadingModel, FadingSpec, Geometry, PathLoss};
use crate::error::{Error, Result};
use crate::fedlearn::{ModelKind, ModelShape, PartitionMode, PartitionSpec, SyntheticSpec, TrainSpec};
use crate::privacy::PrivacySpec;
use crate::ris_opt::{OptimizerConfig, PhaseCodebook};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub system: SystemSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy: Option<PrivacySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub scenario: String,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Record wall-clock time per round. Off by default so traces stay
    /// byte-identical across reruns.
    #[serde(default)]
    pub timing: bool,
    /// Aggregate exactly in memory instead of over the air.
    #[serde(default)]
    pub error_free: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub devices: usize,
    #[serde(default = "one")]
    pub antennas: usize,
    #[serde(default)]
    pub elements: usize,
    /// Receive SNR `P / noise_std^2` in dB at the common power budget.
    #[serde(default = "default_snr_db")]
    pub snr_db: f64,
    #[serde(default = "one_f")]
    pub power_budget: f64,
    /// Redraw channels (and redo selection and optimization) every round.
    #[serde(default)]
    pub block_fading: bool,
    /// Relative error of the channel estimate used for power control.
    #[serde(default)]
    pub csi_error_std: f64,
    /// Per-device budgets replacing `power_budget`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_budgets: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinkModel {
    Rayleigh {
        #[serde(default = "one_f")]
        variance: f64,
    },
    Rician {
        k_factor: f64,
        #[serde(default = "one_f")]
        variance: f64,
    },
    /// `[re, im]` pairs.
    Fixed { values: Vec<[f64; 2]> },
}

impl LinkModel {
    fn to_model(&self) -> FadingModel {
        match self {
            LinkModel::Rayleigh { variance } => FadingModel::Rayleigh { variance: *variance },
            LinkModel::Rician { k_factor, variance } => FadingModel::Rician {
                k_factor: *k_factor,
                variance: *variance,
            },
            LinkModel::Fixed { values } => {
                FadingModel::Fixed(values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossSection {
    pub exponent: f64,
    #[serde(default = "one_f")]
    pub reference_distance: f64,
    #[serde(default = "one_f")]
    pub reference_gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub server: [f64; 3],
    pub ris: [f64; 3],
    pub devices: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default = "default_direct")]
    pub direct: LinkModel,
    #[serde(default = "default_ris_link")]
    pub ris_link: LinkModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_loss: Option<PathLossSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            direct: default_direct(),
            ris_link: default_ris_link(),
            path_loss: None,
            geometry: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    All,
    DescendingGain,
    GreedyCodesign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// Devices kept by `descending_gain`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_selected: Option<usize>,
    /// Tradeoff weight of the co-design objective, relative to the MSE of
    /// the best single device.
    #[serde(default = "one_f")]
    pub lambda: f64,
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self {
            strategy: default_strategy(),
            n_selected: None,
            lambda: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerMode {
    /// All-ones phases, fixed beamformer.
    None,
    /// Minimize aggregation MSE over phases and beamformer.
    Mse,
    /// Align channels to the weights; devices transmit without channel knowledge.
    CsitFree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_mode")]
    pub mode: OptimizerMode,
    /// Number of discrete phase levels; ignored when `continuous`.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub continuous: bool,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            levels: default_levels(),
            continuous: false,
            budget: default_budget(),
            restarts: default_restarts(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic,
    Idx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    Iid,
    Shard,
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default = "default_source")]
    pub source: DataSource,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default = "default_features")]
    pub features: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default = "one_f")]
    pub noise_std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_images: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_images: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_labels: Option<PathBuf>,
    #[serde(default = "default_samples")]
    pub samples_per_device: usize,
    #[serde(default = "default_test_samples")]
    pub test_samples: usize,
    #[serde(default = "default_partition")]
    pub partition: PartitionKind,
    #[serde(default = "default_shards")]
    pub shards_per_device: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            source: default_source(),
            classes: default_classes(),
            features: default_features(),
            separation: default_separation(),
            noise_std: 1.0,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            samples_per_device: default_samples(),
            test_samples: default_test_samples(),
            partition: default_partition(),
            shards_per_device: default_shards(),
            alpha: default_alpha(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Softmax,
    Mlp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_model")]
    pub model: ModelChoice,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "one")]
    pub local_epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            model: default_model(),
            hidden: default_hidden(),
            rounds: default_rounds(),
            local_epochs: 1,
            batch_size: default_batch(),
            learning_rate: default_lr(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySection {
    #[serde(default)]
    pub artificial_noise_std: f64,
    #[serde(default = "one_f")]
    pub clip_norm: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Dotted config key, e.g. `selection.n_selected`.
    pub key: String,
    pub values: Vec<toml::Value>,
    /// Also run an error-free reference with every device selected.
    #[serde(default)]
    pub include_error_free: bool,
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_snr_db() -> f64 {
    10.0
}
fn default_direct() -> LinkModel {
    LinkModel::Rayleigh { variance: 1.0 }
}
fn default_ris_link() -> LinkModel {
    LinkModel::Rician {
        k_factor: 10.0,
        variance: 1.0,
    }
}
fn default_strategy() -> Strategy {
    Strategy::All
}
fn default_mode() -> OptimizerMode {
    OptimizerMode::Mse
}
fn default_levels() -> usize {
    8
}
fn default_budget() -> usize {
    50
}
fn default_restarts() -> usize {
    5
}
fn default_source() -> DataSource {
    DataSource::Synthetic
}
fn default_classes() -> usize {
    10
}
fn default_features() -> usize {
    20
}
fn default_separation() -> f64 {
    2.0
}
fn default_samples() -> usize {
    100
}
fn default_test_samples() -> usize {
    1000
}
fn default_partition() -> PartitionKind {
    PartitionKind::Iid
}
fn default_shards() -> usize {
    2
}
fn default_alpha() -> f64 {
    0.5
}
fn default_model() -> ModelChoice {
    ModelChoice::Softmax
}
fn default_hidden() -> usize {
    32
}
fn default_rounds() -> usize {
    20
}
fn default_batch() -> usize {
    20
}
fn default_lr() -> f64 {
    0.1
}
fn default_delta() -> f64 {
    1e-5
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Parse and validate.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.scenario.is_empty() || e.scenario.contains(',') {
            return Err(config_err("experiment.scenario must be a nonempty id without commas"));
        }
        if e.seeds.is_empty() {
            return Err(config_err("experiment.seeds must list at least one seed"));
        }
        let mut seeds = e.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != e.seeds.len() {
            return Err(config_err("experiment.seeds contains duplicates"));
        }

        let s = &self.system;
        if s.devices == 0 || s.antennas == 0 {
            return Err(config_err("system.devices and system.antennas must be >= 1"));
        }
        if !s.snr_db.is_finite() {
            return Err(config_err("system.snr_db must be finite"));
        }
        if !(s.power_budget > 0.0 && s.power_budget.is_finite()) {
            return Err(config_err("system.power_budget must be > 0"));
        }
        if !(s.csi_error_std >= 0.0 && s.csi_error_std.is_finite()) {
            return Err(config_err("system.csi_error_std must be >= 0"));
        }
        if let Some(p) = &s.power_budgets {
            if p.len() != s.devices {
                return Err(config_err(format!(
                    "system.power_budgets has {} entries for {} devices",
                    p.len(),
                    s.devices
                )));
            }
            if p.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(config_err("system.power_budgets entries must be > 0"));
            }
        }
        self.fading_spec().validate(s.devices)?;

        let sel = &self.selection;
        match sel.strategy {
            Strategy::DescendingGain => match sel.n_selected {
                Some(n) if n >= 1 && n <= s.devices => {}
                Some(n) => return Err(config_err(format!("selection.n_selected = {n} is outside 1..={}", s.devices))),
                None => return Err(config_err("selection.n_selected is required for descending_gain")),
            },
            Strategy::GreedyCodesign => {
                if self.optimizer.mode != OptimizerMode::Mse {
                    return Err(config_err("greedy_codesign optimizes the phases itself; it needs optimizer.mode = \"mse\""));
                }
            }
            Strategy::All => {}
        }
        if !(sel.lambda >= 0.0 && sel.lambda.is_finite()) {
            return Err(config_err("selection.lambda must be >= 0"));
        }

        self.optimizer_config().validate()?;
        if self.optimizer.mode == OptimizerMode::CsitFree && s.antennas != 1 {
            return Err(config_err("optimizer.mode = \"csit_free\" requires system.antennas = 1"));
        }

        let d = &self.data;
        match d.source {
            DataSource::Synthetic => self.synthetic_spec().validate()?,
            DataSource::Idx => {
                for (name, p) in [
                    ("train_images", &d.train_images),
                    ("train_labels", &d.train_labels),
                    ("test_images", &d.test_images),
                    ("test_labels", &d.test_labels),
                ] {
                    if p.is_none() {
                        return Err(config_err(format!("data.{name} is required for source = \"idx\"")));
                    }
                }
            }
        }
        if d.samples_per_device == 0 || d.test_samples == 0 {
            return Err(config_err("data.samples_per_device and data.test_samples must be >= 1"));
        }
        match d.partition {
            PartitionKind::Shard => {
                if d.shards_per_device == 0 || !d.samples_per_device.is_multiple_of(d.shards_per_device) {
                    return Err(config_err("data.samples_per_device must be a multiple of data.shards_per_device"));
                }
            }
            PartitionKind::Dirichlet => {
                if !(d.alpha > 0.0 && d.alpha.is_finite()) {
                    return Err(config_err("data.alpha must be > 0"));
                }
            }
            PartitionKind::Iid => {}
        }

        self.train_spec().validate()?;
        if self.train.model == ModelChoice::Mlp && self.train.hidden == 0 {
            return Err(config_err("train.hidden must be >= 1"));
        }

        if let Some(spec) = self.privacy_spec() {
            spec.validate()?;
        }

        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(config_err("sweep.values must not be empty"));
            }
            for v in &sw.values {
                let label = value_label(v);
                if label.contains(',') || label == ERROR_FREE_LABEL {
                    return Err(config_err(format!("sweep value {label} cannot be used as a trace label")));
                }
            }
            if sw.key.starts_with("sweep.") || sw.key == "sweep" {
                return Err(config_err("sweep.key cannot point into the sweep section"));
            }
            // every value must produce a valid configuration
            for v in &sw.values {
                self.with_override(&sw.key, v)?;
            }
        }
        Ok(())
    }

    pub fn fading_spec(&self) -> FadingSpec {
        let c = &self.channel;
        FadingSpec {
            direct: c.direct.to_model(),
            ris_link: c.ris_link.to_model(),
            path_loss: c.path_loss.as_ref().map(|p| PathLoss {
                exponent: p.exponent,
                reference_distance: p.reference_distance,
                reference_gain: p.reference_gain,
            }),
            geometry: c.geometry.as_ref().map(|g| Geometry {
                server: g.server,
                ris: g.ris,
                devices: g.devices.clone(),
            }),
        }
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            codebook: if o.continuous {
                PhaseCodebook::Continuous
            } else {
                PhaseCodebook::Discrete(o.levels)
            },
            budget: o.budget,
            restarts: o.restarts,
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            classes: self.data.classes,
            features: self.data.features,
            separation: self.data.separation,
            noise_std: self.data.noise_std,
        }
    }

    pub fn partition_spec(&self) -> PartitionSpec {
        let d = &self.data;
        PartitionSpec {
            mode: match d.partition {
                PartitionKind::Iid => PartitionMode::Iid,
                PartitionKind::Shard => PartitionMode::Shard {
                    shards_per_device: d.shards_per_device,
                },
                PartitionKind::Dirichlet => PartitionMode::Dirichlet { alpha: d.alpha },
            },
            samples_per_device: d.samples_per_device,
        }
    }

    pub fn train_spec(&self) -> TrainSpec {
        let t = &self.train;
        TrainSpec {
            local_epochs: t.local_epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            rounds: t.rounds,
        }
    }

    pub fn model_shape(&self, features: usize, classes: usize) -> ModelShape {
        ModelShape {
            features,
            classes,
            kind: match self.train.model {
                ModelChoice::Softmax => ModelKind::Softmax,
                ModelChoice::Mlp => ModelKind::Mlp { hidden: self.train.hidden },
            },
        }
    }

    pub fn privacy_spec(&self) -> Option<PrivacySpec> {
        self.privacy.as_ref().map(|p| {
            PrivacySpec::uniform(self.system.devices, p.artificial_noise_std, p.clip_norm, p.delta)
        })
    }

    pub fn noise_std(&self) -> f64 {
        noise_std_for_snr_db(self.system.snr_db, self.system.power_budget)
    }

    /// Copy with one dotted key replaced. The key must already be present.
    pub fn with_override(&self, key: &str, value: &toml::Value) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| config_err(e.to_string()))?;
        if let Some(t) = root.as_table_mut() {
            t.remove("sweep");
        }
        let mut slot = &mut root;
        for part in key.split('.') {
            slot = slot
                .as_table_mut()
                .and_then(|t| t.get_mut(part))
                .ok_or_else(|| config_err(format!("sweep key {key} is not present in the configuration")))?;
        }
        *slot = match (&*slot, value) {
            (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
            _ => value.clone(),
        };
        let mut config: Self = root
            .try_into()
            .map_err(|e: toml::de::Error| config_err(format!("sweep {key} = {}: {e}", value_label(value))))?;
        config.sweep = None;
        config.validate()?;
        Ok(config)
    }
}

/// Label written to the `sweep_value` column of the error-free reference.
pub const ERROR_FREE_LABEL: &str = "error_free";

/// Text form of a sweep value as written to traces.
pub fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
scenario = "t"
seeds = [1]

[system]
devices = 4
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.system.antennas, 1);
        assert_eq!(c.system.elements, 0);
        assert_eq!(c.selection.strategy, Strategy::All);
        assert_eq!(c.train.rounds, 20);
        assert!(c.privacy.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(ExperimentConfig::from_toml_str(&text).unwrap_err().is_config());
        let text = MINIMAL.replace("devices = 4", "devices = 4\nantenas = 2");
        assert!(ExperimentConfig::from_toml_str(&text).unwrap_err().is_config());
        let text = format!("{MINIMAL}\n[channel]\ndirect = {{ model = \"rayleigh\", varianse = 1.0 }}\n");
        assert!(ExperimentConfig::from_toml_str(&text).unwrap_err().is_config());
    }

    #[test]
    fn semantic_checks() {
        let bad = [
            MINIMAL.replace("seeds = [1]", "seeds = []"),
            MINIMAL.replace("devices = 4", "devices = 0"),
            format!("{MINIMAL}\n[selection]\nstrategy = \"descending_gain\"\n"),
            format!("{MINIMAL}\n[selection]\nstrategy = \"descending_gain\"\nn_selected = 5\n"),
            format!("{MINIMAL}\n[privacy]\ndelta = 1.5\n"),
            MINIMAL.replace("devices = 4", "devices = 4\nantennas = 2") + "\n[optimizer]\nmode = \"csit_free\"\n",
            format!("{MINIMAL}\n[data]\npartition = \"shard\"\nshards_per_device = 3\n"),
            format!("{MINIMAL}\n[channel]\npath_loss = {{ exponent = 2.0 }}\n"),
            MINIMAL.replace("devices = 4", "devices = 4\npower_budgets = [1.0, 2.0]"),
            MINIMAL.replace("devices = 4", "devices = 4\npower_budgets = [1.0, 2.0, 0.0, 1.0]"),
        ];
        for text in bad {
            let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let text = format!(
            "{}\n[channel]\nris_link = {{ model = \"fixed\", values = [[1.0, 0.5]] }}\n[privacy]\nartificial_noise_std = 0.1\n[sweep]\nkey = \"system.snr_db\"\nvalues = [0, 5.5]\n",
            MINIMAL.replace("devices = 4", "devices = 4\npower_budgets = [1.0, 2.0, 0.5, 1.0]")
        );
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn override_replaces_existing_keys_only() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let o = c.with_override("system.elements", &toml::Value::Integer(16)).unwrap();
        assert_eq!(o.system.elements, 16);
        let o = c.with_override("system.snr_db", &toml::Value::Integer(3)).unwrap();
        assert_eq!(o.system.snr_db, 3.0);
        assert!(c.with_override("system.nope", &toml::Value::Integer(1)).unwrap_err().is_config());
        assert!(c.with_override("privacy.clip_norm", &toml::Value::Float(1.0)).is_err());
        assert!(c.with_override("system.devices", &toml::Value::Integer(0)).is_err());
    }
}
