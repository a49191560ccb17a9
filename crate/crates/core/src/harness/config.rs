//! Declarative experiment description, loaded from TOML.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{LayerConfig, NetworkConfig};
use crate::sim::{ClockDomain, DecayMode, LatchPoint, LayerParams, SyncScope};
use crate::topology::parse_topology;
use crate::trainer::{DeltaT, Rate, ThresholdInit, TrainerHyperparams};

/// An integer or a string in the config file; learning rates and `delta_t`
/// may be written either way (`63`, `"2^-3"`, `"adaptive"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(u64),
    Str(String),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Int(v) => v.to_string(),
            Scalar::Str(s) => s.clone(),
        }
    }

    fn parse<T: FromStr<Err = Error>>(&self) -> Result<T> {
        self.text().parse()
    }
}

impl From<u64> for Scalar {
    fn from(v: u64) -> Self {
        Scalar::Int(v)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Str(s.to_string())
    }
}

impl FromStr for ThresholdInit {
    type Err = Error;

    /// `mid-scale`, `membrane-max`, `zero` or an integer.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mid-scale" => Ok(ThresholdInit::MidScale),
            "membrane-max" => Ok(ThresholdInit::MembraneMax),
            "zero" => Ok(ThresholdInit::Zero),
            other => other
                .parse()
                .map(ThresholdInit::Value)
                .map_err(|_| Error::config(format!("bad threshold_init `{other}`"))),
        }
    }
}

/// One layer's settings. Anything left out takes the default named on the field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerSpec {
    /// Clock divider relative to the input clock (1).
    pub divider: Option<u32>,
    pub phase: Option<u32>,
    /// Decaying counter width (6).
    pub trace_width: Option<u8>,
    /// Counter load value `C` (full scale).
    pub decay_constant: Option<u32>,
    pub decay_mode: Option<DecayMode>,
    /// Weight register width (8).
    pub weight_width: Option<u8>,
    /// Threshold register width (`2 * weight_width + 8`).
    pub threshold_width: Option<u8>,
    pub sync_clear: Option<u32>,
    /// `layer` or `synapse`.
    pub sync_scope: Option<SyncScope>,
    pub spike_window: Option<u32>,
    pub output_latency: Option<u32>,
    /// `decision` or `emission`.
    pub latch: Option<LatchPoint>,
    /// `2^-3`.
    pub eta_w: Option<Scalar>,
    /// `2^-3`.
    pub eta_t: Option<Scalar>,
    /// 63.
    pub delta_t: Option<Scalar>,
    pub trace_floor_percent: Option<u32>,
    pub las_mask_after_gas_only: Option<bool>,
    pub pass_window: Option<u32>,
    pub las_delay: Option<u32>,
    /// `mid-scale`.
    pub threshold_init: Option<Scalar>,
    /// Upper bound of the initial weight draw (full register).
    pub weight_init_max: Option<u32>,
}

impl LayerSpec {
    fn build(&self, neurons: usize, synapses: usize) -> Result<LayerConfig> {
        let mut p = LayerParams::new(neurons, synapses, self.trace_width.unwrap_or(6), self.weight_width.unwrap_or(8));
        p.clock = ClockDomain::new(self.divider.unwrap_or(1), self.phase.unwrap_or(0))?;
        if let Some(c) = self.decay_constant {
            p.decay_constant = c;
        }
        if let Some(m) = self.decay_mode {
            p.decay_mode = m;
        }
        if let Some(w) = self.threshold_width {
            p.threshold_width = w;
        }
        if let Some(v) = self.sync_clear {
            p.sync_clear = v;
        }
        if let Some(v) = self.sync_scope {
            p.sync_scope = v;
        }
        if let Some(v) = self.spike_window {
            p.spike_window = v;
        }
        if let Some(v) = self.output_latency {
            p.output_latency = v;
        }
        if let Some(v) = self.latch {
            p.latch = v;
        }
        p.validate()?;

        let rate = |s: &Option<Scalar>| -> Result<Rate> { s.as_ref().map_or(Ok(Rate::Shift(3)), Scalar::parse) };
        let delta_t = self.delta_t.as_ref().map_or(Ok(DeltaT::Constant(63)), Scalar::parse)?;
        let mut hp = TrainerHyperparams::new(rate(&self.eta_w)?, rate(&self.eta_t)?, delta_t);
        if let Some(v) = self.trace_floor_percent {
            hp.trace_floor_percent = v;
        }
        if let Some(v) = self.las_mask_after_gas_only {
            hp.las_mask_after_gas_only = v;
        }
        if let Some(v) = self.pass_window {
            hp.pass_window = v;
        }
        if let Some(v) = self.las_delay {
            hp.las_delay = v;
        }
        hp.validate()?;
        let threshold_init = self.threshold_init.as_ref().map_or(Ok(ThresholdInit::MidScale), Scalar::parse)?;
        Ok(LayerConfig { params: p, trainer: hp, threshold_init, weight_init_max: self.weight_init_max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    /// The four 8-channel sweep patterns, one presentation each per epoch.
    Patterns {
        /// Spike spacing in input ticks.
        nu: u64,
        /// Training-time jitter on each spacing, as a fraction of `nu`.
        #[serde(default)]
        jitter: f64,
        /// Jitter of the robustness test set.
        #[serde(default = "default_eval_jitter")]
        eval_jitter: f64,
        /// Presentations of each pattern in the jittered test set.
        #[serde(default = "default_eval_repeats")]
        eval_repeats: usize,
        gap: Option<u64>,
    },
    /// Latency-coded Iris, re-split at random for every run.
    Iris {
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
        gap: Option<u64>,
    },
    /// Pre-encoded event-stream files.
    Files { train: PathBuf, test: PathBuf },
}

fn default_eval_jitter() -> f64 {
    0.1
}

fn default_eval_repeats() -> usize {
    25
}

fn default_train_fraction() -> f64 {
    0.3
}

/// Settings for the floating-point reference model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    /// Time-surface decay constant per layer, in input ticks.
    pub tau: Vec<f64>,
    pub eta_w: Vec<f64>,
    pub eta_t: Vec<f64>,
    pub delta_t: Vec<f64>,
    /// Initial threshold per layer.
    pub threshold_init: Vec<f64>,
    /// Hidden-layer eligibility floor on the normalized activity trace.
    pub activity_floor: f64,
    pub las_mask_after_gas_only: bool,
    pub epochs: Option<u32>,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            tau: vec![5.0, 10.0],
            eta_w: vec![0.001, 0.01],
            eta_t: vec![0.001, 0.01],
            delta_t: vec![0.02, 0.05],
            threshold_init: vec![0.9, 0.9],
            activity_floor: 0.1,
            las_mask_after_gas_only: true,
            epochs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub topology: String,
    #[serde(default)]
    pub seed: u64,
    pub epochs: u32,
    /// Independent runs in a sweep: seeds for patterns, splits for Iris.
    #[serde(default = "default_runs")]
    pub runs: u32,
    /// Evaluate the test set every this many epochs (off when absent).
    #[serde(default)]
    pub eval_every: Option<u32>,
    pub dataset: DatasetSpec,
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
}

fn default_runs() -> u32 {
    1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.network()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn network(&self) -> Result<NetworkConfig> {
        let topology = parse_topology(&self.topology)?;
        if self.layers.len() != topology.num_layers() {
            return Err(Error::config(format!(
                "{} needs {} [[layers]] tables, found {}",
                topology,
                topology.num_layers(),
                self.layers.len()
            )));
        }
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, spec)| spec.build(topology.layers[i], topology.fan_in(i)))
            .collect::<Result<Vec<_>>>()?;
        let cfg = NetworkConfig { topology, layers };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Silence appended after every sample.
    pub fn gap(&self) -> Result<u64> {
        let explicit = match &self.dataset {
            DatasetSpec::Patterns { gap, .. } | DatasetSpec::Iris { gap, .. } => *gap,
            DatasetSpec::Files { .. } => Some(0),
        };
        Ok(match explicit {
            Some(g) => g,
            None => self.network()?.default_gap(),
        })
    }

    /// Two-layer sweep-pattern experiment with the published parameters.
    pub fn experiment1() -> Self {
        let layer = |divider, eta: &str| LayerSpec {
            divider: Some(divider),
            trace_width: Some(6),
            decay_constant: Some(63),
            weight_width: Some(8),
            eta_w: Some(eta.into()),
            eta_t: Some(eta.into()),
            delta_t: Some(63.into()),
            sync_scope: Some(SyncScope::Synapse),
            latch: Some(LatchPoint::Emission),
            threshold_init: Some("zero".into()),
            ..LayerSpec::default()
        };
        let l2 = LayerSpec {
            weight_init_max: Some(127),
            las_mask_after_gas_only: Some(true),
            ..layer(2, "2^-2")
        };
        Self {
            name: "experiment1".into(),
            topology: "ODESA 8__2_4__4".into(),
            seed: 1,
            epochs: 400,
            runs: 20,
            eval_every: None,
            dataset: DatasetSpec::Patterns {
                nu: 8,
                jitter: 0.0,
                eval_jitter: default_eval_jitter(),
                eval_repeats: default_eval_repeats(),
                gap: None,
            },
            layers: vec![layer(1, "2^-3"), l2],
            oracle: Some(OracleSpec {
                tau: vec![16.0, 60.0],
                eta_w: vec![0.05; 2],
                eta_t: vec![0.05; 2],
                delta_t: vec![0.05; 2],
                epochs: Some(200),
                ..OracleSpec::default()
            }),
        }
    }

    /// Latency-coded Iris with fixed-step updates and the adaptive punish step.
    pub fn iris() -> Self {
        let l1 = LayerSpec {
            trace_width: Some(8),
            weight_width: Some(8),
            eta_w: Some(1.into()),
            eta_t: Some(127.into()),
            delta_t: Some("adaptive".into()),
            sync_scope: Some(SyncScope::Synapse),
            latch: Some(LatchPoint::Emission),
            threshold_init: Some("zero".into()),
            ..LayerSpec::default()
        };
        let l2 = LayerSpec {
            divider: Some(4),
            trace_width: Some(8),
            weight_width: Some(8),
            eta_w: Some(2.into()),
            eta_t: Some("2^-10".into()),
            delta_t: Some("adaptive".into()),
            las_mask_after_gas_only: Some(true),
            sync_scope: Some(SyncScope::Synapse),
            threshold_init: Some("zero".into()),
            ..LayerSpec::default()
        };
        Self {
            name: "iris".into(),
            topology: "ODESA 4__6_3__3".into(),
            seed: 1,
            epochs: 400,
            runs: 20,
            eval_every: None,
            dataset: DatasetSpec::Iris { train_fraction: default_train_fraction(), gap: None },
            layers: vec![l1, l2],
            oracle: Some(OracleSpec::default()),
        }
    }
}
