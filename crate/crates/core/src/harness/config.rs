use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::ensemble::{PortPartition, DEFAULT_CALIBRATION_DRAWS, DEFAULT_PROBE_COUNT};
use crate::models::DEFAULT_RIDGE_LAMBDA;
use crate::optim::{AdamConfig, GaConfig, Method, RunParams, TabpSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub results_file: String,
    pub summary_file: String,
    pub manifest_file: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
            results_file: "results.csv".into(),
            summary_file: "summary.csv".into(),
            manifest_file: "manifest.json".into(),
        }
    }
}

/// Full description of a sweep. Every field has a default, so an empty TOML
/// document is a valid (full-scale) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_ris: usize,
    pub mu_targets: Vec<f64>,
    pub m_values: Vec<usize>,
    pub n_realizations: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    /// Realizations used to calibrate and validate κ for each μₙ target.
    pub n_calib: usize,
    pub n_probes: usize,
    pub rr_lambda: f64,
    pub tabp: TabpSchedule,
    pub adam: AdamConfig,
    pub ga: GaConfig,
    /// When false, `wall_time_us` is written as 0 so reruns are byte-identical.
    pub record_wall_time: bool,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_tx: 1,
            n_rx: 1,
            n_ris: 100,
            mu_targets: vec![0.01, 0.5, 0.99],
            m_values: vec![0, 10, 25, 50, 100, 200, 400, 800],
            n_realizations: 1500,
            methods: Method::standard(),
            master_seed: 2025,
            n_calib: DEFAULT_CALIBRATION_DRAWS,
            n_probes: DEFAULT_PROBE_COUNT,
            rr_lambda: DEFAULT_RIDGE_LAMBDA,
            tabp: TabpSchedule::default(),
            adam: AdamConfig::default(),
            ga: GaConfig::default(),
            record_wall_time: true,
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// 100 RIS elements, 1500 realizations.
    pub fn full() -> Self {
        Self::default()
    }

    /// 32 RIS elements, 200 realizations, `M ∈ {0, 8, 32, 128}`.
    pub fn desk() -> Self {
        Self {
            n_ris: 32,
            n_realizations: 200,
            m_values: vec![0, 8, 32, 128],
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(HarnessError::Config(format!(
                "unknown preset {other:?}; expected desk or full"
            ))),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Sets a dotted key such as `tabp.e_max` or `mu_targets`. The value is
    /// read as a TOML value, or as a bare string when that fails.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let mut root = toml::Table::try_from(&*self).map_err(|e| HarnessError::Config(e.to_string()))?;
        let parsed = match format!("v = {value}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").expect("key v"),
            Err(_) => toml::Value::String(value.to_string()),
        };
        let parts: Vec<&str> = key.split('.').collect();
        let (last, path) = parts.split_last().expect("split yields one part");
        let mut table = &mut root;
        for part in path {
            table = table
                .get_mut(*part)
                .and_then(toml::Value::as_table_mut)
                .ok_or_else(|| HarnessError::Config(format!("unknown config key {key:?}")))?;
        }
        if !table.contains_key(*last) {
            return Err(HarnessError::Config(format!("unknown config key {key:?}")));
        }
        table.insert(last.to_string(), parsed);
        let updated: Self = root
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(format!("{key}: {e}")))?;
        *self = updated;
        Ok(())
    }

    pub fn partition(&self) -> Result<PortPartition, HarnessError> {
        PortPartition::new(self.n_tx, self.n_rx, self.n_ris).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn run_params(&self) -> RunParams {
        RunParams {
            rr_lambda: self.rr_lambda,
            tabp: self.tabp,
            adam: self.adam,
            ga: self.ga,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let partition = self.partition()?;
        if !partition.is_siso() {
            return bad("the channel-gain experiment needs n_tx = n_rx = 1".into());
        }
        if self.mu_targets.is_empty() {
            return bad("mu_targets is empty".into());
        }
        if let Some(mu) = self.mu_targets.iter().find(|&&mu| !(mu > 0.0 && mu < 1.0)) {
            return bad(format!("mu target {mu} outside (0, 1)"));
        }
        if self.m_values.is_empty() {
            return bad("m_values is empty".into());
        }
        if self.n_realizations == 0 {
            return bad("n_realizations must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods is empty".into());
        }
        if self.n_calib == 0 || self.n_probes == 0 {
            return bad("n_calib and n_probes must be at least 1".into());
        }
        if !(self.rr_lambda >= 0.0 && self.rr_lambda.is_finite()) {
            return bad(format!("rr_lambda {} must be finite and >= 0", self.rr_lambda));
        }
        self.tabp.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.ga.generations == 0 || !(0.0..=1.0).contains(&self.ga.mutation_prob) {
            return bad("ga needs generations >= 1 and mutation_prob in [0, 1]".into());
        }
        Ok(())
    }

    pub fn max_m(&self) -> usize {
        self.m_values.iter().copied().max().unwrap_or(0)
    }
}
