//! Run configuration: built-in defaults, an optional TOML file with flat
//! dotted keys, and command-line overrides, in increasing precedence.
//!
//! ```toml
//! optimizer = "fps"
//! f = 20
//! eta = 0.005
//! lambda = 0.03
//! pid.kp = 1.0
//! fps.phi = 0.00012
//! fuzzy.a_points = [0.0001, 0.0002, 0.0003, 0.0004, 0.0005]
//! ```

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::data_io::FormatKind;
use crate::error::{Error, Result};
use crate::fuzzy::{default_table, AdaptedParams, FuzzyTable, POINTS};
use crate::training::{OptimizerKind, TrainConfig};
use crate::types::{Hyperparams, PidGains};

pub const DEFAULT_F: usize = 20;
pub const DEFAULT_ETA: f64 = 0.005;
pub const DEFAULT_LAMBDA: f64 = 0.03;
pub const DEFAULT_MAX_EPOCHS: usize = 1000;
pub const DEFAULT_PATIENCE: usize = 5;
pub const DEFAULT_MIN_DELTA: f64 = 1e-5;
pub const DEFAULT_REPEATS: usize = 3;

/// Initial folded parameters of the fuzzy learner.
pub fn default_fps_initial() -> AdaptedParams<f64> {
    AdaptedParams::new(0.00012, PidGains { kp: 0.005, ki: 0.000001, kd: 0.0002 })
}

/// Raw PID gains: the fuzzy learner's initial gains unfolded by the default
/// learning rate.
pub fn default_pid_gains() -> PidGains<f64> {
    let g = default_fps_initial().gains;
    PidGains { kp: g.kp / DEFAULT_ETA, ki: g.ki / DEFAULT_ETA, kd: g.kd / DEFAULT_ETA }
}

/// Optional settings from one source (file or command line).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigLayer {
    pub optimizer: Option<OptimizerKind>,
    pub data: Option<PathBuf>,
    pub format: Option<FormatKind>,
    pub header: Option<bool>,
    pub f: Option<usize>,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub pid_kp: Option<f64>,
    pub pid_ki: Option<f64>,
    pub pid_kd: Option<f64>,
    pub fps_phi: Option<f64>,
    pub fps_kp: Option<f64>,
    pub fps_ki: Option<f64>,
    pub fps_kd: Option<f64>,
    pub fuzzy_a: Option<[f64; POINTS]>,
    pub fuzzy_phi: Option<[f64; POINTS]>,
    pub fuzzy_p: Option<[f64; POINTS]>,
    pub fuzzy_i: Option<[f64; POINTS]>,
    pub fuzzy_d: Option<[f64; POINTS]>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub min_delta: Option<f64>,
    pub seed: Option<u64>,
    pub split_seed: Option<u64>,
    pub shuffle: Option<bool>,
    pub repeats: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl ConfigLayer {
    /// Fields set in `over` replace those in `self`.
    pub fn merge(mut self, over: &ConfigLayer) -> ConfigLayer {
        overlay!(self, over; optimizer, data, format, header, f, eta, lambda,
            pid_kp, pid_ki, pid_kd, fps_phi, fps_kp, fps_ki, fps_kd,
            fuzzy_a, fuzzy_phi, fuzzy_p, fuzzy_i, fuzzy_d,
            max_epochs, patience, min_delta, seed, split_seed, shuffle, repeats);
        self
    }

    pub fn from_file(path: &Path) -> Result<ConfigLayer> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<ConfigLayer> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_owned()))?;
        let mut layer = ConfigLayer::default();
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        for (key, value) in flat {
            layer.set(&key, value)?;
        }
        Ok(layer)
    }

    fn set(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        let bad = |want: &str| Error::Config(format!("key '{key}' expects {want}, got {value}"));
        let num = || value.as_float().or_else(|| value.as_integer().map(|i| i as f64)).ok_or_else(|| bad("a number"));
        let count = || {
            value
                .as_integer()
                .and_then(|i| usize::try_from(i).ok())
                .ok_or_else(|| bad("a non-negative integer"))
        };
        let seed = || value.as_integer().and_then(|i| u64::try_from(i).ok()).ok_or_else(|| bad("a non-negative integer"));
        let flag = || value.as_bool().ok_or_else(|| bad("true or false"));
        let text = || value.as_str().ok_or_else(|| bad("a string"));
        let points = || -> Result<[f64; POINTS]> {
            let arr = value.as_array().ok_or_else(|| bad("an array of 5 numbers"))?;
            let nums: Option<Vec<f64>> = arr
                .iter()
                .map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
                .collect();
            nums.and_then(|v| <[f64; POINTS]>::try_from(v).ok())
                .ok_or_else(|| bad("an array of 5 numbers"))
        };
        match key {
            "optimizer" => self.optimizer = Some(text()?.parse().map_err(config_err)?),
            "data" => self.data = Some(PathBuf::from(text()?)),
            "format" => self.format = Some(text()?.parse().map_err(config_err)?),
            "header" => self.header = Some(flag()?),
            "f" => self.f = Some(count()?),
            "eta" => self.eta = Some(num()?),
            "lambda" => self.lambda = Some(num()?),
            "pid.kp" => self.pid_kp = Some(num()?),
            "pid.ki" => self.pid_ki = Some(num()?),
            "pid.kd" => self.pid_kd = Some(num()?),
            "fps.phi" => self.fps_phi = Some(num()?),
            "fps.kp" => self.fps_kp = Some(num()?),
            "fps.ki" => self.fps_ki = Some(num()?),
            "fps.kd" => self.fps_kd = Some(num()?),
            "fuzzy.a_points" => self.fuzzy_a = Some(points()?),
            "fuzzy.phi_points" => self.fuzzy_phi = Some(points()?),
            "fuzzy.p_points" => self.fuzzy_p = Some(points()?),
            "fuzzy.i_points" => self.fuzzy_i = Some(points()?),
            "fuzzy.d_points" => self.fuzzy_d = Some(points()?),
            "max_epochs" => self.max_epochs = Some(count()?),
            "patience" => self.patience = Some(count()?),
            "min_delta" => self.min_delta = Some(num()?),
            "seed" => self.seed = Some(seed()?),
            "split_seed" => self.split_seed = Some(seed()?),
            "shuffle" => self.shuffle = Some(flag()?),
            "repeats" => self.repeats = Some(count()?),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

fn flatten<'a>(prefix: &str, table: &'a toml::Table, out: &mut Vec<(String, &'a toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(inner) => flatten(&key, inner, out),
            _ => out.push((key, v)),
        }
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidArgument(msg) => Error::Config(msg),
        other => other,
    }
}

/// Fully resolved configuration, echoed at the top of every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub optimizer: OptimizerKind,
    pub data: Option<PathBuf>,
    pub format: FormatKind,
    pub header: bool,
    pub f: usize,
    pub eta: f64,
    pub lambda: f64,
    pub pid: PidGains<f64>,
    pub fps: AdaptedParams<f64>,
    pub fuzzy: FuzzyTable<f64>,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
    pub split_seed: u64,
    pub shuffle: bool,
    pub repeats: usize,
}

impl RunConfig {
    /// Applies `layer` over the built-in defaults and validates the result.
    pub fn resolve(layer: &ConfigLayer) -> Result<RunConfig> {
        let pid0 = default_pid_gains();
        let fps0 = default_fps_initial();
        let t0 = default_table::<f64>();
        let fuzzy = FuzzyTable {
            a_points: layer.fuzzy_a.unwrap_or(t0.a_points),
            phi_points: layer.fuzzy_phi.unwrap_or(t0.phi_points),
            p_points: layer.fuzzy_p.unwrap_or(t0.p_points),
            i_points: layer.fuzzy_i.unwrap_or(t0.i_points),
            d_points: layer.fuzzy_d.unwrap_or(t0.d_points),
        };
        fuzzy.validate().map_err(config_err)?;
        let cfg = RunConfig {
            optimizer: layer.optimizer.unwrap_or(OptimizerKind::Fps),
            data: layer.data.clone(),
            format: layer.format.unwrap_or(FormatKind::MovielensDat),
            header: layer.header.unwrap_or(false),
            f: layer.f.unwrap_or(DEFAULT_F),
            eta: layer.eta.unwrap_or(DEFAULT_ETA),
            lambda: layer.lambda.unwrap_or(DEFAULT_LAMBDA),
            pid: PidGains {
                kp: layer.pid_kp.unwrap_or(pid0.kp),
                ki: layer.pid_ki.unwrap_or(pid0.ki),
                kd: layer.pid_kd.unwrap_or(pid0.kd),
            },
            fps: AdaptedParams::new(
                layer.fps_phi.unwrap_or(fps0.phi),
                PidGains {
                    kp: layer.fps_kp.unwrap_or(fps0.gains.kp),
                    ki: layer.fps_ki.unwrap_or(fps0.gains.ki),
                    kd: layer.fps_kd.unwrap_or(fps0.gains.kd),
                },
            ),
            fuzzy,
            max_epochs: layer.max_epochs.unwrap_or(DEFAULT_MAX_EPOCHS),
            patience: layer.patience.unwrap_or(DEFAULT_PATIENCE),
            min_delta: layer.min_delta.unwrap_or(DEFAULT_MIN_DELTA),
            seed: layer.seed.unwrap_or(0),
            split_seed: layer.split_seed.unwrap_or(0),
            shuffle: layer.shuffle.unwrap_or(false),
            repeats: layer.repeats.unwrap_or(DEFAULT_REPEATS),
        };
        if cfg.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if !(cfg.fps.phi >= 0.0 && cfg.fps.phi.is_finite()) {
            return Err(Error::Config(format!("fps.phi must be non-negative, got {}", cfg.fps.phi)));
        }
        for kind in OptimizerKind::ALL {
            cfg.train_config(kind)?;
        }
        Ok(cfg)
    }

    /// Training configuration for `kind` (which may differ from `self.optimizer`
    /// when benchmarking).
    pub fn train_config(&self, kind: OptimizerKind) -> Result<TrainConfig<f64>> {
        let base = TrainConfig {
            optimizer: kind,
            f: self.f,
            max_epochs: self.max_epochs,
            patience: self.patience,
            min_delta: self.min_delta,
            seed: self.seed,
            shuffle_each_epoch: self.shuffle,
            hyperparams: Hyperparams::new(self.eta, self.lambda).map_err(config_err)?,
            initial_gains: PidGains::proportional_only(),
            fuzzy_table: self.fuzzy,
        };
        let cfg = match kind {
            OptimizerKind::Sgd => base,
            OptimizerKind::Pid => TrainConfig { initial_gains: self.pid, ..base },
            OptimizerKind::Fps => TrainConfig {
                hyperparams: Hyperparams::folded(self.fps.phi).map_err(config_err)?,
                initial_gains: self.fps.gains,
                ..base
            },
        };
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_settings() {
        let cfg = RunConfig::resolve(&ConfigLayer::default()).unwrap();
        assert_eq!(cfg.f, 20);
        assert_eq!(cfg.fps, default_fps_initial());
        assert_eq!(cfg.fuzzy, default_table());
        let t = cfg.train_config(OptimizerKind::Fps).unwrap();
        assert_eq!(t.initial_params(), default_fps_initial());
        let p = cfg.train_config(OptimizerKind::Pid).unwrap().initial_params();
        assert!((p.gains.kp - 0.005).abs() < 1e-18 && (p.gains.ki - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn file_then_flags_precedence() {
        let file = ConfigLayer::from_toml(
            "optimizer = \"pid\"\nf = 8\neta = 0.01\npid.kp = 2\n[fuzzy]\nphi_points = [1e-5, 2e-5, 3e-5, 4e-5, 5e-5]\n",
        )
        .unwrap();
        let flags = ConfigLayer { f: Some(4), ..Default::default() };
        let cfg = RunConfig::resolve(&file.merge(&flags)).unwrap();
        assert_eq!(cfg.optimizer, OptimizerKind::Pid);
        assert_eq!(cfg.f, 4);
        assert_eq!(cfg.eta, 0.01);
        assert_eq!(cfg.pid.kp, 2.0);
        assert_eq!(cfg.fuzzy.phi_points[4], 5e-5);
        assert_eq!(cfg.lambda, DEFAULT_LAMBDA);
    }

    #[test]
    fn dotted_keys_parse() {
        let layer = ConfigLayer::from_toml("fuzzy.a_points = [1, 2, 3, 4, 5]\nfps.phi = 0.0002").unwrap();
        assert_eq!(layer.fuzzy_a, Some([1.0, 2.0, 3.0, 4.0, 5.0]));
        assert_eq!(layer.fps_phi, Some(0.0002));
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ConfigLayer::from_toml("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(ConfigLayer::from_toml("f = \"x\""), Err(Error::Config(_))));
        assert!(matches!(ConfigLayer::from_toml("fuzzy.a_points = [1, 2]"), Err(Error::Config(_))));
        assert!(matches!(ConfigLayer::from_toml("optimizer = \"adam\""), Err(Error::Config(_))));
        assert!(ConfigLayer::from_toml("f = ").is_err());

        let layer = ConfigLayer::from_toml("fuzzy.d_points = [1, 2, 3, 4, 5]").unwrap();
        let msg = RunConfig::resolve(&layer).unwrap_err().to_string();
        assert!(msg.contains("d_points") && msg.contains("decreasing"), "{msg}");

        let layer = ConfigLayer { eta: Some(0.0), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&layer), Err(Error::Config(_))));
        let layer = ConfigLayer { patience: Some(0), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&layer), Err(Error::Config(_))));
    }
}
