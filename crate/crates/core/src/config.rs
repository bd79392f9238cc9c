//! Run configuration, presets and sweeps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::RadioConfig;
use crate::powerctrl::PowerConfig;
use crate::scenario::{GridConfig, Population, ScenarioConfig};
use crate::scheduler::SchedulerConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown preset {0:?} (known: {known})", known = PRESETS.join(", "))]
    UnknownPreset(String),
    #[error("bad sweep {0:?}: expected var=a,b,c with var one of v, r, k_max, r_th, n_users")]
    BadSweep(String),
    #[error("unknown scheme {0:?} (known: noma-mcd, noma-gga, oma)")]
    UnknownScheme(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Rotation-matching scheduling with distributed power control.
    NomaMcd,
    /// Greedy geometric NOMA scheduling with distributed power control.
    NomaGga,
    /// Orthogonal sub-channels at full power.
    Oma,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::NomaMcd, Scheme::NomaGga, Scheme::Oma];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::NomaMcd => "noma-mcd",
            Scheme::NomaGga => "noma-gga",
            Scheme::Oma => "oma",
        }
    }

    pub fn is_noma(self) -> bool {
        self != Scheme::Oma
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyConfig {
    pub packet_bits: f64,
    /// Share of each NOMA slot spent on power control.
    pub control_fraction: f64,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        LatencyConfig {
            packet_bits: 2400.0,
            control_fraction: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmaConfig {
    pub subchannel_bandwidth_hz: f64,
}

impl Default for OmaConfig {
    fn default() -> Self {
        OmaConfig {
            subchannel_bandwidth_hz: 1e6,
        }
    }
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    /// Vehicle speed, km/h.
    #[serde(rename = "v")]
    Velocity,
    /// Communication range, metres.
    #[serde(rename = "r")]
    Range,
    #[serde(rename = "k_max")]
    MaxChannelsPerTx,
    #[serde(rename = "r_th")]
    RateThreshold,
    #[serde(rename = "n_users")]
    Users,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::Velocity => "v",
            SweepVar::Range => "r",
            SweepVar::MaxChannelsPerTx => "k_max",
            SweepVar::RateThreshold => "r_th",
            SweepVar::Users => "n_users",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = ConfigError;

    /// Parses `var=a,b,c`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::BadSweep(s.to_string());
        let (name, list) = s.split_once('=').ok_or_else(bad)?;
        let var = match name.trim() {
            "v" => SweepVar::Velocity,
            "r" => SweepVar::Range,
            "k_max" => SweepVar::MaxChannelsPerTx,
            "r_th" => SweepVar::RateThreshold,
            "n_users" => SweepVar::Users,
            _ => return Err(bad()),
        };
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(bad());
        }
        Ok(Sweep { var, values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schemes: Vec<Scheme>,
    pub seeds_per_point: usize,
    pub master_seed: u64,
    pub sweep: Option<Sweep>,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schemes: Scheme::ALL.to_vec(),
            seeds_per_point: 10,
            master_seed: 1,
            sweep: None,
            jobs: 0,
        }
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentConfig,
    pub scenario: ScenarioConfig,
    pub radio: RadioConfig,
    pub scheduler: SchedulerConfig,
    pub power: PowerConfig,
    pub latency: LatencyConfig,
    pub oma: OmaConfig,
}

pub const PRESETS: [&str; 2] = ["full", "desk"];

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn preset(name: &str) -> Result<Config, ConfigError> {
        match name {
            "full" => Ok(Self::full()),
            "desk" => Ok(Self::desk()),
            _ => Err(ConfigError::UnknownPreset(name.to_string())),
        }
    }

    /// Full-scale setup: 10 MHz split into 5 NOMA or 10 OMA sub-channels,
    /// 40 one-millisecond slots, 300-byte packets, 60 users on one road.
    fn full() -> Config {
        Config {
            experiment: ExperimentConfig {
                seeds_per_point: 50,
                sweep: Some(Sweep {
                    var: SweepVar::Velocity,
                    values: vec![15.0, 30.0, 45.0, 60.0],
                }),
                ..Default::default()
            },
            scenario: ScenarioConfig {
                n_users: 60,
                slots: 40,
                grid: GridConfig {
                    lanes_per_road: 4,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..Default::default()
        }
    }

    /// Desk-scale setup: 40 users on a two-by-two grid of two-lane roads,
    /// a 24-slot period, and power control serving every reporting receiver.
    fn desk() -> Config {
        let mut c = Self::full();
        c.scenario.n_users = 40;
        c.scenario.slots = 24;
        c.scenario.population = Population::Fixed;
        c.scenario.grid = GridConfig {
            horizontal_roads: 2,
            vertical_roads: 2,
            lanes_per_road: 2,
            road_spacing_m: 250.0,
            ..Default::default()
        };
        c.power.decode_fraction = 1.0;
        c
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        self.scenario
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.radio.validate().map_err(|e| invalid(e.to_string()))?;
        self.scheduler
            .validate(self.scenario.slots)
            .map_err(|e| invalid(e.to_string()))?;
        self.power.validate().map_err(|e| invalid(e.to_string()))?;
        let e = &self.experiment;
        if e.schemes.is_empty() {
            return Err(invalid("experiment.schemes must not be empty".into()));
        }
        if e.seeds_per_point == 0 {
            return Err(invalid("experiment.seeds_per_point must be at least 1".into()));
        }
        if let Some(s) = &e.sweep {
            if s.values.is_empty() {
                return Err(invalid("sweep needs at least one value".into()));
            }
            for &v in &s.values {
                let mut probe = self.clone();
                probe.experiment.sweep = None;
                probe.apply(s.var, v)?;
                probe.validate()?;
            }
        }
        let l = &self.latency;
        if !(l.packet_bits > 0.0) || !(0.0..1.0).contains(&l.control_fraction) {
            return Err(invalid(
                "latency needs packet_bits > 0 and control_fraction in [0, 1)".into(),
            ));
        }
        if !(self.oma.subchannel_bandwidth_hz > 0.0) {
            return Err(invalid("oma.subchannel_bandwidth_hz must be positive".into()));
        }
        Ok(())
    }

    /// Sets the swept parameter.
    pub fn apply(&mut self, var: SweepVar, value: f64) -> Result<(), ConfigError> {
        let whole = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(ConfigError::Invalid(format!(
                    "{} must be a positive integer, got {v}",
                    var.as_str()
                )))
            }
        };
        match var {
            SweepVar::Velocity => self.scenario.speed_mps = value / 3.6,
            SweepVar::Range => self.scenario.range_m = value,
            SweepVar::MaxChannelsPerTx => self.scheduler.max_channels_per_tx = whole(value)?,
            SweepVar::RateThreshold => self.radio.rate_threshold = value,
            SweepVar::Users => self.scenario.n_users = whole(value)?,
        }
        Ok(())
    }

    pub fn velocity_kmh(&self) -> f64 {
        self.scenario.speed_mps * 3.6
    }

    /// Radio parameters of the orthogonal baseline.
    pub fn oma_radio(&self) -> RadioConfig {
        RadioConfig {
            subchannel_bandwidth_hz: self.oma.subchannel_bandwidth_hz,
            ..self.radio.clone()
        }
    }

    /// Spectral efficiency a packet needs under `scheme`.
    pub fn required_rate(&self, scheme: Scheme) -> f64 {
        let (fraction, bandwidth) = if scheme.is_noma() {
            (self.latency.control_fraction, self.radio.subchannel_bandwidth_hz)
        } else {
            (0.0, self.oma.subchannel_bandwidth_hz)
        };
        crate::metrics::latency_required_rate(
            self.latency.packet_bits,
            fraction,
            self.scenario.slot_duration_s,
            bandwidth,
        )
    }
}
