//! Experiment configuration: a TOML file layered over a named preset.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qds_core::detection::DetectorModel;
use qds_core::protocol::{lab_2014, ChannelModel, OpticalSetup, ProtocolParams};

use crate::CliError;

pub const PRESETS: [&str; 2] = ["lab-2014", "ideal"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha_sq: f64,
    pub optics: OpticsConfig,
    pub detector: DetectorConfig,
    pub protocol: ProtocolConfig,
    pub run: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsConfig {
    pub multiport_db: f64,
    pub receiver_splitter_db: f64,
    pub interferometer_db: f64,
    pub multiport_visibility: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency: f64,
    /// Fraction of detections kept by the time gate.
    pub gated_fraction: f64,
    pub dark_rate_per_s: f64,
    pub gate_ns: f64,
    /// Visibility of the elimination interferometers.
    pub visibility: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub length: usize,
    pub security_level: f64,
    /// Thresholds. Either all four are given or all are derived from
    /// `length` and `security_level`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: u64,
    /// `alpha_sq` values for `sweep`.
    pub sweep: Vec<f64>,
    /// Only used to convert signature lengths into distribution time.
    pub clock_hz: f64,
}

fn config_error(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let base = Self {
            alpha_sq: lab_2014::ALPHA_SQ,
            optics: OpticsConfig {
                multiport_db: lab_2014::MULTIPORT_DB,
                receiver_splitter_db: lab_2014::RECEIVER_SPLITTER_DB,
                interferometer_db: lab_2014::INTERFEROMETER_DB,
                multiport_visibility: lab_2014::MULTIPORT_VISIBILITY,
            },
            detector: DetectorConfig {
                efficiency: lab_2014::EFFICIENCY,
                gated_fraction: lab_2014::GATED_FRACTION,
                dark_rate_per_s: lab_2014::DARK_RATE_PER_S,
                gate_ns: lab_2014::GATE_NS,
                visibility: lab_2014::DETECTION_VISIBILITY,
            },
            protocol: ProtocolConfig {
                length: 1_000_000,
                security_level: 1e-4,
                s_a: None,
                s_v: None,
                r: None,
                epsilon: None,
            },
            run: RunConfig {
                seed: 0,
                trials: 100,
                sweep: (1..=11).map(f64::from).collect(),
                clock_hz: lab_2014::CLOCK_HZ,
            },
        };
        match name {
            "lab-2014" => Ok(base),
            "ideal" => Ok(Self {
                optics: OpticsConfig {
                    multiport_db: 0.0,
                    receiver_splitter_db: 0.0,
                    interferometer_db: 0.0,
                    multiport_visibility: 1.0,
                },
                detector: DetectorConfig {
                    efficiency: 1.0,
                    gated_fraction: 1.0,
                    dark_rate_per_s: 0.0,
                    gate_ns: lab_2014::GATE_NS,
                    visibility: 1.0,
                },
                ..base
            }),
            other => Err(CliError::Usage(format!(
                "unknown preset `{other}`; valid presets: {}",
                PRESETS.join(", ")
            ))),
        }
    }

    /// Parses `text` over a preset. The preset is `preset_override`, else
    /// the file's top-level `preset` key, else `lab-2014`.
    pub fn from_toml(text: &str, preset_override: Option<&str>) -> Result<Self, CliError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_error("config", e.to_string()))?;
        let file_preset = match table.remove("preset") {
            Some(toml::Value::String(s)) => Some(s),
            Some(_) => return Err(config_error("preset", "must be a string")),
            None => None,
        };
        let name = preset_override
            .map(str::to_string)
            .or(file_preset)
            .unwrap_or_else(|| PRESETS[0].to_string());
        let base = Self::preset(&name)?;
        let mut merged =
            toml::Table::try_from(&base).map_err(|e| config_error("config", e.to_string()))?;
        merge(&mut merged, table);
        let config: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| config_error("config", e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, preset_override: Option<&str>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    config_error("config", format!("cannot read {}: {e}", p.display()))
                })?;
                Self::from_toml(&text, preset_override)
            }
            None => Self::preset(preset_override.unwrap_or(PRESETS[0])),
        }
    }

    /// Checks every field invariant, naming the first offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        positive("alpha_sq", self.alpha_sq)?;
        non_negative("optics.multiport_db", self.optics.multiport_db)?;
        non_negative(
            "optics.receiver_splitter_db",
            self.optics.receiver_splitter_db,
        )?;
        non_negative("optics.interferometer_db", self.optics.interferometer_db)?;
        unit(
            "optics.multiport_visibility",
            self.optics.multiport_visibility,
        )?;
        unit("detector.efficiency", self.detector.efficiency)?;
        unit("detector.gated_fraction", self.detector.gated_fraction)?;
        non_negative("detector.dark_rate_per_s", self.detector.dark_rate_per_s)?;
        non_negative("detector.gate_ns", self.detector.gate_ns)?;
        unit("detector.visibility", self.detector.visibility)?;
        if self.protocol.length == 0 {
            return Err(config_error("protocol.length", "must be at least 1"));
        }
        let level = self.protocol.security_level;
        if !(level > 0.0 && level < 1.0) {
            return Err(config_error(
                "protocol.security_level",
                "must lie in (0, 1)",
            ));
        }
        let p = &self.protocol;
        let given = [
            ("protocol.s_a", p.s_a),
            ("protocol.s_v", p.s_v),
            ("protocol.r", p.r),
            ("protocol.epsilon", p.epsilon),
        ];
        if given.iter().any(|(_, v)| v.is_some()) {
            for (name, v) in given {
                match v {
                    None => {
                        return Err(config_error(
                            name,
                            "thresholds must be given together (s_a, s_v, r, epsilon)",
                        ))
                    }
                    Some(v) => unit(name, v)?,
                }
            }
        }
        for &a in &self.run.sweep {
            positive("run.sweep", a)?;
        }
        positive("run.clock_hz", self.run.clock_hz)?;
        Ok(())
    }

    pub fn setup(&self) -> Result<OpticalSetup, CliError> {
        let d = &self.detector;
        let detector = DetectorModel::new(
            d.efficiency * d.gated_fraction,
            DetectorModel::gated_dark_probability(d.dark_rate_per_s, d.gate_ns * 1e-9),
            d.visibility,
        )
        .map_err(|e| config_error("detector", e.to_string()))?;
        OpticalSetup::from_losses(
            self.optics.multiport_db,
            self.optics.receiver_splitter_db + self.optics.interferometer_db,
            self.optics.multiport_visibility,
            detector,
        )
        .map_err(|e| config_error("optics", e.to_string()))
    }

    /// Protocol parameters over `channel`, without the consistency checks
    /// of [`ProtocolParams::validate`].
    pub fn raw_params(&self, channel: ChannelModel) -> Result<ProtocolParams, CliError> {
        let p = &self.protocol;
        match (p.s_a, p.s_v, p.r, p.epsilon) {
            (Some(s_a), Some(s_v), Some(r), Some(epsilon)) => Ok(ProtocolParams {
                length: p.length,
                s_a,
                s_v,
                r,
                epsilon,
                alpha_sq: self.alpha_sq,
                channel,
            }),
            _ => ProtocolParams::for_simulation(p.length, self.alpha_sq, channel, p.security_level)
                .map_err(|e| config_error("protocol", e.to_string())),
        }
    }

    pub fn params(&self, channel: ChannelModel) -> Result<ProtocolParams, CliError> {
        let params = self.raw_params(channel)?;
        params
            .validate()
            .map_err(|e| config_error("protocol", e.to_string()))?;
        Ok(params)
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(
            field,
            format!("must be non-negative and finite, got {v}"),
        ))
    }
}

fn unit(field: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(config_error(field, format!("must lie in [0, 1], got {v}")))
    }
}
