//! Run configuration. One TOML file, one section per experiment; unknown keys
//! are rejected so typos do not silently fall back to defaults.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use wavetrain::adjoint::{GradientForm, LearningRate, MediumExperimentConfig, MediumLayout, TargetSpec};
use wavetrain::chip::{
    ChipExperimentConfig, ChipTarget, LossScenario, MeshStyle, MixerKind, Renormalization,
};
use wavetrain::helmholtz::SolverOptions;
use wavetrain::RngSeed;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Independent runs with seeds `seed, seed + 1, ...`.
    #[serde(default = "one")]
    pub replicates: usize,
    pub medium: Option<MediumSection>,
    #[serde(default)]
    pub solver: SolverSection,
    pub chip: Option<ChipSection>,
    #[serde(default)]
    pub gradcheck: GradcheckSection,
}

fn one() -> usize {
    1
}

/// `learning_rate = 0.3` or `learning_rate = "auto"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSetting {
    Fixed(f64),
    Auto,
}

impl Serialize for RateSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RateSetting::Fixed(eta) => s.serialize_f64(*eta),
            RateSetting::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for RateSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = RateSetting;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or \"auto\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<RateSetting, E> {
                Ok(RateSetting::Fixed(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<RateSetting, E> {
                Ok(RateSetting::Fixed(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<RateSetting, E> {
                if v == "auto" {
                    Ok(RateSetting::Auto)
                } else {
                    Err(E::invalid_value(serde::de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(Visitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    Random,
    Matched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientSetting {
    Full,
    Proportional,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    pub iterations: usize,
    pub learning_rate: RateSetting,
    #[serde(default = "yes")]
    pub linear_decay: bool,
    #[serde(default = "default_target_mode")]
    pub target: TargetMode,
    /// Entry scale for `random`, norm ratio for `matched`.
    #[serde(default)]
    pub target_scale: Option<f64>,
    #[serde(default = "default_gradient")]
    pub gradient: GradientSetting,
    pub spacing: Option<f64>,
    pub band_cells: Option<usize>,
    pub max_imag_factor: Option<f64>,
    pub emitters: Option<usize>,
    pub receivers: Option<usize>,
    pub transducer_pitch: Option<f64>,
    pub sigma: Option<f64>,
    pub trainable_width: Option<f64>,
    pub trainable_height: Option<f64>,
    pub band_margin: Option<f64>,
    pub gap: Option<f64>,
}

fn yes() -> bool {
    true
}

fn default_target_mode() -> TargetMode {
    TargetMode::Matched
}

fn default_gradient() -> GradientSetting {
    GradientSetting::Full
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tolerance")]
    pub rel_tolerance: f64,
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

fn default_tolerance() -> f64 {
    SolverOptions::default().rel_tolerance
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            rel_tolerance: default_tolerance(),
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSetting {
    Ideal,
    Uniform,
    UniformBidirectional,
    UnevenBidirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixerSetting {
    Butterfly,
    NearestNeighbor,
    RandomUnitary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenormSetting {
    None,
    PerSample,
    FixedFactor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChipSection {
    pub scenario: ScenarioSetting,
    pub iterations: usize,
    pub learning_rate: f64,
    #[serde(default = "default_channels")]
    pub channels: usize,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_mixer")]
    pub mixer: MixerSetting,
    #[serde(default)]
    pub sublayers: Option<usize>,
    #[serde(default = "default_retention")]
    pub power_retention: f64,
    #[serde(default = "default_uneven")]
    pub uneven_max_loss: f64,
    #[serde(default)]
    pub linear_decay: bool,
    #[serde(default)]
    pub truncate_phases: bool,
    #[serde(default = "default_renorm")]
    pub renormalization: RenormSetting,
    #[serde(default = "default_eval")]
    pub eval_samples: usize,
}

fn default_channels() -> usize {
    ChipExperimentConfig::default().channels
}
fn default_layers() -> usize {
    ChipExperimentConfig::default().layers
}
fn default_mixer() -> MixerSetting {
    MixerSetting::Butterfly
}
fn default_retention() -> f64 {
    ChipExperimentConfig::default().power_retention
}
fn default_uneven() -> f64 {
    ChipExperimentConfig::default().uneven_max_loss
}
fn default_renorm() -> RenormSetting {
    RenormSetting::PerSample
}
fn default_eval() -> usize {
    ChipExperimentConfig::default().eval_samples
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckSection {
    #[serde(default = "default_medium_step")]
    pub medium_rel_step: f64,
    #[serde(default = "default_medium_tol")]
    pub medium_solver_tolerance: f64,
    #[serde(default = "default_medium_pass")]
    pub medium_pass: f64,
    #[serde(default = "default_chip_channels")]
    pub chip_channels: usize,
    #[serde(default = "default_chip_layers")]
    pub chip_layers: usize,
    #[serde(default = "default_chip_samples")]
    pub chip_samples: usize,
    #[serde(default = "default_chip_step")]
    pub chip_step: f64,
    #[serde(default = "default_chip_pass")]
    pub chip_pass: f64,
    /// Negative control: flip the sign of the analytic gradient.
    #[serde(default)]
    pub corrupt_sign: bool,
}

fn default_medium_step() -> f64 {
    1e-5
}
fn default_medium_tol() -> f64 {
    1e-10
}
fn default_medium_pass() -> f64 {
    1e-4
}
fn default_chip_channels() -> usize {
    4
}
fn default_chip_layers() -> usize {
    3
}
fn default_chip_samples() -> usize {
    5
}
fn default_chip_step() -> f64 {
    1e-6
}
fn default_chip_pass() -> f64 {
    1e-6
}

impl Default for GradcheckSection {
    fn default() -> Self {
        toml::from_str("").expect("every gradcheck key has a default")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow!("{e}"))?;
        if cfg.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        Ok(cfg)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            rel_tolerance: self.solver.rel_tolerance,
            max_iterations: self.solver.max_iterations,
            ..SolverOptions::default()
        }
    }

    pub fn medium_experiment(&self, seed: u64) -> Result<MediumExperimentConfig> {
        let m = self.medium.as_ref().ok_or_else(|| anyhow!("missing section [medium]"))?;
        let d = MediumLayout::default();
        let layout = MediumLayout {
            spacing: m.spacing.unwrap_or(d.spacing),
            band_cells: m.band_cells.unwrap_or(d.band_cells),
            max_imag_factor: m.max_imag_factor.unwrap_or(d.max_imag_factor),
            emitters: m.emitters.unwrap_or(d.emitters),
            receivers: m.receivers.unwrap_or(d.receivers),
            transducer_pitch: m.transducer_pitch.unwrap_or(d.transducer_pitch),
            sigma: m.sigma.unwrap_or(d.sigma),
            trainable_width: m.trainable_width.unwrap_or(d.trainable_width),
            trainable_height: m.trainable_height.unwrap_or(d.trainable_height),
            band_margin: m.band_margin.unwrap_or(d.band_margin),
            gap: m.gap.unwrap_or(d.gap),
            ..d
        };
        let target = match (m.target, m.target_scale) {
            (TargetMode::Random, s) => TargetSpec::Random {
                scale: s.unwrap_or(1.0 / 25.0),
            },
            (TargetMode::Matched, s) => TargetSpec::Matched {
                factor: s.unwrap_or(1.0),
            },
        };
        Ok(MediumExperimentConfig {
            layout,
            target,
            iterations: m.iterations,
            learning_rate: match m.learning_rate {
                RateSetting::Fixed(eta) => LearningRate::Fixed(eta),
                RateSetting::Auto => LearningRate::Auto,
            },
            linear_decay: m.linear_decay,
            gradient_form: match m.gradient {
                GradientSetting::Full => GradientForm::Full,
                GradientSetting::Proportional => GradientForm::Proportional,
            },
            solver: self.solver(),
            seed: RngSeed(seed),
        })
    }

    pub fn chip_experiment(&self, seed: u64) -> Result<ChipExperimentConfig> {
        let c = self.chip.as_ref().ok_or_else(|| anyhow!("missing section [chip]"))?;
        let mixer = match c.mixer {
            MixerSetting::Butterfly => MixerKind::CouplerMesh {
                style: MeshStyle::Butterfly,
                sublayers: c.sublayers,
            },
            MixerSetting::NearestNeighbor => MixerKind::CouplerMesh {
                style: MeshStyle::NearestNeighbor,
                sublayers: c.sublayers,
            },
            MixerSetting::RandomUnitary => MixerKind::RandomUnitary,
        };
        let cfg = ChipExperimentConfig {
            channels: c.channels,
            layers: c.layers,
            mixer,
            scenario: match c.scenario {
                ScenarioSetting::Ideal => LossScenario::Ideal,
                ScenarioSetting::Uniform => LossScenario::Uniform,
                ScenarioSetting::UniformBidirectional => LossScenario::UniformBidirectional,
                ScenarioSetting::UnevenBidirectional => LossScenario::UnevenBidirectional,
            },
            power_retention: c.power_retention,
            uneven_max_loss: c.uneven_max_loss,
            target: ChipTarget::RandomUnitary,
            iterations: c.iterations,
            learning_rate: c.learning_rate,
            linear_decay: c.linear_decay,
            truncate_phases: c.truncate_phases,
            renormalization: match c.renormalization {
                RenormSetting::None => Renormalization::None,
                RenormSetting::PerSample => Renormalization::PerSample,
                RenormSetting::FixedFactor => Renormalization::FixedFactor,
            },
            eval_samples: c.eval_samples,
            seed: RngSeed(seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHIP: &str = "seed = 3\n[chip]\nscenario = \"ideal\"\niterations = 10\nlearning_rate = 0.2\n";

    #[test]
    fn minimal_chip_config_fills_defaults() {
        let cfg = RunConfig::parse(CHIP).unwrap();
        let chip = cfg.chip_experiment(cfg.seed).unwrap();
        assert_eq!(chip.channels, 8);
        assert_eq!(chip.seed, RngSeed(3));
        assert!(cfg.medium_experiment(3).is_err());
    }

    #[test]
    fn missing_key_is_named() {
        let err = RunConfig::parse("seed = 1\n[chip]\nscenario = \"ideal\"\nlearning_rate = 0.2\n").unwrap_err();
        assert!(format!("{err:#}").contains("iterations"), "{err:#}");
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = RunConfig::parse(&format!("{CHIP}chanels = 4\n")).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("chanels") && msg.contains("line 6"), "{msg}");
    }

    #[test]
    fn learning_rate_accepts_auto_or_number() {
        let base = "seed = 1\n[medium]\niterations = 5\n";
        let auto = RunConfig::parse(&format!("{base}learning_rate = \"auto\"\n")).unwrap();
        assert_eq!(auto.medium_experiment(1).unwrap().learning_rate, LearningRate::Auto);
        let fixed = RunConfig::parse(&format!("{base}learning_rate = 0.5\n")).unwrap();
        assert_eq!(fixed.medium_experiment(1).unwrap().learning_rate, LearningRate::Fixed(0.5));
        assert!(RunConfig::parse(&format!("{base}learning_rate = \"fast\"\n")).is_err());
    }
}
