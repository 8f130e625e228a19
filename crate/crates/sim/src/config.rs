//! TOML-backed experiment configuration and the named presets.
//!
//! The scenario table mirrors [`ScenarioParams`] field for field so a config
//! file round-trips losslessly; the run table carries the trial budget, the
//! realization count, the master seed, and the thread count.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use riscf_core::montecarlo::MonteCarloConfig;
use riscf_core::scenario::{CorrelationModel, Region, ScenarioParams, SystemVariant};

/// Which parts of the network are active. String forms: `ris-cellfree`,
/// `cellfree`, `ris-cellfree-nolos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantConfig {
    /// Direct links plus the reflected path.
    RisCellfree,
    /// Direct links only.
    Cellfree,
    /// Reflected path only.
    RisCellfreeNolos,
}

impl VariantConfig {
    /// All variants, in report order.
    pub const ALL: [VariantConfig; 3] = [
        VariantConfig::RisCellfree,
        VariantConfig::Cellfree,
        VariantConfig::RisCellfreeNolos,
    ];

    /// The core-side variant switch.
    #[must_use]
    pub fn to_core(self) -> SystemVariant {
        match self {
            VariantConfig::RisCellfree => SystemVariant::RisCellFree,
            VariantConfig::Cellfree => SystemVariant::CellFree,
            VariantConfig::RisCellfreeNolos => SystemVariant::RisCellFreeNoLos,
        }
    }

    /// Stable label used in reports and CSV rows.
    #[must_use]
    pub fn as_str(self) -> &'static str {
        match self {
            VariantConfig::RisCellfree => "ris-cellfree",
            VariantConfig::Cellfree => "cellfree",
            VariantConfig::RisCellfreeNolos => "ris-cellfree-nolos",
        }
    }
}

impl fmt::Display for VariantConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantConfig {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ris-cellfree" => Ok(VariantConfig::RisCellfree),
            "cellfree" => Ok(VariantConfig::Cellfree),
            "ris-cellfree-nolos" => Ok(VariantConfig::RisCellfreeNolos),
            other => anyhow::bail!(
                "unknown variant {other:?}; expected ris-cellfree, cellfree, or ris-cellfree-nolos"
            ),
        }
    }
}

/// Element correlation model. String forms: `sinc`, `independent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationConfig {
    /// Sinc profile from the element geometry.
    Sinc,
    /// Independent elements.
    Independent,
}

impl CorrelationConfig {
    /// The core-side model switch.
    #[must_use]
    pub fn to_core(self) -> CorrelationModel {
        match self {
            CorrelationConfig::Sinc => CorrelationModel::Sinc,
            CorrelationConfig::Independent => CorrelationModel::Independent,
        }
    }

    /// Stable label used in reports.
    #[must_use]
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationConfig::Sinc => "sinc",
            CorrelationConfig::Independent => "independent",
        }
    }
}

/// Axis-aligned rectangle in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    /// Smallest x coordinate.
    pub x_min: f64,
    /// Largest x coordinate.
    pub x_max: f64,
    /// Smallest y coordinate.
    pub y_min: f64,
    /// Largest y coordinate.
    pub y_max: f64,
}

impl RegionConfig {
    fn to_core(self) -> Region {
        Region {
            x_min: self.x_min,
            x_max: self.x_max,
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }
}

/// Deployment description; see [`ScenarioParams`] for the semantics of each
/// field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    /// Number of APs.
    pub ap_count: usize,
    /// Number of users.
    pub user_count: usize,
    /// RIS grid width.
    pub ris_columns: usize,
    /// RIS grid height.
    pub ris_rows: usize,
    /// Horizontal element spacing in wavelengths.
    pub spacing_h_wavelengths: f64,
    /// Vertical element spacing in wavelengths.
    pub spacing_v_wavelengths: f64,
    /// Carrier frequency in GHz.
    pub carrier_ghz: f64,
    /// System bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Symbols per coherence interval.
    pub coherence_symbols: usize,
    /// Fraction of data symbols on the uplink.
    pub uplink_fraction: f64,
    /// Fraction of data symbols on the downlink.
    pub downlink_fraction: f64,
    /// Pilot sequence length.
    pub tau_p: usize,
    /// Per-user pilot power in mW.
    pub pilot_power_mw: f64,
    /// Per-user uplink data power in mW.
    pub uplink_power_mw: f64,
    /// Per-AP downlink budget in mW.
    pub downlink_power_mw: f64,
    /// Noise power in dBm.
    pub noise_dbm: f64,
    /// Side of the square service area in km.
    pub side_km: f64,
    /// Where APs may fall.
    pub ap_region: RegionConfig,
    /// Where users may fall.
    pub user_region: RegionConfig,
    /// AP antenna height in m.
    pub ap_height_m: f64,
    /// RIS center height in m.
    pub ris_height_m: f64,
    /// User antenna height in m.
    pub user_height_m: f64,
    /// Shadow fading standard deviation in dB.
    pub shadow_sigma_db: f64,
    /// Whether the RIS hops also see shadow fading.
    pub ris_shadow_fading: bool,
    /// Probability a direct link is unblocked.
    pub unblocked_probability: f64,
    /// Extra linear gain on every RIS hop; 1.0 keeps the raw path loss.
    pub ris_gain_scale: f64,
    /// Active system parts.
    pub variant: VariantConfig,
    /// Element correlation model.
    pub correlation_model: CorrelationConfig,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        from_core(&ScenarioParams::default())
    }
}

fn from_core(params: &ScenarioParams) -> ScenarioSection {
    ScenarioSection {
        ap_count: params.ap_count,
        user_count: params.user_count,
        ris_columns: params.ris_columns,
        ris_rows: params.ris_rows,
        spacing_h_wavelengths: params.spacing_h_wavelengths,
        spacing_v_wavelengths: params.spacing_v_wavelengths,
        carrier_ghz: params.carrier_ghz,
        bandwidth_hz: params.bandwidth_hz,
        coherence_symbols: params.coherence_symbols,
        uplink_fraction: params.uplink_fraction,
        downlink_fraction: params.downlink_fraction,
        tau_p: params.tau_p,
        pilot_power_mw: params.pilot_power_mw,
        uplink_power_mw: params.uplink_power_mw,
        downlink_power_mw: params.downlink_power_mw,
        noise_dbm: params.noise_dbm,
        side_km: params.side_km,
        ap_region: RegionConfig {
            x_min: params.ap_region.x_min,
            x_max: params.ap_region.x_max,
            y_min: params.ap_region.y_min,
            y_max: params.ap_region.y_max,
        },
        user_region: RegionConfig {
            x_min: params.user_region.x_min,
            x_max: params.user_region.x_max,
            y_min: params.user_region.y_min,
            y_max: params.user_region.y_max,
        },
        ap_height_m: params.ap_height_m,
        ris_height_m: params.ris_height_m,
        user_height_m: params.user_height_m,
        shadow_sigma_db: params.shadow_sigma_db,
        ris_shadow_fading: params.ris_shadow_fading,
        unblocked_probability: params.unblocked_probability,
        ris_gain_scale: params.ris_gain_scale,
        variant: match params.variant {
            SystemVariant::RisCellFree => VariantConfig::RisCellfree,
            SystemVariant::CellFree => VariantConfig::Cellfree,
            SystemVariant::RisCellFreeNoLos => VariantConfig::RisCellfreeNolos,
        },
        correlation_model: match params.correlation_model {
            CorrelationModel::Sinc => CorrelationConfig::Sinc,
            CorrelationModel::Independent => CorrelationConfig::Independent,
        },
    }
}

impl ScenarioSection {
    /// The core-side parameter set.
    #[must_use]
    pub fn to_params(&self) -> ScenarioParams {
        ScenarioParams {
            ap_count: self.ap_count,
            user_count: self.user_count,
            ris_columns: self.ris_columns,
            ris_rows: self.ris_rows,
            spacing_h_wavelengths: self.spacing_h_wavelengths,
            spacing_v_wavelengths: self.spacing_v_wavelengths,
            carrier_ghz: self.carrier_ghz,
            bandwidth_hz: self.bandwidth_hz,
            coherence_symbols: self.coherence_symbols,
            uplink_fraction: self.uplink_fraction,
            downlink_fraction: self.downlink_fraction,
            tau_p: self.tau_p,
            pilot_power_mw: self.pilot_power_mw,
            uplink_power_mw: self.uplink_power_mw,
            downlink_power_mw: self.downlink_power_mw,
            noise_dbm: self.noise_dbm,
            side_km: self.side_km,
            ap_region: self.ap_region.to_core(),
            user_region: self.user_region.to_core(),
            ap_height_m: self.ap_height_m,
            ris_height_m: self.ris_height_m,
            user_height_m: self.user_height_m,
            shadow_sigma_db: self.shadow_sigma_db,
            ris_shadow_fading: self.ris_shadow_fading,
            unblocked_probability: self.unblocked_probability,
            ris_gain_scale: self.ris_gain_scale,
            variant: self.variant.to_core(),
            correlation_model: self.correlation_model.to_core(),
        }
    }
}

/// Execution budget and determinism knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Monte Carlo trials per run.
    pub trials: u64,
    /// Geometry realizations per experiment point.
    pub realizations: usize,
    /// Master seed; every emitted number is a function of (config, seed).
    pub seed: u64,
    /// Worker threads; 0 picks the host default. Results do not depend on
    /// this.
    pub threads: usize,
    /// Batches for the batch-means confidence intervals.
    pub batches: usize,
    /// Trials per scheduling chunk.
    pub chunk: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trials: 50_000,
            realizations: 50,
            seed: 1,
            threads: 0,
            batches: 32,
            chunk: 2048,
        }
    }
}

impl RunSection {
    /// Monte Carlo settings for the given seed.
    #[must_use]
    pub fn monte_carlo(&self, seed: u64) -> MonteCarloConfig {
        MonteCarloConfig {
            trials: self.trials,
            seed,
            batches: self.batches,
            chunk: self.chunk,
        }
    }
}

/// One complete experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Deployment description.
    pub scenario: ScenarioSection,
    /// Execution budget.
    pub run: RunSection,
}

impl SimConfig {
    /// Fails when the budget is empty; scenario fields are checked when the
    /// first instance is drawn.
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.run.trials >= 1, "trials must be at least 1");
        anyhow::ensure!(
            self.run.realizations >= 1,
            "realizations must be at least 1"
        );
        Ok(())
    }

    /// Canonical TOML rendering.
    pub fn to_toml(&self) -> anyhow::Result<String> {
        toml::to_string_pretty(self).context("serializing configuration")
    }
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 4] = ["desk", "full", "validation", "tiny"];

/// Per-hop aperture gain pinned by the presets.
///
/// The distance law specifies how the reflected-path gain falls off but not
/// its absolute level, and at the raw level the two-hop product sits sixteen
/// orders of magnitude under the direct links, which would make every
/// surface-dependent effect invisible. This value lifts the cascaded path to
/// a few percent of direct-link strength for the preset deployments: enough
/// for surface effects to register, while open direct links stay dominant.
pub const PRESET_RIS_GAIN: f64 = 2e7;

/// A named configuration.
///
/// `desk` is the default working scale: half the APs, elements, and trials of
/// `full`. `full` is the reference deployment at its published size.
/// `validation` is the small dense setup used to cross-check the closed forms
/// against Monte Carlo (every direct link open, two pilots). `tiny` is a
/// seconds-scale smoke setup. All presets pin the surface aperture gain to
/// [`PRESET_RIS_GAIN`].
#[must_use]
pub fn preset(name: &str) -> Option<SimConfig> {
    let mut config = SimConfig::default();
    config.scenario.ris_gain_scale = PRESET_RIS_GAIN;
    match name {
        "desk" => {
            config.scenario.ap_count = 50;
            config.scenario.ris_rows = 15;
        }
        "full" => {
            config.run.trials = 100_000;
            config.run.realizations = 100;
        }
        "validation" => {
            config.scenario.ap_count = 20;
            config.scenario.user_count = 5;
            config.scenario.ris_columns = 8;
            config.scenario.ris_rows = 8;
            config.scenario.tau_p = 2;
            config.scenario.unblocked_probability = 1.0;
            config.run.trials = 100_000;
            config.run.realizations = 20;
        }
        "tiny" => {
            config.scenario.ap_count = 4;
            config.scenario.user_count = 3;
            config.scenario.ris_columns = 4;
            config.scenario.ris_rows = 4;
            config.scenario.tau_p = 2;
            config.scenario.unblocked_probability = 0.8;
            config.run.trials = 2_000;
            config.run.realizations = 3;
            config.run.batches = 8;
            config.run.chunk = 128;
        }
        _ => return None,
    }
    Some(config)
}

/// Reads a TOML configuration file.
pub fn load_config(path: &Path) -> anyhow::Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading configuration {}", path.display()))?;
    let config: SimConfig = toml::from_str(&text)
        .with_context(|| format!("parsing configuration {}", path.display()))?;
    config.validate()?;
    Ok(config)
}

/// Writes the canonical TOML rendering of a configuration.
pub fn save_config(config: &SimConfig, path: &Path) -> anyhow::Result<()> {
    std::fs::write(path, config.to_toml()?)
        .with_context(|| format!("writing configuration {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_deployment() {
        let config = SimConfig::default();
        let params = config.scenario.to_params();
        assert_eq!(params, ScenarioParams::default());
    }

    #[test]
    fn toml_round_trip_is_lossless() {
        for name in PRESET_NAMES {
            let config = preset(name).unwrap();
            let text = config.to_toml().unwrap();
            let back: SimConfig = toml::from_str(&text).unwrap();
            assert_eq!(back, config, "round trip changed preset {name}");
        }
    }

    #[test]
    fn presets_resolve_and_unknown_names_do_not() {
        for name in PRESET_NAMES {
            assert!(preset(name).is_some());
        }
        assert!(preset("warehouse").is_none());
    }

    #[test]
    fn desk_preset_halves_the_full_scale() {
        let desk = preset("desk").unwrap();
        let full = preset("full").unwrap();
        assert_eq!(desk.scenario.ap_count * 2, full.scenario.ap_count);
        let desk_elements = desk.scenario.ris_columns * desk.scenario.ris_rows;
        let full_elements = full.scenario.ris_columns * full.scenario.ris_rows;
        assert_eq!(desk_elements * 2, full_elements);
        assert_eq!(desk.run.trials * 2, full.run.trials);
    }

    #[test]
    fn variant_labels_parse_back() {
        for variant in VariantConfig::ALL {
            let parsed: VariantConfig = variant.as_str().parse().unwrap();
            assert_eq!(parsed, variant);
        }
        assert!("ris".parse::<VariantConfig>().is_err());
    }

    #[test]
    fn empty_budget_is_rejected() {
        let mut config = SimConfig::default();
        config.run.realizations = 0;
        assert!(config.validate().is_err());
    }
}
