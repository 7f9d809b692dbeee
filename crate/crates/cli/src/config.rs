//! Flat `section.key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, lists are comma separated.
//! Every key is optional; omitted keys take the defaults listed in
//! [`ExperimentConfig::default`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rbcom_core::baselines::{FocConfig, NoiseModel, RateScenario, RbcomRx, VlcConfig};
use rbcom_core::framing::{build_alphabet, SymbolAlphabet};
use rbcom_core::physics::{CavityLink, GainMedium, SPEED_OF_LIGHT};
use rbcom_core::scheme_direct::GainMode;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    SteadyState,
    BerDirect,
    BerAdaptive,
    Mobility,
    Rates,
    MultiaccessPlan,
    Safety,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::SteadyState,
        Experiment::BerDirect,
        Experiment::BerAdaptive,
        Experiment::Mobility,
        Experiment::Rates,
        Experiment::MultiaccessPlan,
        Experiment::Safety,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SteadyState => "steady-state",
            Experiment::BerDirect => "ber-direct",
            Experiment::BerAdaptive => "ber-adaptive",
            Experiment::Mobility => "mobility",
            Experiment::Rates => "rates",
            Experiment::MultiaccessPlan => "multiaccess-plan",
            Experiment::Safety => "safety",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
            })
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,

    pub distance_m: f64,
    pub aperture_radius_m: f64,
    pub divergence_rad: f64,
    pub wavelength_m: f64,
    pub alpha: f64,
    pub tx_power_w: f64,
    pub beam_area_m2: Option<f64>,

    pub small_signal_gain: f64,
    pub saturation_intensity: f64,
    pub fwhm_hz: f64,
    pub center_frequency_hz: Option<f64>,

    pub modulation_order: usize,
    pub modulation_depth: f64,
    pub modulation_bandwidth_hz: f64,

    pub ss_length: Option<usize>,
    pub sync_threshold: f64,
    pub sync_slack: usize,

    pub noise_psd_dbm_hz: f64,
    pub noise_bandwidth_hz: f64,
    pub responsivity: f64,

    pub ber_snr_db: Vec<f64>,
    pub ber_frames: u64,
    pub gain_mode: GainMode,

    pub mobility_initial_distance_m: f64,
    pub mobility_speeds_mps: Vec<f64>,
    pub mobility_angle_start_deg: f64,
    pub mobility_angle_stop_deg: f64,
    pub mobility_angle_step_deg: f64,
    pub mobility_max_rounds: u64,
    pub mobility_compensation: bool,
    pub mobility_compensation_threshold_hz: Option<f64>,

    pub vlc_half_angle_deg: f64,
    pub vlc_irradiation_angle_deg: f64,
    pub vlc_incidence_angle_deg: Option<f64>,
    pub vlc_fov_semi_angle_deg: f64,
    pub vlc_pd_area_m2: f64,
    pub vlc_refractive_index: f64,
    pub vlc_filter_gain: f64,
    pub vlc_bandwidth_hz: f64,
    pub vlc_tx_power_w: f64,

    pub foc_wavelength_m: Option<f64>,
    pub foc_divergence_rad: Option<f64>,
    pub foc_aperture_radius_m: Option<f64>,
    pub foc_bandwidth_hz: f64,
    pub foc_tx_power_w: f64,

    pub rates_distance_start_m: f64,
    pub rates_distance_stop_m: f64,
    pub rates_distance_step_m: f64,

    pub multiaccess_distances_m: Vec<f64>,

    pub safety_power_w: f64,
    pub safety_distance_m: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 1,
            output_dir: None,
            distance_m: 200.0,
            aperture_radius_m: 3e-3,
            divergence_rad: 1.2e-3,
            wavelength_m: 1064e-9,
            alpha: 0.9,
            tx_power_w: 1.0,
            beam_area_m2: None,
            small_signal_gain: 1e4,
            saturation_intensity: 1.2e7,
            fwhm_hz: 1e11,
            center_frequency_hz: None,
            modulation_order: 2,
            modulation_depth: 0.1,
            modulation_bandwidth_hz: 1e8,
            ss_length: None,
            sync_threshold: 0.9,
            sync_slack: 3,
            noise_psd_dbm_hz: -170.0,
            noise_bandwidth_hz: 1e8,
            responsivity: 0.53,
            ber_snr_db: vec![20.0, 24.0, 28.0, 32.0, 36.0, 40.0, 44.0],
            ber_frames: 200,
            gain_mode: GainMode::Constant,
            mobility_initial_distance_m: 200.0,
            mobility_speeds_mps: vec![5.0, 10.0, 20.0],
            mobility_angle_start_deg: 0.0,
            mobility_angle_stop_deg: 180.0,
            mobility_angle_step_deg: 1.0,
            mobility_max_rounds: 1_000_000_000,
            mobility_compensation: false,
            mobility_compensation_threshold_hz: None,
            vlc_half_angle_deg: 60.0,
            vlc_irradiation_angle_deg: 45.0,
            vlc_incidence_angle_deg: None,
            vlc_fov_semi_angle_deg: 90.0,
            vlc_pd_area_m2: 4e-4,
            vlc_refractive_index: 1.5,
            vlc_filter_gain: 1.0,
            vlc_bandwidth_hz: 1e8,
            vlc_tx_power_w: 1.0,
            foc_wavelength_m: None,
            foc_divergence_rad: None,
            foc_aperture_radius_m: None,
            foc_bandwidth_hz: 1e8,
            foc_tx_power_w: 1.0,
            rates_distance_start_m: 1.0,
            rates_distance_stop_m: 200.0,
            rates_distance_step_m: 1.0,
            multiaccess_distances_m: vec![200.0, 150.0, 300.0],
            safety_power_w: 1.0,
            safety_distance_m: 10.0,
        }
    }
}

fn num<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| invalid(key, format!("cannot parse `{raw}`: {e}")))
}

fn list(key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num::<f64>(key, s))
        .collect()
}

fn boolean(key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(invalid(key, format!("expected true or false, got `{raw}`"))),
    }
}

/// Integer keys also accept exact float spellings such as `1e9`.
fn count(key: &str, raw: &str) -> Result<u64, ConfigError> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = num(key, raw)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(invalid(key, format!("expected a non-negative integer, got `{raw}`")))
    }
}

impl ExperimentConfig {
    /// Every key the parser accepts, in canonical order.
    pub const KEYS: &'static [&'static str] = &[
        "experiment",
        "seed",
        "output_dir",
        "cavity.distance_m",
        "cavity.aperture_radius_m",
        "cavity.divergence_rad",
        "cavity.wavelength_m",
        "cavity.alpha",
        "cavity.tx_power_w",
        "cavity.beam_area_m2",
        "medium.small_signal_gain",
        "medium.saturation_intensity_w_m2",
        "medium.fwhm_hz",
        "medium.center_frequency_hz",
        "modulation.order",
        "modulation.depth",
        "modulation.bandwidth_hz",
        "frame.ss_length",
        "frame.sync_threshold",
        "frame.sync_slack",
        "noise.psd_dbm_hz",
        "noise.bandwidth_hz",
        "detector.responsivity",
        "ber.snr_db",
        "ber.frames",
        "ber.gain_mode",
        "mobility.initial_distance_m",
        "mobility.speeds_mps",
        "mobility.angle_start_deg",
        "mobility.angle_stop_deg",
        "mobility.angle_step_deg",
        "mobility.max_rounds",
        "mobility.compensation",
        "mobility.compensation_threshold_hz",
        "vlc.half_angle_deg",
        "vlc.irradiation_angle_deg",
        "vlc.incidence_angle_deg",
        "vlc.fov_semi_angle_deg",
        "vlc.pd_area_m2",
        "vlc.refractive_index",
        "vlc.filter_gain",
        "vlc.bandwidth_hz",
        "vlc.tx_power_w",
        "foc.wavelength_m",
        "foc.divergence_rad",
        "foc.aperture_radius_m",
        "foc.bandwidth_hz",
        "foc.tx_power_w",
        "rates.distance_start_m",
        "rates.distance_stop_m",
        "rates.distance_step_m",
        "multiaccess.distances_m",
        "safety.power_w",
        "safety.distance_m",
    ];

    fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => self.experiment = Some(raw.parse().map_err(|e: String| invalid(key, e))?),
            "seed" => self.seed = num(key, raw)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(raw)),
            "cavity.distance_m" => self.distance_m = num(key, raw)?,
            "cavity.aperture_radius_m" => self.aperture_radius_m = num(key, raw)?,
            "cavity.divergence_rad" => self.divergence_rad = num(key, raw)?,
            "cavity.wavelength_m" => self.wavelength_m = num(key, raw)?,
            "cavity.alpha" => self.alpha = num(key, raw)?,
            "cavity.tx_power_w" => self.tx_power_w = num(key, raw)?,
            "cavity.beam_area_m2" => self.beam_area_m2 = Some(num(key, raw)?),
            "medium.small_signal_gain" => self.small_signal_gain = num(key, raw)?,
            "medium.saturation_intensity_w_m2" => self.saturation_intensity = num(key, raw)?,
            "medium.fwhm_hz" => self.fwhm_hz = num(key, raw)?,
            "medium.center_frequency_hz" => self.center_frequency_hz = Some(num(key, raw)?),
            "modulation.order" => self.modulation_order = count(key, raw)? as usize,
            "modulation.depth" => self.modulation_depth = num(key, raw)?,
            "modulation.bandwidth_hz" => self.modulation_bandwidth_hz = num(key, raw)?,
            "frame.ss_length" => self.ss_length = Some(count(key, raw)? as usize),
            "frame.sync_threshold" => self.sync_threshold = num(key, raw)?,
            "frame.sync_slack" => self.sync_slack = count(key, raw)? as usize,
            "noise.psd_dbm_hz" => self.noise_psd_dbm_hz = num(key, raw)?,
            "noise.bandwidth_hz" => self.noise_bandwidth_hz = num(key, raw)?,
            "detector.responsivity" => self.responsivity = num(key, raw)?,
            "ber.snr_db" => self.ber_snr_db = list(key, raw)?,
            "ber.frames" => self.ber_frames = count(key, raw)?,
            "ber.gain_mode" => {
                self.gain_mode = match raw {
                    "constant" => GainMode::Constant,
                    "saturable" => GainMode::Saturable,
                    _ => return Err(invalid(key, format!("expected `constant` or `saturable`, got `{raw}`"))),
                }
            }
            "mobility.initial_distance_m" => self.mobility_initial_distance_m = num(key, raw)?,
            "mobility.speeds_mps" => self.mobility_speeds_mps = list(key, raw)?,
            "mobility.angle_start_deg" => self.mobility_angle_start_deg = num(key, raw)?,
            "mobility.angle_stop_deg" => self.mobility_angle_stop_deg = num(key, raw)?,
            "mobility.angle_step_deg" => self.mobility_angle_step_deg = num(key, raw)?,
            "mobility.max_rounds" => self.mobility_max_rounds = count(key, raw)?,
            "mobility.compensation" => self.mobility_compensation = boolean(key, raw)?,
            "mobility.compensation_threshold_hz" => self.mobility_compensation_threshold_hz = Some(num(key, raw)?),
            "vlc.half_angle_deg" => self.vlc_half_angle_deg = num(key, raw)?,
            "vlc.irradiation_angle_deg" => self.vlc_irradiation_angle_deg = num(key, raw)?,
            "vlc.incidence_angle_deg" => self.vlc_incidence_angle_deg = Some(num(key, raw)?),
            "vlc.fov_semi_angle_deg" => self.vlc_fov_semi_angle_deg = num(key, raw)?,
            "vlc.pd_area_m2" => self.vlc_pd_area_m2 = num(key, raw)?,
            "vlc.refractive_index" => self.vlc_refractive_index = num(key, raw)?,
            "vlc.filter_gain" => self.vlc_filter_gain = num(key, raw)?,
            "vlc.bandwidth_hz" => self.vlc_bandwidth_hz = num(key, raw)?,
            "vlc.tx_power_w" => self.vlc_tx_power_w = num(key, raw)?,
            "foc.wavelength_m" => self.foc_wavelength_m = Some(num(key, raw)?),
            "foc.divergence_rad" => self.foc_divergence_rad = Some(num(key, raw)?),
            "foc.aperture_radius_m" => self.foc_aperture_radius_m = Some(num(key, raw)?),
            "foc.bandwidth_hz" => self.foc_bandwidth_hz = num(key, raw)?,
            "foc.tx_power_w" => self.foc_tx_power_w = num(key, raw)?,
            "rates.distance_start_m" => self.rates_distance_start_m = num(key, raw)?,
            "rates.distance_stop_m" => self.rates_distance_stop_m = num(key, raw)?,
            "rates.distance_step_m" => self.rates_distance_step_m = num(key, raw)?,
            "multiaccess.distances_m" => self.multiaccess_distances_m = list(key, raw)?,
            "safety.power_w" => self.safety_power_w = num(key, raw)?,
            "safety.distance_m" => self.safety_distance_m = num(key, raw)?,
            _ => unreachable!("key table and setter out of sync: {key}"),
        }
        Ok(())
    }

    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let known = Self::KEYS.iter().find(|k| **k == key).ok_or_else(|| ConfigError::Parse {
                line: line_no,
                message: format!("unknown key `{key}`"),
            })?;
            if value.is_empty() {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: format!("missing value for `{key}`"),
                });
            }
            if let Some(first) = seen.insert(known, line_no) {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: format!("duplicate key `{key}` (first set on line {first})"),
                });
            }
            config.set(key, value).map_err(|e| match e {
                ConfigError::Invalid { message, .. } => ConfigError::Parse {
                    line: line_no,
                    message: format!("invalid value for `{key}`: {message}"),
                },
                other => other,
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Checks every parameter before any simulation runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("must be finite and > 0, got {v}")))
            }
        }
        fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("must be finite and >= 0, got {v}")))
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("cavity.alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        positive("cavity.distance_m", self.distance_m)?;
        positive("cavity.aperture_radius_m", self.aperture_radius_m)?;
        positive("cavity.divergence_rad", self.divergence_rad)?;
        positive("cavity.wavelength_m", self.wavelength_m)?;
        positive("cavity.tx_power_w", self.tx_power_w)?;
        if let Some(a) = self.beam_area_m2 {
            positive("cavity.beam_area_m2", a)?;
        }
        if !(self.small_signal_gain.is_finite() && self.small_signal_gain > 1.0) {
            return Err(invalid("medium.small_signal_gain", format!("must be > 1, got {}", self.small_signal_gain)));
        }
        positive("medium.saturation_intensity_w_m2", self.saturation_intensity)?;
        positive("medium.fwhm_hz", self.fwhm_hz)?;
        if let Some(f) = self.center_frequency_hz {
            positive("medium.center_frequency_hz", f)?;
        }
        if self.modulation_order < 2 {
            return Err(invalid("modulation.order", format!("must be >= 2, got {}", self.modulation_order)));
        }
        if !(self.modulation_depth > 0.0 && self.modulation_depth < 1.0) {
            return Err(invalid("modulation.depth", format!("must lie in (0, 1), got {}", self.modulation_depth)));
        }
        positive("modulation.bandwidth_hz", self.modulation_bandwidth_hz)?;
        if let Some(l) = self.ss_length {
            if l < 4 {
                return Err(invalid("frame.ss_length", format!("must be >= 4, got {l}")));
            }
        }
        if !(self.sync_threshold > 0.0 && self.sync_threshold < 1.0) {
            return Err(invalid("frame.sync_threshold", format!("must lie in (0, 1), got {}", self.sync_threshold)));
        }
        if self.noise_psd_dbm_hz.is_nan() || self.noise_psd_dbm_hz == f64::INFINITY {
            return Err(invalid("noise.psd_dbm_hz", "must be a number"));
        }
        positive("noise.bandwidth_hz", self.noise_bandwidth_hz)?;
        positive("detector.responsivity", self.responsivity)?;
        if self.ber_snr_db.is_empty() || self.ber_snr_db.iter().any(|v| !v.is_finite()) {
            return Err(invalid("ber.snr_db", "needs at least one finite value"));
        }
        if self.ber_frames == 0 {
            return Err(invalid("ber.frames", "must be >= 1"));
        }
        positive("mobility.initial_distance_m", self.mobility_initial_distance_m)?;
        if self.mobility_speeds_mps.is_empty() {
            return Err(invalid("mobility.speeds_mps", "needs at least one speed"));
        }
        for &v in &self.mobility_speeds_mps {
            non_negative("mobility.speeds_mps", v)?;
        }
        let (a0, a1) = (self.mobility_angle_start_deg, self.mobility_angle_stop_deg);
        if !(0.0..=180.0).contains(&a0) {
            return Err(invalid("mobility.angle_start_deg", format!("must lie in [0, 180], got {a0}")));
        }
        if !(a0..=180.0).contains(&a1) {
            return Err(invalid("mobility.angle_stop_deg", format!("must lie in [start, 180], got {a1}")));
        }
        positive("mobility.angle_step_deg", self.mobility_angle_step_deg)?;
        if let Some(t) = self.mobility_compensation_threshold_hz {
            positive("mobility.compensation_threshold_hz", t)?;
        }
        positive("vlc.half_angle_deg", self.vlc_half_angle_deg)?;
        if self.vlc_half_angle_deg >= 90.0 {
            return Err(invalid("vlc.half_angle_deg", "must be < 90"));
        }
        non_negative("vlc.irradiation_angle_deg", self.vlc_irradiation_angle_deg)?;
        if let Some(a) = self.vlc_incidence_angle_deg {
            non_negative("vlc.incidence_angle_deg", a)?;
        }
        positive("vlc.fov_semi_angle_deg", self.vlc_fov_semi_angle_deg)?;
        positive("vlc.pd_area_m2", self.vlc_pd_area_m2)?;
        positive("vlc.refractive_index", self.vlc_refractive_index)?;
        positive("vlc.filter_gain", self.vlc_filter_gain)?;
        positive("vlc.bandwidth_hz", self.vlc_bandwidth_hz)?;
        positive("vlc.tx_power_w", self.vlc_tx_power_w)?;
        for (key, v) in [
            ("foc.wavelength_m", self.foc_wavelength_m),
            ("foc.divergence_rad", self.foc_divergence_rad),
            ("foc.aperture_radius_m", self.foc_aperture_radius_m),
        ] {
            if let Some(v) = v {
                positive(key, v)?;
            }
        }
        positive("foc.bandwidth_hz", self.foc_bandwidth_hz)?;
        positive("foc.tx_power_w", self.foc_tx_power_w)?;
        positive("rates.distance_start_m", self.rates_distance_start_m)?;
        if !(self.rates_distance_stop_m >= self.rates_distance_start_m && self.rates_distance_stop_m.is_finite()) {
            return Err(invalid("rates.distance_stop_m", "must be finite and >= rates.distance_start_m"));
        }
        positive("rates.distance_step_m", self.rates_distance_step_m)?;
        if self.multiaccess_distances_m.is_empty() {
            return Err(invalid("multiaccess.distances_m", "needs at least one user"));
        }
        for &d in &self.multiaccess_distances_m {
            positive("multiaccess.distances_m", d)?;
        }
        non_negative("safety.power_w", self.safety_power_w)?;
        non_negative("safety.distance_m", self.safety_distance_m)?;
        Ok(())
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency_hz.unwrap_or(SPEED_OF_LIGHT / self.wavelength_m)
    }

    pub fn medium(&self) -> GainMedium {
        GainMedium {
            g0: self.small_signal_gain,
            i_sat: self.saturation_intensity,
            f0: self.center_frequency(),
            fwhm: self.fwhm_hz,
        }
    }

    pub fn link(&self) -> CavityLink {
        let medium = self.medium();
        CavityLink {
            distance: self.distance_m,
            aperture_radius: self.aperture_radius_m,
            divergence: self.divergence_rad,
            wavelength: self.wavelength_m,
            alpha: self.alpha,
            medium_tx: medium,
            medium_rx: medium,
            p_t: self.tx_power_w,
            beam_area: self
                .beam_area_m2
                .unwrap_or(std::f64::consts::PI * self.aperture_radius_m * self.aperture_radius_m),
        }
    }

    pub fn alphabet(&self) -> SymbolAlphabet {
        build_alphabet(self.modulation_order, self.modulation_depth).expect("validated alphabet")
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            psd_dbm_per_hz: self.noise_psd_dbm_hz,
            bandwidth: self.noise_bandwidth_hz,
        }
    }

    pub fn rate_scenario(&self) -> RateScenario {
        RateScenario {
            vlc: VlcConfig {
                half_angle_deg: self.vlc_half_angle_deg,
                irradiation_deg: self.vlc_irradiation_angle_deg,
                incidence_deg: self.vlc_incidence_angle_deg.unwrap_or(self.vlc_irradiation_angle_deg),
                fov_deg: self.vlc_fov_semi_angle_deg,
                pd_area: self.vlc_pd_area_m2,
                refractive_index: self.vlc_refractive_index,
                filter_gain: self.vlc_filter_gain,
                responsivity: self.responsivity,
                bandwidth: self.vlc_bandwidth_hz,
                p_t: self.vlc_tx_power_w,
            },
            foc: FocConfig {
                wavelength: self.foc_wavelength_m.unwrap_or(self.wavelength_m),
                divergence: self.foc_divergence_rad.unwrap_or(self.divergence_rad),
                rx_aperture_radius: self.foc_aperture_radius_m.unwrap_or(self.aperture_radius_m),
                responsivity: self.responsivity,
                bandwidth: self.foc_bandwidth_hz,
                p_t: self.foc_tx_power_w,
            },
            link: self.link(),
            rbcom_rx: RbcomRx {
                responsivity: self.responsivity,
                bandwidth: self.modulation_bandwidth_hz,
            },
            noise: self.noise(),
        }
    }

    /// Grid `start, start + step, ...` up to `stop` (inclusive within 1e-9 step).
    pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
        let n = ((stop - start) / step + 1e-9).floor() as u64;
        (0..=n).map(|i| start + i as f64 * step).collect()
    }

    pub fn mobility_angles_deg(&self) -> Vec<f64> {
        Self::grid(
            self.mobility_angle_start_deg,
            self.mobility_angle_stop_deg,
            self.mobility_angle_step_deg,
        )
    }

    pub fn rate_distances(&self) -> Vec<f64> {
        Self::grid(self.rates_distance_start_m, self.rates_distance_stop_m, self.rates_distance_step_m)
    }

    /// Canonical `key = value` rendering of every resolved key. Parsing this
    /// text yields the same configuration.
    pub fn canonical(&self) -> String {
        fn opt<T: std::fmt::Debug>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(|x| format!("{x:?}"))
        }
        fn join(v: &[f64]) -> String {
            v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
        }
        let gain_mode = match self.gain_mode {
            GainMode::Constant => "constant",
            GainMode::Saturable => "saturable",
        };
        let entries: Vec<(&str, Option<String>)> = vec![
            ("experiment", self.experiment.map(|e| e.name().to_string())),
            ("seed", Some(self.seed.to_string())),
            ("output_dir", self.output_dir.as_ref().map(|p| p.display().to_string())),
            ("cavity.distance_m", Some(format!("{:?}", self.distance_m))),
            ("cavity.aperture_radius_m", Some(format!("{:?}", self.aperture_radius_m))),
            ("cavity.divergence_rad", Some(format!("{:?}", self.divergence_rad))),
            ("cavity.wavelength_m", Some(format!("{:?}", self.wavelength_m))),
            ("cavity.alpha", Some(format!("{:?}", self.alpha))),
            ("cavity.tx_power_w", Some(format!("{:?}", self.tx_power_w))),
            ("cavity.beam_area_m2", opt(&self.beam_area_m2)),
            ("medium.small_signal_gain", Some(format!("{:?}", self.small_signal_gain))),
            ("medium.saturation_intensity_w_m2", Some(format!("{:?}", self.saturation_intensity))),
            ("medium.fwhm_hz", Some(format!("{:?}", self.fwhm_hz))),
            ("medium.center_frequency_hz", opt(&self.center_frequency_hz)),
            ("modulation.order", Some(self.modulation_order.to_string())),
            ("modulation.depth", Some(format!("{:?}", self.modulation_depth))),
            ("modulation.bandwidth_hz", Some(format!("{:?}", self.modulation_bandwidth_hz))),
            ("frame.ss_length", opt(&self.ss_length)),
            ("frame.sync_threshold", Some(format!("{:?}", self.sync_threshold))),
            ("frame.sync_slack", Some(self.sync_slack.to_string())),
            ("noise.psd_dbm_hz", Some(format!("{:?}", self.noise_psd_dbm_hz))),
            ("noise.bandwidth_hz", Some(format!("{:?}", self.noise_bandwidth_hz))),
            ("detector.responsivity", Some(format!("{:?}", self.responsivity))),
            ("ber.snr_db", Some(join(&self.ber_snr_db))),
            ("ber.frames", Some(self.ber_frames.to_string())),
            ("ber.gain_mode", Some(gain_mode.to_string())),
            ("mobility.initial_distance_m", Some(format!("{:?}", self.mobility_initial_distance_m))),
            ("mobility.speeds_mps", Some(join(&self.mobility_speeds_mps))),
            ("mobility.angle_start_deg", Some(format!("{:?}", self.mobility_angle_start_deg))),
            ("mobility.angle_stop_deg", Some(format!("{:?}", self.mobility_angle_stop_deg))),
            ("mobility.angle_step_deg", Some(format!("{:?}", self.mobility_angle_step_deg))),
            ("mobility.max_rounds", Some(self.mobility_max_rounds.to_string())),
            ("mobility.compensation", Some(self.mobility_compensation.to_string())),
            ("mobility.compensation_threshold_hz", opt(&self.mobility_compensation_threshold_hz)),
            ("vlc.half_angle_deg", Some(format!("{:?}", self.vlc_half_angle_deg))),
            ("vlc.irradiation_angle_deg", Some(format!("{:?}", self.vlc_irradiation_angle_deg))),
            ("vlc.incidence_angle_deg", opt(&self.vlc_incidence_angle_deg)),
            ("vlc.fov_semi_angle_deg", Some(format!("{:?}", self.vlc_fov_semi_angle_deg))),
            ("vlc.pd_area_m2", Some(format!("{:?}", self.vlc_pd_area_m2))),
            ("vlc.refractive_index", Some(format!("{:?}", self.vlc_refractive_index))),
            ("vlc.filter_gain", Some(format!("{:?}", self.vlc_filter_gain))),
            ("vlc.bandwidth_hz", Some(format!("{:?}", self.vlc_bandwidth_hz))),
            ("vlc.tx_power_w", Some(format!("{:?}", self.vlc_tx_power_w))),
            ("foc.wavelength_m", opt(&self.foc_wavelength_m)),
            ("foc.divergence_rad", opt(&self.foc_divergence_rad)),
            ("foc.aperture_radius_m", opt(&self.foc_aperture_radius_m)),
            ("foc.bandwidth_hz", Some(format!("{:?}", self.foc_bandwidth_hz))),
            ("foc.tx_power_w", Some(format!("{:?}", self.foc_tx_power_w))),
            ("rates.distance_start_m", Some(format!("{:?}", self.rates_distance_start_m))),
            ("rates.distance_stop_m", Some(format!("{:?}", self.rates_distance_stop_m))),
            ("rates.distance_step_m", Some(format!("{:?}", self.rates_distance_step_m))),
            ("multiaccess.distances_m", Some(join(&self.multiaccess_distances_m))),
            ("safety.power_w", Some(format!("{:?}", self.safety_power_w))),
            ("safety.distance_m", Some(format!("{:?}", self.safety_distance_m))),
        ];
        debug_assert_eq!(entries.len(), Self::KEYS.len());
        let mut out = String::new();
        for (key, value) in entries {
            match value {
                Some(v) => writeln!(out, "{key} = {v}").unwrap(),
                None => writeln!(out, "# {key} = (derived)").unwrap(),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = ExperimentConfig::parse("experiment = safety\n").unwrap();
        assert_eq!(c.experiment, Some(Experiment::Safety));
        assert_eq!(c.wavelength_m, 1064e-9);
        assert_eq!(c.divergence_rad, 1.2e-3);
        assert_eq!(c.aperture_radius_m, 3e-3);
        assert_eq!(c.saturation_intensity, 1.2e7);
        assert_eq!(c.alpha, 0.9);
        assert_eq!(c.modulation_bandwidth_hz, 1e8);
        assert_eq!(c.tx_power_w, 1.0);
        assert_eq!(c.noise_psd_dbm_hz, -170.0);
        assert_eq!(c.noise_bandwidth_hz, 1e8);
    }

    #[test]
    fn out_of_range_alpha_names_the_key() {
        let err = ExperimentConfig::parse("cavity.alpha = 1.5").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "cavity.alpha"), "{err}");
        assert!(err.to_string().contains("alpha"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let err = ExperimentConfig::parse("# header\nseed = 3\nfoo = 1\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Parse {
                line: 3,
                message: "unknown key `foo`".into()
            }
        );
    }

    #[test]
    fn syntax_and_value_errors_carry_lines() {
        assert!(matches!(
            ExperimentConfig::parse("seed 3"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("\nseed = x"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("seed = 1\nseed = 2"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("experiment = warp"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn lists_and_counts() {
        let c = ExperimentConfig::parse("mobility.speeds_mps = 1, 2.5 ,3\nmobility.max_rounds = 1e6\n").unwrap();
        assert_eq!(c.mobility_speeds_mps, vec![1.0, 2.5, 3.0]);
        assert_eq!(c.mobility_max_rounds, 1_000_000);
        assert!(ExperimentConfig::parse("mobility.max_rounds = 1.5").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let c = ExperimentConfig::parse("experiment = rates\nseed = 9\nber.gain_mode = saturable\nvlc.incidence_angle_deg = 30").unwrap();
        assert_eq!(ExperimentConfig::parse(&c.canonical()).unwrap(), c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&d.canonical()).unwrap(), d);
    }

    #[test]
    fn grids_include_the_stop_value() {
        assert_eq!(ExperimentConfig::grid(0.0, 180.0, 1.0).len(), 181);
        assert_eq!(ExperimentConfig::grid(1.0, 200.0, 1.0).last(), Some(&200.0));
        assert_eq!(ExperimentConfig::grid(5.0, 5.0, 1.0), vec![5.0]);
    }
}
