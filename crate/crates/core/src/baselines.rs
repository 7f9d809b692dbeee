//! Rate-vs-distance models for VLC, FOC and RBCom.
//!
//! All three use the same electrical SNR convention for intensity modulation
//! with square-law detection, `SNR = (eta * P_rx)^2 / sigma^2`, and the
//! Shannon rate `B * log2(1 + SNR)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::physics::{aperture_capture, link_loss, steady_state_intensity, CavityLink};
use crate::SimError;

/// Receiver noise: one-sided PSD in dBm/Hz over a bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub psd_dbm_per_hz: f64,
    pub bandwidth: f64,
}

impl NoiseModel {
    pub fn variance(&self) -> f64 {
        noise_variance(self)
    }
}

/// `sigma^2 = 10^((psd_dBm/Hz - 30) / 10) * B` in watts.
pub fn noise_variance(noise: &NoiseModel) -> f64 {
    dbm_to_watts(noise.psd_dbm_per_hz) * noise.bandwidth
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

fn shannon(bandwidth: f64, signal: f64, sigma2: f64) -> f64 {
    if signal <= 0.0 {
        return 0.0;
    }
    bandwidth * (signal * signal / sigma2).ln_1p() / std::f64::consts::LN_2
}

/// Line-of-sight LED link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VlcConfig {
    /// LED half-intensity radiation angle (deg).
    pub half_angle_deg: f64,
    /// Irradiation angle at the LED (deg).
    pub irradiation_deg: f64,
    /// Incidence angle at the photodiode (deg).
    pub incidence_deg: f64,
    /// Receiver field-of-view semi-angle (deg).
    pub fov_deg: f64,
    /// Photodiode area (m²).
    pub pd_area: f64,
    pub refractive_index: f64,
    pub filter_gain: f64,
    /// Optical-to-electrical conversion efficiency.
    pub responsivity: f64,
    pub bandwidth: f64,
    pub p_t: f64,
}

impl Default for VlcConfig {
    fn default() -> Self {
        Self {
            half_angle_deg: 60.0,
            irradiation_deg: 45.0,
            incidence_deg: 45.0,
            fov_deg: 90.0,
            pd_area: 4e-4,
            refractive_index: 1.5,
            filter_gain: 1.0,
            responsivity: 0.53,
            bandwidth: 1e8,
            p_t: 1.0,
        }
    }
}

/// Lambertian order of an LED with half-intensity angle `half_angle_deg`.
pub fn lambertian_order(half_angle_deg: f64) -> f64 {
    -std::f64::consts::LN_2 / half_angle_deg.to_radians().cos().ln()
}

/// Gain of an ideal non-imaging concentrator; zero outside the field of view.
pub fn concentrator_gain(refractive_index: f64, fov_deg: f64, incidence_deg: f64) -> f64 {
    if incidence_deg > fov_deg {
        return 0.0;
    }
    let s = fov_deg.to_radians().sin();
    refractive_index * refractive_index / (s * s)
}

/// Line-of-sight DC channel gain.
pub fn vlc_dc_gain(cfg: &VlcConfig, distance: f64) -> f64 {
    let g = concentrator_gain(cfg.refractive_index, cfg.fov_deg, cfg.incidence_deg);
    if g == 0.0 {
        return 0.0;
    }
    let m = lambertian_order(cfg.half_angle_deg);
    (m + 1.0) * cfg.pd_area / (2.0 * PI * distance * distance)
        * cfg.irradiation_deg.to_radians().cos().powf(m)
        * cfg.filter_gain
        * g
        * cfg.incidence_deg.to_radians().cos()
}

pub fn vlc_rate(cfg: &VlcConfig, noise: &NoiseModel, distance: f64) -> f64 {
    let p_rx = cfg.p_t * vlc_dc_gain(cfg, distance);
    shannon(cfg.bandwidth, cfg.responsivity * p_rx, noise_variance(noise))
}

/// Collimated laser link with an aperture receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocConfig {
    pub wavelength: f64,
    pub divergence: f64,
    pub rx_aperture_radius: f64,
    pub responsivity: f64,
    pub bandwidth: f64,
    pub p_t: f64,
}

impl Default for FocConfig {
    fn default() -> Self {
        Self {
            wavelength: 1064e-9,
            divergence: 1.2e-3,
            rx_aperture_radius: 3e-3,
            responsivity: 0.53,
            bandwidth: 1e8,
            p_t: 1.0,
        }
    }
}

pub fn foc_capture(cfg: &FocConfig, distance: f64) -> f64 {
    aperture_capture(cfg.rx_aperture_radius, cfg.wavelength, cfg.divergence, distance)
}

pub fn foc_rate(cfg: &FocConfig, noise: &NoiseModel, distance: f64) -> f64 {
    let p_rx = cfg.p_t * foc_capture(cfg, distance);
    shannon(cfg.bandwidth, cfg.responsivity * p_rx, noise_variance(noise))
}

/// RBCom receiver parameters that the cavity itself does not carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbcomRx {
    pub responsivity: f64,
    pub bandwidth: f64,
}

impl Default for RbcomRx {
    fn default() -> Self {
        Self {
            responsivity: 0.53,
            bandwidth: 1e8,
        }
    }
}

/// Optical power reaching the RBCom detector at `distance`, or `None` when
/// the cavity cannot lase there. The circulating beam is normalised so the
/// modulator emits `p_t`; the detector gets `(1 - alpha) * delta * p_t`.
pub fn rbcom_detected_power(link: &CavityLink, distance: f64) -> Option<f64> {
    let at = link.at_distance(distance);
    steady_state_intensity(&at).ok()?;
    Some((1.0 - at.alpha) * link_loss(&at) * at.p_t)
}

pub fn rbcom_rate(link: &CavityLink, rx: &RbcomRx, noise: &NoiseModel, distance: f64) -> f64 {
    match rbcom_detected_power(link, distance) {
        Some(p) => shannon(rx.bandwidth, rx.responsivity * p, noise_variance(noise)),
        None => 0.0,
    }
}

/// Everything `rate_sweep` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RateScenario {
    pub vlc: VlcConfig,
    pub foc: FocConfig,
    pub link: CavityLink,
    pub rbcom_rx: RbcomRx,
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub distance: f64,
    pub vlc_bps: f64,
    pub rbcom_bps: f64,
    pub foc_bps: f64,
}

/// CSV header of [`RateRow`]s.
pub const RATE_CSV_HEADER: &str = "distance_m,vlc_bps,rbcom_bps,foc_bps";

pub fn rate_sweep(scenario: &RateScenario, distances: &[f64]) -> Result<Vec<RateRow>, SimError> {
    if distances.is_empty() {
        return Err(SimError::Config("rate sweep needs at least one distance".into()));
    }
    if let Some(d) = distances.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
        return Err(SimError::Config(format!("distances must be > 0, got {d}")));
    }
    Ok(distances
        .par_iter()
        .map(|&d| RateRow {
            distance: d,
            vlc_bps: vlc_rate(&scenario.vlc, &scenario.noise, d),
            rbcom_bps: rbcom_rate(&scenario.link, &scenario.rbcom_rx, &scenario.noise, d),
            foc_bps: foc_rate(&scenario.foc, &scenario.noise, d),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{GainMedium, SPEED_OF_LIGHT};
    use approx::assert_relative_eq;

    fn noise() -> NoiseModel {
        NoiseModel {
            psd_dbm_per_hz: -170.0,
            bandwidth: 1e8,
        }
    }

    fn link() -> CavityLink {
        let m = GainMedium::new(1e4, 1.2e7, SPEED_OF_LIGHT / 1064e-9, 1e11).unwrap();
        CavityLink {
            distance: 200.0,
            aperture_radius: 3e-3,
            divergence: 1.2e-3,
            wavelength: 1064e-9,
            alpha: 0.9,
            medium_tx: m,
            medium_rx: m,
            p_t: 1.0,
            beam_area: PI * 9e-6,
        }
    }

    #[test]
    fn noise_variance_values() {
        assert_relative_eq!(noise_variance(&noise()), 1e-12, max_relative = 1e-12);
        let wide = NoiseModel { bandwidth: 2e8, ..noise() };
        assert_relative_eq!(noise_variance(&wide), 2e-12, max_relative = 1e-12);
        let silent = NoiseModel {
            psd_dbm_per_hz: f64::NEG_INFINITY,
            ..noise()
        };
        assert_eq!(noise_variance(&silent), 0.0);
        for dbm in [-170.0, -3.5, 0.0, 42.0] {
            assert!((watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
    }

    #[test]
    fn lambertian_and_concentrator() {
        assert_relative_eq!(lambertian_order(60.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(concentrator_gain(1.5, 90.0, 45.0), 2.25, max_relative = 1e-12);
        let cfg = VlcConfig {
            incidence_deg: 50.0,
            fov_deg: 40.0,
            ..VlcConfig::default()
        };
        assert_eq!(vlc_dc_gain(&cfg, 2.0), 0.0);
        assert_eq!(vlc_rate(&cfg, &noise(), 2.0), 0.0);
    }

    #[test]
    fn vlc_gain_is_inverse_square() {
        let cfg = VlcConfig::default();
        for d in [0.5, 1.0, 3.0, 17.0] {
            assert_relative_eq!(vlc_dc_gain(&cfg, d) / vlc_dc_gain(&cfg, 2.0 * d), 4.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn vlc_golden_value_at_two_metres() {
        // H = 2 A / (2 pi d^2) cos45 * 2.25 * cos45; SNR = (0.53 H)^2 / 1e-12
        let h = 2.0 * 4e-4 / (2.0 * PI * 4.0) * 0.5 * 2.25;
        let hand = 1e8 * (1.0 + (0.53 * h).powi(2) / 1e-12).log2();
        let rate = vlc_rate(&VlcConfig::default(), &noise(), 2.0);
        assert_relative_eq!(rate, hand, max_relative = 1e-12);
        assert_relative_eq!(rate, 8.5e8, max_relative = 0.01);
    }

    #[test]
    fn foc_limits() {
        let cfg = FocConfig::default();
        let near = foc_rate(&cfg, &noise(), 1e-3);
        let ideal = 1e8 * (1.0 + 0.53f64.powi(2) / 1e-12).log2();
        assert_relative_eq!(near, ideal, max_relative = 1e-9);
        assert_relative_eq!(foc_capture(&cfg, 200.0), 3.12e-4, max_relative = 2e-3);
    }

    #[test]
    fn rbcom_detector_gets_one_minus_alpha() {
        let l = link();
        let p = rbcom_detected_power(&l, 1.0).unwrap();
        let delta = link_loss(&l.at_distance(1.0));
        assert_relative_eq!(p / delta, 1.0 - 0.9, max_relative = 1e-12);
        // beyond threshold the cavity does not lase
        assert_eq!(rbcom_rate(&l, &RbcomRx::default(), &noise(), 1e5), 0.0);
    }

    #[test]
    fn sweep_shape() {
        let scenario = RateScenario {
            vlc: VlcConfig::default(),
            foc: FocConfig::default(),
            link: link(),
            rbcom_rx: RbcomRx::default(),
            noise: noise(),
        };
        assert_eq!(rate_sweep(&scenario, &[5.0]).unwrap().len(), 1);
        assert!(rate_sweep(&scenario, &[]).is_err());
        for row in rate_sweep(&scenario, &[5.0, 50.0, 200.0]).unwrap() {
            assert!(row.vlc_bps <= row.rbcom_bps && row.rbcom_bps <= row.foc_bps, "{row:?}");
        }
    }
}
