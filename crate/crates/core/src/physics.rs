//! Resonant-cavity physics.
//!
//! Two retroreflectors with a gain medium in front of each form a distributed
//! laser cavity. The beam leaving the transmitter medium passes the splitter
//! (transmission `alpha`), crosses the free-space path (capture fraction
//! `delta`), is amplified by the receiver medium and returns over the same
//! path. Resonance persists while the round-trip product
//! `alpha * delta^2 * G_T * G_R` can reach unity.

use std::f64::consts::PI;

use thiserror::Error;

/// Speed of light in vacuum (m/s), exact SI value.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest residual `|round trip product - 1|` accepted from the solver.
pub const STEADY_STATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    /// Small-signal round-trip gain does not exceed the loss; no resonance.
    #[error("below lasing threshold: small-signal round-trip gain {small_signal_round_trip:.6e} < 1")]
    BelowThreshold { small_signal_round_trip: f64 },
    #[error("steady-state solver did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> PhysicsError {
    PhysicsError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<(), PhysicsError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

/// A pumped, homogeneously broadened gain medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainMedium {
    /// Small-signal power gain of one pass (> 1).
    pub g0: f64,
    /// Saturation intensity (W/m²).
    pub i_sat: f64,
    /// Line-center frequency (Hz).
    pub f0: f64,
    /// Gain bandwidth, full width at half maximum (Hz).
    pub fwhm: f64,
}

impl GainMedium {
    pub fn new(g0: f64, i_sat: f64, f0: f64, fwhm: f64) -> Result<Self, PhysicsError> {
        let medium = Self { g0, i_sat, f0, fwhm };
        medium.validate()?;
        Ok(medium)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !(self.g0.is_finite() && self.g0 > 1.0) {
            return Err(invalid("g0", format!("must be > 1, got {}", self.g0)));
        }
        require_positive("i_sat", self.i_sat)?;
        require_positive("f0", self.f0)?;
        require_positive("fwhm", self.fwhm)
    }

    /// Gain at zero intensity for a beam at frequency `f`.
    pub fn small_signal_gain(&self, f: f64) -> f64 {
        1.0 + (self.g0 - 1.0) * lorentzian_profile(f, self)
    }
}

/// Geometry and optics of one transmitter/receiver cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityLink {
    /// Retroreflector separation (m).
    pub distance: f64,
    /// Receiver aperture radius (m).
    pub aperture_radius: f64,
    /// Far-field divergence half-angle (rad).
    pub divergence: f64,
    /// Wavelength (m).
    pub wavelength: f64,
    /// Splitter transmission coefficient; `1 - alpha` goes to the detector.
    pub alpha: f64,
    pub medium_tx: GainMedium,
    pub medium_rx: GainMedium,
    /// Transmission power of the steady-state beam at the modulator (W).
    pub p_t: f64,
    /// Cross-section converting beam power to medium intensity (m²).
    pub beam_area: f64,
}

impl CavityLink {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.distance.is_finite() && self.distance >= 0.0) {
            return Err(invalid("distance", format!("must be >= 0, got {}", self.distance)));
        }
        require_positive("aperture_radius", self.aperture_radius)?;
        require_positive("divergence", self.divergence)?;
        require_positive("wavelength", self.wavelength)?;
        require_positive("p_t", self.p_t)?;
        require_positive("beam_area", self.beam_area)?;
        self.medium_tx.validate()?;
        self.medium_rx.validate()
    }

    /// Same link with the retroreflectors `distance` metres apart.
    pub fn at_distance(&self, distance: f64) -> Self {
        Self { distance, ..*self }
    }

    /// Power fraction reaching the photodetector branch per unit incident
    /// amplitude squared: `(1 - alpha) * delta`.
    pub fn detector_coupling(&self) -> f64 {
        (1.0 - self.alpha) * link_loss(self)
    }

    /// Round-trip product at intensity `i_tx` entering the transmitter
    /// medium, both media evaluated at beam frequency `f`.
    pub fn round_trip_product(&self, i_tx: f64, f: f64) -> f64 {
        let delta = link_loss(self);
        let g_t = saturated_gain_unchecked(i_tx, f, &self.medium_tx);
        let g_r = saturated_gain_unchecked(i_tx * self.alpha * delta * g_t, f, &self.medium_rx);
        self.alpha * delta * delta * g_t * g_r
    }

    /// Round-trip gain of a vanishing beam at frequency `f`.
    pub fn small_signal_round_trip(&self, f: f64) -> f64 {
        let delta = link_loss(self);
        self.alpha * delta * delta * self.medium_tx.small_signal_gain(f) * self.medium_rx.small_signal_gain(f)
    }
}

/// Normalised Lorentzian line shape, 1 at `f0` and 1/2 at `f0 ± fwhm/2`.
pub fn lorentzian_profile(f: f64, medium: &GainMedium) -> f64 {
    let x = (f - medium.f0) / (0.5 * medium.fwhm);
    1.0 / (1.0 + x * x)
}

/// Homogeneously saturated gain `1 + (g0 - 1) L(f) / (1 + I/I_sat)`.
pub fn saturated_gain(i_in: f64, f: f64, medium: &GainMedium) -> Result<f64, PhysicsError> {
    if !(i_in >= 0.0) {
        return Err(invalid("i_in", format!("intensity must be >= 0, got {i_in}")));
    }
    Ok(saturated_gain_unchecked(i_in, f, medium))
}

#[inline]
pub(crate) fn saturated_gain_unchecked(i_in: f64, f: f64, medium: &GainMedium) -> f64 {
    1.0 + (medium.g0 - 1.0) * lorentzian_profile(f, medium) / (1.0 + i_in / medium.i_sat)
}

/// Waist radius of a Gaussian beam with far-field half-angle `divergence`.
pub fn beam_waist(wavelength: f64, divergence: f64) -> f64 {
    wavelength / (PI * divergence)
}

/// Fraction of a Gaussian beam's power passing a centred circular aperture
/// of radius `aperture_radius` after propagating `distance` from its waist.
pub fn aperture_capture(aperture_radius: f64, wavelength: f64, divergence: f64, distance: f64) -> f64 {
    let w0 = beam_waist(wavelength, divergence);
    let spread = divergence * distance;
    let w2 = w0 * w0 + spread * spread;
    // -expm1 keeps precision when the capture fraction is tiny.
    -(-2.0 * aperture_radius * aperture_radius / w2).exp_m1()
}

/// One-way link loss `delta` of the cavity.
pub fn link_loss(link: &CavityLink) -> f64 {
    aperture_capture(link.aperture_radius, link.wavelength, link.divergence, link.distance)
}

/// Steady-state operating point of a cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Intensity entering the transmitter gain medium (W/m²).
    pub intensity: f64,
    pub gain_tx: f64,
    pub gain_rx: f64,
    /// Link loss at the solved distance.
    pub delta: f64,
    /// `|round trip product - 1|` at the returned intensity.
    pub residual: f64,
}

impl SteadyState {
    /// Constant link-gain coefficient `alpha * delta^2 * G_T * G_R`.
    pub fn link_coefficient(&self, alpha: f64) -> f64 {
        alpha * self.delta * self.delta * self.gain_tx * self.gain_rx
    }
}

/// How the receiver medium's intensity is tied to the transmitter's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Receiver medium sees `I * alpha * delta * G_T(I)`.
    #[default]
    Cascaded,
    /// Both media see the same intensity `I`.
    Symmetric,
}

/// Solves the round-trip balance on line center by bisection.
pub fn steady_state_intensity(link: &CavityLink) -> Result<SteadyState, PhysicsError> {
    solve_steady_state(link, Coupling::Cascaded)
}

pub fn solve_steady_state(link: &CavityLink, coupling: Coupling) -> Result<SteadyState, PhysicsError> {
    link.validate()?;
    let delta = link_loss(link);
    let (tx, rx) = (&link.medium_tx, &link.medium_rx);
    let gains = |i: f64| {
        let g_t = saturated_gain_unchecked(i, tx.f0, tx);
        let i_rx = match coupling {
            Coupling::Cascaded => i * link.alpha * delta * g_t,
            Coupling::Symmetric => i,
        };
        (g_t, saturated_gain_unchecked(i_rx, rx.f0, rx))
    };
    let product = |i: f64| {
        let (g_t, g_r) = gains(i);
        link.alpha * delta * delta * g_t * g_r
    };

    let small_signal = product(0.0);
    if !(small_signal > 1.0) {
        return Err(PhysicsError::BelowThreshold {
            small_signal_round_trip: small_signal,
        });
    }

    let mut lo = 0.0;
    let mut hi = tx.i_sat.max(rx.i_sat) * (tx.g0.max(rx.g0) - 1.0) * 1e3;
    let mut expansions = 0;
    while product(hi) >= 1.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 1000 || !hi.is_finite() {
            return Err(PhysicsError::NoConvergence {
                residual: product(lo) - 1.0,
            });
        }
    }

    // The product is strictly decreasing in I, so the bracket always holds
    // the root; iterate until the interval stops shrinking.
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if product(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (r_lo, r_hi) = ((product(lo) - 1.0).abs(), (product(hi) - 1.0).abs());
    let intensity = if r_lo <= r_hi { lo } else { hi };
    let residual = r_lo.min(r_hi);
    if residual > STEADY_STATE_TOLERANCE || !(intensity > 0.0) {
        return Err(PhysicsError::NoConvergence { residual });
    }
    let (gain_tx, gain_rx) = gains(intensity);
    Ok(SteadyState {
        intensity,
        gain_tx,
        gain_rx,
        delta,
        residual,
    })
}

/// Duration of one reflection round, `2d / c`.
pub fn round_trip_time(distance: f64) -> f64 {
    2.0 * distance / SPEED_OF_LIGHT
}

/// Energy released when an obstacle interrupts the beam: the beam power
/// integrated over at most one reflection round.
pub fn beam_break_energy(power: f64, distance: f64) -> f64 {
    power * round_trip_time(distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn medium() -> GainMedium {
        GainMedium::new(3.0, 1.2e7, 2.8e14, 1e11).unwrap()
    }

    pub(crate) fn link(distance: f64, g0: f64) -> CavityLink {
        let m = GainMedium::new(g0, 1.2e7, SPEED_OF_LIGHT / 1064e-9, 1e11).unwrap();
        CavityLink {
            distance,
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
    fn lorentzian_reference_points() {
        let m = medium();
        assert_eq!(lorentzian_profile(m.f0, &m), 1.0);
        assert_relative_eq!(lorentzian_profile(m.f0 + m.fwhm / 2.0, &m), 0.5, epsilon = 1e-12);
        assert_relative_eq!(lorentzian_profile(m.f0 - m.fwhm / 2.0, &m), 0.5, epsilon = 1e-12);
        assert_relative_eq!(lorentzian_profile(m.f0 + m.fwhm, &m), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn saturated_gain_reference_points() {
        let m = medium();
        assert_eq!(saturated_gain(0.0, m.f0, &m).unwrap(), 3.0);
        assert_relative_eq!(saturated_gain(m.i_sat, m.f0, &m).unwrap(), 1.0 + (3.0 - 1.0) / 2.0);
        assert_relative_eq!(saturated_gain(0.0, m.f0 + m.fwhm / 2.0, &m).unwrap(), 2.0, epsilon = 1e-12);
        assert!(saturated_gain(-1.0, m.f0, &m).is_err());
        assert!(saturated_gain(f64::NAN, m.f0, &m).is_err());
        let far = saturated_gain(1e30, m.f0, &m).unwrap();
        assert!((far - 1.0).abs() < 1e-20);
    }

    #[test]
    fn medium_validation() {
        assert!(GainMedium::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(GainMedium::new(2.0, 0.0, 1.0, 1.0).is_err());
        assert!(GainMedium::new(2.0, 1.0, 1.0, -1.0).is_err());
        let mut l = link(10.0, 10.0);
        l.alpha = 1.0;
        assert!(matches!(l.validate(), Err(PhysicsError::InvalidParameter { name: "alpha", .. })));
    }

    #[test]
    fn waist_and_capture_reference_values() {
        assert_relative_eq!(beam_waist(1064e-9, 1.2e-3), 2.822e-4, max_relative = 1e-3);
        let w0 = beam_waist(1064e-9, 1.2e-3);
        let full = aperture_capture(10.0 * w0, 1064e-9, 1.2e-3, 0.0);
        assert!((full - 1.0).abs() < 1e-8);
        // w(200 m)^2 = w0^2 + 0.24^2, delta = 1 - exp(-2 r^2 / w^2)
        let w2 = w0 * w0 + 0.24f64.powi(2);
        let hand = 1.0 - (-2.0 * 9e-6 / w2).exp();
        let delta = link_loss(&link(200.0, 10.0));
        assert_relative_eq!(delta, hand, max_relative = 1e-9);
        assert_relative_eq!(delta, 3.12e-4, max_relative = 2e-3);
    }

    #[test]
    fn below_threshold_is_reported() {
        let l = link(200.0, 1.0 + 1e-3);
        assert!(matches!(
            steady_state_intensity(&l),
            Err(PhysicsError::BelowThreshold { .. })
        ));
    }

    #[test]
    fn symmetric_solution_matches_closed_form() {
        let l = link(5.0, 4.0);
        let ss = solve_steady_state(&l, Coupling::Symmetric).unwrap();
        let delta = link_loss(&l);
        let g_req = 1.0 / (delta * l.alpha.sqrt());
        let closed = l.medium_tx.i_sat * ((l.medium_tx.g0 - 1.0) / (g_req - 1.0) - 1.0);
        assert_relative_eq!(ss.intensity, closed, max_relative = 1e-6);
    }

    #[test]
    fn steady_state_closes_the_round_trip() {
        let l = link(200.0, 1e4);
        let ss = steady_state_intensity(&l).unwrap();
        assert!(ss.intensity > 0.0);
        assert!((l.round_trip_product(ss.intensity, l.medium_tx.f0) - 1.0).abs() <= 1e-9);
        assert!((ss.link_coefficient(l.alpha) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn high_alpha_expands_bracket() {
        let mut l = link(0.0, 1.5);
        l.alpha = 0.9999;
        l.aperture_radius = 1.0;
        let ss = steady_state_intensity(&l).unwrap();
        assert!(ss.residual <= 1e-9);
    }

    #[test]
    fn timing_and_break_energy() {
        assert_relative_eq!(round_trip_time(10.0), 66.7e-9, max_relative = 1e-3);
        assert_eq!(round_trip_time(0.0), 0.0);
        assert_relative_eq!(round_trip_time(200.0), 1.334e-6, max_relative = 1e-3);
        assert_relative_eq!(beam_break_energy(1.0, 10.0), 66.7e-9, max_relative = 1e-3);
        assert_eq!(beam_break_energy(0.0, 10.0), 0.0);
        assert_relative_eq!(beam_break_energy(2.0, 5.0), beam_break_energy(1.0, 10.0), max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn gain_decreases_with_intensity(
            g0 in 1.01f64..1e5, i_sat in 1.0f64..1e9, detune in -3.0f64..3.0,
            a in 0.0f64..1e9, step in 1e-3f64..10.0,
        ) {
            let m = GainMedium::new(g0, i_sat, 3e14, 1e11).unwrap();
            let f = m.f0 + detune * m.fwhm;
            let lo = saturated_gain(a, f, &m).unwrap();
            let hi = saturated_gain(a + step * i_sat, f, &m).unwrap();
            prop_assert!(hi < lo);
        }

        #[test]
        fn lorentzian_is_symmetric(f0 in 1_000_000_000u64..500_000_000_000_000, offset in 0u64..1_000_000_000) {
            // Integer-valued frequencies keep f - f0 exact on both sides.
            let m = GainMedium::new(2.0, 1.0, f0 as f64, 1e11).unwrap();
            let above = (f0 + offset) as f64;
            let below = (f0 - offset) as f64;
            prop_assert_eq!(below, 2.0 * m.f0 - above);
            prop_assert_eq!(lorentzian_profile(above, &m), lorentzian_profile(below, &m));
        }

        #[test]
        fn link_loss_monotone_in_distance(
            r in 1e-4f64..0.1, theta in 1e-5f64..1e-2, lambda in 4e-7f64..2e-6,
            d in 0.0f64..1e4, extra in 0.0f64..1e3,
        ) {
            let near = aperture_capture(r, lambda, theta, d);
            let far = aperture_capture(r, lambda, theta, d + extra);
            prop_assert!(near > 0.0 && near <= 1.0);
            prop_assert!(far > 0.0 && far <= near);
        }

        #[test]
        fn break_energy_is_direct_arithmetic(p in 0.0f64..100.0, d in 0.0f64..1e4) {
            prop_assert_eq!(beam_break_energy(p, d), p * (2.0 * d / SPEED_OF_LIGHT));
        }
    }
}
