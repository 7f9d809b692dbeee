//! Adaptive modulation with pump compensation and energy detection.
//!
//! The transmitter pump is driven so that the beam entering the modulator is
//! always back at its steady-state intensity, whatever echo came back from
//! the receiver. Each frame is then modulated as `s[n] = sqrt(P_t) * x[n]`
//! and the link reduces to a memoryless AWGN channel.

use rand::Rng;
use thiserror::Error;

use crate::channel::photodetect;
use crate::framing::{default_ss_len, detect_ss, frame_length, make_ss, SymbolAlphabet};
use crate::physics::{link_loss, saturated_gain_unchecked, steady_state_intensity, CavityLink, GainMedium};
use crate::rng::{frame_rng, Purpose};
use crate::stats::{bits_per_symbol, ErrorCounts};
use crate::SimError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdaptiveError {
    #[error("echo intensity must be > 0 (got {0}); there is no beam to amplify")]
    NoEcho(f64),
    #[error("target intensity must be > 0, got {0}")]
    InvalidTarget(f64),
}

/// Per-link state of the adaptive scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveLinkState {
    /// Steady-state intensity held at the modulator input (W/m²).
    pub i_target: f64,
    pub sigma2: f64,
    pub alphabet: SymbolAlphabet,
}

/// Gain command for the transmitter medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensation {
    /// Gain actually applied, clamped to `[1, ceiling]`.
    pub gain: f64,
    /// Gain that would restore the target exactly.
    pub required: f64,
    /// Largest gain available at full pump for this echo.
    pub ceiling: f64,
    pub feasible: bool,
}

/// Gain the pump must provide to lift `i_echo` back to `i_target`.
pub fn pump_compensation(i_echo: f64, i_target: f64, medium: &GainMedium) -> Result<Compensation, AdaptiveError> {
    if !(i_echo > 0.0) || !i_echo.is_finite() {
        return Err(AdaptiveError::NoEcho(i_echo));
    }
    if !(i_target > 0.0) || !i_target.is_finite() {
        return Err(AdaptiveError::InvalidTarget(i_target));
    }
    let required = i_target / i_echo;
    let ceiling = saturated_gain_unchecked(i_echo, medium.f0, medium);
    let feasible = (1.0..=ceiling).contains(&required);
    Ok(Compensation {
        gain: required.clamp(1.0, ceiling),
        required,
        ceiling,
        feasible,
    })
}

/// `s[n] = sqrt(P_t) * x[n]`, identical for every frame.
pub fn modulate_adaptive(x_frame: &[f64], p_t: f64) -> Vec<f64> {
    let amp = p_t.sqrt();
    x_frame.iter().map(|&x| amp * x).collect()
}

/// Same channel law as the direct scheme.
pub fn receive_adaptive<R: Rng + ?Sized>(s_frame: &[f64], link: &CavityLink, sigma2: f64, rng: &mut R) -> Vec<f64> {
    photodetect(s_frame, link.detector_coupling(), sigma2, rng)
}

/// Energy detection: nearest level to `y / (sqrt(coupling) * sqrt(P_t))`.
pub fn demodulate_adaptive(y_frame: &[f64], coupling: f64, p_t: f64, alphabet: &SymbolAlphabet) -> Vec<usize> {
    slice_scaled(y_frame, (coupling * p_t).sqrt(), alphabet)
}

/// Nearest level to `y / reference` for each sample.
pub fn slice_scaled(y_frame: &[f64], reference: f64, alphabet: &SymbolAlphabet) -> Vec<usize> {
    y_frame.iter().map(|&y| alphabet.slice(y / reference)).collect()
}

/// Echo intensity arriving back at the transmitter medium after a frame of
/// mean modulated power `mean_power` made the round trip.
pub fn echo_intensity(link: &CavityLink, mean_power: f64) -> f64 {
    let delta = link_loss(link);
    let i_out = mean_power / link.beam_area;
    let rx = &link.medium_rx;
    let g_r = saturated_gain_unchecked(link.alpha * delta * i_out, rx.f0, rx);
    link.alpha * delta * delta * g_r * i_out
}

/// Transmitter of the adaptive scheme. Compensation is updated once per
/// frame from the previous frame's mean power.
#[derive(Debug, Clone)]
pub struct AdaptiveTransmitter {
    link: CavityLink,
    i_target: f64,
    prev_mean_power: Option<f64>,
}

/// What the transmitter did for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveFrame {
    pub s: Vec<f64>,
    /// `None` for the first frame, which rides the unmodulated steady state.
    pub compensation: Option<Compensation>,
    /// Amplitude ratio between the detected and the nominal signal:
    /// `sqrt(coupling) * sqrt(P_in / P_t)`.
    pub channel_coefficient: f64,
}

impl AdaptiveTransmitter {
    pub fn new(link: CavityLink) -> Self {
        Self {
            i_target: link.p_t / link.beam_area,
            link,
            prev_mean_power: None,
        }
    }

    pub fn i_target(&self) -> f64 {
        self.i_target
    }

    pub fn transmit(&mut self, x_frame: &[f64]) -> Result<AdaptiveFrame, AdaptiveError> {
        let (compensation, p_in) = match self.prev_mean_power {
            None => (None, self.link.p_t),
            Some(mean) => {
                let i_echo = echo_intensity(&self.link, mean);
                let comp = pump_compensation(i_echo, self.i_target, &self.link.medium_tx)?;
                // A feasible command restores the target by construction.
                let p_in = if comp.feasible {
                    self.link.p_t
                } else {
                    comp.gain * i_echo * self.link.beam_area
                };
                (Some(comp), p_in)
            }
        };
        let s = modulate_adaptive(x_frame, p_in);
        let mean = s.iter().map(|v| v * v).sum::<f64>() / s.len().max(1) as f64;
        self.prev_mean_power = Some(mean);
        let ratio = if p_in == self.link.p_t { 1.0 } else { (p_in / self.link.p_t).sqrt() };
        Ok(AdaptiveFrame {
            s,
            compensation,
            channel_coefficient: self.link.detector_coupling().sqrt() * ratio,
        })
    }
}

/// Scenario for an end-to-end adaptive-scheme run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveSimConfig {
    pub link: CavityLink,
    pub alphabet: SymbolAlphabet,
    pub frame_len: Option<usize>,
    pub modulation_bandwidth: f64,
    pub ss_len: Option<usize>,
    pub sync_threshold: f64,
    pub sync_slack: usize,
    pub sigma2: f64,
}

/// Outcome of [`simulate_adaptive_link`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveStats {
    pub counts: ErrorCounts,
    pub frames: u64,
    pub sync_failures: u64,
    /// Frames whose compensation had to be clamped.
    pub outage_frames: u64,
    /// Feasibility of the compensation applied to each frame.
    pub feasible_trace: Vec<bool>,
    pub coefficient_trace: Vec<f64>,
}

impl AdaptiveStats {
    pub fn outage_fraction(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.outage_frames as f64 / self.frames as f64
        }
    }
}

pub fn simulate_adaptive_link(
    config: &AdaptiveSimConfig,
    n_frames: u64,
    seed: u64,
) -> Result<AdaptiveStats, SimError> {
    let link = &config.link;
    link.validate()?;
    steady_state_intensity(link)?;
    let n = match config.frame_len {
        Some(n) => n,
        None => frame_length(link.distance, config.modulation_bandwidth)?,
    };
    let ss_len = config.ss_len.unwrap_or_else(|| default_ss_len(n));
    if ss_len >= n {
        return Err(SimError::Config(format!("SS length {ss_len} leaves no payload in a {n}-symbol frame")));
    }
    let alphabet = &config.alphabet;
    let ss = make_ss(ss_len, alphabet, seed)?;
    let ss_idx: Vec<usize> = ss.iter().map(|&v| alphabet.index_of(v).expect("SS uses alphabet levels")).collect();
    let coupling = link.detector_coupling();
    let bits = bits_per_symbol(alphabet.order());
    let slack = config.sync_slack.min(n - ss_len);

    let mut tx = AdaptiveTransmitter::new(*link);
    let mut stats = AdaptiveStats {
        counts: ErrorCounts::default(),
        frames: 0,
        sync_failures: 0,
        outage_frames: 0,
        feasible_trace: Vec::with_capacity(n_frames as usize),
        coefficient_trace: Vec::with_capacity(n_frames as usize),
    };
    let mut prev_y: Option<Vec<f64>> = None;
    for k in 0..n_frames {
        let mut data_rng = frame_rng(seed, k, Purpose::Payload);
        let mut idx = ss_idx.clone();
        idx.extend((ss_len..n).map(|_| data_rng.random_range(0..alphabet.order())));
        let x: Vec<f64> = idx.iter().map(|&i| alphabet.level(i)).collect();

        let frame = tx.transmit(&x)?;
        let feasible = frame.compensation.is_none_or(|c| c.feasible);
        stats.feasible_trace.push(feasible);
        stats.coefficient_trace.push(frame.channel_coefficient);
        if !feasible {
            stats.outage_frames += 1;
        }

        let mut noise_rng = frame_rng(seed, k, Purpose::Noise);
        let y = photodetect(&frame.s, coupling, config.sigma2, &mut noise_rng);
        let jitter = frame_rng(seed, k, Purpose::Timing).random_range(0..=slack);
        let mut window = match &prev_y {
            Some(p) => p[n - jitter..].to_vec(),
            None => photodetect(&vec![link.p_t.sqrt(); jitter], coupling, config.sigma2, &mut noise_rng),
        };
        window.extend_from_slice(&y);
        let locked = detect_ss(&window, &ss, config.sync_threshold)? == Some(jitter);

        stats.frames += 1;
        if locked {
            let decided = demodulate_adaptive(&y[ss_len..], coupling, link.p_t, alphabet);
            for (sent, got) in idx[ss_len..].iter().zip(decided) {
                stats.counts.record(*sent, got, bits);
            }
        } else {
            stats.sync_failures += 1;
            for _ in ss_len..n {
                stats.counts.record_erasure(bits);
            }
        }
        prev_y = Some(y);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::build_alphabet;
    use crate::physics::SPEED_OF_LIGHT;
    use crate::rng::frame_rng;
    use std::f64::consts::PI;

    fn medium(g0: f64) -> GainMedium {
        GainMedium::new(g0, 1.2e7, SPEED_OF_LIGHT / 1064e-9, 1e11).unwrap()
    }

    fn link(g0: f64) -> CavityLink {
        CavityLink {
            distance: 200.0,
            aperture_radius: 3e-3,
            divergence: 1.2e-3,
            wavelength: 1064e-9,
            alpha: 0.9,
            medium_tx: medium(g0),
            medium_rx: medium(g0),
            p_t: 1.0,
            beam_area: PI * 9e-6,
        }
    }

    fn sim(g0: f64, depth: f64, sigma2: f64) -> AdaptiveSimConfig {
        AdaptiveSimConfig {
            link: link(g0),
            alphabet: build_alphabet(2, depth).unwrap(),
            frame_len: None,
            modulation_bandwidth: 1e8,
            ss_len: None,
            sync_threshold: 0.9,
            sync_slack: 3,
            sigma2,
        }
    }

    #[test]
    fn compensation_ratios() {
        let m = medium(50.0);
        let c = pump_compensation(1e3, 1e3, &m).unwrap();
        assert_eq!(c.required, 1.0);
        assert!(c.feasible);
        let c = pump_compensation(5e2, 1e3, &m).unwrap();
        assert_eq!(c.required, 2.0);
        assert!(c.feasible);
        // just below i_target / g0 the ceiling (< g0) cannot be met
        let c = pump_compensation(1e3 / 50.0 * (1.0 - 1e-9), 1e3, &m).unwrap();
        assert!(!c.feasible);
        assert_eq!(c.gain, c.ceiling);
        // an echo stronger than the target cannot be attenuated
        assert!(!pump_compensation(2e3, 1e3, &m).unwrap().feasible);
        assert_eq!(pump_compensation(0.0, 1e3, &m), Err(AdaptiveError::NoEcho(0.0)));
    }

    #[test]
    fn modulation_is_memoryless() {
        assert_eq!(modulate_adaptive(&[1.0], 1.0), vec![1.0]);
        assert!((modulate_adaptive(&[0.7], 4.0)[0] - 1.4).abs() < 1e-15);
        assert_eq!(modulate_adaptive(&[0.7, 0.9], 2.0), modulate_adaptive(&[0.7, 0.9], 2.0));
    }

    #[test]
    fn reception_law() {
        let l = link(1e4);
        let k = l.detector_coupling();
        let y = receive_adaptive(&[1.0, 0.5], &l, 0.0, &mut frame_rng(0, 0, Purpose::Noise));
        assert_eq!(y, vec![k.sqrt(), k.sqrt() * 0.5]);
        let z = receive_adaptive(&[0.0; 3], &l, 1.0, &mut frame_rng(0, 0, Purpose::Noise));
        let z2 = crate::channel::photodetect(&[0.0; 3], 123.0, 1.0, &mut frame_rng(0, 0, Purpose::Noise));
        assert_eq!(z, z2);
    }

    #[test]
    fn empirical_mean_matches_coupling() {
        let l = link(1e4);
        let n = 1_000_000;
        let sigma2 = 1e-6;
        let y = receive_adaptive(&vec![0.8; n], &l, sigma2, &mut frame_rng(4, 0, Purpose::Noise));
        let mean = y.iter().sum::<f64>() / n as f64;
        let want = l.detector_coupling().sqrt() * 0.8;
        assert!((mean - want).abs() <= 3.0 * (sigma2 / n as f64).sqrt());
    }

    #[test]
    fn noiseless_energy_detection_is_exact() {
        let a = build_alphabet(4, 0.3).unwrap();
        let idx = [0usize, 3, 1, 2, 2];
        let x: Vec<f64> = idx.iter().map(|&i| a.level(i)).collect();
        let s = modulate_adaptive(&x, 1.0);
        let k: f64 = 1e-5;
        let y: Vec<f64> = s.iter().map(|v| k.sqrt() * v).collect();
        assert_eq!(demodulate_adaptive(&y, k, 1.0, &a), idx.to_vec());
    }

    #[test]
    fn noiseless_run_and_constant_coefficient() {
        let stats = simulate_adaptive_link(&sim(1e4, 0.1, 0.0), 50, 2).unwrap();
        assert_eq!(stats.counts.symbol_errors, 0);
        assert_eq!(stats.outage_frames, 0);
        let c0 = stats.coefficient_trace[0];
        assert!(stats.coefficient_trace.iter().all(|&c| c == c0));
    }

    #[test]
    fn deep_modulation_with_weak_gain_causes_outage() {
        let stats = simulate_adaptive_link(&sim(4000.0, 0.9, 0.0), 20, 2).unwrap();
        assert!(stats.outage_fraction() > 0.0);
    }
}
