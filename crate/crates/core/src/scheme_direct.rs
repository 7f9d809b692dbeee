//! Direct modulation with ratio demodulation.
//!
//! The transmitter modulates each symbol onto whatever amplitude returns from
//! the previous reflection round:
//!
//! ```text
//! s_1[n] = sqrt(P_t) * x_1[n]
//! s_k[n] = sqrt(h(s_{k-1}[n])) * x_k[n],   h(s) = alpha * delta^2 * G_T * G_R * s^2
//! ```
//!
//! which makes the channel a symbol-wise Markov recursion. The receiver keeps
//! the previous frame, rebuilds `s_{k-1}` from it, estimates `h` from the SS
//! and divides the echo out:
//!
//! ```text
//! x_k[n] = y_k[n] / sqrt((1 - alpha) * delta * h(y_{k-1}[n] / sqrt((1 - alpha) * delta)))
//! ```

use rand::Rng;
use thiserror::Error;

use crate::channel::photodetect;
use crate::framing::{default_ss_len, detect_ss, frame_length, make_ss, SymbolAlphabet};
use crate::physics::{saturated_gain_unchecked, steady_state_intensity, CavityLink, GainMedium, PhysicsError};
use crate::rng::{frame_rng, Purpose};
use crate::stats::{bits_per_symbol, ErrorCounts};
use crate::SimError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirectError {
    #[error("frame {frame}: previous-frame amplitudes are required for k >= 2")]
    MissingHistory { frame: u64 },
    #[error("frame length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("SS reference of {len} symbols is too short for estimation (need >= 4)")]
    ReferenceTooShort { len: usize },
    #[error("degenerate SS reference: every regressor is zero")]
    DegenerateReference,
}

/// Whether the media gains stay frozen at the operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    /// `G_T`, `G_R` fixed at the steady-state operating point.
    #[default]
    Constant,
    /// Gains re-evaluated from the intensity each symbol carries.
    Saturable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    Constant {
        coefficient: f64,
    },
    Saturable {
        alpha: f64,
        delta: f64,
        beam_area: f64,
        tx: GainMedium,
        rx: GainMedium,
    },
}

/// The link gain function `h(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    law: Law,
}

impl LinkGain {
    /// Builds `h` for `link`. Constant mode freezes the gains solved at the
    /// steady state, so it fails when the cavity cannot lase.
    pub fn new(link: &CavityLink, mode: GainMode) -> Result<Self, PhysicsError> {
        link.validate()?;
        let law = match mode {
            GainMode::Constant => {
                let ss = steady_state_intensity(link)?;
                Law::Constant {
                    coefficient: ss.link_coefficient(link.alpha),
                }
            }
            GainMode::Saturable => Law::Saturable {
                alpha: link.alpha,
                delta: crate::physics::link_loss(link),
                beam_area: link.beam_area,
                tx: link.medium_tx,
                rx: link.medium_rx,
            },
        };
        Ok(Self { law })
    }

    /// Constant-mode gain `alpha * delta^2 * g_t * g_r` from explicit factors.
    pub fn from_factors(alpha: f64, delta: f64, gain_tx: f64, gain_rx: f64) -> Self {
        Self::with_coefficient(alpha * delta * delta * gain_tx * gain_rx)
    }

    pub fn with_coefficient(coefficient: f64) -> Self {
        Self {
            law: Law::Constant { coefficient },
        }
    }

    pub fn mode(&self) -> GainMode {
        match self.law {
            Law::Constant { .. } => GainMode::Constant,
            Law::Saturable { .. } => GainMode::Saturable,
        }
    }

    /// Frozen coefficient in constant mode.
    pub fn coefficient(&self) -> Option<f64> {
        match self.law {
            Law::Constant { coefficient } => Some(coefficient),
            Law::Saturable { .. } => None,
        }
    }

    /// `h(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        match self.law {
            Law::Constant { coefficient } => coefficient * s * s,
            Law::Saturable { .. } => self.shape(s),
        }
    }

    /// The part of `h` the receiver models; estimation fits one scalar on
    /// top of it. Constant mode: `s^2`. Saturable mode: the full law.
    pub fn shape(&self, s: f64) -> f64 {
        match self.law {
            Law::Constant { .. } => s * s,
            Law::Saturable {
                alpha,
                delta,
                beam_area,
                tx,
                rx,
            } => {
                let power = s * s;
                let i_tx = power / beam_area;
                let g_t = saturated_gain_unchecked(i_tx, tx.f0, &tx);
                let g_r = saturated_gain_unchecked(i_tx * alpha * delta * g_t, rx.f0, &rx);
                alpha * delta * delta * g_t * g_r * power
            }
        }
    }

    /// `sqrt(h(s))`, computed without squaring `s` so tiny amplitudes keep
    /// full relative precision.
    pub fn root_eval(&self, s: f64) -> f64 {
        match self.law {
            Law::Constant { coefficient } => coefficient.max(0.0).sqrt() * s.abs(),
            Law::Saturable { .. } => self.root_shape(s),
        }
    }

    /// `sqrt(shape(s))`, likewise without squaring `s`.
    pub fn root_shape(&self, s: f64) -> f64 {
        match self.law {
            Law::Constant { .. } => s.abs(),
            Law::Saturable {
                alpha,
                delta,
                beam_area,
                tx,
                rx,
            } => {
                let i_tx = s * s / beam_area;
                let g_t = saturated_gain_unchecked(i_tx, tx.f0, &tx);
                let g_r = saturated_gain_unchecked(i_tx * alpha * delta * g_t, rx.f0, &rx);
                delta * (alpha * g_t * g_r).sqrt() * s.abs()
            }
        }
    }
}

/// `h(s)` for `link` in `mode`.
pub fn link_gain(s: f64, link: &CavityLink, mode: GainMode) -> Result<f64, PhysicsError> {
    Ok(LinkGain::new(link, mode)?.eval(s))
}

/// Transmitter-side state of one direct-modulation link.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectLinkState {
    /// Amplitudes modulated in the previous frame, `s_{k-1}`.
    pub prev_s: Option<Vec<f64>>,
    /// Index `k` of the next frame, starting at 1.
    pub frame_index: u64,
    /// Latest receiver estimate of the link-gain scale.
    pub c_hat: Option<f64>,
    pub sigma2: f64,
    pub gain_mode: GainMode,
}

impl DirectLinkState {
    pub fn new(sigma2: f64, gain_mode: GainMode) -> Self {
        Self {
            prev_s: None,
            frame_index: 1,
            c_hat: None,
            sigma2,
            gain_mode,
        }
    }
}

/// Modulates one frame and advances the state.
pub fn modulate_direct(
    x_frame: &[f64],
    state: &mut DirectLinkState,
    gain: &LinkGain,
    p_t: f64,
) -> Result<Vec<f64>, DirectError> {
    let s: Vec<f64> = if state.frame_index <= 1 {
        let amp = p_t.sqrt();
        x_frame.iter().map(|&x| amp * x).collect()
    } else {
        let prev = state.prev_s.as_ref().ok_or(DirectError::MissingHistory {
            frame: state.frame_index,
        })?;
        if prev.len() != x_frame.len() {
            return Err(DirectError::LengthMismatch {
                expected: prev.len(),
                got: x_frame.len(),
            });
        }
        prev.iter()
            .zip(x_frame)
            .map(|(&p, &x)| gain.root_eval(p) * x)
            .collect()
    };
    state.frame_index += 1;
    state.prev_s = Some(s.clone());
    Ok(s)
}

/// Receives one frame: `y = sqrt((1 - alpha) * delta) * s + z`.
pub fn receive_direct<R: Rng + ?Sized>(s_frame: &[f64], link: &CavityLink, sigma2: f64, rng: &mut R) -> Vec<f64> {
    photodetect(s_frame, link.detector_coupling(), sigma2, rng)
}

/// Least-squares estimate of the link-gain scale from one received SS.
///
/// `reference` holds the previous-frame amplitudes at the SS positions. The
/// received SS is `y = sqrt(K * c * shape(ref)) * x`, linear in `sqrt(c)`,
/// so the fit is done on `sqrt(c)` and squared.
pub fn estimate_link_gain(
    y_ss: &[f64],
    x_ss: &[f64],
    reference: &[f64],
    coupling: f64,
    gain: &LinkGain,
) -> Result<f64, DirectError> {
    if y_ss.len() != x_ss.len() || reference.len() != x_ss.len() {
        return Err(DirectError::LengthMismatch {
            expected: x_ss.len(),
            got: y_ss.len().min(reference.len()),
        });
    }
    if x_ss.len() < 4 {
        return Err(DirectError::ReferenceTooShort { len: x_ss.len() });
    }
    let k = coupling.sqrt();
    let (mut num, mut den) = (0.0, 0.0);
    for ((&y, &x), &r) in y_ss.iter().zip(x_ss).zip(reference) {
        let a = k * gain.root_shape(r) * x;
        num += y * a;
        den += a * a;
    }
    if !(den > 0.0) || !den.is_finite() {
        return Err(DirectError::DegenerateReference);
    }
    let root = num / den;
    Ok(root * root)
}

/// Soft and hard decisions for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Demodulated {
    /// `x_hat[n]`, `None` where the estimated gain `h_hat(s_hat)` is not positive and finite.
    pub soft: Vec<Option<f64>>,
    /// Nearest alphabet index per symbol.
    pub symbols: Vec<Option<usize>>,
    pub failures: usize,
}

/// Ratio demodulation of frame `k` given the received frame `k - 1`.
pub fn demodulate_direct(
    y_frame: &[f64],
    prev_y: &[f64],
    c_hat: f64,
    coupling: f64,
    gain: &LinkGain,
    alphabet: &SymbolAlphabet,
) -> Result<Demodulated, DirectError> {
    if prev_y.len() != y_frame.len() {
        return Err(DirectError::LengthMismatch {
            expected: prev_y.len(),
            got: y_frame.len(),
        });
    }
    let root_k = coupling.sqrt();
    let soft: Vec<Option<f64>> = y_frame
        .iter()
        .zip(prev_y)
        .map(|(&y, &yp)| {
            let s_prev = yp / root_k;
            // sqrt(coupling * h_hat(s_prev)), kept in root form.
            let scale = root_k * c_hat.sqrt() * gain.root_shape(s_prev);
            if c_hat > 0.0 && scale > 0.0 && scale.is_finite() {
                let x = y / scale;
                x.is_finite().then_some(x)
            } else {
                None
            }
        })
        .collect();
    Ok(finish(soft, alphabet))
}

/// First-frame demodulation, where the amplitude is the known `sqrt(P_t)`.
pub fn demodulate_first_frame(y_frame: &[f64], coupling: f64, p_t: f64, alphabet: &SymbolAlphabet) -> Demodulated {
    let scale = (coupling * p_t).sqrt();
    finish(y_frame.iter().map(|&y| Some(y / scale)).collect(), alphabet)
}

fn finish(soft: Vec<Option<f64>>, alphabet: &SymbolAlphabet) -> Demodulated {
    let symbols: Vec<Option<usize>> = soft.iter().map(|x| x.map(|v| alphabet.slice(v))).collect();
    let failures = symbols.iter().filter(|s| s.is_none()).count();
    Demodulated {
        soft,
        symbols,
        failures,
    }
}

/// Receiver of a direct-modulation link: keeps the previous frame and the
/// latest gain estimate.
#[derive(Debug, Clone)]
pub struct DirectReceiver {
    coupling: f64,
    p_t: f64,
    gain: LinkGain,
    prev_y: Option<Vec<f64>>,
    c_hat: Option<f64>,
}

impl DirectReceiver {
    pub fn new(coupling: f64, p_t: f64, gain: LinkGain) -> Self {
        Self {
            coupling,
            p_t,
            gain,
            prev_y: None,
            c_hat: None,
        }
    }

    pub fn c_hat(&self) -> Option<f64> {
        self.c_hat
    }

    /// Estimates from the SS at the head of `y_frame`, demodulates the whole
    /// frame and stores it for the next round.
    pub fn process(
        &mut self,
        y_frame: &[f64],
        x_ss: &[f64],
        alphabet: &SymbolAlphabet,
    ) -> Result<Demodulated, DirectError> {
        let out = match self.prev_y.as_deref() {
            None => demodulate_first_frame(y_frame, self.coupling, self.p_t, alphabet),
            Some(prev) => {
                let l = x_ss.len();
                let root_k = self.coupling.sqrt();
                let reference: Vec<f64> = prev[..l].iter().map(|&y| y / root_k).collect();
                let c_hat = estimate_link_gain(&y_frame[..l], x_ss, &reference, self.coupling, &self.gain)?;
                self.c_hat = Some(c_hat);
                demodulate_direct(y_frame, prev, c_hat, self.coupling, &self.gain, alphabet)?
            }
        };
        self.prev_y = Some(y_frame.to_vec());
        Ok(out)
    }
}

/// Scenario for an end-to-end direct-scheme run.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSimConfig {
    pub link: CavityLink,
    pub gain_mode: GainMode,
    pub alphabet: SymbolAlphabet,
    /// Symbols per frame; `None` derives it from distance and bandwidth.
    pub frame_len: Option<usize>,
    pub modulation_bandwidth: f64,
    /// SS length; `None` uses `min(16, N - 1)`.
    pub ss_len: Option<usize>,
    pub sync_threshold: f64,
    /// Largest receiver timing offset (samples) the SS search must absorb.
    pub sync_slack: usize,
    pub sigma2: f64,
}

impl DirectSimConfig {
    pub fn frame_len(&self) -> Result<usize, SimError> {
        match self.frame_len {
            Some(n) => Ok(n),
            None => Ok(frame_length(self.link.distance, self.modulation_bandwidth)?),
        }
    }
}

/// Outcome of [`simulate_direct_link`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirectStats {
    /// Errors over information-sequence symbols.
    pub counts: ErrorCounts,
    pub frames: u64,
    pub sync_failures: u64,
    pub demod_failures: u64,
    /// `c_hat` per frame; `None` for the first frame.
    pub c_hat_trace: Vec<Option<f64>>,
    /// Mean modulated power `mean(s_k^2)` per frame.
    pub power_trace: Vec<f64>,
}

/// Runs modulate, receive, sync, estimate and demodulate over `n_frames`.
pub fn simulate_direct_link(config: &DirectSimConfig, n_frames: u64, seed: u64) -> Result<DirectStats, SimError> {
    let link = &config.link;
    link.validate()?;
    let gain = LinkGain::new(link, config.gain_mode)?;
    // Constant mode needs the operating point; check feasibility either way.
    steady_state_intensity(link)?;
    let n = config.frame_len()?;
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

    let mut tx = DirectLinkState::new(config.sigma2, config.gain_mode);
    let mut rx = DirectReceiver::new(coupling, link.p_t, gain);
    let mut stats = DirectStats {
        counts: ErrorCounts::default(),
        frames: 0,
        sync_failures: 0,
        demod_failures: 0,
        c_hat_trace: Vec::with_capacity(n_frames as usize),
        power_trace: Vec::with_capacity(n_frames as usize),
    };
    let mut prev_y: Option<Vec<f64>> = None;

    for k in 0..n_frames {
        let mut data_rng = frame_rng(seed, k, Purpose::Payload);
        let mut idx = ss_idx.clone();
        idx.extend((ss_len..n).map(|_| data_rng.random_range(0..alphabet.order())));
        let x: Vec<f64> = idx.iter().map(|&i| alphabet.level(i)).collect();

        let s = modulate_direct(&x, &mut tx, &gain, link.p_t)?;
        stats.power_trace.push(s.iter().map(|v| v * v).sum::<f64>() / n as f64);

        let mut noise_rng = frame_rng(seed, k, Purpose::Noise);
        let y = photodetect(&s, coupling, config.sigma2, &mut noise_rng);

        // The detector sees the tail of the previous round before this frame.
        let jitter = frame_rng(seed, k, Purpose::Timing).random_range(0..=slack);
        let mut window = match &prev_y {
            Some(p) => p[n - jitter..].to_vec(),
            None => photodetect(&vec![link.p_t.sqrt(); jitter], coupling, config.sigma2, &mut noise_rng),
        };
        window.extend_from_slice(&y);
        let locked = detect_ss(&window, &ss, config.sync_threshold)? == Some(jitter);

        let demod = rx.process(&y, &ss, alphabet)?;
        stats.c_hat_trace.push(rx.c_hat().filter(|_| k > 0));
        stats.frames += 1;
        if !locked {
            stats.sync_failures += 1;
            for _ in ss_len..n {
                stats.counts.record_erasure(bits);
            }
        } else {
            for (sent, got) in idx[ss_len..].iter().zip(&demod.symbols[ss_len..]) {
                match got {
                    Some(d) => stats.counts.record(*sent, *d, bits),
                    None => {
                        stats.demod_failures += 1;
                        stats.counts.record_erasure(bits);
                    }
                }
            }
        }
        prev_y = Some(y);
    }
    Ok(stats)
}
