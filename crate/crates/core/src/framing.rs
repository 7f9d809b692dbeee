//! Symbol alphabet, SS/IS frames, synchronization and multi-user frame
//! planning.
//!
//! One frame is sent per reflection round, so its length in symbols is the
//! number of modulator symbol slots in `2d/c`. Every frame opens with a
//! synchronization sequence (SS) followed by the information sequence (IS).

use thiserror::Error;

use crate::physics::round_trip_time;

/// Default synchronization sequence length.
pub const DEFAULT_SS_LEN: usize = 16;
/// Shortest accepted synchronization sequence.
pub const MIN_SS_LEN: usize = 4;
/// Default normalized-correlation threshold for SS detection.
pub const DEFAULT_SYNC_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FramingError {
    #[error("frame holds {symbols} symbol(s); at least 2 are needed for SS and payload")]
    FrameTooShort { symbols: u64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("signal of {signal} samples is shorter than the {ss}-symbol SS")]
    SignalTooShort { signal: usize, ss: usize },
    #[error("multiple-access plan needs at least one user")]
    NoUsers,
    #[error("access-point frame length overflows u64")]
    Overflow,
}

fn invalid(name: &'static str, reason: impl Into<String>) -> FramingError {
    FramingError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Finite intensity-modulation alphabet with uniformly spaced levels in
/// `[1 - depth, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolAlphabet {
    depth: f64,
    levels: Vec<f64>,
}

impl SymbolAlphabet {
    pub fn new(order: usize, depth: f64) -> Result<Self, FramingError> {
        build_alphabet(order, depth)
    }

    pub fn order(&self) -> usize {
        self.levels.len()
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> f64 {
        self.levels[index]
    }

    pub fn min_level(&self) -> f64 {
        self.levels[0]
    }

    pub fn max_level(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }

    /// Index of the nearest level; exact ties go to the lower level.
    pub fn slice(&self, value: f64) -> usize {
        let mut best = 0;
        let mut best_dist = (value - self.levels[0]).abs();
        for (i, &level) in self.levels.iter().enumerate().skip(1) {
            let dist = (value - level).abs();
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
        best
    }

    /// Index of `level` if it is exactly one of the alphabet's levels.
    pub fn index_of(&self, level: f64) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }
}

pub fn build_alphabet(order: usize, depth: f64) -> Result<SymbolAlphabet, FramingError> {
    if order < 2 {
        return Err(invalid("order", format!("alphabet needs at least 2 levels, got {order}")));
    }
    if !(depth > 0.0 && depth < 1.0) {
        return Err(invalid("depth", format!("modulation depth must lie in (0, 1), got {depth}")));
    }
    let top = (order - 1) as f64;
    let levels = (0..order)
        .map(|i| 1.0 - depth * ((order - 1 - i) as f64) / top)
        .collect();
    Ok(SymbolAlphabet { depth, levels })
}

/// One frame's worth of symbol levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub ss: Vec<f64>,
    pub payload: Vec<f64>,
}

impl Frame {
    pub fn new(ss: Vec<f64>, payload: Vec<f64>) -> Result<Self, FramingError> {
        if ss.is_empty() {
            return Err(invalid("ss", "synchronization sequence is empty"));
        }
        if payload.is_empty() {
            return Err(invalid("payload", "information sequence is empty"));
        }
        Ok(Self { ss, payload })
    }

    /// Total symbols `N`.
    pub fn len(&self) -> usize {
        self.ss.len() + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> Vec<f64> {
        let mut all = Vec::with_capacity(self.len());
        all.extend_from_slice(&self.ss);
        all.extend_from_slice(&self.payload);
        all
    }
}

/// Symbols per frame: modulator slots in one reflection round.
pub fn frame_length(distance: f64, modulation_bandwidth: f64) -> Result<usize, FramingError> {
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(invalid("distance", format!("must be > 0, got {distance}")));
    }
    if !(modulation_bandwidth > 0.0 && modulation_bandwidth.is_finite()) {
        return Err(invalid(
            "modulation_bandwidth",
            format!("must be > 0, got {modulation_bandwidth}"),
        ));
    }
    let slots = (round_trip_time(distance) * modulation_bandwidth).floor();
    if slots < 2.0 {
        return Err(FramingError::FrameTooShort { symbols: slots as u64 });
    }
    Ok(slots as usize)
}

/// Default SS length for an `n`-symbol frame.
pub fn default_ss_len(n: usize) -> usize {
    DEFAULT_SS_LEN.min(n.saturating_sub(1))
}

/// Pseudo-random binary SS over the two extreme alphabet levels.
///
/// Bits come from a 16-bit maximal-length Galois LFSR
/// (x^16 + x^14 + x^13 + x^11 + 1) whose start state is derived from `seed`.
pub fn make_ss(len: usize, alphabet: &SymbolAlphabet, seed: u64) -> Result<Vec<f64>, FramingError> {
    if len < MIN_SS_LEN {
        return Err(invalid("ss_len", format!("SS needs at least {MIN_SS_LEN} symbols, got {len}")));
    }
    let folded = seed ^ (seed >> 16) ^ (seed >> 32) ^ (seed >> 48);
    let mut state = (folded & 0xFFFF) as u16;
    if state == 0 {
        state = 0xACE1;
    }
    let mut bits = Vec::with_capacity(len);
    for _ in 0..len {
        let out = state & 1;
        state >>= 1;
        if out == 1 {
            state ^= 0xB400;
        }
        bits.push(out == 1);
    }
    // A constant SS has no correlation shape; flip the last bit if needed.
    if bits.iter().all(|&b| b == bits[0]) {
        let last = bits.len() - 1;
        bits[last] = !bits[last];
    }
    let (lo, hi) = (alphabet.min_level(), alphabet.max_level());
    Ok(bits.into_iter().map(|b| if b { hi } else { lo }).collect())
}

/// Zero-mean normalized cross-correlation of `window` against `reference`.
/// A window with no variation scores 0.
pub fn normalized_correlation(window: &[f64], reference: &[f64]) -> f64 {
    debug_assert_eq!(window.len(), reference.len());
    let n = window.len() as f64;
    let mean_w = window.iter().sum::<f64>() / n;
    let mean_r = reference.iter().sum::<f64>() / n;
    let (mut cross, mut ew, mut er) = (0.0, 0.0, 0.0);
    for (&w, &r) in window.iter().zip(reference) {
        let (dw, dr) = (w - mean_w, r - mean_r);
        cross += dw * dr;
        ew += dw * dw;
        er += dr * dr;
    }
    let scale = (ew * er).sqrt();
    if scale > 0.0 && scale.is_finite() {
        cross / scale
    } else {
        0.0
    }
}

/// First offset whose window correlates with `ss` at or above `threshold`.
pub fn detect_ss(signal: &[f64], ss: &[f64], threshold: f64) -> Result<Option<usize>, FramingError> {
    if ss.is_empty() {
        return Err(invalid("ss", "synchronization sequence is empty"));
    }
    if signal.len() < ss.len() {
        return Err(FramingError::SignalTooShort {
            signal: signal.len(),
            ss: ss.len(),
        });
    }
    Ok(signal
        .windows(ss.len())
        .position(|w| normalized_correlation(w, ss) >= threshold))
}

/// Per-user frame lengths and the access point's common frame length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiAccessPlan {
    pub user_frames: Vec<usize>,
    pub ap_frame: u64,
}

pub fn plan_multiaccess_frames(
    distances: &[f64],
    modulation_bandwidth: f64,
) -> Result<MultiAccessPlan, FramingError> {
    if distances.is_empty() {
        return Err(FramingError::NoUsers);
    }
    let user_frames = distances
        .iter()
        .map(|&d| frame_length(d, modulation_bandwidth))
        .collect::<Result<Vec<_>, _>>()?;
    let ap_frame = lcm_all(user_frames.iter().map(|&n| n as u64))?;
    Ok(MultiAccessPlan {
        user_frames,
        ap_frame,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Least common multiple of symbol counts.
pub fn lcm_all(values: impl IntoIterator<Item = u64>) -> Result<u64, FramingError> {
    let mut acc: Option<u64> = None;
    for v in values {
        if v == 0 {
            return Err(invalid("frame_length", "frame lengths must be positive"));
        }
        acc = Some(match acc {
            None => v,
            Some(a) => (a / gcd(a, v)).checked_mul(v).ok_or(FramingError::Overflow)?,
        });
    }
    acc.ok_or(FramingError::NoUsers)
}
