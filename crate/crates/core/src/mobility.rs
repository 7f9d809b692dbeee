//! Receiver mobility and Doppler-limited link lifetime.
//!
//! The transmitter sits at the origin and the receiver starts on the +x axis
//! (the initial cavity axis). The receiver moves in a straight line at
//! constant speed; `direction_angle` is measured from the +x axis, so 0 means
//! moving straight away and π straight towards the transmitter. Each
//! reflection round the retroreflected beam picks up a Doppler factor
//! `1 - 2 v_r / c`, and the link breaks once the small-signal round-trip gain
//! at the shifted frequency and the new distance drops below one.

use rayon::prelude::*;

use crate::physics::{round_trip_time, CavityLink, PhysicsError, SPEED_OF_LIGHT};
use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityState {
    /// Receiver position relative to the transmitter (m).
    pub position: [f64; 2],
    /// Speed (m/s).
    pub speed: f64,
    /// Angle between velocity and the initial cavity axis (rad, 0..=π).
    pub direction_angle: f64,
    /// Current beam frequency (Hz).
    pub f_beam: f64,
    /// Frequency the beam started at; compensation restores it.
    pub f_initial: f64,
    pub round: u64,
    /// Current transmitter-receiver distance (m).
    pub distance: f64,
}

impl MobilityState {
    pub fn new(distance: f64, speed: f64, direction_angle: f64, f_beam: f64) -> Result<Self, SimError> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(SimError::Config(format!("initial distance must be > 0, got {distance}")));
        }
        if !(speed >= 0.0 && speed.is_finite()) {
            return Err(SimError::Config(format!("speed must be >= 0, got {speed}")));
        }
        if !(0.0..=std::f64::consts::PI).contains(&direction_angle) {
            return Err(SimError::Config(format!("direction angle must lie in [0, pi], got {direction_angle}")));
        }
        if !(f_beam > 0.0) {
            return Err(SimError::Config(format!("beam frequency must be > 0, got {f_beam}")));
        }
        Ok(Self {
            position: [distance, 0.0],
            speed,
            direction_angle,
            f_beam,
            f_initial: f_beam,
            round: 0,
            distance,
        })
    }

    pub fn velocity(&self) -> [f64; 2] {
        let (sin, cos) = self.direction_angle.sin_cos();
        [self.speed * cos, self.speed * sin]
    }
}

/// Advances one reflection round.
///
/// The time step is the current round-trip time. The radial velocity is taken
/// at the midpoint of the step (positive when receding).
pub fn doppler_step(state: &MobilityState) -> MobilityState {
    let mut next = *state;
    next.round += 1;
    if state.speed == 0.0 {
        return next;
    }
    let dt = round_trip_time(state.distance);
    let v = state.velocity();
    let [x, y] = state.position;
    let mid = [x + 0.5 * v[0] * dt, y + 0.5 * v[1] * dt];
    let mid_norm = mid[0].hypot(mid[1]);
    let v_r = if mid_norm > 0.0 {
        v[0] * (mid[0] / mid_norm) + v[1] * (mid[1] / mid_norm)
    } else {
        0.0
    };
    next.position = [x + v[0] * dt, y + v[1] * dt];
    next.distance = next.position[0].hypot(next.position[1]);
    next.f_beam = state.f_beam * (1.0 - 2.0 * v_r / SPEED_OF_LIGHT);
    next
}

/// Resets the beam to its initial frequency once it drifts more than
/// `deviation_threshold` away. Returns whether a reset happened.
pub fn frequency_compensation(state: &MobilityState, deviation_threshold: f64) -> (MobilityState, bool) {
    if (state.f_beam - state.f_initial).abs() > deviation_threshold {
        let mut next = *state;
        next.f_beam = state.f_initial;
        (next, true)
    } else {
        (*state, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkLifetime {
    /// Round at which the round-trip gain first fell below one.
    Broken(u64),
    /// Still resonating after the round budget.
    Unbroken,
}

impl LinkLifetime {
    pub fn rounds(&self) -> Option<u64> {
        match self {
            Self::Broken(r) => Some(*r),
            Self::Unbroken => None,
        }
    }
}

/// Whether the cavity can still lase at the state's distance and frequency.
pub fn can_resonate(state: &MobilityState, link: &CavityLink) -> bool {
    link.at_distance(state.distance).small_signal_round_trip(state.f_beam) >= 1.0
}

/// Rounds until the link breaks, optionally with frequency compensation.
pub fn rounds_until_break(
    initial: &MobilityState,
    link: &CavityLink,
    max_rounds: u64,
) -> Result<LinkLifetime, PhysicsError> {
    rounds_until_break_with(initial, link, max_rounds, None)
}

pub fn rounds_until_break_with(
    initial: &MobilityState,
    link: &CavityLink,
    max_rounds: u64,
    compensation_threshold: Option<f64>,
) -> Result<LinkLifetime, PhysicsError> {
    let start = link.at_distance(initial.distance);
    start.validate()?;
    let g0 = start.small_signal_round_trip(initial.f_beam);
    if !(g0 > 1.0) {
        return Err(PhysicsError::BelowThreshold {
            small_signal_round_trip: g0,
        });
    }
    if initial.speed == 0.0 {
        return Ok(LinkLifetime::Unbroken);
    }
    // Hoisted loop invariants; only distance and frequency change per round.
    let (tx, rx) = (&link.medium_tx, &link.medium_rx);
    let alpha = link.alpha;
    let mut state = *initial;
    while state.round < max_rounds {
        state = doppler_step(&state);
        if let Some(threshold) = compensation_threshold {
            state = frequency_compensation(&state, threshold).0;
        }
        let delta = crate::physics::aperture_capture(link.aperture_radius, link.wavelength, link.divergence, state.distance);
        let product = alpha * delta * delta * tx.small_signal_gain(state.f_beam) * rx.small_signal_gain(state.f_beam);
        if product < 1.0 {
            return Ok(LinkLifetime::Broken(state.round));
        }
    }
    Ok(LinkLifetime::Unbroken)
}

/// Sweep scenario for [`mobility_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    pub link: CavityLink,
    pub initial_distance: f64,
    pub max_rounds: u64,
    /// Reset threshold (Hz) when frequency compensation is enabled.
    pub compensation_threshold: Option<f64>,
}

/// Round counts over a (speed, angle) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTable {
    pub speeds: Vec<f64>,
    pub angles_deg: Vec<f64>,
    /// `cells[i][j]` for `speeds[i]`, `angles_deg[j]`.
    pub cells: Vec<Vec<LinkLifetime>>,
}

impl MobilityTable {
    pub fn row(&self, speed_index: usize) -> &[LinkLifetime] {
        &self.cells[speed_index]
    }
}

pub fn mobility_sweep(speeds: &[f64], angles_deg: &[f64], config: &MobilityConfig) -> Result<MobilityTable, SimError> {
    if speeds.is_empty() || angles_deg.is_empty() {
        return Err(SimError::Config("mobility sweep needs at least one speed and one angle".into()));
    }
    let f0 = config.link.medium_tx.f0;
    let grid: Vec<(usize, usize)> = (0..speeds.len())
        .flat_map(|i| (0..angles_deg.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<LinkLifetime> = grid
        .par_iter()
        .map(|&(i, j)| {
            let state = MobilityState::new(config.initial_distance, speeds[i], angles_deg[j].to_radians(), f0)?;
            Ok(rounds_until_break_with(
                &state,
                &config.link,
                config.max_rounds,
                config.compensation_threshold,
            )?)
        })
        .collect::<Result<_, SimError>>()?;
    let cells = results.chunks(angles_deg.len()).map(|c| c.to_vec()).collect();
    Ok(MobilityTable {
        speeds: speeds.to_vec(),
        angles_deg: angles_deg.to_vec(),
        cells,
    })
}
