//! Python bindings: `import rbcom`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rbcom_core::framing;
use rbcom_core::mobility::{self, MobilityState};
use rbcom_core::physics;
use rbcom_core::scheme_adaptive::{simulate_adaptive_link, AdaptiveSimConfig};
use rbcom_core::scheme_direct::{simulate_direct_link, DirectSimConfig, GainMode};
use rbcom_core::SimError;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sim_err(e: SimError) -> PyErr {
    match e {
        SimError::Physics(_) | SimError::Framing(_) | SimError::Config(_) => value_err(e),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

#[pyclass(name = "GainMedium", from_py_object)]
#[derive(Clone, Copy)]
struct PyGainMedium {
    inner: physics::GainMedium,
}

#[pymethods]
impl PyGainMedium {
    #[new]
    #[pyo3(signature = (g0=1e4, i_sat=1.2e7, f0=None, fwhm=1e11))]
    fn new(g0: f64, i_sat: f64, f0: Option<f64>, fwhm: f64) -> PyResult<Self> {
        let f0 = f0.unwrap_or(physics::SPEED_OF_LIGHT / 1064e-9);
        Ok(Self {
            inner: physics::GainMedium::new(g0, i_sat, f0, fwhm).map_err(value_err)?,
        })
    }

    #[getter]
    fn g0(&self) -> f64 {
        self.inner.g0
    }
    #[getter]
    fn i_sat(&self) -> f64 {
        self.inner.i_sat
    }
    #[getter]
    fn f0(&self) -> f64 {
        self.inner.f0
    }
    #[getter]
    fn fwhm(&self) -> f64 {
        self.inner.fwhm
    }

    fn small_signal_gain(&self, f: f64) -> f64 {
        self.inner.small_signal_gain(f)
    }

    fn saturated_gain(&self, i_in: f64, f: f64) -> PyResult<f64> {
        physics::saturated_gain(i_in, f, &self.inner).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        let m = &self.inner;
        format!("GainMedium(g0={}, i_sat={}, f0={}, fwhm={})", m.g0, m.i_sat, m.f0, m.fwhm)
    }
}

#[pyclass(name = "SteadyState", get_all, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PySteadyState {
    intensity: f64,
    gain_tx: f64,
    gain_rx: f64,
    delta: f64,
    residual: f64,
    link_coefficient: f64,
}

#[pyclass(name = "CavityLink", from_py_object)]
#[derive(Clone, Copy)]
struct PyCavityLink {
    inner: physics::CavityLink,
}

#[pymethods]
impl PyCavityLink {
    #[new]
    #[pyo3(signature = (distance=200.0, medium=None, aperture_radius=3e-3, divergence=1.2e-3, wavelength=1064e-9, alpha=0.9, p_t=1.0, beam_area=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        distance: f64,
        medium: Option<PyGainMedium>,
        aperture_radius: f64,
        divergence: f64,
        wavelength: f64,
        alpha: f64,
        p_t: f64,
        beam_area: Option<f64>,
    ) -> PyResult<Self> {
        let medium = match medium {
            Some(m) => m.inner,
            None => physics::GainMedium::new(1e4, 1.2e7, physics::SPEED_OF_LIGHT / wavelength, 1e11).map_err(value_err)?,
        };
        let inner = physics::CavityLink {
            distance,
            aperture_radius,
            divergence,
            wavelength,
            alpha,
            medium_tx: medium,
            medium_rx: medium,
            p_t,
            beam_area: beam_area.unwrap_or(std::f64::consts::PI * aperture_radius * aperture_radius),
        };
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn distance(&self) -> f64 {
        self.inner.distance
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    fn at_distance(&self, distance: f64) -> PyResult<Self> {
        let inner = self.inner.at_distance(distance);
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    fn link_loss(&self) -> f64 {
        physics::link_loss(&self.inner)
    }

    fn detector_coupling(&self) -> f64 {
        self.inner.detector_coupling()
    }

    fn small_signal_round_trip(&self) -> f64 {
        self.inner.small_signal_round_trip(self.inner.medium_tx.f0)
    }

    fn steady_state(&self) -> PyResult<PySteadyState> {
        let ss = physics::steady_state_intensity(&self.inner).map_err(value_err)?;
        Ok(PySteadyState {
            intensity: ss.intensity,
            gain_tx: ss.gain_tx,
            gain_rx: ss.gain_rx,
            delta: ss.delta,
            residual: ss.residual,
            link_coefficient: ss.link_coefficient(self.inner.alpha),
        })
    }

    /// Rounds until the moving receiver drops out of resonance, or None if
    /// it is still lasing after `max_rounds`.
    #[pyo3(signature = (speed, angle_deg, max_rounds=1_000_000_000))]
    fn rounds_until_break(&self, speed: f64, angle_deg: f64, max_rounds: u64) -> PyResult<Option<u64>> {
        let state = MobilityState::new(self.inner.distance, speed, angle_deg.to_radians(), self.inner.medium_tx.f0)
            .map_err(sim_err)?;
        let life = mobility::rounds_until_break(&state, &self.inner, max_rounds).map_err(value_err)?;
        Ok(life.rounds())
    }

    fn __repr__(&self) -> String {
        format!("CavityLink(distance={}, alpha={})", self.inner.distance, self.inner.alpha)
    }
}

#[pyclass(name = "BerPoint", get_all, skip_from_py_object)]
struct PyBerPoint {
    symbols: u64,
    symbol_errors: u64,
    bits: u64,
    bit_errors: u64,
    ser: f64,
    ber: f64,
    sync_failures: u64,
}

fn sigma2_for(link: &physics::CavityLink, snr_db: f64) -> f64 {
    link.detector_coupling() * link.p_t / 10f64.powf(snr_db / 10.0)
}

/// Runs the direct (Markov channel) scheme at one SNR.
#[pyfunction]
#[pyo3(signature = (link, snr_db, frames, seed, order=2, depth=0.1, bandwidth=1e8, saturable=false))]
#[allow(clippy::too_many_arguments)]
fn simulate_direct(
    link: &PyCavityLink,
    snr_db: f64,
    frames: u64,
    seed: u64,
    order: usize,
    depth: f64,
    bandwidth: f64,
    saturable: bool,
) -> PyResult<PyBerPoint> {
    let config = DirectSimConfig {
        link: link.inner,
        gain_mode: if saturable { GainMode::Saturable } else { GainMode::Constant },
        alphabet: framing::build_alphabet(order, depth).map_err(value_err)?,
        frame_len: None,
        modulation_bandwidth: bandwidth,
        ss_len: None,
        sync_threshold: framing::DEFAULT_SYNC_THRESHOLD,
        sync_slack: 3,
        sigma2: sigma2_for(&link.inner, snr_db),
    };
    let s = simulate_direct_link(&config, frames, seed).map_err(sim_err)?;
    Ok(PyBerPoint {
        symbols: s.counts.symbols,
        symbol_errors: s.counts.symbol_errors,
        bits: s.counts.bits,
        bit_errors: s.counts.bit_errors,
        ser: s.counts.ser(),
        ber: s.counts.ber(),
        sync_failures: s.sync_failures,
    })
}

/// Runs the adaptive (pump-compensated) scheme at one SNR.
#[pyfunction]
#[pyo3(signature = (link, snr_db, frames, seed, order=2, depth=0.1, bandwidth=1e8))]
fn simulate_adaptive(
    link: &PyCavityLink,
    snr_db: f64,
    frames: u64,
    seed: u64,
    order: usize,
    depth: f64,
    bandwidth: f64,
) -> PyResult<PyBerPoint> {
    let config = AdaptiveSimConfig {
        link: link.inner,
        alphabet: framing::build_alphabet(order, depth).map_err(value_err)?,
        frame_len: None,
        modulation_bandwidth: bandwidth,
        ss_len: None,
        sync_threshold: framing::DEFAULT_SYNC_THRESHOLD,
        sync_slack: 3,
        sigma2: sigma2_for(&link.inner, snr_db),
    };
    let s = simulate_adaptive_link(&config, frames, seed).map_err(sim_err)?;
    Ok(PyBerPoint {
        symbols: s.counts.symbols,
        symbol_errors: s.counts.symbol_errors,
        bits: s.counts.bits,
        bit_errors: s.counts.bit_errors,
        ser: s.counts.ser(),
        ber: s.counts.ber(),
        sync_failures: s.sync_failures,
    })
}

#[pyfunction]
fn aperture_capture(aperture_radius: f64, wavelength: f64, divergence: f64, distance: f64) -> f64 {
    physics::aperture_capture(aperture_radius, wavelength, divergence, distance)
}

#[pyfunction]
fn round_trip_time(distance: f64) -> f64 {
    physics::round_trip_time(distance)
}

#[pyfunction]
fn beam_break_energy(power: f64, distance: f64) -> f64 {
    physics::beam_break_energy(power, distance)
}

#[pyfunction]
fn frame_length(distance: f64, bandwidth: f64) -> PyResult<usize> {
    framing::frame_length(distance, bandwidth).map_err(value_err)
}

#[pyfunction]
fn alphabet_levels(order: usize, depth: f64) -> PyResult<Vec<f64>> {
    Ok(framing::build_alphabet(order, depth).map_err(value_err)?.levels().to_vec())
}

/// Returns `(per_user_frame_lengths, ap_frame_length)`.
#[pyfunction]
fn plan_multiaccess(distances: Vec<f64>, bandwidth: f64) -> PyResult<(Vec<usize>, u64)> {
    let plan = framing::plan_multiaccess_frames(&distances, bandwidth).map_err(value_err)?;
    Ok((plan.user_frames, plan.ap_frame))
}

#[pymodule]
fn rbcom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SPEED_OF_LIGHT", physics::SPEED_OF_LIGHT)?;
    m.add_class::<PyGainMedium>()?;
    m.add_class::<PyCavityLink>()?;
    m.add_class::<PySteadyState>()?;
    m.add_class::<PyBerPoint>()?;
    m.add_function(wrap_pyfunction!(aperture_capture, m)?)?;
    m.add_function(wrap_pyfunction!(round_trip_time, m)?)?;
    m.add_function(wrap_pyfunction!(beam_break_energy, m)?)?;
    m.add_function(wrap_pyfunction!(frame_length, m)?)?;
    m.add_function(wrap_pyfunction!(alphabet_levels, m)?)?;
    m.add_function(wrap_pyfunction!(plan_multiaccess, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_direct, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_adaptive, m)?)?;
    Ok(())
}
