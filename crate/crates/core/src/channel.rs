//! Photodetector branch shared by both transceiver schemes.
//!
//! The receiver splitter sends `1 - alpha` of the incident beam to the
//! detector; with link loss `delta` the detected amplitude is
//! `sqrt((1 - alpha) * delta) * s`, plus zero-mean Gaussian noise.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::physics::CavityLink;

/// Detected samples `y[n] = sqrt(coupling) * s[n] + z[n]`, `z ~ N(0, sigma2)`.
pub fn photodetect<R: Rng + ?Sized>(s_frame: &[f64], coupling: f64, sigma2: f64, rng: &mut R) -> Vec<f64> {
    let gain = coupling.sqrt();
    let sigma = sigma2.max(0.0).sqrt();
    s_frame
        .iter()
        .map(|&s| {
            let z: f64 = if sigma > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
            gain * s + sigma * z
        })
        .collect()
}

/// [`photodetect`] with the coupling taken from `link`.
pub fn receive<R: Rng + ?Sized>(s_frame: &[f64], link: &CavityLink, sigma2: f64, rng: &mut R) -> Vec<f64> {
    photodetect(s_frame, link.detector_coupling(), sigma2, rng)
}
