//! Experiment runners. Each one produces a CSV table and an SVG chart in
//! memory; nothing touches the filesystem here.

use std::fmt::Write as _;

use rayon::prelude::*;
use rbcom_core::baselines::{rate_sweep, RATE_CSV_HEADER};
use rbcom_core::framing::plan_multiaccess_frames;
use rbcom_core::mobility::{mobility_sweep, LinkLifetime, MobilityConfig};
use rbcom_core::physics::{beam_break_energy, link_loss, round_trip_time, steady_state_intensity, PhysicsError};
use rbcom_core::rng::derive_seed;
use rbcom_core::scheme_adaptive::{simulate_adaptive_link, AdaptiveSimConfig};
use rbcom_core::scheme_direct::{simulate_direct_link, DirectSimConfig};
use rbcom_core::stats::ErrorCounts;
use rbcom_core::SimError;

use crate::config::{Experiment, ExperimentConfig};
use crate::svg::{Chart, Scale, Series};

pub const STEADY_STATE_CSV_HEADER: &str =
    "distance_m,lasing,intensity_w_m2,gain_tx,gain_rx,link_loss,link_coefficient,detected_power_w";
pub const BER_DIRECT_CSV_HEADER: &str =
    "snr_db,sigma2_w2,symbols,symbol_errors,ser,ser_lo,ser_hi,bits,bit_errors,ber,ber_lo,ber_hi,sync_failures,demod_failures";
pub const BER_ADAPTIVE_CSV_HEADER: &str =
    "snr_db,sigma2_w2,symbols,symbol_errors,ser,ser_lo,ser_hi,bits,bit_errors,ber,ber_lo,ber_hi,sync_failures,outage_fraction";
pub const MOBILITY_CSV_HEADER: &str = "speed_mps,angle_deg,rounds,broken";
pub const MULTIACCESS_CSV_HEADER: &str = "user,distance_m,frame_symbols,ap_frame_symbols,repetitions";
pub const SAFETY_CSV_HEADER: &str = "power_w,distance_m,break_time_s,energy_j";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub svg: String,
}

pub fn run_experiment(config: &ExperimentConfig, experiment: Experiment) -> Result<ExperimentOutput, SimError> {
    match experiment {
        Experiment::SteadyState => steady_state(config),
        Experiment::BerDirect => ber_direct(config),
        Experiment::BerAdaptive => ber_adaptive(config),
        Experiment::Mobility => mobility(config),
        Experiment::Rates => rates(config),
        Experiment::MultiaccessPlan => multiaccess(config),
        Experiment::Safety => safety(config),
    }
}

/// Noise variance that puts the noiseless detector power `(1-alpha) delta p_t`
/// at `snr_db` above the noise.
pub fn sigma2_for_snr(config: &ExperimentConfig, snr_db: f64) -> f64 {
    config.link().detector_coupling() * config.tx_power_w / 10f64.powf(snr_db / 10.0)
}

fn steady_state(config: &ExperimentConfig) -> Result<ExperimentOutput, SimError> {
    let link = config.link();
    // The configured cavity must lase; the sweep then maps where it stops.
    steady_state_intensity(&link)?;
    let mut csv = String::from(STEADY_STATE_CSV_HEADER);
    csv.push('\n');
    let mut power = Vec::new();
    for d in config.rate_distances() {
        let l = link.at_distance(d);
        match steady_state_intensity(&l) {
            Ok(ss) => {
                let p = l.detector_coupling() * l.p_t;
                writeln!(
                    csv,
                    "{d:?},true,{:e},{:e},{:e},{:e},{:e},{:e}",
                    ss.intensity,
                    ss.gain_tx,
                    ss.gain_rx,
                    ss.delta,
                    ss.link_coefficient(l.alpha),
                    p
                )
                .unwrap();
                power.push((d, p));
            }
            Err(PhysicsError::BelowThreshold { .. }) => {
                writeln!(csv, "{d:?},false,,,,{:e},,", link_loss(&l)).unwrap();
                power.push((d, f64::NAN));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let svg = Chart {
        title: "Detected power vs distance",
        x_label: "distance (m)",
        y_label: "detected power (W)",
        y_scale: Scale::Log10,
    }
    .render(&[Series {
        name: "RBCom".into(),
        points: power,
    }]);
    Ok(ExperimentOutput { csv, svg })
}

fn counts_columns(out: &mut String, c: &ErrorCounts) {
    let (slo, shi) = c.ser_interval();
    let (blo, bhi) = c.ber_interval();
    write!(
        out,
        "{},{},{:e},{:e},{:e},{},{},{:e},{:e},{:e}",
        c.symbols,
        c.symbol_errors,
        c.ser(),
        slo,
        shi,
        c.bits,
        c.bit_errors,
        c.ber(),
        blo,
        bhi
    )
    .unwrap();
}

fn ber_chart(title: &str, rows: &[(f64, ErrorCounts)]) -> String {
    Chart {
        title,
        x_label: "SNR (dB)",
        y_label: "BER",
        y_scale: Scale::Log10,
    }
    .render(&[Series {
        name: "BER".into(),
        points: rows.iter().map(|(s, c)| (*s, c.ber())).collect(),
    }])
}

fn ber_direct(config: &ExperimentConfig) -> Result<ExperimentOutput, SimError> {
    let link = config.link();
    steady_state_intensity(&link)?;
    let points: Vec<_> = config
        .ber_snr_db
        .par_iter()
        .enumerate()
        .map(|(i, &snr)| {
            let sigma2 = sigma2_for_snr(config, snr);
            let sim = DirectSimConfig {
                link,
                gain_mode: config.gain_mode,
                alphabet: config.alphabet(),
                frame_len: None,
                modulation_bandwidth: config.modulation_bandwidth_hz,
                ss_len: config.ss_length,
                sync_threshold: config.sync_threshold,
                sync_slack: config.sync_slack,
                sigma2,
            };
            simulate_direct_link(&sim, config.ber_frames, derive_seed(config.seed, i as u64)).map(|s| (snr, sigma2, s))
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from(BER_DIRECT_CSV_HEADER);
    csv.push('\n');
    for (snr, sigma2, s) in &points {
        write!(csv, "{snr:?},{sigma2:e},").unwrap();
        counts_columns(&mut csv, &s.counts);
        writeln!(csv, ",{},{}", s.sync_failures, s.demod_failures).unwrap();
    }
    let rows: Vec<_> = points.iter().map(|(snr, _, s)| (*snr, s.counts)).collect();
    let svg = ber_chart("Direct scheme BER", &rows);
    Ok(ExperimentOutput { csv, svg })
}

fn ber_adaptive(config: &ExperimentConfig) -> Result<ExperimentOutput, SimError> {
    let link = config.link();
    steady_state_intensity(&link)?;
    let points: Vec<_> = config
        .ber_snr_db
        .par_iter()
        .enumerate()
        .map(|(i, &snr)| {
            let sigma2 = sigma2_for_snr(config, snr);
            let sim = AdaptiveSimConfig {
                link,
                alphabet: config.alphabet(),
                frame_len: None,
                modulation_bandwidth: config.modulation_bandwidth_hz,
                ss_len: config.ss_length,
                sync_threshold: config.sync_threshold,
                sync_slack: config.sync_slack,
                sigma2,
            };
            simulate_adaptive_link(&sim, config.ber_frames, derive_seed(config.seed, i as u64)).map(|s| (snr, sigma2, s))
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from(BER_ADAPTIVE_CSV_HEADER);
    csv.push('\n');
    for (snr, sigma2, s) in &points {
        write!(csv, "{snr:?},{sigma2:e},").unwrap();
        counts_columns(&mut csv, &s.counts);
        writeln!(csv, ",{},{:e}", s.sync_failures, s.outage_fraction()).unwrap();
    }
    let rows: Vec<_> = points.iter().map(|(snr, _, s)| (*snr, s.counts)).collect();
    let svg = ber_chart("Adaptive scheme BER", &rows);
    Ok(ExperimentOutput { csv, svg })
}

fn mobility(config: &ExperimentConfig) -> Result<ExperimentOutput, SimError> {
    let angles = config.mobility_angles_deg();
    let threshold = config
        .mobility_compensation
        .then(|| config.mobility_compensation_threshold_hz.unwrap_or(config.fwhm_hz / 2.0));
    let table = mobility_sweep(
        &config.mobility_speeds_mps,
        &angles,
        &MobilityConfig {
            link: config.link(),
            initial_distance: config.mobility_initial_distance_m,
            max_rounds: config.mobility_max_rounds,
            compensation_threshold: threshold,
        },
    )?;
    let mut csv = String::from(MOBILITY_CSV_HEADER);
    csv.push('\n');
    let mut series = Vec::new();
    for (k, &v) in table.speeds.iter().enumerate() {
        let mut points = Vec::new();
        for (j, &a) in table.angles_deg.iter().enumerate() {
            match table.cells[k][j] {
                LinkLifetime::Broken(r) => {
                    writeln!(csv, "{v:?},{a:?},{r},true").unwrap();
                    points.push((a, r as f64));
                }
                LinkLifetime::Unbroken => {
                    writeln!(csv, "{v:?},{a:?},{},false", config.mobility_max_rounds).unwrap();
                    points.push((a, config.mobility_max_rounds as f64));
                }
            }
        }
        series.push(Series {
            name: format!("v = {v} m/s"),
            points,
        });
    }
    let svg = Chart {
        title: "Rounds until link break",
        x_label: "direction angle (deg)",
        y_label: "rounds",
        y_scale: Scale::Log10,
    }
    .render(&series);
    Ok(ExperimentOutput { csv, svg })
}

fn rates(config: &ExperimentConfig) -> Result<ExperimentOutput, SimError> {
    let rows = rate_sweep(&config.rate_scenario(), &config.rate_distances())?;
    let mut csv = String::from(RATE_CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        writeln!(csv, "{:?},{:e},{:e},{:e}", r.distance, r.vlc_bps, r.rbcom_bps, r.foc_bps).unwrap();
    }
    let pick = |f: fn(&rbcom_core::baselines::RateRow) -> f64| rows.iter().map(|r| (r.distance, f(r))).collect();
    let svg = Chart {
        title: "Achievable rate vs distance",
        x_label: "distance (m)",
        y_label: "rate (bit/s)",
        y_scale: Scale::Log10,
    }
    .render(&[
        Series {
            name: "VLC".into(),
            points: pick(|r| r.vlc_bps),
        },
        Series {
            name: "RBCom".into(),
            points: pick(|r| r.rbcom_bps),
        },
        Series {
            name: "FOC".into(),
            points: pick(|r| r.foc_bps),
        },
    ]);
    Ok(ExperimentOutput { csv, svg })
}

fn multiaccess(config: &ExperimentConfig) -> Result<ExperimentOutput, SimError> {
    let plan = plan_multiaccess_frames(&config.multiaccess_distances_m, config.modulation_bandwidth_hz)?;
    let mut csv = String::from(MULTIACCESS_CSV_HEADER);
    csv.push('\n');
    let mut points = Vec::new();
    for (i, (&d, &n)) in config.multiaccess_distances_m.iter().zip(&plan.user_frames).enumerate() {
        writeln!(csv, "{i},{d:?},{n},{},{}", plan.ap_frame, plan.ap_frame / n as u64).unwrap();
        points.push((d, n as f64));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let svg = Chart {
        title: "Per-user frame length",
        x_label: "distance (m)",
        y_label: "symbols per frame",
        y_scale: Scale::Linear,
    }
    .render(&[Series {
        name: "frame".into(),
        points,
    }]);
    Ok(ExperimentOutput { csv, svg })
}

fn safety(config: &ExperimentConfig) -> Result<ExperimentOutput, SimError> {
    let (p, d) = (config.safety_power_w, config.safety_distance_m);
    let mut csv = String::from(SAFETY_CSV_HEADER);
    csv.push('\n');
    writeln!(csv, "{p:?},{d:?},{:.3e},{:.3e}", round_trip_time(d), beam_break_energy(p, d)).unwrap();
    let points = ExperimentConfig::grid(0.0, d.max(1.0), d.max(1.0) / 50.0)
        .into_iter()
        .map(|x| (x, beam_break_energy(p, x)))
        .collect();
    let svg = Chart {
        title: "Energy delivered before the beam collapses",
        x_label: "distance (m)",
        y_label: "energy (J)",
        y_scale: Scale::Linear,
    }
    .render(&[Series {
        name: format!("P = {p} W"),
        points,
    }]);
    Ok(ExperimentOutput { csv, svg })
}
