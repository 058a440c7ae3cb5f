//! Run analysis gathered into a JSON report.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    detect_optical_readout, detect_spin_echoes, inversion_at, post_data_plateau, predicted_for_sequence,
    readout_metrics, EchoEvent, EchoTimes, SweepResult, DEFAULT_THRESHOLD_FRAC,
};
use crate::config::Scenario;
use crate::ensemble::{EnsembleTrajectory, FWHM_PER_SIGMA};
use crate::error::Result;
use crate::geometry::{echo_wavevector, GeometryClass};
use crate::pulses::{rad_per_us_to_khz, PulseLabel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub amplitude: String,
    pub time_unit: String,
    pub frequency_unit: String,
    pub pulse_reference_time: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            amplitude: "half: H13 = -Omega_P/2, H23 = -Omega_C/2; Omega_R^2 = Omega_P^2 + Omega_C^2".into(),
            time_unit: "us".into(),
            frequency_unit: "inputs in kHz, internally rad/us (x 2 pi)".into(),
            pulse_reference_time: "pulse center".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub fwhm_khz: f64,
    pub groups: usize,
    pub truncation_sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionFlag {
    pub time_us: f64,
    pub inverted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutReport {
    pub window_us: [f64; 2],
    pub peak_im_rho13: f64,
    pub depletion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub class: GeometryClass,
    /// rad/m
    pub mismatch: f64,
    pub relative_mismatch: f64,
    /// rad/m
    pub k_e: [f64; 3],
    /// rad/s
    pub omega_e: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    #[serde(flatten)]
    pub result: SweepResult,
    pub unit: String,
    pub objective: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smallest_complete: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub conventions: Conventions,
    pub ensemble: EnsembleSummary,
    pub plateau_abs_rho12: Option<f64>,
    pub events: Vec<EchoEvent>,
    pub predicted: Option<EchoTimes>,
    /// Inversion status at the predicted echo times.
    pub inversion: Vec<InversionFlag>,
    pub readout: Option<ReadoutReport>,
    pub geometry: Option<GeometryReport>,
    pub sweep: Option<SweepReport>,
}

/// Analyses `traj`. `without_c2` is the same run with the readout removed,
/// needed for the depletion figure.
pub fn build_report(sc: &Scenario, traj: &EnsembleTrajectory, without_c2: Option<&EnsembleTrajectory>) -> Result<Report> {
    let seq = &sc.sequence;
    let mut events = detect_spin_echoes(traj, seq, DEFAULT_THRESHOLD_FRAC);
    events.extend(detect_optical_readout(traj, seq));
    events.sort_by(|a, b| a.time_us.total_cmp(&b.time_us));

    let predicted = predicted_for_sequence(seq);
    let mut inversion = Vec::new();
    if let Some(p) = &predicted {
        for t in [p.t_e1_us, p.t_e2_us] {
            if let Ok(inverted) = inversion_at(traj, t) {
                inversion.push(InversionFlag { time_us: t, inverted });
            }
        }
    }

    let readout = match (seq.find(&PulseLabel::C2), without_c2) {
        (Some(c2), Some(without)) => {
            let window = (c2.t_start(), c2.t_end());
            let m = readout_metrics(traj, without, window)?;
            Some(ReadoutReport { window_us: [window.0, window.1], peak_im_rho13: m.peak_im_rho13, depletion: m.depletion })
        }
        _ => None,
    };

    let geometry = match &sc.geometry {
        Some(g) => {
            let e = echo_wavevector(g)?;
            Some(GeometryReport {
                class: e.classification,
                mismatch: e.mismatch,
                relative_mismatch: e.relative_mismatch(),
                k_e: [e.k_e.x, e.k_e.y, e.k_e.z],
                omega_e: e.omega_e,
            })
        }
        None => None,
    };

    Ok(Report {
        conventions: Conventions::default(),
        ensemble: EnsembleSummary {
            fwhm_khz: rad_per_us_to_khz(sc.ensemble.sigma_delta * FWHM_PER_SIGMA),
            groups: sc.ensemble.n_groups,
            truncation_sigma: sc.ensemble.truncation,
        },
        plateau_abs_rho12: post_data_plateau(traj, seq),
        events,
        predicted,
        inversion,
        readout,
        geometry,
        sweep: None,
    })
}
