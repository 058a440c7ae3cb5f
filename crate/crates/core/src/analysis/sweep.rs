use serde::{Deserialize, Serialize};

use crate::dynamics::{resonant_lambda_oracle, sample_grid, AtomParams};
use crate::ensemble::{run_ensemble_at, EnsembleSpec};
use crate::error::{Error, Result};
use crate::pulses::{generalized_rabi, make_raman_pulse, LegOptions, PulseLabel, Sequence};

use super::echoes::readout_metrics;

/// Depletion a readout pulse must reach to count as complete.
pub const DEPLETION_TARGET: f64 = 0.9;

/// Figure of merit of a coupling-strength sweep, evaluated at the end of D.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepObjective {
    /// |<rho12>| over the resonant closed-form |rho12| for the same pulse:
    /// the fraction of the written coherence that survives the spread.
    #[default]
    ResonantFraction,
    /// Raw |<rho12>|.
    Coherence,
}

impl std::str::FromStr for SweepObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resonant_fraction" => Ok(SweepObjective::ResonantFraction),
            "coherence" => Ok(SweepObjective::Coherence),
            _ => Err(Error::InvalidArgument(format!(
                "unknown objective `{s}` (expected resonant_fraction or coherence)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: String,
    pub values: Vec<f64>,
    pub objectives: Vec<f64>,
    /// Value with the largest objective; the first one on ties.
    pub argbest: f64,
}

impl SweepResult {
    fn new(parameter: &str, values: Vec<f64>, objectives: Vec<f64>) -> Self {
        let mut best = 0;
        for (i, o) in objectives.iter().enumerate() {
            if *o > objectives[best] {
                best = i;
            }
        }
        SweepResult { parameter: parameter.into(), argbest: values[best], values, objectives }
    }
}

fn check_values(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidArgument(format!("{what} must be a non-empty list of positive numbers")));
    }
    Ok(())
}

/// Data pulse whose duration follows the coupling so the area stays fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTemplate {
    pub omega_p: f64,
    pub t_start: f64,
    pub area: f64,
    pub legs: LegOptions,
}

/// Ensemble coherence right after D for each coupling amplitude (rad/us).
pub fn sweep_coupling(
    template: &CouplingTemplate,
    omega_c_values: &[f64],
    spec: &EnsembleSpec,
    base: &AtomParams,
    objective: SweepObjective,
) -> Result<SweepResult> {
    check_values(omega_c_values, "coupling values")?;
    let mut objectives = Vec::with_capacity(omega_c_values.len());
    for &omega_c in omega_c_values {
        let duration = template.area / generalized_rabi(template.omega_p, omega_c);
        let d = make_raman_pulse(PulseLabel::D, template.omega_p, omega_c, template.t_start, duration, &template.legs)?;
        let t_end = d.t_end();
        let seq = Sequence::new(vec![d], t_end);
        let tr = run_ensemble_at(&seq, spec, base, &[t_end], false)?;
        let coherence = tr.averaged[0].abs_avg_rho12;
        objectives.push(match objective {
            SweepObjective::Coherence => coherence,
            SweepObjective::ResonantFraction => {
                let reference = resonant_lambda_oracle(template.omega_p, omega_c, duration)?.rho12().norm();
                if reference > 0.0 { coherence / reference } else { 0.0 }
            }
        });
    }
    Ok(SweepResult::new("omega_c", omega_c_values.to_vec(), objectives))
}

/// A sequence without readout and where the C2 pulse is switched on.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutTemplate {
    pub sequence: Sequence,
    pub c2_start: f64,
    pub c2_omega: f64,
    pub k_label: String,
    pub sample_interval: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSweep {
    /// Depletion of the echo coherence against C2 area (rad).
    pub curve: SweepResult,
    pub peak_im_rho13: Vec<f64>,
    /// Smallest swept area whose depletion reaches [`DEPLETION_TARGET`].
    pub smallest_complete: Option<f64>,
}

/// Depletion of the coherence by a C2 pulse of each area (rad).
pub fn sweep_readout_area(
    template: &ReadoutTemplate,
    areas: &[f64],
    spec: &EnsembleSpec,
    base: &AtomParams,
) -> Result<ReadoutSweep> {
    check_values(areas, "readout areas")?;
    if !(template.c2_omega > 0.0 && template.sample_interval > 0.0) {
        return Err(Error::InvalidArgument("readout amplitude and sample interval must be positive".into()));
    }
    let max_area = areas.iter().copied().fold(0.0, f64::max);
    let span = (template.c2_start + max_area / template.c2_omega + template.sample_interval)
        .max(template.sequence.total_span);
    let times = sample_grid(span, template.sample_interval);
    let without = Sequence::new(template.sequence.without(&PulseLabel::C2).pulses, span);
    let reference = run_ensemble_at(&without, spec, base, &times, false)?;

    let legs = LegOptions { k_coupling: template.k_label.clone(), ..LegOptions::default() };
    let mut depletion = Vec::with_capacity(areas.len());
    let mut peaks = Vec::with_capacity(areas.len());
    for &area in areas {
        let duration = area / template.c2_omega;
        let c2 = make_raman_pulse(PulseLabel::C2, 0.0, template.c2_omega, template.c2_start, duration, &legs)?;
        let mut with = without.clone();
        with.pulses.push(c2);
        let tr = run_ensemble_at(&with, spec, base, &times, false)?;
        let m = readout_metrics(&tr, &reference, (template.c2_start, template.c2_start + duration))?;
        depletion.push(m.depletion);
        peaks.push(m.peak_im_rho13);
    }
    let smallest_complete = areas
        .iter()
        .zip(&depletion)
        .filter(|(_, d)| **d >= DEPLETION_TARGET)
        .map(|(a, _)| *a)
        .reduce(f64::min);
    Ok(ReadoutSweep {
        curve: SweepResult::new("c2_area", areas.to_vec(), depletion),
        peak_im_rho13: peaks,
        smallest_complete,
    })
}
