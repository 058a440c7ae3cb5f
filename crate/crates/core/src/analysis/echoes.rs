use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleTrajectory;
use crate::error::{Error, Result};
use crate::pulses::{PulseLabel, RamanPulse, Sequence};

/// Echo threshold as a fraction of the post-D plateau.
pub const DEFAULT_THRESHOLD_FRAC: f64 = 0.5;
/// The plateau is the median |<rho12>| over this window after D, us.
pub const PLATEAU_WINDOW_US: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EchoKind {
    SpinEcho,
    OpticalReadout,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoEvent {
    pub kind: EchoKind,
    pub time_us: f64,
    pub amplitude: f64,
    /// Averaged rho22 > rho11 at the peak.
    pub inverted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoTimes {
    pub t_e1_us: f64,
    pub t_e2_us: f64,
    /// Both echoes fall on the same instant.
    pub degenerate: bool,
}

/// E1 from the two-pulse rephasing relation 2 T_R1 - T_D, E2 = 2 T_R2 - T_E1.
pub fn predicted_echo_times(t_d: f64, t_r1: f64, t_r2: f64) -> Result<EchoTimes> {
    if !(t_d < t_r1 && t_r1 < t_r2) {
        return Err(Error::InvalidArgument(format!(
            "pulse times must satisfy T_D < T_R1 < T_R2, got ({t_d}, {t_r1}, {t_r2})"
        )));
    }
    let t_e1_us = 2.0 * t_r1 - t_d;
    let t_e2_us = 2.0 * t_r2 - t_e1_us;
    Ok(EchoTimes { t_e1_us, t_e2_us, degenerate: (t_e1_us - t_e2_us).abs() < 1e-12 })
}

/// Echo predictions from the pulse centers of D, R1 and R2, when present.
pub fn predicted_for_sequence(seq: &Sequence) -> Option<EchoTimes> {
    let c = |l: PulseLabel| seq.find(&l).map(RamanPulse::center);
    predicted_echo_times(c(PulseLabel::D)?, c(PulseLabel::R1)?, c(PulseLabel::R2)?).ok()
}

fn data_pulse(seq: &Sequence) -> Option<&RamanPulse> {
    seq.find(&PulseLabel::D).or_else(|| {
        seq.pulses
            .iter()
            .min_by(|a, b| a.t_start().total_cmp(&b.t_start()))
    })
}

/// Median |<rho12>| over the window following the data pulse.
pub fn post_data_plateau(traj: &EnsembleTrajectory, seq: &Sequence) -> Option<f64> {
    let end = data_pulse(seq)?.t_end();
    let mut v: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.averaged)
        .filter(|(t, _)| **t > end + 1e-9 && **t <= end + PLATEAU_WINDOW_US + 1e-9)
        .map(|(_, s)| s.abs_avg_rho12)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Revivals of |<rho12>| during free evolution.
///
/// A peak counts when it is a local maximum away from every pulse, exceeds
/// `threshold_frac` times the post-D plateau, and the coherence was below
/// that level earlier in the same free interval.
pub fn detect_spin_echoes(traj: &EnsembleTrajectory, seq: &Sequence, threshold_frac: f64) -> Vec<EchoEvent> {
    let Some(plateau) = post_data_plateau(traj, seq) else {
        return Vec::new();
    };
    let data_end = data_pulse(seq).map_or(0.0, RamanPulse::t_end);
    let level = threshold_frac * plateau;
    let a: Vec<f64> = traj.averaged.iter().map(|s| s.abs_avg_rho12).collect();
    let free: Vec<bool> = traj.times.iter().map(|&t| !seq.in_pulse(t)).collect();

    let mut events = Vec::new();
    let mut dipped = false;
    for i in 0..a.len() {
        if !free[i] {
            dipped = false;
            continue;
        }
        if a[i] < level {
            dipped = true;
            continue;
        }
        if !dipped || i == 0 || i + 1 >= a.len() || traj.times[i] <= data_end {
            continue;
        }
        if free[i - 1] && free[i + 1] && a[i] > a[i - 1] && a[i] >= a[i + 1] {
            let s = &traj.averaged[i];
            events.push(EchoEvent {
                kind: EchoKind::SpinEcho,
                time_us: traj.times[i],
                amplitude: a[i],
                inverted: s.rho22 > s.rho11,
            });
            dipped = false;
        }
    }
    events
}

/// Peak of |<Im rho13>| inside each C2 readout window.
pub fn detect_optical_readout(traj: &EnsembleTrajectory, seq: &Sequence) -> Vec<EchoEvent> {
    seq.pulses
        .iter()
        .filter(|p| p.label == PulseLabel::C2)
        .filter_map(|p| {
            let (lo, hi) = (p.t_start(), p.t_end());
            traj.times
                .iter()
                .zip(&traj.averaged)
                .filter(|(t, _)| **t >= lo - 1e-9 && **t <= hi + 1e-9)
                .max_by(|a, b| a.1.im_rho13.abs().total_cmp(&b.1.im_rho13.abs()))
                .map(|(t, s)| EchoEvent {
                    kind: EchoKind::OpticalReadout,
                    time_us: *t,
                    amplitude: s.im_rho13.abs(),
                    inverted: s.rho22 > s.rho11,
                })
        })
        .collect()
}

pub fn inversion_at(traj: &EnsembleTrajectory, t: f64) -> Result<bool> {
    let s = traj.sample_at(t)?;
    Ok(s.rho22 > s.rho11)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutMetrics {
    pub peak_im_rho13: f64,
    pub depletion: f64,
}

/// Compares a run with the C2 readout against the same run without it.
///
/// `depletion` is 1 - |<rho12>|_with / |<rho12>|_without at the first sample
/// at or after the end of `window`.
pub fn readout_metrics(
    with_c2: &EnsembleTrajectory,
    without_c2: &EnsembleTrajectory,
    window: (f64, f64),
) -> Result<ReadoutMetrics> {
    if with_c2.times != without_c2.times {
        return Err(Error::GridMismatch);
    }
    let (lo, hi) = window;
    let last = *with_c2.times.last().ok_or(Error::GridMismatch)?;
    if !(lo <= hi) || lo < with_c2.times[0] - 1e-9 || hi > last + 1e-9 {
        return Err(Error::OutOfSpan { t_us: hi });
    }
    let peak_im_rho13 = with_c2
        .times
        .iter()
        .zip(&with_c2.averaged)
        .filter(|(t, _)| **t >= lo - 1e-9 && **t <= hi + 1e-9)
        .map(|(_, s)| s.im_rho13.abs())
        .fold(0.0, f64::max);
    let k = with_c2.times.partition_point(|&t| t < hi - 1e-9).min(with_c2.len() - 1);
    let reference = without_c2.averaged[k].abs_avg_rho12;
    let depletion = if reference > 0.0 {
        1.0 - with_c2.averaged[k].abs_avg_rho12 / reference
    } else {
        0.0
    };
    Ok(ReadoutMetrics { peak_im_rho13, depletion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{run_ensemble, EnsembleSpec};
    use crate::presets::{preset_sequence, Preset};
    use crate::pulses::{khz_to_rad_per_us, make_raman_pulse, LegOptions};

    #[test]
    fn predicted_times() {
        let e = predicted_echo_times(0.5, 20.0, 50.0).unwrap();
        assert_eq!((e.t_e1_us, e.t_e2_us), (39.5, 60.5));
        assert!(!e.degenerate);
        let e = predicted_echo_times(0.0, 10.0, 20.0).unwrap();
        assert_eq!((e.t_e1_us, e.t_e2_us), (20.0, 20.0));
        assert!(e.degenerate);
        assert!(predicted_echo_times(20.0, 10.0, 30.0).is_err());
        assert!(predicted_echo_times(0.0, 10.0, 10.0).is_err());
    }

    #[test]
    fn preset_prediction() {
        let sc = preset_sequence(Preset::Fig3);
        let e = predicted_for_sequence(&sc.sequence).unwrap();
        assert_eq!((e.t_e1_us, e.t_e2_us), (39.5, 60.5));
        assert!(predicted_for_sequence(&preset_sequence(Preset::Fig2b).sequence).is_none());
    }

    #[test]
    fn data_only_run_has_no_echo() {
        let sc = preset_sequence(Preset::Fig2e);
        let tr = run_ensemble(&sc.sequence, &sc.ensemble, &sc.params, sc.sample_interval).unwrap();
        assert!(detect_spin_echoes(&tr, &sc.sequence, DEFAULT_THRESHOLD_FRAC).is_empty());
        let sc = preset_sequence(Preset::Fig2c);
        let tr = run_ensemble(&sc.sequence, &sc.ensemble, &sc.params, sc.sample_interval).unwrap();
        assert!(detect_spin_echoes(&tr, &sc.sequence, DEFAULT_THRESHOLD_FRAC).is_empty());
    }

    #[test]
    fn ground_state_is_not_inverted() {
        let sc = preset_sequence(Preset::Fig2b);
        let tr = run_ensemble(&sc.sequence, &sc.ensemble, &sc.params, sc.sample_interval).unwrap();
        assert!(!inversion_at(&tr, 0.0).unwrap());
        assert!(inversion_at(&tr, 100.0).is_err());
    }

    #[test]
    fn identical_runs_show_no_depletion() {
        let sc = preset_sequence(Preset::Fig3);
        let tr = run_ensemble(&sc.sequence, &sc.ensemble, &sc.params, sc.sample_interval).unwrap();
        let m = readout_metrics(&tr, &tr, (60.5, 65.5)).unwrap();
        assert_eq!(m.depletion, 0.0);
        // only the static residual of the detuned groups remains
        assert!(m.peak_im_rho13 < 1e-3);
    }

    #[test]
    fn readout_of_empty_coherence() {
        let c2 = make_raman_pulse(PulseLabel::C2, 0.0, khz_to_rad_per_us(100.0), 1.0, 5.0, &LegOptions::default()).unwrap();
        let with = Sequence::new(vec![c2], 10.0);
        let without = with.without(&PulseLabel::C2);
        let spec = EnsembleSpec::default();
        let a = run_ensemble(&with, &spec, &Default::default(), 0.1).unwrap();
        let b = run_ensemble(&without, &spec, &Default::default(), 0.1).unwrap();
        let m = readout_metrics(&a, &b, (1.0, 6.0)).unwrap();
        assert!(m.peak_im_rho13 < 1e-15);
        assert_eq!(m.depletion, 0.0);
        let short = run_ensemble(&Sequence::empty(5.0), &spec, &Default::default(), 0.1).unwrap();
        assert!(matches!(readout_metrics(&a, &short, (1.0, 2.0)), Err(Error::GridMismatch)));
        assert!(readout_metrics(&a, &b, (1.0, 20.0)).is_err());
    }
}
