//! Parameterizations of the reference protocols.
//!
//! All decay rates are zero and every group starts in |1>. The spin
//! broadening defaults to a 100 kHz FWHM Gaussian sampled with 201 groups.

use std::fmt;
use std::str::FromStr;

use crate::config::{EnsembleConfig, GeometryConfig, OutputConfig, PulseEntry, RunConfig, Scenario, SystemConfig};
use crate::error::{Error, Result};

/// Probe leg of the data pulse, kHz.
pub const DATA_PROBE_KHZ: f64 = 50.0;
/// Readout coupling, kHz.
pub const READOUT_KHZ: f64 = 100.0;
/// Generalized Rabi frequency of the rephasing pulses, kHz.
pub const REPHASE_RABI_KHZ: f64 = 2500.0;
/// Rephasing pulse length, us (area 2 pi at 2.5 MHz).
pub const REPHASE_DURATION_US: f64 = 0.4;
pub const R1_CENTER_US: f64 = 20.0;
pub const R2_CENTER_US: f64 = 50.0;
/// C2 area that fully depletes the second echo at the default broadening,
/// found with the readout-area sweep.
pub const READOUT_AREA: f64 = 0.9 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Weak-field data pulse, Omega_R = 200 kHz, whole ensemble.
    Fig2b,
    /// As `Fig2b`, resonant group only.
    Fig2c,
    /// Strong coupling, Omega_R = 1 MHz, whole ensemble.
    Fig2e,
    /// Data pulse with double rephasing.
    Fig3,
    /// `Fig3` plus a C2 readout at the second echo.
    Fig4a,
    /// Population swap across R1 for the resonant group.
    Fig4c,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::Fig2b, Preset::Fig2c, Preset::Fig2e, Preset::Fig3, Preset::Fig4a, Preset::Fig4c];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2b => "fig2b",
            Preset::Fig2c => "fig2c",
            Preset::Fig2e => "fig2e",
            Preset::Fig3 => "fig3",
            Preset::Fig4a => "fig4a",
            Preset::Fig4c => "fig4c",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{s}`")))
    }
}

/// Coupling leg that gives generalized Rabi `omega_r_khz` with the 50 kHz probe.
pub fn coupling_for_rabi_khz(omega_r_khz: f64) -> f64 {
    (omega_r_khz * omega_r_khz - DATA_PROBE_KHZ * DATA_PROBE_KHZ).sqrt()
}

fn raman(label: &str, t_start: f64, duration: f64, p_khz: f64, c_khz: f64) -> PulseEntry {
    PulseEntry {
        label: label.into(),
        t_start_us: t_start,
        duration_us: duration,
        omega_p_khz: p_khz,
        omega_c_khz: c_khz,
        phase_deg: [0.0, 0.0],
        k_labels: None,
    }
}

fn data_pulse(omega_r_khz: f64, duration: f64) -> PulseEntry {
    raman("D", 0.0, duration, DATA_PROBE_KHZ, coupling_for_rabi_khz(omega_r_khz))
}

fn rephase(label: &str, center: f64) -> PulseEntry {
    let leg = REPHASE_RABI_KHZ / 2f64.sqrt();
    raman(label, center - 0.5 * REPHASE_DURATION_US, REPHASE_DURATION_US, leg, leg)
}

/// C2 readout switched on at `t_on` with area `area` (rad).
pub fn readout_pulse(t_on: f64, area: f64) -> PulseEntry {
    let duration = area / crate::pulses::khz_to_rad_per_us(READOUT_KHZ);
    raman("C2", t_on, duration, 0.0, READOUT_KHZ)
}

/// Second-echo time of the double-rephasing protocol with D on [0, 1] us.
pub fn fig3_echo_times() -> (f64, f64) {
    let t_d = 0.5;
    let t_e1 = 2.0 * R1_CENTER_US - t_d;
    (t_e1, 2.0 * R2_CENTER_US - t_e1)
}

fn output(sample: f64, span: f64) -> OutputConfig {
    OutputConfig {
        sample_interval_us: sample,
        span_us: span,
        per_group: false,
        csv: "averaged.csv".into(),
        per_group_csv: "per_group.csv".into(),
        report: "report.json".into(),
        svg: "plot.svg".into(),
    }
}

pub fn preset_config(preset: Preset) -> RunConfig {
    let broadened = EnsembleConfig::default();
    let resonant = EnsembleConfig { fwhm_khz: 0.0, groups: 1, truncation_sigma: 4.0 };
    let (ensemble, sequence, out) = match preset {
        Preset::Fig2b => (broadened, vec![data_pulse(200.0, 5.0)], output(0.02, 20.0)),
        Preset::Fig2c => (resonant, vec![data_pulse(200.0, 5.0)], output(0.02, 20.0)),
        Preset::Fig2e => (broadened, vec![data_pulse(1000.0, 5.0)], output(0.02, 20.0)),
        Preset::Fig3 => (
            broadened,
            vec![data_pulse(1000.0, 1.0), rephase("R1", R1_CENTER_US), rephase("R2", R2_CENTER_US)],
            output(0.05, 80.0),
        ),
        Preset::Fig4a => (
            broadened,
            vec![
                data_pulse(1000.0, 1.0),
                rephase("R1", R1_CENTER_US),
                rephase("R2", R2_CENTER_US),
                readout_pulse(fig3_echo_times().1, READOUT_AREA),
            ],
            output(0.05, 80.0),
        ),
        Preset::Fig4c => (
            resonant,
            vec![data_pulse(1000.0, 1.0), rephase("R1", R1_CENTER_US)],
            output(0.01, 25.0),
        ),
    };
    RunConfig { system: SystemConfig::default(), ensemble, sequence, geometry: GeometryConfig::default(), output: out }
}

/// Sequence, ensemble, atom parameters and sampling of a preset.
pub fn preset_sequence(preset: Preset) -> Scenario {
    preset_config(preset)
        .build()
        .expect("presets are valid configurations")
}
