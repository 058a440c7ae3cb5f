//! Declarative run configuration (TOML).
//!
//! Frequencies are ordinary frequencies in kHz and are multiplied by 2 pi on
//! load. Rates are in 1/us and times in us. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::AtomParams;
use crate::ensemble::EnsembleSpec;
use crate::geometry::{BeamGeometry, WaveVector};
use crate::pulses::{khz_to_rad_per_us, validate_sequence, Leg, PulseLabel, PulseSegment, RamanPulse, Sequence, Envelope, Violation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub sequence: Vec<PulseEntry>,
    #[serde(default)]
    pub geometry: GeometryConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// |3> -> |1> population decay, 1/us.
    pub gamma31_per_us: f64,
    /// |3> -> |2> population decay, 1/us.
    pub gamma32_per_us: f64,
    pub gamma13_per_us: f64,
    pub gamma23_per_us: f64,
    pub gamma12_per_us: f64,
    /// One-photon (probe) detuning Delta, kHz.
    pub one_photon_detuning_khz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub fwhm_khz: f64,
    pub groups: usize,
    pub truncation_sigma: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { fwhm_khz: 100.0, groups: 201, truncation_sigma: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseEntry {
    pub label: String,
    pub t_start_us: f64,
    pub duration_us: f64,
    #[serde(default)]
    pub omega_p_khz: f64,
    #[serde(default)]
    pub omega_c_khz: f64,
    /// Leg phases [probe, coupling] in degrees.
    #[serde(default)]
    pub phase_deg: [f64; 2],
    /// Beam names, one per present leg: [probe, coupling], or [coupling]
    /// for a C2 readout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_labels: Option<Vec<String>>,
}

impl PulseEntry {
    fn is_readout(&self) -> bool {
        self.label == "C2"
    }

    fn beam_labels(&self) -> Vec<String> {
        match &self.k_labels {
            Some(v) => v.clone(),
            None if self.is_readout() => vec!["C2".into()],
            None => vec!["P".into(), "C1".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub direction: [f64; 3],
    pub wavelength_nm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub beams: BTreeMap<String, BeamConfig>,
    /// Readout beam used for phase matching when the sequence has no C2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub readout: Option<String>,
}

impl Default for GeometryConfig {
    /// Collinear data beams along +z with a counterpropagating readout, all
    /// at one optical wavelength.
    fn default() -> Self {
        let beam = |z: f64| BeamConfig { direction: [0.0, 0.0, z], wavelength_nm: 606.0 };
        let beams = [("P", beam(1.0)), ("C1", beam(1.0)), ("C2", beam(-1.0))]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        GeometryConfig { beams, readout: Some("C2".into()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub sample_interval_us: f64,
    pub span_us: f64,
    #[serde(default)]
    pub per_group: bool,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_per_group_csv")]
    pub per_group_csv: String,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_svg")]
    pub svg: String,
}

fn default_csv() -> String {
    "averaged.csv".into()
}
fn default_per_group_csv() -> String {
    "per_group.csv".into()
}
fn default_report() -> String {
    "report.json".into()
}
fn default_svg() -> String {
    "plot.svg".into()
}

/// One problem in a configuration, located by field path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("configuration error:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
pub struct ConfigError(pub Vec<Diagnostic>);

/// Everything needed to run a configuration, in internal units.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub sequence: Sequence,
    pub ensemble: EnsembleSpec,
    pub params: AtomParams,
    pub sample_interval: f64,
    pub geometry: Option<BeamGeometry>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        ConfigError(vec![Diagnostic { path: String::new(), message: e.to_string().trim_end().to_string() }])
    })?;
    cfg.build()?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("run configuration is always representable in TOML")
}

impl RunConfig {
    /// Checks the configuration and converts it to internal units.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let mut diags = Vec::new();
        let mut diag = |path: String, message: String| diags.push(Diagnostic { path, message });

        let s = &self.system;
        let params = AtomParams {
            delta: 0.0,
            big_delta: khz_to_rad_per_us(s.one_photon_detuning_khz),
            gamma_pop31: s.gamma31_per_us,
            gamma_pop32: s.gamma32_per_us,
            gamma13: s.gamma13_per_us,
            gamma23: s.gamma23_per_us,
            gamma12: s.gamma12_per_us,
        };
        for (name, v) in [
            ("gamma31_per_us", s.gamma31_per_us),
            ("gamma32_per_us", s.gamma32_per_us),
            ("gamma13_per_us", s.gamma13_per_us),
            ("gamma23_per_us", s.gamma23_per_us),
            ("gamma12_per_us", s.gamma12_per_us),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                diag(format!("system.{name}"), format!("rate {v} must be finite and >= 0"));
            }
        }
        if !s.one_photon_detuning_khz.is_finite() {
            diag("system.one_photon_detuning_khz".into(), "must be finite".into());
        }
        for w in params.warnings() {
            log::warn!("{w}");
        }

        let e = &self.ensemble;
        if !(e.fwhm_khz >= 0.0) || !e.fwhm_khz.is_finite() {
            diag("ensemble.fwhm_khz".into(), format!("{} must be finite and >= 0", e.fwhm_khz));
        }
        if e.groups == 0 || e.groups.is_multiple_of(2) {
            diag("ensemble.groups".into(), format!("{} must be odd and positive", e.groups));
        }
        if !(e.truncation_sigma > 0.0) || !e.truncation_sigma.is_finite() {
            diag("ensemble.truncation_sigma".into(), format!("{} must be positive", e.truncation_sigma));
        }
        let ensemble = EnsembleSpec::from_fwhm_khz(e.fwhm_khz, e.groups, e.truncation_sigma);

        let o = &self.output;
        if !(o.sample_interval_us > 0.0) || !o.sample_interval_us.is_finite() {
            diag("output.sample_interval_us".into(), format!("{} must be positive", o.sample_interval_us));
        }
        if !(o.span_us > 0.0) || !o.span_us.is_finite() {
            diag("output.span_us".into(), format!("{} must be positive", o.span_us));
        }

        let mut beams = BTreeMap::new();
        for (name, b) in &self.geometry.beams {
            let dir = Vector3::new(b.direction[0], b.direction[1], b.direction[2]);
            match WaveVector::from_wavelength_nm(dir, b.wavelength_nm) {
                Ok(w) => {
                    beams.insert(name.clone(), w);
                }
                Err(err) => diag(format!("geometry.beams.{name}"), err.to_string()),
            }
        }
        if let Some(r) = &self.geometry.readout {
            if !self.geometry.beams.contains_key(r) {
                diag("geometry.readout".into(), format!("beam `{r}` is not defined in geometry.beams"));
            }
        }

        let mut pulses = Vec::with_capacity(self.sequence.len());
        for (i, p) in self.sequence.iter().enumerate() {
            let path = |field: &str| format!("sequence[{i}].{field}");
            let before = diags.len();
            if !(p.duration_us > 0.0) || !p.duration_us.is_finite() {
                diags.push(Diagnostic { path: path("duration_us"), message: format!("{} must be positive", p.duration_us) });
            }
            if !(p.t_start_us >= 0.0) || !p.t_start_us.is_finite() {
                diags.push(Diagnostic { path: path("t_start_us"), message: format!("{} must be >= 0", p.t_start_us) });
            }
            for (field, v) in [("omega_p_khz", p.omega_p_khz), ("omega_c_khz", p.omega_c_khz)] {
                if !(v >= 0.0) || !v.is_finite() {
                    diags.push(Diagnostic { path: path(field), message: format!("{v} must be finite and >= 0") });
                }
            }
            if p.is_readout() && p.omega_p_khz != 0.0 {
                diags.push(Diagnostic { path: path("omega_p_khz"), message: "a C2 readout carries no probe leg".into() });
            }
            let labels = p.beam_labels();
            let legs = if p.is_readout() { 1 } else { 2 };
            if labels.len() != legs {
                diags.push(Diagnostic {
                    path: path("k_labels"),
                    message: format!("expected {legs} beam label(s), got {}", labels.len()),
                });
            }
            for l in &labels {
                if !self.geometry.beams.contains_key(l) {
                    diags.push(Diagnostic { path: path("k_labels"), message: format!("beam `{l}` is not defined in geometry.beams") });
                }
            }
            if diags.len() > before {
                continue;
            }
            let seg = |leg, khz: f64, deg: f64, k: &str| PulseSegment {
                leg,
                amplitude: khz_to_rad_per_us(khz),
                phase: deg.to_radians(),
                t_start: p.t_start_us,
                duration: p.duration_us,
                envelope: Envelope::Rect,
                k_label: k.to_string(),
            };
            let pulse = if p.is_readout() {
                RamanPulse {
                    label: PulseLabel::C2,
                    probe: None,
                    coupling: Some(seg(Leg::Coupling, p.omega_c_khz, p.phase_deg[1], &labels[0])),
                }
            } else {
                RamanPulse {
                    label: PulseLabel::parse(&p.label),
                    probe: Some(seg(Leg::Probe, p.omega_p_khz, p.phase_deg[0], &labels[0])),
                    coupling: Some(seg(Leg::Coupling, p.omega_c_khz, p.phase_deg[1], &labels[1])),
                }
            };
            pulses.push((i, pulse));
        }
        let index_map: Vec<usize> = pulses.iter().map(|(i, _)| *i).collect();
        let sequence = Sequence::new(pulses.into_iter().map(|(_, p)| p).collect(), o.span_us);
        for v in validate_sequence(&sequence) {
            let (path, msg) = match &v {
                Violation::Overlap { first, second } => (
                    format!("sequence[{}]", index_map[*second]),
                    format!("overlaps sequence[{}]", index_map[*first]),
                ),
                Violation::InvalidSpan { .. } => continue,
                Violation::NonPositiveDuration { pulse, .. }
                | Violation::InvalidAmplitude { pulse, .. }
                | Violation::NonFiniteValue { pulse }
                | Violation::MissingLeg { pulse, .. }
                | Violation::ProbeOnReadout { pulse }
                | Violation::WrongLeg { pulse }
                | Violation::Empty { pulse }
                | Violation::Misaligned { pulse }
                | Violation::OutsideSpan { pulse } => (format!("sequence[{}]", index_map[*pulse]), v.to_string()),
            };
            diags.push(Diagnostic { path, message: msg });
        }

        let geometry = self.beam_geometry(&sequence, &beams);

        if diags.is_empty() {
            Ok(Scenario { sequence, ensemble, params, sample_interval: o.sample_interval_us, geometry })
        } else {
            Err(ConfigError(diags))
        }
    }

    /// Data beams come from the first D pulse; the readout beam from the
    /// first C2 pulse, else from `geometry.readout`.
    fn beam_geometry(&self, seq: &Sequence, beams: &BTreeMap<String, WaveVector>) -> Option<BeamGeometry> {
        let d = seq.find(&PulseLabel::D)?;
        let k_p = beams.get(&d.probe.as_ref()?.k_label)?;
        let k_c1 = beams.get(&d.coupling.as_ref()?.k_label)?;
        let readout = match seq.find(&PulseLabel::C2) {
            Some(c2) => c2.coupling.as_ref()?.k_label.clone(),
            None => self.geometry.readout.clone()?,
        };
        let k_c2 = beams.get(&readout)?;
        Some(BeamGeometry { k_p: *k_p, k_c1: *k_c1, k_c2: *k_c2 })
    }
}
