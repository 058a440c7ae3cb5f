//! Rectangular Raman pulses, pulse areas and sequences.
//!
//! Amplitudes are angular Rabi frequencies in rad/us and times are in us.
//! A pulse's reference time is the center of its support.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::DriveSample;
use crate::error::{Error, Result};

/// kHz to rad/us.
pub fn khz_to_rad_per_us(khz: f64) -> f64 {
    2.0 * PI * khz * 1e-3
}

/// rad/us to kHz.
pub fn rad_per_us_to_khz(omega: f64) -> f64 {
    omega / (2.0 * PI) * 1e3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    /// |1> - |3>
    Probe,
    /// |2> - |3>
    Coupling,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    #[default]
    Rect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSegment {
    pub leg: Leg,
    pub amplitude: f64,
    pub phase: f64,
    pub t_start: f64,
    pub duration: f64,
    pub envelope: Envelope,
    pub k_label: String,
}

impl PulseSegment {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn center(&self) -> f64 {
        self.t_start + 0.5 * self.duration
    }

    /// Half-open support [t_start, t_end).
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_end()
    }

    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    pub fn area(&self) -> f64 {
        match self.envelope {
            Envelope::Rect => self.amplitude * self.duration,
        }
    }

    /// Splits the segment at an interior time into two adjacent pieces.
    pub fn split_at(&self, t: f64) -> Option<(PulseSegment, PulseSegment)> {
        if !(t > self.t_start && t < self.t_end()) {
            return None;
        }
        let mut a = self.clone();
        let mut b = self.clone();
        a.duration = t - self.t_start;
        b.t_start = t;
        b.duration = self.t_end() - t;
        Some((a, b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PulseLabel {
    /// Data pulse.
    D,
    /// First rephasing pulse.
    R1,
    /// Second rephasing pulse.
    R2,
    /// Readout, coupling leg only.
    C2,
    Custom(String),
}

impl PulseLabel {
    pub fn parse(s: &str) -> PulseLabel {
        match s {
            "D" => PulseLabel::D,
            "R1" => PulseLabel::R1,
            "R2" => PulseLabel::R2,
            "C2" => PulseLabel::C2,
            other => PulseLabel::Custom(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            PulseLabel::D => "D",
            PulseLabel::R1 => "R1",
            PulseLabel::R2 => "R2",
            PulseLabel::C2 => "C2",
            PulseLabel::Custom(s) => s,
        }
    }

    fn needs_both_legs(&self) -> bool {
        matches!(self, PulseLabel::D | PulseLabel::R1 | PulseLabel::R2)
    }
}

impl fmt::Display for PulseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RamanPulse {
    pub label: PulseLabel,
    pub probe: Option<PulseSegment>,
    pub coupling: Option<PulseSegment>,
}

impl RamanPulse {
    pub fn segments(&self) -> impl Iterator<Item = &PulseSegment> {
        self.probe.iter().chain(self.coupling.iter())
    }

    pub fn t_start(&self) -> f64 {
        self.segments().map(|s| s.t_start).fold(f64::INFINITY, f64::min)
    }

    pub fn t_end(&self) -> f64 {
        self.segments().map(|s| s.t_end()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn duration(&self) -> f64 {
        self.t_end() - self.t_start()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.t_start() + self.t_end())
    }

    pub fn omega_p(&self) -> f64 {
        self.probe.as_ref().map_or(0.0, |s| s.amplitude)
    }

    pub fn omega_c(&self) -> f64 {
        self.coupling.as_ref().map_or(0.0, |s| s.amplitude)
    }

    pub fn generalized_rabi(&self) -> f64 {
        generalized_rabi(self.omega_p(), self.omega_c())
    }

    /// Closed support [start, end] contains `t`.
    pub fn covers(&self, t: f64) -> bool {
        t >= self.t_start() && t <= self.t_end()
    }
}

/// Phases (rad) and beam labels of the two legs.
#[derive(Clone, Debug, PartialEq)]
pub struct LegOptions {
    pub phase_p: f64,
    pub phase_c: f64,
    pub k_probe: String,
    pub k_coupling: String,
}

impl Default for LegOptions {
    fn default() -> Self {
        LegOptions { phase_p: 0.0, phase_c: 0.0, k_probe: "P".into(), k_coupling: "C1".into() }
    }
}

pub fn generalized_rabi(omega_p: f64, omega_c: f64) -> f64 {
    omega_p.hypot(omega_c)
}

/// Omega_R * duration for a two-leg pulse, Omega * duration for a single leg.
pub fn pulse_area(p: &RamanPulse) -> f64 {
    p.generalized_rabi() * p.duration()
}

/// Duration of the n-th complete-transfer pulse, Omega_R dT = 2(2n - 1) pi.
pub fn solve_duration_for_area(omega_r: f64, n: u32) -> Result<f64> {
    if !(omega_r > 0.0) || !omega_r.is_finite() {
        return Err(Error::InvalidArgument(format!("Omega_R must be positive, got {omega_r}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("transfer order n must be >= 1".into()));
    }
    Ok(2.0 * (2.0 * n as f64 - 1.0) * PI / omega_r)
}

/// Builds a pulse with time-aligned legs. A zero `omega_p` on a C2 pulse
/// means the probe leg is absent; any other pulse always carries both legs.
pub fn make_raman_pulse(
    label: PulseLabel,
    omega_p: f64,
    omega_c: f64,
    t_start: f64,
    duration: f64,
    legs: &LegOptions,
) -> Result<RamanPulse> {
    if !(duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pulse {label}: duration must be positive, got {duration}"
        )));
    }
    if !(omega_p >= 0.0 && omega_c >= 0.0) {
        return Err(Error::InvalidArgument(format!("pulse {label}: amplitudes must be non-negative")));
    }
    if label == PulseLabel::C2 && omega_p != 0.0 {
        return Err(Error::InvalidArgument("pulse C2 must not carry a probe leg".into()));
    }
    let seg = |leg, amplitude, phase, k: &str| PulseSegment {
        leg,
        amplitude,
        phase,
        t_start,
        duration,
        envelope: Envelope::Rect,
        k_label: k.to_string(),
    };
    let probe = (label != PulseLabel::C2).then(|| seg(Leg::Probe, omega_p, legs.phase_p, &legs.k_probe));
    let coupling = Some(seg(Leg::Coupling, omega_c, legs.phase_c, &legs.k_coupling));
    Ok(RamanPulse { label, probe, coupling })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub pulses: Vec<RamanPulse>,
    pub total_span: f64,
}

impl Sequence {
    pub fn new(pulses: Vec<RamanPulse>, total_span: f64) -> Self {
        Sequence { pulses, total_span }
    }

    pub fn empty(total_span: f64) -> Self {
        Sequence { pulses: Vec::new(), total_span }
    }

    pub fn find(&self, label: &PulseLabel) -> Option<&RamanPulse> {
        self.pulses.iter().find(|p| &p.label == label)
    }

    pub fn without(&self, label: &PulseLabel) -> Sequence {
        Sequence {
            pulses: self.pulses.iter().filter(|p| &p.label != label).cloned().collect(),
            total_span: self.total_span,
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = &PulseSegment> {
        self.pulses.iter().flat_map(|p| p.segments())
    }

    /// Sorted, deduplicated segment start and end times.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.segments().flat_map(|s| [s.t_start, s.t_end()]).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// True when `t` falls inside (or on the edge of) any pulse.
    pub fn in_pulse(&self, t: f64) -> bool {
        self.pulses.iter().any(|p| p.covers(t))
    }

    /// Shortest duration among the segments active at `t`.
    pub(crate) fn active_segment_duration(&self, t: f64) -> Option<f64> {
        self.segments().filter(|s| s.is_active(t)).map(|s| s.duration).reduce(f64::min)
    }
}

pub fn drive_at(seq: &Sequence, t: f64) -> DriveSample {
    let mut d = DriveSample::default();
    for s in seq.segments().filter(|s| s.is_active(t)) {
        match s.leg {
            Leg::Probe => d.omega_p += s.complex_amplitude(),
            Leg::Coupling => d.omega_c += s.complex_amplitude(),
        }
    }
    d
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonPositiveDuration { pulse: usize, duration: f64 },
    InvalidAmplitude { pulse: usize, amplitude: f64 },
    NonFiniteValue { pulse: usize },
    MissingLeg { pulse: usize, leg: Leg },
    ProbeOnReadout { pulse: usize },
    WrongLeg { pulse: usize },
    Empty { pulse: usize },
    Misaligned { pulse: usize },
    Overlap { first: usize, second: usize },
    OutsideSpan { pulse: usize },
    InvalidSpan { span: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveDuration { pulse, duration } => {
                write!(f, "pulse {pulse}: duration {duration} is not positive")
            }
            Violation::InvalidAmplitude { pulse, amplitude } => {
                write!(f, "pulse {pulse}: amplitude {amplitude} is negative")
            }
            Violation::NonFiniteValue { pulse } => write!(f, "pulse {pulse}: non-finite parameter"),
            Violation::MissingLeg { pulse, leg } => write!(f, "pulse {pulse}: missing {leg:?} leg"),
            Violation::ProbeOnReadout { pulse } => write!(f, "pulse {pulse}: C2 carries a probe leg"),
            Violation::WrongLeg { pulse } => write!(f, "pulse {pulse}: segment stored on the wrong leg"),
            Violation::Empty { pulse } => write!(f, "pulse {pulse}: no segments"),
            Violation::Misaligned { pulse } => {
                write!(f, "pulse {pulse}: legs differ in start time or duration")
            }
            Violation::Overlap { first, second } => write!(f, "pulses {first} and {second} overlap"),
            Violation::OutsideSpan { pulse } => write!(f, "pulse {pulse}: outside [0, span]"),
            Violation::InvalidSpan { span } => write!(f, "span {span} is not positive"),
        }
    }
}

/// Collects every violation; an empty list means the sequence is valid.
pub fn validate_sequence(seq: &Sequence) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(seq.total_span > 0.0) || !seq.total_span.is_finite() {
        out.push(Violation::InvalidSpan { span: seq.total_span });
    }
    for (i, p) in seq.pulses.iter().enumerate() {
        if p.probe.is_none() && p.coupling.is_none() {
            out.push(Violation::Empty { pulse: i });
            continue;
        }
        if p.probe.as_ref().is_some_and(|s| s.leg != Leg::Probe)
            || p.coupling.as_ref().is_some_and(|s| s.leg != Leg::Coupling)
        {
            out.push(Violation::WrongLeg { pulse: i });
        }
        for s in p.segments() {
            if ![s.amplitude, s.phase, s.t_start, s.duration].iter().all(|v| v.is_finite()) {
                out.push(Violation::NonFiniteValue { pulse: i });
                continue;
            }
            if !(s.duration > 0.0) {
                out.push(Violation::NonPositiveDuration { pulse: i, duration: s.duration });
            }
            if s.amplitude < 0.0 {
                out.push(Violation::InvalidAmplitude { pulse: i, amplitude: s.amplitude });
            }
        }
        if p.label.needs_both_legs() {
            if p.probe.is_none() {
                out.push(Violation::MissingLeg { pulse: i, leg: Leg::Probe });
            }
            if p.coupling.is_none() {
                out.push(Violation::MissingLeg { pulse: i, leg: Leg::Coupling });
            }
        }
        if p.label == PulseLabel::C2 {
            if p.probe.is_some() {
                out.push(Violation::ProbeOnReadout { pulse: i });
            }
            if p.coupling.is_none() {
                out.push(Violation::MissingLeg { pulse: i, leg: Leg::Coupling });
            }
        }
        if let (Some(a), Some(b)) = (&p.probe, &p.coupling) {
            if a.t_start != b.t_start || a.duration != b.duration {
                out.push(Violation::Misaligned { pulse: i });
            }
        }
        if seq.total_span.is_finite() && (p.t_start() < 0.0 || p.t_end() > seq.total_span) {
            out.push(Violation::OutsideSpan { pulse: i });
        }
    }
    let mut order: Vec<usize> = (0..seq.pulses.len())
        .filter(|&i| seq.pulses[i].segments().next().is_some())
        .collect();
    order.sort_by(|&a, &b| seq.pulses[a].t_start().total_cmp(&seq.pulses[b].t_start()));
    for w in order.windows(2) {
        let (a, b) = (&seq.pulses[w[0]], &seq.pulses[w[1]]);
        if b.t_start() < a.t_end() {
            out.push(Violation::Overlap { first: w[0].min(w[1]), second: w[0].max(w[1]) });
        }
    }
    out
}

pub fn ensure_valid(seq: &Sequence) -> Result<()> {
    let v = validate_sequence(seq);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSequence(v))
    }
}
