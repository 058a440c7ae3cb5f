//! Wavevector and frequency bookkeeping for the optical readout.
//!
//! The spin grating written by the data pulse carries k_P - k_C1 and is not
//! propagated, so it stays fixed through rephasing. The emitted field then
//! obeys k_E = k_P - k_C1 + k_C2 with omega_E = omega_P - omega_C1 + omega_C2.

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default relative tolerance for direction and magnitude tests.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveVector {
    direction: Vector3<f64>,
    omega: f64,
}

impl WaveVector {
    /// `direction` is normalized; `omega` is an angular frequency in rad/s.
    pub fn new(direction: Vector3<f64>, omega: f64) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("beam direction must be a non-zero vector".into()));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidArgument(format!("beam frequency must be positive, got {omega}")));
        }
        Ok(WaveVector { direction: direction / norm, omega })
    }

    pub fn from_wavelength_nm(direction: Vector3<f64>, wavelength_nm: f64) -> Result<Self> {
        if !(wavelength_nm > 0.0) {
            return Err(Error::InvalidArgument(format!("wavelength must be positive, got {wavelength_nm}")));
        }
        Self::new(direction, 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (wavelength_nm * 1e-9))
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.direction
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn magnitude(&self) -> f64 {
        self.omega / SPEED_OF_LIGHT
    }

    /// Wavevector in rad/m.
    pub fn k(&self) -> Vector3<f64> {
        self.direction * self.magnitude()
    }

    pub fn reversed(&self) -> Self {
        WaveVector { direction: -self.direction, omega: self.omega }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamGeometry {
    /// Probe leg of the data pulse.
    pub k_p: WaveVector,
    /// Coupling leg of the data (and rephasing) pulses.
    pub k_c1: WaveVector,
    /// Readout coupling.
    pub k_c2: WaveVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryClass {
    BackwardConjugate,
    Forward,
    Noncollinear,
    Mismatched,
}

impl fmt::Display for GeometryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeometryClass::BackwardConjugate => "backward_conjugate",
            GeometryClass::Forward => "forward",
            GeometryClass::Noncollinear => "noncollinear",
            GeometryClass::Mismatched => "mismatched",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoGeometry {
    /// k_P - k_C1 + k_C2, rad/m.
    pub k_e: Vector3<f64>,
    /// rad/s
    pub omega_e: f64,
    /// | |k_E| - omega_E / c |, rad/m.
    pub mismatch: f64,
    pub classification: GeometryClass,
    probe_direction: Vector3<f64>,
}

impl EchoGeometry {
    /// Mismatch relative to the free-space wavenumber omega_E / c.
    pub fn relative_mismatch(&self) -> f64 {
        self.mismatch / (self.omega_e / SPEED_OF_LIGHT)
    }

    /// Cosine of the angle between k_E and the data probe.
    pub fn cos_to_probe(&self) -> f64 {
        let n = self.k_e.norm();
        if n == 0.0 {
            0.0
        } else {
            self.k_e.dot(&self.probe_direction) / n
        }
    }
}

/// Stored spin-grating wavevector k_P - k_C1.
pub fn spin_grating_wavevector(k_p: &WaveVector, k_c1: &WaveVector) -> Vector3<f64> {
    k_p.k() - k_c1.k()
}

pub fn echo_wavevector(g: &BeamGeometry) -> Result<EchoGeometry> {
    echo_wavevector_with_tol(g, DEFAULT_TOL)
}

pub fn echo_wavevector_with_tol(g: &BeamGeometry, tol: f64) -> Result<EchoGeometry> {
    let omega_e = g.k_p.omega() - g.k_c1.omega() + g.k_c2.omega();
    if !(omega_e > 0.0) {
        return Err(Error::InvalidArgument(format!("echo frequency {omega_e} rad/s is not positive")));
    }
    // k_P + (k_C2 - k_C1) is exactly k_P when the two coupling beams coincide
    let k_e = g.k_p.k() + (g.k_c2.k() - g.k_c1.k());
    let mismatch = (k_e.norm() - omega_e / SPEED_OF_LIGHT).abs();
    let mut e = EchoGeometry {
        k_e,
        omega_e,
        mismatch,
        classification: GeometryClass::Mismatched,
        probe_direction: g.k_p.direction(),
    };
    e.classification = classify_geometry(&e, tol);
    Ok(e)
}

pub fn phase_mismatch(e: &EchoGeometry) -> f64 {
    e.mismatch
}

/// Mismatched when the magnitude constraint fails by more than `tol`
/// (relative); otherwise classified by the direction of k_E against k_P.
pub fn classify_geometry(e: &EchoGeometry, tol: f64) -> GeometryClass {
    if e.k_e.norm() == 0.0 || e.relative_mismatch() > tol {
        return GeometryClass::Mismatched;
    }
    let cos = e.cos_to_probe();
    if 1.0 + cos < tol {
        GeometryClass::BackwardConjugate
    } else if 1.0 - cos < tol {
        GeometryClass::Forward
    } else {
        GeometryClass::Noncollinear
    }
}
