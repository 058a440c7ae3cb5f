//! Rotating-frame generator and relaxation terms of the lambda system.
//!
//! Couplings use the half-amplitude convention: the probe leg enters as
//! `-Omega_P / 2` on the |1>-|3> element and the coupling leg as
//! `-Omega_C / 2` on |2>-|3>, so a pulse of area `integral(Omega_R dt) = 2 pi`
//! returns the excited state to zero on resonance.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DensityMatrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Detunings and relaxation rates of one atom group. Frequencies in rad/us,
/// rates in 1/us.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Two-photon detuning.
    pub delta: f64,
    /// One-photon (probe) detuning.
    pub big_delta: f64,
    pub gamma_pop31: f64,
    pub gamma_pop32: f64,
    pub gamma13: f64,
    pub gamma23: f64,
    pub gamma12: f64,
}

impl AtomParams {
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn excited_decay(&self) -> f64 {
        self.gamma_pop31 + self.gamma_pop32
    }

    /// Hard errors: negative or non-finite rates and detunings.
    pub fn validate(&self) -> Result<(), String> {
        let named = [
            ("delta", self.delta),
            ("big_delta", self.big_delta),
            ("gamma_pop31", self.gamma_pop31),
            ("gamma_pop32", self.gamma_pop32),
            ("gamma13", self.gamma13),
            ("gamma23", self.gamma23),
            ("gamma12", self.gamma12),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
        }
        for (name, v) in &named[2..] {
            if *v < 0.0 {
                return Err(format!("{name} = {v} is negative"));
            }
        }
        Ok(())
    }

    /// Soft physicality checks; optical dephasing should be at least half
    /// the excited-state population decay.
    pub fn warnings(&self) -> Vec<String> {
        let floor = 0.5 * self.excited_decay();
        let mut out = Vec::new();
        if self.gamma13 < floor {
            out.push(format!(
                "gamma13 = {} is below (Gamma31 + Gamma32)/2 = {}",
                self.gamma13, floor
            ));
        }
        if self.gamma23 < floor {
            out.push(format!(
                "gamma23 = {} is below (Gamma31 + Gamma32)/2 = {}",
                self.gamma23, floor
            ));
        }
        out
    }
}

/// Instantaneous complex Rabi amplitudes (rad/us) of the two legs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DriveSample {
    pub omega_p: Complex64,
    pub omega_c: Complex64,
}

impl DriveSample {
    pub fn new(omega_p: Complex64, omega_c: Complex64) -> Self {
        DriveSample { omega_p, omega_c }
    }

    pub fn real(omega_p: f64, omega_c: f64) -> Self {
        Self::new(omega_p.into(), omega_c.into())
    }

    pub fn is_zero(&self) -> bool {
        self.omega_p == Complex64::default() && self.omega_c == Complex64::default()
    }

    pub fn is_finite(&self) -> bool {
        [self.omega_p, self.omega_c]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// sqrt(|Omega_P|^2 + |Omega_C|^2)
    pub fn generalized_rabi(&self) -> f64 {
        (self.omega_p.norm_sqr() + self.omega_c.norm_sqr()).sqrt()
    }
}

/// H / hbar in rad/us.
pub fn build_hamiltonian(d: &DriveSample, p: &AtomParams) -> Matrix3<Complex64> {
    let half = 0.5;
    let hp = -d.omega_p * half;
    let hc = -d.omega_c * half;
    let z = Complex64::default();
    Matrix3::new(
        z,
        z,
        hp,
        z,
        Complex64::new(-p.delta, 0.0),
        hc,
        hp.conj(),
        hc.conj(),
        Complex64::new(-p.big_delta, 0.0),
    )
}

/// Relaxation superoperator applied to `rho`.
pub fn relaxation_rhs(rho: &DensityMatrix, p: &AtomParams) -> Matrix3<Complex64> {
    let r = rho.matrix();
    let mut out = Matrix3::zeros();
    let rho33 = r[(2, 2)];
    out[(2, 2)] = -rho33 * p.excited_decay();
    out[(0, 0)] = rho33 * p.gamma_pop31;
    out[(1, 1)] = rho33 * p.gamma_pop32;
    for (i, j, g) in [(0, 1, p.gamma12), (0, 2, p.gamma13), (1, 2, p.gamma23)] {
        out[(i, j)] = -r[(i, j)] * g;
        out[(j, i)] = -r[(j, i)] * g;
    }
    out
}

/// d rho / dt = -i [H, rho] + R(rho)
pub fn total_rhs(rho: &DensityMatrix, d: &DriveSample, p: &AtomParams) -> Matrix3<Complex64> {
    let h = build_hamiltonian(d, p);
    rhs_with(&h, rho.matrix(), p)
}

#[inline]
pub(crate) fn rhs_with(
    h: &Matrix3<Complex64>,
    r: &Matrix3<Complex64>,
    p: &AtomParams,
) -> Matrix3<Complex64> {
    let comm = h * r - r * h;
    let mut out = comm * (-I);
    if p.excited_decay() != 0.0 || p.gamma12 != 0.0 || p.gamma13 != 0.0 || p.gamma23 != 0.0 {
        out += relaxation_rhs(&DensityMatrix(*r), p);
    }
    out
}
