use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{Error, Result};

/// Closed-form state of a resonant group (delta = Delta = 0, no relaxation)
/// starting in |1> and driven by constant real amplitudes for a time `t`.
///
/// The drive couples |3> only to the bright combination of the ground
/// states, which Rabi-oscillates at Omega_R while the dark combination stays
/// put.
pub fn resonant_lambda_oracle(omega_p: f64, omega_c: f64, t: f64) -> Result<DensityMatrix> {
    if !(omega_p >= 0.0 && omega_c >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "oracle amplitudes must be real and non-negative, got ({omega_p}, {omega_c})"
        )));
    }
    let omega_r2 = omega_p * omega_p + omega_c * omega_c;
    if omega_r2 == 0.0 {
        return Err(Error::InvalidArgument("generalized Rabi frequency is zero".into()));
    }
    let omega_r = omega_r2.sqrt();
    let (s, c) = (0.5 * omega_r * t).sin_cos();
    let c1 = (omega_c * omega_c + omega_p * omega_p * c) / omega_r2;
    let c2 = omega_p * omega_c / omega_r2 * (c - 1.0);
    let c3 = Complex64::new(0.0, omega_p / omega_r * s);
    Ok(DensityMatrix::from_amplitudes([c1.into(), c2.into(), c3]))
}
