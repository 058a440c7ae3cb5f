use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;

use super::hamiltonian::rhs_with;
use super::{build_hamiltonian, AtomParams, DensityMatrix, DriveSample};
use crate::error::{Error, Result};
use crate::pulses::{drive_at, ensure_valid, Sequence};

/// Upper bound on the RK4 step, us.
pub const MAX_STEP_US: f64 = 2e-3;
/// Minimum RK4 steps per segment.
pub const STEPS_PER_SEGMENT: f64 = 200.0;
/// Minimum RK4 steps per period of the fastest generator frequency.
pub const STEPS_PER_PERIOD: f64 = 800.0;
/// Refuse intervals that would need more RK4 steps than this.
pub const MAX_STEPS_PER_INTERVAL: f64 = 1e8;

/// Two time points closer than this are treated as the same instant.
const TIME_EPS: f64 = 1e-9;

/// Density-matrix snapshots on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }
}

/// Uniform grid 0, h, 2h, ... up to and including `span` (within rounding).
pub fn sample_grid(span: f64, interval: f64) -> Vec<f64> {
    let n = (span / interval * (1.0 + 1e-12)).floor() as usize;
    let mut t: Vec<f64> = (0..=n).map(|k| k as f64 * interval).collect();
    if span - t[n] > TIME_EPS {
        t.push(span);
    }
    t
}

/// RK4 step size for a constant drive.
///
/// The generator's fastest frequency is bounded by Omega_R + |delta| + |Delta|;
/// at 800 steps per such period the accumulated RK4 error over several Rabi
/// cycles stays below 1e-9.
pub fn step_size(d: &DriveSample, p: &AtomParams, segment_duration: f64) -> f64 {
    let rate = d.generalized_rabi() + p.delta.abs() + p.big_delta.abs();
    let mut dt = MAX_STEP_US.min(segment_duration / STEPS_PER_SEGMENT);
    if rate > 0.0 {
        dt = dt.min(2.0 * PI / (STEPS_PER_PERIOD * rate));
    }
    dt
}

#[inline]
fn rk4_const(rho: &Matrix3<Complex64>, dt: f64, h: &Matrix3<Complex64>, p: &AtomParams) -> DensityMatrix {
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let k1 = rhs_with(h, rho, p);
    let k2 = rhs_with(h, &(rho + k1 * half), p);
    let k3 = rhs_with(h, &(rho + k2 * half), p);
    let k4 = rhs_with(h, &(rho + k3 * full), p);
    let next = rho + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
    DensityMatrix(next).symmetrized()
}

/// One RK4 step with a drive that is constant over the step.
pub fn rk4_step_with_drive(rho: &DensityMatrix, dt: f64, d: &DriveSample, p: &AtomParams) -> DensityMatrix {
    let h = build_hamiltonian(d, p);
    rk4_const(rho.matrix(), dt, &h, p)
}

/// One RK4 step of `seq` from `t` to `t + dt`. The step must not straddle a
/// segment edge, since the drive is piecewise constant.
pub fn rk4_step(rho: &DensityMatrix, t: f64, dt: f64, seq: &Sequence, p: &AtomParams) -> Result<DensityMatrix> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {dt}")));
    }
    let eps = TIME_EPS * t.abs().max(1.0);
    if let Some(&b) = seq
        .boundaries()
        .iter()
        .find(|&&b| b > t + eps && b < t + dt - eps)
    {
        return Err(Error::StepCrossesBoundary { t_us: t, dt_us: dt, boundary_us: b });
    }
    let d = drive_at(seq, t + 0.5 * dt);
    Ok(rk4_step_with_drive(rho, dt, &d, p))
}

/// Exact propagator with both legs off.
pub fn propagate_field_free(rho: &DensityMatrix, dt: f64, p: &AtomParams) -> DensityMatrix {
    if dt == 0.0 {
        return *rho;
    }
    let r = rho.matrix();
    let mut out = *r;
    let decay = |rate: f64, freq: f64| (Complex64::new(-rate, -freq) * dt).exp();
    let f12 = decay(p.gamma12, p.delta);
    let f13 = decay(p.gamma13, p.big_delta);
    let f23 = decay(p.gamma23, p.big_delta - p.delta);
    out[(0, 1)] = r[(0, 1)] * f12;
    out[(1, 0)] = r[(1, 0)] * f12.conj();
    out[(0, 2)] = r[(0, 2)] * f13;
    out[(2, 0)] = r[(2, 0)] * f13.conj();
    out[(1, 2)] = r[(1, 2)] * f23;
    out[(2, 1)] = r[(2, 1)] * f23.conj();

    let gamma = p.excited_decay();
    if gamma > 0.0 {
        let rho33 = r[(2, 2)].re;
        let left = rho33 * (-gamma * dt).exp();
        let lost = rho33 * -(-gamma * dt).exp_m1();
        out[(2, 2)] = left.into();
        out[(0, 0)] = (r[(0, 0)].re + lost * p.gamma_pop31 / gamma).into();
        out[(1, 1)] = (r[(1, 1)].re + lost * p.gamma_pop32 / gamma).into();
    }
    DensityMatrix(out)
}

/// Integrates `seq` from `rho0` at t = 0 and samples the state at every
/// multiple of `sample_interval` up to the sequence span.
pub fn integrate_sequence(
    rho0: &DensityMatrix,
    seq: &Sequence,
    p: &AtomParams,
    sample_interval: f64,
) -> Result<Trajectory> {
    if !(sample_interval > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sample interval must be positive, got {sample_interval}"
        )));
    }
    ensure_valid(seq)?;
    integrate_to_times(rho0, seq, p, &sample_grid(seq.total_span, sample_interval))
}

/// Integrates `seq` from `rho0` at t = 0 and records the state at each of
/// the ascending, non-negative `times`.
///
/// Pulse intervals are stepped with RK4; gaps between pulses use the exact
/// field-free propagator.
pub fn integrate_to_times(
    rho0: &DensityMatrix,
    seq: &Sequence,
    p: &AtomParams,
    times: &[f64],
) -> Result<Trajectory> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("sample times must be finite, non-negative and ascending".into()));
    }
    let t_last = times.last().copied().unwrap_or(0.0);

    let mut marks: Vec<f64> = times.to_vec();
    marks.extend(seq.boundaries().into_iter().filter(|&b| b > 0.0 && b < t_last));
    marks.push(0.0);
    marks.sort_by(f64::total_cmp);
    marks.dedup_by(|b, a| *b - *a <= TIME_EPS);

    let mut out = Trajectory { times: Vec::with_capacity(times.len()), states: Vec::with_capacity(times.len()) };
    let mut next = 0usize;
    let mut rho = *rho0;
    let mut t = 0.0;
    let mut record = |t: f64, rho: &DensityMatrix, next: &mut usize| {
        while *next < times.len() && times[*next] <= t + TIME_EPS {
            out.times.push(times[*next]);
            out.states.push(*rho);
            *next += 1;
        }
    };
    record(t, &rho, &mut next);

    for &b in marks.iter().skip_while(|&&m| m <= TIME_EPS) {
        let span = b - t;
        let mid = t + 0.5 * span;
        let d = drive_at(seq, mid);
        if d.is_zero() {
            rho = propagate_field_free(&rho, span, p);
        } else {
            if !d.is_finite() {
                return Err(Error::NonFinite { t_us: mid });
            }
            let seg = seq.active_segment_duration(mid).unwrap_or(span);
            let dt_max = step_size(&d, p, seg);
            let n = (span / dt_max).ceil().max(1.0);
            if !(n <= MAX_STEPS_PER_INTERVAL) {
                return Err(Error::StepBudget { t_us: b, steps: n });
            }
            let n = n as usize;
            let dt = span / n as f64;
            let h = build_hamiltonian(&d, p);
            for _ in 0..n {
                rho = rk4_const(rho.matrix(), dt, &h, p);
            }
        }
        t = b;
        if !rho.is_finite() {
            return Err(Error::NonFinite { t_us: t });
        }
        record(t, &rho, &mut next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::resonant_lambda_oracle;
    use crate::pulses::{khz_to_rad_per_us, make_raman_pulse, LegOptions, PulseLabel};

    fn coherent_state() -> DensityMatrix {
        let s = 1.0 / 3f64.sqrt();
        DensityMatrix::from_amplitudes([
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(s * 0.6, s * 0.8),
        ])
    }

    fn single_pulse(omega_p: f64, omega_c: f64, duration: f64, span: f64) -> Sequence {
        let p = make_raman_pulse(PulseLabel::Custom("x".into()), omega_p, omega_c, 0.0, duration, &LegOptions::default()).unwrap();
        Sequence::new(vec![p], span)
    }

    #[test]
    fn grid_includes_span() {
        let g = sample_grid(1.0, 0.25);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = sample_grid(1.0, 0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn free_rk4_step_matches_phase_factor() {
        let p = AtomParams { delta: 0.8, ..Default::default() };
        let rho = coherent_state();
        let dt = 0.05;
        let next = rk4_step_with_drive(&rho, dt, &DriveSample::default(), &p);
        let exact = rho.rho12() * Complex64::new(0.0, -p.delta * dt).exp();
        // local error of order (delta dt)^5 / 120
        assert!((next.rho12() - exact).norm() < 1e-9);
    }

    #[test]
    fn rk4_step_rejects_boundary_crossing() {
        let seq = single_pulse(1.0, 1.0, 1.0, 2.0);
        let rho = DensityMatrix::ground();
        let p = AtomParams::default();
        assert!(matches!(
            rk4_step(&rho, 0.9, 0.2, &seq, &p),
            Err(Error::StepCrossesBoundary { .. })
        ));
        assert!(rk4_step(&rho, 0.9, 0.1, &seq, &p).is_ok());
        assert!(rk4_step(&rho, 0.9, 0.0, &seq, &p).is_err());
    }

    #[test]
    fn rk4_step_chain_matches_oracle_at_coarse_step() {
        // equal legs, Omega_R = 2 pi * 200 kHz, dt = 2e-3 us
        let omega = khz_to_rad_per_us(200.0) / 2f64.sqrt();
        let omega_r = omega * 2f64.sqrt();
        let total = 4.0 * PI / omega_r;
        let seq = single_pulse(omega, omega, total, total);
        let p = AtomParams::default();
        let dt = 2e-3;
        let n = (total / dt).round() as usize;
        let dt = total / n as f64;
        let mut rho = DensityMatrix::ground();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            rho = rk4_step(&rho, k as f64 * dt, dt, &seq, &p).unwrap();
            let exact = resonant_lambda_oracle(omega, omega, (k + 1) as f64 * dt).unwrap();
            worst = worst.max(rho.max_abs_diff(&exact));
        }
        assert!(worst < 1e-8, "worst error {worst}");
    }

    #[test]
    fn one_step_error_shrinks_sixteen_fold() {
        // global error over a fixed horizon scales as dt^4
        let omega_p = 1.3;
        let omega_c = 2.1;
        let horizon = 2.0;
        let seq = single_pulse(omega_p, omega_c, horizon, horizon);
        let p = AtomParams::default();
        let exact = resonant_lambda_oracle(omega_p, omega_c, horizon).unwrap();
        let err = |n: usize| {
            let dt = horizon / n as f64;
            let mut rho = DensityMatrix::ground();
            for k in 0..n {
                rho = rk4_step(&rho, k as f64 * dt, dt, &seq, &p).unwrap();
            }
            rho.max_abs_diff(&exact)
        };
        let (e1, e2, e3) = (err(20), err(40), err(80));
        let r1 = e1 / e2;
        let r2 = e2 / e3;
        assert!((r1 - 16.0).abs() < 2.0, "ratio {r1}");
        assert!((r2 - 16.0).abs() < 2.0, "ratio {r2}");
    }

    #[test]
    fn field_free_identity_at_zero() {
        let rho = coherent_state();
        let p = AtomParams { delta: 1.0, gamma12: 0.3, gamma_pop31: 0.2, ..Default::default() };
        assert_eq!(propagate_field_free(&rho, 0.0, &p), rho);
    }

    #[test]
    fn field_free_phase_advance() {
        let delta = khz_to_rad_per_us(50.0);
        let p = AtomParams { delta, ..Default::default() };
        let rho = coherent_state();
        let out = propagate_field_free(&rho, 10.0, &p);
        let change = (out.rho12() / rho.rho12()).arg();
        // -delta * dt = -pi
        assert!((change.abs() - PI).abs() < 1e-12);
        assert!((out.rho12().norm() - rho.rho12().norm()).abs() < 1e-15);
    }

    #[test]
    fn field_free_matches_rk4_chain() {
        let p = AtomParams {
            delta: 0.7,
            big_delta: -0.4,
            gamma_pop31: 0.03,
            gamma_pop32: 0.05,
            gamma13: 0.06,
            gamma23: 0.08,
            gamma12: 0.01,
        };
        let rho = coherent_state();
        let exact = propagate_field_free(&rho, 20.0, &p);
        let n = 20_000;
        let dt = 20.0 / n as f64;
        let mut chained = rho;
        for _ in 0..n {
            chained = rk4_step_with_drive(&chained, dt, &DriveSample::default(), &p);
        }
        assert!(exact.max_abs_diff(&chained) < 1e-10);
        assert!((exact.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn empty_sequence_keeps_state() {
        let seq = Sequence::empty(10.0);
        let traj = integrate_sequence(&DensityMatrix::ground(), &seq, &AtomParams::default(), 0.5).unwrap();
        assert_eq!(traj.len(), 21);
        assert!(traj.states.iter().all(|s| *s == DensityMatrix::ground()));
    }

    #[test]
    fn samples_land_on_requested_times() {
        let seq = single_pulse(1.0, 2.0, 1.3, 3.0);
        let times = [0.0, 0.65, 1.3, 2.999];
        let traj = integrate_to_times(&DensityMatrix::ground(), &seq, &AtomParams::default(), &times).unwrap();
        assert_eq!(traj.times, times.to_vec());
        let exact = resonant_lambda_oracle(1.0, 2.0, 0.65).unwrap();
        assert!(traj.states[1].max_abs_diff(&exact) < 1e-10);
        // after the pulse the resonant state is frozen
        assert!(traj.states[2].max_abs_diff(&traj.states[3]) < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let seq = Sequence::empty(1.0);
        let p = AtomParams::default();
        assert!(integrate_sequence(&DensityMatrix::ground(), &seq, &p, 0.0).is_err());
        assert!(integrate_to_times(&DensityMatrix::ground(), &seq, &p, &[0.5, 0.2]).is_err());
        let bad = single_pulse(1.0, 1.0, 2.0, 1.0);
        assert!(matches!(
            integrate_sequence(&DensityMatrix::ground(), &bad, &p, 0.1),
            Err(Error::InvalidSequence(_))
        ));
    }

    #[test]
    fn non_finite_state_is_reported() {
        let seq = single_pulse(1.0, 1.0, 1.0, 2.0);
        let mut rho = DensityMatrix::ground();
        rho.0[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        let err = integrate_sequence(&rho, &seq, &AtomParams::default(), 0.5).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        assert!(err.is_numeric());
    }

    #[test]
    fn absurd_drive_exceeds_step_budget() {
        let seq = single_pulse(1e300, 1e300, 1.0, 2.0);
        let err = integrate_sequence(&DensityMatrix::ground(), &seq, &AtomParams::default(), 0.5).unwrap_err();
        assert!(matches!(err, Error::StepBudget { .. }) && err.is_numeric());
    }
}
