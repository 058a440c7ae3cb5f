use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::{integrate_to_times, AtomParams, DensityMatrix};
use crate::ensemble::{run_ensemble_at, EnsembleSpec};
use crate::error::{Error, Result};
use crate::pulses::{PulseLabel, RamanPulse, Sequence};

/// Fit of `arg(after) = phi0 - arg(before)` across detuning groups.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationFit {
    pub phi0: f64,
    /// Largest wrapped deviation from the fit, rad.
    pub max_residual: f64,
    pub n_groups: usize,
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI { PI } else { y }
}

/// `before[i]` and `after[i]` are the coherences of group i on either side
/// of a rephasing pulse. phi0 is the circular mean of the phase sums.
pub fn conjugation_check(before: &[Complex64], after: &[Complex64]) -> Result<ConjugationFit> {
    if before.len() != after.len() || before.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "need matching non-empty coherence lists, got {} and {}",
            before.len(),
            after.len()
        )));
    }
    let mut sums = Vec::with_capacity(before.len());
    for (index, (b, a)) in before.iter().zip(after).enumerate() {
        if b.norm() == 0.0 || a.norm() == 0.0 {
            return Err(Error::ZeroCoherence { index });
        }
        sums.push(b.arg() + a.arg());
    }
    let phi0 = sums.iter().map(|&s| Complex64::from_polar(1.0, s)).sum::<Complex64>().arg();
    let max_residual = sums.iter().map(|&s| wrap(s - phi0).abs()).fold(0.0, f64::max);
    Ok(ConjugationFit { phi0, max_residual, n_groups: sums.len() })
}

/// Runs the ensemble and tests conjugation across the pulse `label` for the
/// groups with |delta| <= `sigma_window` standard deviations.
pub fn conjugation_across(
    seq: &Sequence,
    spec: &EnsembleSpec,
    base: &AtomParams,
    label: &PulseLabel,
    sigma_window: f64,
) -> Result<ConjugationFit> {
    let pulse = seq
        .find(label)
        .ok_or_else(|| Error::InvalidArgument(format!("sequence has no pulse {label}")))?;
    let tr = run_ensemble_at(seq, spec, base, &[pulse.t_start(), pulse.t_end()], true)?;
    let per_group = tr.per_group.as_ref().expect("groups were kept");
    let limit = sigma_window * spec.sigma_delta + 1e-12;
    let (before, after): (Vec<_>, Vec<_>) = tr
        .groups
        .iter()
        .zip(per_group)
        .filter(|(g, _)| g.delta.abs() <= limit)
        .map(|(_, t)| (t.states[0].rho12(), t.states[1].rho12()))
        .unzip();
    conjugation_check(&before, &after)
}

/// As [`conjugation_across`], but fits only the part of the post-pulse
/// coherence that depends on the pre-pulse coherence.
///
/// Each group's pulse is also applied to its pre-pulse state with rho12
/// removed; the difference cancels the coherence an imperfect swap writes
/// from the population imbalance.
pub fn conjugation_of_coherence(
    seq: &Sequence,
    spec: &EnsembleSpec,
    base: &AtomParams,
    label: &PulseLabel,
    sigma_window: f64,
) -> Result<ConjugationFit> {
    let pulse = seq
        .find(label)
        .ok_or_else(|| Error::InvalidArgument(format!("sequence has no pulse {label}")))?;
    let tr = run_ensemble_at(seq, spec, base, &[pulse.t_start()], true)?;
    let per_group = tr.per_group.as_ref().expect("groups were kept");
    let alone = isolated(pulse);
    let limit = sigma_window * spec.sigma_delta + 1e-12;
    let mut before = Vec::new();
    let mut after = Vec::new();
    for (g, t) in tr.groups.iter().zip(per_group) {
        if g.delta.abs() > limit {
            continue;
        }
        let p = base.with_delta(g.delta);
        let rho = t.states[0];
        let mut stripped = rho;
        stripped.0[(0, 1)] = Complex64::default();
        stripped.0[(1, 0)] = Complex64::default();
        let full = final_state(&rho, &alone, &p)?;
        let bare = final_state(&stripped, &alone, &p)?;
        before.push(rho.rho12());
        after.push(full.rho12() - bare.rho12());
    }
    conjugation_check(&before, &after)
}

/// The pulse moved to start at t = 0 in a sequence of its own.
fn isolated(pulse: &RamanPulse) -> Sequence {
    let shift = pulse.t_start();
    let mut p = pulse.clone();
    for seg in [p.probe.as_mut(), p.coupling.as_mut()].into_iter().flatten() {
        seg.t_start -= shift;
    }
    let span = p.t_end();
    Sequence::new(vec![p], span)
}

fn final_state(rho: &DensityMatrix, seq: &Sequence, p: &AtomParams) -> Result<DensityMatrix> {
    let tr = integrate_to_times(rho, seq, p, &[seq.total_span])?;
    Ok(tr.states[0])
}
