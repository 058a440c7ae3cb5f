//! Gaussian two-photon-detuning ensemble and its macroscopic observables.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_to_times, sample_grid, AtomParams, DensityMatrix, Trajectory};
use crate::error::{Error, Result};
use crate::pulses::{ensure_valid, khz_to_rad_per_us, Sequence};

/// FWHM / sigma of a Gaussian, 2 sqrt(2 ln 2).
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Standard deviation of delta, rad/us.
    pub sigma_delta: f64,
    /// Odd, so that delta = 0 is a node.
    pub n_groups: usize,
    /// Half-width of the grid in standard deviations.
    pub truncation: f64,
}

impl EnsembleSpec {
    pub fn from_fwhm_khz(fwhm_khz: f64, n_groups: usize, truncation: f64) -> Self {
        EnsembleSpec { sigma_delta: khz_to_rad_per_us(fwhm_khz) / FWHM_PER_SIGMA, n_groups, truncation }
    }

    pub fn single() -> Self {
        EnsembleSpec { sigma_delta: 0.0, n_groups: 1, truncation: 4.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_delta >= 0.0) || !self.sigma_delta.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma_delta = {} must be >= 0", self.sigma_delta)));
        }
        if self.n_groups == 0 || self.n_groups.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("n_groups = {} must be odd and positive", self.n_groups)));
        }
        if !(self.truncation > 0.0) || !self.truncation.is_finite() {
            return Err(Error::InvalidArgument(format!("truncation = {} must be positive", self.truncation)));
        }
        Ok(())
    }
}

impl Default for EnsembleSpec {
    /// 100 kHz FWHM, 201 groups over +-4 sigma.
    fn default() -> Self {
        Self::from_fwhm_khz(100.0, 201, 4.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub delta: f64,
    pub weight: f64,
}

/// Midpoint grid of `n_groups` cells over [-k sigma, k sigma] with weights
/// proportional to the Gaussian density at each node.
pub fn make_detuning_grid(spec: &EnsembleSpec) -> Result<Vec<Group>> {
    spec.validate()?;
    if spec.n_groups == 1 || spec.sigma_delta == 0.0 {
        return Ok(vec![Group { delta: 0.0, weight: 1.0 }]);
    }
    let n = spec.n_groups;
    let half = n / 2;
    let width = 2.0 * spec.truncation * spec.sigma_delta / n as f64;
    // build from the center outward so that +-delta are exact negatives
    let offsets: Vec<f64> = (0..n).map(|i| (i as f64 - half as f64) * width).collect();
    let raw: Vec<f64> = offsets
        .iter()
        .map(|d| (-0.5 * (d / spec.sigma_delta).powi(2)).exp())
        .collect();
    // pairwise symmetric sum keeps w(delta) == w(-delta) after normalization
    let mut total = raw[half];
    for k in 1..=half {
        total += raw[half - k] + raw[half + k];
    }
    Ok(offsets
        .into_iter()
        .zip(raw)
        .map(|(delta, w)| Group { delta, weight: w / total })
        .collect())
}

/// Weighted coherent sum.
pub fn ensemble_average(values: &[(f64, Complex64)]) -> Complex64 {
    values.iter().fold(Complex64::default(), |acc, (w, z)| acc + z * *w)
}

/// Ensemble-averaged observables at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AveragedSample {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub re_rho12: f64,
    pub im_rho12: f64,
    /// |<rho12>|, modulus of the weighted complex mean.
    pub abs_avg_rho12: f64,
    pub im_rho13: f64,
    pub abs_avg_rho13: f64,
}

impl AveragedSample {
    pub fn rho12(&self) -> Complex64 {
        Complex64::new(self.re_rho12, self.im_rho12)
    }

    fn from_states(groups: &[Group], states: impl Iterator<Item = DensityMatrix>) -> Self {
        let mut avg = nalgebra::Matrix3::<Complex64>::zeros();
        for (g, s) in groups.iter().zip(states) {
            avg += s.0 * Complex64::new(g.weight, 0.0);
        }
        let r12 = avg[(0, 1)];
        let r13 = avg[(0, 2)];
        AveragedSample {
            rho11: avg[(0, 0)].re,
            rho22: avg[(1, 1)].re,
            rho33: avg[(2, 2)].re,
            re_rho12: r12.re,
            im_rho12: r12.im,
            abs_avg_rho12: r12.norm(),
            im_rho13: r13.im,
            abs_avg_rho13: r13.norm(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleTrajectory {
    pub times: Vec<f64>,
    pub groups: Vec<Group>,
    pub per_group: Option<Vec<Trajectory>>,
    pub averaged: Vec<AveragedSample>,
}

impl EnsembleTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the sample nearest to `t`, or an error outside the span.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => return Err(Error::OutOfSpan { t_us: t }),
        };
        if t < first - 1e-9 || t > last + 1e-9 {
            return Err(Error::OutOfSpan { t_us: t });
        }
        let i = self.times.partition_point(|&x| x < t);
        Ok(match i {
            0 => 0,
            i if i >= self.times.len() => self.times.len() - 1,
            i if (self.times[i] - t) < (t - self.times[i - 1]) => i,
            i => i - 1,
        })
    }

    pub fn sample_at(&self, t: f64) -> Result<&AveragedSample> {
        Ok(&self.averaged[self.index_at(t)?])
    }
}

/// Runs every detuning group through `seq` and averages on the sample grid.
pub fn run_ensemble(
    seq: &Sequence,
    spec: &EnsembleSpec,
    base: &AtomParams,
    sample_interval: f64,
) -> Result<EnsembleTrajectory> {
    if !(sample_interval > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sample interval must be positive, got {sample_interval}"
        )));
    }
    run_ensemble_at(seq, spec, base, &sample_grid(seq.total_span, sample_interval), false)
}

/// As [`run_ensemble`] but on explicit sample times, optionally keeping the
/// per-group trajectories.
pub fn run_ensemble_at(
    seq: &Sequence,
    spec: &EnsembleSpec,
    base: &AtomParams,
    times: &[f64],
    keep_groups: bool,
) -> Result<EnsembleTrajectory> {
    ensure_valid(seq)?;
    base.validate().map_err(Error::InvalidArgument)?;
    let groups = make_detuning_grid(spec)?;
    let rho0 = DensityMatrix::ground();

    let per_group: Vec<Trajectory> = groups
        .par_iter()
        .enumerate()
        .map(|(index, g)| {
            integrate_to_times(&rho0, seq, &base.with_delta(g.delta), times).map_err(|e| Error::Group {
                index,
                delta: g.delta,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let times = per_group[0].times.clone();
    let averaged = (0..times.len())
        .map(|k| AveragedSample::from_states(&groups, per_group.iter().map(|tr| tr.states[k])))
        .collect();
    Ok(EnsembleTrajectory {
        times,
        groups,
        per_group: keep_groups.then_some(per_group),
        averaged,
    })
}
