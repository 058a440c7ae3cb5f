use thiserror::Error;

use crate::pulses::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sequence: {}", format_violations(.0))]
    InvalidSequence(Vec<Violation>),

    #[error("integration step [{t_us}, {t_us} + {dt_us}] crosses a segment boundary at {boundary_us} us")]
    StepCrossesBoundary { t_us: f64, dt_us: f64, boundary_us: f64 },

    #[error("non-finite density matrix at t = {t_us} us")]
    NonFinite { t_us: f64 },

    #[error("interval ending at {t_us} us would need {steps:.3e} integration steps")]
    StepBudget { t_us: f64, steps: f64 },

    #[error("group {index} (delta = {delta} rad/us): {source}")]
    Group {
        index: usize,
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time grids do not match")]
    GridMismatch,

    #[error("time {t_us} us lies outside the simulated span")]
    OutOfSpan { t_us: f64 },

    #[error("coherence of group {index} vanishes, phase undefined")]
    ZeroCoherence { index: usize },
}

impl Error {
    /// True when the error stems from the numerics rather than from inputs.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFinite { .. } | Error::StepBudget { .. } => true,
            Error::Group { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
