//! Echo detection, timing and inversion checks, readout metrics, the
//! rephasing conjugation test and calibration sweeps.

mod conjugation;
mod echoes;
mod sweep;

pub use conjugation::{conjugation_across, conjugation_check, conjugation_of_coherence, ConjugationFit};
pub use echoes::{
    detect_optical_readout, detect_spin_echoes, inversion_at, post_data_plateau, predicted_echo_times,
    predicted_for_sequence, readout_metrics, EchoEvent, EchoKind, EchoTimes, ReadoutMetrics,
    DEFAULT_THRESHOLD_FRAC, PLATEAU_WINDOW_US,
};
pub use sweep::{
    sweep_coupling, sweep_readout_area, CouplingTemplate, ReadoutSweep, ReadoutTemplate, SweepObjective,
    SweepResult, DEPLETION_TARGET,
};
