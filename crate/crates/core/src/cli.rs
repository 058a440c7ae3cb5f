//! The command-line front end, kept in the library so it can be tested.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use crate::analysis::{
    sweep_coupling, sweep_readout_area, CouplingTemplate, ReadoutTemplate, SweepObjective,
};
use crate::config::{parse_config, serialize_config, ConfigError, RunConfig, Scenario};
use crate::ensemble::{run_ensemble, run_ensemble_at};
use crate::error::Error;
use crate::output::{averaged_csv, per_group_csv, sweep_csv, trajectory_svg, write_atomic};
use crate::presets::{preset_config, Preset};
use crate::pulses::{khz_to_rad_per_us, LegOptions, PulseLabel};
use crate::report::{build_report, Conventions, Report, SweepReport};
use crate::dynamics::sample_grid;

#[derive(Parser, Debug)]
#[command(name = "raman-echo", version, about = "Doubly rephased Raman echo simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-group trajectories.
        #[arg(long)]
        per_group: bool,
        #[arg(long)]
        svg: bool,
    },
    /// Write a built-in protocol as config.toml and run it.
    Preset {
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Calibration sweep over the D coupling or the C2 readout area.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated; kHz for omega_c, rad for c2_area (`pi` suffix allowed).
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "resonant_fraction")]
        objective: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SweepParam {
    OmegaC,
    C2Area,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Sim(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Sim(e) if e.is_numeric() => 3,
            CliError::Sim(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    write_atomic(&path, contents).map_err(io_err(&path))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_config(&text)?)
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, per_group, svg } => run_config(&load_config(&config)?, &out, per_group, svg).map(drop),
        Command::Preset { name, out, svg } => {
            let preset: Preset = name.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
            run_preset(preset, &out, svg).map(drop)
        }
        Command::Sweep { config, param, values, out, objective } => {
            let objective: SweepObjective = objective.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
            let values = parse_values(&values)?;
            run_sweep(&load_config(&config)?, param, &values, objective, &out).map(drop)
        }
    }
}

/// Numbers separated by commas, each optionally suffixed with `pi`.
pub fn parse_values(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (body, scale) = match t.strip_suffix("pi") {
                Some(b) => (b.trim(), std::f64::consts::PI),
                None => (t, 1.0),
            };
            let x = if body.is_empty() { Ok(1.0) } else { body.parse::<f64>() };
            x.map(|x| x * scale).map_err(|_| CliError::Usage(format!("bad sweep value `{t}`")))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.is_empty() { Err(CliError::Usage("no sweep values given".into())) } else { Ok(v) })
}

/// Simulates `cfg`, writes its outputs to `out` and returns the report.
pub fn run_config(cfg: &RunConfig, out: &Path, per_group: bool, svg: bool) -> Result<Report, CliError> {
    let sc = cfg.build()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let keep = per_group || cfg.output.per_group;
    info!("running {} groups over {} us", sc.ensemble.n_groups, sc.sequence.total_span);
    let times = sample_grid(sc.sequence.total_span, sc.sample_interval);
    let traj = run_ensemble_at(&sc.sequence, &sc.ensemble, &sc.params, &times, keep)?;
    let without = match sc.sequence.find(&PulseLabel::C2) {
        Some(_) => Some(run_ensemble(&sc.sequence.without(&PulseLabel::C2), &sc.ensemble, &sc.params, sc.sample_interval)?),
        None => None,
    };
    let report = build_report(&sc, &traj, without.as_ref())?;

    write(out, &cfg.output.csv, averaged_csv(&traj).as_bytes())?;
    if let Some(text) = per_group_csv(&traj) {
        write(out, &cfg.output.per_group_csv, text.as_bytes())?;
    }
    write(out, &cfg.output.report, &json(&report))?;
    if svg {
        write(out, &cfg.output.svg, trajectory_svg(&traj).as_bytes())?;
    }
    Ok(report)
}

pub fn run_preset(preset: Preset, out: &Path, svg: bool) -> Result<Report, CliError> {
    let cfg = preset_config(preset);
    fs::create_dir_all(out).map_err(io_err(out))?;
    write(out, "config.toml", serialize_config(&cfg).as_bytes())?;
    run_config(&cfg, out, false, svg)
}

#[derive(Serialize)]
struct SweepFile<'a> {
    conventions: Conventions,
    sweep: &'a SweepReport,
}

pub fn run_sweep(
    cfg: &RunConfig,
    param: SweepParam,
    values: &[f64],
    objective: SweepObjective,
    out: &Path,
) -> Result<SweepReport, CliError> {
    let sc = cfg.build()?;
    let report = match param {
        SweepParam::OmegaC => sweep_omega_c(&sc, values, objective)?,
        SweepParam::C2Area => sweep_c2_area(&sc, values)?,
    };
    fs::create_dir_all(out).map_err(io_err(out))?;
    write(out, "sweep.csv", sweep_csv(&report.result).as_bytes())?;
    write(out, "sweep.json", &json(&SweepFile { conventions: Conventions::default(), sweep: &report }))?;
    Ok(report)
}

fn sweep_omega_c(sc: &Scenario, values_khz: &[f64], objective: SweepObjective) -> Result<SweepReport, CliError> {
    let d = sc
        .sequence
        .find(&PulseLabel::D)
        .ok_or_else(|| CliError::Usage("an omega_c sweep needs a D pulse in the sequence".into()))?;
    let probe = d.probe.as_ref().expect("D pulses carry a probe leg");
    let coupling = d.coupling.as_ref().expect("D pulses carry a coupling leg");
    let template = CouplingTemplate {
        omega_p: d.omega_p(),
        t_start: d.t_start(),
        area: 2.0 * std::f64::consts::PI,
        legs: LegOptions {
            phase_p: probe.phase,
            phase_c: coupling.phase,
            k_probe: probe.k_label.clone(),
            k_coupling: coupling.k_label.clone(),
        },
    };
    let rad: Vec<f64> = values_khz.iter().map(|&v| khz_to_rad_per_us(v)).collect();
    let mut result = sweep_coupling(&template, &rad, &sc.ensemble, &sc.params, objective)?;
    let best = rad.iter().position(|&v| v == result.argbest).expect("argbest is a swept value");
    result.values = values_khz.to_vec();
    result.argbest = values_khz[best];
    let objective = match objective {
        SweepObjective::ResonantFraction => "resonant_fraction",
        SweepObjective::Coherence => "coherence",
    };
    Ok(SweepReport { result, unit: "kHz".into(), objective: objective.into(), smallest_complete: None })
}

fn sweep_c2_area(sc: &Scenario, areas: &[f64]) -> Result<SweepReport, CliError> {
    let c2 = sc
        .sequence
        .find(&PulseLabel::C2)
        .ok_or_else(|| CliError::Usage("a c2_area sweep needs a C2 pulse in the sequence".into()))?;
    let coupling = c2.coupling.as_ref().expect("C2 pulses carry a coupling leg");
    let template = ReadoutTemplate {
        sequence: sc.sequence.without(&PulseLabel::C2),
        c2_start: c2.t_start(),
        c2_omega: c2.omega_c(),
        k_label: coupling.k_label.clone(),
        sample_interval: sc.sample_interval,
    };
    let r = sweep_readout_area(&template, areas, &sc.ensemble, &sc.params)?;
    Ok(SweepReport { result: r.curve, unit: "rad".into(), objective: "depletion".into(), smallest_complete: r.smallest_complete })
}
