//! Run loop: integration, diagnostics sampling, equilibrium detection,
//! snapshots and checkpoints, plus the stability scan.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::diagnostics::{
    bond_statistics_with_cutoff, detect_vortices, energy, equilibrium_check, max_position_drift, DiagnosticsRecord,
    VortexSet,
};
use crate::fields::{Params, State};
use crate::grid::GridSpec;
use crate::integrators::{find_stability_limit, AlgorithmId, StabilityError, StabilityLimit, StepError, Stepper};
use crate::io::{self, DiagnosticsWriter, IoError};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("checkpoint {0} lacks the seed or phase entries")]
    NotACheckpoint(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Equilibrium,
    MaxSteps,
    Diverged,
}

/// Machine-readable run summary: `steps` (N), `seconds_per_step` (C) and
/// `total_minutes` (T = N C / 60). C counts integration only, no I/O or
/// diagnostics, and covers the steps taken by this process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: AlgorithmId,
    pub dt: f64,
    pub m: usize,
    pub status: RunStatus,
    pub steps: u64,
    pub steps_this_process: u64,
    pub t: f64,
    pub seconds_per_step: f64,
    pub total_minutes: f64,
    pub vortex_count: usize,
    pub energy: f64,
    pub mean_bond_length: Option<f64>,
    pub mean_bond_angle: Option<f64>,
}

/// Sliding window of samples used to decide equilibrium.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMonitor {
    pub window: VecDeque<VortexSet>,
    pub energies: VecDeque<f64>,
}

impl EquilibriumMonitor {
    /// Records a sample and reports whether the window is in equilibrium:
    /// constant vortex count, matched drift below `drift_tolerance` between
    /// consecutive samples and energy changes no larger than
    /// `energy_tolerance`.
    pub fn push(&mut self, v: VortexSet, e: f64, cfg: &crate::config::DiagnosticsConfig, g: &GridSpec) -> bool {
        self.window.push_back(v);
        self.energies.push_back(e);
        while self.window.len() > cfg.equilibrium_window {
            self.window.pop_front();
            self.energies.pop_front();
        }
        if self.window.len() < cfg.equilibrium_window {
            return false;
        }
        let sets: Vec<VortexSet> = self.window.iter().cloned().collect();
        let vortices_still = equilibrium_check(&sets, cfg.drift_tolerance, g);
        let tol = cfg.energy_tolerance;
        let energy_still = self.energies.iter().zip(self.energies.iter().skip(1)).all(|(a, b)| (b - a).abs() <= tol);
        vortices_still && energy_still
    }

    pub fn last(&self) -> Option<&VortexSet> {
        self.window.back()
    }
}

/// Callbacks for the run loop. The defaults do nothing.
pub trait RunHooks {
    fn on_sample(&mut self, _sim: &Simulation, _rec: &DiagnosticsRecord, _v: &VortexSet) -> Result<(), DriverError> {
        Ok(())
    }
    fn after_step(&mut self, _sim: &Simulation) -> Result<(), DriverError> {
        Ok(())
    }
}

pub struct NoHooks;
impl RunHooks for NoHooks {}

/// One trajectory with its configuration, caches and monitor.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: RunConfig,
    pub grid: GridSpec,
    pub params: Params,
    pub state: State,
    pub stepper: Stepper,
    pub monitor: EquilibriumMonitor,
    pub records: Vec<DiagnosticsRecord>,
    integration_seconds: f64,
    steps_taken: u64,
}

impl Simulation {
    /// Seeded Meissner initial state.
    pub fn new(config: RunConfig) -> Result<Self, DriverError> {
        config.validate()?;
        let grid = config.grid_spec()?;
        let params = config.params(&grid)?;
        let state = State::meissner_seeded(&grid, &params, config.seed, config.physics.seed_amplitude);
        Ok(Self::from_parts(config, grid, params, state))
    }

    fn from_parts(config: RunConfig, grid: GridSpec, params: Params, state: State) -> Self {
        let mut stepper = Stepper::new(config.integrator.algorithm);
        stepper.closure = config.integrator.closure;
        Self {
            config,
            grid,
            params,
            state,
            stepper,
            monitor: EquilibriumMonitor::default(),
            records: Vec::new(),
            integration_seconds: 0.0,
            steps_taken: 0,
        }
    }

    /// Continues from a checkpoint file and the monitor saved beside it.
    pub fn from_checkpoint(config: RunConfig, path: &Path) -> Result<Self, DriverError> {
        config.validate()?;
        let grid = config.grid_spec()?;
        let params = config.params(&grid)?;
        let snap = io::read_snapshot(path)?;
        let phase = snap.header.phase.ok_or_else(|| DriverError::NotACheckpoint(path.to_owned()))?;
        snap.header.seed.ok_or_else(|| DriverError::NotACheckpoint(path.to_owned()))?;
        let state = snap.into_state(&params, &grid)?;
        let mut sim = Self::from_parts(config, grid, params, state);
        sim.stepper.set_phase(phase);
        let side = monitor_path(path);
        if side.exists() {
            sim.monitor = io::read_json(&side)?;
        }
        Ok(sim)
    }

    /// Wall seconds per integration step so far, excluding I/O.
    pub fn seconds_per_step(&self) -> f64 {
        if self.steps_taken == 0 {
            0.0
        } else {
            self.integration_seconds / self.steps_taken as f64
        }
    }

    /// Takes a diagnostics sample and feeds the monitor.
    pub fn sample(&mut self) -> (DiagnosticsRecord, VortexSet, bool) {
        let (s, p, g) = (&self.state, &self.params, &self.grid);
        let v = detect_vortices(s, &s.links, g);
        let bonds = bond_statistics_with_cutoff(&v, g, self.config.diagnostics.bond_cutoff);
        let e = energy(s, p, g);
        let rec = DiagnosticsRecord {
            t: s.t,
            step: s.step,
            energy: e,
            vortex_count: v.len(),
            mean_bond_length: bonds.map(|b| b.mean_length),
            mean_bond_angle: bonds.map(|b| b.mean_angle),
            max_position_drift: self.monitor.last().and_then(|prev| max_position_drift(prev, &v, g)),
        };
        let eq = self.monitor.push(v.clone(), e, &self.config.diagnostics, g);
        self.records.push(rec.clone());
        (rec, v, eq)
    }

    /// One step. Returns `true` if the step diverged.
    pub fn step(&mut self) -> Result<bool, DriverError> {
        let r = self.stepper.step(&mut self.state, &self.params, &self.grid)?;
        self.integration_seconds += r.wall_seconds;
        self.steps_taken += 1;
        Ok(r.diverged)
    }

    /// Integrates until equilibrium, divergence or `max_steps` (counted from
    /// step 0). A fresh run samples its initial state first.
    pub fn run(&mut self, hooks: &mut dyn RunHooks) -> Result<RunSummary, DriverError> {
        let every = self.config.diagnostics.sample_every;
        let max = self.config.integrator.max_steps;
        let mut status = RunStatus::MaxSteps;
        if self.monitor.window.is_empty() {
            let (rec, v, eq) = self.sample();
            hooks.on_sample(self, &rec, &v)?;
            if eq {
                status = RunStatus::Equilibrium;
            }
        }
        while status == RunStatus::MaxSteps && self.state.step < max {
            if self.step()? {
                status = RunStatus::Diverged;
                break;
            }
            if self.state.step % every == 0 {
                let (rec, v, eq) = self.sample();
                hooks.on_sample(self, &rec, &v)?;
                if eq {
                    status = RunStatus::Equilibrium;
                }
            }
            hooks.after_step(self)?;
        }
        Ok(self.summary(status))
    }

    pub fn summary(&self, status: RunStatus) -> RunSummary {
        let c = self.seconds_per_step();
        // the final state may lie between samples
        let fresh;
        let last = match self.records.last() {
            Some(r) if r.step == self.state.step => Some(r),
            _ if self.state.is_finite() => {
                let v = detect_vortices(&self.state, &self.state.links, &self.grid);
                let bonds = bond_statistics_with_cutoff(&v, &self.grid, self.config.diagnostics.bond_cutoff);
                fresh = DiagnosticsRecord {
                    t: self.state.t,
                    step: self.state.step,
                    energy: energy(&self.state, &self.params, &self.grid),
                    vortex_count: v.len(),
                    mean_bond_length: bonds.map(|b| b.mean_length),
                    mean_bond_angle: bonds.map(|b| b.mean_angle),
                    max_position_drift: None,
                };
                Some(&fresh)
            }
            other => other,
        };
        RunSummary {
            algorithm: self.config.integrator.algorithm,
            dt: self.params.dt,
            m: self.params.m,
            status,
            steps: self.state.step,
            steps_this_process: self.steps_taken,
            t: self.state.t,
            seconds_per_step: c,
            total_minutes: self.state.step as f64 * c / 60.0,
            vortex_count: last.map_or(0, |r| r.vortex_count),
            energy: last.map_or(f64::NAN, |r| r.energy),
            mean_bond_length: last.and_then(|r| r.mean_bond_length),
            mean_bond_angle: last.and_then(|r| r.mean_bond_angle),
        }
    }
}

fn monitor_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".monitor.json");
    PathBuf::from(s)
}

/// File names inside the output directory.
pub mod files {
    pub const DIAGNOSTICS: &str = "diagnostics.csv";
    pub const VORTICES: &str = "vortices.csv";
    pub const SUMMARY: &str = "summary.json";
    pub const CONFIG: &str = "config.toml";
    pub const FINAL: &str = "final.snap";
    pub const CHECKPOINT: &str = "checkpoint.snap";

    pub fn snapshot(step: u64) -> String {
        format!("snapshot_{step:09}.snap")
    }
}

struct FileHooks {
    out: PathBuf,
    csv: DiagnosticsWriter,
}

impl RunHooks for FileHooks {
    fn on_sample(&mut self, _sim: &Simulation, rec: &DiagnosticsRecord, _v: &VortexSet) -> Result<(), DriverError> {
        self.csv.append(rec)?;
        Ok(())
    }

    fn after_step(&mut self, sim: &Simulation) -> Result<(), DriverError> {
        let io_cfg = &sim.config.io;
        let step = sim.state.step;
        if io_cfg.snapshot_every > 0 && step % io_cfg.snapshot_every == 0 {
            io::write_snapshot(&self.out.join(files::snapshot(step)), &sim.state, &sim.params, &sim.grid, io_cfg.format)?;
        }
        if io_cfg.checkpoint_every > 0 && step % io_cfg.checkpoint_every == 0 {
            write_checkpoint_files(&self.out.join(files::CHECKPOINT), sim)?;
        }
        Ok(())
    }
}

fn write_checkpoint_files(path: &Path, sim: &Simulation) -> Result<(), DriverError> {
    let io_cfg = &sim.config.io;
    io::write_checkpoint(path, &sim.state, &sim.params, &sim.grid, io_cfg.format, sim.config.seed, sim.stepper.phase())?;
    io::write_json(&monitor_path(path), &sim.monitor)?;
    Ok(())
}

fn finish(sim: &Simulation, status: RunStatus, out: &Path) -> Result<RunSummary, DriverError> {
    let summary = sim.summary(status);
    let v = detect_vortices(&sim.state, &sim.state.links, &sim.grid);
    io::write_vortices(&out.join(files::VORTICES), &v)?;
    io::write_snapshot(&out.join(files::FINAL), &sim.state, &sim.params, &sim.grid, sim.config.io.format)?;
    io::write_json(&out.join(files::SUMMARY), &summary)?;
    Ok(summary)
}

fn drive(mut sim: Simulation, csv: DiagnosticsWriter) -> Result<RunSummary, DriverError> {
    let out = sim.config.io.out_dir.clone();
    let mut hooks = FileHooks { out: out.clone(), csv };
    let summary = sim.run(&mut hooks)?;
    finish(&sim, summary.status, &out)
}

/// Fresh run writing all artifacts into `config.io.out_dir`.
pub fn run(config: RunConfig) -> Result<RunSummary, DriverError> {
    let out = config.io.out_dir.clone();
    std::fs::create_dir_all(&out).map_err(IoError::from)?;
    std::fs::write(out.join(files::CONFIG), config.to_toml_string()).map_err(IoError::from)?;
    let sim = Simulation::new(config)?;
    let csv = DiagnosticsWriter::create(&out.join(files::DIAGNOSTICS))?;
    drive(sim, csv)
}

/// Continues from `checkpoint`, keeping diagnostics rows up to its step.
pub fn resume(config: RunConfig, checkpoint: &Path) -> Result<RunSummary, DriverError> {
    let out = config.io.out_dir.clone();
    std::fs::create_dir_all(&out).map_err(IoError::from)?;
    let sim = Simulation::from_checkpoint(config, checkpoint)?;
    let csv = DiagnosticsWriter::resume(&out.join(files::DIAGNOSTICS), sim.state.step)?;
    drive(sim, csv)
}

/// Probe horizon used by the stability scan when none is given.
pub const DEFAULT_PROBE_STEPS: u64 = 50_000;

/// Whether `steps` steps at `dt` from the configured initial state stay
/// bounded.
pub fn probe_stability(config: &RunConfig, alg: AlgorithmId, dt: f64, steps: u64) -> Result<bool, DriverError> {
    let mut c = config.clone();
    c.integrator.algorithm = alg;
    c.integrator.dt = dt;
    let mut sim = Simulation::new(c)?;
    for _ in 0..steps {
        if sim.step()? {
            return Ok(false);
        }
    }
    Ok(sim.state.is_finite())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub algorithm: AlgorithmId,
    pub limit: Option<f64>,
    pub unbounded: bool,
    pub error: Option<String>,
}

impl ScanRow {
    fn from_result(algorithm: AlgorithmId, r: Result<StabilityLimit, StabilityError>) -> Self {
        match r {
            Ok(StabilityLimit::Finite(v)) => Self { algorithm, limit: Some(v), unbounded: false, error: None },
            Ok(StabilityLimit::Unbounded { cap }) => Self { algorithm, limit: Some(cap), unbounded: true, error: None },
            Err(e) => Self { algorithm, limit: None, unbounded: false, error: Some(e.to_string()) },
        }
    }
}

/// Largest stable step per algorithm, bisected in `[lo, hi]` with
/// `steps`-step probes.
pub fn stability_scan(config: &RunConfig, algorithms: &[AlgorithmId], lo: f64, hi: f64, steps: u64) -> Vec<ScanRow> {
    algorithms
        .iter()
        .map(|&alg| {
            let r = find_stability_limit(alg, lo, hi, |a, dt| probe_stability(config, a, dt, steps));
            ScanRow::from_result(alg, r)
        })
        .collect()
}
