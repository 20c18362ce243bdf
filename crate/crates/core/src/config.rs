//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 1
//!
//! [grid]
//! domain_x_xi = 34.0     # whole system, blanket included
//! domain_y_xi = 48.0     # y period
//! blanket_xi = 2.0
//! h_xi = 0.5
//!
//! [physics]
//! kappa = 4.0
//! sigma = 1.0
//! tau = 1.0              # uniform; rectangular defects below
//! h_left = 0.5
//! h_right = 0.5
//! seed_amplitude = 1e-3
//!
//! [[physics.defects]]    # optional, any number
//! x = [10.0, 12.0]
//! y = [20.0, 22.0]
//! tau = 0.5
//!
//! [integrator]
//! algorithm = "IV"       # I, II, III or IV
//! dt = 0.19
//! m = 1
//! max_steps = 100000
//! closure = "updated"    # or "current"
//!
//! [diagnostics]
//! sample_every = 1000
//! equilibrium_window = 2
//! drift_tolerance = 1e-6
//! energy_tolerance = 1e-10   # inf tests vortices only
//! bond_cutoff = 1.5
//!
//! [io]
//! out_dir = "out"
//! snapshot_every = 0     # 0 disables
//! checkpoint_every = 0
//! format = "text"        # or "binary"
//! ```
//!
//! `seed`, `tau`, `seed_amplitude`, `m`, `closure` and the whole
//! `[diagnostics]` and `[io]` sections, or any key in them, may be omitted;
//! the values shown are the defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{psi_layout, Params, ParamsError};
use crate::grid::{build_grid, GridConfig, GridError, GridSpec};
use crate::integrators::{AlgorithmId, ClosureLinks};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defect {
    /// `[x_min, x_max]` in units of the coherence length.
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub kappa: f64,
    pub sigma: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default)]
    pub defects: Vec<Defect>,
    pub h_left: f64,
    pub h_right: f64,
    #[serde(default = "default_seed_amplitude")]
    pub seed_amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub algorithm: AlgorithmId,
    pub dt: f64,
    #[serde(default = "one_usize")]
    pub m: usize,
    pub max_steps: u64,
    #[serde(default)]
    pub closure: ClosureLinks,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub sample_every: u64,
    pub equilibrium_window: usize,
    pub drift_tolerance: f64,
    /// Largest energy change between consecutive samples; `inf` disables.
    pub energy_tolerance: f64,
    pub bond_cutoff: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            sample_every: 1000,
            equilibrium_window: 2,
            drift_tolerance: crate::diagnostics::EQUILIBRIUM_DRIFT,
            energy_tolerance: 1e-10,
            bond_cutoff: crate::diagnostics::BOND_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Text,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub out_dir: PathBuf,
    pub snapshot_every: u64,
    pub checkpoint_every: u64,
    pub format: DataFormat,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self { out_dir: PathBuf::from("out"), snapshot_every: 0, checkpoint_every: 0, format: DataFormat::Text }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one_u64")]
    pub seed: u64,
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub io: IoConfig,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}
fn default_seed_amplitude() -> f64 {
    1e-3
}

impl RunConfig {
    /// Full-size benchmark: 132 x 192 system, kappa 16, H 0.5,
    /// Algorithm I at 0.0025.
    pub fn benchmark() -> Self {
        Self::with_grid(GridConfig::benchmark(), 16.0, AlgorithmId::Explicit, 0.0025)
    }

    /// Scaled-down benchmark: 34 x 48 system, kappa 4, H 0.5.
    pub fn desk(algorithm: AlgorithmId, dt: f64) -> Self {
        Self::with_grid(GridConfig::desk(), 4.0, algorithm, dt)
    }

    fn with_grid(grid: GridConfig, kappa: f64, algorithm: AlgorithmId, dt: f64) -> Self {
        Self {
            seed: 1,
            grid,
            physics: PhysicsConfig {
                kappa,
                sigma: 1.0,
                tau: 1.0,
                defects: Vec::new(),
                h_left: 0.5,
                h_right: 0.5,
                seed_amplitude: 1e-3,
            },
            integrator: IntegratorConfig { algorithm, dt, m: 1, max_steps: 10_000_000, closure: ClosureLinks::default() },
            diagnostics: DiagnosticsConfig::default(),
            io: IoConfig::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn grid_spec(&self) -> Result<GridSpec, ConfigError> {
        Ok(build_grid(&self.grid)?)
    }

    /// Parameters on `g`, with defects applied to the vertices they cover.
    pub fn params(&self, g: &GridSpec) -> Result<Params, ConfigError> {
        let ph = &self.physics;
        let mut tau = psi_layout(g, ph.tau);
        for d in &ph.defects {
            for j in 0..g.n_rows() {
                for i in tau.i_first()..=tau.i_last() {
                    let (x, y) = (g.x(i), g.y(g.wrap_row(j)));
                    if x >= d.x[0] && x <= d.x[1] && y >= d.y[0] && y <= d.y[1] {
                        tau.set(i, j, d.tau);
                    }
                }
            }
        }
        let p = Params {
            kappa: ph.kappa,
            sigma: ph.sigma,
            tau,
            h_left: ph.h_left,
            h_right: ph.h_right,
            dt: self.integrator.dt,
            m: self.integrator.m,
        };
        p.validate(g)?;
        Ok(p)
    }

    /// Re-checks every cross-field constraint.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = self.grid_spec()?;
        self.params(&g)?;
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        let d = &self.diagnostics;
        if d.sample_every == 0 {
            return bad("diagnostics.sample_every must be at least 1");
        }
        if d.equilibrium_window < 2 {
            return bad("diagnostics.equilibrium_window must be at least 2");
        }
        if !(d.drift_tolerance > 0.0) {
            return bad("diagnostics.drift_tolerance must be positive");
        }
        if !(d.energy_tolerance > 0.0) {
            return bad("diagnostics.energy_tolerance must be positive");
        }
        if !(d.bond_cutoff > 1.0) {
            return bad("diagnostics.bond_cutoff must exceed 1");
        }
        if !(self.physics.seed_amplitude >= 0.0 && self.physics.seed_amplitude.is_finite()) {
            return bad("physics.seed_amplitude must be finite and non-negative");
        }
        for def in &self.physics.defects {
            if !(def.x[0] <= def.x[1] && def.y[0] <= def.y[1]) {
                return bad("defect ranges must be ordered");
            }
        }
        Ok(())
    }
}
