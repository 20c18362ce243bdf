//! Time integration: explicit (I), semi-implicit (II), implicit (III) and
//! fully implicit (IV) schemes, with optional multi-timestepping of the
//! vector potential.
//!
//! Every step follows the same pipeline:
//!
//! 1. assemble all right-hand sides from the step-`n` state;
//! 2. advance `A` (explicitly for I, with the prefactored line systems
//!    otherwise) and rebuild the links;
//! 3. advance `psi` (explicitly for I/II, through the factored solve for
//!    III/IV);
//! 4. restore ghosts and closures.
//!
//! For III and IV the correction `phi = psi^{n+1} - psi^n` solves
//! `(I - dt L_xx)(I - dt L_yy) phi = dt (L_xx + L_yy) psi^n + R`, which is
//! the backward-Euler linear part rewritten for `phi`. `R` is
//! `dt N(psi^n)` for III and `S(psi^n) - psi^n` for IV.

mod adi;
mod semigroup;
mod stability;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::Field2;
use crate::fields::{ax_layout, ay_layout, link_variables_into, psi_layout, LinkField, Params, State, C64};
use crate::grid::GridSpec;
use crate::linalg::{FactorCache, LinalgError};
use crate::operators::{add_curl_diagonal, laplacian_into, nonlinear_n, potential_forcing_into, OperatorWorkspace};

pub use adi::{adi_solve_psi, AdiSolver};
pub use semigroup::{semigroup_s, semigroup_with_decay};
pub use stability::{find_stability_limit, round_sig, StabilityError, StabilityLimit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgorithmId {
    #[serde(rename = "I")]
    Explicit,
    #[serde(rename = "II")]
    SemiImplicit,
    #[serde(rename = "III")]
    Implicit,
    #[serde(rename = "IV")]
    FullyImplicit,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 4] = [
        AlgorithmId::Explicit,
        AlgorithmId::SemiImplicit,
        AlgorithmId::Implicit,
        AlgorithmId::FullyImplicit,
    ];

    pub fn roman(self) -> &'static str {
        match self {
            AlgorithmId::Explicit => "I",
            AlgorithmId::SemiImplicit => "II",
            AlgorithmId::Implicit => "III",
            AlgorithmId::FullyImplicit => "IV",
        }
    }

    fn implicit_potential(self) -> bool {
        self != AlgorithmId::Explicit
    }

    fn implicit_psi(self) -> bool {
        matches!(self, AlgorithmId::Implicit | AlgorithmId::FullyImplicit)
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.roman())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown algorithm {0:?} (expected I, II, III or IV)")]
pub struct ParseAlgorithmError(String);

impl FromStr for AlgorithmId {
    type Err = ParseAlgorithmError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" | "EXPLICIT" => Ok(AlgorithmId::Explicit),
            "II" | "2" | "SEMI-IMPLICIT" | "SEMIIMPLICIT" => Ok(AlgorithmId::SemiImplicit),
            "III" | "3" | "IMPLICIT" => Ok(AlgorithmId::Implicit),
            "IV" | "4" | "FULLY-IMPLICIT" | "FULLYIMPLICIT" => Ok(AlgorithmId::FullyImplicit),
            _ => Err(ParseAlgorithmError(s.to_string())),
        }
    }
}

/// Which links close the interface in the implicit order-parameter solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureLinks {
    /// Links at the start of the step.
    Current,
    /// Links after this step's potential update.
    #[default]
    Updated,
}

#[derive(Debug, Error, PartialEq)]
pub enum StepError {
    #[error("line solve failed: {0}")]
    Solver(#[from] LinalgError),
}

/// Outcome of one step. The state itself is advanced in place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub max_dpsi: f64,
    pub max_da: f64,
    pub diverged: bool,
    pub potential_updated: bool,
    pub wall_seconds: f64,
}

/// Scratch arrays sized for one grid.
#[derive(Debug, Clone)]
struct Workspace {
    n_x: usize,
    n_y: usize,
    n_sx: usize,
    n_ex: usize,
    update: Field2<C64>,
    fx: Field2<f64>,
    fy: Field2<f64>,
    ops: OperatorWorkspace,
    prev_links: LinkField,
    columns: Vec<f64>,
}

impl Workspace {
    fn new(g: &GridSpec) -> Self {
        Self {
            n_x: g.n_x,
            n_y: g.n_y,
            n_sx: g.n_sx,
            n_ex: g.n_ex,
            update: psi_layout(g, C64::new(0.0, 0.0)),
            fx: ax_layout(g, 0.0),
            fy: ay_layout(g, 0.0),
            ops: OperatorWorkspace::new(g),
            prev_links: LinkField::identity(g),
            columns: vec![0.0; g.n_y],
        }
    }

    fn fits(&self, g: &GridSpec) -> bool {
        (self.n_x, self.n_y, self.n_sx, self.n_ex) == (g.n_x, g.n_y, g.n_sx, g.n_ex)
    }
}

/// `exp(-2 tau dt)` per vertex, rebuilt when `dt` or `tau` change.
#[derive(Debug, Clone, Default)]
struct DecayCache(Option<(f64, Field2<f64>, Field2<f64>)>);

impl DecayCache {
    fn get(&mut self, tau: &Field2<f64>, dt: f64) -> &Field2<f64> {
        let stale = self.0.as_ref().is_none_or(|(d, t, _)| *d != dt || t != tau);
        if stale {
            let field = tau.map(|t| (-2.0 * t * dt).exp());
            self.0 = Some((dt, tau.clone(), field));
        }
        &self.0.as_ref().expect("decay cached").2
    }
}

/// Advances states with one algorithm. Holds factorization caches and the
/// multi-timestepping phase, so one stepper should follow one trajectory.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub algorithm: AlgorithmId,
    pub closure: ClosureLinks,
    pub divergence_psi_max: f64,
    phase: u64,
    factors: FactorCache,
    adi: Option<AdiSolver>,
    ws: Option<Workspace>,
    decay: DecayCache,
}

impl Stepper {
    pub fn new(algorithm: AlgorithmId) -> Self {
        Self {
            algorithm,
            closure: ClosureLinks::default(),
            divergence_psi_max: 10.0,
            phase: 0,
            factors: FactorCache::new(),
            adi: None,
            ws: None,
            decay: DecayCache::default(),
        }
    }

    /// Steps taken since the last vector-potential update, modulo `m`.
    pub fn phase(&self) -> u64 {
        self.phase
    }

    pub fn set_phase(&mut self, phase: u64) {
        self.phase = phase;
    }

    /// Line factorizations of the order-parameter system performed so far.
    pub fn psi_factorizations(&self) -> u64 {
        self.adi.as_ref().map_or(0, |a| a.factorizations())
    }

    /// Advances `s` by one step of `p.dt`. The state must be synced.
    pub fn step(&mut self, s: &mut State, p: &Params, g: &GridSpec) -> Result<StepReport, StepError> {
        let start = Instant::now();
        if !self.ws.as_ref().is_some_and(|w| w.fits(g)) {
            self.ws = Some(Workspace::new(g));
            self.adi = None;
        }
        let m = p.m.max(1) as u64;
        let update_potential = self.phase % m == 0;
        let dt = p.dt;
        let dt_a = dt * m as f64;
        let alg = self.algorithm;
        let ws = self.ws.as_mut().expect("workspace");

        // Right-hand sides at step n.
        laplacian_into(&s.psi, &s.links.ux, &s.links.uy, g, &mut ws.update);
        let decay = if alg == AlgorithmId::FullyImplicit { Some(self.decay.get(&p.tau, dt)) } else { None };
        let p0 = s.psi.i_first();
        for j in 1..=g.n_y {
            let (pr, tr) = (s.psi.row(j), p.tau.row(j));
            let dr = decay.as_ref().map(|d| d.row(j));
            let ur = ws.update.row_mut(j);
            for i in g.n_sx..=g.n_ex {
                let k = i - p0;
                let r = match dr {
                    Some(d) => semigroup_with_decay(pr[k], tr[k], d[k]) - pr[k],
                    None => nonlinear_n(pr[k], tr[k]) * dt,
                };
                ur[k] = ur[k] * dt + r;
            }
        }
        if update_potential {
            potential_forcing_into(s, p.kappa, g, &mut ws.ops, &mut ws.fx, &mut ws.fy);
        }

        // Vector potential.
        let mut max_da = 0.0f64;
        if update_potential {
            if alg.implicit_potential() {
                let f = self.factors.get(dt_a, p.sigma, g)?;
                max_da = implicit_potential_update(s, p, g, dt_a, f, &ws.fx, &ws.fy, &mut ws.columns);
            } else {
                add_curl_diagonal(s, p.sigma, g, &mut ws.fx, &mut ws.fy);
                max_da = explicit_potential_update(s, g, dt_a, &ws.fx, &ws.fy);
            }
            s.sync_potential(p, g);
            std::mem::swap(&mut ws.prev_links, &mut s.links);
            link_variables_into(&s.ax, &s.ay, p.kappa, g, &mut s.links);
        }
        let step_links = if update_potential { &ws.prev_links } else { &s.links };

        // Order parameter.
        if alg.implicit_psi() {
            let adi = self.adi.get_or_insert_with(|| AdiSolver::new(g));
            let closure = match self.closure {
                ClosureLinks::Current => step_links,
                ClosureLinks::Updated => &s.links,
            };
            adi.solve_in_place(&mut ws.update, step_links, closure, dt, g)?;
        }
        let mut max_dpsi = 0.0f64;
        let mut max_psi = 0.0f64;
        let mut finite = true;
        for j in 1..=g.n_y {
            let ur = ws.update.row(j);
            let pr = s.psi.row_mut(j);
            for k in 1..=g.n_core() {
                let d = ur[k];
                pr[k] += d;
                max_dpsi = max_dpsi.max(d.norm());
                let a = pr[k].norm();
                finite &= a.is_finite();
                max_psi = max_psi.max(a);
            }
        }
        s.sync_psi(g);
        s.t += dt;
        s.step += 1;
        self.phase = (self.phase + 1) % m;
        finite &= max_da.is_finite();
        Ok(StepReport {
            max_dpsi,
            max_da,
            diverged: !finite || max_psi > self.divergence_psi_max || max_psi.is_nan(),
            potential_updated: update_potential,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

fn explicit_potential_update(s: &mut State, g: &GridSpec, dt: f64, fx: &Field2<f64>, fy: &Field2<f64>) -> f64 {
    let mut max_da = 0.0f64;
    for j in 1..=g.n_y {
        let (ax, rx) = (s.ax.row_mut(j), fx.row(j));
        for i in 1..g.n_x {
            let d = dt * rx[i];
            ax[i] += d;
            max_da = max_da.max(d.abs());
        }
        let (ay, ry) = (s.ay.row_mut(j), fy.row(j));
        for i in 1..=g.n_x {
            let d = dt * ry[i];
            ay[i] += d;
            max_da = max_da.max(d.abs());
        }
    }
    max_da
}

/// Solves `(I - dt/sigma D_yy) A_x^{n+1} = A_x^n + dt/sigma f_x` per x-edge
/// column and `(I - dt/sigma D_xx) A_y^{n+1} = A_y^n + dt/sigma (f_y + b)`
/// per y-edge row, `b` being the boundary-field term of the closed `D_xx`.
#[allow(clippy::too_many_arguments)]
fn implicit_potential_update(
    s: &mut State,
    p: &Params,
    g: &GridSpec,
    dt: f64,
    f: &crate::linalg::PotentialFactors,
    fx: &Field2<f64>,
    fy: &Field2<f64>,
    column: &mut [f64],
) -> f64 {
    let c = dt / p.sigma;
    let mut max_da = 0.0f64;
    for i in 1..g.n_x {
        for j in 1..=g.n_y {
            column[j - 1] = s.ax.get(i, j) + c * fx.get(i, j);
        }
        f.yy.solve_in_place(column);
        for j in 1..=g.n_y {
            let old = s.ax.get(i, j);
            max_da = max_da.max((column[j - 1] - old).abs());
            s.ax.set(i, j, column[j - 1]);
        }
    }
    let ihy = 1.0 / g.h_y;
    let ihx = 1.0 / g.h_x;
    let nx = g.n_x;
    let mut line = vec![0.0; nx];
    for j in 1..=g.n_y {
        let beta_l = p.h_left + (s.ax.get(0, j + 1) - s.ax.get(0, j)) * ihy;
        let beta_r = p.h_right + (s.ax.get(nx, j + 1) - s.ax.get(nx, j)) * ihy;
        let (ay, ry) = (s.ay.row(j), fy.row(j));
        for i in 1..=nx {
            line[i - 1] = ay[i] + c * ry[i];
        }
        line[0] -= c * beta_l * ihx;
        line[nx - 1] += c * beta_r * ihx;
        f.xx.solve_in_place(&mut line);
        let ay = s.ay.row_mut(j);
        for i in 1..=nx {
            max_da = max_da.max((line[i - 1] - ay[i]).abs());
            ay[i] = line[i - 1];
        }
    }
    max_da
}

/// One step of algorithm I with a fresh stepper.
pub fn step_explicit(s: &mut State, p: &Params, g: &GridSpec) -> Result<StepReport, StepError> {
    Stepper::new(AlgorithmId::Explicit).step(s, p, g)
}

/// One step of algorithm II with a fresh stepper.
pub fn step_semi_implicit(s: &mut State, p: &Params, g: &GridSpec) -> Result<StepReport, StepError> {
    Stepper::new(AlgorithmId::SemiImplicit).step(s, p, g)
}

/// One step of algorithm III with a fresh stepper.
pub fn step_implicit(s: &mut State, p: &Params, g: &GridSpec) -> Result<StepReport, StepError> {
    Stepper::new(AlgorithmId::Implicit).step(s, p, g)
}

/// One step of algorithm IV with a fresh stepper.
pub fn step_fully_implicit(s: &mut State, p: &Params, g: &GridSpec) -> Result<StepReport, StepError> {
    Stepper::new(AlgorithmId::FullyImplicit).step(s, p, g)
}

/// One step of algorithm IV under multi-timestepping: the vector potential
/// moves by `m dt` whenever `phase` is a multiple of `p.m`. Returns the
/// report and the next phase.
pub fn step_multirate(s: &mut State, p: &Params, g: &GridSpec, phase: u64) -> Result<(StepReport, u64), StepError> {
    let mut st = Stepper::new(AlgorithmId::FullyImplicit);
    st.set_phase(phase % p.m.max(1) as u64);
    let r = st.step(s, p, g)?;
    Ok((r, st.phase()))
}
