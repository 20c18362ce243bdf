//! Dynamical state and the gauge quantities derived from it.
//!
//! The state holds the order parameter on vertices and the two components
//! of the vector potential on edge midpoints. Link variables are cached on
//! the state and must be refreshed with [`State::sync`] after any direct
//! edit of `ax` or `ay`.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::array::Field2;
use crate::grid::GridSpec;

pub type C64 = Complex64;

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("kappa must be positive, got {0}")]
    Kappa(f64),
    #[error("sigma must be positive, got {0}")]
    Sigma(f64),
    #[error("time step must be positive, got {0}")]
    TimeStep(f64),
    #[error("update period m must be at least 1")]
    UpdatePeriod,
    #[error("tau must lie in (0, 1], got {value} at ({i}, {j})")]
    Tau { i: usize, j: usize, value: f64 },
    #[error("applied field must be finite")]
    Field,
    #[error("tau field shape does not match the grid")]
    TauShape,
}

/// Physical and discretization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub kappa: f64,
    pub sigma: f64,
    /// Defect strength per vertex, on the `psi` layout.
    pub tau: Field2<f64>,
    pub h_left: f64,
    pub h_right: f64,
    pub dt: f64,
    /// Vector-potential update period (multi-timestepping).
    pub m: usize,
}

impl Params {
    /// Defect-free parameters with a uniform applied field.
    pub fn uniform(grid: &GridSpec, kappa: f64, sigma: f64, h_applied: f64, dt: f64) -> Self {
        Self {
            kappa,
            sigma,
            tau: psi_layout(grid, 1.0),
            h_left: h_applied,
            h_right: h_applied,
            dt,
            m: 1,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<(), ParamsError> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(ParamsError::Kappa(self.kappa));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(ParamsError::Sigma(self.sigma));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ParamsError::TimeStep(self.dt));
        }
        if self.m == 0 {
            return Err(ParamsError::UpdatePeriod);
        }
        if !self.h_left.is_finite() || !self.h_right.is_finite() {
            return Err(ParamsError::Field);
        }
        if !self.tau.same_shape(&psi_layout(grid, 0.0)) {
            return Err(ParamsError::TauShape);
        }
        for j in 1..=grid.n_y {
            for i in grid.n_sx..=grid.n_ex {
                let value = self.tau.get(i, j);
                if !(value > 0.0 && value <= 1.0) {
                    return Err(ParamsError::Tau { i, j, value });
                }
            }
        }
        Ok(())
    }

    /// Reference field used by the energy functional.
    pub fn h_mean(&self) -> f64 {
        0.5 * (self.h_left + self.h_right)
    }
}

/// Vertex array covering the superconductor plus its interface ghosts.
pub fn psi_layout<T: Copy>(g: &GridSpec, fill: T) -> Field2<T> {
    Field2::new(g.n_sx - 1, g.n_ex + 1, g.n_rows(), fill)
}

/// Array over x-edges, columns `0..=n_x`.
pub fn ax_layout<T: Copy>(g: &GridSpec, fill: T) -> Field2<T> {
    Field2::new(0, g.n_x, g.n_rows(), fill)
}

/// Array over y-edges, columns `0..=n_x + 1`.
pub fn ay_layout<T: Copy>(g: &GridSpec, fill: T) -> Field2<T> {
    Field2::new(0, g.n_x + 1, g.n_rows(), fill)
}

/// Array over vertices, columns `0..=n_x + 1` (gauge functions).
pub fn vertex_layout<T: Copy>(g: &GridSpec, fill: T) -> Field2<T> {
    Field2::new(0, g.n_x + 1, g.n_rows(), fill)
}

/// Array over cells, columns `0..=n_x`.
pub fn cell_layout<T: Copy>(g: &GridSpec, fill: T) -> Field2<T> {
    Field2::new(0, g.n_x, g.n_rows(), fill)
}

/// Unit-modulus edge phases `exp(-i h A / kappa)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkField {
    pub ux: Field2<C64>,
    pub uy: Field2<C64>,
}

impl LinkField {
    pub fn identity(g: &GridSpec) -> Self {
        Self {
            ux: ax_layout(g, C64::new(1.0, 0.0)),
            uy: ay_layout(g, C64::new(1.0, 0.0)),
        }
    }
}

#[inline]
fn link(h_over_kappa: f64, a: f64) -> C64 {
    let (s, c) = (h_over_kappa * a).sin_cos();
    C64::new(c, -s)
}

/// `U_x = exp(-i h_x A_x / kappa)`, `U_y = exp(-i h_y A_y / kappa)` on every
/// stored edge, ghost rows included.
pub fn link_variables(ax: &Field2<f64>, ay: &Field2<f64>, kappa: f64, g: &GridSpec) -> LinkField {
    LinkField {
        ux: ax.map(|a| link(g.h_x / kappa, a)),
        uy: ay.map(|a| link(g.h_y / kappa, a)),
    }
}

pub(crate) fn link_variables_into(ax: &Field2<f64>, ay: &Field2<f64>, kappa: f64, g: &GridSpec, out: &mut LinkField) {
    let kx = g.h_x / kappa;
    let ky = g.h_y / kappa;
    for (u, &a) in out.ux.as_mut_slice().iter_mut().zip(ax.as_slice()) {
        *u = link(kx, a);
    }
    for (u, &a) in out.uy.as_mut_slice().iter_mut().zip(ay.as_slice()) {
        *u = link(ky, a);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub psi: Field2<C64>,
    pub ax: Field2<f64>,
    pub ay: Field2<f64>,
    pub links: LinkField,
    pub t: f64,
    pub step: u64,
}

impl State {
    /// `psi = 0`, `A = 0`, unsynced boundary ghosts.
    pub fn zeros(g: &GridSpec) -> Self {
        Self {
            psi: psi_layout(g, C64::new(0.0, 0.0)),
            ax: ax_layout(g, 0.0),
            ay: ay_layout(g, 0.0),
            links: LinkField::identity(g),
            t: 0.0,
            step: 0,
        }
    }

    /// Uniform `psi`, zero potential; synced.
    pub fn uniform(g: &GridSpec, p: &Params, psi0: C64) -> Self {
        let mut s = Self::zeros(g);
        s.psi.fill(psi0);
        s.sync(p, g);
        s
    }

    /// Meissner state with a small reproducible seed:
    /// `psi = 1 + eps (u + i v)`, `u, v` uniform in `[-1/2, 1/2]`, `A = 0`.
    pub fn meissner_seeded(g: &GridSpec, p: &Params, seed: u64, eps: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self::zeros(g);
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                let u: f64 = rng.random_range(-0.5..=0.5);
                let v: f64 = rng.random_range(-0.5..=0.5);
                s.psi.set(i, j, C64::new(1.0 + eps * u, eps * v));
            }
        }
        s.sync(p, g);
        s
    }

    /// Restores every derived/ghost value from the primary unknowns:
    /// periodic rows, the outer-boundary `A_y` columns, links, and the
    /// interface ghosts of `psi`.
    pub fn sync(&mut self, p: &Params, g: &GridSpec) {
        self.sync_potential(p, g);
        link_variables_into(&self.ax, &self.ay, p.kappa, g, &mut self.links);
        self.sync_psi(g);
    }

    pub(crate) fn sync_potential(&mut self, p: &Params, g: &GridSpec) {
        self.ax.refresh_periodic_rows();
        self.ay.refresh_periodic_rows();
        apply_outer_boundary(self, p, g);
    }

    pub(crate) fn sync_psi(&mut self, g: &GridSpec) {
        self.psi.refresh_periodic_rows();
        apply_interface_conditions_with(&mut self.psi, &self.links, g);
    }

    pub fn is_finite(&self) -> bool {
        self.psi.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.ax.as_slice().iter().all(|a| a.is_finite())
            && self.ay.as_slice().iter().all(|a| a.is_finite())
    }

    /// Largest `|psi|` over the superconductor.
    pub fn max_abs_psi(&self, g: &GridSpec) -> f64 {
        let mut m = 0.0f64;
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                let a = self.psi.get(i, j).norm();
                if a.is_nan() {
                    return f64::NAN;
                }
                m = m.max(a);
            }
        }
        m
    }
}

/// Supercurrent on x- and y-edges. Zero on edges not joining two vertices
/// of the superconductor's closure.
pub fn supercurrent(s: &State, p: &Params, g: &GridSpec) -> (Field2<f64>, Field2<f64>) {
    let mut jx = ax_layout(g, 0.0);
    let mut jy = ay_layout(g, 0.0);
    supercurrent_into(s, p.kappa, g, &mut jx, &mut jy);
    (jx, jy)
}

pub(crate) fn supercurrent_into(s: &State, kappa: f64, g: &GridSpec, jx: &mut Field2<f64>, jy: &mut Field2<f64>) {
    let cx = 1.0 / (kappa * g.h_x);
    let cy = 1.0 / (kappa * g.h_y);
    let p0 = s.psi.i_first();
    for j in 1..=g.n_y {
        let psi = s.psi.row(j);
        let psi_up = s.psi.row(j + 1);
        let ux = s.links.ux.row(j);
        let uy = s.links.uy.row(j);
        let jxr = jx.row_mut(j);
        for i in g.n_sx - 1..=g.n_ex {
            let k = i - p0;
            jxr[i] = cx * (psi[k].conj() * ux[i] * psi[k + 1]).im;
        }
        let jyr = jy.row_mut(j);
        for i in g.n_sx..=g.n_ex {
            let k = i - p0;
            jyr[i] = cy * (psi[k].conj() * uy[i] * psi_up[k]).im;
        }
    }
    jx.refresh_periodic_rows();
    jy.refresh_periodic_rows();
}

/// Cell-centred field `B = dA_y/dx - dA_x/dy` on cells `0..=n_x`, periodic
/// rows filled. Requires the potential's ghost rows and boundary columns.
pub fn magnetic_field(s: &State, g: &GridSpec) -> Field2<f64> {
    let mut b = cell_layout(g, 0.0);
    magnetic_field_into(&s.ax, &s.ay, g, &mut b);
    b
}

pub(crate) fn magnetic_field_into(ax: &Field2<f64>, ay: &Field2<f64>, g: &GridSpec, b: &mut Field2<f64>) {
    let (ihx, ihy) = (1.0 / g.h_x, 1.0 / g.h_y);
    for j in 1..=g.n_y {
        let ayr = ay.row(j);
        let axr = ax.row(j);
        let ax_up = ax.row(j + 1);
        let br = b.row_mut(j);
        for i in 0..=g.n_x {
            br[i] = (ayr[i + 1] - ayr[i]) * ihx - (ax_up[i] - axr[i]) * ihy;
        }
    }
    b.refresh_periodic_rows();
}

/// Applies the gauge transformation generated by the vertex function `chi`
/// (layout [`vertex_layout`], periodic in y). Returns a synced state.
pub fn gauge_transform(s: &State, chi: &Field2<f64>, p: &Params, g: &GridSpec) -> State {
    let mut chi = chi.clone();
    chi.refresh_periodic_rows();
    let mut out = s.clone();
    let kx = p.kappa / g.h_x;
    let ky = p.kappa / g.h_y;
    for j in 1..=g.n_y {
        for i in g.n_sx..=g.n_ex {
            out.psi[(i, j)] *= C64::from_polar(1.0, chi.get(i, j));
        }
        for i in 0..=g.n_x {
            out.ax[(i, j)] += kx * (chi.get(i + 1, j) - chi.get(i, j));
        }
        for i in 0..=g.n_x + 1 {
            out.ay[(i, j)] += ky * (chi.get(i, j + 1) - chi.get(i, j));
        }
    }
    out.sync(p, g);
    out
}

/// Writes the interface ghosts of `psi` from the links:
/// `psi[n_sx-1] = U_x[n_sx-1] psi[n_sx]`, `psi[n_ex+1] = conj(U_x[n_ex]) psi[n_ex]`.
pub fn apply_interface_conditions(s: &mut State, links: &LinkField, g: &GridSpec) {
    apply_interface_conditions_with(&mut s.psi, links, g);
}

fn apply_interface_conditions_with(psi: &mut Field2<C64>, links: &LinkField, g: &GridSpec) {
    let p0 = psi.i_first();
    let last = psi.i_last() - p0;
    for j in 0..g.n_rows() {
        let ul = links.ux.get(g.n_sx - 1, j);
        let ur = links.ux.get(g.n_ex, j).conj();
        let row = psi.row_mut(j);
        row[0] = ul * row[1];
        row[last] = ur * row[last - 1];
    }
}

/// Sets the ghost `A_y` columns so that the boundary cells carry the
/// applied fields: `B[0, j] = H_L`, `B[n_x, j] = H_R`. Needs the periodic
/// rows of `A_x` refreshed; refreshes those of `A_y`.
pub fn apply_outer_boundary(s: &mut State, p: &Params, g: &GridSpec) {
    let (hx, ihy) = (g.h_x, 1.0 / g.h_y);
    let nx = g.n_x;
    for j in 1..=g.n_y {
        let dl = (s.ax.get(0, j + 1) - s.ax.get(0, j)) * ihy;
        let dr = (s.ax.get(nx, j + 1) - s.ax.get(nx, j)) * ihy;
        let row = s.ay.row_mut(j);
        row[0] = row[1] - hx * (p.h_left + dl);
        row[nx + 1] = row[nx] + hx * (p.h_right + dr);
    }
    s.ay.refresh_periodic_rows();
}
