//! Matrix-free finite-difference operators and the semidiscrete right-hand
//! sides.
//!
//! `L_xx`, `L_yy` are the gauge-covariant second differences acting on
//! `psi`; `D_xx`, `D_yy`, `D_xy`, `D_yx` act on the vector potential.
//! Together `D_yy A_x - D_yx A_y` and `D_xx A_y - D_xy A_x` form the
//! discrete `-curl curl A`.
//!
//! Outer-boundary closure for `D_xx`: the ghost columns `A_y[0]` and
//! `A_y[n_x + 1]` are slaved to the evolved columns by the fixed boundary
//! field. Written out, the first and last rows become
//!
//! | row      | `A_y[i-1]` | `A_y[i]`   | `A_y[i+1]` | constant                  |
//! |----------|------------|------------|------------|---------------------------|
//! | `i = 1`  | -          | `-1/h_x^2` | `1/h_x^2`  | `-beta_L / h_x`           |
//! | interior | `1/h_x^2`  | `-2/h_x^2` | `1/h_x^2`  | -                         |
//! | `i = n_x`| `1/h_x^2`  | `-1/h_x^2` | -          | `+beta_R / h_x`           |
//!
//! with `beta_L = H_L + (A_x[0, j+1] - A_x[0, j]) / h_y` and the analogous
//! `beta_R` on column `n_x`. The matrix-free `apply_dxx` reads the ghosts
//! directly; the implicit solvers use the table.

use crate::array::Field2;
use crate::fields::{ax_layout, ay_layout, psi_layout, supercurrent_into, Params, State, C64};
use crate::grid::GridSpec;

/// `(L_xx psi)_i = h_x^-2 [U_x[i] psi[i+1] - 2 psi[i] + conj(U_x[i-1]) psi[i-1]]`
/// on superconducting vertices. Interface ghosts of `psi` must be current.
pub fn apply_lxx(psi: &Field2<C64>, ux: &Field2<C64>, g: &GridSpec) -> Field2<C64> {
    let mut out = psi_layout(g, C64::new(0.0, 0.0));
    let c = 1.0 / (g.h_x * g.h_x);
    let p0 = psi.i_first();
    for j in 1..=g.n_y {
        let pr = psi.row(j);
        let ur = ux.row(j);
        let or = out.row_mut(j);
        for i in g.n_sx..=g.n_ex {
            let k = i - p0;
            or[k] = c * (ur[i] * pr[k + 1] - 2.0 * pr[k] + ur[i - 1].conj() * pr[k - 1]);
        }
    }
    out
}

/// `(L_yy psi)_j = h_y^-2 [U_y[j] psi[j+1] - 2 psi[j] + conj(U_y[j-1]) psi[j-1]]`,
/// periodic in `j` through the ghost rows.
pub fn apply_lyy(psi: &Field2<C64>, uy: &Field2<C64>, g: &GridSpec) -> Field2<C64> {
    let mut out = psi_layout(g, C64::new(0.0, 0.0));
    let c = 1.0 / (g.h_y * g.h_y);
    let p0 = psi.i_first();
    for j in 1..=g.n_y {
        let (pd, pr, pu) = (psi.row(j - 1), psi.row(j), psi.row(j + 1));
        let (ud, ur) = (uy.row(j - 1), uy.row(j));
        let or = out.row_mut(j);
        for i in g.n_sx..=g.n_ex {
            let k = i - p0;
            or[k] = c * (ur[i] * pu[k] - 2.0 * pr[k] + ud[i].conj() * pd[k]);
        }
    }
    out
}

/// Sum `L_xx psi + L_yy psi` written into `out` (psi layout, rows `1..=n_y`).
pub(crate) fn laplacian_into(psi: &Field2<C64>, ux: &Field2<C64>, uy: &Field2<C64>, g: &GridSpec, out: &mut Field2<C64>) {
    let cx = 1.0 / (g.h_x * g.h_x);
    let cy = 1.0 / (g.h_y * g.h_y);
    let p0 = psi.i_first();
    for j in 1..=g.n_y {
        let (pd, pr, pu) = (psi.row(j - 1), psi.row(j), psi.row(j + 1));
        let (ud, ur, uxr) = (uy.row(j - 1), uy.row(j), ux.row(j));
        let or = out.row_mut(j);
        for i in g.n_sx..=g.n_ex {
            let k = i - p0;
            let c2 = 2.0 * pr[k];
            let lx = uxr[i] * pr[k + 1] - c2 + uxr[i - 1].conj() * pr[k - 1];
            let ly = ur[i] * pu[k] - c2 + ud[i].conj() * pd[k];
            or[k] = cx * lx + cy * ly;
        }
    }
}

/// `N(psi) = tau psi - |psi|^2 psi`.
#[inline]
pub fn nonlinear_n(psi: C64, tau: f64) -> C64 {
    psi * (tau - psi.norm_sqr())
}

/// `(D_yy A_x)_j = h_y^-2 [A_x[j+1] - 2 A_x[j] + A_x[j-1]]` on every x-edge column.
pub fn apply_dyy(ax: &Field2<f64>, g: &GridSpec) -> Field2<f64> {
    let mut out = ax_layout(g, 0.0);
    let c = 1.0 / (g.h_y * g.h_y);
    for j in 1..=g.n_y {
        let (d, r, u) = (ax.row(j - 1), ax.row(j), ax.row(j + 1));
        for (i, o) in out.row_mut(j).iter_mut().enumerate() {
            *o = c * (u[i] - 2.0 * r[i] + d[i]);
        }
    }
    out
}

/// `(D_xx A_y)_i = h_x^-2 [A_y[i+1] - 2 A_y[i] + A_y[i-1]]` on the evolved
/// y-edge columns `1..=n_x`; reads the boundary ghost columns.
pub fn apply_dxx(ay: &Field2<f64>, g: &GridSpec) -> Field2<f64> {
    let mut out = ay_layout(g, 0.0);
    let c = 1.0 / (g.h_x * g.h_x);
    for j in 1..=g.n_y {
        let r = ay.row(j);
        let o = out.row_mut(j);
        for i in 1..=g.n_x {
            o[i] = c * (r[i + 1] - 2.0 * r[i] + r[i - 1]);
        }
    }
    out
}

/// `(D_yx A_y)_{i,j} = [(A_y[i+1,j] - A_y[i,j]) - (A_y[i+1,j-1] - A_y[i,j-1])] / (h_x h_y)`
/// on x-edge columns `0..=n_x`.
pub fn apply_dyx(ay: &Field2<f64>, g: &GridSpec) -> Field2<f64> {
    let mut out = ax_layout(g, 0.0);
    let c = 1.0 / (g.h_x * g.h_y);
    for j in 1..=g.n_y {
        let (d, r) = (ay.row(j - 1), ay.row(j));
        let o = out.row_mut(j);
        for i in 0..=g.n_x {
            o[i] = c * ((r[i + 1] - r[i]) - (d[i + 1] - d[i]));
        }
    }
    out
}

/// `(D_xy A_x)_{i,j} = [(A_x[i,j+1] - A_x[i,j]) - (A_x[i-1,j+1] - A_x[i-1,j])] / (h_x h_y)`
/// on y-edge columns `1..=n_x`.
pub fn apply_dxy(ax: &Field2<f64>, g: &GridSpec) -> Field2<f64> {
    let mut out = ay_layout(g, 0.0);
    let c = 1.0 / (g.h_x * g.h_y);
    for j in 1..=g.n_y {
        let (r, u) = (ax.row(j), ax.row(j + 1));
        let o = out.row_mut(j);
        for i in 1..=g.n_x {
            o[i] = c * ((u[i] - r[i]) - (u[i - 1] - r[i - 1]));
        }
    }
    out
}

/// `d psi / dt` on superconducting vertices. The state must be synced.
pub fn rhs_psi(s: &State, p: &Params, g: &GridSpec) -> Field2<C64> {
    let mut out = psi_layout(g, C64::new(0.0, 0.0));
    laplacian_into(&s.psi, &s.links.ux, &s.links.uy, g, &mut out);
    add_nonlinear(&s.psi, &p.tau, g, &mut out);
    out
}

pub(crate) fn add_nonlinear(psi: &Field2<C64>, tau: &Field2<f64>, g: &GridSpec, out: &mut Field2<C64>) {
    let p0 = psi.i_first();
    for j in 1..=g.n_y {
        let (pr, tr) = (psi.row(j), tau.row(j));
        let or = out.row_mut(j);
        for i in g.n_sx..=g.n_ex {
            let k = i - p0;
            or[k] += nonlinear_n(pr[k], tr[k]);
        }
    }
}

/// Workspace for the vector-potential right-hand sides.
#[derive(Debug, Clone)]
pub struct OperatorWorkspace {
    pub jx: Field2<f64>,
    pub jy: Field2<f64>,
}

impl OperatorWorkspace {
    pub fn new(g: &GridSpec) -> Self {
        Self {
            jx: ax_layout(g, 0.0),
            jy: ay_layout(g, 0.0),
        }
    }
}

/// Cross-derivative and current part of the potential update, without the
/// diagonal second differences:
/// `fx = -D_yx A_y + J_x` on columns `1..=n_x-1`,
/// `fy = -D_xy A_x + J_y` on columns `1..=n_x`.
pub(crate) fn potential_forcing_into(
    s: &State,
    kappa: f64,
    g: &GridSpec,
    ws: &mut OperatorWorkspace,
    fx: &mut Field2<f64>,
    fy: &mut Field2<f64>,
) {
    supercurrent_into(s, kappa, g, &mut ws.jx, &mut ws.jy);
    let c = 1.0 / (g.h_x * g.h_y);
    for j in 1..=g.n_y {
        let (ayd, ayr) = (s.ay.row(j - 1), s.ay.row(j));
        let (axr, axu) = (s.ax.row(j), s.ax.row(j + 1));
        let (jxr, jyr) = (ws.jx.row(j), ws.jy.row(j));
        let fxr = fx.row_mut(j);
        for i in 1..g.n_x {
            let dyx = c * ((ayr[i + 1] - ayr[i]) - (ayd[i + 1] - ayd[i]));
            fxr[i] = jxr[i] - dyx;
        }
        let fyr = fy.row_mut(j);
        for i in 1..=g.n_x {
            let dxy = c * ((axu[i] - axr[i]) - (axu[i - 1] - axr[i - 1]));
            fyr[i] = jyr[i] - dxy;
        }
    }
}

/// `(dA_x/dt, dA_y/dt)` on the evolved edges; zero elsewhere. The state must
/// be synced.
pub fn rhs_a(s: &State, p: &Params, g: &GridSpec) -> (Field2<f64>, Field2<f64>) {
    let mut ws = OperatorWorkspace::new(g);
    let mut fx = ax_layout(g, 0.0);
    let mut fy = ay_layout(g, 0.0);
    potential_forcing_into(s, p.kappa, g, &mut ws, &mut fx, &mut fy);
    add_curl_diagonal(s, p.sigma, g, &mut fx, &mut fy);
    (fx, fy)
}

/// Adds `D_yy A_x` / `D_xx A_y` to the forcing and divides by sigma.
pub(crate) fn add_curl_diagonal(s: &State, sigma: f64, g: &GridSpec, fx: &mut Field2<f64>, fy: &mut Field2<f64>) {
    let cy = 1.0 / (g.h_y * g.h_y);
    let cx = 1.0 / (g.h_x * g.h_x);
    let is = 1.0 / sigma;
    for j in 1..=g.n_y {
        let (d, r, u) = (s.ax.row(j - 1), s.ax.row(j), s.ax.row(j + 1));
        let fxr = fx.row_mut(j);
        for i in 1..g.n_x {
            fxr[i] = is * (fxr[i] + cy * (u[i] - 2.0 * r[i] + d[i]));
        }
        let ay = s.ay.row(j);
        let fyr = fy.row_mut(j);
        for i in 1..=g.n_x {
            fyr[i] = is * (fyr[i] + cx * (ay[i + 1] - 2.0 * ay[i] + ay[i - 1]));
        }
    }
    fx.refresh_periodic_rows();
    fy.refresh_periodic_rows();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{gauge_transform, magnetic_field, vertex_layout, LinkField};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(12, 8, 3, 9, 0.5, 0.4).unwrap()
    }

    fn random_state(g: &GridSpec, p: &Params, seed: u64) -> State {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = State::zeros(g);
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                s.psi.set(i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
            for i in 0..=g.n_x {
                s.ax.set(i, j, rng.random_range(-2.0..2.0));
            }
            for i in 1..=g.n_x {
                s.ay.set(i, j, rng.random_range(-2.0..2.0));
            }
        }
        s.sync(p, g);
        s
    }

    #[test]
    fn lxx_is_exact_on_quadratics() {
        let g = grid();
        let mut psi = psi_layout(&g, C64::new(0.0, 0.0));
        for j in 0..g.n_rows() {
            for i in psi.i_first()..=psi.i_last() {
                psi.set(i, j, C64::new(g.x(i) * g.x(i), 0.0));
            }
        }
        let l = apply_lxx(&psi, &LinkField::identity(&g).ux, &g);
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                assert!((l.get(i, j) - C64::new(2.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lyy_fourier_mode_eigenvalue() {
        let g = grid();
        let mut psi = psi_layout(&g, C64::new(0.0, 0.0));
        for j in 0..g.n_rows() {
            for i in psi.i_first()..=psi.i_last() {
                psi.set(i, j, C64::from_polar(1.0, 2.0 * PI * j as f64 / g.n_y as f64));
            }
        }
        let l = apply_lyy(&psi, &LinkField::identity(&g).uy, &g);
        let lam = -4.0 / (g.h_y * g.h_y) * (PI / g.n_y as f64).sin().powi(2);
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                assert!((l.get(i, j) - lam * psi.get(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_psi_has_no_laplacian() {
        let g = grid();
        let p = Params::uniform(&g, 4.0, 1.0, 0.0, 0.01);
        let s = State::uniform(&g, &p, C64::new(0.5, 0.0));
        let lx = apply_lxx(&s.psi, &s.links.ux, &g);
        let ly = apply_lyy(&s.psi, &s.links.uy, &g);
        assert!(lx.as_slice().iter().chain(ly.as_slice()).all(|z| z.norm() == 0.0));
        let r = rhs_psi(&s, &p, &g);
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                assert!((r.get(i, j) - C64::new(0.375, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn nonlinear_values() {
        assert_eq!(nonlinear_n(C64::new(0.0, 0.0), 1.0), C64::new(0.0, 0.0));
        assert_eq!(nonlinear_n(C64::new(0.5, 0.0), 1.0), C64::new(0.375, 0.0));
        for phi in [0.0, 0.4, 2.0, -3.0] {
            assert!(nonlinear_n(C64::from_polar(1.0, phi), 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn equilibrium_rhs_vanishes() {
        let g = grid();
        let p = Params::uniform(&g, 4.0, 1.0, 0.0, 0.01);
        let s = State::uniform(&g, &p, C64::new(1.0, 0.0));
        let r = rhs_psi(&s, &p, &g);
        assert!(r.as_slice().iter().all(|z| z.norm() == 0.0));
        let (fx, fy) = rhs_a(&s, &p, &g);
        assert!(fx.as_slice().iter().chain(fy.as_slice()).all(|&v| v == 0.0));
        let z = State::uniform(&g, &p, C64::new(0.0, 0.0));
        assert!(rhs_psi(&z, &p, &g).as_slice().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn potential_operators_on_simple_fields() {
        let g = grid();
        let mut ay = ay_layout(&g, 0.0);
        let mut ax = ax_layout(&g, 0.0);
        for j in 0..g.n_rows() {
            for i in 0..=g.n_x + 1 {
                ay.set(i, j, 0.3 * i as f64 * i as f64);
            }
            for i in 0..=g.n_x {
                ax.set(i, j, 1.0 + j as f64);
            }
        }
        // A_y independent of j, A_x independent of i.
        assert!(apply_dyx(&ay, &g).as_slice().iter().all(|&v| v.abs() < 1e-13));
        assert!(apply_dxy(&ax, &g).as_slice().iter().all(|&v| v.abs() < 1e-13));
        let dxx = apply_dxx(&ay, &g);
        for j in 1..=g.n_y {
            for i in 1..=g.n_x {
                assert!((dxx.get(i, j) - 0.6 / (g.h_x * g.h_x)).abs() < 1e-10);
            }
        }
        // y_j^2 on a bounded stripe: interior rows only.
        for j in 0..g.n_rows() {
            for i in 0..=g.n_x {
                ax.set(i, j, g.y(j) * g.y(j));
            }
        }
        let dyy = apply_dyy(&ax, &g);
        for j in 1..=g.n_y {
            assert!((dyy.get(3, j) - 2.0).abs() < 1e-11);
        }
        let constant = ax_layout(&g, 2.5);
        assert!(apply_dyy(&constant, &g).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn curl_curl_identity() {
        let g = grid();
        let p = Params::uniform(&g, 4.0, 1.0, 0.3, 0.01);
        for seed in 0..5 {
            let s = random_state(&g, &p, seed);
            let b = magnetic_field(&s, &g);
            let dyy = apply_dyy(&s.ax, &g);
            let dyx = apply_dyx(&s.ay, &g);
            let dxx = apply_dxx(&s.ay, &g);
            let dxy = apply_dxy(&s.ax, &g);
            for j in 1..=g.n_y {
                for i in 1..g.n_x {
                    let lhs = dyy.get(i, j) - dyx.get(i, j);
                    let rhs = -(b.get(i, j) - b.get(i, j - 1)) / g.h_y;
                    assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()) * 100.0);
                }
                for i in 1..=g.n_x {
                    let lhs = dxx.get(i, j) - dxy.get(i, j);
                    let rhs = (b.get(i, j) - b.get(i - 1, j)) / g.h_x;
                    assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()) * 100.0);
                }
            }
        }
    }

    #[test]
    fn pure_gauge_potential_keeps_zero_field_after_explicit_step() {
        let g = grid();
        let p = Params::uniform(&g, 4.0, 1.0, 0.0, 0.01);
        let base = State::uniform(&g, &p, C64::new(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let chi = Field2::from_fn(0, g.n_x + 1, g.n_rows(), |_, _| rng.random_range(-1.0..1.0));
        let mut s = gauge_transform(&base, &chi, &p, &g);
        let (fx, fy) = rhs_a(&s, &p, &g);
        for j in 1..=g.n_y {
            for i in 0..=g.n_x {
                s.ax[(i, j)] += p.dt * fx.get(i, j);
            }
            for i in 0..=g.n_x + 1 {
                s.ay[(i, j)] += p.dt * fy.get(i, j);
            }
        }
        s.sync(&p, &g);
        let b = magnetic_field(&s, &g);
        assert!(b.as_slice().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn rhs_psi_is_gauge_covariant() {
        let g = grid();
        let p = Params::uniform(&g, 4.0, 1.0, 0.2, 0.01);
        let s = random_state(&g, &p, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let chi = Field2::from_fn(0, g.n_x + 1, g.n_rows(), |_, _| rng.random_range(-3.0..3.0));
        let t = gauge_transform(&s, &chi, &p, &g);
        let (r0, r1) = (rhs_psi(&s, &p, &g), rhs_psi(&t, &p, &g));
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                let want = r0.get(i, j) * C64::from_polar(1.0, chi.get(i, j));
                assert!((r1.get(i, j) - want).norm() < 1e-12 * (1.0 + want.norm()));
            }
        }
        let _ = vertex_layout::<f64>(&g, 0.0);
    }
}
