//! Approximately factored implicit solve for the order-parameter correction:
//! `(I - dt L_xx)(I - dt L_yy) phi = F`, one complex tridiagonal system per
//! grid line.
//!
//! The x-lines carry the interface closure `phi[n_sx-1] = U phi[n_sx]`,
//! `phi[n_ex+1] = conj(U) phi[n_ex]`. Substituting the ghosts into the
//! first and last rows gives
//!
//! ```text
//! diag[first] = 1 + 2r - r conj(U_l[n_sx-1]) U_c[n_sx-1]
//! diag[last]  = 1 + 2r - r U_l[n_ex] conj(U_c[n_ex])
//! ```
//!
//! with `r = dt / h_x^2`, `U_l` the links inside `L_xx` and `U_c` the links
//! used for the closure. When both are the same this is the familiar
//! `1 + r`. The y-lines are periodic.
//!
//! Line factorizations are cached and reused while `dt` and the links are
//! unchanged, which is the common case under multi-timestepping.

use rayon::prelude::*;

use crate::array::Field2;
use crate::fields::{psi_layout, LinkField, C64};
use crate::grid::GridSpec;
use crate::linalg::{CyclicFactors, LinalgError, TridiagFactors};

#[derive(Debug, Default)]
struct LineScratch {
    sub: Vec<C64>,
    diag: Vec<C64>,
    sup: Vec<C64>,
    extra: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
struct XKey {
    dt: f64,
    ux: Field2<C64>,
    left: Vec<C64>,
    right: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
struct YKey {
    dt: f64,
    uy: Field2<C64>,
}

/// Reusable line solver for the factored order-parameter system.
#[derive(Debug, Clone)]
pub struct AdiSolver {
    x_factors: Vec<TridiagFactors<C64>>,
    y_factors: Vec<CyclicFactors<C64>>,
    x_key: Option<XKey>,
    y_key: Option<YKey>,
    columns: Vec<C64>,
    factorizations: u64,
}

impl AdiSolver {
    pub fn new(g: &GridSpec) -> Self {
        Self {
            x_factors: vec![TridiagFactors::default(); g.n_y],
            y_factors: vec![CyclicFactors::default(); g.n_core()],
            x_key: None,
            y_key: None,
            columns: vec![C64::new(0.0, 0.0); g.n_core() * g.n_y],
            factorizations: 0,
        }
    }

    /// Number of full line-factorization sweeps performed (x and y counted
    /// separately).
    pub fn factorizations(&self) -> u64 {
        self.factorizations
    }

    /// Overwrites the superconducting part of `phi` (the right-hand side)
    /// with the solution.
    pub fn solve_in_place(
        &mut self,
        phi: &mut Field2<C64>,
        l: &LinkField,
        closure: &LinkField,
        dt: f64,
        g: &GridSpec,
    ) -> Result<(), LinalgError> {
        if self.x_factors.len() != g.n_y || self.y_factors.len() != g.n_core() {
            *self = Self::new(g);
        }
        self.sweep_x(phi, l, closure, dt, g)?;
        self.sweep_y(phi, l, dt, g)
    }

    fn sweep_x(&mut self, phi: &mut Field2<C64>, l: &LinkField, closure: &LinkField, dt: f64, g: &GridSpec) -> Result<(), LinalgError> {
        let (left, right): (Vec<C64>, Vec<C64>) = (1..=g.n_y)
            .map(|j| (closure.ux.get(g.n_sx - 1, j), closure.ux.get(g.n_ex, j)))
            .unzip();
        let fresh = self
            .x_key
            .as_ref()
            .is_some_and(|k| k.dt == dt && k.ux == l.ux && k.left == left && k.right == right);
        let nc = g.n_core();
        let ni = phi.n_cols();
        let r = dt / (g.h_x * g.h_x);
        let rows = phi.as_mut_slice().par_chunks_mut(ni).skip(1).take(g.n_y);
        rows.zip(self.x_factors.par_iter_mut())
            .enumerate()
            .try_for_each_init(LineScratch::default, |sc, (jm1, (row, f))| {
                let j = jm1 + 1;
                if !fresh {
                    let ur = l.ux.row(j);
                    sc.sub.clear();
                    sc.diag.clear();
                    sc.sup.clear();
                    for i in g.n_sx..=g.n_ex {
                        sc.sub.push(-r * ur[i - 1].conj());
                        sc.diag.push(C64::new(1.0 + 2.0 * r, 0.0));
                        sc.sup.push(-r * ur[i]);
                    }
                    sc.diag[0] -= r * ur[g.n_sx - 1].conj() * left[jm1];
                    sc.diag[nc - 1] -= r * ur[g.n_ex] * right[jm1].conj();
                    f.refactor(&sc.sub, &sc.diag, &sc.sup)?;
                }
                f.solve_in_place(&mut row[1..=nc]);
                Ok(())
            })?;
        if !fresh {
            self.factorizations += 1;
            self.x_key = Some(XKey { dt, ux: l.ux.clone(), left, right });
        }
        Ok(())
    }

    fn sweep_y(&mut self, phi: &mut Field2<C64>, l: &LinkField, dt: f64, g: &GridSpec) -> Result<(), LinalgError> {
        let fresh = self.y_key.as_ref().is_some_and(|k| k.dt == dt && k.uy == l.uy);
        let ny = g.n_y;
        let nc = g.n_core();
        for j in 1..=ny {
            let row = phi.row(j);
            for k in 0..nc {
                self.columns[k * ny + j - 1] = row[k + 1];
            }
        }
        let r = dt / (g.h_y * g.h_y);
        self.columns
            .par_chunks_mut(ny)
            .zip(self.y_factors.par_iter_mut())
            .enumerate()
            .try_for_each_init(LineScratch::default, |sc, (k, (col, f))| {
                if !fresh {
                    let i = g.n_sx + k;
                    sc.sub.clear();
                    sc.diag.clear();
                    sc.sup.clear();
                    for j in 1..=ny {
                        sc.sub.push(-r * l.uy.get(i, j - 1).conj());
                        sc.diag.push(C64::new(1.0 + 2.0 * r, 0.0));
                        sc.sup.push(-r * l.uy.get(i, j));
                    }
                    f.refactor(&sc.sub, &sc.diag, &sc.sup, &mut sc.extra)?;
                }
                f.solve_in_place(col);
                Ok(())
            })?;
        for j in 1..=ny {
            let row = phi.row_mut(j);
            for k in 0..nc {
                row[k + 1] = self.columns[k * ny + j - 1];
            }
        }
        if !fresh {
            self.factorizations += 1;
            self.y_key = Some(YKey { dt, uy: l.uy.clone() });
        }
        Ok(())
    }
}

/// Solves the factored system for the right-hand side `rhs` (psi layout),
/// using `links` both inside the operators and for the interface closure.
pub fn adi_solve_psi(rhs: &Field2<C64>, links: &LinkField, dt: f64, g: &GridSpec) -> Result<Field2<C64>, LinalgError> {
    let mut phi = psi_layout(g, C64::new(0.0, 0.0));
    for j in 1..=g.n_y {
        for i in g.n_sx..=g.n_ex {
            phi.set(i, j, rhs.get(i, j));
        }
    }
    AdiSolver::new(g).solve_in_place(&mut phi, links, links, dt, g)?;
    Ok(phi)
}
