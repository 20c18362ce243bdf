//! Vortex detection from the gauge-invariant phase circulation, and
//! sub-cell positioning.

use serde::{Deserialize, Serialize};

use crate::fields::{LinkField, State, C64};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vortex {
    pub x: f64,
    pub y: f64,
    pub winding: i32,
    /// False when the position fell back to the cell centre.
    pub refined: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VortexSet {
    pub vortices: Vec<Vortex>,
}

impl VortexSet {
    pub fn len(&self) -> usize {
        self.vortices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vortices.is_empty()
    }

    /// Sum of windings.
    pub fn net_winding(&self) -> i32 {
        self.vortices.iter().map(|v| v.winding).sum()
    }

    /// Vortices with `|winding| > 1`.
    pub fn multiquanta(&self) -> usize {
        self.vortices.iter().filter(|v| v.winding.abs() > 1).count()
    }
}

/// `arg` reduced to `(-pi, pi]`.
fn phase(z: C64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Corners of cell `(i, j)` in counter-clockwise order, each transported
/// to vertex `(i, j)` along the cell's lower and right edges (the upper-left
/// corner along the left edge). The result is gauge covariant up to one
/// common phase.
fn transported_corners(psi: &crate::array::Field2<C64>, links: &LinkField, i: usize, j: usize) -> [C64; 4] {
    let ux = links.ux.get(i, j);
    let uy_right = links.uy.get(i + 1, j);
    let uy_left = links.uy.get(i, j);
    [
        psi.get(i, j),
        ux * psi.get(i + 1, j),
        ux * uy_right * psi.get(i + 1, j + 1),
        uy_left * psi.get(i, j + 1),
    ]
}

/// Winding number of cell `(i, j)`: the circulation of
/// `arg(conj(psi_a) U_ab psi_b)` around the plaquette over `2 pi`.
pub fn cell_winding(s: &State, links: &LinkField, i: usize, j: usize) -> i32 {
    let p = &s.psi;
    let a = p.get(i, j);
    let b = p.get(i + 1, j);
    let c = p.get(i + 1, j + 1);
    let d = p.get(i, j + 1);
    let sum = phase(a.conj() * links.ux.get(i, j) * b)
        + phase(b.conj() * links.uy.get(i + 1, j) * c)
        + phase(c.conj() * links.ux.get(i, j + 1).conj() * d)
        + phase(d.conj() * links.uy.get(i, j).conj() * a);
    (sum / (2.0 * std::f64::consts::PI)).round() as i32
}

/// Every superconducting cell with nonzero winding becomes one vortex.
pub fn detect_vortices(s: &State, links: &LinkField, g: &GridSpec) -> VortexSet {
    let mut vortices = Vec::new();
    for j in 1..=g.n_y {
        for i in g.n_sx..g.n_ex {
            let w = cell_winding(s, links, i, j);
            if w != 0 {
                let (x, y, refined) = refine_vortex_position(s, links, i, j, g);
                vortices.push(Vortex { x, y, winding: w, refined });
            }
        }
    }
    VortexSet { vortices }
}

/// Zero of the bilinear interpolant of the (transported) corner values of
/// cell `(i, j)`, by Newton iteration from the cell centre. Falls back to
/// the centre, with `refined = false`, when the corners are all below
/// `1e-8` in modulus, Newton fails to converge in 20 iterations, or the
/// zero leaves the cell. `y` is wrapped into one period.
pub fn refine_vortex_position(s: &State, links: &LinkField, i: usize, j: usize, g: &GridSpec) -> (f64, f64, bool) {
    let c = transported_corners(&s.psi, links, i, j);
    let wrap = |x: f64, y: f64, ok: bool| {
        let y0 = g.y(1);
        let ly = g.period_y();
        let yy = y0 + (y - y0).rem_euclid(ly);
        (x, yy, ok)
    };
    let centre = (g.x(i) + 0.5 * g.h_x, g.y(j) + 0.5 * g.h_y);
    if c.iter().all(|z| z.norm() < 1e-8) {
        return wrap(centre.0, centre.1, false);
    }
    match bilinear_zero(&c, g.h_x.max(g.h_y)) {
        Some((u, v)) => wrap(g.x(i) + u * g.h_x, g.y(j) + v * g.h_y, true),
        None => wrap(centre.0, centre.1, false),
    }
}

/// Newton's method for `f(u, v) = 0` with
/// `f = (1-u)(1-v) c0 + u(1-v) c1 + u v c2 + (1-u) v c3` on the unit square.
fn bilinear_zero(c: &[C64; 4], h: f64) -> Option<(f64, f64)> {
    let (mut u, mut v) = (0.5, 0.5);
    let tol = 1e-10 / h;
    for _ in 0..20 {
        let f = (1.0 - u) * (1.0 - v) * c[0] + u * (1.0 - v) * c[1] + u * v * c[2] + (1.0 - u) * v * c[3];
        let fu = (1.0 - v) * (c[1] - c[0]) + v * (c[2] - c[3]);
        let fv = (1.0 - u) * (c[3] - c[0]) + u * (c[2] - c[1]);
        // Solve [Re fu, Re fv; Im fu, Im fv] (du, dv) = -(Re f, Im f).
        let det = fu.re * fv.im - fv.re * fu.im;
        if det.abs() < 1e-300 || !det.is_finite() {
            return None;
        }
        let du = -(f.re * fv.im - fv.re * f.im) / det;
        let dv = -(fu.re * f.im - f.re * fu.im) / det;
        u += du;
        v += dv;
        if du.abs().max(dv.abs()) < tol {
            let inside = |w: f64| (-1e-9..=1.0 + 1e-9).contains(&w);
            return (inside(u) && inside(v)).then_some((u.clamp(0.0, 1.0), v.clamp(0.0, 1.0)));
        }
    }
    None
}
