//! Energy, vortices, lattice statistics, equilibrium detection and the
//! reduced two-variable model of the local nonlinearity.

mod bonds;
mod vortices;

use serde::{Deserialize, Serialize};

pub use bonds::{bond_statistics, bond_statistics_with_cutoff, BondStats, BOND_CUTOFF};
pub use vortices::{cell_winding, detect_vortices, refine_vortex_position, Vortex, VortexSet};

use crate::fields::{magnetic_field, Params, State};
use crate::grid::GridSpec;

/// Position drift below which consecutive vortex samples count as
/// converged, in units of the coherence length.
pub const EQUILIBRIUM_DRIFT: f64 = 1e-6;

/// Discrete energy: link-covariant kinetic term on superconducting edges,
/// `-tau |psi|^2 + |psi|^4 / 2` on superconducting vertices and
/// `|B - H|^2` on all cells, each weighted by `h_x h_y`.
///
/// Its gradient reproduces the discrete evolution equations, so it is
/// non-increasing along the semi-discrete flow. Rows are summed in order.
pub fn energy(s: &State, p: &Params, g: &GridSpec) -> f64 {
    let (hx2, hy2) = (g.h_x * g.h_x, g.h_y * g.h_y);
    let b = magnetic_field(s, g);
    let h = p.h_mean();
    let mut total = 0.0;
    for j in 1..=g.n_y {
        let mut row = 0.0;
        for i in g.n_sx..=g.n_ex {
            let psi = s.psi.get(i, j);
            if i < g.n_ex {
                row += (s.links.ux.get(i, j) * s.psi.get(i + 1, j) - psi).norm_sqr() / hx2;
            }
            row += (s.links.uy.get(i, j) * s.psi.get(i, j + 1) - psi).norm_sqr() / hy2;
            let x = psi.norm_sqr();
            row += -p.tau.get(i, j) * x + 0.5 * x * x;
        }
        for i in 0..=g.n_x {
            row += (b.get(i, j) - h).powi(2);
        }
        total += row;
    }
    total * g.h_x * g.h_y
}

/// Largest displacement under greedy nearest-neighbour matching with the
/// periodic `y` metric, or `None` if the counts differ.
pub fn max_position_drift(a: &VortexSet, b: &VortexSet, g: &GridSpec) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (k, u) in a.vortices.iter().enumerate() {
        for (l, w) in b.vortices.iter().enumerate() {
            let dy = g.periodic_dy(w.y - u.y);
            pairs.push(((w.x - u.x).hypot(dy), k, l));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst = 0.0f64;
    for (d, k, l) in pairs {
        if !used_a[k] && !used_b[l] {
            used_a[k] = true;
            used_b[l] = true;
            worst = worst.max(d);
        }
    }
    Some(worst)
}

/// True when every consecutive pair in `history` has the same vortex count
/// and all matched vortices moved less than `tol`.
pub fn equilibrium_check(history: &[VortexSet], tol: f64, g: &GridSpec) -> bool {
    history.len() >= 2
        && history
            .windows(2)
            .all(|w| max_position_drift(&w[0], &w[1], g).is_some_and(|d| d < tol))
}

/// Reduced model `x' = 2x(tau - x - y)`, `y' = -2 eps x y` at time `t`.
///
/// With `y0 = 0` this is the logistic flow of `|psi|^2` and the closed form
/// is returned; otherwise the pair is integrated by RK4 with step at most
/// `1e-4`.
pub fn reduced_ode_oracle(x0: f64, y0: f64, tau: f64, eps: f64, t: f64) -> (f64, f64) {
    if y0 == 0.0 {
        if x0 == 0.0 {
            return (0.0, 0.0);
        }
        return (tau * x0 / (x0 + (tau - x0) * (-2.0 * tau * t).exp()), 0.0);
    }
    reduced_ode_rk4(x0, y0, tau, eps, t, 1e-4)
}

/// RK4 integration of the reduced model with step at most `max_step`.
pub fn reduced_ode_rk4(x0: f64, y0: f64, tau: f64, eps: f64, t: f64, max_step: f64) -> (f64, f64) {
    let f = |x: f64, y: f64| (2.0 * x * (tau - x - y), -2.0 * eps * x * y);
    let n = (t / max_step).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let (mut x, mut y) = (x0, y0);
    for _ in 0..n {
        let k1 = f(x, y);
        let k2 = f(x + 0.5 * h * k1.0, y + 0.5 * h * k1.1);
        let k3 = f(x + 0.5 * h * k2.0, y + 0.5 * h * k2.1);
        let k4 = f(x + h * k3.0, y + h * k3.1);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (x, y)
}

/// One diagnostics sample. Bond statistics are absent with fewer than three
/// vortices and the drift is absent on the first sample or after a count
/// change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: u64,
    pub energy: f64,
    pub vortex_count: usize,
    pub mean_bond_length: Option<f64>,
    pub mean_bond_angle: Option<f64>,
    pub max_position_drift: Option<f64>,
}

impl DiagnosticsRecord {
    /// Samples `s`, comparing its vortices with `previous` when given.
    /// Returns the record and the vortex set for the next comparison.
    pub fn sample(s: &State, p: &Params, g: &GridSpec, previous: Option<&VortexSet>) -> (Self, VortexSet) {
        let v = detect_vortices(s, &s.links, g);
        let bonds = bond_statistics(&v, g);
        let rec = Self {
            t: s.t,
            step: s.step,
            energy: energy(s, p, g),
            vortex_count: v.len(),
            mean_bond_length: bonds.map(|b| b.mean_length),
            mean_bond_angle: bonds.map(|b| b.mean_angle),
            max_position_drift: previous.and_then(|prev| max_position_drift(prev, &v, g)),
        };
        (rec, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{gauge_transform, vertex_layout, C64};
    use crate::integrators::semigroup_s;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec {
        GridSpec::new(16, 12, 3, 13, 0.5, 0.5).unwrap()
    }

    #[test]
    fn normal_state_has_zero_energy() {
        let g = grid();
        let p = Params::uniform(&g, 4.0, 1.0, 0.7, 0.01);
        let mut s = State::zeros(&g);
        // uniform field B = H everywhere
        for j in 0..g.n_rows() {
            for i in 0..=g.n_x + 1 {
                s.ay.set(i, j, p.h_left * g.x(i));
            }
        }
        s.sync(&p, &g);
        assert!(energy(&s, &p, &g).abs() < 1e-12);
    }

    #[test]
    fn pure_condensate_energy() {
        let g = grid();
        let p = Params::uniform(&g, 4.0, 1.0, 0.0, 0.01);
        let s = State::uniform(&g, &p, C64::new(1.0, 0.0));
        let want = -0.5 * (g.n_core() * g.n_y) as f64 * g.h_x * g.h_y;
        assert!((energy(&s, &p, &g) - want).abs() < 1e-12);
    }

    #[test]
    fn energy_is_gauge_invariant() {
        let g = grid();
        let p = Params::uniform(&g, 4.0, 1.0, 0.5, 0.01);
        let s = State::meissner_seeded(&g, &p, 3, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut chi = vertex_layout(&g, 0.0);
        for v in chi.as_mut_slice() {
            *v = rng.random_range(-2.0..2.0);
        }
        let t = gauge_transform(&s, &chi, &p, &g);
        let (a, b) = (energy(&s, &p, &g), energy(&t, &p, &g));
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} {b}");
    }

    fn set(points: &[(f64, f64)]) -> VortexSet {
        VortexSet { vortices: points.iter().map(|&(x, y)| Vortex { x, y, winding: 1, refined: true }).collect() }
    }

    #[test]
    fn equilibrium_detection() {
        let g = grid();
        let a = set(&[(2.0, 1.0), (4.0, 3.0), (5.5, 5.0)]);
        assert!(equilibrium_check(&[a.clone(), a.clone(), a.clone()], EQUILIBRIUM_DRIFT, &g));
        let mut b = a.clone();
        b.vortices[1].x += 2e-6;
        assert!(!equilibrium_check(&[a.clone(), b], EQUILIBRIUM_DRIFT, &g));
        let c = set(&[(2.0, 1.0), (4.0, 3.0)]);
        assert!(!equilibrium_check(&[c, a.clone()], EQUILIBRIUM_DRIFT, &g));
        assert!(!equilibrium_check(&[a], EQUILIBRIUM_DRIFT, &g));
    }

    #[test]
    fn drift_uses_periodic_metric_and_ignores_order() {
        let g = grid();
        let ly = g.period_y();
        let a = set(&[(2.0, g.y(1) + 1e-7), (4.0, 3.0)]);
        let b = set(&[(4.0, 3.0), (2.0, g.y(1) + ly - 1e-7)]);
        let d = max_position_drift(&a, &b, &g).unwrap();
        assert!((d - 2e-7).abs() < 1e-12, "{d}");
    }

    #[test]
    fn reduced_model_fixed_points_and_closed_form() {
        assert_eq!(reduced_ode_oracle(0.0, 0.0, 1.0, 0.0, 3.0), (0.0, 0.0));
        assert!((reduced_ode_oracle(0.7, 0.0, 0.7, 0.0, 5.0).0 - 0.7).abs() < 1e-15);
        let (x, _) = reduced_ode_oracle(0.25, 0.0, 1.0, 0.0, 0.1);
        assert!((x - 0.28932).abs() < 5e-5);
        let (xr, yr) = reduced_ode_rk4(0.25, 0.0, 1.0, 0.0, 0.1, 1e-4);
        assert!((xr - x).abs() < 1e-10 && yr == 0.0);
    }

    #[test]
    fn closed_form_rk4_and_semigroup_agree() {
        for x0 in [0.01, 0.25, 0.9, 1.6] {
            for tau in [0.3, 1.0, 2.0] {
                for dt in [0.01, 0.1, 0.5] {
                    let closed = reduced_ode_oracle(x0, 0.0, tau, 0.0, dt).0;
                    let rk = reduced_ode_rk4(x0, 0.0, tau, 0.0, dt, 1e-4).0;
                    let s = semigroup_s(C64::new(x0.sqrt(), 0.0), tau, dt).norm_sqr();
                    assert!((closed - rk).abs() < 1e-10, "{x0} {tau} {dt}");
                    assert!((closed - s).abs() < 1e-10, "{x0} {tau} {dt}");
                }
            }
        }
    }

    #[test]
    fn coupled_model_conserves_its_invariant() {
        // x' = 2x(tau - x - y), y' = -2 eps x y keeps y >= 0 and decreasing
        let (x, y) = reduced_ode_oracle(0.3, 0.4, 1.0, 0.5, 2.0);
        assert!(y > 0.0 && y < 0.4);
        assert!(x > 0.3 && x < 1.0);
        let (x2, y2) = reduced_ode_rk4(0.3, 0.4, 1.0, 0.5, 2.0, 5e-5);
        assert!((x - x2).abs() < 1e-10 && (y - y2).abs() < 1e-10);
    }

    #[test]
    fn record_reports_drift_only_with_a_previous_sample() {
        let g = grid();
        let p = Params::uniform(&g, 4.0, 1.0, 0.0, 0.01);
        let s = State::uniform(&g, &p, C64::new(1.0, 0.0));
        let (r0, v0) = DiagnosticsRecord::sample(&s, &p, &g, None);
        assert_eq!(r0.vortex_count, 0);
        assert!(r0.max_position_drift.is_none() && r0.mean_bond_length.is_none());
        let (r1, _) = DiagnosticsRecord::sample(&s, &p, &g, Some(&v0));
        assert_eq!(r1.max_position_drift, Some(0.0));
    }
}
