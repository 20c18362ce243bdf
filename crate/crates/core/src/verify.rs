//! On-demand oracle suite: each check compares a production kernel with an
//! independent reference and reports the worst discrepancy found.

use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::array::Field2;
use crate::diagnostics::{energy, reduced_ode_oracle};
use crate::fields::{
    ax_layout, ay_layout, gauge_transform, link_variables, magnetic_field, psi_layout, supercurrent, vertex_layout,
    LinkField, Params, State, C64,
};
use crate::grid::GridSpec;
use crate::integrators::{adi_solve_psi, semigroup_s};
use crate::linalg::{solve_cyclic_tridiag, solve_tridiag, Scalar, TridiagSystem};
use crate::operators::{apply_dxx, apply_dxy, apply_dyx, apply_dyy, apply_lxx, apply_lyy};
use crate::oracles::{dense_operator, dense_solve, unfactored_psi_solve, vertex_index, DenseMatrix, DenseOp};

/// Builds link variables from `(A_x, A_y, kappa)`. Replaceable so that a
/// deliberately wrong formula can be shown to fail the gauge check.
pub type LinkFn = fn(&Field2<f64>, &Field2<f64>, f64, &GridSpec) -> LinkField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Dense against matrix-free operators, absolute.
    pub operator: f64,
    /// Tridiagonal solves, relative residual and relative difference.
    pub residual: f64,
    /// Semigroup against the closed-form flow, absolute.
    pub semigroup: f64,
    /// Allowed relative deviation of the ADI error ratio from 4.
    pub adi_ratio: f64,
    /// Gauge invariance of observables, relative.
    pub gauge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { operator: 1e-13, residual: 1e-11, semigroup: 1e-12, adi_ratio: 0.15, gauge: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub tol: Tolerances,
    pub link_fn: LinkFn,
    pub seed: u64,
    /// Random systems per solver kind.
    pub systems: usize,
    /// Random state/gauge pairs.
    pub gauge_samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), link_fn: link_variables, seed: 2024, systems: 250, gauge_samples: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst value of the checked quantity.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn at_most(name: &'static str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self { name, passed: measured <= tolerance, measured, tolerance, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<20} measured {:.3e} tolerance {:.3e}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Runs every check.
pub fn run_checks(opts: &VerifyOptions) -> Report {
    Report {
        checks: vec![
            check_operators(opts.tol.operator, opts.seed),
            check_tridiagonal(opts.systems, opts.tol.residual, opts.seed),
            check_semigroup(opts.tol.semigroup),
            check_adi_order(opts.tol.adi_ratio, opts.seed),
            check_gauge_invariance(opts.gauge_samples, opts.tol.gauge, opts.link_fn, opts.seed),
        ],
    }
}

fn random_potential(g: &GridSpec, rng: &mut ChaCha8Rng, amp: f64) -> (Field2<f64>, Field2<f64>) {
    let mut ax = ax_layout(g, 0.0);
    let mut ay = ay_layout(g, 0.0);
    for v in ax.as_mut_slice().iter_mut().chain(ay.as_mut_slice()) {
        *v = rng.random_range(-amp..amp);
    }
    ax.refresh_periodic_rows();
    ay.refresh_periodic_rows();
    (ax, ay)
}

/// Every column of each dense operator against the matrix-free operator
/// applied to the matching basis vector.
pub fn check_operators(tol: f64, seed: u64) -> CheckResult {
    let g = GridSpec::new(7, 5, 2, 5, 0.5, 0.4).expect("fixed grid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ax, ay) = random_potential(&g, &mut rng, 3.0);
    let links = link_variables(&ax, &ay, 1.3, &g);
    let mut worst = 0.0f64;
    let dense = |op| dense_operator(op, &g, Some(&links)).expect("test-scale operator");

    let (lxx, lyy) = (dense(DenseOp::Lxx), dense(DenseOp::Lyy));
    for j in 1..=g.n_y {
        for i in g.n_sx..=g.n_ex {
            let mut s = State::zeros(&g);
            s.psi.set(i, j, C64::new(1.0, 0.0));
            s.links = links.clone();
            s.sync_psi(&g);
            let fx = apply_lxx(&s.psi, &links.ux, &g);
            let fy = apply_lyy(&s.psi, &links.uy, &g);
            let col = vertex_index(i, j, &g);
            for jj in 1..=g.n_y {
                for ii in g.n_sx..=g.n_ex {
                    let row = vertex_index(ii, jj, &g);
                    worst = worst.max((fx.get(ii, jj) - lxx[(row, col)]).norm());
                    worst = worst.max((fy.get(ii, jj) - lyy[(row, col)]).norm());
                }
            }
        }
    }

    let (dyx, dxy, dyy, dxx) = (dense(DenseOp::Dyx), dense(DenseOp::Dxy), dense(DenseOp::Dyy), dense(DenseOp::Dxx));
    for j in 1..=g.n_y {
        for i in 1..=g.n_x {
            let mut e = ay_layout(&g, 0.0);
            e.set(i, j, 1.0);
            e.refresh_periodic_rows();
            let out = apply_dyx(&e, &g);
            let col = (j - 1) * g.n_x + (i - 1);
            for jj in 1..=g.n_y {
                for ii in 1..g.n_x {
                    worst = worst.max((out.get(ii, jj) - dyx[((jj - 1) * (g.n_x - 1) + ii - 1, col)].re).abs());
                }
            }
        }
        for i in 0..=g.n_x {
            let mut e = ax_layout(&g, 0.0);
            e.set(i, j, 1.0);
            e.refresh_periodic_rows();
            let out = apply_dxy(&e, &g);
            let col = (j - 1) * (g.n_x + 1) + i;
            for jj in 1..=g.n_y {
                for ii in 1..=g.n_x {
                    worst = worst.max((out.get(ii, jj) - dxy[((jj - 1) * g.n_x + ii - 1, col)].re).abs());
                }
            }
        }
    }
    for k in 0..g.n_y {
        let mut e = ax_layout(&g, 0.0);
        e.set(2, k + 1, 1.0);
        e.refresh_periodic_rows();
        let out = apply_dyy(&e, &g);
        for r in 0..g.n_y {
            worst = worst.max((out.get(2, r + 1) - dyy[(r, k)].re).abs());
        }
    }
    for k in 0..g.n_x {
        let mut e = ay_layout(&g, 0.0);
        e.set(k + 1, 3, 1.0);
        // zero applied field and A_x: the ghosts mirror the edge columns
        e.set(0, 3, e.get(1, 3));
        e.set(g.n_x + 1, 3, e.get(g.n_x, 3));
        let out = apply_dxx(&e, &g);
        for r in 0..g.n_x {
            worst = worst.max((out.get(r + 1, 3) - dxx[(r, k)].re).abs());
        }
    }
    CheckResult::at_most("operator_dense", worst, tol, "basis sweeps of L_xx L_yy D_yx D_xy D_yy D_xx".into())
}

fn to_dense<T: Scalar>(sys: &TridiagSystem<T>) -> DenseMatrix<T> {
    let n = sys.len();
    let mut m = DenseMatrix::zeros(n, n).expect("small system");
    for k in 0..n {
        m[(k, k)] = sys.diag[k];
        if k > 0 {
            m[(k, k - 1)] = sys.sub[k];
        } else if sys.periodic {
            m[(0, n - 1)] = sys.sub[0];
        }
        if k + 1 < n {
            m[(k, k + 1)] = sys.sup[k];
        } else if sys.periodic {
            m[(n - 1, 0)] = sys.sup[n - 1];
        }
    }
    m
}

fn inf_norm<T: Scalar>(v: &[T]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.modulus()))
}

/// Worst of the relative residual and the relative distance to the dense
/// solution.
fn solve_error<T: Scalar>(sys: &TridiagSystem<T>, rhs: &[T]) -> f64 {
    let x = if sys.periodic { solve_cyclic_tridiag(sys, rhs) } else { solve_tridiag(sys, rhs) };
    let Ok(x) = x else { return f64::INFINITY };
    let Ok(xd) = dense_solve(&to_dense(sys), rhs) else { return f64::INFINITY };
    let r: Vec<T> = to_dense(sys).mul_vec(&x).iter().zip(rhs).map(|(&a, &b)| a - b).collect();
    let d: Vec<T> = x.iter().zip(&xd).map(|(&a, &b)| a - b).collect();
    (inf_norm(&r) / inf_norm(rhs)).max(inf_norm(&d) / inf_norm(&xd))
}

fn random_system<T: Scalar>(rng: &mut ChaCha8Rng, periodic: bool, draw: impl Fn(&mut ChaCha8Rng) -> T) -> (TridiagSystem<T>, Vec<T>) {
    let n = rng.random_range(3..=64usize);
    let v = |rng: &mut ChaCha8Rng| (0..n).map(|_| draw(rng)).collect::<Vec<T>>();
    let sub = v(rng);
    let sup = v(rng);
    // diagonally dominant rows keep the dense reference well conditioned
    let diag = v(rng).into_iter().map(|d| d * 0.5 + T::one() * 2.5).collect();
    let rhs = v(rng);
    (TridiagSystem::new(sub, diag, sup, periodic), rhs)
}

/// `systems` random systems in each of the four real/complex,
/// plain/cyclic combinations, `n <= 64`.
pub fn check_tridiagonal(systems: usize, tol: f64, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7d);
    let mut worst = 0.0f64;
    let real = |r: &mut ChaCha8Rng| r.random_range(-1.0..1.0);
    let complex = |r: &mut ChaCha8Rng| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    for _ in 0..systems {
        for periodic in [false, true] {
            let (sys, rhs) = random_system(&mut rng, periodic, real);
            worst = worst.max(solve_error(&sys, &rhs));
            let (sys, rhs) = random_system(&mut rng, periodic, complex);
            worst = worst.max(solve_error(&sys, &rhs));
        }
    }
    CheckResult::at_most("tridiagonal_solvers", worst, tol, format!("{} systems vs dense LU", 4 * systems))
}

/// Iterated semigroup against the closed-form logistic flow of `|psi|^2`.
pub fn check_semigroup(tol: f64) -> CheckResult {
    let mut worst = 0.0f64;
    for &amp in &[0.1, 0.5, 0.9, 1.3] {
        for &tau in &[1.0, 0.6] {
            for &dt in &[0.05, 1.0] {
                let mut z = C64::from_polar(amp, 0.7);
                for _ in 0..100 {
                    z = semigroup_s(z, tau, dt);
                }
                let (x, _) = reduced_ode_oracle(amp * amp, 0.0, tau, 0.0, 100.0 * dt);
                worst = worst.max((z.norm() - x.sqrt()).abs()).max((z.arg() - 0.7).abs());
            }
        }
    }
    CheckResult::at_most("semigroup_ode", worst, tol, "100 steps, |psi0| in {0.1 0.5 0.9 1.3}".into())
}

/// Splitting error of the factored solve against the unfactored one on a
/// 16x16 grid; it must fall by 4 per halving of `dt`.
pub fn check_adi_order(tol: f64, seed: u64) -> CheckResult {
    let g = GridSpec::new(16, 16, 2, 14, 4.0, 4.0).expect("fixed grid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xad1);
    let (ax, ay) = random_potential(&g, &mut rng, 2.0);
    let links = link_variables(&ax, &ay, 1.0, &g);
    let mut rhs = psi_layout(&g, C64::new(0.0, 0.0));
    for j in 1..=g.n_y {
        for i in g.n_sx..=g.n_ex {
            rhs.set(i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    let err = |dt: f64| -> f64 {
        let (Ok(a), Ok(b)) = (adi_solve_psi(&rhs, &links, dt, &g), unfactored_psi_solve(&rhs, &links, dt, &g)) else {
            return f64::NAN;
        };
        let mut m = 0.0f64;
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                m = m.max((a.get(i, j) - b.get(i, j)).norm());
            }
        }
        m
    };
    let e = [err(0.2), err(0.1), err(0.05)];
    let ratios = [e[0] / e[1], e[1] / e[2]];
    let worst = ratios.iter().map(|r| (r / 4.0 - 1.0).abs()).fold(0.0, f64::max);
    let worst = if worst.is_nan() { f64::INFINITY } else { worst };
    CheckResult::at_most(
        "adi_order",
        worst,
        tol,
        format!("errors {:.3e} {:.3e} {:.3e}, ratios {:.3} {:.3}", e[0], e[1], e[2], ratios[0], ratios[1]),
    )
}

fn max_rel(a: &Field2<f64>, b: &Field2<f64>, cols: std::ops::RangeInclusive<usize>, g: &GridSpec) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for j in 1..=g.n_y {
        for i in cols.clone() {
            diff = diff.max((a.get(i, j) - b.get(i, j)).abs());
            scale = scale.max(a.get(i, j).abs());
        }
    }
    diff / scale.max(1.0)
}

/// Observables that must not change under a gauge transformation, with
/// the links of both states rebuilt by `link_fn`.
fn observables(s: &State, p: &Params, g: &GridSpec, link_fn: LinkFn) -> (State, Field2<f64>, Field2<f64>, Field2<f64>, f64) {
    let mut s = s.clone();
    s.links = link_fn(&s.ax, &s.ay, p.kappa, g);
    s.sync_psi(g);
    let b = magnetic_field(&s, g);
    let (jx, jy) = supercurrent(&s, p, g);
    let e = energy(&s, p, g);
    (s, b, jx, jy, e)
}

/// Random states and random periodic gauge functions: `|psi|`, `B`, `J`
/// and the energy must agree to `tol` relative.
pub fn check_gauge_invariance(samples: usize, tol: f64, link_fn: LinkFn, seed: u64) -> CheckResult {
    let g = GridSpec::new(12, 8, 3, 10, 0.5, 0.5).expect("fixed grid");
    let p = Params::uniform(&g, 2.0, 1.0, 0.4, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9a);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mut s = State::zeros(&g);
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                s.psi.set(i, j, C64::from_polar(rng.random_range(0.0..1.2), rng.random_range(-3.0..3.0)));
            }
        }
        let (ax, ay) = random_potential(&g, &mut rng, 1.5);
        s.ax = ax;
        s.ay = ay;
        s.sync(&p, &g);
        let mut chi = vertex_layout(&g, 0.0);
        for v in chi.as_mut_slice() {
            *v = rng.random_range(-4.0..4.0);
        }
        chi.refresh_periodic_rows();
        let t = gauge_transform(&s, &chi, &p, &g);

        let (s1, b1, jx1, jy1, e1) = observables(&s, &p, &g, link_fn);
        let (s2, b2, jx2, jy2, e2) = observables(&t, &p, &g, link_fn);
        let m1 = s1.psi.map(|z| z.norm());
        let m2 = s2.psi.map(|z| z.norm());
        worst = worst
            .max(max_rel(&m1, &m2, g.n_sx..=g.n_ex, &g))
            .max(max_rel(&b1, &b2, 0..=g.n_x, &g))
            .max(max_rel(&jx1, &jx2, g.n_sx - 1..=g.n_ex, &g))
            .max(max_rel(&jy1, &jy2, g.n_sx..=g.n_ex, &g))
            .max((e1 - e2).abs() / e1.abs().max(1.0));
    }
    CheckResult::at_most("gauge_invariance", worst, tol, format!("{samples} random states and gauges"))
}
