//! Tridiagonal and cyclic tridiagonal solvers over `f64` and complex numbers.
//!
//! Both solvers factor first and then substitute, so a cached factorization
//! and a fresh solve run exactly the same arithmetic. The cyclic solver uses
//! the Sherman-Morrison rank-one correction on top of the plain Thomas
//! kernel.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, MulAssign, Neg, Sub};

use thiserror::Error;

use crate::fields::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("zero pivot at row {0}")]
    Breakdown(usize),
    #[error("cyclic system is singular (rank-one correction denominator {0:e})")]
    Singular(f64),
    #[error("length mismatch: system has {expected} rows, got {got}")]
    Length { expected: usize, got: usize },
    #[error("cyclic systems need at least 3 rows, got {0}")]
    TooSmall(usize),
}

/// Field element the solvers work over.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + MulAssign
    + Send
    + Sync
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Row `k` reads `sub[k] x[k-1] + diag[k] x[k] + sup[k] x[k+1] = b[k]`.
///
/// When `periodic` is set, `sub[0]` couples row 0 to `x[n-1]` and
/// `sup[n-1]` couples row `n-1` to `x[0]`; otherwise both are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagSystem<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
    pub periodic: bool,
}

impl<T: Scalar> TridiagSystem<T> {
    pub fn new(sub: Vec<T>, diag: Vec<T>, sup: Vec<T>, periodic: bool) -> Self {
        assert!(sub.len() == diag.len() && sup.len() == diag.len(), "ragged tridiagonal system");
        Self { sub, diag, sup, periodic }
    }

    /// Constant-coefficient system of size `n`.
    pub fn constant(n: usize, sub: T, diag: T, sup: T, periodic: bool) -> Self {
        Self::new(vec![sub; n], vec![diag; n], vec![sup; n], periodic)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x`, including the corner couplings of a periodic system.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|k| {
                let mut v = self.diag[k] * x[k];
                if k > 0 {
                    v = v + self.sub[k] * x[k - 1];
                } else if self.periodic && n > 1 {
                    v = v + self.sub[0] * x[n - 1];
                }
                if k + 1 < n {
                    v = v + self.sup[k] * x[k + 1];
                } else if self.periodic && n > 1 {
                    v = v + self.sup[n - 1] * x[0];
                }
                v
            })
            .collect()
    }

    pub fn factor(&self) -> Result<Factored<T>, LinalgError> {
        if self.periodic {
            CyclicFactors::new(self).map(Factored::Cyclic)
        } else {
            TridiagFactors::new(&self.sub, &self.diag, &self.sup).map(Factored::Plain)
        }
    }
}

fn pivot_ok<T: Scalar>(p: T, scale: f64) -> bool {
    let m = p.modulus();
    m.is_finite() && m > f64::EPSILON * scale
}

/// LU factors of a non-periodic tridiagonal matrix (Thomas algorithm).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TridiagFactors<T> {
    sub: Vec<T>,
    inv_pivot: Vec<T>,
    /// `sup[k] / pivot[k]`.
    upper: Vec<T>,
}

impl<T: Scalar> TridiagFactors<T> {
    pub fn new(sub: &[T], diag: &[T], sup: &[T]) -> Result<Self, LinalgError> {
        let mut f = Self { sub: Vec::new(), inv_pivot: Vec::new(), upper: Vec::new() };
        f.refactor(sub, diag, sup)?;
        Ok(f)
    }

    /// Factors a new matrix, reusing the allocations.
    pub fn refactor(&mut self, sub: &[T], diag: &[T], sup: &[T]) -> Result<(), LinalgError> {
        let n = diag.len();
        self.sub.clear();
        self.sub.extend_from_slice(sub);
        self.inv_pivot.clear();
        self.upper.clear();
        let mut prev_upper = T::zero();
        for k in 0..n {
            let p = if k == 0 { diag[0] } else { diag[k] - sub[k] * prev_upper };
            let scale = diag[k].modulus() + if k > 0 { sub[k].modulus() } else { 0.0 };
            if !pivot_ok(p, scale.max(f64::MIN_POSITIVE)) {
                return Err(LinalgError::Breakdown(k));
            }
            let ip = T::one() / p;
            self.inv_pivot.push(ip);
            prev_upper = if k + 1 < n { sup[k] * ip } else { T::zero() };
            self.upper.push(prev_upper);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `b` with the solution.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.len();
        debug_assert_eq!(b.len(), n);
        if n == 0 {
            return;
        }
        b[0] *= self.inv_pivot[0];
        for k in 1..n {
            b[k] = (b[k] - self.sub[k] * b[k - 1]) * self.inv_pivot[k];
        }
        for k in (0..n - 1).rev() {
            b[k] = b[k] - self.upper[k] * b[k + 1];
        }
    }
}

/// Factors of a cyclic tridiagonal matrix `A = B + u v^T` with
/// `u = (gamma, 0, .., 0, c_last)`, `v = (1, 0, .., 0, a_first / gamma)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CyclicFactors<T> {
    base: TridiagFactors<T>,
    z: Vec<T>,
    v_last: T,
    /// `1 / (1 + v . z)`.
    inv_denominator: T,
}

impl<T: Scalar> CyclicFactors<T> {
    pub fn new(sys: &TridiagSystem<T>) -> Result<Self, LinalgError> {
        let mut f = Self {
            base: TridiagFactors { sub: Vec::new(), inv_pivot: Vec::new(), upper: Vec::new() },
            z: Vec::new(),
            v_last: T::zero(),
            inv_denominator: T::zero(),
        };
        let mut scratch = Vec::new();
        f.refactor(&sys.sub, &sys.diag, &sys.sup, &mut scratch)?;
        Ok(f)
    }

    /// Factors a new cyclic matrix given as `(sub, diag, sup)` with the
    /// corner convention of [`TridiagSystem`]. `scratch` is reused storage
    /// for the modified diagonal.
    pub fn refactor(&mut self, sub: &[T], diag: &[T], sup: &[T], scratch: &mut Vec<T>) -> Result<(), LinalgError> {
        let n = diag.len();
        if n < 3 {
            return Err(LinalgError::TooSmall(n));
        }
        let a0 = sub[0];
        let cn = sup[n - 1];
        let gamma = if diag[0].modulus() > 0.0 { -diag[0] } else { -T::one() };
        scratch.clear();
        scratch.extend_from_slice(diag);
        scratch[0] = scratch[0] - gamma;
        scratch[n - 1] = scratch[n - 1] - cn * a0 / gamma;
        self.base.refactor(sub, scratch, sup)?;
        self.z.clear();
        self.z.resize(n, T::zero());
        self.z[0] = gamma;
        self.z[n - 1] = cn;
        self.base.solve_in_place(&mut self.z);
        self.v_last = a0 / gamma;
        let den = T::one() + self.z[0] + self.v_last * self.z[n - 1];
        let scale = 1.0 + self.z[0].modulus() + (self.v_last * self.z[n - 1]).modulus();
        if !(den.modulus() > 1e-13 * scale) || !den.modulus().is_finite() {
            return Err(LinalgError::Singular(den.modulus()));
        }
        self.inv_denominator = T::one() / den;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.len();
        self.base.solve_in_place(b);
        let f = (b[0] + self.v_last * b[n - 1]) * self.inv_denominator;
        for (x, &z) in b.iter_mut().zip(&self.z) {
            *x = *x - z * f;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Factored<T> {
    Plain(TridiagFactors<T>),
    Cyclic(CyclicFactors<T>),
}

impl<T: Scalar> Factored<T> {
    pub fn len(&self) -> usize {
        match self {
            Factored::Plain(f) => f.len(),
            Factored::Cyclic(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        match self {
            Factored::Plain(f) => f.solve_in_place(b),
            Factored::Cyclic(f) => f.solve_in_place(b),
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>, LinalgError> {
        if rhs.len() != self.len() {
            return Err(LinalgError::Length { expected: self.len(), got: rhs.len() });
        }
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Solves a non-periodic tridiagonal system.
pub fn solve_tridiag<T: Scalar>(sys: &TridiagSystem<T>, rhs: &[T]) -> Result<Vec<T>, LinalgError> {
    debug_assert!(!sys.periodic);
    if rhs.len() != sys.len() {
        return Err(LinalgError::Length { expected: sys.len(), got: rhs.len() });
    }
    let f = TridiagFactors::new(&sys.sub, &sys.diag, &sys.sup)?;
    let mut x = rhs.to_vec();
    f.solve_in_place(&mut x);
    Ok(x)
}

/// Solves a cyclic tridiagonal system.
pub fn solve_cyclic_tridiag<T: Scalar>(sys: &TridiagSystem<T>, rhs: &[T]) -> Result<Vec<T>, LinalgError> {
    if rhs.len() != sys.len() {
        return Err(LinalgError::Length { expected: sys.len(), got: rhs.len() });
    }
    let f = CyclicFactors::new(sys)?;
    let mut x = rhs.to_vec();
    f.solve_in_place(&mut x);
    Ok(x)
}

/// Factored `(I - dt/sigma D_yy)` and `(I - dt/sigma D_xx)` for the
/// vector-potential solves. The `D_xx` system uses the closed boundary rows
/// described in [`crate::operators`].
#[derive(Debug, Clone)]
pub struct PotentialFactors {
    pub dt: f64,
    pub sigma: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub h_x: f64,
    pub h_y: f64,
    /// Periodic, size `n_y`, one per `A_x` column.
    pub yy: CyclicFactors<f64>,
    /// Bounded, size `n_x`, one per `A_y` row.
    pub xx: TridiagFactors<f64>,
}

impl PotentialFactors {
    pub fn is_stale(&self, dt: f64, sigma: f64, g: &crate::grid::GridSpec) -> bool {
        self.dt != dt
            || self.sigma != sigma
            || self.n_x != g.n_x
            || self.n_y != g.n_y
            || self.h_x != g.h_x
            || self.h_y != g.h_y
    }
}

/// Builds the constant vector-potential factorizations for step `dt`.
pub fn prefactor_constant_systems(dt: f64, sigma: f64, g: &crate::grid::GridSpec) -> Result<PotentialFactors, LinalgError> {
    let ry = dt / (sigma * g.h_y * g.h_y);
    let yy = CyclicFactors::new(&TridiagSystem::constant(g.n_y, -ry, 1.0 + 2.0 * ry, -ry, true))?;
    let rx = dt / (sigma * g.h_x * g.h_x);
    let mut xsys = TridiagSystem::constant(g.n_x, -rx, 1.0 + 2.0 * rx, -rx, false);
    xsys.diag[0] = 1.0 + rx;
    xsys.diag[g.n_x - 1] = 1.0 + rx;
    let xx = TridiagFactors::new(&xsys.sub, &xsys.diag, &xsys.sup)?;
    Ok(PotentialFactors {
        dt,
        sigma,
        n_x: g.n_x,
        n_y: g.n_y,
        h_x: g.h_x,
        h_y: g.h_y,
        yy,
        xx,
    })
}

/// Lazily (re)built [`PotentialFactors`].
#[derive(Debug, Clone, Default)]
pub struct FactorCache {
    factors: Option<PotentialFactors>,
    builds: usize,
}

impl FactorCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns factors valid for `(dt, sigma, g)`, refactoring if stale.
    pub fn get(&mut self, dt: f64, sigma: f64, g: &crate::grid::GridSpec) -> Result<&PotentialFactors, LinalgError> {
        let stale = self.factors.as_ref().is_none_or(|f| f.is_stale(dt, sigma, g));
        if stale {
            self.factors = Some(prefactor_constant_systems(dt, sigma, g)?);
            self.builds += 1;
        }
        Ok(self.factors.as_ref().expect("factors present"))
    }

    /// Number of factorizations performed so far.
    pub fn builds(&self) -> usize {
        self.builds
    }

    pub fn is_stale(&self, dt: f64, sigma: f64, g: &crate::grid::GridSpec) -> bool {
        self.factors.as_ref().is_none_or(|f| f.is_stale(dt, sigma, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn residual<T: Scalar>(sys: &TridiagSystem<T>, x: &[T], b: &[T]) -> f64 {
        let ax = sys.apply(x);
        let r = ax.iter().zip(b).map(|(&p, &q)| (p - q).modulus()).fold(0.0, f64::max);
        let bn = b.iter().map(|v| v.modulus()).fold(0.0, f64::max);
        r / bn.max(f64::MIN_POSITIVE)
    }

    #[test]
    fn identity_system() {
        let sys = TridiagSystem::constant(5, 0.0, 1.0, 0.0, false);
        let b = vec![1.0, -2.0, 3.5, 0.0, 7.0];
        assert_eq!(solve_tridiag(&sys, &b).unwrap(), b);
        let cyc = TridiagSystem::constant(5, 0.0, 1.0, 0.0, true);
        let x = solve_cyclic_tridiag(&cyc, &b).unwrap();
        for (p, q) in x.iter().zip(&b) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn second_difference_with_unit_ends() {
        let sys = TridiagSystem::constant(4, -1.0, 2.0, -1.0, false);
        let x = solve_tridiag(&sys, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn periodic_laplacian_is_singular() {
        let sys = TridiagSystem::constant(8, -1.0, 2.0, -1.0, true);
        let err = solve_cyclic_tridiag(&sys, &[1.0; 8]).unwrap_err();
        assert!(matches!(err, LinalgError::Singular(_) | LinalgError::Breakdown(_)), "{err:?}");
    }

    #[test]
    fn zero_pivot_reported() {
        let sys = TridiagSystem::new(vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 0.0], false);
        assert_eq!(solve_tridiag(&sys, &[1.0, 1.0, 1.0]), Err(LinalgError::Breakdown(1)));
    }

    #[test]
    fn complex_cyclic_residual() {
        let n = 7;
        let sub: Vec<C64> = (0..n).map(|k| C64::new(-0.3, 0.1 * k as f64)).collect();
        let sup: Vec<C64> = (0..n).map(|k| C64::new(-0.2 * k as f64, 0.4)).collect();
        let diag = vec![C64::new(3.0, -0.5); n];
        let sys = TridiagSystem::new(sub, diag, sup, true);
        let b: Vec<C64> = (0..n).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        let x = solve_cyclic_tridiag(&sys, &b).unwrap();
        assert!(residual(&sys, &x, &b) < 1e-14);
    }

    #[test]
    fn shifted_systems_never_break_down() {
        for dt in [1e-6, 1e-3, 0.19, 10.0, 1e6] {
            for sigma in [0.1, 1.0, 7.0] {
                let g = GridSpec::new(9, 5, 2, 7, 0.5, 0.25).unwrap();
                assert!(prefactor_constant_systems(dt, sigma, &g).is_ok());
            }
        }
    }

    #[test]
    fn cache_tracks_parameters() {
        let g = GridSpec::new(9, 6, 2, 7, 0.5, 0.5).unwrap();
        let mut cache = FactorCache::new();
        assert!(cache.is_stale(0.1, 1.0, &g));
        let b: Vec<f64> = (0..g.n_y).map(|k| (k as f64).sin()).collect();
        let x1 = {
            let f = cache.get(0.1, 1.0, &g).unwrap();
            let mut x = b.clone();
            f.yy.solve_in_place(&mut x);
            x
        };
        let x2 = {
            let f = cache.get(0.1, 1.0, &g).unwrap();
            let mut x = b.clone();
            f.yy.solve_in_place(&mut x);
            x
        };
        assert_eq!(cache.builds(), 1);
        let fresh = prefactor_constant_systems(0.1, 1.0, &g).unwrap();
        let mut x3 = b.clone();
        fresh.yy.solve_in_place(&mut x3);
        assert_eq!(x1, x2);
        assert_eq!(x1, x3);
        assert!(cache.is_stale(0.2, 1.0, &g));
        cache.get(0.2, 1.0, &g).unwrap();
        assert_eq!(cache.builds(), 2);
    }
}
