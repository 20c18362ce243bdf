//! Brute-force references: explicit operator matrices, a dense LU solve,
//! and the unfactored implicit order-parameter system.
//!
//! These exist so tests and the `verify` command can check the matrix-free
//! and factored code paths against something obviously correct. They are
//! quadratic to cubic in the grid size and refuse to build systems with
//! more than [`MAX_DENSE_DIM`] unknowns.
//!
//! Unknown orderings:
//!
//! * vertex operators: `(j - 1) * n_core + (i - n_sx)` over the superconductor;
//! * `A_x` (evolved, columns `1..n_x`): `(j - 1) * (n_x - 1) + (i - 1)`;
//! * `A_x` (all columns `0..=n_x`): `(j - 1) * (n_x + 1) + i`;
//! * `A_y` (columns `1..=n_x`): `(j - 1) * n_x + (i - 1)`.
//!
//! `D_yy` and `D_xx` are returned as single-line matrices (`n_y` and `n_x`
//! square), the shape in which the implicit solves use them.

use thiserror::Error;

use crate::array::Field2;
use crate::fields::{psi_layout, LinkField, C64};
use crate::grid::GridSpec;
use crate::linalg::Scalar;

/// Largest dense dimension (rows or columns) the oracles will build.
pub const MAX_DENSE_DIM: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dense system of dimension {0} exceeds the test-scale guard")]
    TooLarge(usize),
    #[error("matrix is singular (column {0})")]
    Singular(usize),
    #[error("dimension mismatch")]
    Shape,
    #[error("operator {0:?} needs link variables")]
    MissingLinks(DenseOp),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, OracleError> {
        if rows > MAX_DENSE_DIM || cols > MAX_DENSE_DIM {
            return Err(OracleError::TooLarge(rows.max(cols)));
        }
        Ok(Self { rows, cols, data: vec![T::zero(); rows * cols] })
    }

    pub fn identity(n: usize) -> Result<Self, OracleError> {
        let mut m = Self::zeros(n, n)?;
        for k in 0..n {
            m[(k, k)] = T::one();
        }
        Ok(m)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        assert!(self.rows == other.rows && self.cols == other.cols);
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&x, &y)| a * x + b * y).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve<T: Scalar>(m: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, OracleError> {
    let n = m.rows;
    if m.cols != n || b.len() != n {
        return Err(OracleError::Shape);
    }
    let mut a = m.data.clone();
    let mut x = b.to_vec();
    let scale = a.iter().map(|v| v.modulus()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, a[r * n + col].modulus()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pmax > 1e-14 * scale) {
            return Err(OracleError::Singular(col));
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let inv = T::one() / a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] * inv;
            if f.modulus() == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a[col * n + c];
                a[r * n + c] = a[r * n + c] - f * v;
            }
            let xc = x[col];
            x[r] = x[r] - f * xc;
        }
    }
    for r in (0..n).rev() {
        let mut v = x[r];
        for c in r + 1..n {
            v = v - a[r * n + c] * x[c];
        }
        x[r] = v / a[r * n + r];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseOp {
    Lxx,
    Lyy,
    Dxx,
    Dyy,
    Dyx,
    Dxy,
}

/// Index of superconducting vertex `(i, j)` in the vertex ordering.
pub fn vertex_index(i: usize, j: usize, g: &GridSpec) -> usize {
    (j - 1) * g.n_core() + (i - g.n_sx)
}

/// Explicit matrix of a discrete operator. `links` is required for the
/// order-parameter operators; their interface closure uses the same links.
pub fn dense_operator(op: DenseOp, g: &GridSpec, links: Option<&LinkField>) -> Result<DenseMatrix<C64>, OracleError> {
    let r = |v: f64| C64::new(v, 0.0);
    match op {
        DenseOp::Lxx | DenseOp::Lyy => {
            let l = links.ok_or(OracleError::MissingLinks(op))?;
            if op == DenseOp::Lxx {
                dense_lxx(g, l, l)
            } else {
                dense_lyy(g, l)
            }
        }
        DenseOp::Dyy => {
            let n = g.n_y;
            let c = 1.0 / (g.h_y * g.h_y);
            let mut m = DenseMatrix::zeros(n, n)?;
            for k in 0..n {
                m[(k, k)] = r(-2.0 * c);
                m[(k, (k + 1) % n)] = m[(k, (k + 1) % n)] + r(c);
                m[(k, (k + n - 1) % n)] = m[(k, (k + n - 1) % n)] + r(c);
            }
            Ok(m)
        }
        DenseOp::Dxx => {
            let n = g.n_x;
            let c = 1.0 / (g.h_x * g.h_x);
            let mut m = DenseMatrix::zeros(n, n)?;
            for k in 0..n {
                m[(k, k)] = r(-2.0 * c);
                if k > 0 {
                    m[(k, k - 1)] = r(c);
                } else {
                    m[(k, k)] = m[(k, k)] + r(c);
                }
                if k + 1 < n {
                    m[(k, k + 1)] = r(c);
                } else {
                    m[(k, k)] = m[(k, k)] + r(c);
                }
            }
            Ok(m)
        }
        DenseOp::Dyx => {
            let rows = (g.n_x - 1) * g.n_y;
            let cols = g.n_x * g.n_y;
            let mut m = DenseMatrix::zeros(rows, cols)?;
            let c = 1.0 / (g.h_x * g.h_y);
            let ay = |i: usize, j: usize| (j - 1) * g.n_x + (i - 1);
            for j in 1..=g.n_y {
                let jm = if j == 1 { g.n_y } else { j - 1 };
                for i in 1..g.n_x {
                    let row = (j - 1) * (g.n_x - 1) + (i - 1);
                    m[(row, ay(i + 1, j))] = m[(row, ay(i + 1, j))] + r(c);
                    m[(row, ay(i, j))] = m[(row, ay(i, j))] - r(c);
                    m[(row, ay(i + 1, jm))] = m[(row, ay(i + 1, jm))] - r(c);
                    m[(row, ay(i, jm))] = m[(row, ay(i, jm))] + r(c);
                }
            }
            Ok(m)
        }
        DenseOp::Dxy => {
            let rows = g.n_x * g.n_y;
            let cols = (g.n_x + 1) * g.n_y;
            let mut m = DenseMatrix::zeros(rows, cols)?;
            let c = 1.0 / (g.h_x * g.h_y);
            let ax = |i: usize, j: usize| (j - 1) * (g.n_x + 1) + i;
            for j in 1..=g.n_y {
                let jp = if j == g.n_y { 1 } else { j + 1 };
                for i in 1..=g.n_x {
                    let row = (j - 1) * g.n_x + (i - 1);
                    m[(row, ax(i, jp))] = m[(row, ax(i, jp))] + r(c);
                    m[(row, ax(i, j))] = m[(row, ax(i, j))] - r(c);
                    m[(row, ax(i - 1, jp))] = m[(row, ax(i - 1, jp))] - r(c);
                    m[(row, ax(i - 1, j))] = m[(row, ax(i - 1, j))] + r(c);
                }
            }
            Ok(m)
        }
    }
}

/// `L_xx` over the superconducting vertices with the interface ghosts
/// eliminated. The interior couplings use `l`, the ghost closure `closure`.
pub(crate) fn dense_lxx(g: &GridSpec, l: &LinkField, closure: &LinkField) -> Result<DenseMatrix<C64>, OracleError> {
    let n = g.n_core() * g.n_y;
    let mut m = DenseMatrix::zeros(n, n)?;
    let c = 1.0 / (g.h_x * g.h_x);
    for j in 1..=g.n_y {
        for i in g.n_sx..=g.n_ex {
            let row = vertex_index(i, j, g);
            m[(row, row)] = m[(row, row)] - 2.0 * c;
            let u_right = l.ux.get(i, j);
            if i < g.n_ex {
                m[(row, vertex_index(i + 1, j, g))] = u_right * c;
            } else {
                m[(row, row)] = m[(row, row)] + u_right * closure.ux.get(i, j).conj() * c;
            }
            let u_left = l.ux.get(i - 1, j).conj();
            if i > g.n_sx {
                m[(row, vertex_index(i - 1, j, g))] = u_left * c;
            } else {
                m[(row, row)] = m[(row, row)] + u_left * closure.ux.get(i - 1, j) * c;
            }
        }
    }
    Ok(m)
}

pub(crate) fn dense_lyy(g: &GridSpec, l: &LinkField) -> Result<DenseMatrix<C64>, OracleError> {
    let n = g.n_core() * g.n_y;
    let mut m = DenseMatrix::zeros(n, n)?;
    let c = 1.0 / (g.h_y * g.h_y);
    for j in 1..=g.n_y {
        let jp = if j == g.n_y { 1 } else { j + 1 };
        let jm = if j == 1 { g.n_y } else { j - 1 };
        for i in g.n_sx..=g.n_ex {
            let row = vertex_index(i, j, g);
            m[(row, row)] = m[(row, row)] - 2.0 * c;
            let up = vertex_index(i, jp, g);
            m[(row, up)] = m[(row, up)] + l.uy.get(i, j) * c;
            let down = vertex_index(i, jm, g);
            m[(row, down)] = m[(row, down)] + l.uy.get(i, j - 1).conj() * c;
        }
    }
    Ok(m)
}

/// Solves `(I - dt (L_xx + L_yy)) phi = rhs` directly, without the
/// approximate factorization. `rhs` and the result use the `psi` layout;
/// only superconducting vertices are read or written.
pub fn unfactored_psi_solve(rhs: &Field2<C64>, links: &LinkField, dt: f64, g: &GridSpec) -> Result<Field2<C64>, OracleError> {
    unfactored_psi_solve_with(rhs, links, links, dt, g)
}

pub(crate) fn unfactored_psi_solve_with(
    rhs: &Field2<C64>,
    links: &LinkField,
    closure: &LinkField,
    dt: f64,
    g: &GridSpec,
) -> Result<Field2<C64>, OracleError> {
    let lxx = dense_lxx(g, links, closure)?;
    let lyy = dense_lyy(g, links)?;
    let n = lxx.rows;
    let l = lxx.combine(C64::new(1.0, 0.0), &lyy, C64::new(1.0, 0.0));
    let m = DenseMatrix::identity(n)?.combine(C64::new(1.0, 0.0), &l, C64::new(-dt, 0.0));
    let mut b = vec![C64::new(0.0, 0.0); n];
    for j in 1..=g.n_y {
        for i in g.n_sx..=g.n_ex {
            b[vertex_index(i, j, g)] = rhs.get(i, j);
        }
    }
    let x = dense_solve(&m, &b)?;
    let mut out = psi_layout(g, C64::new(0.0, 0.0));
    for j in 1..=g.n_y {
        for i in g.n_sx..=g.n_ex {
            out.set(i, j, x[vertex_index(i, j, g)]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{ax_layout, ay_layout, link_variables};
    use crate::operators::{apply_dxx, apply_dxy, apply_dyx, apply_dyy, apply_lxx, apply_lyy};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_links(g: &GridSpec, seed: u64) -> LinkField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ax = ax_layout(g, 0.0);
        let mut ay = ay_layout(g, 0.0);
        for v in ax.as_mut_slice().iter_mut().chain(ay.as_mut_slice()) {
            *v = rng.random_range(-3.0..3.0);
        }
        ax.refresh_periodic_rows();
        ay.refresh_periodic_rows();
        link_variables(&ax, &ay, 1.3, g)
    }

    #[test]
    fn periodic_second_difference_matrix() {
        let g = GridSpec::new(6, 4, 2, 4, 0.5, 0.5).unwrap();
        let m = dense_operator(DenseOp::Dyy, &g, None).unwrap();
        let c = 4.0;
        let want = [
            [-2.0, 1.0, 0.0, 1.0],
            [1.0, -2.0, 1.0, 0.0],
            [0.0, 1.0, -2.0, 1.0],
            [1.0, 0.0, 1.0, -2.0],
        ];
        for r in 0..4 {
            for k in 0..4 {
                assert_eq!(m[(r, k)], C64::new(c * want[r][k], 0.0));
            }
        }
    }

    #[test]
    fn identity_and_singular_solves() {
        let id = DenseMatrix::<f64>::identity(5).unwrap();
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(dense_solve(&id, &b).unwrap(), b);
        let g = GridSpec::new(6, 8, 2, 4, 0.5, 0.5).unwrap();
        let lap = dense_operator(DenseOp::Dyy, &g, None).unwrap();
        assert!(matches!(dense_solve(&lap, &[C64::new(1.0, 0.0); 8]), Err(OracleError::Singular(_))));
    }

    #[test]
    fn random_complex_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = DenseMatrix::<C64>::zeros(16, 16).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                m[(r, c)] = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let b: Vec<C64> = (0..16).map(|k| C64::new(k as f64, 1.0)).collect();
        let x = dense_solve(&m, &b).unwrap();
        let r = m.mul_vec(&x).iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(r < 1e-11 * 15.0);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(DenseMatrix::<f64>::zeros(MAX_DENSE_DIM + 1, 2), Err(OracleError::TooLarge(_))));
    }

    #[test]
    fn link_operators_match_matrix_free_on_basis() {
        let g = GridSpec::new(7, 5, 2, 5, 0.5, 0.4).unwrap();
        let links = random_links(&g, 1);
        let lxx = dense_operator(DenseOp::Lxx, &g, Some(&links)).unwrap();
        let lyy = dense_operator(DenseOp::Lyy, &g, Some(&links)).unwrap();
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                let mut psi = psi_layout(&g, C64::new(0.0, 0.0));
                psi.set(i, j, C64::new(1.0, 0.0));
                let mut s = crate::fields::State::zeros(&g);
                s.psi = psi;
                s.links = links.clone();
                s.sync_psi(&g);
                let fx = apply_lxx(&s.psi, &links.ux, &g);
                let fy = apply_lyy(&s.psi, &links.uy, &g);
                let col = vertex_index(i, j, &g);
                for jj in 1..=g.n_y {
                    for ii in g.n_sx..=g.n_ex {
                        let row = vertex_index(ii, jj, &g);
                        assert!((fx.get(ii, jj) - lxx[(row, col)]).norm() < 1e-13);
                        assert!((fy.get(ii, jj) - lyy[(row, col)]).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn potential_operators_match_matrix_free_on_basis() {
        let g = GridSpec::new(6, 5, 2, 4, 0.5, 0.4).unwrap();
        let dyx = dense_operator(DenseOp::Dyx, &g, None).unwrap();
        let dxy = dense_operator(DenseOp::Dxy, &g, None).unwrap();
        for j in 1..=g.n_y {
            for i in 1..=g.n_x {
                let mut ay = ay_layout(&g, 0.0);
                ay.set(i, j, 1.0);
                ay.refresh_periodic_rows();
                let out = apply_dyx(&ay, &g);
                let col = (j - 1) * g.n_x + (i - 1);
                for jj in 1..=g.n_y {
                    for ii in 1..g.n_x {
                        let row = (jj - 1) * (g.n_x - 1) + (ii - 1);
                        assert!((out.get(ii, jj) - dyx[(row, col)].re).abs() < 1e-13);
                    }
                }
            }
            for i in 0..=g.n_x {
                let mut ax = ax_layout(&g, 0.0);
                ax.set(i, j, 1.0);
                ax.refresh_periodic_rows();
                let out = apply_dxy(&ax, &g);
                let col = (j - 1) * (g.n_x + 1) + i;
                for jj in 1..=g.n_y {
                    for ii in 1..=g.n_x {
                        let row = (jj - 1) * g.n_x + (ii - 1);
                        assert!((out.get(ii, jj) - dxy[(row, col)].re).abs() < 1e-13);
                    }
                }
            }
        }
        let dyy = dense_operator(DenseOp::Dyy, &g, None).unwrap();
        let dxx = dense_operator(DenseOp::Dxx, &g, None).unwrap();
        for k in 0..g.n_y {
            let mut ax = ax_layout(&g, 0.0);
            ax.set(2, k + 1, 1.0);
            ax.refresh_periodic_rows();
            let out = apply_dyy(&ax, &g);
            for r in 0..g.n_y {
                assert!((out.get(2, r + 1) - dyy[(r, k)].re).abs() < 1e-13);
            }
        }
        for k in 0..g.n_x {
            let mut ay = ay_layout(&g, 0.0);
            ay.set(k + 1, 3, 1.0);
            // zero applied field, A_x = 0: ghosts mirror the edge columns
            ay.set(0, 3, ay.get(1, 3));
            ay.set(g.n_x + 1, 3, ay.get(g.n_x, 3));
            let out = apply_dxx(&ay, &g);
            for r in 0..g.n_x {
                assert!((out.get(r + 1, 3) - dxx[(r, k)].re).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn unfactored_solve_trivial_cases() {
        let g = GridSpec::new(7, 6, 2, 5, 0.5, 0.5).unwrap();
        let links = random_links(&g, 2);
        let mut rhs = psi_layout(&g, C64::new(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                rhs.set(i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        let same = unfactored_psi_solve(&rhs, &links, 0.0, &g).unwrap();
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                assert!((same.get(i, j) - rhs.get(i, j)).norm() < 1e-15);
            }
        }
        // U = 1, a y-Fourier mode constant in x is an eigenvector of both operators.
        let id = LinkField::identity(&g);
        let k = 2.0;
        let dt = 0.3;
        let mut mode = psi_layout(&g, C64::new(0.0, 0.0));
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                mode.set(i, j, C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k * j as f64 / g.n_y as f64));
            }
        }
        let lam = 4.0 / (g.h_y * g.h_y) * (std::f64::consts::PI * k / g.n_y as f64).sin().powi(2);
        let x = unfactored_psi_solve(&mode, &id, dt, &g).unwrap();
        for j in 1..=g.n_y {
            for i in g.n_sx..=g.n_ex {
                assert!((x.get(i, j) * (1.0 + dt * lam) - mode.get(i, j)).norm() < 1e-12);
            }
        }
    }
}
