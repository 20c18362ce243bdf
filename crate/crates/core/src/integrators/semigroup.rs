//! Exact flow of the local nonlinearity `psi' = tau psi - |psi|^2 psi`.
//!
//! Writing `x = |psi|^2` turns the flow into the logistic equation
//! `x' = 2x(tau - x)` while the phase stays fixed, so the flow over `dt` has
//! the closed form used here.

use crate::fields::C64;

/// `S(psi) = sqrt(tau) psi / sqrt(|psi|^2 + (tau - |psi|^2) exp(-2 tau dt))`.
pub fn semigroup_s(psi: C64, tau: f64, dt: f64) -> C64 {
    semigroup_with_decay(psi, tau, (-2.0 * tau * dt).exp())
}

/// [`semigroup_s`] with `decay = exp(-2 tau dt)` precomputed.
#[inline]
pub fn semigroup_with_decay(psi: C64, tau: f64, decay: f64) -> C64 {
    let x = psi.norm_sqr();
    if x == 0.0 {
        return psi;
    }
    psi * (tau / (x + (tau - x) * decay)).sqrt()
}
