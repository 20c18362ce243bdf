//! Bisection search for the largest stable time step.

use thiserror::Error;

use super::AlgorithmId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityLimit {
    /// Largest probed step that stayed stable.
    Finite(f64),
    /// The upper bound itself was stable; no limit below the cap.
    Unbounded { cap: f64 },
}

impl StabilityLimit {
    /// The finite limit, or the cap when unbounded.
    pub fn value(&self) -> f64 {
        match *self {
            StabilityLimit::Finite(v) => v,
            StabilityLimit::Unbounded { cap } => cap,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("algorithm {0} is already unstable at the lower bound {1}")]
    LowerBoundUnstable(AlgorithmId, f64),
    #[error("bounds must satisfy 0 < lo <= hi, got [{0}, {1}]")]
    Bounds(f64, f64),
    #[error("probe failed: {0}")]
    Probe(String),
}

/// Rounds to `digits` significant figures.
pub fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let digits = digits.max(1) as usize;
    format!("{:.*e}", digits - 1, v).parse().unwrap_or(v)
}

/// Brackets the stability limit of `alg` between `lo` and `hi` and bisects
/// until the bracket is narrower than one unit in the second significant
/// figure. `probe(alg, dt)` returns whether a run at `dt` stayed stable.
pub fn find_stability_limit<E: std::fmt::Display>(
    alg: AlgorithmId,
    lo: f64,
    hi: f64,
    mut probe: impl FnMut(AlgorithmId, f64) -> Result<bool, E>,
) -> Result<StabilityLimit, StabilityError> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(StabilityError::Bounds(lo, hi));
    }
    let mut run = |dt: f64| probe(alg, dt).map_err(|e| StabilityError::Probe(e.to_string()));
    if !run(lo)? {
        return Err(StabilityError::LowerBoundUnstable(alg, lo));
    }
    if hi == lo {
        return Ok(StabilityLimit::Finite(lo));
    }
    if run(hi)? {
        return Ok(StabilityLimit::Unbounded { cap: hi });
    }
    let (mut lo, mut hi) = (lo, hi);
    loop {
        let unit = 10f64.powi(lo.log10().floor() as i32 - 1);
        if hi - lo <= unit {
            return Ok(StabilityLimit::Finite(lo));
        }
        let mid = if hi / lo > 2.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if run(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold(limit: f64) -> impl FnMut(AlgorithmId, f64) -> Result<bool, String> {
        move |_, dt| Ok(dt <= limit)
    }

    #[test]
    fn finds_a_threshold_to_two_figures() {
        let r = find_stability_limit(AlgorithmId::Explicit, 1e-4, 10.0, threshold(0.0588)).unwrap();
        let v = r.value();
        assert!(v <= 0.0588 && 0.0588 - v <= 0.001, "{v}");
        assert_eq!(round_sig(0.05876, 2), 0.059);
    }

    #[test]
    fn bracket_errors_and_unbounded() {
        assert_eq!(
            find_stability_limit(AlgorithmId::Implicit, 0.5, 1.0, threshold(0.1)),
            Err(StabilityError::LowerBoundUnstable(AlgorithmId::Implicit, 0.5))
        );
        assert_eq!(
            find_stability_limit(AlgorithmId::FullyImplicit, 0.1, 100.0, threshold(f64::INFINITY)),
            Ok(StabilityLimit::Unbounded { cap: 100.0 })
        );
        assert_eq!(
            find_stability_limit(AlgorithmId::SemiImplicit, 0.2, 0.2, threshold(0.3)),
            Ok(StabilityLimit::Finite(0.2))
        );
        assert!(find_stability_limit(AlgorithmId::SemiImplicit, 0.0, 1.0, threshold(0.3)).is_err());
    }
}
