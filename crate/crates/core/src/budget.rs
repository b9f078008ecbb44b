//! Enumeration budget shared by all exhaustive computations.

use crate::error::{Error, Result};

/// Default limit on accumulation terms for exact enumeration.
pub const DEFAULT_BUDGET: u128 = 1 << 30;

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "SYNTHCAP_BUDGET";

/// Current budget: `SYNTHCAP_BUDGET` if set to a positive integer, else the default.
pub fn limit() -> u128 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u128>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_BUDGET)
}

/// Product of `factors`, saturating instead of overflowing.
pub fn terms(factors: &[u128]) -> u128 {
    factors.iter().fold(1u128, |a, &b| a.saturating_mul(b))
}

/// Fails with [`Error::Budget`] when `needed` exceeds the current limit.
pub fn check(needed: u128, context: &str) -> Result<()> {
    let lim = limit();
    if needed > lim {
        Err(Error::budget(needed, lim, context))
    } else {
        Ok(())
    }
}

/// `k^n` as a `u128`, saturating.
pub fn pow(k: usize, n: usize) -> u128 {
    let mut acc = 1u128;
    for _ in 0..n {
        acc = acc.saturating_mul(k as u128);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturating_arithmetic() {
        assert_eq!(pow(2, 10), 1024);
        assert_eq!(pow(1 << 20, 10), u128::MAX);
        assert_eq!(terms(&[3, 4, 5]), 60);
        assert!(check(10, "small").is_ok());
        assert!(matches!(check(u128::MAX, "huge"), Err(Error::Budget { .. })));
    }
}
