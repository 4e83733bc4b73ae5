//! Arithmetic used by the complexity bounds.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("2_{n}^{x} does not fit in 64 bits")]
pub struct Overflow {
    pub n: u32,
    pub x: u64,
}

/// `2_n^x`: `2_0^x = x`, `2_{n+1}^x = 2^(2_n^x)`.
pub fn superexp(n: u32, x: u64) -> Result<u64, Overflow> {
    let mut v = x;
    for _ in 0..n {
        if v >= 64 {
            return Err(Overflow { n, x });
        }
        v = 1u64 << v;
    }
    Ok(v)
}

/// Modified subtraction `x ∸ y`.
pub fn monus(x: u64, y: u64) -> u64 {
    x.saturating_sub(y)
}

/// A natural number or a value too large to represent, for comparing
/// measured sizes against tower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound {
    Finite(u64),
    Huge,
}

impl Bound {
    pub fn pow2(self) -> Bound {
        match self {
            Bound::Finite(v) if v < 64 => Bound::Finite(1u64 << v),
            _ => Bound::Huge,
        }
    }

    /// True iff `value ≤ self`.
    pub fn admits(self, value: u64) -> bool {
        Bound::Finite(value) <= self
    }

    /// True iff `value < self`.
    pub fn exceeds(self, value: u64) -> bool {
        Bound::Finite(value) < self
    }
}

/// `2_n^x` saturating to [`Bound::Huge`].
pub fn superexp_bound(n: u64, x: u64) -> Bound {
    let mut v = Bound::Finite(x);
    for _ in 0..n {
        v = v.pow2();
        if v == Bound::Huge {
            break;
        }
    }
    v
}
