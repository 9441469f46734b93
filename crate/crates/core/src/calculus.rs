//! Bookkeeping rules for how approximation claims combine.
//!
//! A claim `(sigma, k)` on `f~` asserts `f <= f~ <= k * f + sigma`. Pure
//! relative claims have `sigma = 0`.

use crate::canonical::Claim;
use crate::rat::{self, Rat};
use num_traits::{One, Zero};

/// `f~1 + f~2` approximates `f1 + f2`.
pub fn sum(a: &Claim, b: &Claim) -> Claim {
    Claim::new(&a.sigma + &b.sigma, rat::max(&a.k, &b.k))
}

/// `min(f~1, f~2)` approximates `min(f1, f2)`.
pub fn min(a: &Claim, b: &Claim) -> Claim {
    Claim::new(rat::max(&a.sigma, &b.sigma), rat::max(&a.k, &b.k))
}

/// `max(f~1, f~2)` approximates `max(f1, f2)`.
pub fn max(a: &Claim, b: &Claim) -> Claim {
    min(a, b)
}

/// `alpha * f~ + beta` approximates `alpha * f + beta` for `alpha, beta >= 0`.
pub fn scale_shift(a: &Claim, alpha: &Rat) -> Claim {
    Claim::new(alpha * &a.sigma, a.k.clone())
}

/// `f~(psi)` approximates `f(psi)`.
pub fn compose(a: &Claim) -> Claim {
    a.clone()
}

/// Approximating an approximation: `inner` relates `f1` to `f2 = f~1`, `outer`
/// relates `f2` to `f~2`.
pub fn chain(inner: &Claim, outer: &Claim) -> Claim {
    Claim::new(&outer.sigma + &outer.k * &inner.sigma, &inner.k * &outer.k)
}

/// Expectation of a claimed function under a CDF approximated within `k_cdf`.
pub fn expectation(f: &Claim, k_cdf: &Rat) -> Claim {
    Claim::new(&f.sigma * k_cdf, &f.k * k_cdf)
}

/// Converts an additive slack into a relative factor, valid when the
/// approximated function is bounded below by `floor > 0`.
pub fn absorb(a: &Claim, floor: &Rat) -> Claim {
    assert!(*floor > Rat::zero(), "absorbing needs a positive lower bound");
    Claim::relative(&a.k + &a.sigma / floor)
}

/// Per-stage claim of a stage minimization over a sum of an immediate-cost
/// expectation and a cost-to-go expectation.
pub fn stage(immediate: &Claim, cost_to_go: &Claim) -> Claim {
    sum(immediate, cost_to_go)
}

pub fn is_pure(a: &Claim) -> bool {
    a.sigma.is_zero()
}

pub fn identity() -> Claim {
    Claim::new(Rat::zero(), Rat::one())
}
