use crate::error::{Error, Result};
use crate::rat::{self, Rat};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "rat::serde_rat")]
    pub lo: Rat,
    #[serde(with = "rat::serde_rat")]
    pub hi: Rat,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Result<Self> {
        if lo > hi {
            return Err(Error::Domain(format!(
                "empty interval [{}, {}]",
                rat::format(&lo),
                rat::format(&hi)
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: Rat) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    /// Image under `x -> a*x + b`.
    pub fn affine(&self, a: &Rat, b: &Rat) -> Interval {
        let p = a * &self.lo + b;
        let q = a * &self.hi + b;
        if p <= q {
            Interval { lo: p, hi: q }
        } else {
            Interval { lo: q, hi: p }
        }
    }

    /// Minkowski sum.
    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: rat::min(&self.lo, &other.lo),
            hi: rat::max(&self.hi, &other.hi),
        }
    }

    pub fn clamp(&self, x: &Rat) -> Rat {
        if x < &self.lo {
            self.lo.clone()
        } else if x > &self.hi {
            self.hi.clone()
        } else {
            x.clone()
        }
    }

    pub fn mirror(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", rat::Show(&self.lo), rat::Show(&self.hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, ratio};

    #[test]
    fn rejects_reversed_bounds() {
        assert!(Interval::new(int(2), int(1)).is_err());
        assert!(Interval::new(int(1), int(1)).unwrap().is_point());
    }

    #[test]
    fn affine_image_flips_for_negative_scale() {
        let i = Interval::new(int(2), int(4)).unwrap();
        assert_eq!(i.affine(&ratio(1, 2), &int(0)), Interval::new(int(1), int(2)).unwrap());
        assert_eq!(i.affine(&int(-1), &int(0)), Interval::new(int(-4), int(-2)).unwrap());
    }
}
