//! Bivariate discrete functions indexed by integer partitions, each equal on
//! the integer grid to the maximum of few planes.
//!
//! With `R_y = r_1 + ... + r_y`, the function on `[1, U]^2` is `A` when
//! `x <= U - R_y` and `A + x - U + R_y` otherwise.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Plane `a x + b y + c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPlane {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl GridPlane {
    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x + self.b * y + self.c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardFunction {
    pub u: i64,
    pub parts: Vec<i64>,
    pub offset: i64,
    pub planes: Vec<GridPlane>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCheck {
    pub points: usize,
    /// First grid point where the planes disagree with the function.
    pub mismatch: Option<(i64, i64)>,
    pub planes: usize,
    pub distinct_parts: usize,
}

impl GridCheck {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none() && self.planes <= self.distinct_parts + 1
    }
}

pub fn check_partition(u: i64, parts: &[i64]) -> Result<()> {
    if u < 1 || parts.len() as i64 != u {
        return Err(Error::Domain(format!("need exactly U = {u} parts")));
    }
    if parts.iter().any(|&r| r < 0 || r > u) || parts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("parts must be nondecreasing integers in [0, U]".into()));
    }
    if parts.iter().sum::<i64>() != u {
        return Err(Error::Domain("parts must sum to U".into()));
    }
    Ok(())
}

/// Number of distinct values among the parts.
pub fn distinct(parts: &[i64]) -> usize {
    let mut v = parts.to_vec();
    v.dedup();
    v.len()
}

/// Direct evaluation on the grid, 1-based coordinates.
pub fn value(u: i64, parts: &[i64], offset: i64, x: i64, y: i64) -> i64 {
    let prefix: i64 = parts[..y as usize].iter().sum();
    if x <= u - prefix {
        offset
    } else {
        offset + x - u + prefix
    }
}

/// Builds the planes from the top row downwards: a flat plane, a plane
/// through row `U`, and one more plane whenever the parts change.
pub fn generate(u: i64, parts: &[i64], offset: i64) -> Result<HardFunction> {
    check_partition(u, parts)?;
    let r = |k: i64| parts[(k - 1) as usize];
    let mut planes = vec![
        GridPlane { a: 0, b: 0, c: offset },
        GridPlane {
            a: 1,
            b: r(u),
            c: offset - r(u) * u,
        },
    ];
    for k in (1..=u - 2).rev() {
        if r(k) < r(k + 1) {
            let b = r(k + 1);
            planes.push(GridPlane {
                a: 1,
                b,
                c: value(u, parts, offset, u, k + 1) - u - b * (k + 1),
            });
        }
    }
    planes.dedup();
    Ok(HardFunction {
        u,
        parts: parts.to_vec(),
        offset,
        planes,
    })
}

/// Compares the pointwise maximum of the planes with the function at all
/// `U^2` grid points.
pub fn verify(h: &HardFunction) -> GridCheck {
    let mut mismatch = None;
    'outer: for x in 1..=h.u {
        for y in 1..=h.u {
            let m = h.planes.iter().map(|p| p.eval(x, y)).max().expect("flat plane");
            if m != value(h.u, &h.parts, h.offset, x, y) {
                mismatch = Some((x, y));
                break 'outer;
            }
        }
    }
    GridCheck {
        points: (h.u * h.u) as usize,
        mismatch,
        planes: h.planes.len(),
        distinct_parts: distinct(&h.parts),
    }
}

/// All partitions of `u` into exactly `u` nondecreasing nonnegative parts.
pub fn partitions(u: i64) -> Vec<Vec<i64>> {
    fn rec(rest: i64, max: i64, slots: i64, acc: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if slots == 0 {
            if rest == 0 {
                let mut p = acc.clone();
                p.reverse();
                out.push(p);
            }
            return;
        }
        for r in (0..=max.min(rest)).rev() {
            if r * slots < rest {
                break;
            }
            acc.push(r);
            rec(rest - r, r, slots - 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(u, u, u, &mut Vec::new(), &mut out);
    out
}
