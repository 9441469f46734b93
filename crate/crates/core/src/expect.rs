//! Closed-form expectations of convex piecewise-linear functions of an
//! affine transform of a random quantity, taken against compressed CDFs.
//!
//! A convex piecewise-linear `psi` with minimizer `m` is written as
//! `psi(m) + sum_i w_i (y - r_i)+ + sum_j w'_j (l_j - y)+`. Replacing the
//! random quantity by the discrete surrogates of its step CDFs turns each
//! hinge into a finite mixture, so the result is again piecewise linear.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::pwl::PwlConvex;
use crate::randvar::{compress_cdf, RandVar, StepCdf};
use crate::rat::Rat;
use num_traits::{One, Signed, Zero};

/// Hinge decomposition of a convex piecewise-linear function.
struct Hinges {
    base: Rat,
    /// `(r, w)`: adds `w (y - r)+`.
    right: Vec<(Rat, Rat)>,
    /// `(l, w)`: adds `w (l - y)+`.
    left: Vec<(Rat, Rat)>,
}

fn hinges(psi: &PwlConvex) -> Hinges {
    let xs = psi.xs();
    let slopes = psi.slopes();
    let m = xs
        .iter()
        .position(|x| *x == psi.argmin())
        .expect("argmin is a breakpoint");
    let mut right = Vec::new();
    let mut prev = Rat::zero();
    for (i, s) in slopes.iter().enumerate().skip(m) {
        let w = s - &prev;
        if !w.is_zero() {
            right.push((xs[i].clone(), w));
        }
        prev = s.clone();
    }
    let mut left = Vec::new();
    let mut prev = Rat::zero();
    for i in (0..m).rev() {
        let s = -&slopes[i];
        let w = &s - &prev;
        if !w.is_zero() {
            left.push((xs[i + 1].clone(), w));
        }
        prev = s;
    }
    Hinges {
        base: psi.vs()[m].clone(),
        right,
        left,
    }
}

/// Domain of `u` such that `u - d` stays in `dom` for every `d` in `support`.
pub fn shifted_domain(dom: &Interval, support: &Interval) -> Result<Interval> {
    Interval::new(&dom.lo + &support.hi, &dom.hi + &support.lo)
        .map_err(|_| Error::Domain("random support is wider than the function's domain".into()))
}

/// `xi(u) ~ E[psi(u - D)]` on the domain where `u - D` stays in psi's domain.
///
/// `cdf_d` approximates the CDF of `D` from above; `cdf_neg_d` approximates
/// the CDF of `-D` and is needed only when `psi` decreases somewhere.
pub fn expectation(psi: &PwlConvex, cdf_d: &StepCdf, cdf_neg_d: Option<&StepCdf>) -> Result<PwlConvex> {
    let h = hinges(psi);
    let dom = shifted_domain(&psi.domain(), &cdf_d.support())?;
    let mut terms: Vec<(Rat, Rat, bool)> = Vec::new();
    let d_atoms = cdf_d.masses();
    for (r, w) in &h.right {
        for (d, p) in &d_atoms {
            terms.push((r + d, w * p, true));
        }
    }
    if !h.left.is_empty() {
        let neg = cdf_neg_d
            .ok_or_else(|| Error::Precondition("a decreasing function needs the CDF of the negated variable".into()))?;
        for (l, w) in &h.left {
            for (e, q) in neg.masses() {
                terms.push((l - e, w * q, false));
            }
        }
    }
    Ok(sweep(&h.base, &terms, &dom))
}

/// Piecewise-linear function `base + sum w (u - b)+` (right hinges) and
/// `w (b - u)+` (left hinges) on `dom`.
fn sweep(base: &Rat, terms: &[(Rat, Rat, bool)], dom: &Interval) -> PwlConvex {
    let at = |u: &Rat| -> Rat {
        let mut v = base.clone();
        for (b, w, right) in terms {
            let arg = if *right { u - b } else { b - u };
            if arg.is_positive() {
                v += w * arg;
            }
        }
        v
    };
    let lo = &dom.lo;
    let mut v = at(lo);
    if dom.is_point() {
        return PwlConvex::new(vec![(lo.clone(), v)]).expect("single point");
    }
    let mut slope = Rat::zero();
    for (b, w, right) in terms {
        if *right && b <= lo {
            slope += w;
        } else if !*right && b > lo {
            slope -= w;
        }
    }
    let mut events: Vec<(&Rat, &Rat)> = terms
        .iter()
        .filter(|(b, _, _)| b > lo && b < &dom.hi)
        .map(|(b, w, _)| (b, w))
        .collect();
    events.sort_by(|a, b| a.0.cmp(b.0));
    let mut xs = vec![lo.clone()];
    let mut vs = vec![v.clone()];
    let mut x = lo.clone();
    let mut i = 0;
    while i < events.len() {
        let b = events[i].0.clone();
        v += &slope * (&b - &x);
        x = b;
        // Both hinge kinds raise the slope by their weight when crossed.
        while i < events.len() && *events[i].0 == x {
            slope += events[i].1;
            i += 1;
        }
        xs.push(x.clone());
        vs.push(v.clone());
    }
    v += &slope * (&dom.hi - &x);
    xs.push(dom.hi.clone());
    vs.push(v);
    PwlConvex::from_parts(xs, vs)
        .expect("mixture of hinges is convex")
        .simplify()
}

/// `x -> E~[psi(b x + e - D)]` for nondecreasing `psi`, with `cdf_d`
/// approximating the CDF of `D`.
pub fn compress_exp_val_inc(psi: &PwlConvex, b: &Rat, e: &Rat, cdf_d: &StepCdf) -> Result<PwlConvex> {
    if !psi.is_nondecreasing() {
        return Err(Error::Precondition("function must be nondecreasing".into()));
    }
    let xi = expectation(psi, cdf_d, None)?;
    pull_back(&xi, b, e)
}

/// `x -> E~[psi(b x + e + c X)]` for convex `psi`, with `X`'s CDF
/// compressed within `k` (`k = 1` uses the exact CDF of a discrete `X`).
pub fn compress_exp_val(psi: &PwlConvex, b: &Rat, e: &Rat, c: &Rat, x: &RandVar, k: &Rat) -> Result<PwlConvex> {
    let d = x.transform(&-c)?;
    let nd = x.transform(c)?;
    let build = |v: &RandVar| {
        if k.is_one() {
            StepCdf::exact(v, u64::MAX)
        } else {
            compress_cdf(v, k)
        }
    };
    let cdf_d = build(&d)?;
    let cdf_nd = if psi.is_nondecreasing() {
        None
    } else {
        Some(build(&nd)?)
    };
    let xi = expectation(psi, &cdf_d, cdf_nd.as_ref())?;
    pull_back(&xi, b, e)
}

/// `x -> xi(b x + e)` on the preimage of xi's domain.
pub fn pull_back(xi: &PwlConvex, b: &Rat, e: &Rat) -> Result<PwlConvex> {
    if b.is_zero() {
        return Err(Error::Precondition("affine map must have a nonzero slope".into()));
    }
    let pts: Vec<(Rat, Rat)> = xi.points().map(|(u, v)| ((u - e) / b, v.clone())).collect();
    let pts = if b.is_negative() {
        pts.into_iter().rev().collect()
    } else {
        pts
    };
    PwlConvex::new(pts)
}

/// Exact `E[psi(u - D)]` for explicit discrete `D` by enumeration.
pub fn brute_force(psi: &PwlConvex, atoms: &[(Rat, Rat)], u: &Rat) -> Result<Rat> {
    let mut acc = Rat::zero();
    for (d, p) in atoms {
        acc += p * psi.eval(&(u - d))?;
    }
    Ok(acc)
}
