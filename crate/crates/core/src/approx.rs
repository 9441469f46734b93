//! Value oracles and the compression routines that turn them into
//! approximation sets.

use crate::canonical::{CanonicalRep, Claim, Mode};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::pwl::PwlConvex;
use crate::rat::{self, Rat};
use num_traits::{One, Signed};

/// A univariate function available through point evaluations.
///
/// Functions with jumps are right-continuous: `eval` returns the value at a
/// point and `eval_left` its left limit. `next_jump` enumerates the points
/// where the two may differ.
pub trait FnOracle: Sync {
    fn domain(&self) -> Interval;

    fn eval(&self, x: &Rat) -> Rat;

    fn eval_left(&self, x: &Rat) -> Rat {
        self.eval(x)
    }

    /// Smallest potential discontinuity strictly greater than `x`.
    fn next_jump(&self, _x: &Rat) -> Option<Rat> {
        None
    }

    fn lipschitz(&self) -> Option<Rat> {
        None
    }

    /// An exact minimizer over the domain, when known.
    fn argmin(&self) -> Option<Rat> {
        None
    }
}

/// Oracle backed by a closure.
pub struct ClosureOracle<F> {
    pub domain: Interval,
    pub f: F,
    pub lipschitz: Option<Rat>,
    pub argmin: Option<Rat>,
}

impl<F: Fn(&Rat) -> Rat + Sync> ClosureOracle<F> {
    pub fn new(domain: Interval, f: F) -> Self {
        ClosureOracle {
            domain,
            f,
            lipschitz: None,
            argmin: None,
        }
    }

    pub fn with_lipschitz(mut self, k: Rat) -> Self {
        self.lipschitz = Some(k);
        self
    }

    pub fn with_argmin(mut self, x: Rat) -> Self {
        self.argmin = Some(x);
        self
    }
}

impl<F: Fn(&Rat) -> Rat + Sync> FnOracle for ClosureOracle<F> {
    fn domain(&self) -> Interval {
        self.domain.clone()
    }
    fn eval(&self, x: &Rat) -> Rat {
        (self.f)(x)
    }
    fn lipschitz(&self) -> Option<Rat> {
        self.lipschitz.clone()
    }
    fn argmin(&self) -> Option<Rat> {
        self.argmin.clone()
    }
}

/// `a (x - b)^2 + c` with `a >= 0` on a closed interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quadratic {
    pub a: Rat,
    pub b: Rat,
    pub c: Rat,
    pub domain: Interval,
}

impl FnOracle for Quadratic {
    fn domain(&self) -> Interval {
        self.domain.clone()
    }
    fn eval(&self, x: &Rat) -> Rat {
        let d = x - &self.b;
        &self.a * &d * &d + &self.c
    }
    fn lipschitz(&self) -> Option<Rat> {
        let far = rat::max(&(&self.domain.hi - &self.b).abs(), &(&self.domain.lo - &self.b).abs());
        Some(Rat::from_integer(2.into()) * &self.a * far)
    }
    fn argmin(&self) -> Option<Rat> {
        Some(self.domain.clamp(&self.b))
    }
}

/// A piecewise-linear convex function seen as an oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PwlOracle(pub PwlConvex);

impl FnOracle for PwlOracle {
    fn domain(&self) -> Interval {
        self.0.domain()
    }
    fn eval(&self, x: &Rat) -> Rat {
        self.0.value(x)
    }
    fn lipschitz(&self) -> Option<Rat> {
        Some(self.0.lipschitz())
    }
    fn argmin(&self) -> Option<Rat> {
        Some(self.0.argmin())
    }
}

/// `x -> inner(-x)` on the mirrored domain (for continuous `inner`).
pub struct Mirrored<'a>(pub &'a dyn FnOracle);

impl FnOracle for Mirrored<'_> {
    fn domain(&self) -> Interval {
        self.0.domain().mirror()
    }
    fn eval(&self, x: &Rat) -> Rat {
        self.0.eval(&-x)
    }
    fn lipschitz(&self) -> Option<Rat> {
        self.0.lipschitz()
    }
    fn argmin(&self) -> Option<Rat> {
        self.0.argmin().map(|x| -x)
    }
}

/// `x -> inner(x) + offset`.
pub struct Offset<'a> {
    pub inner: &'a dyn FnOracle,
    pub offset: Rat,
}

impl FnOracle for Offset<'_> {
    fn domain(&self) -> Interval {
        self.inner.domain()
    }
    fn eval(&self, x: &Rat) -> Rat {
        self.inner.eval(x) + &self.offset
    }
    fn eval_left(&self, x: &Rat) -> Rat {
        self.inner.eval_left(x) + &self.offset
    }
    fn next_jump(&self, x: &Rat) -> Option<Rat> {
        self.inner.next_jump(x)
    }
    fn lipschitz(&self) -> Option<Rat> {
        self.inner.lipschitz()
    }
    fn argmin(&self) -> Option<Rat> {
        self.inner.argmin()
    }
}

/// `x -> inner(x)` restricted to a subinterval.
pub struct Restricted<'a> {
    pub inner: &'a dyn FnOracle,
    pub domain: Interval,
}

impl FnOracle for Restricted<'_> {
    fn domain(&self) -> Interval {
        self.domain.clone()
    }
    fn eval(&self, x: &Rat) -> Rat {
        self.inner.eval(x)
    }
    fn eval_left(&self, x: &Rat) -> Rat {
        self.inner.eval_left(x)
    }
    fn next_jump(&self, x: &Rat) -> Option<Rat> {
        self.inner.next_jump(x)
    }
    fn lipschitz(&self) -> Option<Rat> {
        self.inner.lipschitz()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Accept {
    /// `lo <= phi(y) <= hi`.
    Window,
    /// `phi_left(y) <= hi` and `phi(y) >= lo`: a step may land on a jump.
    Step,
}

fn iteration_cap(phi: &dyn FnOracle, a: &Rat, b: &Rat, width: &Rat) -> usize {
    let base = match phi.lipschitz() {
        Some(k) if k.is_positive() && width.is_positive() && b > a => {
            let span = (b - a) * k / width;
            let e = if span > Rat::one() { rat::ceil_log2(&span) } else { 0 };
            3 * (e as usize + 64)
        }
        _ => 4096,
    };
    if phi.next_jump(a).is_some() {
        base + 4096
    } else {
        base
    }
}

/// Searches `(left, right]` for an acceptable point, given `phi(left) < lo`
/// and `phi(right) > hi`. Probes alternate between interpolation toward
/// `target` and bisection, snapped to short rationals.
fn bracket_search(
    phi: &dyn FnOracle,
    left: &Rat,
    right: &Rat,
    lo: &Rat,
    hi: &Rat,
    target: &Rat,
    accept: Accept,
) -> Result<Rat> {
    let cap = iteration_cap(phi, left, right, &(hi - lo));
    let mut a = left.clone();
    let mut fa = phi.eval(&a);
    let mut b = right.clone();
    let mut fb = phi.eval_left(&b);
    let ok = |fl: &Rat, fv: &Rat| match accept {
        Accept::Window => lo <= fv && fv <= hi,
        Accept::Step => fl <= hi && fv >= lo,
    };
    for iter in 0..cap {
        if let Some(j) = phi.next_jump(&a) {
            if j <= b && phi.next_jump(&j).is_none_or(|k| k > b) {
                // Exactly one candidate discontinuity in (a, b]; phi is
                // continuous on (a, j).
                let jl = phi.eval_left(&j);
                let jv = phi.eval(&j);
                if jv < fa || jl < fa {
                    return Err(Error::Contract("oracle is not nondecreasing".into()));
                }
                if jl > *hi {
                    b = j;
                    fb = jl;
                } else if ok(&jl, &jv) {
                    return Ok(j);
                } else if jv < *lo {
                    a = j;
                    fa = jv;
                    continue;
                } else if accept == Accept::Window && jl >= *lo {
                    b = j;
                    fb = jl;
                } else {
                    return Err(Error::Contract("target window falls inside a jump".into()));
                }
            }
        }
        let w = &b - &a;
        let interp = iter % 2 == 0 && fb > *target && fa < *target;
        let probe = if interp {
            let p = &a + (target - &fa) * &w / (&fb - &fa);
            let tol = &w / Rat::from_integer(8.into());
            rat::simplest_between(&rat::max(&a, &(&p - &tol)), &rat::min(&b, &(&p + &tol)))
        } else {
            let mid = (&a + &b) / Rat::from_integer(2.into());
            let tol = &w / Rat::from_integer(4.into());
            rat::simplest_between(&(&mid - &tol), &(&mid + &tol))
        };
        let pv = phi.eval(&probe);
        let pl = phi.eval_left(&probe);
        if pv < fa || pl > pv {
            return Err(Error::Contract("oracle is not nondecreasing".into()));
        }
        if ok(&pl, &pv) {
            return Ok(probe);
        }
        if pv < *lo {
            a = probe;
            fa = pv;
        } else {
            if pv > fb {
                return Err(Error::Contract("oracle is not nondecreasing".into()));
            }
            b = probe;
            fb = pl;
        }
    }
    Err(Error::Contract(format!("search did not converge within {cap} probes")))
}

/// Finds `x` in `range` with `lo <= phi(x) <= hi` for nondecreasing `phi`.
pub fn func_search_inc(phi: &dyn FnOracle, range: &Interval, lo: &Rat, hi: &Rat) -> Result<Rat> {
    if lo >= hi {
        return Err(Error::Precondition("search window must satisfy lo < hi".into()));
    }
    let fb = phi.eval(&range.hi);
    if lo <= &fb && &fb <= hi {
        return Ok(range.hi.clone());
    }
    let fa = phi.eval(&range.lo);
    if lo <= &fa && &fa <= hi {
        return Ok(range.lo.clone());
    }
    if &fa > hi || &fb < lo {
        return Err(Error::Precondition(
            "window is not bracketed by the range endpoints".into(),
        ));
    }
    let target = (lo + hi) / Rat::from_integer(2.into());
    bracket_search(phi, &range.lo, &range.hi, lo, hi, &target, Accept::Window)
}

/// Approximation set of a positive nondecreasing function.
///
/// Consecutive points `x < y` satisfy `phi_left(y) <= k * phi(x)`, so the
/// step function taking value `phi_left(y)` on `[x, y)` is within factor `k`.
/// For continuous `phi` this is an ordinary `k`-approximation set.
pub fn apx_set_inc(phi: &dyn FnOracle, range: &Interval, k: &Rat) -> Result<Vec<Rat>> {
    if *k <= Rat::one() {
        return Err(Error::Precondition("approximation factor must exceed one".into()));
    }
    let mut x = range.lo.clone();
    let mut v = phi.eval(&x);
    if !v.is_positive() {
        return Err(Error::Precondition(format!(
            "function must be positive, got {} at {}",
            rat::format(&v),
            rat::format(&x)
        )));
    }
    let mut w = vec![x.clone()];
    if range.is_point() {
        return Ok(w);
    }
    let two = Rat::from_integer(2.into());
    let top_left = phi.eval_left(&range.hi);
    loop {
        let hi = k * &v;
        if top_left <= hi {
            w.push(range.hi.clone());
            return Ok(w);
        }
        let lo = (k + Rat::one()) / &two * &v;
        let y = bracket_search(phi, &x, &range.hi, &lo, &hi, &hi, Accept::Step)?;
        let fy = phi.eval(&y);
        if fy < lo {
            return Err(Error::Contract("search returned a point below the window".into()));
        }
        w.push(y.clone());
        if y == range.hi {
            return Ok(w);
        }
        x = y;
        v = fy;
    }
}

/// Canonical representation `{(x, phi(x)) : x in W}` of a continuous
/// nondecreasing function.
pub fn compress_inc(phi: &dyn FnOracle, range: &Interval, k: &Rat) -> Result<CanonicalRep> {
    let w = apx_set_inc(phi, range, k)?;
    let points = w.into_iter().map(|x| {
        let v = phi.eval(&x);
        (x, v)
    });
    CanonicalRep::new(Mode::MonotoneIncUpper, points.collect(), Claim::relative(k.clone()))
}

/// Scaling data shared by the scaled compressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scaling {
    pub eps: Rat,
    /// Domain unit: interior abscissae are integer multiples of this.
    pub x_unit: Rat,
    /// Codomain unit: interior values are integer multiples of this.
    pub v_unit: Rat,
}

impl Scaling {
    pub fn new(k: &Rat, kappa: &Rat, phi_min: &Rat) -> Result<Self> {
        if *k <= Rat::one() {
            return Err(Error::Precondition("approximation factor must exceed one".into()));
        }
        if !kappa.is_positive() || !phi_min.is_positive() {
            return Err(Error::Precondition(
                "Lipschitz constant and lower bound must be positive".into(),
            ));
        }
        let eps = rat::min(&(k - Rat::one()), &Rat::new(1.into(), 4.into()));
        let x_unit = &eps * &eps * phi_min / (Rat::from_integer(100.into()) * kappa);
        let v_unit = &eps * phi_min / Rat::from_integer(10.into());
        Ok(Scaling { eps, x_unit, v_unit })
    }
}

/// Output of a scaled compression.
#[derive(Debug, Clone)]
pub struct ScaledRep {
    pub rep: CanonicalRep,
    pub scaling: Scaling,
    /// Minimizer record dropped from a two-sided compression, if any.
    pub dropped_minimizer: Option<(Rat, Rat)>,
}

/// Core of the increasing scaled compression on an arbitrary rational range.
/// Endpoint records carry exact values; interior records lie on the scaled
/// integer lattice.
fn scaled_inc_records(phi: &dyn FnOracle, range: &Interval, sc: &Scaling) -> Result<Vec<(Rat, Rat)>> {
    let rho = ClosureOracle::new(
        Interval {
            lo: &range.lo / &sc.x_unit,
            hi: &range.hi / &sc.x_unit,
        },
        |y: &Rat| phi.eval(&(y * &sc.x_unit)) / &sc.v_unit,
    );
    let (a, b) = (rho.domain.lo.clone(), rho.domain.hi.clone());
    let mut records = vec![(range.lo.clone(), phi.eval(&range.lo))];
    if range.is_point() {
        return Ok(records);
    }
    let ten = Rat::from_integer(10.into());
    let grow = |num: i64| Rat::one() + Rat::from_integer(num.into()) * &sc.eps / &ten;
    let rho_b = rho.eval(&b);
    let mut x = a.clone();
    let mut rx = rho.eval(&x);
    if !rx.is_positive() {
        return Err(Error::Precondition("function must be positive".into()));
    }
    while (Rat::one() + &sc.eps) * &rx < rho_b {
        let span = Interval {
            lo: x.clone(),
            hi: b.clone(),
        };
        let y1 = func_search_inc(&rho, &span, &(grow(3) * &rx), &(grow(4) * &rx))?;
        let y2 = func_search_inc(&rho, &span, &(grow(6) * &rx), &(grow(7) * &rx))?;
        let y = Rat::from_integer(rat::ceil(&y1));
        if y > y2 {
            return Err(Error::Contract(
                "no lattice point between search results; Lipschitz bound too small".into(),
            ));
        }
        let ry = rho.eval(&y);
        if y == b {
            break;
        }
        records.push((&y * &sc.x_unit, Rat::from_integer(rat::ceil(&ry)) * &sc.v_unit));
        x = y;
        rx = ry;
    }
    records.push((range.hi.clone(), phi.eval(&range.hi)));
    Ok(records)
}

/// Scaled compression of a convex nondecreasing positive function on a range
/// with integer endpoints.
pub fn scaled_compress_conv_inc(
    phi: &dyn FnOracle,
    range: &Interval,
    k: &Rat,
    kappa: &Rat,
    phi_min: &Rat,
) -> Result<ScaledRep> {
    if !range.lo.is_integer() || !range.hi.is_integer() {
        return Err(Error::Precondition("range endpoints must be integers".into()));
    }
    let sc = Scaling::new(k, kappa, phi_min)?;
    let records = scaled_inc_records(phi, range, &sc)?;
    Ok(ScaledRep {
        rep: CanonicalRep::new(Mode::ConvexLower, records, Claim::relative(k.clone()))?,
        scaling: sc,
        dropped_minimizer: None,
    })
}

/// Scaled compression of a convex positive function with a known exact
/// minimizer `x_star`.
pub fn scaled_compress_conv(
    phi: &dyn FnOracle,
    range: &Interval,
    x_star: &Rat,
    k: &Rat,
    kappa: &Rat,
    phi_min: &Rat,
) -> Result<ScaledRep> {
    if !range.contains(x_star) {
        return Err(Error::Domain("minimizer outside the range".into()));
    }
    let sc = Scaling::new(k, kappa, phi_min)?;
    let right = scaled_inc_records(
        phi,
        &Interval {
            lo: x_star.clone(),
            hi: range.hi.clone(),
        },
        &sc,
    )?;
    let mirrored = Mirrored(phi);
    let left_m = scaled_inc_records(
        &mirrored,
        &Interval {
            lo: -x_star,
            hi: -&range.lo,
        },
        &sc,
    )?;
    let mut points: Vec<(Rat, Rat)> = left_m.into_iter().rev().map(|(x, v)| (-x, v)).collect();
    // Both flanks start with the minimizer record; keep one copy.
    points.pop();
    let star = right[0].clone();
    points.extend(right);
    let mut dropped = None;
    if &range.lo < x_star && x_star < &range.hi {
        let i = points.iter().position(|(x, _)| x == x_star).expect("minimizer record");
        dropped = Some(points.remove(i));
    }
    debug_assert!(dropped.as_ref().is_none_or(|d| *d == star));
    Ok(ScaledRep {
        rep: CanonicalRep::new(Mode::ConvexLower, points, Claim::relative(k.clone()))?,
        scaling: sc,
        dropped_minimizer: dropped,
    })
}

/// Piecewise-linear convex `phi_hat` with `phi <= phi_hat <= pi * phi + sigma`
/// for a convex nonnegative `phi` with a known exact minimizer.
pub fn sigma_pi_pwl(phi: &dyn FnOracle, range: &Interval, sigma: &Rat, pi: &Rat) -> Result<PwlConvex> {
    if !sigma.is_positive() {
        return Err(Error::Precondition("additive slack must be positive".into()));
    }
    if *pi <= Rat::one() {
        return Err(Error::Precondition("relative factor must exceed one".into()));
    }
    let x_star = phi
        .argmin()
        .ok_or_else(|| Error::Precondition("an exact minimizer is required".into()))?;
    if !range.contains(&x_star) {
        return Err(Error::Domain("minimizer outside the range".into()));
    }
    let shift = sigma / (pi - Rat::one());
    let lifted = Offset {
        inner: phi,
        offset: shift,
    };
    let right = apx_set_inc(
        &lifted,
        &Interval {
            lo: x_star.clone(),
            hi: range.hi.clone(),
        },
        pi,
    )?;
    let mirrored = Mirrored(&lifted);
    let left = apx_set_inc(
        &mirrored,
        &Interval {
            lo: -&x_star,
            hi: -&range.lo,
        },
        pi,
    )?;
    let mut xs: Vec<Rat> = left.into_iter().rev().map(|x| -x).collect();
    xs.pop();
    xs.extend(right);
    let vs = xs.iter().map(|x| phi.eval(x)).collect();
    PwlConvex::from_parts(xs, vs).map(|f| f.simplify())
}
