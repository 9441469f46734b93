//! Univariate piecewise-linear convex functions and multivariate
//! max-affine cost functions.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::rat::{self, Rat};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Convex piecewise-linear function on a closed interval, stored by its
/// breakpoints. A single breakpoint describes a function on a point domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PwlConvex {
    xs: Vec<Rat>,
    vs: Vec<Rat>,
}

impl PwlConvex {
    /// Builds from breakpoints, checking strict order and convexity.
    pub fn new(points: Vec<(Rat, Rat)>) -> Result<Self> {
        let (xs, vs): (Vec<Rat>, Vec<Rat>) = points.into_iter().unzip();
        Self::from_parts(xs, vs)
    }

    pub fn from_parts(xs: Vec<Rat>, vs: Vec<Rat>) -> Result<Self> {
        if xs.is_empty() || xs.len() != vs.len() {
            return Err(Error::Domain(
                "piecewise-linear function needs matching, nonempty breakpoints".into(),
            ));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        let f = PwlConvex { xs, vs };
        let slopes = f.slopes();
        if slopes.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Contract("breakpoint slopes are not nondecreasing".into()));
        }
        Ok(f)
    }

    pub fn constant(domain: &Interval, v: Rat) -> Self {
        Self::linear(domain, Rat::zero(), v)
    }

    /// `slope * x + intercept` on `domain`.
    pub fn linear(domain: &Interval, slope: Rat, intercept: Rat) -> Self {
        let at = |x: &Rat| &slope * x + &intercept;
        if domain.is_point() {
            PwlConvex {
                xs: vec![domain.lo.clone()],
                vs: vec![at(&domain.lo)],
            }
        } else {
            PwlConvex {
                xs: vec![domain.lo.clone(), domain.hi.clone()],
                vs: vec![at(&domain.lo), at(&domain.hi)],
            }
        }
    }

    /// Upper envelope `max_i (s_i x + b_i)` of `(slope, intercept)` lines on `domain`.
    pub fn from_lines(lines: &[(Rat, Rat)], domain: &Interval) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::Domain("no lines given".into()));
        }
        let mut sorted: Vec<&(Rat, Rat)> = lines.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut hull: Vec<(Rat, Rat)> = Vec::new();
        for l in sorted {
            if let Some(last) = hull.last() {
                if last.0 == l.0 {
                    hull.pop();
                }
            }
            while hull.len() >= 2 {
                let (l1, l2) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
                let x12 = (&l1.1 - &l2.1) / (&l2.0 - &l1.0);
                let x23 = (&l2.1 - &l.1) / (&l.0 - &l2.0);
                if x23 <= x12 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(l.clone());
        }
        let eval_max = |x: &Rat| hull.iter().map(|(s, b)| s * x + b).max().expect("nonempty hull");
        if domain.is_point() {
            let v = eval_max(&domain.lo);
            return Ok(PwlConvex {
                xs: vec![domain.lo.clone()],
                vs: vec![v],
            });
        }
        let mut xs = vec![domain.lo.clone()];
        for w in hull.windows(2) {
            let x = (&w[0].1 - &w[1].1) / (&w[1].0 - &w[0].0);
            if x > domain.lo && x < domain.hi {
                xs.push(x);
            }
        }
        xs.push(domain.hi.clone());
        // Each breakpoint's value is attained by the hull line active there.
        let mut vs = Vec::with_capacity(xs.len());
        let mut j = 0;
        for x in &xs {
            while j + 1 < hull.len() && &hull[j + 1].0 * x + &hull[j + 1].1 >= &hull[j].0 * x + &hull[j].1 {
                j += 1;
            }
            vs.push(&hull[j].0 * x + &hull[j].1);
        }
        debug_assert!(xs.iter().zip(&vs).all(|(x, v)| eval_max(x) == *v));
        let f = PwlConvex { xs, vs };
        Ok(f.simplify())
    }

    /// `(slope, intercept)` of each linear piece, left to right.
    pub fn to_lines(&self) -> Vec<(Rat, Rat)> {
        if self.xs.len() == 1 {
            return vec![(Rat::zero(), self.vs[0].clone())];
        }
        self.xs
            .windows(2)
            .zip(self.vs.windows(2))
            .map(|(x, v)| {
                let s = (&v[1] - &v[0]) / (&x[1] - &x[0]);
                let b = &v[0] - &s * &x[0];
                (s, b)
            })
            .collect()
    }

    pub fn domain(&self) -> Interval {
        Interval {
            lo: self.xs[0].clone(),
            hi: self.xs[self.xs.len() - 1].clone(),
        }
    }

    pub fn xs(&self) -> &[Rat] {
        &self.xs
    }

    pub fn vs(&self) -> &[Rat] {
        &self.vs
    }

    pub fn points(&self) -> impl Iterator<Item = (&Rat, &Rat)> {
        self.xs.iter().zip(self.vs.iter())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn slopes(&self) -> Vec<Rat> {
        self.xs
            .windows(2)
            .zip(self.vs.windows(2))
            .map(|(x, v)| (&v[1] - &v[0]) / (&x[1] - &x[0]))
            .collect()
    }

    /// Index `i` of the piece `[xs[i], xs[i+1]]` containing `x`, clamped to the
    /// first/last piece outside the domain.
    fn piece(&self, x: &Rat) -> usize {
        let n = self.xs.len();
        debug_assert!(n >= 2);
        let k = self.xs.partition_point(|b| b <= x);
        k.clamp(1, n - 1) - 1
    }

    /// Value at `x`; errors outside the domain.
    pub fn eval(&self, x: &Rat) -> Result<Rat> {
        if !self.domain().contains(x) {
            return Err(Error::Domain(format!("{} outside {}", rat::format(x), self.domain())));
        }
        Ok(self.value(x))
    }

    /// Value at `x`, extending the end pieces linearly beyond the domain.
    pub fn value(&self, x: &Rat) -> Rat {
        if self.xs.len() == 1 {
            return self.vs[0].clone();
        }
        let i = self.piece(x);
        let (x0, x1, v0, v1) = (&self.xs[i], &self.xs[i + 1], &self.vs[i], &self.vs[i + 1]);
        if x == x0 {
            return v0.clone();
        }
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    /// Largest absolute slope.
    pub fn lipschitz(&self) -> Rat {
        self.slopes().iter().map(|s| s.abs()).max().unwrap_or_else(Rat::zero)
    }

    /// Leftmost minimizing breakpoint.
    pub fn argmin(&self) -> Rat {
        let mut best = 0;
        for i in 1..self.vs.len() {
            if self.vs[i] < self.vs[best] {
                best = i;
            }
        }
        self.xs[best].clone()
    }

    pub fn min_value(&self) -> Rat {
        self.vs.iter().min().cloned().expect("nonempty")
    }

    pub fn max_value(&self) -> Rat {
        let n = self.vs.len();
        rat::max(&self.vs[0], &self.vs[n - 1])
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.vs.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.vs.windows(2).all(|w| w[0] >= w[1])
    }

    /// `x -> f(-x)`.
    pub fn mirror(&self) -> Self {
        PwlConvex {
            xs: self.xs.iter().rev().map(|x| -x).collect(),
            vs: self.vs.iter().rev().cloned().collect(),
        }
    }

    /// `u -> f(u + c)`, defined on the domain shifted by `-c`.
    pub fn shift_arg(&self, c: &Rat) -> Self {
        PwlConvex {
            xs: self.xs.iter().map(|x| x - c).collect(),
            vs: self.vs.clone(),
        }
    }

    pub fn add_const(&self, c: &Rat) -> Self {
        PwlConvex {
            xs: self.xs.clone(),
            vs: self.vs.iter().map(|v| v + c).collect(),
        }
    }

    /// `x -> a * f(x)` for `a >= 0`.
    pub fn scale(&self, a: &Rat) -> Self {
        assert!(!a.is_negative(), "scale factor must be nonnegative");
        PwlConvex {
            xs: self.xs.clone(),
            vs: self.vs.iter().map(|v| a * v).collect(),
        }
        .simplify()
    }

    /// Drops interior breakpoints where the slope does not change.
    pub fn simplify(&self) -> Self {
        if self.xs.len() <= 2 {
            return self.clone();
        }
        let mut xs = vec![self.xs[0].clone()];
        let mut vs = vec![self.vs[0].clone()];
        let n = self.xs.len();
        for i in 1..n - 1 {
            let (xa, va) = (xs.last().unwrap(), vs.last().unwrap());
            let (xb, vb) = (&self.xs[i], &self.vs[i]);
            let (xc, vc) = (&self.xs[i + 1], &self.vs[i + 1]);
            // Collinear iff (vb - va)(xc - xb) == (vc - vb)(xb - xa).
            if (vb - va) * (xc - xb) != (vc - vb) * (xb - xa) {
                xs.push(xb.clone());
                vs.push(vb.clone());
            }
        }
        xs.push(self.xs[n - 1].clone());
        vs.push(self.vs[n - 1].clone());
        PwlConvex { xs, vs }
    }

    /// Restriction to a subinterval of the domain.
    pub fn restrict(&self, sub: &Interval) -> Result<Self> {
        if !self.domain().contains_interval(sub) {
            return Err(Error::Domain(format!("{} not inside {}", sub, self.domain())));
        }
        if sub.is_point() {
            return Ok(PwlConvex {
                xs: vec![sub.lo.clone()],
                vs: vec![self.value(&sub.lo)],
            });
        }
        let mut xs = vec![sub.lo.clone()];
        xs.extend(self.xs.iter().filter(|x| **x > sub.lo && **x < sub.hi).cloned());
        xs.push(sub.hi.clone());
        let vs = xs.iter().map(|x| self.value(x)).collect();
        Ok(PwlConvex { xs, vs })
    }

    /// Pointwise sum on the intersection of the domains.
    pub fn sum(&self, other: &PwlConvex) -> Result<Self> {
        let (a, b) = (self.domain(), other.domain());
        let lo = rat::max(&a.lo, &b.lo);
        let hi = rat::min(&a.hi, &b.hi);
        let dom = Interval::new(lo, hi)?;
        let mut xs: Vec<Rat> = self
            .xs
            .iter()
            .chain(other.xs.iter())
            .filter(|x| dom.contains(x))
            .cloned()
            .collect();
        xs.push(dom.lo.clone());
        xs.push(dom.hi.clone());
        xs.sort();
        xs.dedup();
        let vs = xs.iter().map(|x| self.value(x) + other.value(x)).collect();
        Ok(PwlConvex { xs, vs }.simplify())
    }

    /// Largest bit size over all stored coordinates.
    pub fn max_bits(&self) -> u64 {
        self.xs
            .iter()
            .chain(self.vs.iter())
            .map(rat::bit_size)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Serialize, Deserialize)]
struct PwlWire(Vec<[serde_json::Value; 2]>);

impl Serialize for PwlConvex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PwlWire(self.points().map(|(x, v)| [rat::to_json(x), rat::to_json(v)]).collect()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PwlConvex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = PwlWire::deserialize(d)?;
        let mut points = Vec::with_capacity(wire.0.len());
        for [x, v] in &wire.0 {
            let x = rat::from_json(x).map_err(D::Error::custom)?;
            let v = rat::from_json(v).map_err(D::Error::custom)?;
            points.push((x, v));
        }
        PwlConvex::new(points).map_err(D::Error::custom)
    }
}

/// One affine piece `coef_state * I + coef_action . x + constant`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plane {
    #[serde(with = "rat::serde_rat")]
    pub coef_state: Rat,
    #[serde(with = "rat::serde_rat_vec")]
    pub coef_action: Vec<Rat>,
    #[serde(with = "rat::serde_rat")]
    pub constant: Rat,
}

impl Plane {
    pub fn eval(&self, state: &Rat, action: &[Rat]) -> Rat {
        let mut v = &self.coef_state * state + &self.constant;
        for (c, x) in self.coef_action.iter().zip(action) {
            v += c * x;
        }
        v
    }
}

/// Pointwise maximum of affine functions of `(I, x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxAffine {
    pub planes: Vec<Plane>,
}

impl MaxAffine {
    pub fn new(planes: Vec<Plane>) -> Result<Self> {
        if planes.is_empty() {
            return Err(Error::Domain("max-affine function needs at least one plane".into()));
        }
        let p = planes[0].coef_action.len();
        if planes.iter().any(|h| h.coef_action.len() != p) {
            return Err(Error::Domain("planes disagree on the action dimension".into()));
        }
        Ok(MaxAffine { planes })
    }

    pub fn zero(action_dim: usize) -> Self {
        MaxAffine {
            planes: vec![Plane {
                coef_state: Rat::zero(),
                coef_action: vec![Rat::zero(); action_dim],
                constant: Rat::zero(),
            }],
        }
    }

    pub fn eval(&self, state: &Rat, action: &[Rat]) -> Rat {
        self.planes
            .iter()
            .map(|h| h.eval(state, action))
            .max()
            .expect("nonempty")
    }

    pub fn action_dim(&self) -> usize {
        self.planes[0].coef_action.len()
    }
}
