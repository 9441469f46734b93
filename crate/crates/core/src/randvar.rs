//! Bounded random variables, their CDF oracles and compressed step CDFs.

use crate::approx::{apx_set_inc, FnOracle};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::rat::{self, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Polynomial with coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly(pub Vec<Rat>);

impl Poly {
    pub fn eval(&self, z: &Rat) -> Rat {
        self.0.iter().rev().fold(Rat::zero(), |acc, c| acc * z + c)
    }

    pub fn eval_f64(&self, z: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * z + rat::to_f64(c))
    }

    pub fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rat::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    /// `z -> p(z / c)`.
    pub fn scale_arg(&self, c: &Rat) -> Poly {
        let inv = c.recip();
        let mut f = Rat::one();
        let mut out = Vec::with_capacity(self.0.len());
        for a in &self.0 {
            out.push(a * &f);
            f *= &inv;
        }
        Poly(out)
    }

    /// `z -> 1 - p(z)`.
    pub fn complement(&self) -> Poly {
        let mut out: Vec<Rat> = self.0.iter().map(|c| -c).collect();
        if out.is_empty() {
            out.push(Rat::zero());
        }
        out[0] += Rat::one();
        Poly(out)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }
}

/// Discrete distribution with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discrete {
    /// Explicit sorted atoms with positive probabilities summing to one.
    Atoms { values: Vec<Rat>, cum: Vec<Rat> },
    /// `n` equiprobable atoms `start + k * step`, accessed by index.
    Grid { start: Rat, step: Rat, n: u64 },
}

/// Continuous distribution on `[lo, hi]` with positive point masses at both
/// ends and a piecewise-polynomial CDF in between.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncContinuous {
    pub lo: Rat,
    pub hi: Rat,
    pub mass_lo: Rat,
    pub mass_hi: Rat,
    /// `lo = knots[0] < ... < knots[m] = hi`.
    pub knots: Vec<Rat>,
    /// CDF on `(knots[i], knots[i+1])`.
    pub pieces: Vec<Poly>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RandVar {
    Discrete(Discrete),
    Continuous(TruncContinuous),
}

impl RandVar {
    /// Explicit discrete distribution; equal values are merged.
    pub fn discrete(atoms: Vec<(Rat, Rat)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Distribution("no atoms".into()));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut values: Vec<Rat> = Vec::new();
        let mut probs: Vec<Rat> = Vec::new();
        for (v, p) in atoms {
            if !p.is_positive() {
                return Err(Error::Distribution("atom probabilities must be positive".into()));
            }
            if values.last() == Some(&v) {
                *probs.last_mut().unwrap() += p;
            } else {
                values.push(v);
                probs.push(p);
            }
        }
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = Rat::zero();
        for p in &probs {
            acc += p;
            cum.push(acc.clone());
        }
        if !acc.is_one() {
            return Err(Error::Distribution(format!(
                "probabilities sum to {}, not 1",
                rat::format(&acc)
            )));
        }
        Ok(RandVar::Discrete(Discrete::Atoms { values, cum }))
    }

    pub fn point(v: Rat) -> Self {
        RandVar::Discrete(Discrete::Atoms {
            values: vec![v],
            cum: vec![Rat::one()],
        })
    }

    /// `n` equiprobable atoms `start, start + step, ...`.
    pub fn grid(start: Rat, step: Rat, n: u64) -> Result<Self> {
        if n == 0 || !step.is_positive() {
            return Err(Error::Distribution("grid needs n >= 1 and a positive step".into()));
        }
        Ok(RandVar::Discrete(Discrete::Grid { start, step, n }))
    }

    pub fn continuous(c: TruncContinuous) -> Result<Self> {
        c.validate()?;
        Ok(RandVar::Continuous(c))
    }

    /// Uniform interior density on `[lo, hi]` plus endpoint masses.
    pub fn trunc_uniform(lo: Rat, hi: Rat, mass_lo: Rat, mass_hi: Rat) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Distribution("support must have positive width".into()));
        }
        let slope = (Rat::one() - &mass_hi - &mass_lo) / (&hi - &lo);
        let c0 = &mass_lo - &slope * &lo;
        Self::continuous(TruncContinuous {
            knots: vec![lo.clone(), hi.clone()],
            pieces: vec![Poly(vec![c0, slope])],
            lo,
            hi,
            mass_lo,
            mass_hi,
        })
    }

    /// Triangular interior density with the given mode, scaled to the mass
    /// left after the endpoint atoms.
    pub fn trunc_triangular(lo: Rat, mode: Rat, hi: Rat, mass_lo: Rat, mass_hi: Rat) -> Result<Self> {
        if !(lo <= mode && mode <= hi && lo < hi) {
            return Err(Error::Distribution(
                "triangular needs lo <= mode <= hi and lo < hi".into(),
            ));
        }
        let body = Rat::one() - &mass_lo - &mass_hi;
        let w = &hi - &lo;
        let mut knots = vec![lo.clone()];
        let mut pieces = Vec::new();
        if mode > lo {
            // mass_lo + body (z - lo)^2 / (w (mode - lo))
            let d = &w * (&mode - &lo);
            let a = &body / &d;
            pieces.push(Poly(vec![
                &mass_lo + &a * &lo * &lo,
                -(&a * &lo) * Rat::from_integer(2.into()),
                a,
            ]));
            knots.push(mode.clone());
        }
        if mode < hi {
            // 1 - mass_hi - body (hi - z)^2 / (w (hi - mode))
            let d = &w * (&hi - &mode);
            let a = &body / &d;
            pieces.push(Poly(vec![
                Rat::one() - &mass_hi - &a * &hi * &hi,
                &a * &hi * Rat::from_integer(2.into()),
                -a,
            ]));
            knots.push(hi.clone());
        }
        Self::continuous(TruncContinuous {
            lo,
            hi,
            mass_lo,
            mass_hi,
            knots,
            pieces,
        })
    }

    /// Gaussian clipped to `[lo, hi]`: the tails become endpoint masses and
    /// the interior CDF is the piecewise-linear interpolation of the normal
    /// CDF at `nodes + 1` equally spaced points, rounded to multiples of 10^-12.
    pub fn clipped_gaussian(mean: &Rat, std: &Rat, lo: Rat, hi: Rat, nodes: usize) -> Result<Self> {
        use statrs::distribution::{ContinuousCDF, Normal};
        if !std.is_positive() || lo >= hi || nodes == 0 {
            return Err(Error::Distribution(
                "clipped Gaussian needs std > 0, lo < hi, nodes >= 1".into(),
            ));
        }
        let normal =
            Normal::new(rat::to_f64(mean), rat::to_f64(std)).map_err(|e| Error::Distribution(e.to_string()))?;
        let scale = BigInt::from(1_000_000_000_000u64);
        let n = Rat::from_integer(BigInt::from(nodes));
        let knots: Vec<Rat> = (0..=nodes)
            .map(|j| &lo + (&hi - &lo) * Rat::from_integer(BigInt::from(j)) / &n)
            .collect();
        let mut values: Vec<Rat> = knots
            .iter()
            .map(|z| {
                let p = normal.cdf(rat::to_f64(z));
                Rat::new(BigInt::from((p * 1e12).round() as i64), scale.clone())
            })
            .collect();
        for j in 1..values.len() {
            if values[j] < values[j - 1] {
                values[j] = values[j - 1].clone();
            }
        }
        let mass_lo = values[0].clone();
        let mass_hi = Rat::one() - &values[nodes];
        let pieces = knots
            .windows(2)
            .zip(values.windows(2))
            .map(|(k, v)| {
                let s = (&v[1] - &v[0]) / (&k[1] - &k[0]);
                Poly(vec![&v[0] - &s * &k[0], s])
            })
            .collect();
        Self::continuous(TruncContinuous {
            lo,
            hi,
            mass_lo,
            mass_hi,
            knots,
            pieces,
        })
    }

    pub fn support(&self) -> Interval {
        match self {
            RandVar::Discrete(Discrete::Atoms { values, .. }) => Interval {
                lo: values[0].clone(),
                hi: values[values.len() - 1].clone(),
            },
            RandVar::Discrete(Discrete::Grid { start, step, n }) => Interval {
                lo: start.clone(),
                hi: start + step * Rat::from_integer(BigInt::from(n - 1)),
            },
            RandVar::Continuous(c) => Interval {
                lo: c.lo.clone(),
                hi: c.hi.clone(),
            },
        }
    }

    /// `Pr(X <= z)`.
    pub fn cdf(&self, z: &Rat) -> Rat {
        match self {
            RandVar::Discrete(Discrete::Atoms { values, cum }) => {
                let k = values.partition_point(|v| v <= z);
                if k == 0 {
                    Rat::zero()
                } else {
                    cum[k - 1].clone()
                }
            }
            RandVar::Discrete(Discrete::Grid { start, step, n }) => {
                if z < start {
                    return Rat::zero();
                }
                let k: BigInt = rat::floor(&((z - start) / step)) + 1;
                let k = k.min(BigInt::from(*n));
                Rat::new(k, BigInt::from(*n))
            }
            RandVar::Continuous(c) => c.cdf(z),
        }
    }

    /// `Pr(X < z)`.
    pub fn cdf_left(&self, z: &Rat) -> Rat {
        match self {
            RandVar::Discrete(Discrete::Atoms { values, cum }) => {
                let k = values.partition_point(|v| v < z);
                if k == 0 {
                    Rat::zero()
                } else {
                    cum[k - 1].clone()
                }
            }
            RandVar::Discrete(Discrete::Grid { start, step, n }) => {
                if z <= start {
                    return Rat::zero();
                }
                let k = rat::ceil(&((z - start) / step));
                let k = k.min(BigInt::from(*n));
                Rat::new(k, BigInt::from(*n))
            }
            RandVar::Continuous(c) => {
                if z <= &c.lo {
                    Rat::zero()
                } else if z > &c.hi {
                    Rat::one()
                } else if z == &c.hi {
                    Rat::one() - &c.mass_hi
                } else {
                    c.cdf(z)
                }
            }
        }
    }

    /// Smallest support atom or CDF discontinuity strictly above `z`.
    pub fn next_jump(&self, z: &Rat) -> Option<Rat> {
        match self {
            RandVar::Discrete(Discrete::Atoms { values, .. }) => {
                let k = values.partition_point(|v| v <= z);
                values.get(k).cloned()
            }
            RandVar::Discrete(Discrete::Grid { start, step, n }) => {
                let k = if z < start {
                    BigInt::zero()
                } else {
                    rat::floor(&((z - start) / step)) + 1
                };
                if k >= BigInt::from(*n) {
                    None
                } else {
                    Some(start + step * Rat::from_integer(k))
                }
            }
            RandVar::Continuous(c) => {
                if z < &c.lo {
                    Some(c.lo.clone())
                } else if z < &c.hi {
                    Some(c.hi.clone())
                } else {
                    None
                }
            }
        }
    }

    /// Smallest positive probability mass: the smallest atom for discrete
    /// variables, the smaller endpoint mass for continuous ones.
    pub fn gamma(&self) -> Rat {
        match self {
            RandVar::Discrete(Discrete::Atoms { cum, .. }) => {
                let mut prev = Rat::zero();
                let mut best = Rat::one();
                for c in cum {
                    let p = c - &prev;
                    if p < best {
                        best = p;
                    }
                    prev = c.clone();
                }
                best
            }
            RandVar::Discrete(Discrete::Grid { n, .. }) => Rat::new(BigInt::one(), BigInt::from(*n)),
            RandVar::Continuous(c) => rat::min(&c.mass_lo, &c.mass_hi),
        }
    }

    /// Number of atoms, or `None` for continuous variables.
    pub fn atom_count(&self) -> Option<u64> {
        match self {
            RandVar::Discrete(Discrete::Atoms { values, .. }) => Some(values.len() as u64),
            RandVar::Discrete(Discrete::Grid { n, .. }) => Some(*n),
            RandVar::Continuous(_) => None,
        }
    }

    /// `k`-th smallest atom and its probability.
    pub fn atom(&self, k: u64) -> Option<(Rat, Rat)> {
        match self {
            RandVar::Discrete(Discrete::Atoms { values, cum }) => {
                let k = k as usize;
                let v = values.get(k)?.clone();
                let p = if k == 0 { cum[0].clone() } else { &cum[k] - &cum[k - 1] };
                Some((v, p))
            }
            RandVar::Discrete(Discrete::Grid { start, step, n }) => {
                if k >= *n {
                    return None;
                }
                Some((
                    start + step * Rat::from_integer(BigInt::from(k)),
                    Rat::new(BigInt::one(), BigInt::from(*n)),
                ))
            }
            RandVar::Continuous(_) => None,
        }
    }

    /// All atoms of a discrete variable with at most `limit` atoms.
    pub fn atoms(&self, limit: u64) -> Option<Vec<(Rat, Rat)>> {
        let n = self.atom_count()?;
        if n > limit {
            return None;
        }
        Some((0..n).map(|k| self.atom(k).expect("in range")).collect())
    }

    pub fn is_degenerate(&self) -> bool {
        self.support().is_point()
    }

    /// Distribution of `c * X` for `c != 0`.
    pub fn transform(&self, c: &Rat) -> Result<RandVar> {
        if c.is_zero() {
            return Err(Error::Precondition("transform weight must be nonzero".into()));
        }
        if c.is_one() {
            return Ok(self.clone());
        }
        Ok(match self {
            RandVar::Discrete(Discrete::Atoms { .. }) => {
                let atoms = self
                    .atoms(u64::MAX)
                    .expect("explicit atoms")
                    .into_iter()
                    .map(|(v, p)| (v * c, p))
                    .collect();
                RandVar::discrete(atoms)?
            }
            RandVar::Discrete(Discrete::Grid { start, step, n }) => {
                if c.is_positive() {
                    RandVar::Discrete(Discrete::Grid {
                        start: start * c,
                        step: step * c,
                        n: *n,
                    })
                } else {
                    let last = start + step * Rat::from_integer(BigInt::from(n - 1));
                    RandVar::Discrete(Discrete::Grid {
                        start: last * c,
                        step: -(step * c),
                        n: *n,
                    })
                }
            }
            RandVar::Continuous(t) => {
                if c.is_positive() {
                    RandVar::Continuous(TruncContinuous {
                        lo: &t.lo * c,
                        hi: &t.hi * c,
                        mass_lo: t.mass_lo.clone(),
                        mass_hi: t.mass_hi.clone(),
                        knots: t.knots.iter().map(|k| k * c).collect(),
                        pieces: t.pieces.iter().map(|p| p.scale_arg(c)).collect(),
                    })
                } else {
                    // Pr(cX <= z) = Pr(X >= z / c) = 1 - F(z / c) on the interior.
                    RandVar::Continuous(TruncContinuous {
                        lo: &t.hi * c,
                        hi: &t.lo * c,
                        mass_lo: t.mass_hi.clone(),
                        mass_hi: t.mass_lo.clone(),
                        knots: t.knots.iter().rev().map(|k| k * c).collect(),
                        pieces: t.pieces.iter().rev().map(|p| p.scale_arg(c).complement()).collect(),
                    })
                }
            }
        })
    }

    /// Upper bound on the CDF's slope between discontinuities.
    pub fn density_bound(&self) -> Option<Rat> {
        match self {
            RandVar::Continuous(c) => Some(c.density_bound()),
            RandVar::Discrete(_) => None,
        }
    }

    /// Inverse-CDF sample for a uniform draw `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> Rat {
        match self {
            RandVar::Discrete(Discrete::Atoms { values, cum }) => {
                let k = cum.partition_point(|c| rat::to_f64(c) <= u).min(values.len() - 1);
                values[k].clone()
            }
            RandVar::Discrete(Discrete::Grid { start, step, n }) => {
                let k = ((u * *n as f64) as u64).min(n - 1);
                start + step * Rat::from_integer(BigInt::from(k))
            }
            RandVar::Continuous(c) => c.sample(u),
        }
    }

    /// Mean, exact for discrete and piecewise-polynomial variables.
    pub fn mean(&self) -> Rat {
        match self {
            RandVar::Discrete(Discrete::Grid { start, step, n }) => {
                start + step * Rat::new(BigInt::from(n - 1), BigInt::from(2))
            }
            RandVar::Discrete(_) => {
                let n = self.atom_count().expect("discrete");
                (0..n)
                    .map(|k| {
                        let (v, p) = self.atom(k).expect("in range");
                        v * p
                    })
                    .sum()
            }
            RandVar::Continuous(c) => c.mean(),
        }
    }
}

impl TruncContinuous {
    fn validate(&self) -> Result<()> {
        if self.lo >= self.hi {
            return Err(Error::Distribution("support must have positive width".into()));
        }
        if !self.mass_lo.is_positive() || !self.mass_hi.is_positive() {
            return Err(Error::Distribution(
                "continuous variables need positive probability at both support endpoints".into(),
            ));
        }
        if self.knots.len() != self.pieces.len() + 1
            || self.knots[0] != self.lo
            || self.knots[self.knots.len() - 1] != self.hi
            || self.knots.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Distribution(
                "knots must increase from lo to hi, one more than pieces".into(),
            ));
        }
        if self.pieces.iter().any(|p| p.degree() > 2) {
            return Err(Error::Distribution(
                "interior CDF pieces are limited to degree two".into(),
            ));
        }
        if self.pieces[0].eval(&self.lo) != self.mass_lo {
            return Err(Error::Distribution(
                "interior CDF must start at the lower endpoint mass".into(),
            ));
        }
        let last = &self.pieces[self.pieces.len() - 1];
        if last.eval(&self.hi) != Rat::one() - &self.mass_hi {
            return Err(Error::Distribution(
                "interior CDF must end at one minus the upper endpoint mass".into(),
            ));
        }
        for i in 1..self.pieces.len() {
            if self.pieces[i - 1].eval(&self.knots[i]) != self.pieces[i].eval(&self.knots[i]) {
                return Err(Error::Distribution("interior CDF is discontinuous at a knot".into()));
            }
        }
        for (i, p) in self.pieces.iter().enumerate() {
            // Derivative is at most linear: checking both ends proves monotonicity.
            let d = p.derivative();
            if d.eval(&self.knots[i]).is_negative() || d.eval(&self.knots[i + 1]).is_negative() {
                return Err(Error::Distribution("CDF decreases".into()));
            }
        }
        Ok(())
    }

    fn piece_index(&self, z: &Rat) -> usize {
        let k = self.knots.partition_point(|b| b <= z);
        k.clamp(1, self.pieces.len()) - 1
    }

    pub fn cdf(&self, z: &Rat) -> Rat {
        if z < &self.lo {
            Rat::zero()
        } else if z >= &self.hi {
            Rat::one()
        } else if z == &self.lo {
            self.mass_lo.clone()
        } else {
            self.pieces[self.piece_index(z)].eval(z)
        }
    }

    pub fn density_bound(&self) -> Rat {
        self.pieces
            .iter()
            .enumerate()
            .flat_map(|(i, p)| {
                let d = p.derivative();
                [d.eval(&self.knots[i]).abs(), d.eval(&self.knots[i + 1]).abs()]
            })
            .max()
            .unwrap_or_else(Rat::zero)
    }

    fn sample(&self, u: f64) -> Rat {
        if u < rat::to_f64(&self.mass_lo) {
            return self.lo.clone();
        }
        if u >= 1.0 - rat::to_f64(&self.mass_hi) {
            return self.hi.clone();
        }
        let (mut a, mut b) = (rat::to_f64(&self.lo), rat::to_f64(&self.hi));
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let k = self.piece_index(&rat::from_f64(m));
            if self.pieces[k].eval_f64(m) < u {
                a = m;
            } else {
                b = m;
            }
        }
        rat::from_f64(0.5 * (a + b))
    }

    /// `E[X] = hi - integral_lo^hi F(z) dz`.
    fn mean(&self) -> Rat {
        let mut integral = Rat::zero();
        for (i, p) in self.pieces.iter().enumerate() {
            let anti = |z: &Rat| {
                p.0.iter()
                    .enumerate()
                    .map(|(k, c)| c * rat::pow(z, k as u32 + 1) / Rat::from_integer(BigInt::from(k + 1)))
                    .sum::<Rat>()
            };
            integral += anti(&self.knots[i + 1]) - anti(&self.knots[i]);
        }
        &self.hi - integral
    }
}

/// CDF of a random variable seen as an oracle on its support.
pub struct CdfOracle<'a>(pub &'a RandVar);

impl FnOracle for CdfOracle<'_> {
    fn domain(&self) -> Interval {
        self.0.support()
    }
    fn eval(&self, x: &Rat) -> Rat {
        self.0.cdf(x)
    }
    fn eval_left(&self, x: &Rat) -> Rat {
        self.0.cdf_left(x)
    }
    fn next_jump(&self, x: &Rat) -> Option<Rat> {
        self.0.next_jump(x)
    }
    fn lipschitz(&self) -> Option<Rat> {
        self.0.density_bound()
    }
}

/// Right-continuous step function: zero below `xs[0]`, `levels[i]` on
/// `[xs[i], xs[i+1])` and `levels[last]` from `xs[last]` on.
///
/// It is the CDF of a discrete surrogate with atoms `xs[i]` and masses
/// `levels[i] - levels[i-1]`, and dominates the CDF it approximates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCdf {
    #[serde(with = "rat::serde_rat_vec")]
    xs: Vec<Rat>,
    #[serde(with = "rat::serde_rat_vec")]
    levels: Vec<Rat>,
    /// Claimed factor `k` in `F <= F~ <= k F`.
    #[serde(with = "rat::serde_rat")]
    pub k: Rat,
}

impl StepCdf {
    pub fn new(xs: Vec<Rat>, levels: Vec<Rat>, k: Rat) -> Result<Self> {
        if xs.is_empty() || xs.len() != levels.len() {
            return Err(Error::Domain("step CDF needs matching, nonempty breakpoints".into()));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("step breakpoints must increase".into()));
        }
        if !levels[0].is_positive() || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("step levels must be positive and increasing".into()));
        }
        Ok(StepCdf { xs, levels, k })
    }

    /// Exact CDF of a discrete variable.
    pub fn exact(x: &RandVar, limit: u64) -> Result<Self> {
        let atoms = x
            .atoms(limit)
            .ok_or_else(|| Error::Precondition("exact step CDF needs an explicit discrete variable".into()))?;
        let mut acc = Rat::zero();
        let mut xs = Vec::with_capacity(atoms.len());
        let mut levels = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            acc += p;
            xs.push(v);
            levels.push(acc.clone());
        }
        StepCdf::new(xs, levels, Rat::one())
    }

    pub fn xs(&self) -> &[Rat] {
        &self.xs
    }

    pub fn levels(&self) -> &[Rat] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn support(&self) -> Interval {
        Interval {
            lo: self.xs[0].clone(),
            hi: self.xs[self.xs.len() - 1].clone(),
        }
    }

    pub fn total(&self) -> Rat {
        self.levels[self.levels.len() - 1].clone()
    }

    pub fn eval(&self, z: &Rat) -> Rat {
        let k = self.xs.partition_point(|b| b <= z);
        if k == 0 {
            Rat::zero()
        } else {
            self.levels[k - 1].clone()
        }
    }

    pub fn eval_left(&self, z: &Rat) -> Rat {
        let k = self.xs.partition_point(|b| b < z);
        if k == 0 {
            Rat::zero()
        } else {
            self.levels[k - 1].clone()
        }
    }

    pub fn next_jump(&self, z: &Rat) -> Option<Rat> {
        let k = self.xs.partition_point(|b| b <= z);
        self.xs.get(k).cloned()
    }

    /// Surrogate atoms `(x_i, level_i - level_{i-1})`.
    pub fn masses(&self) -> Vec<(Rat, Rat)> {
        let mut prev = Rat::zero();
        self.xs
            .iter()
            .zip(&self.levels)
            .map(|(x, l)| {
                let a = l - &prev;
                prev = l.clone();
                (x.clone(), a)
            })
            .collect()
    }

    pub fn max_bits(&self) -> u64 {
        self.xs
            .iter()
            .chain(self.levels.iter())
            .map(rat::bit_size)
            .max()
            .unwrap_or(0)
    }
}

/// Compresses a nondecreasing right-continuous positive oracle into a step
/// function within factor `k` of it.
pub fn compress_step(phi: &dyn FnOracle, k: &Rat) -> Result<StepCdf> {
    let range = phi.domain();
    let w = apx_set_inc(phi, &range, k)?;
    let n = w.len();
    let mut xs: Vec<Rat> = Vec::with_capacity(n);
    let mut levels: Vec<Rat> = Vec::with_capacity(n);
    for i in 0..n {
        let level = if i + 1 < n {
            phi.eval_left(&w[i + 1])
        } else {
            phi.eval(&w[i])
        };
        // A step that does not rise adds no mass; the previous step covers it.
        if levels.last() == Some(&level) {
            continue;
        }
        xs.push(w[i].clone());
        levels.push(level);
    }
    StepCdf::new(xs, levels, k.clone())
}

/// Step CDF `F~` with `F <= F~ <= k F` for the CDF `F` of `x`.
pub fn compress_cdf(x: &RandVar, k: &Rat) -> Result<StepCdf> {
    if *k <= Rat::one() {
        return Err(Error::Precondition("approximation factor must exceed one".into()));
    }
    compress_step(&CdfOracle(x), k)
}
