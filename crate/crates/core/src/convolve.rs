//! Compressed CDF of a weighted sum of independent random variables.

use crate::approx::FnOracle;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::randvar::{compress_step, RandVar, StepCdf};
use crate::rat::{self, Rat};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Explicit atoms are used for the mixture evaluation up to this many atoms.
const EXPLICIT_ATOMS: u64 = 4096;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Convolution {
    pub cdf: StepCdf,
    /// Per-step compression factor.
    #[serde(with = "rat::serde_rat")]
    pub k_step: Rat,
    /// Input indices in the order they were folded in (zero weights skipped).
    pub order: Vec<usize>,
}

/// CDF of `S + Y` where `S` has the step CDF `prev` (a discrete surrogate)
/// and `Y` is independent.
struct Mixture<'a> {
    prev: &'a StepCdf,
    masses: Vec<(Rat, Rat)>,
    next: &'a RandVar,
    next_atoms: Option<Vec<(Rat, Rat)>>,
    domain: Interval,
}

impl<'a> Mixture<'a> {
    fn new(prev: &'a StepCdf, next: &'a RandVar) -> Self {
        let masses = prev.masses();
        let next_atoms = next.atoms(EXPLICIT_ATOMS);
        let domain = prev.support().add(&next.support());
        Mixture {
            prev,
            masses,
            next,
            next_atoms,
            domain,
        }
    }

    fn value(&self, z: &Rat, left: bool) -> Rat {
        match &self.next_atoms {
            // Sum over the smaller side.
            Some(atoms) if atoms.len() < self.masses.len() => atoms
                .iter()
                .map(|(g, p)| {
                    let s = z - g;
                    p * if left {
                        self.prev.eval_left(&s)
                    } else {
                        self.prev.eval(&s)
                    }
                })
                .sum(),
            _ => self
                .masses
                .iter()
                .map(|(b, a)| {
                    let s = z - b;
                    a * if left {
                        self.next.cdf_left(&s)
                    } else {
                        self.next.cdf(&s)
                    }
                })
                .sum(),
        }
    }
}

impl FnOracle for Mixture<'_> {
    fn domain(&self) -> Interval {
        self.domain.clone()
    }
    fn eval(&self, z: &Rat) -> Rat {
        self.value(z, false)
    }
    fn eval_left(&self, z: &Rat) -> Rat {
        self.value(z, true)
    }
    fn next_jump(&self, z: &Rat) -> Option<Rat> {
        self.masses
            .iter()
            .filter_map(|(b, _)| self.next.next_jump(&(z - b)).map(|j| j + b))
            .min()
    }
    fn lipschitz(&self) -> Option<Rat> {
        let d = self.next.density_bound()?;
        Some(d * self.prev.total())
    }
}

/// Per-variable factor for folding `count` variables within overall `k`,
/// given CDF oracles that are themselves within `oracle_k`.
pub fn step_factor(k: &Rat, count: usize, oracle_k: &Rat) -> Result<Rat> {
    let n = count as u32;
    let lost = rat::pow(oracle_k, n);
    if lost >= *k {
        return Err(Error::Precondition(
            "oracle approximation factor leaves no room for compression".into(),
        ));
    }
    Ok(rat::lower_root(&(k / lost), n))
}

/// `F~` with `F <= F~ <= k F` for the CDF `F` of `sum_i weights[i] * xs[i]`.
pub fn compress_convolution(xs: &[RandVar], weights: &[Rat], k: &Rat) -> Result<Convolution> {
    if xs.len() != weights.len() {
        return Err(Error::Precondition("one weight per variable is required".into()));
    }
    if *k <= Rat::one() {
        return Err(Error::Precondition("approximation factor must exceed one".into()));
    }
    let mut order = Vec::new();
    let mut scaled = Vec::new();
    for (i, (x, c)) in xs.iter().zip(weights).enumerate() {
        if !c.is_zero() {
            order.push(i);
            scaled.push(x.transform(c)?);
        }
    }
    if scaled.is_empty() {
        return Err(Error::Precondition("all weights are zero".into()));
    }
    let k_step = step_factor(k, scaled.len(), &Rat::one())?;
    let cdf = fold(&scaled, &k_step)?;
    let claim = rat::pow(&k_step, scaled.len() as u32);
    Ok(Convolution {
        cdf: StepCdf::new(cdf.xs().to_vec(), cdf.levels().to_vec(), claim)?,
        k_step,
        order,
    })
}

/// Folds already-weighted variables left to right, compressing each partial
/// sum within `k_step`.
pub fn fold(vars: &[RandVar], k_step: &Rat) -> Result<StepCdf> {
    let mut acc = crate::randvar::compress_cdf(&vars[0], k_step)?;
    for y in &vars[1..] {
        let mix = Mixture::new(&acc, y);
        acc = compress_step(&mix, k_step)?;
    }
    Ok(acc)
}

/// Exact CDF of a weighted sum of discrete variables by enumeration.
pub fn brute_force_cdf(xs: &[RandVar], weights: &[Rat], limit: u64) -> Result<StepCdf> {
    let mut dist: Vec<(Rat, Rat)> = vec![(Rat::zero(), Rat::one())];
    for (x, c) in xs.iter().zip(weights) {
        let atoms = x
            .atoms(limit)
            .ok_or_else(|| Error::Precondition("enumeration needs small discrete variables".into()))?;
        let mut next = Vec::with_capacity(dist.len() * atoms.len());
        for (s, p) in &dist {
            for (v, q) in &atoms {
                next.push((s + c * v, p * q));
            }
        }
        if next.len() as u64 > limit {
            return Err(Error::Precondition("too many outcomes to enumerate".into()));
        }
        dist = next;
    }
    let y = RandVar::discrete(dist)?;
    StepCdf::exact(&y, limit)
}
