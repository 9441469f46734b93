//! Two-sided reference for instances with continuous noise or smooth costs.
//!
//! Two backward recursions on a state grid bound the optimal value:
//!
//! * upper: chords of convex costs, noise cells replaced by their endpoint
//!   two-point laws that keep the cell mean (dominates by convexity), value
//!   functions interpolated between exact grid values;
//! * lower: tangent envelopes of convex costs, noise cells collapsed to their
//!   conditional means (Jensen), value functions replaced by tangent lines
//!   read off the LP duals.
//!
//! Both recursions solve their own stage LPs exactly, so
//! `lower <= z*(I_1) <= upper` holds without floating-point slack.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::lp::{solve_lp, LpProblem, Sense, Status};
use crate::model::{CostFn, DpInstance, StageModel};
use crate::pwl::PwlConvex;
use crate::randvar::RandVar;
use crate::rat::Rat;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BracketOptions {
    /// Grid points per state interval.
    pub states: usize,
    /// Cells per continuous noise variable.
    pub cells: usize,
}

impl Default for BracketOptions {
    fn default() -> Self {
        BracketOptions { states: 33, cells: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bracket {
    pub lower: Rat,
    pub upper: Rat,
}

impl Bracket {
    pub fn gap(&self) -> Rat {
        &self.upper - &self.lower
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
}

fn grid(dom: &Interval, n: usize) -> Vec<Rat> {
    if dom.is_point() || n < 2 {
        return vec![dom.lo.clone()];
    }
    let step = dom.width() / Rat::from_integer(BigInt::from(n - 1));
    (0..n)
        .map(|k| &dom.lo + &step * Rat::from_integer(BigInt::from(k)))
        .collect()
}

/// Convex cost bounded from the chosen side.
fn cost_bound(c: &CostFn, n: usize, side: Side) -> Result<PwlConvex> {
    match c {
        CostFn::Pwl(p) | CostFn::OraclePwl(p) => Ok(p.clone()),
        CostFn::Quadratic(q) => {
            let xs = grid(&q.domain, n);
            match side {
                Side::Upper => PwlConvex::new(xs.iter().map(|x| (x.clone(), quad(q, x))).collect()),
                Side::Lower => {
                    let two = Rat::from_integer(BigInt::from(2));
                    let lines: Vec<(Rat, Rat)> = xs
                        .iter()
                        .map(|x| {
                            let s = &two * &q.a * (x - &q.b);
                            let b = quad(q, x) - &s * x;
                            (s, b)
                        })
                        .collect();
                    PwlConvex::from_lines(&lines, &q.domain)
                }
            }
        }
        CostFn::Custom(_) => Err(Error::Precondition(
            "the bracketing reference needs explicit or quadratic costs".into(),
        )),
    }
}

fn quad(q: &crate::approx::Quadratic, x: &Rat) -> Rat {
    let d = x - &q.b;
    &q.a * &d * &d + &q.c
}

/// `integral_a^b z^k dF(z)` over the continuous part of a piecewise-polynomial CDF.
fn cell_moment(d: &crate::randvar::TruncContinuous, a: &Rat, b: &Rat, k: u32) -> Rat {
    let mut cuts: Vec<Rat> = d.knots.iter().filter(|z| *z > a && *z < b).cloned().collect();
    cuts.insert(0, a.clone());
    cuts.push(b.clone());
    let mut total = Rat::zero();
    for w in cuts.windows(2) {
        let mid = (&w[0] + &w[1]) / Rat::from_integer(BigInt::from(2));
        let idx = d.knots.partition_point(|z| z <= &mid).clamp(1, d.pieces.len()) - 1;
        for (j, c) in d.pieces[idx].0.iter().enumerate().skip(1) {
            let deg = j as u32 + k;
            let coef = c * Rat::from_integer(BigInt::from(j)) / Rat::from_integer(BigInt::from(deg));
            total += coef * (crate::rat::pow(&w[1], deg) - crate::rat::pow(&w[0], deg));
        }
    }
    total
}

/// Discrete law bounding `d` from the chosen side under convex integrands.
fn discretize(d: &RandVar, cells: usize, side: Side) -> Result<Vec<(Rat, Rat)>> {
    let RandVar::Continuous(c) = d else {
        return d
            .atoms(100_000)
            .ok_or_else(|| Error::Precondition("too many atoms for the bracketing reference".into()));
    };
    let mut out = vec![(c.lo.clone(), c.mass_lo.clone()), (c.hi.clone(), c.mass_hi.clone())];
    let edges = grid(&Interval::new(c.lo.clone(), c.hi.clone())?, cells + 1);
    for w in edges.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let m = cell_moment(c, a, b, 0);
        if m.is_zero() {
            continue;
        }
        let mean = cell_moment(c, a, b, 1) / &m;
        match side {
            Side::Lower => out.push((mean, m)),
            Side::Upper => {
                let width = b - a;
                out.push((a.clone(), &m * (b - &mean) / &width));
                out.push((b.clone(), &m * (&mean - a) / &width));
            }
        }
    }
    Ok(out)
}

/// Law of `w . D` from per-variable discrete laws, merging equal values.
fn weighted_sum(laws: &[Vec<(Rat, Rat)>], w: &[Rat]) -> Vec<(Rat, Rat)> {
    let mut acc: BTreeMap<Rat, Rat> = BTreeMap::new();
    acc.insert(Rat::zero(), Rat::one());
    for (law, c) in laws.iter().zip(w) {
        if c.is_zero() {
            continue;
        }
        let mut next = BTreeMap::new();
        for (s, p) in &acc {
            for (v, q) in law {
                if q.is_zero() {
                    continue;
                }
                *next.entry(s + c * v).or_insert_with(Rat::zero) += p * q;
            }
        }
        acc = next;
    }
    acc.into_iter().collect()
}

/// `u -> sum_s p_s psi(u + v_s)` on the arguments keeping every shift in the domain.
fn expected(psi: &PwlConvex, law: &[(Rat, Rat)]) -> Result<PwlConvex> {
    let dom = psi.domain();
    let vmin = law.iter().map(|(v, _)| v).min().expect("nonempty law");
    let vmax = law.iter().map(|(v, _)| v).max().expect("nonempty law");
    let lo = &dom.lo - vmin;
    let hi = &dom.hi - vmax;
    if lo > hi {
        return Err(Error::Precondition("noise range exceeds the cost domain".into()));
    }
    let mut xs: Vec<Rat> = law
        .iter()
        .flat_map(|(v, _)| psi.xs().iter().map(move |x| x - v))
        .filter(|u| *u >= lo && *u <= hi)
        .collect();
    xs.push(lo);
    xs.push(hi);
    xs.sort();
    xs.dedup();
    let pts = xs
        .into_iter()
        .map(|u| {
            let v: Rat = law.iter().map(|(s, p)| psi.value(&(&u + s)) * p).sum();
            (u, v)
        })
        .collect();
    Ok(PwlConvex::new(pts)?.simplify())
}

struct StageLp {
    lp: LpProblem,
    /// `rhs = r0 + r1 * I` per row.
    r0: Vec<Rat>,
    r1: Vec<Rat>,
}

fn stage_lp(st: &StageModel, g: Option<&PwlConvex>, z: &PwlConvex) -> StageLp {
    let p = st.action_dim();
    let tau = p;
    let w = p + 1;
    let v = p + 2;
    let n = p + 3;
    let mut obj = vec![Rat::zero(); n];
    obj[tau] = Rat::one();
    obj[v] = Rat::one();
    if g.is_some() {
        obj[w] = Rat::one();
    }
    let mut lp = LpProblem::new(obj);
    for j in [tau, w, v] {
        lp.set_bounds(j, None, None);
    }
    if g.is_none() {
        lp.set_bounds(w, Some(Rat::zero()), None);
    }
    let (mut r0, mut r1) = (Vec::new(), Vec::new());
    let mut row = |lp: &mut LpProblem, coefs: Vec<Rat>, a: Rat, b: Rat| {
        lp.add_row(coefs, Sense::Ge, a.clone());
        r0.push(a);
        r1.push(b);
    };
    for (i, a) in st.a.iter().enumerate() {
        let mut c = vec![Rat::zero(); n];
        c[..p].clone_from_slice(a);
        row(&mut lp, c, st.b[i].clone(), st.delta_b[i].clone());
    }
    for h in &st.cost_state.planes {
        let mut c = vec![Rat::zero(); n];
        for (j, a) in h.coef_action.iter().enumerate() {
            c[j] = -a;
        }
        c[tau] = Rat::one();
        row(&mut lp, c, h.constant.clone(), h.coef_state.clone());
    }
    let mut epi = |lp: &mut LpProblem, f: &PwlConvex, col: usize, cs: &Rat, cx: &[Rat]| {
        for (s, b) in f.to_lines() {
            let mut c = vec![Rat::zero(); n];
            for (j, a) in cx.iter().enumerate() {
                c[j] = -(&s * a);
            }
            c[col] = Rat::one();
            row(lp, c, b, &s * cs);
        }
    };
    if let Some(g) = g {
        epi(&mut lp, g, w, &st.sigma_state, &st.sigma_action);
    }
    epi(&mut lp, z, v, &st.theta_state, &st.theta_action);
    StageLp { lp, r0, r1 }
}

/// Value and supporting line `(slope, intercept)` of the stage LP at `state`.
fn solve_stage(s: &StageLp, state: &Rat) -> Result<(Rat, Rat, Rat)> {
    let mut lp = s.lp.clone();
    for (i, row) in lp.rows.iter_mut().enumerate() {
        row.rhs = &s.r0[i] + &s.r1[i] * state;
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(Error::Infeasible),
        Status::Unbounded => return Err(Error::Unbounded),
    }
    let slope: Rat = sol.duals.iter().zip(&s.r1).map(|(y, r)| y * r).sum();
    let intercept: Rat = sol.duals.iter().zip(&s.r0).map(|(y, r)| y * r).sum();
    if &intercept + &slope * state != sol.value {
        return Err(Error::Contract(
            "dual certificate does not reproduce the stage value".into(),
        ));
    }
    Ok((sol.value, slope, intercept))
}

fn recursion(inst: &DpInstance, opts: BracketOptions, side: Side) -> Result<Rat> {
    let horizon = inst.horizon();
    let mut next = cost_bound(&inst.terminal, opts.states, side)?.restrict(&inst.terminal_states)?;
    for t in (1..=horizon).rev() {
        let st = &inst.stages[t - 1];
        let laws: Vec<_> = st
            .noise
            .iter()
            .map(|d| discretize(d, opts.cells, side))
            .collect::<Result<_>>()?;
        let z = expected(&next, &weighted_sum(&laws, &st.theta_noise))?;
        let g = match &st.cost_noise {
            Some(c) => Some(expected(
                &cost_bound(c, opts.states, side)?,
                &weighted_sum(&laws, &st.sigma_noise),
            )?),
            None => None,
        };
        let lp = stage_lp(st, g.as_ref(), &z);
        if t == 1 {
            return Ok(solve_stage(&lp, &inst.initial_state)?.0);
        }
        let pts = grid(&st.states, opts.states);
        let solved: Vec<(Rat, Rat, Rat)> = pts.iter().map(|i| solve_stage(&lp, i)).collect::<Result<_>>()?;
        next = match side {
            Side::Upper => PwlConvex::new(pts.iter().cloned().zip(solved.into_iter().map(|s| s.0)).collect())?,
            Side::Lower => {
                let lines: Vec<(Rat, Rat)> = solved.into_iter().map(|(_, s, b)| (s, b)).collect();
                PwlConvex::from_lines(&lines, &st.states)?
            }
        };
    }
    unreachable!("horizon is positive")
}

/// Rigorous lower and upper bounds on the optimal value at the initial state.
pub fn bracket(inst: &DpInstance, opts: BracketOptions) -> Result<Bracket> {
    let (lower, upper) = rayon::join(
        || recursion(inst, opts, Side::Lower),
        || recursion(inst, opts, Side::Upper),
    );
    Ok(Bracket {
        lower: lower?,
        upper: upper?,
    })
}
