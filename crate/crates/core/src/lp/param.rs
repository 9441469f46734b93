//! Parametric dual simplex for the stage problem.
//!
//! The stage problem minimizes `tau_I + tau_G + tau_Z` over `x >= 0` and the
//! three epigraph variables, where `tau_I` dominates the planes of the
//! state-action cost, `tau_G` the expected noise cost and `tau_Z` the expected
//! cost-to-go. Only the right-hand side depends on the state `I`, so a basis
//! stays optimal on an interval of states and the optimal value is
//! piecewise linear. [`sweep`] walks the state space from left to right,
//! recording the exact value function and an affine optimal action per
//! basis interval. Epigraph rows of the univariate functions are generated
//! lazily as cuts and discarded when slack.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::StageModel;
use crate::pwl::PwlConvex;
use crate::rat::Rat;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

const PIVOT_LIMIT: usize = 1_000_000;
const DEGENERATE_STREAK: usize = 64;

/// Stage data together with the two univariate functions of the objective.
pub struct StageProblem<'a> {
    pub stage: &'a StageModel,
    /// Expected noise cost as a function of `sigma_state I + sigma_action . x`.
    pub g: Option<&'a PwlConvex>,
    /// Expected cost-to-go as a function of `theta_state I + theta_action . x`.
    pub z: &'a PwlConvex,
}

/// Optimal action `x(I) = offset + slope * I` for `I` in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyPiece {
    #[serde(with = "crate::rat::serde_rat")]
    pub lo: Rat,
    #[serde(with = "crate::rat::serde_rat")]
    pub hi: Rat,
    #[serde(with = "crate::rat::serde_rat_vec")]
    pub offset: Vec<Rat>,
    #[serde(with = "crate::rat::serde_rat_vec")]
    pub slope: Vec<Rat>,
}

impl PolicyPiece {
    pub fn action(&self, state: &Rat) -> Vec<Rat> {
        self.offset
            .iter()
            .zip(&self.slope)
            .map(|(a, b)| a + b * state)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct StageSweep {
    /// Exact optimal value as a function of the state.
    pub value: PwlConvex,
    pub policy: Vec<PolicyPiece>,
    /// Number of reoptimizations.
    pub solves: usize,
    pub pivots: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    /// Feasibility exactly at the parameter.
    At,
    /// Feasibility on a right neighbourhood of the parameter.
    Right,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Fixed,
    Cut,
}

/// Original row `a . v >= r0 + r1 I`.
struct OrigRow {
    a: Vec<Rat>,
    r0: Rat,
    r1: Rat,
    kind: Kind,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Col {
    Structural,
    Surplus(usize),
}

/// Basic variable `v_basic + sum_j coef[j] v_j = b0 + b1 I`.
struct TRow {
    coef: Vec<Rat>,
    b0: Rat,
    b1: Rat,
    basic: usize,
}

/// Affine value `c0 + c1 I`, evaluated lexicographically to the right.
#[derive(Clone)]
struct Aff(Rat, Rat);

impl Aff {
    fn at(&self, i: &Rat) -> Rat {
        &self.0 + &self.1 * i
    }
}

fn lex_negative(v: &Rat, slope: &Rat, side: Side) -> bool {
    v.is_negative() || (side == Side::Right && v.is_zero() && slope.is_negative())
}

/// One univariate epigraph: `tau >= F(c_state I + c_action . x)`.
struct Epi<'a> {
    f: &'a PwlConvex,
    c_state: &'a Rat,
    c_action: &'a [Rat],
    tau: usize,
}

/// `(slope, intercept)` of the piece of `f` active at `u` when moving with `du`.
fn piece(f: &PwlConvex, u: &Rat, du: &Rat) -> (Rat, Rat) {
    let xs = f.xs();
    let vs = f.vs();
    if xs.len() == 1 {
        return (Rat::zero(), vs[0].clone());
    }
    let k = if du.is_negative() {
        xs.partition_point(|b| b < u)
    } else {
        xs.partition_point(|b| b <= u)
    };
    let k = k.clamp(1, xs.len() - 1);
    let s = (&vs[k] - &vs[k - 1]) / (&xs[k] - &xs[k - 1]);
    let b = &vs[k - 1] - &s * &xs[k - 1];
    (s, b)
}

struct Engine<'a> {
    n_s: usize,
    cost: Vec<Rat>,
    cols: Vec<Col>,
    orig: Vec<Option<OrigRow>>,
    rows: Vec<TRow>,
    d: Vec<Rat>,
    z: Aff,
    epis: Vec<Epi<'a>>,
    solves: usize,
    pivots: usize,
}

impl<'a> Engine<'a> {
    fn new(prob: &'a StageProblem<'a>) -> Self {
        let s = prob.stage;
        let p = s.action_dim();
        let n_s = p + 3;
        let mut cost = vec![Rat::zero(); n_s];
        cost[p] = Rat::one();
        cost[p + 2] = Rat::one();
        let mut epis = Vec::new();
        if let Some(g) = prob.g {
            cost[p + 1] = Rat::one();
            epis.push(Epi {
                f: g,
                c_state: &s.sigma_state,
                c_action: &s.sigma_action,
                tau: p + 1,
            });
        }
        epis.push(Epi {
            f: prob.z,
            c_state: &s.theta_state,
            c_action: &s.theta_action,
            tau: p + 2,
        });
        let mut eng = Engine {
            n_s,
            d: cost.clone(),
            cost,
            cols: vec![Col::Structural; n_s],
            orig: Vec::new(),
            rows: Vec::new(),
            z: Aff(Rat::zero(), Rat::zero()),
            epis,
            solves: 0,
            pivots: 0,
        };
        for (i, row) in s.a.iter().enumerate() {
            let mut a = row.clone();
            a.extend([Rat::zero(), Rat::zero(), Rat::zero()]);
            eng.add_row(OrigRow {
                a,
                r0: s.b[i].clone(),
                r1: s.delta_b[i].clone(),
                kind: Kind::Fixed,
            });
        }
        for h in &s.cost_state.planes {
            let mut a: Vec<Rat> = h.coef_action.iter().map(|c| -c).collect();
            a.extend([Rat::one(), Rat::zero(), Rat::zero()]);
            eng.add_row(OrigRow {
                a,
                r0: h.constant.clone(),
                r1: h.coef_state.clone(),
                kind: Kind::Fixed,
            });
        }
        eng
    }

    fn add_row(&mut self, row: OrigRow) {
        let id = self.orig.len();
        let col = self.cols.len();
        self.cols.push(Col::Surplus(id));
        self.d.push(Rat::zero());
        self.cost.push(Rat::zero());
        for r in self.rows.iter_mut() {
            r.coef.push(Rat::zero());
        }
        let mut coef: Vec<Rat> = vec![Rat::zero(); col + 1];
        for (j, a) in row.a.iter().enumerate() {
            coef[j] = -a;
        }
        coef[col] = Rat::one();
        let mut t = TRow {
            coef,
            b0: -&row.r0,
            b1: -&row.r1,
            basic: col,
        };
        for r in &self.rows {
            let f = t.coef[r.basic].clone();
            if f.is_zero() {
                continue;
            }
            for (c, v) in t.coef.iter_mut().zip(&r.coef) {
                if !v.is_zero() {
                    *c -= &f * v;
                }
            }
            t.b0 -= &f * &r.b0;
            t.b1 -= &f * &r.b1;
        }
        self.rows.push(t);
        self.orig.push(Some(row));
    }

    /// Drops cut rows whose surplus is basic and positive at `at`.
    fn drop_slack_cuts(&mut self, at: &Rat) {
        let mut r = 0;
        while r < self.rows.len() {
            let col = self.rows[r].basic;
            let removable = match self.cols[col] {
                Col::Surplus(id) => {
                    self.orig[id].as_ref().is_some_and(|o| o.kind == Kind::Cut)
                        && (&self.rows[r].b0 + &self.rows[r].b1 * at).is_positive()
                }
                Col::Structural => false,
            };
            if !removable {
                r += 1;
                continue;
            }
            if let Col::Surplus(id) = self.cols[col] {
                self.orig[id] = None;
            }
            self.rows.remove(r);
            for t in self.rows.iter_mut() {
                t.coef.remove(col);
                if t.basic > col {
                    t.basic -= 1;
                }
            }
            self.cols.remove(col);
            self.d.remove(col);
            self.cost.remove(col);
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let inv = Rat::one() / &self.rows[r].coef[q];
        {
            let t = &mut self.rows[r];
            for v in t.coef.iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            t.b0 *= &inv;
            t.b1 *= &inv;
            t.basic = q;
        }
        let prow = std::mem::replace(
            &mut self.rows[r],
            TRow {
                coef: Vec::new(),
                b0: Rat::zero(),
                b1: Rat::zero(),
                basic: q,
            },
        );
        let nz: Vec<usize> = (0..prow.coef.len()).filter(|&j| !prow.coef[j].is_zero()).collect();
        for t in self.rows.iter_mut() {
            if t.coef.is_empty() {
                continue;
            }
            let f = t.coef[q].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                let delta = &f * &prow.coef[j];
                t.coef[j] -= delta;
            }
            t.b0 -= &f * &prow.b0;
            t.b1 -= &f * &prow.b1;
        }
        let f = self.d[q].clone();
        if !f.is_zero() {
            for &j in &nz {
                let delta = &f * &prow.coef[j];
                self.d[j] -= delta;
            }
            self.z.0 += &f * &prow.b0;
            self.z.1 += &f * &prow.b1;
        }
        self.rows[r] = prow;
        self.pivots += 1;
    }

    fn reoptimize(&mut self, at: &Rat, side: Side) -> Result<()> {
        self.solves += 1;
        let mut streak = 0;
        loop {
            if self.pivots >= PIVOT_LIMIT {
                return Err(Error::IterationLimit(PIVOT_LIMIT));
            }
            let bland = streak >= DEGENERATE_STREAK;
            let mut leave: Option<(usize, Rat)> = None;
            for (i, t) in self.rows.iter().enumerate() {
                let v = &t.b0 + &t.b1 * at;
                if !lex_negative(&v, &t.b1, side) {
                    continue;
                }
                let better = match &leave {
                    None => true,
                    Some((k, w)) => {
                        if bland {
                            t.basic < self.rows[*k].basic
                        } else {
                            v < *w || (v == *w && t.b1 < self.rows[*k].b1)
                        }
                    }
                };
                if better {
                    leave = Some((i, v));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(());
            };
            let row = &self.rows[r];
            let mut enter: Option<(usize, Rat)> = None;
            for (j, a) in row.coef.iter().enumerate() {
                if !a.is_negative() {
                    continue;
                }
                let ratio = &self.d[j] / -a;
                if enter.as_ref().is_none_or(|(_, best)| ratio < *best) {
                    enter = Some((j, ratio));
                }
            }
            let Some((q, ratio)) = enter else {
                return Err(Error::Infeasible);
            };
            streak = if ratio.is_zero() { streak + 1 } else { 0 };
            self.pivot(r, q);
        }
    }

    /// Structural variable `j` as an affine function of the state.
    fn var(&self, j: usize) -> Aff {
        self.rows
            .iter()
            .find(|t| t.basic == j)
            .map(|t| Aff(t.b0.clone(), t.b1.clone()))
            .unwrap_or(Aff(Rat::zero(), Rat::zero()))
    }

    fn epi_arg(&self, e: &Epi) -> Aff {
        let mut u = Aff(Rat::zero(), e.c_state.clone());
        for (j, c) in e.c_action.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let x = self.var(j);
            u.0 += c * &x.0;
            u.1 += c * &x.1;
        }
        u
    }

    /// Adds the violated epigraph cut of `epis[k]`, if any.
    fn separate(&mut self, k: usize, at: &Rat, side: Side) -> bool {
        let e = &self.epis[k];
        let (f, c_state, c_action, tau_col) = (e.f, e.c_state, e.c_action, e.tau);
        let u = self.epi_arg(e);
        let tau = self.var(tau_col);
        let (u_at, du) = (u.at(at), u.1.clone());
        let (s, b) = piece(f, &u_at, &du);
        let gap = tau.at(at) - (&s * &u_at + &b);
        let gap_slope = &tau.1 - &s * &du;
        if !lex_negative(&gap, &gap_slope, side) {
            return false;
        }
        let mut a = vec![Rat::zero(); self.n_s];
        for (j, c) in c_action.iter().enumerate() {
            a[j] = -(&s * c);
        }
        a[tau_col] = Rat::one();
        let r1 = &s * c_state;
        self.add_row(OrigRow {
            a,
            r0: b,
            r1,
            kind: Kind::Cut,
        });
        true
    }

    fn solve(&mut self, at: &Rat, side: Side) -> Result<()> {
        loop {
            self.reoptimize(at, side)?;
            let mut added = false;
            for k in 0..self.epis.len() {
                added |= self.separate(k, at, side);
            }
            if !added {
                return Ok(());
            }
        }
    }

    /// Largest state up to which the current basis stays primal feasible.
    fn basis_end(&self, at: &Rat, hi: &Rat) -> Rat {
        let mut end = hi.clone();
        for t in &self.rows {
            if t.b1.is_negative() {
                let root = -&t.b0 / &t.b1;
                if root < end {
                    end = root;
                }
            }
        }
        debug_assert!(end > *at);
        end
    }

    /// Largest state up to which `tau >= F(u)` keeps holding along the
    /// current affine solution.
    fn epi_end(&self, k: usize, at: &Rat, end: Rat) -> Rat {
        let e = &self.epis[k];
        let u = self.epi_arg(e);
        let tau = self.var(e.tau);
        let h = |i: &Rat| tau.at(i) - e.f.value(&u.at(i));
        let h_end = h(&end);
        if !h_end.is_negative() {
            return end;
        }
        let root = |l: &Rat, r: &Rat| {
            let (hl, hr) = (h(l), h(r));
            l + &hl * (r - l) / (&hl - &hr)
        };
        if u.1.is_zero() {
            return root(at, &end);
        }
        // Breakpoints of F crossed between `at` and `end`, in state order.
        let xs = e.f.xs();
        let (u0, u1) = (u.at(at), u.at(&end));
        let (lo, hi) = if u0 < u1 { (&u0, &u1) } else { (&u1, &u0) };
        let first = xs.partition_point(|b| b <= lo);
        let last = xs.partition_point(|b| b < hi);
        let count = last.saturating_sub(first);
        let state_of = |idx: usize| -> Rat {
            let b = if u.1.is_positive() {
                &xs[first + idx]
            } else {
                &xs[last - 1 - idx]
            };
            (b - &u.0) / &u.1
        };
        // h is concave: its nonnegative set is an interval starting at `at`.
        let (mut good, mut bad) = (0usize, count + 1);
        while bad - good > 1 {
            let mid = (good + bad) / 2;
            if h(&state_of(mid - 1)).is_negative() {
                bad = mid;
            } else {
                good = mid;
            }
        }
        let left = if good == 0 { at.clone() } else { state_of(good - 1) };
        let right = if good == count { end } else { state_of(good) };
        root(&left, &right)
    }

    fn policy(&self, p: usize, lo: &Rat, hi: &Rat) -> PolicyPiece {
        let vars: Vec<Aff> = (0..p).map(|j| self.var(j)).collect();
        PolicyPiece {
            lo: lo.clone(),
            hi: hi.clone(),
            offset: vars.iter().map(|a| a.0.clone()).collect(),
            slope: vars.iter().map(|a| a.1.clone()).collect(),
        }
    }
}

/// Exact stage value function and optimal affine policy over the state space.
pub fn sweep(prob: &StageProblem) -> Result<StageSweep> {
    let states: &Interval = &prob.stage.states;
    let p = prob.stage.action_dim();
    let mut eng = Engine::new(prob);
    let mut pts: Vec<(Rat, Rat)> = Vec::new();
    let mut policy = Vec::new();
    if states.is_point() {
        let at = &states.lo;
        eng.solve(at, Side::At)?;
        pts.push((at.clone(), eng.z.at(at)));
        policy.push(eng.policy(p, at, at));
    } else {
        let mut cur = states.lo.clone();
        loop {
            eng.solve(&cur, Side::Right)?;
            let mut end = eng.basis_end(&cur, &states.hi);
            for k in 0..eng.epis.len() {
                end = eng.epi_end(k, &cur, end);
            }
            pts.push((cur.clone(), eng.z.at(&cur)));
            policy.push(eng.policy(p, &cur, &end));
            if end == states.hi {
                pts.push((end.clone(), eng.z.at(&end)));
                break;
            }
            cur = end;
            eng.drop_slack_cuts(&cur);
        }
    }
    let value = PwlConvex::new(pts)
        .map_err(|e| Error::Contract(format!("stage value is not convex: {e}")))?
        .simplify();
    Ok(StageSweep {
        value,
        policy,
        solves: eng.solves,
        pivots: eng.pivots,
    })
}

/// Optimal action and value at one state.
pub fn solve_at(prob: &StageProblem, state: &Rat) -> Result<(Vec<Rat>, Rat)> {
    let p = prob.stage.action_dim();
    let mut eng = Engine::new(prob);
    eng.solve(state, Side::At)?;
    let x = (0..p).map(|j| eng.var(j).at(state)).collect();
    Ok((x, eng.z.at(state)))
}
