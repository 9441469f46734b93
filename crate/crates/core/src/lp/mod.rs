//! Exact rational linear programming and the per-stage problem.

pub mod param;
pub mod simplex;
pub mod stage;

pub use simplex::PivotRule;

use crate::error::{Error, Result};
use crate::rat::{self, Rat};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpRow {
    pub coefs: Vec<Rat>,
    pub sense: Sense,
    pub rhs: Rat,
}

/// `min c.x` subject to rows and per-variable bounds (`None` is unbounded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub objective: Vec<Rat>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<Option<Rat>>,
    pub upper: Vec<Option<Rat>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output; `x`, `value` and `duals` are meaningful when optimal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: Status,
    pub x: Vec<Rat>,
    pub value: Rat,
    /// One multiplier per row; `c - A^T y` are the reduced costs.
    pub duals: Vec<Rat>,
    /// Final basic tableau columns.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

impl LpSolution {
    fn status_only(status: Status, iterations: usize) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            value: Rat::zero(),
            duals: Vec::new(),
            basis: Vec::new(),
            iterations,
        }
    }
}

impl LpProblem {
    /// Minimize `objective . x` over `x >= 0`.
    pub fn new(objective: Vec<Rat>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            rows: Vec::new(),
            lower: vec![Some(Rat::zero()); n],
            upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefs: Vec<Rat>, sense: Sense, rhs: Rat) {
        self.rows.push(LpRow { coefs, sense, rhs });
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<Rat>, upper: Option<Rat>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Domain("bounds do not match the variable count".into()));
        }
        if self.rows.iter().any(|r| r.coefs.len() != n) {
            return Err(Error::Domain("row length does not match the variable count".into()));
        }
        for (l, u) in self.lower.iter().zip(&self.upper) {
            if let (Some(l), Some(u)) = (l, u) {
                if l > u {
                    return Err(Error::Domain("variable lower bound exceeds upper bound".into()));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[Rat]) -> Rat {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, i: usize, x: &[Rat]) -> Rat {
        self.rows[i].coefs.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    pub fn is_feasible(&self, x: &[Rat]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        let bounds = x.iter().enumerate().all(|(j, v)| {
            self.lower[j].as_ref().is_none_or(|l| v >= l) && self.upper[j].as_ref().is_none_or(|u| v <= u)
        });
        bounds
            && (0..self.rows.len()).all(|i| {
                let a = self.row_activity(i, x);
                let r = &self.rows[i];
                match r.sense {
                    Sense::Le => a <= r.rhs,
                    Sense::Ge => a >= r.rhs,
                    Sense::Eq => a == r.rhs,
                }
            })
    }

    /// CPLEX-style LP text for external cross-checks; coefficients are rounded.
    pub fn to_lp_text(&self) -> String {
        let term = |c: &Rat, j: usize| format!("{:+} x{}", rat::to_f64(c), j);
        let mut s = String::from("Minimize\n obj:");
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_zero() {
                let _ = write!(s, " {}", term(c, j));
            }
        }
        s.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(s, " c{i}:");
            for (j, a) in r.coefs.iter().enumerate() {
                if !a.is_zero() {
                    let _ = write!(s, " {}", term(a, j));
                }
            }
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", rat::to_f64(&r.rhs));
        }
        s.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            match (&self.lower[j], &self.upper[j]) {
                (Some(l), Some(u)) => {
                    let _ = writeln!(s, " {} <= x{j} <= {}", rat::to_f64(l), rat::to_f64(u));
                }
                (Some(l), None) => {
                    let _ = writeln!(s, " x{j} >= {}", rat::to_f64(l));
                }
                (None, Some(u)) => {
                    let _ = writeln!(s, " -inf <= x{j} <= {}", rat::to_f64(u));
                }
                (None, None) => {
                    let _ = writeln!(s, " x{j} free");
                }
            }
        }
        s.push_str("End\n");
        s
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    simplex::solve(p, PivotRule::default())
}

/// Replays the optimality certificate of `sol`: primal feasibility, dual sign
/// conditions, complementary slackness and reduced-cost signs at the bounds.
pub fn verify(p: &LpProblem, sol: &LpSolution) -> Result<()> {
    let fail = |msg: &str| Err(Error::Contract(format!("LP certificate rejected: {msg}")));
    if sol.status != Status::Optimal {
        return Ok(());
    }
    if !p.is_feasible(&sol.x) {
        return fail("primal point is infeasible");
    }
    if sol.value != p.objective_value(&sol.x) {
        return fail("objective value mismatch");
    }
    if sol.duals.len() != p.rows.len() {
        return fail("dual vector has the wrong length");
    }
    for (i, (r, y)) in p.rows.iter().zip(&sol.duals).enumerate() {
        let sign_ok = match r.sense {
            Sense::Ge => !y.is_negative(),
            Sense::Le => !y.is_positive(),
            Sense::Eq => true,
        };
        if !sign_ok {
            return fail("dual sign");
        }
        if !y.is_zero() && p.row_activity(i, &sol.x) != r.rhs {
            return fail("complementary slackness on a row");
        }
    }
    for j in 0..p.num_vars() {
        let mut d = p.objective[j].clone();
        for (r, y) in p.rows.iter().zip(&sol.duals) {
            d -= &r.coefs[j] * y;
        }
        let at_lo = p.lower[j].as_ref().is_some_and(|l| *l == sol.x[j]);
        let at_hi = p.upper[j].as_ref().is_some_and(|u| *u == sol.x[j]);
        let ok = match (at_lo, at_hi) {
            (true, true) => true,
            (true, false) => !d.is_negative(),
            (false, true) => !d.is_positive(),
            (false, false) => d.is_zero(),
        };
        if !ok {
            return fail("reduced cost sign");
        }
    }
    Ok(())
}
