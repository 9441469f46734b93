//! Exact two-phase primal simplex over a sparse rational tableau.

use super::{LpProblem, LpSolution, Sense, Status};
use crate::error::{Error, Result};
use crate::rat::Rat;
use num_traits::{One, Signed, Zero};

/// Hard cap on pivots per solve.
pub const ITERATION_LIMIT: usize = 50_000;

/// Consecutive degenerate pivots tolerated before Dantzig hands over to Bland.
const DEGENERATE_STREAK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Smallest-index entering and leaving choices throughout.
    Bland,
    /// Most negative reduced cost, falling back to Bland on degenerate streaks.
    #[default]
    Dantzig,
}

type SparseRow = Vec<(usize, Rat)>;

fn entry(row: &SparseRow, col: usize) -> Option<&Rat> {
    row.binary_search_by_key(&col, |(c, _)| *c).ok().map(|i| &row[i].1)
}

/// `row - f * pivot`, merging sorted sparse rows.
fn axpy(row: &SparseRow, f: &Rat, pivot: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot.len() {
        let take_row = j == pivot.len() || (i < row.len() && row[i].0 < pivot[j].0);
        let take_piv = i == row.len() || (j < pivot.len() && pivot[j].0 < row[i].0);
        if take_row {
            out.push(row[i].clone());
            i += 1;
        } else if take_piv {
            out.push((pivot[j].0, -(f * &pivot[j].1)));
            j += 1;
        } else {
            let v = &row[i].1 - f * &pivot[j].1;
            if !v.is_zero() {
                out.push((row[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Debug, Clone)]
struct VarMap {
    offset: Rat,
    /// `(column, sign)` pairs: `x = offset + sum sign * column`.
    cols: Vec<(usize, Rat)>,
}

struct Tableau {
    rows: Vec<SparseRow>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
    obj: Vec<Rat>,
    obj_rhs: Rat,
    ncols: usize,
    barred: Vec<bool>,
    rule: PivotRule,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, q: usize) {
        let a = entry(&self.rows[r], q).expect("pivot entry").clone();
        let inv = Rat::one() / a;
        for e in self.rows[r].iter_mut() {
            e.1 *= &inv;
        }
        self.rhs[r] *= &inv;
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            if let Some(f) = entry(&self.rows[i], q).cloned() {
                self.rows[i] = axpy(&self.rows[i], &f, &prow);
                self.rhs[i] -= &f * &prhs;
            }
        }
        let f = self.obj[q].clone();
        if !f.is_zero() {
            for (c, v) in &prow {
                self.obj[*c] -= &f * v;
            }
            self.obj_rhs -= &f * &prhs;
        }
        self.rows[r] = prow;
        self.basis[r] = q;
        self.iterations += 1;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let candidates = (0..self.ncols).filter(|&j| !self.barred[j] && self.obj[j].is_negative());
        if bland {
            candidates.into_iter().next()
        } else {
            candidates.min_by(|&a, &b| self.obj[a].cmp(&self.obj[b]))
        }
    }

    fn leaving(&self, q: usize) -> Option<usize> {
        let mut best: Option<(usize, Rat)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let Some(a) = entry(row, q) else { continue };
            if !a.is_positive() {
                continue;
            }
            let ratio = &self.rhs[i] / a;
            let better = match &best {
                None => true,
                Some((b, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*b]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    fn run(&mut self) -> Result<Outcome> {
        let mut streak = 0;
        loop {
            if self.iterations >= ITERATION_LIMIT {
                return Err(Error::IterationLimit(ITERATION_LIMIT));
            }
            let bland = self.rule == PivotRule::Bland || streak >= DEGENERATE_STREAK;
            let Some(q) = self.entering(bland) else {
                return Ok(Outcome::Optimal);
            };
            let Some(r) = self.leaving(q) else {
                return Ok(Outcome::Unbounded);
            };
            if self.rhs[r].is_zero() {
                streak += 1;
            } else {
                streak = 0;
            }
            self.pivot(r, q);
        }
    }

    fn set_objective(&mut self, cost: &[Rat]) {
        self.obj = cost.to_vec();
        self.obj_rhs = Rat::zero();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (c, v) in row {
                self.obj[*c] -= cb * v;
            }
            self.obj_rhs -= cb * &self.rhs[i];
        }
    }
}

/// Solves `p` exactly. Infeasibility and unboundedness are statuses.
pub fn solve(p: &LpProblem, rule: PivotRule) -> Result<LpSolution> {
    p.check()?;
    let n = p.num_vars();

    // Columns for the original variables.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, Rat)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (&p.lower[j], &p.upper[j]);
        let map = match (lo, hi) {
            (Some(l), _) => {
                if let Some(h) = hi {
                    bound_rows.push((ncols, h - l));
                }
                ncols += 1;
                VarMap {
                    offset: l.clone(),
                    cols: vec![(ncols - 1, Rat::one())],
                }
            }
            (None, Some(h)) => {
                ncols += 1;
                VarMap {
                    offset: h.clone(),
                    cols: vec![(ncols - 1, -Rat::one())],
                }
            }
            (None, None) => {
                ncols += 2;
                VarMap {
                    offset: Rat::zero(),
                    cols: vec![(ncols - 2, Rat::one()), (ncols - 1, -Rat::one())],
                }
            }
        };
        maps.push(map);
    }
    let nstruct = ncols;

    // Rows in column space with nonnegative right-hand sides.
    let mut rows: Vec<(SparseRow, Sense, Rat, bool)> = Vec::new();
    for row in &p.rows {
        let mut acc: Vec<Rat> = vec![Rat::zero(); nstruct];
        let mut rhs = row.rhs.clone();
        for (j, a) in row.coefs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            rhs -= a * &maps[j].offset;
            for (c, s) in &maps[j].cols {
                acc[*c] += a * s;
            }
        }
        let sparse: SparseRow = acc.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect();
        rows.push((sparse, row.sense, rhs, false));
    }
    for (c, width) in &bound_rows {
        rows.push((vec![(*c, Rat::one())], Sense::Le, width.clone(), false));
    }
    for r in rows.iter_mut() {
        if r.2.is_negative() {
            r.0.iter_mut().for_each(|e| e.1 = -e.1.clone());
            r.2 = -r.2.clone();
            r.1 = match r.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
            r.3 = true;
        }
    }

    // Slack and artificial columns; `unit[i]` starts as the identity column of row i.
    let m = rows.len();
    let mut unit = vec![0; m];
    let mut artificial = Vec::new();
    let mut t_rows = Vec::with_capacity(m);
    let mut t_rhs = Vec::with_capacity(m);
    for (i, (sparse, sense, rhs, _)) in rows.iter().enumerate() {
        let mut row = sparse.clone();
        match sense {
            Sense::Le => {
                row.push((ncols, Rat::one()));
                unit[i] = ncols;
                ncols += 1;
            }
            Sense::Ge => {
                row.push((ncols, -Rat::one()));
                row.push((ncols + 1, Rat::one()));
                unit[i] = ncols + 1;
                artificial.push(ncols + 1);
                ncols += 2;
            }
            Sense::Eq => {
                row.push((ncols, Rat::one()));
                unit[i] = ncols;
                artificial.push(ncols);
                ncols += 1;
            }
        }
        t_rows.push(row);
        t_rhs.push(rhs.clone());
    }
    let mut is_art = vec![false; ncols];
    for &a in &artificial {
        is_art[a] = true;
    }
    let mut t = Tableau {
        rows: t_rows,
        rhs: t_rhs,
        basis: unit.clone(),
        obj: Vec::new(),
        obj_rhs: Rat::zero(),
        ncols,
        barred: vec![false; ncols],
        rule,
        iterations: 0,
    };

    // Phase 1.
    if !artificial.is_empty() {
        let cost: Vec<Rat> = (0..ncols)
            .map(|j| if is_art[j] { Rat::one() } else { Rat::zero() })
            .collect();
        t.set_objective(&cost);
        t.run()?;
        if !t.obj_rhs.is_zero() {
            return Ok(LpSolution::status_only(Status::Infeasible, t.iterations));
        }
        let mut r = 0;
        while r < t.rows.len() {
            if is_art[t.basis[r]] {
                let swap = t.rows[r]
                    .iter()
                    .find(|(c, v)| !is_art[*c] && !v.is_zero())
                    .map(|(c, _)| *c);
                match swap {
                    Some(q) => t.pivot(r, q),
                    None => {
                        // Redundant row.
                        t.rows.remove(r);
                        t.rhs.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for &a in &artificial {
            t.barred[a] = true;
        }
    }

    // Phase 2.
    let mut cost = vec![Rat::zero(); ncols];
    for (j, c) in p.objective.iter().enumerate() {
        for (col, s) in &maps[j].cols {
            cost[*col] += c * s;
        }
    }
    t.set_objective(&cost);
    if let Outcome::Unbounded = t.run()? {
        return Ok(LpSolution::status_only(Status::Unbounded, t.iterations));
    }

    let mut colval = vec![Rat::zero(); ncols];
    for (i, &b) in t.basis.iter().enumerate() {
        colval[b] = t.rhs[i].clone();
    }
    let x: Vec<Rat> = maps
        .iter()
        .map(|m| {
            let mut v = m.offset.clone();
            for (c, s) in &m.cols {
                v += s * &colval[*c];
            }
            v
        })
        .collect();
    let duals: Vec<Rat> = (0..p.rows.len())
        .map(|i| {
            let y = -t.obj[unit[i]].clone();
            if rows[i].3 {
                -y
            } else {
                y
            }
        })
        .collect();
    let value = p.objective_value(&x);
    let sol = LpSolution {
        status: Status::Optimal,
        x,
        value,
        duals,
        basis: t.basis.clone(),
        iterations: t.iterations,
    };
    super::verify(p, &sol)?;
    Ok(sol)
}
