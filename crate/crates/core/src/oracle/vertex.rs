//! Brute-force LP optimum by enumerating vertices of a bounded polyhedron.
//!
//! Every choice of `n` linearly independent tight constraints (all equality
//! rows included) is solved by fraction-free elimination in `i128`; feasible
//! solutions are vertices and the best one is optimal when the feasible set is
//! bounded.

use crate::error::{Error, Result};
use crate::lp::{LpProblem, Sense};
use crate::rat::Rat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// `a . x >= b` (or `=` when `eq`) with integer data.
#[derive(Debug, Clone)]
struct Constraint {
    a: Vec<i128>,
    b: i128,
    eq: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexOutcome {
    Optimal { value: Rat, x: Vec<Rat> },
    Infeasible,
}

fn overflow() -> Error {
    Error::Precondition("vertex enumeration needs small integer-scalable data".into())
}

fn to_i128(x: &BigInt) -> Result<i128> {
    x.to_i128().ok_or_else(overflow)
}

/// Scales `coefs . x (>=|=) rhs` to integers.
fn integral(coefs: &[Rat], rhs: &Rat, sign: i64, eq: bool) -> Result<Constraint> {
    let l = coefs
        .iter()
        .chain(std::iter::once(rhs))
        .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let s = Rat::from_integer(BigInt::from(sign) * l);
    let scale = |c: &Rat| to_i128((c * &s).numer());
    Ok(Constraint {
        a: coefs.iter().map(scale).collect::<Result<_>>()?,
        b: scale(rhs)?,
        eq,
    })
}

fn constraints(p: &LpProblem) -> Result<Vec<Constraint>> {
    let n = p.num_vars();
    let mut out = Vec::new();
    for r in &p.rows {
        match r.sense {
            Sense::Ge => out.push(integral(&r.coefs, &r.rhs, 1, false)?),
            Sense::Le => out.push(integral(&r.coefs, &r.rhs, -1, false)?),
            Sense::Eq => out.push(integral(&r.coefs, &r.rhs, 1, true)?),
        }
    }
    for j in 0..n {
        let mut e = vec![Rat::zero(); n];
        e[j] = Rat::one();
        if let Some(l) = &p.lower[j] {
            out.push(integral(&e, l, 1, false)?);
        }
        if let Some(u) = &p.upper[j] {
            out.push(integral(&e, u, -1, false)?);
        }
    }
    Ok(out)
}

/// Solves the square system by Bareiss elimination; returns `(numerators, det)`.
fn solve_square(rows: &[&Constraint]) -> Result<Option<(Vec<i128>, i128)>> {
    let n = rows.len();
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|c| {
            let mut r = c.a.clone();
            r.push(c.b);
            r
        })
        .collect();
    let mut prev = 1i128;
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| m[i][k] != 0) else {
            return Ok(None);
        };
        m.swap(k, piv);
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = m[k][k]
                    .checked_mul(m[i][j])
                    .and_then(|a| m[i][k].checked_mul(m[k][j]).and_then(|b| a.checked_sub(b)))
                    .ok_or_else(overflow)?;
                m[i][j] = v / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    // Back substitution keeping the common denominator `det`.
    let det = m[n - 1][n - 1];
    let mut num = vec![0i128; n];
    for k in (0..n).rev() {
        // m[k][k] * x_k = m[k][n] - sum_{j>k} m[k][j] x_j, with x_j = num_j / det.
        let mut acc = m[k][n].checked_mul(det).ok_or_else(overflow)?;
        for j in k + 1..n {
            acc = acc
                .checked_sub(m[k][j].checked_mul(num[j]).ok_or_else(overflow)?)
                .ok_or_else(overflow)?;
        }
        if acc % m[k][k] != 0 {
            return Err(Error::Contract(
                "fraction-free back substitution left a remainder".into(),
            ));
        }
        num[k] = acc / m[k][k];
    }
    Ok(Some((num, det)))
}

fn satisfies(c: &Constraint, num: &[i128], det: i128) -> Result<bool> {
    let mut lhs = 0i128;
    for (a, x) in c.a.iter().zip(num) {
        lhs = lhs
            .checked_add(a.checked_mul(*x).ok_or_else(overflow)?)
            .ok_or_else(overflow)?;
    }
    let rhs = c.b.checked_mul(det).ok_or_else(overflow)?;
    let diff = lhs - rhs;
    Ok(if c.eq {
        diff == 0
    } else if det > 0 {
        diff >= 0
    } else {
        diff <= 0
    })
}

/// A maximal linearly independent subset of `rows`, in order.
fn independent(rows: Vec<&Constraint>) -> Vec<&Constraint> {
    let mut basis: Vec<(usize, Vec<Rat>)> = Vec::new();
    let mut kept = Vec::new();
    for c in rows {
        let mut v: Vec<Rat> = c.a.iter().map(|x| Rat::from_integer(BigInt::from(*x))).collect();
        for (pivot, b) in &basis {
            if !v[*pivot].is_zero() {
                let f = &v[*pivot] / &b[*pivot];
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= &f * y;
                }
            }
        }
        if let Some(pivot) = v.iter().position(|x| !x.is_zero()) {
            basis.push((pivot, v));
            kept.push(c);
        }
    }
    kept
}

/// Optimum of `p`, assuming its feasible set is bounded.
pub fn enumerate_vertices(p: &LpProblem) -> Result<VertexOutcome> {
    p.check()?;
    let n = p.num_vars();
    if n == 0 {
        return Err(Error::Precondition("no variables".into()));
    }
    let all = constraints(p)?;
    let (eqs, ineqs): (Vec<&Constraint>, Vec<&Constraint>) = all.iter().partition(|c| c.eq);
    // Dependent equalities are implied or contradictory; the final
    // feasibility test sees all of them either way.
    let eqs = independent(eqs);
    if eqs.len() > n {
        return Err(Error::Precondition("more equality rows than variables".into()));
    }
    let k = n - eqs.len();
    let mut best: Option<(Rat, Vec<Rat>)> = None;
    let mut pick: Vec<usize> = (0..k).collect();
    if k > ineqs.len() {
        return Ok(VertexOutcome::Infeasible);
    }
    loop {
        let chosen: Vec<&Constraint> = eqs.iter().copied().chain(pick.iter().map(|&i| ineqs[i])).collect();
        if let Some((num, det)) = solve_square(&chosen)? {
            if det != 0
                && all
                    .iter()
                    .map(|c| satisfies(c, &num, det))
                    .collect::<Result<Vec<_>>>()?
                    .iter()
                    .all(|b| *b)
            {
                let d = Rat::from_integer(BigInt::from(det));
                let x: Vec<Rat> = num.iter().map(|v| Rat::from_integer(BigInt::from(*v)) / &d).collect();
                let value = p.objective_value(&x);
                if best.as_ref().is_none_or(|(b, _)| value < *b) {
                    best = Some((value, x));
                }
            }
        }
        // Next k-combination of the inequalities.
        let m = ineqs.len();
        let Some(i) = (0..k).rev().find(|&i| pick[i] < m - k + i) else {
            break;
        };
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    Ok(match best {
        Some((value, x)) => VertexOutcome::Optimal { value, x },
        None => VertexOutcome::Infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, ratio};

    #[test]
    fn box_corner() {
        let mut p = LpProblem::new(vec![int(-1), int(-2)]);
        p.add_row(vec![int(1), int(1)], Sense::Le, int(3));
        p.add_row(vec![int(0), int(2)], Sense::Le, int(3));
        assert_eq!(
            enumerate_vertices(&p).unwrap(),
            VertexOutcome::Optimal {
                value: ratio(-9, 2),
                x: vec![ratio(3, 2), ratio(3, 2)]
            }
        );
    }

    #[test]
    fn empty_polytope() {
        let mut p = LpProblem::new(vec![int(1)]);
        p.add_row(vec![int(1)], Sense::Le, int(-1));
        assert_eq!(enumerate_vertices(&p).unwrap(), VertexOutcome::Infeasible);
    }

    #[test]
    fn equality_row() {
        let mut p = LpProblem::new(vec![int(1), int(1)]);
        p.add_row(vec![int(1), int(-1)], Sense::Eq, ratio(1, 2));
        p.add_row(vec![int(1), int(1)], Sense::Le, int(4));
        match enumerate_vertices(&p).unwrap() {
            VertexOutcome::Optimal { value, .. } => assert_eq!(value, ratio(1, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dependent_equalities() {
        let mut p = LpProblem::new(vec![int(1), int(1)]);
        p.add_row(vec![int(0), int(0)], Sense::Eq, int(0));
        p.add_row(vec![int(1), int(-1)], Sense::Eq, int(1));
        p.add_row(vec![int(2), int(-2)], Sense::Eq, int(2));
        p.add_row(vec![int(1), int(1)], Sense::Le, int(5));
        match enumerate_vertices(&p).unwrap() {
            VertexOutcome::Optimal { value, .. } => assert_eq!(value, int(1)),
            other => panic!("{other:?}"),
        }
        p.add_row(vec![int(3), int(-3)], Sense::Eq, int(2));
        assert_eq!(enumerate_vertices(&p).unwrap(), VertexOutcome::Infeasible);
    }
}
