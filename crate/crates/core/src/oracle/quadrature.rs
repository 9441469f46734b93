//! Reference expectations `E[xi(b x + e + c D)]`, exact for piecewise-linear
//! `xi` and by adaptive Simpson quadrature otherwise.

use crate::error::{Error, Result};
use crate::pwl::PwlConvex;
use crate::randvar::{RandVar, TruncContinuous};
use crate::rat::{self, Rat};
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Atoms and continuous parts of a variable.
fn atoms_of(d: &RandVar) -> Result<Vec<(Rat, Rat)>> {
    match d {
        RandVar::Discrete(_) => d
            .atoms(1_000_000)
            .ok_or_else(|| Error::Precondition("too many atoms for the reference expectation".into())),
        RandVar::Continuous(c) => Ok(vec![
            (c.lo.clone(), c.mass_lo.clone()),
            (c.hi.clone(), c.mass_hi.clone()),
        ]),
    }
}

/// `integral_a^b z^k p'(z) dz` for a polynomial CDF piece `p`.
fn moment(cdf: &[Rat], a: &Rat, b: &Rat, k: usize) -> Rat {
    let mut total = Rat::zero();
    // p'(z) = sum_j j c_j z^{j-1}; times z^k integrates to j c_j z^{j+k} / (j+k).
    for (j, c) in cdf.iter().enumerate().skip(1) {
        let deg = (j + k) as u32;
        let coef = c * Rat::from_integer(BigInt::from(j)) / Rat::from_integer(BigInt::from(deg));
        total += coef * (rat::pow(b, deg) - rat::pow(a, deg));
    }
    total
}

/// Exact `E[psi(u + c D)]`, extrapolating `psi` linearly outside its domain.
pub fn exact_pwl_expectation(psi: &PwlConvex, d: &RandVar, u: &Rat, c: &Rat) -> Result<Rat> {
    let mut total: Rat = atoms_of(d)?.iter().map(|(z, p)| psi.value(&(u + c * z)) * p).sum();
    let RandVar::Continuous(tc) = d else {
        return Ok(total);
    };
    if c.is_zero() {
        let interior = Rat::one() - &tc.mass_lo - &tc.mass_hi;
        return Ok(total + psi.value(u) * interior);
    }
    // Cut points in z where `u + c z` crosses a breakpoint of psi.
    let mut cuts: Vec<Rat> = psi.xs().iter().map(|x| (x - u) / c).collect();
    cuts.extend(tc.knots.iter().cloned());
    cuts.retain(|z| z >= &tc.lo && z <= &tc.hi);
    cuts.sort();
    cuts.dedup();
    for w in cuts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let mid = (a + b) / Rat::from_integer(BigInt::from(2));
        let piece = piece_at(tc, &mid);
        // Linear form of psi(u + c z) on (a, b): slope and intercept in z.
        let y0 = psi.value(&(u + c * a));
        let y1 = psi.value(&(u + c * b));
        let slope = (&y1 - &y0) / (b - a);
        let intercept = &y0 - &slope * a;
        total += intercept * moment(&piece, a, b, 0) + slope * moment(&piece, a, b, 1);
    }
    Ok(total)
}

fn piece_at(tc: &TruncContinuous, z: &Rat) -> Vec<Rat> {
    let k = tc.knots.partition_point(|b| b <= z).clamp(1, tc.pieces.len()) - 1;
    tc.pieces[k].0.clone()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

const MAX_LEVELS: u32 = 48;

/// Levels refined unconditionally: a kink can make the coarse error estimate
/// vanish by coincidence.
const MIN_LEVELS: u32 = 8;

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32, err: &mut f64) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (l, r) = (simpson(f, a, m), simpson(f, m, b));
    let diff = l + r - whole;
    let forced = depth > MAX_LEVELS - MIN_LEVELS;
    if !forced && (diff.abs() <= 15.0 * tol || (b - a) < 1e-12) {
        *err += diff.abs() / 15.0;
        return Ok(l + r + diff / 15.0);
    }
    if depth == 0 {
        return Err(Error::Contract("quadrature refinement did not converge".into()));
    }
    Ok(adaptive(f, a, m, l, 0.5 * tol, depth - 1, err)? + adaptive(f, m, b, r, 0.5 * tol, depth - 1, err)?)
}

/// `E[xi(b x + e + c D)]` with endpoint masses added exactly and the interior
/// integrated piece by piece; the target error is `1e-9` relative.
pub fn quadrature_expectation(
    xi: &dyn Fn(f64) -> f64,
    b: &Rat,
    e: &Rat,
    c: &Rat,
    d: &RandVar,
    x: &Rat,
) -> Result<Quadrature> {
    let base = rat::to_f64(&(b * x + e));
    let cf = rat::to_f64(c);
    let g = |z: f64| xi(base + cf * z);
    let mut value: f64 = atoms_of(d)?
        .iter()
        .map(|(z, p)| g(rat::to_f64(z)) * rat::to_f64(p))
        .sum();
    let mut error = 0.0;
    if let RandVar::Continuous(tc) = d {
        let scale = value.abs().max(1.0);
        for (i, p) in tc.pieces.iter().enumerate() {
            let dens = p.derivative();
            let h = |z: f64| g(z) * dens.eval_f64(z);
            let (lo, hi) = (rat::to_f64(&tc.knots[i]), rat::to_f64(&tc.knots[i + 1]));
            let whole = simpson(&h, lo, hi);
            value += adaptive(&h, lo, hi, whole, 1e-10 * scale, MAX_LEVELS, &mut error)?;
        }
    }
    Ok(Quadrature { value, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, ratio};

    fn abs() -> PwlConvex {
        PwlConvex::new(vec![(int(-1), int(1)), (int(0), int(0)), (int(1), int(1))]).unwrap()
    }

    #[test]
    fn abs_under_truncated_uniform() {
        // Masses 1/10 at +-1, remaining 4/5 spread uniformly: E|D| = 1/5 + 4/5 * 1/2.
        let d = RandVar::trunc_uniform(int(-1), int(1), ratio(1, 10), ratio(1, 10)).unwrap();
        let v = exact_pwl_expectation(&abs(), &d, &int(0), &int(1)).unwrap();
        assert_eq!(v, ratio(3, 5));
        let q = quadrature_expectation(&|z: f64| z.abs(), &int(1), &int(0), &int(1), &d, &int(0)).unwrap();
        assert!((q.value - 0.6).abs() < 1e-9, "{q:?}");
    }

    #[test]
    fn kinks_inside_a_piece() {
        // Two kinks in one density piece once fooled the coarse error test.
        let d = RandVar::trunc_triangular(int(0), int(2), int(4), ratio(1, 10), ratio(1, 5)).unwrap();
        let psi = PwlConvex::new(vec![
            (int(-15), ratio(223, 4)),
            (ratio(-47, 40), ratio(589, 80)),
            (ratio(-19, 36), ratio(667, 108)),
            (int(15), ratio(583, 24)),
        ])
        .unwrap();
        let lines = psi.to_lines();
        let f = move |y: f64| {
            lines
                .iter()
                .map(|(a, b)| rat::to_f64(a) * y + rat::to_f64(b))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let v = rat::to_f64(&exact_pwl_expectation(&psi, &d, &int(2), &int(-1)).unwrap());
        let q = quadrature_expectation(&f, &int(1), &int(0), &int(-1), &d, &int(2)).unwrap();
        assert!((q.value - v).abs() < 1e-8 * v, "{} vs {v}", q.value);
    }

    #[test]
    fn linear_gives_the_mean() {
        let d = RandVar::trunc_triangular(int(0), int(1), int(3), ratio(1, 5), ratio(1, 10)).unwrap();
        let line = PwlConvex::new(vec![(int(-10), int(-20)), (int(10), int(20))]).unwrap();
        let v = exact_pwl_expectation(&line, &d, &int(1), &int(1)).unwrap();
        assert_eq!(v, (int(1) + d.mean()) * int(2));
    }

    #[test]
    fn degenerate_is_one_evaluation() {
        let d = RandVar::point(int(2));
        let v = exact_pwl_expectation(&abs(), &d, &int(-3), &int(1)).unwrap();
        assert_eq!(v, int(1));
    }
}
