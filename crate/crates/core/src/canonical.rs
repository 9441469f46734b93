//! Canonical representations: sorted `(x, v)` records together with the
//! extension rule used to evaluate between them.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::pwl::PwlConvex;
use crate::rat::{self, Rat};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Lower envelope of the convex hull of the records.
    ConvexLower,
    /// Value of the nearest record at or to the right of the query.
    MonotoneIncUpper,
    /// Value of the nearest record at or to the left of the query.
    MonotoneDecUpper,
}

/// Claimed approximation quality: `phi <= rep <= k * phi + sigma`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    #[serde(with = "rat::serde_rat")]
    pub k: Rat,
    #[serde(with = "rat::serde_rat")]
    pub sigma: Rat,
}

impl Claim {
    pub fn exact() -> Self {
        Claim {
            k: Rat::one(),
            sigma: Rat::zero(),
        }
    }

    pub fn relative(k: Rat) -> Self {
        Claim { k, sigma: Rat::zero() }
    }

    pub fn new(sigma: Rat, k: Rat) -> Self {
        Claim { k, sigma }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CanonicalRep {
    pub mode: Mode,
    #[serde(with = "rat::serde_rat_vec")]
    xs: Vec<Rat>,
    #[serde(with = "rat::serde_rat_vec")]
    vs: Vec<Rat>,
    pub claim: Claim,
    #[serde(skip)]
    hull: Option<PwlConvex>,
}

#[derive(Deserialize)]
struct RepWire {
    mode: Mode,
    #[serde(with = "rat::serde_rat_vec")]
    xs: Vec<Rat>,
    #[serde(with = "rat::serde_rat_vec")]
    vs: Vec<Rat>,
    claim: Claim,
}

impl<'de> Deserialize<'de> for CanonicalRep {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = RepWire::deserialize(d)?;
        CanonicalRep::new(w.mode, w.xs.into_iter().zip(w.vs).collect(), w.claim).map_err(D::Error::custom)
    }
}

impl CanonicalRep {
    pub fn new(mode: Mode, points: Vec<(Rat, Rat)>, claim: Claim) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain(
                "canonical representation needs at least one record".into(),
            ));
        }
        let (xs, vs): (Vec<Rat>, Vec<Rat>) = points.into_iter().unzip();
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("record abscissae must be strictly increasing".into()));
        }
        if vs.iter().any(|v| v < &Rat::zero()) {
            return Err(Error::Domain("record values must be nonnegative".into()));
        }
        match mode {
            Mode::MonotoneIncUpper if vs.windows(2).any(|w| w[0] > w[1]) => {
                return Err(Error::Contract(
                    "values of an increasing representation decrease".into(),
                ))
            }
            Mode::MonotoneDecUpper if vs.windows(2).any(|w| w[0] < w[1]) => {
                return Err(Error::Contract("values of a decreasing representation increase".into()))
            }
            _ => {}
        }
        let hull = match mode {
            Mode::ConvexLower => Some(lower_hull(&xs, &vs)),
            _ => None,
        };
        Ok(CanonicalRep {
            mode,
            xs,
            vs,
            claim,
            hull,
        })
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

    pub fn domain(&self) -> Interval {
        Interval {
            lo: self.xs[0].clone(),
            hi: self.xs[self.xs.len() - 1].clone(),
        }
    }

    /// Extension value at `x` in `O(log n)`.
    pub fn eval(&self, x: &Rat) -> Result<Rat> {
        if !self.domain().contains(x) {
            return Err(Error::Domain(format!(
                "{} outside stored range {}",
                rat::format(x),
                self.domain()
            )));
        }
        Ok(match self.mode {
            Mode::ConvexLower => self.hull.as_ref().expect("hull").value(x),
            Mode::MonotoneIncUpper => {
                let i = self.xs.partition_point(|b| b < x);
                self.vs[i].clone()
            }
            Mode::MonotoneDecUpper => {
                let i = self.xs.partition_point(|b| b <= x);
                self.vs[i - 1].clone()
            }
        })
    }

    /// The convex extension as a piecewise-linear function.
    pub fn to_pwl(&self) -> Result<PwlConvex> {
        match &self.hull {
            Some(h) => Ok(h.clone()),
            None => Err(Error::Precondition(
                "only convex representations convert to a piecewise-linear function".into(),
            )),
        }
    }

    pub fn max_bits(&self) -> u64 {
        self.xs
            .iter()
            .chain(self.vs.iter())
            .map(rat::bit_size)
            .max()
            .unwrap_or(0)
    }

    pub fn with_claim(mut self, claim: Claim) -> Self {
        self.claim = claim;
        self
    }
}

/// Lower convex hull of points sorted by strictly increasing `x`.
fn lower_hull(xs: &[Rat], vs: &[Rat]) -> PwlConvex {
    let mut hx: Vec<Rat> = Vec::with_capacity(xs.len());
    let mut hv: Vec<Rat> = Vec::with_capacity(xs.len());
    for (x, v) in xs.iter().zip(vs) {
        while hx.len() >= 2 {
            let n = hx.len();
            let (x0, v0, x1, v1) = (&hx[n - 2], &hv[n - 2], &hx[n - 1], &hv[n - 1]);
            // Drop the middle point unless it lies strictly below the chord.
            if (v1 - v0) * (x - x1) >= (v - v1) * (x1 - x0) {
                hx.pop();
                hv.pop();
            } else {
                break;
            }
        }
        hx.push(x.clone());
        hv.push(v.clone());
    }
    PwlConvex::from_parts(hx, hv).expect("lower hull is convex")
}
