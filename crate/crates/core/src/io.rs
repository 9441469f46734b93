//! JSON instance documents (`"format": 1`).
//!
//! Rationals are written as strings (`"3/4"`, `"-2"`, `"0.125"`, `"1e-3"`);
//! integer JSON numbers are accepted too. Decimals are read as exact
//! fractions, and serialization always emits the reduced `p/q` form, so a
//! parse-serialize-parse cycle reproduces an instance bit for bit.

use crate::approx::Quadratic;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::{CostFn, DpInstance, StageModel};
use crate::pwl::{MaxAffine, Plane, PwlConvex};
use crate::randvar::{Discrete, Poly, RandVar, TruncContinuous};
use crate::rat::{self, Rat};
use crate::resource::ResourceSpec;
use num_traits::Zero;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::Path;

pub const FORMAT: u64 = 1;

/// Rational on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Q(pub Rat);

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rat::format(&self.0))
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        rat::from_json(&v).map(Q).map_err(serde::de::Error::custom)
    }
}

fn q(x: &Rat) -> Q {
    Q(x.clone())
}

fn qs(xs: &[Rat]) -> Vec<Q> {
    xs.iter().map(q).collect()
}

fn un(xs: Vec<Q>) -> Vec<Rat> {
    xs.into_iter().map(|x| x.0).collect()
}

fn pairs(ps: Vec<[Q; 2]>) -> Vec<(Rat, Rat)> {
    ps.into_iter().map(|[a, b]| (a.0, b.0)).collect()
}

/// Distribution of one random variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistSpec {
    /// `[value, probability]` pairs.
    Discrete {
        atoms: Vec<[Q; 2]>,
    },
    /// `n` equiprobable atoms `start + k step`.
    Grid {
        start: Q,
        step: Q,
        n: u64,
    },
    Uniform {
        lo: Q,
        hi: Q,
        mass_lo: Q,
        mass_hi: Q,
    },
    Triangular {
        lo: Q,
        mode: Q,
        hi: Q,
        mass_lo: Q,
        mass_hi: Q,
    },
    /// Normal clipped to `[lo, hi]`, tails moved to the endpoints.
    Gaussian {
        mean: Q,
        std: Q,
        lo: Q,
        hi: Q,
        nodes: usize,
    },
    /// Endpoint masses plus a piecewise-polynomial interior CDF, coefficients
    /// in ascending degree.
    Piecewise {
        lo: Q,
        hi: Q,
        mass_lo: Q,
        mass_hi: Q,
        knots: Vec<Q>,
        pieces: Vec<Vec<Q>>,
    },
}

impl DistSpec {
    pub fn build(self) -> Result<RandVar> {
        match self {
            DistSpec::Discrete { atoms } => RandVar::discrete(pairs(atoms)),
            DistSpec::Grid { start, step, n } => RandVar::grid(start.0, step.0, n),
            DistSpec::Uniform {
                lo,
                hi,
                mass_lo,
                mass_hi,
            } => RandVar::trunc_uniform(lo.0, hi.0, mass_lo.0, mass_hi.0),
            DistSpec::Triangular {
                lo,
                mode,
                hi,
                mass_lo,
                mass_hi,
            } => RandVar::trunc_triangular(lo.0, mode.0, hi.0, mass_lo.0, mass_hi.0),
            DistSpec::Gaussian {
                mean,
                std,
                lo,
                hi,
                nodes,
            } => RandVar::clipped_gaussian(&mean.0, &std.0, lo.0, hi.0, nodes),
            DistSpec::Piecewise {
                lo,
                hi,
                mass_lo,
                mass_hi,
                knots,
                pieces,
            } => RandVar::continuous(TruncContinuous {
                lo: lo.0,
                hi: hi.0,
                mass_lo: mass_lo.0,
                mass_hi: mass_hi.0,
                knots: un(knots),
                pieces: pieces.into_iter().map(|p| Poly(un(p))).collect(),
            }),
        }
    }

    pub fn of(x: &RandVar) -> DistSpec {
        match x {
            RandVar::Discrete(Discrete::Atoms { values, cum }) => {
                let mut prev = Rat::zero();
                let atoms = values
                    .iter()
                    .zip(cum)
                    .map(|(v, c)| {
                        let p = c - &prev;
                        prev = c.clone();
                        [q(v), Q(p)]
                    })
                    .collect();
                DistSpec::Discrete { atoms }
            }
            RandVar::Discrete(Discrete::Grid { start, step, n }) => DistSpec::Grid {
                start: q(start),
                step: q(step),
                n: *n,
            },
            RandVar::Continuous(c) => DistSpec::Piecewise {
                lo: q(&c.lo),
                hi: q(&c.hi),
                mass_lo: q(&c.mass_lo),
                mass_hi: q(&c.mass_hi),
                knots: qs(&c.knots),
                pieces: c.pieces.iter().map(|p| qs(&p.0)).collect(),
            },
        }
    }
}

/// Univariate convex cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostSpec {
    /// Breakpoints `[x, value]`.
    Pwl { points: Vec<[Q; 2]> },
    /// Breakpoints, but exposed to the schemes only through evaluations.
    OraclePwl { points: Vec<[Q; 2]> },
    /// Maximum of `[slope, intercept]` lines on `domain`.
    Lines { lines: Vec<[Q; 2]>, domain: Interval },
    /// `a (x - b)^2 + c` on `domain`.
    Quadratic { a: Q, b: Q, c: Q, domain: Interval },
}

impl CostSpec {
    pub fn build(self) -> Result<CostFn> {
        Ok(match self {
            CostSpec::Pwl { points } => CostFn::Pwl(PwlConvex::new(pairs(points))?),
            CostSpec::OraclePwl { points } => CostFn::OraclePwl(PwlConvex::new(pairs(points))?),
            CostSpec::Lines { lines, domain } => CostFn::Pwl(PwlConvex::from_lines(&pairs(lines), &domain)?),
            CostSpec::Quadratic { a, b, c, domain } => {
                if a.0 < Rat::zero() {
                    return Err(Error::Domain("quadratic coefficient must be nonnegative".into()));
                }
                CostFn::Quadratic(Box::new(Quadratic {
                    a: a.0,
                    b: b.0,
                    c: c.0,
                    domain,
                }))
            }
        })
    }

    pub fn of(c: &CostFn) -> Result<CostSpec> {
        let points = |p: &PwlConvex| p.points().map(|(x, v)| [q(x), q(v)]).collect();
        Ok(match c {
            CostFn::Pwl(p) => CostSpec::Pwl { points: points(p) },
            CostFn::OraclePwl(p) => CostSpec::OraclePwl { points: points(p) },
            CostFn::Quadratic(f) => CostSpec::Quadratic {
                a: q(&f.a),
                b: q(&f.b),
                c: q(&f.c),
                domain: f.domain.clone(),
            },
            CostFn::Custom(_) => {
                return Err(Error::Precondition(
                    "caller-supplied oracle costs cannot be serialized".into(),
                ))
            }
        })
    }
}

/// `state I + action . x + noise . D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    pub state: Q,
    pub action: Vec<Q>,
    #[serde(default)]
    pub noise: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub states: Interval,
    /// Rows of `A x >= b + delta_b I`.
    #[serde(default)]
    pub a: Vec<Vec<Q>>,
    #[serde(default)]
    pub b: Vec<Q>,
    /// Omitted means all zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta_b: Vec<Q>,
    pub transition: AffineSpec,
    /// Argument of the noise cost; required when `cost_noise` is present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_argument: Option<AffineSpec>,
    pub cost_state: Vec<Plane>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_noise: Option<CostSpec>,
    #[serde(default)]
    pub noise: Vec<DistSpec>,
}

/// Explicit dynamic program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpSpec {
    pub format: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub eps: Q,
    pub initial_state: Q,
    pub stages: Vec<StageSpec>,
    pub terminal: CostSpec,
    pub terminal_states: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_min: Option<Q>,
}

fn at<T>(field: impl Into<String>, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ (Error::Validation { .. } | Error::Schema(_)) => e,
        other => Error::validation(field, other.to_string()),
    })
}

impl StageSpec {
    fn build(self, k: usize) -> Result<StageModel> {
        let field = |name: &str| format!("stages[{k}].{name}");
        let p = self.transition.action.len();
        let noise = self
            .noise
            .into_iter()
            .enumerate()
            .map(|(i, d)| at(field(&format!("noise[{i}]")), d.build()))
            .collect::<Result<Vec<_>>>()?;
        let l = noise.len();
        let sigma = match (&self.cost_argument, &self.cost_noise) {
            (Some(s), _) => s.clone(),
            (None, None) => AffineSpec {
                state: Q(Rat::zero()),
                action: vec![Q(Rat::zero()); p],
                noise: vec![Q(Rat::zero()); l],
            },
            (None, Some(_)) => {
                return Err(Error::Schema(format!(
                    "{}: required with cost_noise",
                    field("cost_argument")
                )))
            }
        };
        let delta_b = if self.delta_b.is_empty() {
            vec![Rat::zero(); self.b.len()]
        } else {
            un(self.delta_b)
        };
        let pad = |v: Vec<Q>| if v.is_empty() { vec![Rat::zero(); l] } else { un(v) };
        let cost_noise = match self.cost_noise {
            Some(c) => Some(at(field("cost_noise"), c.build())?),
            None => None,
        };
        Ok(StageModel {
            a: self.a.into_iter().map(un).collect(),
            b: un(self.b),
            delta_b,
            theta_state: self.transition.state.0,
            theta_action: un(self.transition.action),
            theta_noise: pad(self.transition.noise),
            sigma_state: sigma.state.0,
            sigma_action: un(sigma.action),
            sigma_noise: pad(sigma.noise),
            cost_state: at(field("cost_state"), MaxAffine::new(self.cost_state))?,
            cost_noise,
            noise,
            states: self.states,
        })
    }

    fn of(s: &StageModel) -> Result<StageSpec> {
        Ok(StageSpec {
            states: s.states.clone(),
            a: s.a.iter().map(|r| qs(r)).collect(),
            b: qs(&s.b),
            delta_b: qs(&s.delta_b),
            transition: AffineSpec {
                state: q(&s.theta_state),
                action: qs(&s.theta_action),
                noise: qs(&s.theta_noise),
            },
            cost_argument: (s.cost_noise.is_some()
                || !s.sigma_state.is_zero()
                || s.sigma_action.iter().chain(&s.sigma_noise).any(|c| !c.is_zero()))
            .then(|| AffineSpec {
                state: q(&s.sigma_state),
                action: qs(&s.sigma_action),
                noise: qs(&s.sigma_noise),
            }),
            cost_state: s.cost_state.planes.clone(),
            cost_noise: s.cost_noise.as_ref().map(CostSpec::of).transpose()?,
            noise: s.noise.iter().map(DistSpec::of).collect(),
        })
    }
}

impl DpSpec {
    pub fn build(self) -> Result<DpInstance> {
        if self.stages.is_empty() {
            return Err(Error::Schema("stages: at least one period is required".into()));
        }
        let stages = self
            .stages
            .into_iter()
            .enumerate()
            .map(|(k, s)| s.build(k))
            .collect::<Result<Vec<_>>>()?;
        let inst = DpInstance {
            stages,
            terminal: at("terminal", self.terminal.build())?,
            terminal_states: self.terminal_states,
            terminal_min: self.terminal_min.map(|m| m.0),
            initial_state: self.initial_state.0,
            eps: self.eps.0,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn of(inst: &DpInstance) -> Result<DpSpec> {
        Ok(DpSpec {
            format: FORMAT,
            model: None,
            eps: q(&inst.eps),
            initial_state: q(&inst.initial_state),
            stages: inst.stages.iter().map(StageSpec::of).collect::<Result<_>>()?,
            terminal: CostSpec::of(&inst.terminal)?,
            terminal_states: inst.terminal_states.clone(),
            terminal_min: inst.terminal_min.as_ref().map(q),
        })
    }
}

/// Deserializes with the JSON path of the first offending field in the message.
pub fn from_value<T: DeserializeOwned>(v: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = match e.path().to_string() {
            p if p == "." => "document".to_string(),
            p => p,
        };
        Error::Schema(format!("{path}: {}", e.into_inner()))
    })
}

fn check_format(doc: &serde_json::Value) -> Result<()> {
    match doc.get("format").and_then(|f| f.as_u64()) {
        Some(FORMAT) => Ok(()),
        Some(other) => Err(Error::Schema(format!(
            "format: version {other} is not supported (expected {FORMAT})"
        ))),
        None => Err(Error::Schema(format!(
            "format: missing or not an integer (expected {FORMAT})"
        ))),
    }
}

/// Parses and validates an instance document: either an explicit program
/// (`"model": "dp"`, the default) or a resource network (`"model": "resource"`).
pub fn parse_instance(text: &str) -> Result<DpInstance> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("not valid JSON: {e}")))?;
    if !doc.is_object() {
        return Err(Error::Schema("document must be a JSON object".into()));
    }
    check_format(&doc)?;
    match doc.get("model").and_then(|m| m.as_str()).unwrap_or("dp") {
        "dp" => from_value::<DpSpec>(doc)?.build(),
        "resource" => from_value::<ResourceSpec>(doc)?.build(),
        other => Err(Error::Schema(format!(
            "model: unknown model `{other}` (expected `dp` or `resource`)"
        ))),
    }
}

pub fn load_instance(path: &Path) -> Result<DpInstance> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text)
}

/// Serializes an instance as an explicit-program document.
pub fn instance_to_json(inst: &DpInstance) -> Result<String> {
    let spec = DpSpec::of(inst)?;
    serde_json::to_string_pretty(&spec).map_err(|e| Error::Schema(e.to_string()))
}

/// Input of the standalone convolution command: `sum_i weights[i] X_i`
/// compressed to a `k`-approximate CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolveSpec {
    pub format: u64,
    pub variables: Vec<DistSpec>,
    pub weights: Vec<Q>,
    pub k: Q,
}

impl ConvolveSpec {
    pub fn parse(text: &str) -> Result<(Vec<RandVar>, Vec<Rat>, Rat)> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("not valid JSON: {e}")))?;
        check_format(&doc)?;
        let spec: ConvolveSpec = from_value(doc)?;
        if spec.variables.len() != spec.weights.len() {
            return Err(Error::Schema("weights: one weight per variable is required".into()));
        }
        let vars = spec
            .variables
            .into_iter()
            .enumerate()
            .map(|(i, d)| at(format!("variables[{i}]"), d.build()))
            .collect::<Result<Vec<_>>>()?;
        Ok((vars, un(spec.weights), spec.k.0))
    }
}
