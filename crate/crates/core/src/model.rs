//! Stage data, whole instances, validation and derived constants.

use crate::approx::{FnOracle, Quadratic};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::lp::{solve_lp, LpProblem, Sense, Status};
use crate::pwl::{MaxAffine, PwlConvex};
use crate::randvar::RandVar;
use crate::rat::{self, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::sync::Arc;

/// A univariate convex cost, either with explicit pieces or behind a value oracle.
#[derive(Clone)]
pub enum CostFn {
    /// Explicit breakpoints and slopes.
    Pwl(PwlConvex),
    /// Smooth convex quadratic, available only through evaluations.
    Quadratic(Box<Quadratic>),
    /// Piecewise-linear data that the schemes may only evaluate pointwise.
    OraclePwl(PwlConvex),
    /// Caller-supplied oracle; must report an exact minimizer.
    Custom(Arc<dyn FnOracle + Send + Sync>),
}

impl fmt::Debug for CostFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFn::Pwl(p) => f.debug_tuple("Pwl").field(p).finish(),
            CostFn::Quadratic(q) => f.debug_tuple("Quadratic").field(q).finish(),
            CostFn::OraclePwl(p) => f.debug_tuple("OraclePwl").field(p).finish(),
            CostFn::Custom(o) => write!(f, "Custom(domain {})", o.domain()),
        }
    }
}

impl PartialEq for CostFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CostFn::Pwl(a), CostFn::Pwl(b)) | (CostFn::OraclePwl(a), CostFn::OraclePwl(b)) => a == b,
            (CostFn::Quadratic(a), CostFn::Quadratic(b)) => a == b,
            (CostFn::Custom(a), CostFn::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl CostFn {
    /// The explicit pieces, when the cost is given in that form.
    pub fn explicit(&self) -> Option<&PwlConvex> {
        match self {
            CostFn::Pwl(p) => Some(p),
            _ => None,
        }
    }

    /// Same function, exposed only through its oracle.
    pub fn into_oracle(self) -> CostFn {
        match self {
            CostFn::Pwl(p) => CostFn::OraclePwl(p),
            other => other,
        }
    }

    /// Maximum over the domain (attained at an endpoint by convexity).
    pub fn max_value(&self) -> Rat {
        let d = self.domain();
        rat::max(&self.eval(&d.lo), &self.eval(&d.hi))
    }

    pub fn min_value(&self) -> Option<Rat> {
        self.argmin().map(|x| self.eval(&x))
    }

    pub fn pieces(&self) -> usize {
        match self {
            CostFn::Pwl(p) | CostFn::OraclePwl(p) => p.len().saturating_sub(1),
            _ => 0,
        }
    }

    /// Evaluation in floating point for simulations.
    pub fn eval_f64(&self, x: f64) -> f64 {
        match self {
            CostFn::Pwl(p) | CostFn::OraclePwl(p) => pwl_eval_f64(p, x),
            CostFn::Quadratic(q) => {
                let d = x - rat::to_f64(&q.b);
                rat::to_f64(&q.a) * d * d + rat::to_f64(&q.c)
            }
            CostFn::Custom(o) => rat::to_f64(&o.eval(&rat::from_f64(x))),
        }
    }
}

/// Linear interpolation in `f64`, extrapolating linearly outside the domain.
pub fn pwl_eval_f64(p: &PwlConvex, x: f64) -> f64 {
    let xs: Vec<f64> = p.xs().iter().map(rat::to_f64).collect();
    let vs: Vec<f64> = p.vs().iter().map(rat::to_f64).collect();
    if xs.len() == 1 {
        return vs[0];
    }
    let i = xs.partition_point(|b| *b <= x).clamp(1, xs.len() - 1);
    let (x0, x1, v0, v1) = (xs[i - 1], xs[i], vs[i - 1], vs[i]);
    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
}

impl FnOracle for CostFn {
    fn domain(&self) -> Interval {
        match self {
            CostFn::Pwl(p) | CostFn::OraclePwl(p) => p.domain(),
            CostFn::Quadratic(q) => q.domain.clone(),
            CostFn::Custom(o) => o.domain(),
        }
    }
    fn eval(&self, x: &Rat) -> Rat {
        match self {
            CostFn::Pwl(p) | CostFn::OraclePwl(p) => p.value(x),
            CostFn::Quadratic(q) => q.eval(x),
            CostFn::Custom(o) => o.eval(x),
        }
    }
    fn lipschitz(&self) -> Option<Rat> {
        match self {
            CostFn::Pwl(p) | CostFn::OraclePwl(p) => Some(p.lipschitz()),
            CostFn::Quadratic(q) => q.lipschitz(),
            CostFn::Custom(o) => o.lipschitz(),
        }
    }
    fn argmin(&self) -> Option<Rat> {
        match self {
            CostFn::Pwl(p) | CostFn::OraclePwl(p) => Some(p.argmin()),
            CostFn::Quadratic(q) => q.argmin(),
            CostFn::Custom(o) => o.argmin(),
        }
    }
}

/// One period: action polyhedron, transition, costs and noise.
///
/// Actions are `x >= 0` with `a x >= b + delta_b I`. The next state is
/// `theta_state I + theta_action . x + theta_noise . D` and the noise cost is
/// `cost_noise(sigma_state I + sigma_action . x + sigma_noise . D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageModel {
    pub a: Vec<Vec<Rat>>,
    pub b: Vec<Rat>,
    pub delta_b: Vec<Rat>,
    pub theta_state: Rat,
    pub theta_action: Vec<Rat>,
    pub theta_noise: Vec<Rat>,
    pub sigma_state: Rat,
    pub sigma_action: Vec<Rat>,
    pub sigma_noise: Vec<Rat>,
    pub cost_state: MaxAffine,
    pub cost_noise: Option<CostFn>,
    pub noise: Vec<RandVar>,
    pub states: Interval,
}

impl StageModel {
    pub fn action_dim(&self) -> usize {
        self.theta_action.len()
    }

    pub fn noise_dim(&self) -> usize {
        self.noise.len()
    }

    /// Range of `w . D` over the noise supports.
    pub fn noise_range(&self, w: &[Rat]) -> Interval {
        let mut lo = Rat::zero();
        let mut hi = Rat::zero();
        for (c, d) in w.iter().zip(&self.noise) {
            let s = d.support();
            let (a, b) = (c * &s.lo, c * &s.hi);
            lo += rat::min(&a, &b);
            hi += rat::max(&a, &b);
        }
        Interval { lo, hi }
    }

    /// Polyhedron `{(I, x) : I in states, x >= 0, a x >= b + delta_b I}` with
    /// the state as variable 0, minimizing `objective`.
    pub fn joint_lp(&self, objective: Vec<Rat>) -> LpProblem {
        let p = self.action_dim();
        let mut lp = LpProblem::new(objective);
        lp.set_bounds(0, Some(self.states.lo.clone()), Some(self.states.hi.clone()));
        for (i, row) in self.a.iter().enumerate() {
            let mut coefs = Vec::with_capacity(p + 1);
            coefs.push(-&self.delta_b[i]);
            coefs.extend(row.iter().cloned());
            lp.add_row(coefs, Sense::Ge, self.b[i].clone());
        }
        lp
    }

    /// Exact range of `c_state I + c_action . x` over the joint polyhedron,
    /// `None` when unbounded.
    pub fn affine_range(&self, c_state: &Rat, c_action: &[Rat]) -> Result<Option<Interval>> {
        let mut obj = vec![c_state.clone()];
        obj.extend(c_action.iter().cloned());
        let lo = solve_lp(&self.joint_lp(obj.clone()))?;
        let hi = solve_lp(&self.joint_lp(obj.iter().map(|c| -c).collect()))?;
        match (lo.status, hi.status) {
            (Status::Optimal, Status::Optimal) => Ok(Some(Interval::new(lo.value, -hi.value)?)),
            (Status::Infeasible, _) | (_, Status::Infeasible) => Err(Error::Infeasible),
            _ => Ok(None),
        }
    }

    /// Action polyhedron at a fixed state.
    pub fn is_action_feasible(&self, state: &Rat, x: &[Rat]) -> bool {
        x.iter().all(|v| !v.is_negative())
            && self.a.iter().enumerate().all(|(i, row)| {
                let lhs: Rat = row.iter().zip(x).map(|(a, v)| a * v).sum();
                lhs >= &self.b[i] + &self.delta_b[i] * state
            })
    }

    pub fn transition(&self, state: &Rat, x: &[Rat], d: &[Rat]) -> Rat {
        dot_affine(&self.theta_state, &self.theta_action, &self.theta_noise, state, x, d)
    }

    pub fn cost_argument(&self, state: &Rat, x: &[Rat], d: &[Rat]) -> Rat {
        dot_affine(&self.sigma_state, &self.sigma_action, &self.sigma_noise, state, x, d)
    }

    /// Realized period cost.
    pub fn cost(&self, state: &Rat, x: &[Rat], d: &[Rat]) -> Rat {
        let mut c = self.cost_state.eval(state, x);
        if let Some(g) = &self.cost_noise {
            c += g.eval(&self.cost_argument(state, x, d));
        }
        c
    }
}

fn dot_affine(c0: &Rat, cx: &[Rat], cd: &[Rat], state: &Rat, x: &[Rat], d: &[Rat]) -> Rat {
    let mut v = c0 * state;
    for (c, y) in cx.iter().zip(x) {
        v += c * y;
    }
    for (c, y) in cd.iter().zip(d) {
        v += c * y;
    }
    v
}

/// A finite-horizon problem with `T = stages.len()` periods.
#[derive(Debug, Clone, PartialEq)]
pub struct DpInstance {
    pub stages: Vec<StageModel>,
    pub terminal: CostFn,
    /// State space after the last period.
    pub terminal_states: Interval,
    /// Declared positive lower bound on the terminal cost (oracle terminals).
    pub terminal_min: Option<Rat>,
    pub initial_state: Rat,
    pub eps: Rat,
}

/// Constants summarizing an instance's size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derived {
    pub gamma: Rat,
    /// Largest single-period cost; `None` if the action set is unbounded in a costly direction.
    pub u_g: Option<Rat>,
    pub kappa: Rat,
    pub mu: Rat,
    pub u_s: Rat,
    pub u_a: Rat,
    pub u_f: Rat,
    pub m_star: usize,
    pub q_star: usize,
    pub n_star: BigInt,
}

impl Derived {
    /// Analytic Lipschitz bound of the stage value function at period `t` (1-based).
    pub fn kappa_bar(&self, horizon: usize, t: usize) -> Rat {
        let base = Rat::from_integer(3.into()) * &self.u_f * &self.u_a * &self.u_a;
        rat::pow(&base, (horizon + 1 - t) as u32) * &self.kappa
    }
}

impl DpInstance {
    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    /// States reachable at period `t` (1-based, up to `T + 1`).
    pub fn states(&self, t: usize) -> &Interval {
        if t == self.horizon() + 1 {
            &self.terminal_states
        } else {
            &self.stages[t - 1].states
        }
    }

    /// True when every univariate cost has explicit pieces.
    pub fn is_explicit(&self) -> bool {
        self.terminal.explicit().is_some()
            && self
                .stages
                .iter()
                .all(|s| s.cost_noise.as_ref().is_none_or(|g| g.explicit().is_some()))
    }

    /// Same instance with every univariate cost exposed only as an oracle.
    pub fn with_oracle_costs(&self) -> DpInstance {
        let mut out = self.clone();
        out.terminal = out.terminal.into_oracle();
        for s in out.stages.iter_mut() {
            s.cost_noise = s.cost_noise.take().map(CostFn::into_oracle);
        }
        if out.terminal_min.is_none() {
            out.terminal_min = self.terminal.min_value();
        }
        out
    }

    /// Positive lower bound on the terminal cost.
    pub fn mu(&self) -> Result<Rat> {
        let mu = match (&self.terminal_min, self.terminal.explicit()) {
            (_, Some(p)) => p.restrict(&self.terminal_states)?.min_value(),
            (Some(m), None) => m.clone(),
            (None, None) => self
                .terminal
                .min_value()
                .ok_or_else(|| Error::validation("terminal", "oracle terminal cost needs a declared minimum"))?,
        };
        if !mu.is_positive() {
            return Err(Error::validation(
                "terminal",
                "cost structure: terminal minimum must be positive",
            ));
        }
        Ok(mu)
    }

    /// Structural and closure checks; runs before any approximation work.
    pub fn validate(&self) -> Result<()> {
        let t_max = self.horizon();
        if t_max == 0 {
            return Err(Error::validation("stages", "at least one period is required"));
        }
        if !self.eps.is_positive() {
            return Err(Error::validation("eps", "accuracy must be positive"));
        }
        if !self.stages[0].states.contains(&self.initial_state) {
            return Err(Error::validation(
                "initial_state",
                "domains: initial state outside the first state space",
            ));
        }
        for (k, s) in self.stages.iter().enumerate() {
            self.validate_stage(k, s)?;
        }
        let term = self.terminal.domain();
        if !term.contains_interval(&self.terminal_states) {
            return Err(Error::validation(
                "terminal",
                "terminal cost domain must cover the final state space",
            ));
        }
        if let Some(p) = self.terminal.explicit() {
            if p.restrict(&self.terminal_states)?.min_value().is_negative() {
                return Err(Error::validation(
                    "terminal",
                    "cost structure: terminal cost is negative",
                ));
            }
        }
        if self.terminal.explicit().is_none() && self.terminal.argmin().is_none() {
            return Err(Error::validation(
                "terminal",
                "oracle costs must report an exact minimizer",
            ));
        }
        if let (Some(m), Some(true_min)) = (&self.terminal_min, self.terminal.min_value()) {
            if *m > true_min {
                return Err(Error::validation(
                    "terminal_min",
                    "declared minimum exceeds the terminal cost's minimum",
                ));
            }
        }
        self.mu()?;
        Ok(())
    }

    fn validate_stage(&self, k: usize, s: &StageModel) -> Result<()> {
        let field = |name: &str| format!("stages[{k}].{name}");
        let p = s.action_dim();
        let m = s.a.len();
        if p == 0 {
            return Err(Error::validation(
                field("theta_action"),
                "action vector must be nonempty",
            ));
        }
        if s.a.iter().any(|r| r.len() != p) || s.b.len() != m || s.delta_b.len() != m {
            return Err(Error::validation(field("a"), "constraint dimensions are inconsistent"));
        }
        if s.sigma_action.len() != p {
            return Err(Error::validation(
                field("sigma_action"),
                "length must equal the action dimension",
            ));
        }
        let l = s.noise_dim();
        if s.theta_noise.len() != l || s.sigma_noise.len() != l {
            return Err(Error::validation(
                field("theta_noise"),
                "one coefficient per random variable is required",
            ));
        }
        if s.cost_state.action_dim() != p {
            return Err(Error::validation(
                field("cost_state"),
                "planes must match the action dimension",
            ));
        }
        for (i, d) in s.noise.iter().enumerate() {
            if !d.gamma().is_positive() {
                return Err(Error::validation(
                    format!("stages[{k}].noise[{i}]"),
                    "random events: support endpoints need positive probability",
                ));
            }
        }
        let next = self.states(k + 2);
        for (name, at) in [("lower", &s.states.lo), ("upper", &s.states.hi)] {
            let mut lp = LpProblem::new(vec![Rat::zero(); p]);
            for (i, row) in s.a.iter().enumerate() {
                lp.add_row(row.clone(), Sense::Ge, &s.b[i] + &s.delta_b[i] * at);
            }
            if solve_lp(&lp)?.status != Status::Optimal {
                return Err(Error::validation(
                    field("a"),
                    format!("domains: no feasible action at the {name} end of the state space"),
                ));
            }
        }
        let reach = s
            .affine_range(&s.theta_state, &s.theta_action)?
            .ok_or_else(|| Error::validation(field("theta_action"), "transition is unbounded over the actions"))?;
        let reach = reach.add(&s.noise_range(&s.theta_noise));
        if !next.contains_interval(&reach) {
            return Err(Error::validation(
                field("theta_action"),
                format!("transition reaches {reach}, outside the next state space {next}"),
            ));
        }
        // Costs are nonnegative on the reachable set.
        let mut obj = vec![Rat::zero(); p + 2];
        obj[p + 1] = Rat::one();
        let mut lp = LpProblem::new(obj);
        lp.set_bounds(0, Some(s.states.lo.clone()), Some(s.states.hi.clone()));
        lp.set_bounds(p + 1, None, None);
        for (i, row) in s.a.iter().enumerate() {
            let mut c = vec![-&s.delta_b[i]];
            c.extend(row.iter().cloned());
            c.push(Rat::zero());
            lp.add_row(c, Sense::Ge, s.b[i].clone());
        }
        for h in &s.cost_state.planes {
            let mut c = vec![-&h.coef_state];
            c.extend(h.coef_action.iter().map(|v| -v));
            c.push(Rat::one());
            lp.add_row(c, Sense::Ge, h.constant.clone());
        }
        let low = solve_lp(&lp)?;
        if low.status != Status::Optimal || low.value.is_negative() {
            return Err(Error::validation(
                field("cost_state"),
                "cost structure: state-action cost is negative",
            ));
        }
        if let Some(g) = &s.cost_noise {
            let arg = s
                .affine_range(&s.sigma_state, &s.sigma_action)?
                .ok_or_else(|| Error::validation(field("sigma_action"), "cost argument is unbounded"))?
                .add(&s.noise_range(&s.sigma_noise));
            if !g.domain().contains_interval(&arg) {
                return Err(Error::validation(
                    field("cost_noise"),
                    format!("cost argument reaches {arg}, outside the cost domain {}", g.domain()),
                ));
            }
            if g.argmin().is_none() {
                return Err(Error::validation(
                    field("cost_noise"),
                    "oracle costs must report an exact minimizer",
                ));
            }
            if g.min_value().is_some_and(|v| v.is_negative()) {
                return Err(Error::validation(
                    field("cost_noise"),
                    "cost structure: noise cost is negative",
                ));
            }
        }
        Ok(())
    }

    pub fn derived(&self) -> Result<Derived> {
        let one = Rat::one();
        let mut gamma = one.clone();
        let mut kappa = Rat::zero();
        let mut u_s = self.terminal_states.width();
        let mut u_a = one.clone();
        let mut u_f = one.clone();
        let mut m_star = self.terminal.pieces();
        let mut q_star = 0;
        let mut n_star = BigInt::one();
        let mut u_g = Some(self.terminal.max_value());
        let bump = |acc: &mut Rat, v: &Rat| {
            if v.abs() > *acc {
                *acc = v.abs();
            }
        };
        if let Some(l) = self.terminal.lipschitz() {
            bump(&mut kappa, &l);
        }
        for s in &self.stages {
            for d in &s.noise {
                gamma = rat::min(&gamma, &d.gamma());
                if let Some(b) = d.density_bound() {
                    bump(&mut kappa, &b);
                }
                let n = match d.atom_count() {
                    Some(n) => BigInt::from(n),
                    None => rat::ceil(&d.support().width()),
                };
                n_star = n_star.max(n);
            }
            u_s = rat::max(&u_s, &s.states.width());
            for v in s.a.iter().flatten().chain(&s.b).chain(&s.delta_b) {
                bump(&mut u_a, v);
            }
            let coefs = [&s.theta_state, &s.sigma_state]
                .into_iter()
                .chain(&s.theta_action)
                .chain(&s.sigma_action)
                .chain(&s.theta_noise)
                .chain(&s.sigma_noise);
            for v in coefs {
                bump(&mut u_f, v);
            }
            q_star = q_star.max(s.cost_state.planes.len());
            let mut stage_max = Some(Rat::zero());
            for h in &s.cost_state.planes {
                let l1: Rat = h.coef_state.abs() + h.coef_action.iter().map(|c| c.abs()).sum::<Rat>();
                bump(&mut kappa, &l1);
                let r = s.affine_range(&h.coef_state, &h.coef_action)?;
                stage_max = match (stage_max, r) {
                    (Some(m), Some(r)) => Some(rat::max(&m, &(&r.hi + &h.constant))),
                    _ => None,
                };
            }
            if let Some(g) = &s.cost_noise {
                m_star = m_star.max(g.pieces());
                if let Some(l) = g.lipschitz() {
                    bump(&mut kappa, &l);
                }
                stage_max = stage_max.map(|m| m + g.max_value());
            }
            u_g = match (u_g, stage_max) {
                (Some(a), Some(b)) => Some(rat::max(&a, &b)),
                _ => None,
            };
        }
        if kappa.is_zero() {
            kappa = one;
        }
        Ok(Derived {
            gamma,
            u_g,
            kappa,
            mu: self.mu()?,
            u_s,
            u_a,
            u_f,
            m_star,
            q_star,
            n_star,
        })
    }
}
