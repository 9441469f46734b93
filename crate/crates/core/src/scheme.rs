//! The two backward-recursion approximation schemes and policy extraction.
//!
//! Scheme 1 needs every univariate cost in explicit piecewise-linear form.
//! Scheme 2 only evaluates them, first replacing each by a piecewise-linear
//! function with mixed additive and relative error.

use crate::approx::{scaled_compress_conv, sigma_pi_pwl, FnOracle, PwlOracle};
use crate::calculus;
use crate::canonical::{CanonicalRep, Claim};
use crate::convolve::compress_convolution;
use crate::error::{Error, Result};
use crate::expect::expectation;
use crate::lp::param::{self, PolicyPiece, StageProblem};
use crate::model::{DpInstance, StageModel};
use crate::pwl::PwlConvex;
use crate::randvar::RandVar;
use crate::rat::{self, Rat};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Explicit,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeOptions {
    /// Scheme 2 only: shrink the per-stage accuracy until the compounded
    /// factor provably stays within `1 + eps`.
    pub strict_budget: bool,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions { strict_budget: true }
    }
}

/// Per-stage run record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCertificate {
    pub t: usize,
    /// Claim on the expected noise cost.
    pub noise_claim: Option<Claim>,
    /// Claim on the expected cost-to-go.
    pub next_claim: Claim,
    /// Claim on the stage value before compression.
    pub stage_claim: Claim,
    /// Claim on the stored approximation.
    pub claim: Claim,
    /// Factor the error analysis promises for the stored approximation.
    #[serde(with = "rat::serde_rat")]
    pub promised: Rat,
    pub points: usize,
    pub stage_pieces: usize,
    pub lp_solves: usize,
    pub pivots: usize,
    pub max_bits: u64,
    #[serde(with = "rat::serde_rat")]
    pub kappa_bound: Rat,
    #[serde(with = "rat::serde_rat")]
    pub kappa_exact: Rat,
    #[serde(with = "rat::serde_rat")]
    pub x_unit: Rat,
    #[serde(with = "rat::serde_rat")]
    pub v_unit: Rat,
    pub millis: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub scheme: Scheme,
    pub horizon: usize,
    #[serde(with = "rat::serde_rat")]
    pub eps: Rat,
    /// Per-step compression factor.
    #[serde(with = "rat::serde_rat")]
    pub k: Rat,
    /// Scheme 2: per-stage accuracy and the finer factor for cost-to-go CDFs.
    #[serde(with = "opt_rat")]
    pub eps_bar: Option<Rat>,
    #[serde(with = "opt_rat")]
    pub k_bar: Option<Rat>,
    #[serde(with = "rat::serde_rat")]
    pub mu: Rat,
    pub terminal_claim: Claim,
    /// Claims at `t = 1`.
    pub final_claim: Claim,
    /// `final_claim.k <= 1 + eps`, checked exactly.
    pub within_eps: bool,
    /// Every stage claim is at most its promised factor.
    pub promises_kept: bool,
    /// Stages in increasing `t`.
    pub stages: Vec<StageCertificate>,
    pub millis: u128,
}

mod opt_rat {
    use crate::rat::{self, Rat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        x.as_ref().map(rat::format).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        use serde::de::Error as _;
        Option::<String>::deserialize(d)?
            .map(|s| rat::parse(&s).map_err(D::Error::custom))
            .transpose()
    }
}

/// Everything stored for one period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageArtifacts {
    /// Expected noise cost in terms of `sigma_state I + sigma_action . x`.
    pub noise_cost: Option<PwlConvex>,
    /// Expected cost-to-go in terms of `theta_state I + theta_action . x`.
    pub cost_to_go: PwlConvex,
    /// Exact value of the stage problem over the state space.
    pub stage_value: PwlConvex,
    pub policy: Vec<PolicyPiece>,
    /// Compressed value function.
    pub approx: CanonicalRep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValueFnApprox {
    /// Index `t - 1`.
    pub stages: Vec<StageArtifacts>,
    /// Approximation of the terminal cost used by the last period.
    pub terminal: PwlConvex,
    pub certificate: Certificate,
}

impl ValueFnApprox {
    /// Approximate value at the initial period.
    pub fn value_at(&self, state: &Rat) -> Result<Rat> {
        self.stages[0].approx.eval(state)
    }
}

/// `u -> E~[psi(u + w . D)]` with step CDFs compressed within `k`.
fn expected_cost(psi: &PwlConvex, w: &[Rat], noise: &[RandVar], k: &Rat) -> Result<PwlConvex> {
    if w.iter().all(|c| c.is_zero()) {
        return Ok(psi.clone());
    }
    // `psi(u + w.D) = psi(u - D')` with `D' = -w.D`.
    let neg: Vec<Rat> = w.iter().map(|c| -c).collect();
    let need_neg = !psi.is_nondecreasing();
    let (down, up) = rayon::join(
        || compress_convolution(noise, &neg, k),
        || need_neg.then(|| compress_convolution(noise, w, k)).transpose(),
    );
    let (down, up) = (down?, up?);
    expectation(psi, &down.cdf, up.as_ref().map(|c| &c.cdf))
}

struct StageOutcome {
    artifacts: StageArtifacts,
    cert: StageCertificate,
}

struct StagePlan<'a> {
    t: usize,
    horizon: usize,
    stage: &'a StageModel,
    noise_cost: Option<(PwlConvex, Claim)>,
    next: &'a PwlConvex,
    next_claim: Claim,
    k_noise: Rat,
    k_next: Rat,
    k_compress: Rat,
    kappa_bound: Rat,
    mu: Rat,
    promised: Rat,
}

fn run_stage(plan: StagePlan) -> Result<StageOutcome> {
    let clock = Instant::now();
    let st = plan.stage;
    let (g, noise_claim) = match &plan.noise_cost {
        Some((psi, claim)) => {
            let g = expected_cost(psi, &st.sigma_noise, &st.noise, &plan.k_noise)?;
            (Some(g), Some(calculus::expectation(claim, &plan.k_noise)))
        }
        None => (None, None),
    };
    let z = expected_cost(plan.next, &st.theta_noise, &st.noise, &plan.k_next)?;
    let next_claim = calculus::expectation(&plan.next_claim, &plan.k_next);
    let sweep = param::sweep(&StageProblem {
        stage: st,
        g: g.as_ref(),
        z: &z,
    })?;
    let stage_claim = calculus::stage(noise_claim.as_ref().unwrap_or(&calculus::identity()), &next_claim);
    let relative = if calculus::is_pure(&stage_claim) {
        stage_claim.clone()
    } else {
        calculus::absorb(&stage_claim, &plan.mu)
    };
    let kappa_exact = sweep.value.lipschitz();
    let kappa = rat::max(&plan.kappa_bound, &kappa_exact);
    let phi = PwlOracle(sweep.value.clone());
    let x_star = phi.argmin().expect("piecewise-linear minimizer");
    let scaled = scaled_compress_conv(&phi, &st.states, &x_star, &plan.k_compress, &kappa, &plan.mu)?;
    let claim = calculus::chain(&relative, &Claim::relative(plan.k_compress.clone()));
    let approx = scaled.rep.with_claim(claim.clone());
    let cert = StageCertificate {
        t: plan.t,
        noise_claim,
        next_claim,
        stage_claim,
        claim,
        promised: plan.promised,
        points: approx.len(),
        stage_pieces: sweep.value.len(),
        lp_solves: sweep.solves,
        pivots: sweep.pivots,
        max_bits: approx.max_bits(),
        kappa_bound: plan.kappa_bound,
        kappa_exact,
        x_unit: scaled.scaling.x_unit,
        v_unit: scaled.scaling.v_unit,
        millis: clock.elapsed().as_millis(),
    };
    debug_assert!(plan.horizon >= plan.t);
    Ok(StageOutcome {
        artifacts: StageArtifacts {
            noise_cost: g,
            cost_to_go: z,
            stage_value: sweep.value,
            policy: sweep.policy,
            approx,
        },
        cert,
    })
}

/// Relative-error approximation of the value functions for explicit costs.
pub fn apx_scheme1(inst: &DpInstance) -> Result<ValueFnApprox> {
    let clock = Instant::now();
    inst.validate()?;
    if !inst.is_explicit() {
        return Err(Error::Precondition(
            "scheme 1 needs explicit piecewise-linear costs; use scheme 2 for oracle costs".into(),
        ));
    }
    let der = inst.derived()?;
    let horizon = inst.horizon();
    let budget = Rat::one() + &inst.eps;
    let k = rat::lower_root(&budget, 2 * horizon as u32);
    let terminal = inst
        .terminal
        .explicit()
        .expect("explicit")
        .restrict(&inst.terminal_states)?;
    let mut stages = Vec::with_capacity(horizon);
    let mut certs = Vec::with_capacity(horizon);
    let mut next = terminal.clone();
    let mut next_claim = Claim::exact();
    for t in (1..=horizon).rev() {
        let st = &inst.stages[t - 1];
        let noise_cost = st
            .cost_noise
            .as_ref()
            .map(|g| (g.explicit().expect("explicit").clone(), Claim::exact()));
        let out = run_stage(StagePlan {
            t,
            horizon,
            stage: st,
            noise_cost,
            next: &next,
            next_claim: next_claim.clone(),
            k_noise: k.clone(),
            k_next: k.clone(),
            k_compress: k.clone(),
            kappa_bound: der.kappa_bar(horizon, t),
            mu: der.mu.clone(),
            promised: rat::pow(&k, 2 * (horizon + 1 - t) as u32),
        })?;
        next = out.artifacts.approx.to_pwl()?;
        next_claim = out.cert.claim.clone();
        stages.push(out.artifacts);
        certs.push(out.cert);
    }
    stages.reverse();
    certs.reverse();
    Ok(finish(
        Scheme::Explicit,
        inst,
        k,
        None,
        None,
        der.mu,
        Claim::exact(),
        terminal,
        stages,
        certs,
        clock,
    ))
}

/// Per-stage accuracy, step factor and cost-to-go factor for scheme 2.
pub fn scheme2_budget(eps: &Rat, horizon: usize, strict: bool) -> (Rat, Rat, Rat) {
    let n = 2 * horizon as u32 + 1;
    let mut eps_bar = eps / Rat::from_integer(n.into());
    let limit = Rat::one() + eps;
    loop {
        let k = Rat::one() + &eps_bar;
        if !strict || rat::pow(&k, n) <= limit {
            let k_bar = Rat::one() + &eps_bar / Rat::from_integer(2.into());
            return (eps_bar, k, k_bar);
        }
        eps_bar /= Rat::from_integer(2.into());
    }
}

/// Approximation of the value functions when univariate costs are oracles.
pub fn apx_scheme2(inst: &DpInstance, opts: SchemeOptions) -> Result<ValueFnApprox> {
    let clock = Instant::now();
    inst.validate()?;
    let der = inst.derived()?;
    let horizon = inst.horizon();
    let mu = der.mu.clone();
    let (eps_bar, k, k_bar) = scheme2_budget(&inst.eps, horizon, opts.strict_budget);
    let sigma = &mu * &eps_bar / Rat::from_integer(2.into());
    let terminal = sigma_pi_pwl(&inst.terminal, &inst.terminal_states, &sigma, &k_bar)?;
    let terminal_claim = Claim::new(sigma.clone(), k_bar.clone());
    let mut next = terminal.clone();
    let mut next_claim = calculus::absorb(&terminal_claim, &mu);
    let mut stages = Vec::with_capacity(horizon);
    let mut certs = Vec::with_capacity(horizon);
    for t in (1..=horizon).rev() {
        let st = &inst.stages[t - 1];
        let noise_cost = match &st.cost_noise {
            Some(g) => Some((
                sigma_pi_pwl(g, &g.domain(), &sigma, &k_bar)?,
                Claim::new(sigma.clone(), k_bar.clone()),
            )),
            None => None,
        };
        let out = run_stage(StagePlan {
            t,
            horizon,
            stage: st,
            noise_cost,
            next: &next,
            next_claim: next_claim.clone(),
            k_noise: k.clone(),
            k_next: k_bar.clone(),
            k_compress: k.clone(),
            kappa_bound: der.kappa_bar(horizon, t),
            mu: mu.clone(),
            promised: rat::pow(&k, 2 * (horizon + 1 - t) as u32 + 1),
        })?;
        next = out.artifacts.approx.to_pwl()?;
        next_claim = out.cert.claim.clone();
        stages.push(out.artifacts);
        certs.push(out.cert);
    }
    stages.reverse();
    certs.reverse();
    Ok(finish(
        Scheme::Oracle,
        inst,
        k,
        Some(eps_bar),
        Some(k_bar),
        mu,
        terminal_claim,
        terminal,
        stages,
        certs,
        clock,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    scheme: Scheme,
    inst: &DpInstance,
    k: Rat,
    eps_bar: Option<Rat>,
    k_bar: Option<Rat>,
    mu: Rat,
    terminal_claim: Claim,
    terminal: PwlConvex,
    stages: Vec<StageArtifacts>,
    certs: Vec<StageCertificate>,
    clock: Instant,
) -> ValueFnApprox {
    let final_claim = certs[0].claim.clone();
    let within_eps = final_claim.sigma.is_zero() && final_claim.k <= Rat::one() + &inst.eps;
    let promises_kept = certs.iter().all(|c| c.claim.sigma.is_zero() && c.claim.k <= c.promised);
    ValueFnApprox {
        stages,
        terminal,
        certificate: Certificate {
            scheme,
            horizon: inst.horizon(),
            eps: inst.eps.clone(),
            k,
            eps_bar,
            k_bar,
            mu,
            terminal_claim,
            final_claim,
            within_eps,
            promises_kept,
            stages: certs,
            millis: clock.elapsed().as_millis(),
        },
    }
}

/// Runs the scheme matching the instance: explicit costs use scheme 1.
pub fn solve(inst: &DpInstance, scheme: Option<Scheme>, opts: SchemeOptions) -> Result<ValueFnApprox> {
    match scheme.unwrap_or(if inst.is_explicit() {
        Scheme::Explicit
    } else {
        Scheme::Oracle
    }) {
        Scheme::Explicit => apx_scheme1(inst),
        Scheme::Oracle => apx_scheme2(inst, opts),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyAnswer {
    #[serde(with = "rat::serde_rat_vec")]
    pub action: Vec<Rat>,
    /// Optimal value of the stage problem at the state.
    #[serde(with = "rat::serde_rat")]
    pub stage_value: Rat,
    /// Stored approximation at the state.
    #[serde(with = "rat::serde_rat")]
    pub approx_value: Rat,
}

/// Solves the stage problem of period `t` (1-based) at `state` against the
/// stored expected-cost functions.
pub fn policy_query(inst: &DpInstance, vfa: &ValueFnApprox, t: usize, state: &Rat) -> Result<PolicyAnswer> {
    if t == 0 || t > inst.horizon() || t > vfa.stages.len() {
        return Err(Error::Domain(format!("period {t} outside 1..={}", inst.horizon())));
    }
    let st = &inst.stages[t - 1];
    if !st.states.contains(state) {
        return Err(Error::Domain(format!(
            "state {} outside {}",
            rat::format(state),
            st.states
        )));
    }
    let art = &vfa.stages[t - 1];
    let (action, stage_value) = param::solve_at(
        &StageProblem {
            stage: st,
            g: art.noise_cost.as_ref(),
            z: &art.cost_to_go,
        },
        state,
    )?;
    Ok(PolicyAnswer {
        action,
        stage_value,
        approx_value: art.approx.eval(state)?,
    })
}
