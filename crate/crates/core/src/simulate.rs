//! Monte-Carlo evaluation of the stored policy in floating point.
//!
//! Paths are split into fixed-size chunks, each with its own seeded stream, so
//! results do not depend on the number of worker threads.

use crate::error::{Error, Result};
use crate::model::{pwl_eval_f64, DpInstance};
use crate::rat::{self, Rat};
use crate::scheme::ValueFnApprox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutStats {
    pub paths: usize,
    pub mean: f64,
    pub std_err: f64,
}

struct PieceF64 {
    hi: f64,
    offset: Vec<f64>,
    slope: Vec<f64>,
}

struct PlaneF64 {
    state: f64,
    action: Vec<f64>,
    constant: f64,
}

struct StageF64 {
    lo: f64,
    hi: f64,
    pieces: Vec<PieceF64>,
    planes: Vec<PlaneF64>,
    theta: (f64, Vec<f64>, Vec<f64>),
    sigma: (f64, Vec<f64>, Vec<f64>),
}

fn f(x: &Rat) -> f64 {
    rat::to_f64(x)
}

fn fv(xs: &[Rat]) -> Vec<f64> {
    xs.iter().map(f).collect()
}

fn dot(c0: f64, cx: &[f64], cd: &[f64], state: f64, x: &[f64], d: &[f64]) -> f64 {
    c0 * state + cx.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + cd.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()
}

/// Mean realized cost of following the stored policy from the initial state.
pub fn rollout(inst: &DpInstance, vfa: &ValueFnApprox, paths: usize, seed: u64) -> Result<RolloutStats> {
    if paths < 2 {
        return Err(Error::Domain("need at least two paths".into()));
    }
    let stages: Vec<StageF64> = inst
        .stages
        .iter()
        .zip(&vfa.stages)
        .map(|(st, art)| StageF64 {
            lo: f(&st.states.lo),
            hi: f(&st.states.hi),
            pieces: art
                .policy
                .iter()
                .map(|p| PieceF64 {
                    hi: f(&p.hi),
                    offset: fv(&p.offset),
                    slope: fv(&p.slope),
                })
                .collect(),
            planes: st
                .cost_state
                .planes
                .iter()
                .map(|h| PlaneF64 {
                    state: f(&h.coef_state),
                    action: fv(&h.coef_action),
                    constant: f(&h.constant),
                })
                .collect(),
            theta: (f(&st.theta_state), fv(&st.theta_action), fv(&st.theta_noise)),
            sigma: (f(&st.sigma_state), fv(&st.sigma_action), fv(&st.sigma_noise)),
        })
        .collect();
    let chunks = paths.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(paths - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            let mut d = Vec::new();
            for _ in 0..n {
                let mut state = f(&inst.initial_state);
                let mut cost = 0.0;
                for (t, sf) in stages.iter().enumerate() {
                    let st = &inst.stages[t];
                    state = state.clamp(sf.lo, sf.hi);
                    let k = sf.pieces.partition_point(|p| p.hi < state).min(sf.pieces.len() - 1);
                    let piece = &sf.pieces[k];
                    let x: Vec<f64> = piece
                        .offset
                        .iter()
                        .zip(&piece.slope)
                        .map(|(a, b)| a + b * state)
                        .collect();
                    d.clear();
                    d.extend(st.noise.iter().map(|r| f(&r.sample(rng.gen::<f64>()))));
                    cost += sf
                        .planes
                        .iter()
                        .map(|h| {
                            h.state * state + h.action.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + h.constant
                        })
                        .fold(f64::NEG_INFINITY, f64::max);
                    if let Some(g) = &st.cost_noise {
                        cost += g.eval_f64(dot(sf.sigma.0, &sf.sigma.1, &sf.sigma.2, state, &x, &d));
                    }
                    state = dot(sf.theta.0, &sf.theta.1, &sf.theta.2, state, &x, &d);
                }
                let end = &inst.terminal_states;
                state = state.clamp(f(&end.lo), f(&end.hi));
                cost += match inst.terminal.explicit() {
                    Some(p) => pwl_eval_f64(p, state),
                    None => inst.terminal.eval_f64(state),
                };
                s += cost;
                s2 += cost * cost;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = paths as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(RolloutStats {
        paths,
        mean,
        std_err: (var / n).sqrt(),
    })
}
