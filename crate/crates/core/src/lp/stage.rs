//! The stage problem as a single explicit linear program.

use super::{solve_lp, LpProblem, Sense, Status};
use crate::error::{Error, Result};
use crate::model::StageModel;
use crate::pwl::PwlConvex;
use crate::rat::Rat;
use num_traits::{One, Zero};

/// Column layout of a stage LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageColumns {
    /// Column of the state when it is a decision variable.
    pub state: Option<usize>,
    /// First action column; actions occupy `action..action + p`.
    pub action: usize,
    pub tau_state: usize,
    pub tau_noise: usize,
    pub tau_next: usize,
    /// Columns of `sigma_action . x` and `theta_action . x` in the linked form.
    pub linked: Option<(usize, usize)>,
}

/// Distinct `(slope, intercept)` lines of a convex piecewise-linear function.
fn lines(f: &PwlConvex) -> Vec<(Rat, Rat)> {
    let mut ls = f.to_lines();
    ls.sort();
    ls.dedup();
    ls
}

fn assemble(
    stage: &StageModel,
    state: Option<&Rat>,
    g: Option<&PwlConvex>,
    z: &PwlConvex,
    linked: bool,
) -> (LpProblem, StageColumns) {
    let p = stage.action_dim();
    let mut n = 0;
    let state_col = state.is_none().then(|| {
        n += 1;
        0
    });
    let action = n;
    n += p;
    let (tau_state, tau_noise, tau_next) = (n, n + 1, n + 2);
    n += 3;
    let linked_cols = linked.then(|| {
        n += 2;
        (n - 2, n - 1)
    });
    let mut objective = vec![Rat::zero(); n];
    objective[tau_state] = Rat::one();
    objective[tau_next] = Rat::one();
    if g.is_some() {
        objective[tau_noise] = Rat::one();
    }
    let mut lp = LpProblem::new(objective);
    for j in [tau_state, tau_noise, tau_next] {
        lp.set_bounds(j, None, None);
    }
    if let Some(c) = state_col {
        lp.set_bounds(c, Some(stage.states.lo.clone()), Some(stage.states.hi.clone()));
    }
    if g.is_none() {
        lp.set_bounds(tau_noise, Some(Rat::zero()), Some(Rat::zero()));
    }
    // `coef_state * I` moves to the left-hand side when the state is a variable.
    let push = |lp: &mut LpProblem, mut coefs: Vec<Rat>, coef_state: &Rat, rhs: Rat| match (state, state_col) {
        (Some(i), _) => lp.add_row(coefs, Sense::Ge, rhs + coef_state * i),
        (None, Some(c)) => {
            coefs[c] = -coef_state;
            lp.add_row(coefs, Sense::Ge, rhs)
        }
        (None, None) => unreachable!(),
    };
    for (i, row) in stage.a.iter().enumerate() {
        let mut c = vec![Rat::zero(); n];
        c[action..action + p].clone_from_slice(row);
        push(&mut lp, c, &stage.delta_b[i], stage.b[i].clone());
    }
    for h in &stage.cost_state.planes {
        let mut c = vec![Rat::zero(); n];
        for (j, a) in h.coef_action.iter().enumerate() {
            c[action + j] = -a;
        }
        c[tau_state] = Rat::one();
        push(&mut lp, c, &h.coef_state, h.constant.clone());
    }
    if let Some((w, y)) = linked_cols {
        lp.set_bounds(w, None, None);
        lp.set_bounds(y, None, None);
        for (col, coefs) in [(w, &stage.sigma_action), (y, &stage.theta_action)] {
            let mut c = vec![Rat::zero(); n];
            for (j, a) in coefs.iter().enumerate() {
                c[action + j] = a.clone();
            }
            c[col] = -Rat::one();
            lp.add_row(c, Sense::Eq, Rat::zero());
        }
    }
    let mut epigraph = |f: &PwlConvex, tau: usize, c_state: &Rat, c_action: &[Rat], link: Option<usize>| {
        for (s, b) in lines(f) {
            let mut c = vec![Rat::zero(); n];
            match link {
                Some(col) => c[col] = -&s,
                None => {
                    for (j, a) in c_action.iter().enumerate() {
                        c[action + j] = -(&s * a);
                    }
                }
            }
            c[tau] = Rat::one();
            push(&mut lp, c, &(&s * c_state), b);
        }
    };
    if let Some(g) = g {
        epigraph(
            g,
            tau_noise,
            &stage.sigma_state,
            &stage.sigma_action,
            linked_cols.map(|l| l.0),
        );
    }
    epigraph(
        z,
        tau_next,
        &stage.theta_state,
        &stage.theta_action,
        linked_cols.map(|l| l.1),
    );
    let cols = StageColumns {
        state: state_col,
        action,
        tau_state,
        tau_noise,
        tau_next,
        linked: linked_cols,
    };
    (lp, cols)
}

/// Stage LP at a fixed state. `g` is a function of
/// `sigma_state I + sigma_action . x`, `z` of `theta_state I + theta_action . x`.
/// With `linked`, the two affine arguments get their own equality-linked
/// columns instead of being substituted into the epigraph rows.
pub fn build_stage_lp(
    stage: &StageModel,
    state: &Rat,
    g: Option<&PwlConvex>,
    z: &PwlConvex,
    linked: bool,
) -> (LpProblem, StageColumns) {
    assemble(stage, Some(state), g, z, linked)
}

/// Minimizes the stage value over the whole state space with one LP.
pub fn minimize_over_state(stage: &StageModel, g: Option<&PwlConvex>, z: &PwlConvex) -> Result<(Rat, Rat)> {
    let (lp, cols) = assemble(stage, None, g, z, false);
    let sol = solve_lp(&lp)?;
    match sol.status {
        Status::Optimal => Ok((sol.x[cols.state.expect("state column")].clone(), sol.value)),
        Status::Infeasible => Err(Error::Infeasible),
        Status::Unbounded => Err(Error::Unbounded),
    }
}
