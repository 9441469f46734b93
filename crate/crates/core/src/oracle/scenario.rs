//! Exact optimum of an instance with discrete noise, as one scenario-tree LP.
//!
//! Every node of the tree carries its own copy of the actions; states are
//! affine expressions in the actions of ancestor nodes, so no state columns
//! are needed.

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, Sense, Status};
use crate::model::{CostFn, DpInstance};
use crate::pwl::PwlConvex;
use crate::rat::Rat;
use num_traits::{One, Zero};

/// Largest number of root-to-leaf paths accepted.
pub const PATH_LIMIT: u64 = 10_000;

/// Sparse affine expression `constant + sum coef * column`.
#[derive(Debug, Clone, Default)]
struct Affine {
    constant: Rat,
    terms: Vec<(usize, Rat)>,
}

impl Affine {
    fn scaled(&self, c: &Rat) -> Affine {
        Affine {
            constant: &self.constant * c,
            terms: self.terms.iter().map(|(j, a)| (*j, a * c)).collect(),
        }
    }

    fn add_term(&mut self, j: usize, c: Rat) {
        if !c.is_zero() {
            self.terms.push((j, c));
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioTree {
    pub lp: LpProblem,
    /// Columns of the root node's actions.
    pub root_action: Vec<usize>,
    pub paths: u64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalentValue {
    pub value: Rat,
    /// An optimal first-period action.
    pub action: Vec<Rat>,
    pub paths: u64,
    pub columns: usize,
    pub rows: usize,
}

fn explicit(c: &CostFn) -> Result<&PwlConvex> {
    match c {
        CostFn::Pwl(p) | CostFn::OraclePwl(p) => Ok(p),
        _ => Err(Error::Precondition(
            "the scenario-tree oracle needs piecewise-linear costs".into(),
        )),
    }
}

fn distinct_lines(f: &PwlConvex) -> Vec<(Rat, Rat)> {
    let mut ls = f.to_lines();
    ls.sort();
    ls.dedup();
    ls
}

/// Joint outcomes `(values, probability)` of a stage's independent noise.
fn outcomes(noise: &[crate::randvar::RandVar]) -> Result<Vec<(Vec<Rat>, Rat)>> {
    let mut out = vec![(Vec::new(), Rat::one())];
    for d in noise {
        let atoms = d.atoms(PATH_LIMIT).ok_or_else(|| {
            Error::Precondition("the scenario-tree oracle needs discrete noise with few atoms".into())
        })?;
        out = out
            .iter()
            .flat_map(|(vs, p)| {
                atoms.iter().map(move |(v, q)| {
                    let mut vs = vs.clone();
                    vs.push(v.clone());
                    (vs, p * q)
                })
            })
            .collect();
    }
    Ok(out)
}

struct Builder {
    objective: Vec<Rat>,
    bounds: Vec<Option<Rat>>,
    rows: Vec<(Vec<(usize, Rat)>, Rat)>,
}

impl Builder {
    fn column(&mut self, cost: Rat, nonneg: bool) -> usize {
        self.objective.push(cost);
        self.bounds.push(nonneg.then(Rat::zero));
        self.objective.len() - 1
    }

    /// `sum terms - expr >= rhs`, folding the expression's constant into the rhs.
    fn ge(&mut self, mut terms: Vec<(usize, Rat)>, minus: &Affine, rhs: Rat) {
        for (j, c) in &minus.terms {
            terms.push((*j, -c));
        }
        self.rows.push((terms, rhs + &minus.constant));
    }

    fn finish(self) -> LpProblem {
        let n = self.objective.len();
        let mut lp = LpProblem::new(self.objective);
        for (j, b) in self.bounds.into_iter().enumerate() {
            lp.set_bounds(j, b, None);
        }
        for (terms, rhs) in self.rows {
            let mut coefs = vec![Rat::zero(); n];
            for (j, c) in terms {
                coefs[j] += c;
            }
            lp.add_row(coefs, Sense::Ge, rhs);
        }
        lp
    }
}

/// Builds the deterministic-equivalent LP.
pub fn scenario_tree(inst: &DpInstance) -> Result<ScenarioTree> {
    let stage_outcomes: Vec<_> = inst.stages.iter().map(|s| outcomes(&s.noise)).collect::<Result<_>>()?;
    let mut paths: u64 = 1;
    for o in &stage_outcomes {
        paths = paths.saturating_mul(o.len() as u64);
        if paths > PATH_LIMIT {
            return Err(Error::Precondition(format!("more than {PATH_LIMIT} scenario paths")));
        }
    }
    let terminal_lines = distinct_lines(explicit(&inst.terminal)?);
    let noise_lines: Vec<Option<Vec<(Rat, Rat)>>> = inst
        .stages
        .iter()
        .map(|s| {
            s.cost_noise
                .as_ref()
                .map(|g| explicit(g).map(distinct_lines))
                .transpose()
        })
        .collect::<Result<_>>()?;

    let mut b = Builder {
        objective: Vec::new(),
        bounds: Vec::new(),
        rows: Vec::new(),
    };
    // Frontier of (probability, state expression).
    let mut frontier = vec![(
        Rat::one(),
        Affine {
            constant: inst.initial_state.clone(),
            terms: Vec::new(),
        },
    )];
    let mut root_action = Vec::new();
    let mut nodes = 0;
    for (t, st) in inst.stages.iter().enumerate() {
        let mut next = Vec::with_capacity(frontier.len() * stage_outcomes[t].len());
        for (prob, state) in &frontier {
            nodes += 1;
            let x: Vec<usize> = (0..st.action_dim()).map(|_| b.column(Rat::zero(), true)).collect();
            if t == 0 {
                root_action = x.clone();
            }
            for (i, row) in st.a.iter().enumerate() {
                let terms = x.iter().zip(row).map(|(j, a)| (*j, a.clone())).collect();
                b.ge(terms, &state.scaled(&st.delta_b[i]), st.b[i].clone());
            }
            let tau = b.column(prob.clone(), false);
            for h in &st.cost_state.planes {
                let mut terms = vec![(tau, Rat::one())];
                terms.extend(x.iter().zip(&h.coef_action).map(|(j, a)| (*j, -a)));
                b.ge(terms, &state.scaled(&h.coef_state), h.constant.clone());
            }
            for (d, q) in &stage_outcomes[t] {
                let p = prob * q;
                let affine = |c_state: &Rat, c_action: &[Rat], c_noise: &[Rat]| {
                    let mut e = state.scaled(c_state);
                    for (j, c) in x.iter().zip(c_action) {
                        e.add_term(*j, c.clone());
                    }
                    e.constant += c_noise.iter().zip(d).map(|(c, v)| c * v).sum::<Rat>();
                    e
                };
                if let Some(lines) = &noise_lines[t] {
                    let arg = affine(&st.sigma_state, &st.sigma_action, &st.sigma_noise);
                    let w = b.column(p.clone(), false);
                    for (s, c) in lines {
                        b.ge(vec![(w, Rat::one())], &arg.scaled(s), c.clone());
                    }
                }
                next.push((p, affine(&st.theta_state, &st.theta_action, &st.theta_noise)));
            }
        }
        frontier = next;
    }
    for (prob, state) in &frontier {
        let psi = b.column(prob.clone(), false);
        for (s, c) in &terminal_lines {
            b.ge(vec![(psi, Rat::one())], &state.scaled(s), c.clone());
        }
    }
    Ok(ScenarioTree {
        lp: b.finish(),
        root_action,
        paths,
        nodes,
    })
}

/// Exact optimal expected cost from the initial state.
pub fn deterministic_equivalent(inst: &DpInstance) -> Result<EquivalentValue> {
    let tree = scenario_tree(inst)?;
    let sol = solve_lp(&tree.lp)?;
    match sol.status {
        Status::Optimal => Ok(EquivalentValue {
            value: sol.value,
            action: tree.root_action.iter().map(|j| sol.x[*j].clone()).collect(),
            paths: tree.paths,
            columns: tree.lp.num_vars(),
            rows: tree.lp.rows.len(),
        }),
        Status::Infeasible => Err(Error::Infeasible),
        Status::Unbounded => Err(Error::Unbounded),
    }
}
