//! Seeded random instances that satisfy every structural requirement by
//! construction: boxed actions, state intervals grown by interval arithmetic,
//! nonnegative costs and a terminal cost bounded below by one.

use crate::approx::Quadratic;
use crate::error::Result;
use crate::interval::Interval;
use crate::model::{CostFn, DpInstance, StageModel};
use crate::pwl::{MaxAffine, Plane, PwlConvex};
use crate::randvar::RandVar;
use crate::rat::{int, ratio, Rat};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenOptions {
    pub horizon: usize,
    pub actions: usize,
    pub noises: usize,
    /// Upper bound on the number of scenario paths.
    pub max_paths: u64,
    /// Quadratic terminal and noise costs.
    pub smooth: bool,
    /// Truncated continuous noise instead of discrete atoms.
    pub continuous: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            horizon: 2,
            actions: 2,
            noises: 1,
            max_paths: 1000,
            smooth: false,
            continuous: false,
        }
    }
}

fn pick(rng: &mut ChaCha8Rng, xs: &[Rat]) -> Rat {
    xs.choose(rng).expect("nonempty").clone()
}

fn halves(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rat {
    ratio(rng.gen_range(2 * lo..=2 * hi), 2)
}

/// Range of `sum c_j x_j` for `x_j` in `[0, u_j]`.
fn box_range(c: &[Rat], u: &[Rat]) -> Interval {
    let mut lo = Rat::zero();
    let mut hi = Rat::zero();
    for (c, u) in c.iter().zip(u) {
        let v = c * u;
        if v < Rat::zero() {
            lo += v;
        } else {
            hi += v;
        }
    }
    Interval { lo, hi }
}

fn discrete_noise(rng: &mut ChaCha8Rng, atoms: usize) -> RandVar {
    let mut values: Vec<i64> = (0..=3).collect();
    values.shuffle(rng);
    let weights: Vec<i64> = (0..atoms).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    RandVar::discrete(
        values[..atoms]
            .iter()
            .zip(&weights)
            .map(|(v, w)| (int(*v), ratio(*w, total)))
            .collect(),
    )
    .expect("valid atoms")
}

fn continuous_noise(rng: &mut ChaCha8Rng) -> RandVar {
    let hi = int(rng.gen_range(1..=2));
    let m_lo = ratio(rng.gen_range(1..=3), 10);
    let m_hi = ratio(rng.gen_range(1..=3), 10);
    if rng.gen_bool(0.5) {
        RandVar::trunc_uniform(int(0), hi, m_lo, m_hi).expect("valid uniform")
    } else {
        let mode = &hi / int(2);
        RandVar::trunc_triangular(int(0), mode, hi, m_lo, m_hi).expect("valid triangular")
    }
}

/// Convex nonnegative piecewise-linear function on `dom` with a few kinks.
fn convex_cost(rng: &mut ChaCha8Rng, dom: &Interval, floor: Rat) -> Result<PwlConvex> {
    let left = halves(rng, 0, 3);
    let right = halves(rng, 0, 3);
    let w = dom.width();
    let k1 = &dom.lo + &w * ratio(rng.gen_range(1..=3), 8);
    let k2 = &dom.lo + &w * ratio(rng.gen_range(5..=7), 8);
    let mid = halves(rng, 0, 1);
    let lines = vec![
        (-&left, &floor + &left * &k1),
        (Rat::zero(), floor.clone()),
        (mid.clone(), &floor - &mid * &k1),
        (&mid + &right, &floor - &mid * &k1 - (&mid + &right) * &k2 + &mid * &k2),
    ];
    let f = PwlConvex::from_lines(&lines, dom)?;
    Ok(f)
}

/// One random instance; `seed` fixes everything.
pub fn random_instance(seed: u64, opts: GenOptions, eps: Rat) -> Result<DpInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Interval::new(int(-1), int(1))?;
    let initial_state = pick(&mut rng, &[int(-1), ratio(-1, 2), int(0), ratio(1, 2), int(1)]);
    // Atom counts keep the scenario tree within budget.
    let per_var = if opts.continuous {
        0
    } else {
        let mut k = 3u64;
        while k > 2 && k.pow((opts.horizon * opts.noises) as u32) > opts.max_paths {
            k -= 1;
        }
        k as usize
    };
    let mut stages = Vec::with_capacity(opts.horizon);
    for _ in 0..opts.horizon {
        let p = opts.actions;
        let caps: Vec<Rat> = (0..p).map(|_| int(rng.gen_range(1..=3))).collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut delta_b = Vec::new();
        for j in 0..p {
            let mut row = vec![Rat::zero(); p];
            row[j] = -Rat::one();
            a.push(row);
            b.push(-&caps[j]);
            delta_b.push(Rat::zero());
        }
        if rng.gen_bool(0.6) {
            let coefs: Vec<Rat> = (0..p).map(|_| int(rng.gen_range(1..=2))).collect();
            let top: Rat = coefs.iter().zip(&caps).map(|(c, u)| c * u).sum();
            let delta = pick(&mut rng, &[Rat::zero(), int(-1), ratio(1, 2)]);
            let worst = crate::rat::min(&(&top - &delta * &states.lo), &(&top - &delta * &states.hi));
            b.push(worst - halves(&mut rng, 0, 2));
            a.push(coefs);
            delta_b.push(delta);
        }
        let theta_state = pick(&mut rng, &[Rat::one(), ratio(1, 2)]);
        let theta_action: Vec<Rat> = (0..p)
            .map(|_| pick(&mut rng, &[int(-1), ratio(-1, 2), ratio(1, 2), int(1)]))
            .collect();
        let noise: Vec<RandVar> = (0..opts.noises)
            .map(|_| {
                if opts.continuous {
                    continuous_noise(&mut rng)
                } else {
                    discrete_noise(&mut rng, per_var)
                }
            })
            .collect();
        let theta_noise: Vec<Rat> = (0..opts.noises)
            .map(|_| pick(&mut rng, &[int(-1), ratio(-1, 2), int(1)]))
            .collect();
        let sigma_state = pick(&mut rng, &[Rat::zero(), Rat::one()]);
        let sigma_action: Vec<Rat> = (0..p)
            .map(|_| pick(&mut rng, &[Rat::zero(), int(1), int(-1)]))
            .collect();
        let sigma_noise: Vec<Rat> = (0..opts.noises).map(|_| pick(&mut rng, &[int(-1), int(1)])).collect();
        let mut planes = vec![Plane {
            coef_state: Rat::zero(),
            coef_action: vec![Rat::zero(); p],
            constant: Rat::zero(),
        }];
        for _ in 0..rng.gen_range(1..=2) {
            planes.push(Plane {
                coef_state: halves(&mut rng, -1, 1),
                coef_action: (0..p).map(|_| halves(&mut rng, 0, 2)).collect(),
                constant: halves(&mut rng, -1, 1),
            });
        }
        let mut stage = StageModel {
            a,
            b,
            delta_b,
            theta_state,
            theta_action,
            theta_noise,
            sigma_state,
            sigma_action,
            sigma_noise,
            cost_state: MaxAffine::new(planes)?,
            cost_noise: None,
            noise,
            states: states.clone(),
        };
        if rng.gen_bool(0.8) {
            let g_dom = states
                .affine(&stage.sigma_state, &Rat::zero())
                .add(&box_range(&stage.sigma_action, &caps))
                .add(&stage.noise_range(&stage.sigma_noise));
            let g_dom = Interval::new(&g_dom.lo - int(1), &g_dom.hi + int(1))?;
            stage.cost_noise = Some(if opts.smooth {
                CostFn::Quadratic(Box::new(Quadratic {
                    a: ratio(rng.gen_range(1..=4), 8),
                    b: halves(&mut rng, -1, 1),
                    c: Rat::zero(),
                    domain: g_dom,
                }))
            } else {
                CostFn::Pwl(convex_cost(&mut rng, &g_dom, Rat::zero())?)
            });
        }
        states = states
            .affine(&stage.theta_state, &Rat::zero())
            .add(&box_range(&stage.theta_action, &caps))
            .add(&stage.noise_range(&stage.theta_noise));
        stages.push(stage);
    }
    let terminal = if opts.smooth {
        CostFn::Quadratic(Box::new(Quadratic {
            a: ratio(rng.gen_range(1..=4), 4),
            b: halves(&mut rng, -1, 1),
            c: Rat::one(),
            domain: states.clone(),
        }))
    } else {
        CostFn::Pwl(convex_cost(&mut rng, &states, Rat::one())?)
    };
    let inst = DpInstance {
        stages,
        terminal,
        terminal_states: states,
        terminal_min: None,
        initial_state,
        eps,
    };
    inst.validate()?;
    Ok(inst)
}
