//! Property tests for the invariants of each module, against references that
//! live in this file or under `oracle`.

use fptas_core::approx::{apx_set_inc, compress_inc, scaled_compress_conv, FnOracle, PwlOracle, Quadratic};
use fptas_core::convolve::{brute_force_cdf, compress_convolution};
use fptas_core::expect::expectation;
use fptas_core::io::{instance_to_json, load_instance, parse_instance};
use fptas_core::lp::simplex::{self, PivotRule};
use fptas_core::lp::{LpProblem, Sense, Status};
use fptas_core::model::{CostFn, DpInstance, StageModel};
use fptas_core::oracle::quadrature::{exact_pwl_expectation, quadrature_expectation};
use fptas_core::oracle::{deterministic_equivalent, hard, random_instance, GenOptions};
use fptas_core::randvar::{compress_cdf, RandVar, StepCdf};
use fptas_core::rat::{self, int, ratio};
use fptas_core::scheme::apx_scheme1;
use fptas_core::{CanonicalRep, Claim, Interval, MaxAffine, Mode, Plane, PwlConvex, Rat};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

fn small_rat() -> impl Strategy<Value = Rat> {
    (-10_000i64..=10_000, 1i64..=500).prop_map(|(n, d)| ratio(n, d))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Convex piecewise-linear function on `dom` with minimum at least one.
fn convex_pwl(r: &mut ChaCha8Rng, dom: &Interval) -> PwlConvex {
    let mut lines = Vec::new();
    let mut slope = ratio(r.gen_range(-10..=0), 2);
    for _ in 0..r.gen_range(1..=6) {
        let at = ratio(r.gen_range(-20..=20), 4);
        lines.push((slope.clone(), ratio(r.gen_range(4..=12), 4) - &slope * &at));
        slope += ratio(r.gen_range(1..=6), 3);
    }
    let f = PwlConvex::from_lines(&lines, dom).expect("convex lines");
    let floor = f.min_value();
    if floor < Rat::one() {
        f.add_const(&(Rat::one() - floor))
    } else {
        f
    }
}

fn discrete(r: &mut ChaCha8Rng, max_atoms: usize) -> Vec<(Rat, Rat)> {
    let n = r.gen_range(1..=max_atoms);
    let mut values: Vec<i64> = (-10..=10).collect();
    for k in (1..values.len()).rev() {
        values.swap(k, r.gen_range(0..=k));
    }
    let w: Vec<i64> = (0..n).map(|_| r.gen_range(1..=7)).collect();
    let total: i64 = w.iter().sum();
    values[..n]
        .iter()
        .zip(&w)
        .map(|(v, p)| (ratio(*v, 2), ratio(*p, total)))
        .collect()
}

fn exact_cdf(atoms: &[(Rat, Rat)], z: &Rat) -> Rat {
    atoms.iter().filter(|(v, _)| v <= z).map(|(_, p)| p).sum()
}

fn grid(dom: &Interval, n: i64) -> Vec<Rat> {
    (0..=n).map(|i| &dom.lo + dom.width() * ratio(i, n)).collect()
}

// ---------------------------------------------------------------------------
// Numbers and piecewise-linear functions.

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn addition_round_trips(a in small_rat(), b in small_rat()) {
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert_eq!(rat::parse(&rat::format(&a)).unwrap(), a);
    }

    #[test]
    fn line_and_breakpoint_forms_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dom = Interval::new(int(-8), int(8)).unwrap();
        let f = convex_pwl(&mut r, &dom);
        let lines = f.to_lines();
        let back = PwlConvex::from_lines(&lines, &dom).unwrap();
        for _ in 0..1000 {
            let x = ratio(r.gen_range(-8000..=8000), 1000);
            let max_line = lines.iter().map(|(a, b)| a * &x + b).max().unwrap();
            prop_assert_eq!(f.value(&x), max_line.clone());
            prop_assert_eq!(back.value(&x), max_line);
        }
    }

    #[test]
    fn convex_rep_interpolates_its_records(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dom = Interval::new(int(-6), int(6)).unwrap();
        let f = convex_pwl(&mut r, &dom);
        let pts: Vec<(Rat, Rat)> = f.points().map(|(x, v)| (x.clone(), v.clone())).collect();
        let rep = CanonicalRep::new(Mode::ConvexLower, pts.clone(), Claim::exact()).unwrap();
        for (x, v) in &pts {
            prop_assert_eq!(&rep.eval(x).unwrap(), v);
        }
        for x in grid(&dom, 97) {
            prop_assert_eq!(rep.eval(&x).unwrap(), f.value(&x));
        }
    }
}

// ---------------------------------------------------------------------------
// Compression of monotone and convex functions.

fn increasing_quadratic(r: &mut ChaCha8Rng) -> Quadratic {
    let lo = r.gen_range(0..=4);
    Quadratic {
        a: ratio(r.gen_range(1..=8), 4),
        b: int(lo),
        c: ratio(r.gen_range(1..=10), 5),
        domain: Interval::new(int(lo), int(lo + r.gen_range(1..=30))).unwrap(),
    }
}

fn factor(r: &mut ChaCha8Rng) -> Rat {
    [ratio(2, 1), ratio(3, 2), ratio(11, 10), ratio(51, 50)][r.gen_range(0..4)].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monotone_compression_is_one_sided_and_small(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = increasing_quadratic(&mut r);
        let k = factor(&mut r);
        let rep = compress_inc(&q, &q.domain, &k).unwrap();
        for x in grid(&q.domain, 500) {
            let (phi, v) = (q.eval(&x), rep.eval(&x).unwrap());
            prop_assert!(phi <= v, "below at {}", x);
            prop_assert!(v <= &k * &phi, "above K at {}", x);
        }
        let spread = rat::to_f64(&(q.eval(&q.domain.hi) / q.eval(&q.domain.lo)));
        let log_k = spread.ln() / rat::to_f64(&k).ln();
        let count = apx_set_inc(&q, &q.domain, &k).unwrap().len() as f64;
        prop_assert!(count <= 4.0 * (log_k + 2.0), "{} points for log_K = {:.2}", count, log_k);
    }

    #[test]
    fn scaled_compression_clamps_large_factors(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dom = Interval::new(int(-6), int(6)).unwrap();
        let f = PwlOracle(convex_pwl(&mut r, &dom));
        let (xs, kappa, floor) = (f.argmin().unwrap(), rat::max(&f.0.lipschitz(), &Rat::one()), f.0.min_value());
        let quarter = scaled_compress_conv(&f, &dom, &xs, &ratio(5, 4), &kappa, &floor).unwrap();
        for big in [ratio(3, 2), int(2), int(5)] {
            let wide = scaled_compress_conv(&f, &dom, &xs, &big, &kappa, &floor).unwrap();
            prop_assert_eq!(&wide.scaling, &quarter.scaling);
            prop_assert_eq!(wide.rep.xs(), quarter.rep.xs());
            prop_assert_eq!(wide.rep.vs(), quarter.rep.vs());
            prop_assert_eq!(&wide.rep.claim.k, &big);
        }
        for x in grid(&dom, 300) {
            let (phi, v) = (f.eval(&x), quarter.rep.eval(&x).unwrap());
            prop_assert!(phi <= v && v <= ratio(5, 4) * &phi);
        }
    }
}

// ---------------------------------------------------------------------------
// Step CDFs and convolution.

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compressed_cdf_is_monotone_and_dominates(seed in any::<u64>()) {
        let mut r = rng(seed);
        let atoms = discrete(&mut r, 10);
        let x = RandVar::discrete(atoms.clone()).unwrap();
        let k = factor(&mut r);
        let f = compress_cdf(&x, &k).unwrap();
        prop_assert!(f.levels().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(Rat::one() <= f.total() && f.total() <= k);
        for (v, _) in &atoms {
            let exact = exact_cdf(&atoms, v);
            prop_assert!(exact <= f.eval(v) && f.eval(v) <= &k * &exact);
        }
    }

    #[test]
    fn nearly_exact_factor_matches_the_cdf(seed in any::<u64>()) {
        let mut r = rng(seed);
        let atoms = discrete(&mut r, 10);
        let x = RandVar::discrete(atoms.clone()).unwrap();
        let k = Rat::one() + ratio(1, 1_000_000_000);
        let f = compress_cdf(&x, &k).unwrap();
        for (v, _) in &atoms {
            let exact = exact_cdf(&atoms, v);
            prop_assert!(exact <= f.eval(v) && f.eval(v) <= &k * &exact);
        }
    }

    #[test]
    fn transform_keeps_total_mass(seed in any::<u64>(), c in prop_oneof![Just(-2i64), Just(-1), Just(1), Just(3)]) {
        let mut r = rng(seed);
        let x = RandVar::discrete(discrete(&mut r, 8)).unwrap();
        let y = x.transform(&int(c)).unwrap();
        prop_assert_eq!(y.cdf(&y.support().hi), Rat::one());
        let k = ratio(11, 10);
        let f = compress_cdf(&y, &k).unwrap();
        prop_assert!(Rat::one() <= f.total() && f.total() <= k);
    }

    #[test]
    fn enumerated_masses_sum_to_one(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let vars: Vec<RandVar> = (0..n).map(|_| RandVar::discrete(discrete(&mut r, 6)).unwrap()).collect();
        let weights: Vec<Rat> = (0..n).map(|_| ratio(r.gen_range(-3..=3), 2)).collect();
        if weights.iter().all(|w| w.is_zero()) {
            return Ok(());
        }
        let cdf = brute_force_cdf(&vars, &weights, 10_000).unwrap();
        let total: Rat = cdf.masses().iter().map(|(_, p)| p).sum();
        prop_assert_eq!(total, Rat::one());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convolution_order_changes_only_the_representation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let atoms: Vec<Vec<(Rat, Rat)>> = (0..3).map(|_| discrete(&mut r, 5)).collect();
        let vars: Vec<RandVar> = atoms.iter().map(|a| RandVar::discrete(a.clone()).unwrap()).collect();
        let k = ratio(11, 10);
        let w = vec![Rat::one(); 3];
        let a = compress_convolution(&vars, &w, &k).unwrap();
        let swapped = vec![vars[0].clone(), vars[2].clone(), vars[1].clone()];
        let b = compress_convolution(&swapped, &w, &k).unwrap();
        let k2 = &k * &k;
        let exact = brute_force_cdf(&vars, &w, 10_000).unwrap();
        for z in exact.xs() {
            let (fa, fb) = (a.cdf.eval(z), b.cdf.eval(z));
            prop_assert!(fa <= &k2 * &fb && fb <= &k2 * &fa);
        }
    }

    #[test]
    fn two_by_two_sum_is_nearly_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let atoms: Vec<Vec<(Rat, Rat)>> = (0..2)
            .map(|_| loop {
                let a = discrete(&mut r, 2);
                if a.len() == 2 {
                    break a;
                }
            })
            .collect();
        let vars: Vec<RandVar> = atoms.iter().map(|a| RandVar::discrete(a.clone()).unwrap()).collect();
        let k = Rat::one() + ratio(1, 1_000_000);
        let w = vec![Rat::one(), Rat::one()];
        let conv = compress_convolution(&vars, &w, &k).unwrap();
        for (x, p) in &atoms[0] {
            for (y, q) in &atoms[1] {
                let z = x + y;
                let exact: Rat = atoms[0]
                    .iter()
                    .flat_map(|(a, pa)| atoms[1].iter().map(move |(b, pb)| (a + b, pa * pb)))
                    .filter(|(s, _)| *s <= z)
                    .map(|(_, m)| m)
                    .sum();
                let got = conv.cdf.eval(&z);
                prop_assert!(exact <= got && got <= &k * &exact, "{} {} {} {}", x, p, y, q);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Expectations.

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expectation_is_convex_and_small(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dom = Interval::new(int(-15), int(15)).unwrap();
        let psi = convex_pwl(&mut r, &dom);
        let atoms = discrete(&mut r, 8);
        let d = RandVar::discrete(atoms.clone()).unwrap();
        let neg = d.transform(&-Rat::one()).unwrap();
        let xi = expectation(&psi, &StepCdf::exact(&d, 100).unwrap(), Some(&StepCdf::exact(&neg, 100).unwrap())).unwrap();
        let slopes = xi.slopes();
        prop_assert!(slopes.windows(2).all(|w| w[0] <= w[1]));
        let pieces = xi.len().saturating_sub(1);
        prop_assert!(pieces <= (psi.len() - 1) * atoms.len() + 2, "{} pieces", pieces);
    }

    #[test]
    fn continuous_expectation_is_sandwiched(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dom = Interval::new(int(-15), int(15)).unwrap();
        let psi = convex_pwl(&mut r, &dom);
        let hi = int(r.gen_range(1..=4));
        let d = if r.gen_bool(0.5) {
            RandVar::trunc_uniform(int(0), hi, ratio(r.gen_range(1..=3), 10), ratio(r.gen_range(1..=3), 10)).unwrap()
        } else {
            RandVar::trunc_triangular(int(0), &hi / int(2), hi, ratio(1, 10), ratio(1, 5)).unwrap()
        };
        let k = factor(&mut r);
        let neg = d.transform(&-Rat::one()).unwrap();
        let xi = expectation(&psi, &compress_cdf(&d, &k).unwrap(), Some(&compress_cdf(&neg, &k).unwrap())).unwrap();
        let span = xi.domain();
        let lines = psi.to_lines();
        let psi_f = move |y: f64| {
            lines.iter().map(|(a, b)| rat::to_f64(a) * y + rat::to_f64(b)).fold(f64::NEG_INFINITY, f64::max)
        };
        for u in grid(&span, 40) {
            let exact = exact_pwl_expectation(&psi, &d, &u, &-Rat::one()).unwrap();
            let got = xi.value(&u);
            prop_assert!(exact <= got && got <= &k * &exact, "at {}", u);
            let q = quadrature_expectation(&psi_f, &Rat::one(), &Rat::zero(), &-Rat::one(), &d, &u).unwrap();
            let e = rat::to_f64(&exact);
            prop_assert!((q.value - e).abs() <= 1e-8 * e.abs().max(1.0), "quadrature {} vs {}", q.value, e);
        }
    }
}

// ---------------------------------------------------------------------------
// Stage values: an independently assembled LP at fixed states.

/// Stage objective at a fixed state: cost planes, noise-cost and cost-to-go
/// epigraphs over the action polyhedron.
fn stage_value_at(st: &StageModel, g: Option<&PwlConvex>, z: &PwlConvex, state: &Rat) -> Rat {
    let p = st.action_dim();
    // Columns: actions, then epigraph variables for costs, noise cost and cost-to-go.
    let (tc, tg, tz) = (p, p + 1, p + 2);
    let mut obj = vec![Rat::zero(); p + 3];
    obj[tc] = Rat::one();
    obj[tg] = Rat::one();
    obj[tz] = Rat::one();
    let mut lp = LpProblem::new(obj);
    for j in tc..=tz {
        lp.set_bounds(j, None, None);
    }
    for (i, row) in st.a.iter().enumerate() {
        let mut c = row.clone();
        c.extend([Rat::zero(), Rat::zero(), Rat::zero()]);
        lp.add_row(c, Sense::Ge, &st.b[i] + &st.delta_b[i] * state);
    }
    for plane in &st.cost_state.planes {
        let mut c: Vec<Rat> = plane.coef_action.iter().map(|a| -a).collect();
        c.extend([Rat::one(), Rat::zero(), Rat::zero()]);
        lp.add_row(c, Sense::Ge, &plane.coef_state * state + &plane.constant);
    }
    let epigraph = |lp: &mut LpProblem, f: &PwlConvex, cs: &Rat, ca: &[Rat], col: usize| {
        for (s, b) in f.to_lines() {
            let mut c: Vec<Rat> = ca.iter().map(|a| -(&s * a)).collect();
            c.extend([Rat::zero(), Rat::zero(), Rat::zero()]);
            c[col] = Rat::one();
            lp.add_row(c, Sense::Ge, &s * cs * state + &b);
        }
    };
    match g {
        Some(g) => epigraph(&mut lp, g, &st.sigma_state, &st.sigma_action, tg),
        None => lp.set_bounds(tg, Some(Rat::zero()), Some(Rat::zero())),
    }
    epigraph(&mut lp, z, &st.theta_state, &st.theta_action, tz);
    let sol = simplex::solve(&lp, PivotRule::Bland).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    sol.value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn stage_values_are_convex_lipschitz_and_small(seed in 0u64..1_000_000) {
        let opts = GenOptions { horizon: 2, actions: 2, noises: 1, max_paths: 100, smooth: false, continuous: false };
        let inst = random_instance(seed, opts, ratio(1, 5)).unwrap();
        let der = inst.derived().unwrap();
        let vfa = apx_scheme1(&inst).unwrap();
        let t_max = inst.horizon();
        let mut r = rng(seed);
        for (i, art) in vfa.stages.iter().enumerate() {
            let t = i + 1;
            let st = &inst.stages[i];
            let states = &st.states;
            let sample = |r: &mut ChaCha8Rng| &states.lo + states.width() * ratio(r.gen_range(0..=120), 120);
            let mut pts: Vec<Rat> = (0..12).map(|_| sample(&mut r)).collect();
            pts.sort();
            pts.dedup();
            let vals: Vec<Rat> = pts.iter().map(|s| stage_value_at(st, art.noise_cost.as_ref(), &art.cost_to_go, s)).collect();
            for (s, v) in pts.iter().zip(&vals) {
                prop_assert_eq!(&art.stage_value.value(s), v);
            }
            let kappa = der.kappa_bar(t_max, t);
            for a in 0..pts.len() {
                for c in a + 1..pts.len() {
                    prop_assert!((&vals[a] - &vals[c]).abs() <= &kappa * (&pts[c] - &pts[a]));
                    for b in a + 1..c {
                        let lam = (&pts[b] - &pts[a]) / (&pts[c] - &pts[a]);
                        let chord = &vals[a] + &lam * (&vals[c] - &vals[a]);
                        prop_assert!(vals[b] <= chord);
                    }
                }
            }
            // Size of the stored approximation against its logarithmic bound.
            let u_g = der.u_g.clone().unwrap_or_else(|| vfa.stages[i].stage_value.max_value());
            let spread = rat::to_f64(&(int((t_max + 2 - t) as i64) * rat::max(&u_g, &der.mu) / &der.mu)).max(std::f64::consts::E);
            let eps = rat::to_f64(&inst.eps);
            let bound = 8.0 * (t_max as f64 / eps) * spread.ln() + 8.0;
            prop_assert!((art.approx.len() as f64) <= bound, "stage {}: {} points, bound {:.1}", t, art.approx.len(), bound);
        }
    }
}

// ---------------------------------------------------------------------------
// Scenario tree against exhaustive policies over action vertices.

/// Instance with box actions, linear costs and a linear terminal cost, so
/// some optimal policy plays a box corner at every node.
fn linear_instance(r: &mut ChaCha8Rng) -> DpInstance {
    let horizon = r.gen_range(1..=2);
    let p = r.gen_range(1..=2);
    let mut states = Interval::point(int(r.gen_range(-2..=2)));
    let initial_state = states.lo.clone();
    let mut stages = Vec::new();
    for _ in 0..horizon {
        let caps: Vec<Rat> = (0..p).map(|_| int(r.gen_range(1..=3))).collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (j, u) in caps.iter().enumerate() {
            let mut row = vec![Rat::zero(); p];
            row[j] = -Rat::one();
            a.push(row);
            b.push(-u);
        }
        let theta_action: Vec<Rat> = (0..p).map(|_| ratio(r.gen_range(-2..=2), 2)).collect();
        let noise = RandVar::discrete(discrete(r, 2)).unwrap();
        let theta_noise = vec![int([-1, 1][r.gen_range(0..2)])];
        let stage = StageModel {
            delta_b: vec![Rat::zero(); p],
            a,
            b,
            theta_state: Rat::one(),
            theta_action: theta_action.clone(),
            theta_noise: theta_noise.clone(),
            sigma_state: Rat::zero(),
            sigma_action: vec![Rat::zero(); p],
            sigma_noise: vec![Rat::zero()],
            cost_state: MaxAffine::new(vec![Plane {
                coef_state: Rat::zero(),
                coef_action: (0..p).map(|_| ratio(r.gen_range(0..=4), 2)).collect(),
                constant: Rat::zero(),
            }])
            .unwrap(),
            cost_noise: None,
            noise: vec![noise],
            states: states.clone(),
        };
        let mut reach = states.clone();
        for (c, u) in theta_action.iter().zip(&caps) {
            reach =
                reach.add(&Interval::new(rat::min(&Rat::zero(), &(c * u)), rat::max(&Rat::zero(), &(c * u))).unwrap());
        }
        states = reach.add(&stage.noise_range(&theta_noise));
        stages.push(stage);
    }
    let slope = ratio(r.gen_range(-4..=4), 2);
    let far = rat::max(&states.lo.abs(), &states.hi.abs());
    let intercept = &slope.abs() * &far + int(1);
    DpInstance {
        stages,
        terminal: CostFn::Pwl(PwlConvex::linear(&states, slope, intercept)),
        terminal_states: states,
        terminal_min: None,
        initial_state,
        eps: ratio(1, 10),
    }
}

fn corners(st: &StageModel) -> Vec<Vec<Rat>> {
    let caps: Vec<Rat> = st.b.iter().map(|b| -b).collect();
    let mut out = vec![vec![]];
    for u in caps {
        out = out
            .into_iter()
            .flat_map(|c: Vec<Rat>| {
                [Rat::zero(), u.clone()].into_iter().map(move |v| {
                    let mut c = c.clone();
                    c.push(v);
                    c
                })
            })
            .collect();
    }
    out
}

fn best_policy(inst: &DpInstance, t: usize, state: &Rat) -> Rat {
    if t > inst.horizon() {
        return inst.terminal.explicit().unwrap().value(state);
    }
    let st = &inst.stages[t - 1];
    let atoms = st.noise[0].atoms(100).unwrap();
    corners(st)
        .iter()
        .map(|x| {
            let future: Rat = atoms
                .iter()
                .map(|(d, p)| p * best_policy(inst, t + 1, &st.transition(state, x, std::slice::from_ref(d))))
                .sum();
            st.cost_state.eval(state, x) + future
        })
        .min()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scenario_tree_matches_vertex_policies(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = linear_instance(&mut r);
        inst.validate().unwrap();
        let de = deterministic_equivalent(&inst).unwrap();
        prop_assert_eq!(de.value, best_policy(&inst, 1, &inst.initial_state));
    }

    #[test]
    fn instances_round_trip(seed in 0u64..1_000_000, continuous in any::<bool>(), smooth in any::<bool>()) {
        let opts = GenOptions { horizon: 2, actions: 2, noises: 2, max_paths: 1000, smooth, continuous };
        let inst = random_instance(seed, opts, ratio(1, 10)).unwrap();
        let text = instance_to_json(&inst).unwrap();
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(instance_to_json(&back).unwrap(), text);
    }
}

// ---------------------------------------------------------------------------
// Exhaustive checks.

#[test]
fn partition_family_up_to_thirty() {
    for u in 1..=30 {
        for parts in hard::partitions(u) {
            let h = hard::generate(u, &parts, 1).unwrap();
            let mut distinct = parts.clone();
            distinct.dedup();
            assert!(h.planes.len() <= distinct.len() + 1, "U = {u}, {parts:?}");
            for y in 1..=u {
                let r: i64 = parts[..y as usize].iter().sum();
                for x in 1..=u {
                    let want = 1 + (x - u + r).max(0);
                    let got = h.planes.iter().map(|p| p.eval(x, y)).max().unwrap();
                    assert_eq!(got, want, "U = {u}, {parts:?} at ({x}, {y})");
                }
            }
        }
    }
}

#[test]
fn bundled_fixtures_validate_and_match_the_scenario_tree() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let inst = load_instance(&path).unwrap();
            inst.validate().unwrap();
            let de = deterministic_equivalent(&inst).unwrap();
            let vfa = apx_scheme1(&inst).unwrap();
            let v = vfa.value_at(&inst.initial_state).unwrap();
            assert!(
                de.value <= v && v <= (Rat::one() + &inst.eps) * &de.value,
                "{}",
                path.display()
            );
            seen += 1;
        }
    }
    assert!(seen >= 2);
}
