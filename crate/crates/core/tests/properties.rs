mod common;

use std::sync::Arc;

use common::*;
use proptest::prelude::*;

use ipomdp::belief::{self, InteractiveBelief};
use ipomdp::domain::{parse, Domain};
use ipomdp::model::{build_level_hierarchy, Model, ModelPrior};
use ipomdp::pomdp::{backup, AlphaSet, AlphaVector, Belief, OptimalityCriterion};
use ipomdp::solver::{IpomdpProblem, Solver};
use ipomdp::tiger::{multiagent_tiger, noisy_tiger, single_tiger, TigerParams};

fn params() -> impl Strategy<Value = TigerParams> {
    (0.51f64..1.0, 0.51f64..1.0, 0.0f64..0.5, 1.0f64..20.0, -150.0f64..-20.0).prop_map(|(g, c, q, prize, penalty)| {
        TigerParams {
            prize,
            penalty,
            listen_cost: -1.0,
            growl_accuracy: g,
            creak_accuracy: c,
            noise_open_prob: q,
        }
    })
}

fn alpha_set(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..n)
}

fn to_set(lines: &[(f64, f64)]) -> Vec<AlphaVector> {
    lines.iter().map(|&(a, b)| AlphaVector::new(vec![a, b], 0)).collect()
}

fn lines(set: &[AlphaVector]) -> Vec<(f64, f64)> {
    set.iter().map(|v| (v.values[0], v.values[1])).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn flat_update_is_a_distribution(p in params(), b in 0.0f64..=1.0, a in 0usize..3, o in 0usize..2) {
        let m = noisy_tiger(&p).unwrap();
        let b = Belief::two_state(b).unwrap();
        if m.observation_likelihood(&b, a, o) > 0.0 {
            let post = m.belief_update(&b, a, o).unwrap();
            let sum: f64 = post.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(post.weights().iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn observation_likelihoods_sum_to_one(p in params(), b in 0.0f64..=1.0, a in 0usize..3) {
        let m = single_tiger(&p).unwrap();
        let b = Belief::two_state(b).unwrap();
        let total: f64 = (0..2).map(|o| m.observation_likelihood(&b, a, o)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    /// One backup equals a one-step lookahead on the represented value function.
    #[test]
    fn backup_is_one_step_lookahead(v in alpha_set(6), b in 0.0f64..=1.0, gamma in 0.5f64..1.0) {
        let m = noisy_tiger(&TigerParams::default()).unwrap();
        let t = tables(&m);
        let set = to_set(&v);
        let backed = AlphaSet(backup(&m, &set, gamma));
        let eval = |post: &[f64]| v.iter().map(|&(x, y)| x * post[0] + y * post[1]).fold(f64::NEG_INFINITY, f64::max);
        let bv = [b, 1.0 - b];
        let q: Vec<f64> = (0..3).map(|a| {
            let mut q = bv[0] * t.r[0][a] + bv[1] * t.r[1][a];
            for o in 0..2 {
                if let Some((z, post)) = bayes(&t, &bv, a, o) {
                    q += gamma * z * eval(&post);
                }
            }
            q
        }).collect();
        let want = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let b = Belief::two_state(b).unwrap();
        prop_assert!((backed.value(&b) - want).abs() < 1e-9);
        prop_assert_eq!(backed.opt_actions(&b), ties(&q));
    }

    /// Isotonicity of the backup operator.
    #[test]
    fn backup_is_isotone(v in alpha_set(5), raise in prop::collection::vec(0.0f64..10.0, 5), extra in alpha_set(3)) {
        let m = noisy_tiger(&TigerParams::default()).unwrap();
        let mut u: Vec<(f64, f64)> = v.iter().zip(raise.iter().cycle()).map(|(&(a, b), r)| (a + r, b + r)).collect();
        u.extend(extra);
        let hv = AlphaSet(backup(&m, &to_set(&v), 0.9));
        let hu = AlphaSet(backup(&m, &to_set(&u), 0.9));
        for k in 0..=100 {
            let b = Belief::two_state(k as f64 / 100.0).unwrap();
            prop_assert!(hu.value(&b) >= hv.value(&b) - 1e-9);
        }
    }

    /// Contraction of the discounted backup in the sup norm.
    #[test]
    fn backup_contracts(u in alpha_set(5), v in alpha_set(5), gamma in 0.1f64..0.99) {
        let m = noisy_tiger(&TigerParams::default()).unwrap();
        let d0 = sup_diff_two_state(&u, &v);
        let hu = backup(&m, &to_set(&u), gamma);
        let hv = backup(&m, &to_set(&v), gamma);
        let d1 = sup_diff_two_state(&lines(&hu), &lines(&hv));
        prop_assert!(d1 <= gamma * d0 + 1e-9, "{} > {} * {}", d1, gamma, d0);
    }

    #[test]
    fn interactive_update_is_normalized(p in 0.0f64..=1.0, bj in 0.0f64..=1.0, a in 0usize..3, o in 0usize..6, steps in 1usize..4) {
        let (fi, fj) = multiagent_tiger(&TigerParams::default()).unwrap();
        let prior = ModelPrior(vec![
            (Arc::new(Model::level0(fj.clone(), Belief::two_state(bj).unwrap()).unwrap()), 0.7),
            (Arc::new(Model::no_information(fj, vec![]).unwrap()), 0.3),
        ]);
        let b = InteractiveBelief::product(&Belief::two_state(p).unwrap(), &prior).unwrap();
        let solver = Solver::new();
        let pred = belief::predict(&solver, &b, a, &fi, steps).unwrap();
        let total: f64 = pred.branches.iter().map(|br| br.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let z: f64 = (0..6).map(|o| belief::observation_likelihood(&pred, o, &fi)).sum();
        prop_assert!((z - 1.0).abs() < 1e-12);
        if belief::observation_likelihood(&pred, o, &fi) > 0.0 {
            let post = belief::correct(&pred, o, &fi).unwrap();
            let sum: f64 = post.atoms().iter().map(|x| x.weight).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(post.atoms().iter().all(|x| x.model.level() == 0 && Arc::ptr_eq(x.model.frame(), pred_frame(&b))));
        }
    }

    #[test]
    fn action_distribution_is_uniform_over_ties(bj in 0.0f64..=1.0, steps in 0usize..4) {
        let (_, fj) = multiagent_tiger(&TigerParams::default()).unwrap();
        let solver = Solver::new();
        let m = Model::level0(fj.clone(), Belief::two_state(bj).unwrap()).unwrap();
        let d = solver.action_distribution(&m, steps).unwrap();
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let opt = brute_opt(&fold(&fj, fj.noise()), &[bj, 1.0 - bj], steps, 1.0);
        for (a, &p) in d.iter().enumerate() {
            let want = if opt.contains(&a) { 1.0 / opt.len() as f64 } else { 0.0 };
            prop_assert!((p - want).abs() < 1e-15);
        }
    }

    #[test]
    fn domain_round_trip_is_bit_exact(p in params()) {
        let single = Domain::Single { model: noisy_tiger(&p).unwrap(), criterion: OptimalityCriterion::FiniteHorizon(3) };
        let back = parse(&single.emit().unwrap()).unwrap();
        let (Domain::Single { model: a, .. }, Domain::Single { model: b, .. }) = (&single, &back) else { panic!() };
        prop_assert_eq!(a, b);
        let (i, j) = multiagent_tiger(&p).unwrap();
        let multi = Domain::Multi { i, j };
        let text = multi.emit().unwrap();
        let back = parse(&text).unwrap();
        let (Domain::Multi { i: i0, j: j0 }, Domain::Multi { i: i1, j: j1 }) = (&multi, &back) else { panic!() };
        prop_assert!(i0.spec() == i1.spec() && j0.spec() == j1.spec());
        prop_assert_eq!(back.emit().unwrap(), text);
    }
}

fn pred_frame(b: &InteractiveBelief) -> &Arc<ipomdp::model::Frame> {
    b.atoms()[0].model.frame()
}

/// Value sweeps are convex in the belief.
#[test]
fn sweeps_are_convex() {
    let (fi, fj) = multiagent_tiger(&TigerParams::default()).unwrap();
    let solver = Solver::new();
    for level in 0..=1 {
        let space = build_level_hierarchy(&fj, &fi, 11, level, false).unwrap();
        let prior = if level == 0 { ModelPrior(vec![]) } else { space.density_prior().unwrap() };
        for h in 1..=3 {
            let problem = IpomdpProblem::new(fi.clone(), space.clone(), OptimalityCriterion::FiniteHorizon(h)).unwrap();
            let sweep = solver.value_sweep(&problem, &prior, 41, h).unwrap();
            for w in sweep.windows(3) {
                let second = w[0].value - 2.0 * w[1].value + w[2].value;
                assert!(second >= -1e-9, "level {level} h {h} at {}: {second}", w[1].p);
            }
        }
    }
}

/// Isotonicity and contraction of the nested backup, with leaf evaluators in
/// place of the continuation value.
#[test]
fn nested_backup_is_isotone_and_contracting() {
    let (fi, fj) = multiagent_tiger(&TigerParams::default()).unwrap();
    let space = build_level_hierarchy(&fj, &fi, 5, 1, true).unwrap();
    let prior = space.density_prior().unwrap();
    let solver = Solver::new();
    let leaf = |c: f64, phase: f64| {
        move |b: &InteractiveBelief| -> f64 {
            b.atoms()
                .iter()
                .map(|a| {
                    let x = a.model.as_intentional().map_or(0.5, |m| m.belief().physical().weights()[0]);
                    a.weight * (c * (3.0 * x + phase + a.state as f64).sin() + 5.0 * x)
                })
                .sum()
        }
    };
    let gamma = 0.9;
    for (k, p) in [0.0, 0.25, 0.5, 0.9].into_iter().enumerate() {
        let b = InteractiveBelief::product(&Belief::two_state(p).unwrap(), &prior).unwrap();
        let base = leaf(0.0, 0.0);
        let raised = |x: &InteractiveBelief| base(x) + 1.0 + (k as f64 + x.atoms().len() as f64).cos().abs();
        let wiggle = leaf(2.0, k as f64);
        let v = solver.value_interactive_with_terminal(&fi, gamma, &b, 2, Some(&base)).unwrap().value;
        let u = solver.value_interactive_with_terminal(&fi, gamma, &b, 2, Some(&raised)).unwrap().value;
        assert!(u >= v - 1e-9);
        // |wiggle - base| <= 2 everywhere; two backups shrink it by gamma^2.
        let w = solver.value_interactive_with_terminal(&fi, gamma, &b, 2, Some(&wiggle)).unwrap().value;
        assert!((w - v).abs() <= gamma * gamma * 2.0 + 1e-9);
    }
}
