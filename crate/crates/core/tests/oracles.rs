//! Library results against the independent reference implementations in
//! `common`.

mod common;

use std::sync::Arc;

use common::*;
use ipomdp::belief::{self, InteractiveBelief};
use ipomdp::model::{build_level_hierarchy, fold_frame, Model, ModelPrior};
use ipomdp::pomdp::{solve, Belief, OptimalityCriterion, PomdpModel};
use ipomdp::solver::{IpomdpProblem, Solver};
use ipomdp::tiger::{multiagent_tiger, noisy_tiger, single_tiger, TigerParams};

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

fn check_level0(model: &PomdpModel) {
    let t = tables(model);
    let solver = Solver::new();
    for h in 1..=3 {
        let sets = solve(model, OptimalityCriterion::FiniteHorizon(h)).unwrap();
        let alphas = sets.final_alphas();
        for p in grid(101) {
            let b = Belief::two_state(p).unwrap();
            let want = brute_value(&t, b.weights(), h, 1.0);
            let want_opt = brute_opt(&t, b.weights(), h, 1.0);
            assert!((alphas.value(&b) - want).abs() < 1e-9, "h={h} p={p}");
            assert_eq!(alphas.opt_actions(&b), want_opt, "h={h} p={p}");
            let res = solver.value_flat_with_terminal(model, 1.0, &b, h, None).unwrap();
            assert!((res.value - want).abs() < 1e-9);
            assert_eq!(res.opt_actions, want_opt);
        }
    }
}

#[test]
fn level0_tiger_matches_enumeration() {
    check_level0(&single_tiger(&TigerParams::default()).unwrap());
}

#[test]
fn level0_noisy_tiger_matches_enumeration() {
    check_level0(&noisy_tiger(&TigerParams::default()).unwrap());
}

#[test]
fn level0_folded_frame_matches_enumeration() {
    let (fi, _) = multiagent_tiger(&TigerParams::default()).unwrap();
    check_level0(fi.level0_model());
}

#[test]
fn fold_matches_reference() {
    let (fi, _) = multiagent_tiger(&TigerParams::default()).unwrap();
    for dist in [vec![0.1, 0.8, 0.1], vec![0.0, 1.0, 0.0], vec![0.3, 0.3, 0.4]] {
        let lib = tables(&fold_frame(&fi, &dist).unwrap());
        let want = fold(&fi, &dist);
        for s in 0..2 {
            for a in 0..3 {
                assert!((lib.r[s][a] - want.r[s][a]).abs() < 1e-12);
                for s2 in 0..2 {
                    assert!((lib.t[s][a][s2] - want.t[s][a][s2]).abs() < 1e-12);
                }
                for o in 0..6 {
                    assert!((lib.o[s][a][o] - want.o[s][a][o]).abs() < 1e-12);
                }
            }
        }
    }
}

/// Library interactive belief as reference atoms.
fn as_atoms(b: &InteractiveBelief) -> Vec<IAtom> {
    b.atoms()
        .iter()
        .map(|a| IAtom {
            s: a.state,
            bj: a.model.as_intentional().unwrap().belief().physical().weights().to_vec(),
            w: a.weight,
        })
        .collect()
}

fn assert_same_belief(lib: &[IAtom], want: &[IAtom]) {
    let total = |xs: &[IAtom], s: usize, bj: f64| -> f64 {
        xs.iter()
            .filter(|a| a.s == s && (a.bj[0] - bj).abs() < 1e-9)
            .map(|a| a.w)
            .sum()
    };
    for a in want.iter().chain(lib) {
        let (x, y) = (total(lib, a.s, a.bj[0]), total(want, a.s, a.bj[0]));
        assert!((x - y).abs() < 1e-9, "atom (s={}, bj={}) {x} vs {y}", a.s, a.bj[0]);
    }
}

fn level1_setup(prior: &[(f64, f64)]) -> (Level1, InteractiveBelief, Vec<IAtom>) {
    let (fi, fj) = multiagent_tiger(&TigerParams::default()).unwrap();
    let lib_prior = ModelPrior(
        prior
            .iter()
            .map(|&(p, w)| (Arc::new(Model::level0(fj.clone(), Belief::two_state(p).unwrap()).unwrap()), w))
            .collect(),
    );
    let b = InteractiveBelief::product(&Belief::uniform(2), &lib_prior).unwrap();
    (Level1::new(fi, fj), b, product(0.5, prior))
}

#[test]
fn level1_update_matches_direct_composition() {
    let solver = Solver::new();
    for prior in [vec![(0.5, 1.0)], grid_prior(11)] {
        let (oracle, b, atoms) = level1_setup(&prior);
        let fi = oracle.fi.clone();
        for (a, o) in [("L", "GL,S"), ("L", "GR,CL"), ("OL", "GL,CR"), ("L", "GL,CR")] {
            let (a, o) = (fi.action_index(a).unwrap(), fi.observation_index(o).unwrap());
            for steps in 1..=3 {
                let (z, want) = oracle.update(&atoms, a, o, steps).unwrap();
                let pred = belief::predict(&solver, &b, a, &fi, steps).unwrap();
                assert!((belief::observation_likelihood(&pred, o, &fi) - z).abs() < 1e-12);
                let lib = belief::update(&solver, &b, a, o, &fi, steps).unwrap();
                assert_same_belief(&as_atoms(&lib), &want);
            }
        }
    }
}

#[test]
fn two_step_trace_from_point_prior() {
    let (oracle, b, atoms) = level1_setup(&[(0.5, 1.0)]);
    let fi = oracle.fi.clone();
    let (l, gls) = (fi.action_index("L").unwrap(), fi.observation_index("GL,S").unwrap());
    let (_, a1) = oracle.update(&atoms, l, gls, 3).unwrap();
    let (_, a2) = oracle.update(&a1, l, gls, 2).unwrap();
    let want: f64 = a2.iter().filter(|a| a.s == 0).map(|a| a.w).sum();
    let solver = Solver::new();
    let steps = solver.trace(&fi, &b, &[(l, gls), (l, gls)], 3).unwrap();
    let got = steps[1].posterior.marginal_physical().weights()[0];
    assert!((got - want).abs() < 1e-12);
    assert!((got - 0.9698).abs() < 5e-5, "{got}");
}

#[test]
fn level1_values_match_reference() {
    let solver = Solver::new();
    let prior = grid_prior(11);
    let (oracle, _, _) = level1_setup(&prior);
    let (fi, fj) = (oracle.fi.clone(), oracle.fj.clone());
    let space = build_level_hierarchy(&fj, &fi, 11, 1, false).unwrap();
    let lib_prior = space.density_prior().unwrap();
    for h in 1..=2 {
        let problem = IpomdpProblem::new(fi.clone(), space.clone(), OptimalityCriterion::FiniteHorizon(h)).unwrap();
        for p in grid(11) {
            let want_q = oracle.q(&product(p, &prior), h);
            let b = problem.slice_belief(&lib_prior, p).unwrap();
            let res = solver.value(&problem, &b, h).unwrap();
            let want = want_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((res.value - want).abs() < 1e-9, "h={h} p={p}: {} vs {want}", res.value);
            assert_eq!(res.opt_actions, ties(&want_q));
        }
    }
}

#[test]
fn level1_horizon3_value_matches_reference() {
    let solver = Solver::new();
    let prior = grid_prior(3);
    let (oracle, _, _) = level1_setup(&prior);
    let (fi, fj) = (oracle.fi.clone(), oracle.fj.clone());
    let space = build_level_hierarchy(&fj, &fi, 3, 1, false).unwrap();
    let problem = IpomdpProblem::new(fi, space.clone(), OptimalityCriterion::FiniteHorizon(3)).unwrap();
    for p in [0.5, 0.8] {
        let want = oracle.value(&product(p, &prior), 3);
        let b = problem.slice_belief(&space.density_prior().unwrap(), p).unwrap();
        let got = solver.value(&problem, &b, 3).unwrap().value;
        assert!((got - want).abs() < 1e-9, "p={p}: {got} vs {want}");
    }
}

#[test]
fn cache_is_transparent() {
    let (fi, fj) = multiagent_tiger(&TigerParams::default()).unwrap();
    let space = build_level_hierarchy(&fj, &fi, 5, 1, true).unwrap();
    let prior = space.density_prior().unwrap();
    let problem = IpomdpProblem::new(fi, space, OptimalityCriterion::FiniteHorizon(3)).unwrap();
    let (cached, uncached) = (Solver::new(), Solver::uncached());
    for p in [0.0, 0.3, 0.5] {
        let b = problem.slice_belief(&prior, p).unwrap();
        let x = cached.value(&problem, &b, 3).unwrap();
        let y = uncached.value(&problem, &b, 3).unwrap();
        assert_eq!(x.value.to_bits(), y.value.to_bits());
        assert_eq!(x.opt_actions, y.opt_actions);
    }
    assert!(cached.stats().hits > 0);
    assert_eq!(uncached.stats().hits, 0);
}

#[test]
fn repeated_level0_query_does_not_solve_again() {
    let (_, fj) = multiagent_tiger(&TigerParams::default()).unwrap();
    let solver = Solver::new();
    let m = Model::level0(fj, Belief::uniform(2)).unwrap();
    solver.action_distribution(&m, 2).unwrap();
    let before = solver.stats();
    solver.action_distribution(&m, 2).unwrap();
    assert_eq!(solver.stats().hits, before.hits + 1);
    assert_eq!(solver.stats().level0_backups, before.level0_backups);
}
