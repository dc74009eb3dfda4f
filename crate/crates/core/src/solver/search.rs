//! Exact finite-depth expectimax over a belief tree.

use std::sync::Arc;

use crate::belief::{self, InteractiveBelief};
use crate::model::Frame;
use crate::pomdp::{Belief, PomdpModel};
use crate::{Result, TIE_TOLERANCE};

use super::Solver;

/// Leaf evaluator applied at depth 0 in place of the zero value function.
pub type Terminal<'a, B> = Option<&'a (dyn Fn(&B) -> f64 + Sync)>;

/// A sequential decision problem over beliefs of type `Belief`.
///
/// `steps` is the number of decisions left including the current one.
pub(crate) trait BeliefProblem: Sync {
    type Belief: Clone + Send + Sync;

    fn num_actions(&self) -> usize;
    fn continuation_discount(&self) -> f64;
    fn expected_reward(&self, b: &Self::Belief, action: usize, steps: usize) -> Result<f64>;

    /// Posterior for every observation; `None` where the likelihood is zero.
    fn branches(
        &self,
        b: &Self::Belief,
        action: usize,
        steps: usize,
    ) -> Result<Vec<(f64, Option<Self::Belief>)>>;
}

pub(crate) struct FlatProblem<'a> {
    pub model: &'a PomdpModel,
    pub discount: f64,
}

impl BeliefProblem for FlatProblem<'_> {
    type Belief = Belief;

    fn num_actions(&self) -> usize {
        self.model.num_actions()
    }

    fn continuation_discount(&self) -> f64 {
        self.discount
    }

    fn expected_reward(&self, b: &Belief, action: usize, _steps: usize) -> Result<f64> {
        Ok(self.model.expected_reward(b, action))
    }

    fn branches(&self, b: &Belief, action: usize, _steps: usize) -> Result<Vec<(f64, Option<Belief>)>> {
        (0..self.model.num_observations())
            .map(|o| {
                let p = self.model.observation_likelihood(b, action, o);
                if p > 0.0 {
                    Ok((p, Some(self.model.belief_update(b, action, o)?)))
                } else {
                    Ok((0.0, None))
                }
            })
            .collect()
    }
}

pub(crate) struct InteractiveProblem<'a> {
    pub solver: &'a Solver,
    pub frame: &'a Arc<Frame>,
    pub discount: f64,
}

impl BeliefProblem for InteractiveProblem<'_> {
    type Belief = InteractiveBelief;

    fn num_actions(&self) -> usize {
        self.frame.num_actions()
    }

    fn continuation_discount(&self) -> f64 {
        self.discount
    }

    fn expected_reward(&self, b: &InteractiveBelief, action: usize, steps: usize) -> Result<f64> {
        self.solver.expected_reward(b, action, self.frame, steps)
    }

    fn branches(
        &self,
        b: &InteractiveBelief,
        action: usize,
        steps: usize,
    ) -> Result<Vec<(f64, Option<InteractiveBelief>)>> {
        let pred = belief::predict(self.solver, b, action, self.frame, steps)?;
        (0..self.frame.num_observations())
            .map(|o| {
                let p = belief::observation_likelihood(&pred, o, self.frame);
                if p > 0.0 {
                    Ok((p, Some(belief::correct(&pred, o, self.frame)?)))
                } else {
                    Ok((0.0, None))
                }
            })
            .collect()
    }
}

/// Value and tie set of optimal actions at a belief.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub value: f64,
    /// Indices of every action within the tie tolerance of the best, ascending.
    pub opt_actions: Vec<usize>,
}

/// Optimal conditional plan: an action, then one sub-plan per observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct PlanTree {
    pub action: usize,
    pub children: Vec<PlanTree>,
}

fn tie_set(q: &[f64]) -> (f64, Vec<usize>) {
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let opt = (0..q.len()).filter(|&a| q[a] >= best - TIE_TOLERANCE).collect();
    (best, opt)
}

pub(crate) fn value<P: BeliefProblem>(
    problem: &P,
    b: &P::Belief,
    steps: usize,
    terminal: Terminal<'_, P::Belief>,
) -> Result<SolveResult> {
    Ok(search(problem, b, steps, terminal, false)?.0)
}

pub(crate) fn plan<P: BeliefProblem>(problem: &P, b: &P::Belief, steps: usize) -> Result<(SolveResult, PlanTree)> {
    let (res, tree) = search(problem, b, steps, None, true)?;
    Ok((res, tree.expect("plans requested")))
}

/// Q-values of every action at `b`.
pub(crate) fn q_values<P: BeliefProblem>(
    problem: &P,
    b: &P::Belief,
    steps: usize,
    terminal: Terminal<'_, P::Belief>,
) -> Result<Vec<f64>> {
    (0..problem.num_actions())
        .map(|a| Ok(q_value(problem, b, a, steps, terminal, false)?.0))
        .collect()
}

fn q_value<P: BeliefProblem>(
    problem: &P,
    b: &P::Belief,
    action: usize,
    steps: usize,
    terminal: Terminal<'_, P::Belief>,
    want_plan: bool,
) -> Result<(f64, Vec<PlanTree>)> {
    let mut q = problem.expected_reward(b, action, steps)?;
    let mut children = Vec::new();
    if steps > 1 || terminal.is_some() {
        let mut future = 0.0;
        for (p, next) in problem.branches(b, action, steps)? {
            match next {
                Some(next) => {
                    let (res, child) = search(problem, &next, steps - 1, terminal, want_plan)?;
                    future += p * res.value;
                    if let Some(c) = child {
                        children.push(c);
                    }
                }
                None if want_plan && steps > 1 => {
                    // Unreachable observation: continue with the current belief.
                    let (_, child) = search(problem, b, steps - 1, terminal, true)?;
                    children.extend(child);
                }
                None => {}
            }
        }
        q += problem.continuation_discount() * future;
    }
    if want_plan && steps == 1 {
        children.clear();
    }
    Ok((q, children))
}

fn search<P: BeliefProblem>(
    problem: &P,
    b: &P::Belief,
    steps: usize,
    terminal: Terminal<'_, P::Belief>,
    want_plan: bool,
) -> Result<(SolveResult, Option<PlanTree>)> {
    if steps == 0 {
        let value = terminal.map(|f| f(b)).unwrap_or(0.0);
        let res = SolveResult {
            value,
            opt_actions: (0..problem.num_actions()).collect(),
        };
        return Ok((res, None));
    }
    let mut q = Vec::with_capacity(problem.num_actions());
    let mut plans = Vec::with_capacity(problem.num_actions());
    for a in 0..problem.num_actions() {
        let (v, children) = q_value(problem, b, a, steps, terminal, want_plan)?;
        q.push(v);
        plans.push(children);
    }
    let (value, opt_actions) = tie_set(&q);
    let tree = want_plan.then(|| {
        let action = opt_actions[0];
        PlanTree {
            action,
            children: std::mem::take(&mut plans[action]),
        }
    });
    Ok((SolveResult { value, opt_actions }, tree))
}
