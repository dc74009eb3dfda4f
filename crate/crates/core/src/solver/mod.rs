//! Recursive solution of finitely nested I-POMDPs.
//!
//! Values are computed by exact expectimax over the reachable tree of
//! interactive beliefs. Whenever the tree needs to know what the other agent
//! does, the other agent's model is solved at its remaining horizon: level-0
//! types through alpha-vector value iteration of their folded POMDP, nested
//! types by the same recursion one level down. Both results are memoized in
//! the [`Solver`], which is safe to share between threads.

mod policy;
mod search;

pub use policy::{extract_flat_policy_graph, extract_policy_graph, EntryInterval, PolicyGraph, PolicyNode};
pub use search::{SolveResult, Terminal};

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use dashmap::DashMap;
use rayon::prelude::*;

use crate::belief::{self, InteractiveBelief, PredictedBelief};
use crate::model::{Frame, Model, ModelKey, ModelPrior, ModelSpace, TypeBelief};
use crate::pomdp::{backup, AlphaSet, Belief, OptimalityCriterion, PomdpModel};
use crate::{Error, Result};

use search::{FlatProblem, InteractiveProblem};

/// A finitely nested I-POMDP of the reasoning agent.
#[derive(Debug, Clone)]
pub struct IpomdpProblem {
    frame: Arc<Frame>,
    model_space: ModelSpace,
    criterion: OptimalityCriterion,
}

impl IpomdpProblem {
    /// The strategy level equals the level of `model_space`.
    pub fn new(frame: Arc<Frame>, model_space: ModelSpace, criterion: OptimalityCriterion) -> Result<Self> {
        criterion.validate()?;
        for m in model_space.atoms() {
            let other = m.frame();
            if other.states() != frame.states()
                || other.actions() != frame.other_actions()
                || other.other_actions() != frame.actions()
            {
                return Err(Error::validation(format!(
                    "model frame `{}` is inconsistent with frame `{}`",
                    other.name(),
                    frame.name()
                )));
            }
        }
        Ok(IpomdpProblem {
            frame,
            model_space,
            criterion,
        })
    }

    pub fn level(&self) -> usize {
        self.model_space.level()
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn model_space(&self) -> &ModelSpace {
        &self.model_space
    }

    pub fn criterion(&self) -> OptimalityCriterion {
        self.criterion
    }

    /// The level-0 reduction: the frame folded with its noise distribution.
    pub fn level0_model(&self) -> &PomdpModel {
        self.frame.level0_model()
    }

    /// Belief on the one-dimensional slice `P(first state) = p`, with the
    /// model marginal held at `prior`.
    pub fn slice_belief(&self, prior: &ModelPrior, p: f64) -> Result<TypeBelief> {
        if self.frame.num_states() != 2 {
            return Err(Error::domain("belief slices need exactly two physical states"));
        }
        let physical = Belief::two_state(p)?;
        if self.level() == 0 {
            Ok(TypeBelief::Flat(physical))
        } else {
            Ok(TypeBelief::Interactive(Arc::new(InteractiveBelief::product(&physical, prior)?)))
        }
    }
}

/// One point of a value sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub p: f64,
    pub value: f64,
    pub opt_actions: Vec<usize>,
}

/// One step of a belief trace.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub action: usize,
    pub observation: usize,
    /// `Pr(observation | action, belief before the step)`.
    pub likelihood: f64,
    pub prediction: PredictedBelief,
    pub posterior: InteractiveBelief,
}

/// Cache counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolverStats {
    /// Action-distribution queries answered from the cache.
    pub hits: usize,
    /// Action-distribution queries that had to solve a model.
    pub misses: usize,
    /// Alpha-vector backups performed for level-0 models.
    pub level0_backups: usize,
}

type DistKey = (u64, ModelKey, usize);

/// Shared solving context with memoized nested solutions.
#[derive(Debug)]
pub struct Solver {
    cached: bool,
    distributions: DashMap<DistKey, Arc<[f64]>>,
    updates: DashMap<(u64, ModelKey, usize, usize, usize), Arc<Model>>,
    level0: Mutex<HashMap<u64, Vec<Arc<AlphaSet>>>>,
    level0_misses: DashMap<usize, usize>,
    hits: AtomicUsize,
    misses: AtomicUsize,
    backups: AtomicUsize,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            cached: true,
            distributions: DashMap::new(),
            updates: DashMap::new(),
            level0: Mutex::new(HashMap::new()),
            level0_misses: DashMap::new(),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            backups: AtomicUsize::new(0),
        }
    }

    /// A solver that recomputes every nested solution.
    pub fn uncached() -> Self {
        Solver {
            cached: false,
            ..Self::new()
        }
    }

    pub fn stats(&self) -> SolverStats {
        SolverStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            level0_backups: self.backups.load(Ordering::Relaxed),
        }
    }

    /// Number of distinct level-0 models solved at `horizon`.
    pub fn level0_models_solved(&self, horizon: usize) -> usize {
        self.level0_misses.get(&horizon).map(|c| *c).unwrap_or(0)
    }

    /// Alpha set of the frame's level-0 POMDP at `horizon`.
    pub fn level0_alphas(&self, frame: &Frame, horizon: usize) -> Arc<AlphaSet> {
        let model = frame.level0_model();
        let discount = frame.criterion().continuation_discount();
        let compute = |from: &mut Vec<Arc<AlphaSet>>| {
            while from.len() <= horizon {
                let next = match from.last() {
                    None => AlphaSet::zero(model.num_states()),
                    Some(prev) => {
                        self.backups.fetch_add(1, Ordering::Relaxed);
                        AlphaSet(backup(model, prev.vectors(), discount))
                    }
                };
                from.push(Arc::new(next));
            }
            from[horizon].clone()
        };
        if self.cached {
            let mut guard = self.level0.lock().expect("level-0 cache poisoned");
            compute(guard.entry(frame.uid()).or_default())
        } else {
            compute(&mut Vec::new())
        }
    }

    /// Probability of each of the model's actions when it has `steps` decisions
    /// left: uniform over its optimal actions for intentional models, uniform
    /// over all actions for the no-information model and at `steps == 0`.
    pub fn action_distribution(&self, model: &Model, steps: usize) -> Result<Arc<[f64]>> {
        let n = model.frame().num_actions();
        let Some(intentional) = model.as_intentional().filter(|_| steps > 0) else {
            return Ok(vec![1.0 / n as f64; n].into());
        };
        let key = (model.frame().uid(), model.key().clone(), steps);
        if self.cached {
            if let Some(hit) = self.distributions.get(&key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(hit.clone());
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let opt = match intentional.belief() {
            TypeBelief::Flat(b) => {
                *self.level0_misses.entry(steps).or_insert(0) += 1;
                self.level0_alphas(intentional.frame(), steps).opt_actions(b)
            }
            TypeBelief::Interactive(ib) => {
                let frame = intentional.frame();
                let problem = InteractiveProblem {
                    solver: self,
                    frame,
                    discount: frame.criterion().continuation_discount(),
                };
                search::value(&problem, ib.as_ref(), steps, None)?.opt_actions
            }
        };
        let mut dist = vec![0.0; n];
        for &a in &opt {
            dist[a] = 1.0 / opt.len() as f64;
        }
        let dist: Arc<[f64]> = dist.into();
        if self.cached {
            self.distributions.insert(key, dist.clone());
        }
        Ok(dist)
    }

    /// The model after it acted with `action` and observed `obs`, with
    /// `steps` decisions left at the time it acted (used by nested types to
    /// predict their own partner).
    pub fn model_update(&self, model: &Arc<Model>, action: usize, obs: usize, steps: usize) -> Result<Arc<Model>> {
        if let Some(next) = model.update_unnested(action, obs) {
            return next.map(Arc::new);
        }
        let key = (model.frame().uid(), model.key().clone(), action, obs, steps);
        if self.cached {
            if let Some(hit) = self.updates.get(&key) {
                return Ok(hit.clone());
            }
        }
        let intentional = model.as_intentional().expect("nested models are intentional");
        let TypeBelief::Interactive(ib) = intentional.belief() else {
            unreachable!("flat types are updated without solving")
        };
        let next = belief::update(self, ib, action, obs, intentional.frame(), steps)?;
        let next = Arc::new(Model::nested(intentional.frame().clone(), next, intentional.level())?);
        if self.cached {
            self.updates.insert(key, next.clone());
        }
        Ok(next)
    }

    /// Expected immediate reward of `action` when the other agent has `steps`
    /// decisions left.
    pub fn expected_reward(&self, b: &InteractiveBelief, action: usize, frame: &Frame, steps: usize) -> Result<f64> {
        let mut total = 0.0;
        for atom in b.atoms() {
            let dist = self.action_distribution(&atom.model, steps)?;
            let r: f64 = dist
                .iter()
                .enumerate()
                .map(|(aj, p)| p * frame.r(atom.state, action, aj))
                .sum();
            total += atom.weight * r;
        }
        Ok(total)
    }

    /// Marginal forecast of the other agent's next action.
    pub fn j_action_forecast(&self, b: &InteractiveBelief, steps: usize) -> Result<Vec<f64>> {
        let n = b
            .atoms()
            .first()
            .map(|a| a.model.frame().num_actions())
            .ok_or_else(|| Error::domain("empty belief"))?;
        let mut out = vec![0.0; n];
        for atom in b.atoms() {
            let dist = self.action_distribution(&atom.model, steps)?;
            out.iter_mut().zip(dist.iter()).for_each(|(o, p)| *o += atom.weight * p);
        }
        Ok(out)
    }

    /// Value and optimal actions with `horizon` decisions left.
    pub fn value(&self, problem: &IpomdpProblem, b: &TypeBelief, horizon: usize) -> Result<SolveResult> {
        let discount = problem.criterion.continuation_discount();
        match (problem.level(), b) {
            (0, TypeBelief::Flat(flat)) => self.value_flat_with_terminal(problem.level0_model(), discount, flat, horizon, None),
            (0, TypeBelief::Interactive(_)) => Err(Error::domain("level-0 problems take flat beliefs")),
            (_, TypeBelief::Interactive(ib)) => {
                self.value_interactive_with_terminal(&problem.frame, discount, ib, horizon, None)
            }
            (_, TypeBelief::Flat(_)) => Err(Error::domain("nested problems take interactive beliefs")),
        }
    }

    /// Q-value of every own action with `horizon` decisions left.
    pub fn q_values(&self, problem: &IpomdpProblem, b: &TypeBelief, horizon: usize) -> Result<Vec<f64>> {
        let discount = problem.criterion.continuation_discount();
        match b {
            TypeBelief::Flat(flat) if problem.level() == 0 => search::q_values(
                &FlatProblem { model: problem.level0_model(), discount },
                flat,
                horizon,
                None,
            ),
            TypeBelief::Interactive(ib) if problem.level() > 0 => search::q_values(
                &InteractiveProblem {
                    solver: self,
                    frame: &problem.frame,
                    discount,
                },
                ib.as_ref(),
                horizon,
                None,
            ),
            _ => Err(Error::domain("belief kind does not match the problem level")),
        }
    }

    /// Expectimax over flat beliefs with an optional leaf evaluator.
    pub fn value_flat_with_terminal(
        &self,
        model: &PomdpModel,
        discount: f64,
        b: &Belief,
        horizon: usize,
        terminal: Terminal<'_, Belief>,
    ) -> Result<SolveResult> {
        search::value(&FlatProblem { model, discount }, b, horizon, terminal)
    }

    /// Expectimax over interactive beliefs with an optional leaf evaluator.
    pub fn value_interactive_with_terminal(
        &self,
        frame: &Arc<Frame>,
        discount: f64,
        b: &InteractiveBelief,
        horizon: usize,
        terminal: Terminal<'_, InteractiveBelief>,
    ) -> Result<SolveResult> {
        let problem = InteractiveProblem {
            solver: self,
            frame,
            discount,
        };
        search::value(&problem, b, horizon, terminal)
    }

    /// Runs the interactive belief update along a script of own
    /// `(action, observation)` pairs. Step `k` (from 0) predicts the other
    /// agent with `horizon - k` decisions left. Errors carry the 1-based index
    /// of the failing step.
    pub fn trace(
        &self,
        frame: &Frame,
        b0: &InteractiveBelief,
        script: &[(usize, usize)],
        horizon: usize,
    ) -> std::result::Result<Vec<TraceStep>, (usize, Error)> {
        if script.len() > horizon {
            return Err((0, Error::domain("script is longer than the horizon")));
        }
        let mut out = Vec::with_capacity(script.len());
        let mut b = b0.clone();
        for (k, &(a, o)) in script.iter().enumerate() {
            let fail = |e| (k + 1, e);
            let prediction = belief::predict(self, &b, a, frame, horizon - k).map_err(fail)?;
            let likelihood = belief::observation_likelihood(&prediction, o, frame);
            let posterior = belief::correct(&prediction, o, frame).map_err(fail)?;
            b = posterior.clone();
            out.push(TraceStep {
                action: a,
                observation: o,
                likelihood,
                prediction,
                posterior,
            });
        }
        Ok(out)
    }

    /// Values along `P(first state)` at `grid` evenly spaced points of
    /// `[0, 1]`, endpoints included, with the model marginal held at `prior`.
    pub fn value_sweep(
        &self,
        problem: &IpomdpProblem,
        prior: &ModelPrior,
        grid: usize,
        horizon: usize,
    ) -> Result<Vec<SweepPoint>> {
        if grid < 2 {
            return Err(Error::domain("a sweep needs at least 2 points"));
        }
        (0..grid)
            .into_par_iter()
            .map(|k| {
                let p = k as f64 / (grid - 1) as f64;
                let b = problem.slice_belief(prior, p)?;
                let res = self.value(problem, &b, horizon)?;
                Ok(SweepPoint {
                    p,
                    value: res.value,
                    opt_actions: res.opt_actions,
                })
            })
            .collect()
    }
}
