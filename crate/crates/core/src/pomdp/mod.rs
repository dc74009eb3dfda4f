//! Single-agent POMDP machinery.
//!
//! States, actions and observations are referred to by their index in
//! declaration order. Labels are kept for reporting and lookup only.

mod alpha;

pub use alpha::{
    backup, iterations_for_error, opt_actions, prune_dominated, solve, solve_from, value,
    AlphaSet, AlphaVector, Solution,
};

use crate::{Error, Result, STOCHASTIC_TOLERANCE};

/// Optimality criterion of an agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimalityCriterion {
    /// Maximize the undiscounted sum of the next `horizon` rewards.
    FiniteHorizon(usize),
    /// Maximize the discounted sum of rewards, solved to within `epsilon`.
    DiscountedInfinite { gamma: f64, epsilon: f64 },
}

impl OptimalityCriterion {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OptimalityCriterion::FiniteHorizon(0) => {
                Err(Error::validation("finite horizon must be positive"))
            }
            OptimalityCriterion::FiniteHorizon(_) => Ok(()),
            OptimalityCriterion::DiscountedInfinite { gamma, epsilon } => {
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::validation(format!("discount {gamma} outside (0,1)")));
                }
                if !(epsilon > 0.0) {
                    return Err(Error::validation(format!("epsilon {epsilon} must be positive")));
                }
                Ok(())
            }
        }
    }

    /// Factor applied to continuation values: 1 under the finite-horizon
    /// criterion, `gamma` otherwise.
    pub fn continuation_discount(&self) -> f64 {
        match *self {
            OptimalityCriterion::FiniteHorizon(_) => 1.0,
            OptimalityCriterion::DiscountedInfinite { gamma, .. } => gamma,
        }
    }
}

/// A validated single-agent POMDP.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    states: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
    /// `[s][a][s']`
    transition: Vec<f64>,
    /// `[s'][a][o]`
    observation: Vec<f64>,
    /// `[s][a]`
    reward: Vec<f64>,
    discount: f64,
}

impl PomdpModel {
    /// Builds a model from dense tables.
    ///
    /// `transition[s][a][s']`, `observation[s'][a][o]` and `reward[s][a]`
    /// follow declaration order.
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
        transition: Vec<Vec<Vec<f64>>>,
        observation: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        discount: f64,
    ) -> Result<Self> {
        let (ns, na, no) = (states.len(), actions.len(), observations.len());
        check_shape3(&transition, ns, na, ns, "transition")?;
        check_shape3(&observation, ns, na, no, "observation")?;
        if reward.len() != ns || reward.iter().any(|r| r.len() != na) {
            return Err(Error::validation("reward table has the wrong shape"));
        }
        let model = PomdpModel {
            states,
            actions,
            observations,
            transition: transition.into_iter().flatten().flatten().collect(),
            observation: observation.into_iter().flatten().flatten().collect(),
            reward: reward.into_iter().flatten().collect(),
            discount,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model from flat row-major tables (same layouts as [`PomdpModel::new`]).
    pub(crate) fn from_flat(
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
        transition: Vec<f64>,
        observation: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        let (ns, na, no) = (states.len(), actions.len(), observations.len());
        if transition.len() != ns * na * ns
            || observation.len() != ns * na * no
            || reward.len() != ns * na
        {
            return Err(Error::validation("table sizes do not match the alphabets"));
        }
        let model = PomdpModel {
            states,
            actions,
            observations,
            transition,
            observation,
            reward,
            discount,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.states.is_empty() || self.actions.is_empty() || self.observations.is_empty() {
            return Err(Error::validation("alphabets must be non-empty"));
        }
        check_unique(&self.states, "state")?;
        check_unique(&self.actions, "action")?;
        check_unique(&self.observations, "observation")?;
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::validation(format!(
                "discount {} outside (0,1]",
                self.discount
            )));
        }
        for s in 0..self.num_states() {
            for a in 0..self.num_actions() {
                let row: Vec<f64> = (0..self.num_states()).map(|s2| self.t(s, a, s2)).collect();
                check_distribution(&row, || {
                    format!("transition row ({}, {})", self.states[s], self.actions[a])
                })?;
            }
        }
        for s2 in 0..self.num_states() {
            for a in 0..self.num_actions() {
                let row: Vec<f64> = (0..self.num_observations())
                    .map(|o| self.o(s2, a, o))
                    .collect();
                check_distribution(&row, || {
                    format!("observation row ({}, {})", self.states[s2], self.actions[a])
                })?;
            }
        }
        if self.reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::validation("reward values must be finite"));
        }
        Ok(())
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn observations(&self) -> &[String] {
        &self.observations
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Transition probability `T(s, a, s')`.
    #[inline]
    pub fn t(&self, s: usize, a: usize, s2: usize) -> f64 {
        let (ns, na) = (self.num_states(), self.num_actions());
        self.transition[(s * na + a) * ns + s2]
    }

    /// Observation probability `O(s', a, o)`.
    #[inline]
    pub fn o(&self, s2: usize, a: usize, o: usize) -> f64 {
        let (na, no) = (self.num_actions(), self.num_observations());
        self.observation[(s2 * na + a) * no + o]
    }

    /// Reward `R(s, a)`.
    #[inline]
    pub fn r(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions() + a]
    }

    /// Largest absolute reward.
    pub fn max_abs_reward(&self) -> f64 {
        self.reward.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        index_of(&self.states, label, "state")
    }

    pub fn action_index(&self, label: &str) -> Result<usize> {
        index_of(&self.actions, label, "action")
    }

    pub fn observation_index(&self, label: &str) -> Result<usize> {
        index_of(&self.observations, label, "observation")
    }

    /// Expected immediate reward of `a` under `b`.
    pub fn expected_reward(&self, b: &Belief, a: usize) -> f64 {
        b.weights().iter().enumerate().map(|(s, w)| w * self.r(s, a)).sum()
    }

    /// Unnormalized posterior `O(s',a,o) Σ_s b(s) T(s,a,s')`.
    fn unnormalized_update(&self, b: &Belief, a: usize, o: usize) -> Vec<f64> {
        let ns = self.num_states();
        (0..ns)
            .map(|s2| {
                let predicted: f64 = (0..ns).map(|s| b.weights()[s] * self.t(s, a, s2)).sum();
                self.o(s2, a, o) * predicted
            })
            .collect()
    }

    /// `Pr(o | a, b)`.
    pub fn observation_likelihood(&self, b: &Belief, a: usize, o: usize) -> f64 {
        self.unnormalized_update(b, a, o).iter().sum()
    }

    /// Bayes update `SE(b, a, o)`.
    pub fn belief_update(&self, b: &Belief, a: usize, o: usize) -> Result<Belief> {
        let mut next = self.unnormalized_update(b, a, o);
        let norm: f64 = next.iter().sum();
        if !(norm > 0.0) {
            return Err(Error::ZeroLikelihood {
                action: self.actions[a].clone(),
                observation: self.observations[o].clone(),
            });
        }
        next.iter_mut().for_each(|w| *w /= norm);
        Ok(Belief(next))
    }
}

/// Probability distribution over the states of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_distribution(&weights, || "belief".to_string())?;
        Ok(Belief(weights))
    }

    /// Two-state belief with `p` on the first state.
    pub fn two_state(p: f64) -> Result<Self> {
        Belief::new(vec![p, 1.0 - p])
    }

    pub fn uniform(n: usize) -> Self {
        Belief(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, s: usize) -> Self {
        let mut w = vec![0.0; n];
        w[s] = 1.0;
        Belief(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub(crate) fn check_distribution(row: &[f64], what: impl Fn() -> String) -> Result<()> {
    if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::validation(format!(
            "{} has a probability outside [0,1]",
            what()
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(Error::validation(format!("{} sums to {sum}", what())));
    }
    Ok(())
}

pub(crate) fn check_unique(labels: &[String], kind: &str) -> Result<()> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::validation(format!("duplicate {kind} label `{l}`")));
        }
    }
    Ok(())
}

pub(crate) fn index_of(labels: &[String], label: &str, kind: &'static str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::UnknownLabel {
            kind,
            label: label.to_string(),
        })
}

fn check_shape3(t: &[Vec<Vec<f64>>], a: usize, b: usize, c: usize, what: &str) -> Result<()> {
    if t.len() != a || t.iter().any(|x| x.len() != b || x.iter().any(|y| y.len() != c)) {
        return Err(Error::validation(format!("{what} table has the wrong shape")));
    }
    Ok(())
}
