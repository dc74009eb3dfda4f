//! Beliefs over interactive states and their Bayesian update.
//!
//! An [`InteractiveBelief`] is a finite weighted set of atoms, each pairing a
//! physical state with a model of the other agent. The update runs in two
//! stages: [`predict`] pushes every atom through the other agent's action
//! distribution, the transition and the other agent's own observation and
//! belief update; [`correct`] weighs the prediction by the own observation
//! likelihood and normalizes.

use std::sync::Arc;

use crate::model::{key_coord, product_atoms, Frame, Model, ModelKey, ModelPrior};
use crate::pomdp::Belief;
use crate::solver::Solver;
use crate::{Error, Result};

/// One weighted interactive state.
#[derive(Debug, Clone)]
pub struct Atom {
    pub state: usize,
    pub model: Arc<Model>,
    pub weight: f64,
}

/// Probability distribution over `S × M`, merged and in canonical order
/// (physical state, then model key).
#[derive(Debug, Clone)]
pub struct InteractiveBelief {
    atoms: Vec<Atom>,
}

/// Sorts by (state, key) and sums the weights of identical interactive
/// states. Zero-weight atoms are dropped.
fn merge(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.state.cmp(&b.state).then_with(|| a.model.key().cmp(b.model.key())));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        match out.last_mut() {
            Some(last) if last.state == atom.state && last.model.key() == atom.model.key() => {
                last.weight += atom.weight;
            }
            _ => out.push(atom),
        }
    }
    out.retain(|a| a.weight > 0.0);
    out
}

impl InteractiveBelief {
    /// Builds a belief from atoms whose weights already sum to one.
    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.iter().any(|a| !(a.weight >= 0.0) || !a.weight.is_finite()) {
            return Err(Error::validation("atom weights must be finite and non-negative"));
        }
        let atoms = merge(atoms);
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("interactive belief sums to {total}")));
        }
        Ok(InteractiveBelief { atoms })
    }

    /// Merges and normalizes; the caller guarantees a positive total.
    fn normalized(atoms: Vec<Atom>) -> Self {
        let mut atoms = merge(atoms);
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        debug_assert!(total > 0.0);
        atoms.iter_mut().for_each(|a| a.weight /= total);
        InteractiveBelief { atoms }
    }

    /// Independent product of a physical belief and a model prior.
    pub fn product(physical: &Belief, prior: &ModelPrior) -> Result<Self> {
        let total: f64 = prior.0.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("model prior sums to {total}")));
        }
        Self::from_atoms(product_atoms(physical, prior))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn num_states(&self) -> usize {
        self.atoms
            .first()
            .map(|a| a.model.frame().num_states())
            .unwrap_or(0)
    }

    /// Marginal distribution over physical states.
    pub fn marginal_physical(&self) -> Belief {
        let mut w = vec![0.0; self.num_states()];
        for a in &self.atoms {
            w[a.state] += a.weight;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        Belief::new(w).expect("merged weights form a distribution")
    }

    /// Marginal distribution over models, in canonical key order.
    pub fn marginal_model(&self) -> Vec<(Arc<Model>, f64)> {
        let mut by_model: Vec<(Arc<Model>, f64)> =
            self.atoms.iter().map(|a| (a.model.clone(), a.weight)).collect();
        by_model.sort_by(|a, b| a.0.key().cmp(b.0.key()));
        let mut out: Vec<(Arc<Model>, f64)> = Vec::with_capacity(by_model.len());
        for (m, w) in by_model {
            match out.last_mut() {
                Some(last) if last.0.key() == m.key() => last.1 += w,
                _ => out.push((m, w)),
            }
        }
        out
    }

    /// Atom-set equality with weights compared to within `tol`.
    pub fn approx_eq(&self, other: &InteractiveBelief, tol: f64) -> bool {
        self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| {
                a.state == b.state && a.model.key() == b.model.key() && (a.weight - b.weight).abs() <= tol
            })
    }

    /// Canonical key of the whole belief, with weights rounded like model
    /// coordinates.
    pub fn key(&self) -> Vec<(u32, ModelKey, i64)> {
        self.atoms
            .iter()
            .map(|a| (a.state as u32, a.model.key().clone(), key_coord(a.weight)))
            .collect()
    }
}

/// Prediction conditioned on one action of the other agent.
#[derive(Debug, Clone)]
pub struct PredictedBranch {
    pub other_action: usize,
    /// Marginal probability of `other_action` under the prior.
    pub probability: f64,
    /// Normalized distribution over next interactive states given the action.
    pub atoms: Vec<Atom>,
}

/// Output of [`predict`]: one branch per other-agent action with positive
/// probability, in action order.
#[derive(Debug, Clone)]
pub struct PredictedBelief {
    pub own_action: usize,
    pub branches: Vec<PredictedBranch>,
}

impl PredictedBelief {
    /// Unnormalized posteriors `p(a_j) · Pr(is' | a_i, a_j, b)` flattened over
    /// branches.
    fn joint(&self) -> impl Iterator<Item = (usize, &Atom, f64)> {
        self.branches.iter().flat_map(|br| {
            br.atoms
                .iter()
                .map(move |a| (br.other_action, a, br.probability * a.weight))
        })
    }

    /// Distribution over next physical states, mixed over branches.
    pub fn marginal_physical(&self, num_states: usize) -> Vec<f64> {
        let mut w = vec![0.0; num_states];
        for (_, atom, p) in self.joint() {
            w[atom.state] += p;
        }
        w
    }
}

/// Prediction stage of the interactive belief update.
///
/// `steps_to_go` is the remaining horizon of the other agent when it picks
/// its current action.
pub fn predict(
    solver: &Solver,
    b: &InteractiveBelief,
    own_action: usize,
    frame: &Frame,
    steps_to_go: usize,
) -> Result<PredictedBelief> {
    let ns = frame.num_states();
    let nb = frame.num_other_actions();
    let mut per_action: Vec<Vec<Atom>> = vec![Vec::new(); nb];
    let mut action_mass = vec![0.0; nb];
    for atom in b.atoms() {
        let dist = solver.action_distribution(&atom.model, steps_to_go)?;
        assert!(
            dist.len() == nb,
            "model's action set does not match the frame's other-agent actions"
        );
        let other_frame = atom.model.frame().clone();
        for (aj, &pa) in dist.iter().enumerate() {
            if pa <= 0.0 {
                continue;
            }
            action_mass[aj] += atom.weight * pa;
            for oj in 0..other_frame.num_observations() {
                let mut next_model: Option<Arc<Model>> = None;
                for s2 in 0..ns {
                    let t = frame.t(atom.state, own_action, aj, s2);
                    if t <= 0.0 {
                        continue;
                    }
                    // The other agent's own perspective: its action first.
                    let po = other_frame.o(s2, aj, own_action, oj);
                    if po <= 0.0 {
                        continue;
                    }
                    let model = match &next_model {
                        Some(m) => m.clone(),
                        None => {
                            let m = solver.model_update(&atom.model, aj, oj, steps_to_go)?;
                            next_model = Some(m.clone());
                            m
                        }
                    };
                    per_action[aj].push(Atom {
                        state: s2,
                        model,
                        weight: atom.weight * pa * t * po,
                    });
                }
            }
        }
    }
    let branches = per_action
        .into_iter()
        .enumerate()
        .filter(|(aj, _)| action_mass[*aj] > 0.0)
        .map(|(aj, atoms)| {
            let mut atoms = merge(atoms);
            let total: f64 = atoms.iter().map(|a| a.weight).sum();
            atoms.iter_mut().for_each(|a| a.weight /= total);
            PredictedBranch {
                other_action: aj,
                probability: action_mass[aj],
                atoms,
            }
        })
        .collect();
    Ok(PredictedBelief {
        own_action,
        branches,
    })
}

/// `Pr(o | a, b)`: the normalizer of the correction step.
pub fn observation_likelihood(pred: &PredictedBelief, own_obs: usize, frame: &Frame) -> f64 {
    pred.joint()
        .map(|(aj, atom, p)| p * frame.o(atom.state, pred.own_action, aj, own_obs))
        .sum()
}

/// Correction stage: weigh the prediction by the own observation and
/// normalize.
pub fn correct(pred: &PredictedBelief, own_obs: usize, frame: &Frame) -> Result<InteractiveBelief> {
    let atoms: Vec<Atom> = pred
        .joint()
        .map(|(aj, atom, p)| Atom {
            state: atom.state,
            model: atom.model.clone(),
            weight: p * frame.o(atom.state, pred.own_action, aj, own_obs),
        })
        .filter(|a| a.weight > 0.0)
        .collect();
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroLikelihood {
            action: frame.actions()[pred.own_action].clone(),
            observation: frame.observations()[own_obs].clone(),
        });
    }
    Ok(InteractiveBelief::normalized(atoms))
}

/// Full interactive belief update: [`correct`] after [`predict`].
pub fn update(
    solver: &Solver,
    b: &InteractiveBelief,
    own_action: usize,
    own_obs: usize,
    frame: &Frame,
    steps_to_go: usize,
) -> Result<InteractiveBelief> {
    let pred = predict(solver, b, own_action, frame, steps_to_go)?;
    correct(&pred, own_obs, frame)
}
