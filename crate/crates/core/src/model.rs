//! Frames, models of the other agent and the finitely nested model space.
//!
//! A [`Frame`] is always written from its owner's perspective: tables are
//! indexed by (own action, other agent's action). A [`Model`] is what one agent
//! believes about the other: either an intentional type (belief plus frame)
//! or a no-information model that plays every action with equal probability.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use crate::belief::{Atom, InteractiveBelief};
use crate::pomdp::{check_distribution, check_unique, index_of, Belief, OptimalityCriterion, PomdpModel};
use crate::{Error, Result};

static NEXT_FRAME_UID: AtomicU64 = AtomicU64::new(0);

/// Scale used when rounding belief coordinates into canonical keys.
const KEY_SCALE: f64 = 1e12;

/// Raw tables for [`Frame::new`]. Layouts are row-major:
/// `transition[s][a][b][s']`, `observation[s'][a][b][o]`, `reward[s][a][b]`,
/// where `a` is the owner's action and `b` the other agent's.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub name: String,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub other_actions: Vec<String>,
    pub observations: Vec<String>,
    pub transition: Vec<f64>,
    pub observation: Vec<f64>,
    pub reward: Vec<f64>,
    pub criterion: OptimalityCriterion,
    /// Distribution over the other agent's actions used when this frame is
    /// folded into a level-0 POMDP.
    pub noise: Vec<f64>,
}

/// An agent's frame: everything in its type except the belief.
#[derive(Debug)]
pub struct Frame {
    uid: u64,
    spec: FrameSpec,
    level0: OnceLock<PomdpModel>,
}

impl Frame {
    pub fn new(spec: FrameSpec) -> Result<Self> {
        let (ns, na, nb, no) = (
            spec.states.len(),
            spec.actions.len(),
            spec.other_actions.len(),
            spec.observations.len(),
        );
        if ns == 0 || na == 0 || nb == 0 || no == 0 {
            return Err(Error::validation(format!("frame `{}` has an empty alphabet", spec.name)));
        }
        check_unique(&spec.states, "state")?;
        check_unique(&spec.actions, "action")?;
        check_unique(&spec.other_actions, "action")?;
        check_unique(&spec.observations, "observation")?;
        if spec.transition.len() != ns * na * nb * ns
            || spec.observation.len() != ns * na * nb * no
            || spec.reward.len() != ns * na * nb
            || spec.noise.len() != nb
        {
            return Err(Error::validation(format!(
                "frame `{}` tables do not match its alphabets",
                spec.name
            )));
        }
        spec.criterion.validate()?;
        let frame = Frame {
            uid: NEXT_FRAME_UID.fetch_add(1, Ordering::Relaxed),
            spec,
            level0: OnceLock::new(),
        };
        for s in 0..ns {
            for a in 0..na {
                for b in 0..nb {
                    let row: Vec<f64> = (0..ns).map(|s2| frame.t(s, a, b, s2)).collect();
                    check_distribution(&row, || {
                        format!(
                            "frame `{}` transition row ({}, {}, {})",
                            frame.name(),
                            frame.spec.states[s],
                            frame.spec.actions[a],
                            frame.spec.other_actions[b]
                        )
                    })?;
                    let row: Vec<f64> = (0..no).map(|o| frame.o(s, a, b, o)).collect();
                    check_distribution(&row, || {
                        format!(
                            "frame `{}` observation row ({}, {}, {})",
                            frame.name(),
                            frame.spec.states[s],
                            frame.spec.actions[a],
                            frame.spec.other_actions[b]
                        )
                    })?;
                }
            }
        }
        if frame.spec.reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::validation("reward values must be finite"));
        }
        check_distribution(&frame.spec.noise, || format!("frame `{}` noise", frame.name()))?;
        Ok(frame)
    }

    /// Process-unique identity, used to key solver caches.
    pub fn uid(&self) -> u64 {
        self.uid
    }

    /// Agent name; identifies the frame inside canonical model keys.
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn spec(&self) -> &FrameSpec {
        &self.spec
    }

    pub fn states(&self) -> &[String] {
        &self.spec.states
    }

    pub fn actions(&self) -> &[String] {
        &self.spec.actions
    }

    pub fn other_actions(&self) -> &[String] {
        &self.spec.other_actions
    }

    pub fn observations(&self) -> &[String] {
        &self.spec.observations
    }

    pub fn num_states(&self) -> usize {
        self.spec.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.spec.actions.len()
    }

    pub fn num_other_actions(&self) -> usize {
        self.spec.other_actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.spec.observations.len()
    }

    pub fn criterion(&self) -> OptimalityCriterion {
        self.spec.criterion
    }

    pub fn noise(&self) -> &[f64] {
        &self.spec.noise
    }

    #[inline]
    pub fn t(&self, s: usize, a: usize, b: usize, s2: usize) -> f64 {
        let (ns, na, nb) = (self.num_states(), self.num_actions(), self.num_other_actions());
        self.spec.transition[((s * na + a) * nb + b) * ns + s2]
    }

    #[inline]
    pub fn o(&self, s2: usize, a: usize, b: usize, o: usize) -> f64 {
        let (na, nb, no) = (self.num_actions(), self.num_other_actions(), self.num_observations());
        self.spec.observation[((s2 * na + a) * nb + b) * no + o]
    }

    #[inline]
    pub fn r(&self, s: usize, a: usize, b: usize) -> f64 {
        self.spec.reward[(s * self.num_actions() + a) * self.num_other_actions() + b]
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.spec.reward.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        index_of(&self.spec.states, label, "state")
    }

    pub fn action_index(&self, label: &str) -> Result<usize> {
        index_of(&self.spec.actions, label, "action")
    }

    pub fn other_action_index(&self, label: &str) -> Result<usize> {
        index_of(&self.spec.other_actions, label, "action")
    }

    pub fn observation_index(&self, label: &str) -> Result<usize> {
        index_of(&self.spec.observations, label, "observation")
    }

    /// The level-0 POMDP: this frame folded with its own noise distribution.
    pub fn level0_model(&self) -> &PomdpModel {
        self.level0.get_or_init(|| {
            fold_frame(self, &self.spec.noise).expect("frame tables were validated")
        })
    }

    /// True when both frames have identical alphabets and tables, ignoring
    /// the agent name.
    pub fn same_tables(&self, other: &Frame) -> bool {
        let (a, b) = (&self.spec, &other.spec);
        a.states == b.states
            && a.actions == b.actions
            && a.other_actions == b.other_actions
            && a.observations == b.observations
            && a.transition == b.transition
            && a.observation == b.observation
            && a.reward == b.reward
            && a.criterion == b.criterion
            && a.noise == b.noise
    }
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

/// Absorbs a fixed distribution over the other agent's actions into
/// single-agent tables.
pub fn fold_frame(frame: &Frame, other_dist: &[f64]) -> Result<PomdpModel> {
    if other_dist.len() != frame.num_other_actions() {
        return Err(Error::domain("fold distribution has the wrong length"));
    }
    let sum: f64 = other_dist.iter().sum();
    if other_dist.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("fold distribution sums to {sum}")));
    }
    let (ns, na, nb, no) = (
        frame.num_states(),
        frame.num_actions(),
        frame.num_other_actions(),
        frame.num_observations(),
    );
    let mix = |f: &dyn Fn(usize) -> f64| -> f64 {
        (0..nb).map(|b| other_dist[b] * f(b)).sum()
    };
    let mut transition = Vec::with_capacity(ns * na * ns);
    for s in 0..ns {
        for a in 0..na {
            for s2 in 0..ns {
                transition.push(mix(&|b| frame.t(s, a, b, s2)));
            }
        }
    }
    let mut observation = Vec::with_capacity(ns * na * no);
    for s2 in 0..ns {
        for a in 0..na {
            for o in 0..no {
                observation.push(mix(&|b| frame.o(s2, a, b, o)));
            }
        }
    }
    let mut reward = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            reward.push(mix(&|b| frame.r(s, a, b)));
        }
    }
    PomdpModel::from_flat(
        frame.states().to_vec(),
        frame.actions().to_vec(),
        frame.observations().to_vec(),
        transition,
        observation,
        reward,
        frame.criterion().continuation_discount(),
    )
}

/// Rounds a probability into a canonical key coordinate.
pub(crate) fn key_coord(x: f64) -> i64 {
    (x * KEY_SCALE).round() as i64
}

/// Canonical identity of a model. Sorting by key yields the canonical atom
/// order: no-information models first, then intentional models by level and
/// ascending belief coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKey {
    NoInformation {
        frame: Arc<str>,
        history: Vec<u32>,
    },
    Intentional {
        level: u32,
        frame: Arc<str>,
        belief: BeliefKey,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BeliefKey {
    Flat(Vec<i64>),
    Interactive(Vec<(u32, ModelKey, i64)>),
}

/// The belief part of an intentional model.
#[derive(Debug, Clone)]
pub enum TypeBelief {
    /// Level 0: a distribution over physical states.
    Flat(Belief),
    /// Level ≥ 1: a distribution over physical states and models of the
    /// other agent.
    Interactive(Arc<InteractiveBelief>),
}

impl TypeBelief {
    fn key(&self) -> BeliefKey {
        match self {
            TypeBelief::Flat(b) => BeliefKey::Flat(b.weights().iter().map(|&w| key_coord(w)).collect()),
            TypeBelief::Interactive(ib) => BeliefKey::Interactive(
                ib.atoms()
                    .iter()
                    .map(|a| (a.state as u32, a.model.key().clone(), key_coord(a.weight)))
                    .collect(),
            ),
        }
    }

    /// Marginal over physical states.
    pub fn physical(&self) -> Belief {
        match self {
            TypeBelief::Flat(b) => b.clone(),
            TypeBelief::Interactive(ib) => ib.marginal_physical(),
        }
    }
}

/// An intentional model (type): a belief together with a frame.
#[derive(Debug, Clone)]
pub struct IntentionalModel {
    belief: TypeBelief,
    frame: Arc<Frame>,
    level: usize,
}

impl IntentionalModel {
    pub fn belief(&self) -> &TypeBelief {
        &self.belief
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn level(&self) -> usize {
        self.level
    }
}

/// The no-information model: every action is equally likely regardless of
/// the observation history.
#[derive(Debug, Clone)]
pub struct SubintentionalModel {
    frame: Arc<Frame>,
    history: Vec<usize>,
}

impl SubintentionalModel {
    pub fn history(&self) -> &[usize] {
        &self.history
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }
}

#[derive(Debug, Clone)]
enum ModelKind {
    Intentional(IntentionalModel),
    NoInformation(SubintentionalModel),
}

/// A model of another agent, with its canonical key precomputed.
#[derive(Debug, Clone)]
pub struct Model {
    kind: ModelKind,
    key: ModelKey,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Model {
    /// Level-0 type: a flat belief over the frame's states.
    pub fn level0(frame: Arc<Frame>, belief: Belief) -> Result<Self> {
        if belief.len() != frame.num_states() {
            return Err(Error::validation("belief does not match the frame's states"));
        }
        Ok(Self::intentional(frame, TypeBelief::Flat(belief), 0))
    }

    /// Type of level `level ≥ 1` with a belief over the other agent's models.
    pub fn nested(frame: Arc<Frame>, belief: InteractiveBelief, level: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::validation("nested types have level at least 1"));
        }
        for atom in belief.atoms() {
            if atom.model.level() + 1 > level && atom.model.is_intentional() {
                return Err(Error::validation(format!(
                    "level-{level} type holds a level-{} model",
                    atom.model.level()
                )));
            }
            if atom.state >= frame.num_states() {
                return Err(Error::validation("belief atom outside the frame's states"));
            }
        }
        Ok(Self::intentional(frame, TypeBelief::Interactive(Arc::new(belief)), level))
    }

    fn intentional(frame: Arc<Frame>, belief: TypeBelief, level: usize) -> Self {
        let key = ModelKey::Intentional {
            level: level as u32,
            frame: Arc::from(frame.name()),
            belief: belief.key(),
        };
        Model {
            kind: ModelKind::Intentional(IntentionalModel { belief, frame, level }),
            key,
        }
    }

    /// No-information model with the given observation history.
    pub fn no_information(frame: Arc<Frame>, history: Vec<usize>) -> Result<Self> {
        if history.iter().any(|&o| o >= frame.num_observations()) {
            return Err(Error::validation("history holds an unknown observation"));
        }
        let key = ModelKey::NoInformation {
            frame: Arc::from(frame.name()),
            history: history.iter().map(|&o| o as u32).collect(),
        };
        Ok(Model {
            kind: ModelKind::NoInformation(SubintentionalModel { frame, history }),
            key,
        })
    }

    pub fn key(&self) -> &ModelKey {
        &self.key
    }

    pub fn frame(&self) -> &Arc<Frame> {
        match &self.kind {
            ModelKind::Intentional(m) => &m.frame,
            ModelKind::NoInformation(m) => &m.frame,
        }
    }

    /// Strategy level; no-information models report 0.
    pub fn level(&self) -> usize {
        match &self.kind {
            ModelKind::Intentional(m) => m.level,
            ModelKind::NoInformation(_) => 0,
        }
    }

    pub fn is_intentional(&self) -> bool {
        matches!(self.kind, ModelKind::Intentional(_))
    }

    pub fn as_intentional(&self) -> Option<&IntentionalModel> {
        match &self.kind {
            ModelKind::Intentional(m) => Some(m),
            ModelKind::NoInformation(_) => None,
        }
    }

    pub fn as_subintentional(&self) -> Option<&SubintentionalModel> {
        match &self.kind {
            ModelKind::Intentional(_) => None,
            ModelKind::NoInformation(m) => Some(m),
        }
    }

    pub fn kind_label(&self) -> &'static str {
        match self.kind {
            ModelKind::Intentional(_) => "intentional",
            ModelKind::NoInformation(_) => "noinfo",
        }
    }

    /// Belief coordinates (`;`-joined physical marginal) for intentional
    /// models, or the `;`-joined observation history otherwise.
    pub fn describe(&self) -> String {
        match &self.kind {
            ModelKind::Intentional(m) => m
                .belief
                .physical()
                .weights()
                .iter()
                .map(|w| format!("{w:.17}"))
                .collect::<Vec<_>>()
                .join(";"),
            ModelKind::NoInformation(m) => m
                .history
                .iter()
                .map(|&o| m.frame.observations()[o].as_str())
                .collect::<Vec<_>>()
                .join(";"),
        }
    }

    /// Successor of a model that needs no solving: level-0 types update
    /// their flat belief with their own folded POMDP, no-information models
    /// append the observation. Returns `None` for nested types.
    pub(crate) fn update_unnested(&self, a: usize, o: usize) -> Option<Result<Model>> {
        match &self.kind {
            ModelKind::NoInformation(m) => {
                let mut history = m.history.clone();
                history.push(o);
                Some(Model::no_information(m.frame.clone(), history))
            }
            ModelKind::Intentional(m) => match &m.belief {
                TypeBelief::Flat(b) => Some(
                    m.frame
                        .level0_model()
                        .belief_update(b, a, o)
                        .map(|next| Self::intentional(m.frame.clone(), TypeBelief::Flat(next), 0)),
                ),
                TypeBelief::Interactive(_) => None,
            },
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]({})", self.kind_label(), self.level(), self.describe())
    }
}

/// A weighted set of models of the other agent.
#[derive(Debug, Clone)]
pub struct ModelPrior(pub Vec<(Arc<Model>, f64)>);

impl ModelPrior {
    pub fn point(model: Arc<Model>) -> Self {
        ModelPrior(vec![(model, 1.0)])
    }
}

/// The finite model set `M_{j,l-1}` an agent of strategy level `l` reasons
/// over. Level 0 has no models: interactive states are physical states.
#[derive(Debug, Clone)]
pub struct ModelSpace {
    level: usize,
    atoms: Vec<Arc<Model>>,
}

impl ModelSpace {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Atoms in canonical order.
    pub fn atoms(&self) -> &[Arc<Model>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Intentional atoms of the highest level present (`level - 1`).
    pub fn top_types(&self) -> Vec<Arc<Model>> {
        self.atoms
            .iter()
            .filter(|m| m.is_intentional() && m.level() + 1 == self.level)
            .cloned()
            .collect()
    }

    /// Uniform density over the top-level types, discretized with
    /// trapezoid weights along the grid (half weight at the two ends) for
    /// two-state problems and equal weights otherwise.
    pub fn density_prior(&self) -> Result<ModelPrior> {
        let types = self.top_types();
        if types.is_empty() {
            return Err(Error::domain("model space has no intentional types"));
        }
        Ok(ModelPrior(density_weights(types)))
    }

    /// Prior concentrated on the no-information model with empty history.
    pub fn no_information_prior(&self) -> Result<ModelPrior> {
        self.atoms
            .iter()
            .find(|m| m.as_subintentional().is_some_and(|s| s.history.is_empty()))
            .map(|m| ModelPrior::point(m.clone()))
            .ok_or_else(|| Error::domain("model space has no no-information model"))
    }
}

fn density_weights(types: Vec<Arc<Model>>) -> Vec<(Arc<Model>, f64)> {
    let n = types.len();
    let two_state = types[0].frame().num_states() == 2;
    let raw: Vec<f64> = (0..n)
        .map(|k| if two_state && n > 1 && (k == 0 || k == n - 1) { 0.5 } else { 1.0 })
        .collect();
    let total: f64 = raw.iter().sum();
    types.into_iter().zip(raw).map(|(m, w)| (m, w / total)).collect()
}

/// Points of the simplex lattice with `points` values per coordinate, in
/// ascending order of the first coordinate.
fn simplex_grid(dim: usize, points: usize) -> Vec<Belief> {
    let steps = points - 1;
    let mut out = Vec::new();
    let mut counts = vec![0usize; dim];
    fn rec(i: usize, left: usize, steps: usize, counts: &mut Vec<usize>, out: &mut Vec<Belief>) {
        let dim = counts.len();
        if i + 1 == dim {
            counts[i] = left;
            let w = counts.iter().map(|&c| c as f64 / steps as f64).collect();
            out.push(Belief::new(w).expect("lattice point is a distribution"));
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, steps, counts, out);
        }
    }
    rec(0, steps, steps, &mut counts, &mut out);
    out
}

/// Builds the model space used by an agent of strategy level `level` whose
/// partner has frame `modeled`; `modeler` is the frame of the reasoning
/// agent, needed from level 2 on where the partner's types model it in turn.
///
/// Level 1 holds level-0 types on a `grid_points` lattice over the physical
/// simplex; level `l` adds level-`(l-1)` types whose beliefs put the lattice
/// on physical states and the discretized uniform density on the level
/// `l-1` space of the modeler.
pub fn build_level_hierarchy(
    modeled: &Arc<Frame>,
    modeler: &Arc<Frame>,
    grid_points: usize,
    level: usize,
    include_subintentional: bool,
) -> Result<ModelSpace> {
    if level == 0 {
        return Ok(ModelSpace { level, atoms: Vec::new() });
    }
    if grid_points < 2 {
        return Err(Error::domain(format!("grid needs at least 2 points, got {grid_points}")));
    }
    if modeled.states() != modeler.states()
        || modeled.actions() != modeler.other_actions()
        || modeled.other_actions() != modeler.actions()
    {
        return Err(Error::validation("frames disagree on states or actions"));
    }
    let mut atoms: Vec<Arc<Model>> = Vec::new();
    if include_subintentional {
        atoms.push(Arc::new(Model::no_information(modeled.clone(), Vec::new())?));
    }
    let lattice = simplex_grid(modeled.num_states(), grid_points);
    if level == 1 {
        for b in lattice {
            atoms.push(Arc::new(Model::level0(modeled.clone(), b)?));
        }
    } else {
        let lower = build_level_hierarchy(modeled, modeler, grid_points, level - 1, include_subintentional)?;
        let other = build_level_hierarchy(modeler, modeled, grid_points, level - 1, include_subintentional)?;
        let prior = other.density_prior()?;
        for b in lattice {
            let ib = InteractiveBelief::product(&b, &prior)?;
            atoms.push(Arc::new(Model::nested(modeled.clone(), ib, level - 1)?));
        }
        atoms.extend(lower.atoms.iter().cloned());
    }
    atoms.sort_by(|a, b| a.key().cmp(b.key()));
    atoms.dedup_by(|a, b| a.key() == b.key());
    Ok(ModelSpace { level, atoms })
}

/// Convenience: the prior atoms of an interactive belief built from a
/// physical belief and a model prior.
pub(crate) fn product_atoms(physical: &Belief, prior: &ModelPrior) -> Vec<Atom> {
    let mut atoms = Vec::with_capacity(physical.len() * prior.0.len());
    for (s, &ps) in physical.weights().iter().enumerate() {
        for (m, pm) in &prior.0 {
            atoms.push(Atom {
                state: s,
                model: m.clone(),
                weight: ps * pm,
            });
        }
    }
    atoms
}
