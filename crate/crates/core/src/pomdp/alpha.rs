use super::{Belief, OptimalityCriterion, PomdpModel};
use crate::{Error, Result, TIE_TOLERANCE};

/// One linear facet of a piecewise linear convex value function.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    /// One value per state, in declaration order.
    pub values: Vec<f64>,
    /// The first action of the conditional plan this facet represents.
    pub action: usize,
}

impl AlphaVector {
    pub fn new(values: Vec<f64>, action: usize) -> Self {
        AlphaVector { values, action }
    }

    pub fn dot(&self, b: &Belief) -> f64 {
        self.values.iter().zip(b.weights()).map(|(v, w)| v * w).sum()
    }
}

/// A finite set of facets; its value function is the pointwise maximum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlphaSet(pub Vec<AlphaVector>);

impl AlphaSet {
    /// The single all-zero facet, the horizon-0 value function.
    pub fn zero(num_states: usize) -> Self {
        AlphaSet(vec![AlphaVector::new(vec![0.0; num_states], 0)])
    }

    /// A single constant facet.
    pub fn constant(num_states: usize, value: f64) -> Self {
        AlphaSet(vec![AlphaVector::new(vec![value; num_states], 0)])
    }

    pub fn vectors(&self) -> &[AlphaVector] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn value(&self, b: &Belief) -> f64 {
        value(b, &self.0)
    }

    pub fn opt_actions(&self, b: &Belief) -> Vec<usize> {
        opt_actions(b, &self.0)
    }
}

/// `max_α ⟨α, b⟩`.
pub fn value(b: &Belief, alphas: &[AlphaVector]) -> f64 {
    alphas
        .iter()
        .map(|a| a.dot(b))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Actions of every facet within [`TIE_TOLERANCE`] of the maximum, sorted and
/// deduplicated.
pub fn opt_actions(b: &Belief, alphas: &[AlphaVector]) -> Vec<usize> {
    let best = value(b, alphas);
    let mut acts: Vec<usize> = alphas
        .iter()
        .filter(|a| a.dot(b) >= best - TIE_TOLERANCE)
        .map(|a| a.action)
        .collect();
    acts.sort_unstable();
    acts.dedup();
    acts
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Removes exact duplicates and pointwise-dominated vectors.
///
/// The first of a group of identical vectors is kept. Pruning never changes
/// the maximum over the belief simplex.
pub fn prune_dominated(alphas: &[AlphaVector]) -> Vec<AlphaVector> {
    let mut kept: Vec<AlphaVector> = Vec::with_capacity(alphas.len());
    for (i, a) in alphas.iter().enumerate() {
        let dominated = alphas.iter().enumerate().any(|(j, b)| {
            j != i && dominates(&b.values, &a.values) && (b.values != a.values || j < i)
        });
        if !dominated {
            kept.push(a.clone());
        }
    }
    kept
}

/// Exact upper envelope of two-state facets over the belief segment.
///
/// Each vector is the line `v0 + (v1 - v0) x` for `x` the weight on the
/// second state. Lines that are maximal only on a set of measure zero in
/// `[0, 1]` are dropped; the max function is unchanged.
fn envelope_two_state(mut lines: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    if lines.len() <= 1 {
        return lines;
    }
    let slope = |l: &[f64]| l[1] - l[0];
    lines.sort_by(|a, b| {
        slope(a)
            .total_cmp(&slope(b))
            .then(a[0].total_cmp(&b[0]))
    });
    // Equal slopes: keep the highest intercept, which sorts last.
    let mut distinct: Vec<Vec<f64>> = Vec::with_capacity(lines.len());
    for l in lines {
        if let Some(last) = distinct.last() {
            if slope(last) == slope(&l) {
                distinct.pop();
            }
        }
        distinct.push(l);
    }
    let mut hull: Vec<Vec<f64>> = Vec::with_capacity(distinct.len());
    for l in distinct {
        while hull.len() >= 2 {
            let (l1, l2) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
            let (m1, c1) = (slope(l1), l1[0]);
            let (m2, c2) = (slope(l2), l2[0]);
            let (m3, c3) = (slope(&l), l[0]);
            // l2 is never strictly above max(l1, l3).
            if (c3 - c1) * (m2 - m1) >= (c2 - c1) * (m3 - m1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(l);
    }
    let crossing = |a: &[f64], b: &[f64]| (a[0] - b[0]) / (slope(b) - slope(a));
    let n = hull.len();
    let mut breaks = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        breaks.push(crossing(&hull[k], &hull[k + 1]));
    }
    hull.into_iter()
        .enumerate()
        .filter(|(k, _)| {
            let lo = if *k == 0 { f64::NEG_INFINITY } else { breaks[k - 1] };
            let hi = if *k + 1 == n { f64::INFINITY } else { breaks[*k] };
            hi.min(1.0) - lo.max(0.0) > 1e-12
        })
        .map(|(_, l)| l)
        .collect()
}

/// Prunes a set of vectors that all belong to one action.
fn prune_group(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    if vectors.first().map(|v| v.len()) == Some(2) {
        envelope_two_state(vectors)
    } else {
        let tagged: Vec<AlphaVector> = vectors.into_iter().map(|v| AlphaVector::new(v, 0)).collect();
        prune_dominated(&tagged).into_iter().map(|a| a.values).collect()
    }
}

/// One exact dynamic-programming step `H`.
///
/// Facets are pruned per action, so every action keeps its exact Q-function;
/// across actions only facets beaten by more than the tie tolerance at every
/// state are removed. This keeps [`opt_actions`] exact on the result.
pub fn backup(model: &PomdpModel, alphas: &[AlphaVector], discount: f64) -> Vec<AlphaVector> {
    assert!(!alphas.is_empty(), "backup needs at least one facet");
    let (ns, na, no) = (model.num_states(), model.num_actions(), model.num_observations());
    let mut out = Vec::new();
    for a in 0..na {
        let mut acc: Vec<Vec<f64>> = vec![vec![0.0; ns]];
        for o in 0..no {
            let projected: Vec<Vec<f64>> = alphas
                .iter()
                .map(|alpha| {
                    (0..ns)
                        .map(|s| {
                            (0..ns)
                                .map(|s2| model.t(s, a, s2) * model.o(s2, a, o) * alpha.values[s2])
                                .sum()
                        })
                        .collect()
                })
                .collect();
            let projected = prune_group(projected);
            let mut sums = Vec::with_capacity(acc.len() * projected.len());
            for x in &acc {
                for y in &projected {
                    sums.push(x.iter().zip(y).map(|(p, q)| p + q).collect());
                }
            }
            acc = prune_group(sums);
        }
        out.extend(acc.into_iter().map(|v| {
            let values = (0..ns).map(|s| model.r(s, a) + discount * v[s]).collect();
            AlphaVector::new(values, a)
        }));
    }
    let keep: Vec<bool> = out
        .iter()
        .map(|x| {
            !out.iter().any(|y| {
                x.values
                    .iter()
                    .zip(&y.values)
                    .all(|(p, q)| q - p > TIE_TOLERANCE)
            })
        })
        .collect();
    out.into_iter()
        .zip(keep)
        .filter_map(|(v, k)| k.then_some(v))
        .collect()
}

/// Number of discounted backups that bring the value error below `epsilon`.
pub fn iterations_for_error(rmax: f64, epsilon: f64, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::domain(format!("discount {gamma} outside (0,1)")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon {epsilon} must be positive")));
    }
    if !(rmax >= 0.0) {
        return Err(Error::domain(format!("reward bound {rmax} must be non-negative")));
    }
    let ratio = rmax / (epsilon * (1.0 - gamma));
    if ratio <= 1.0 {
        return Ok(0);
    }
    let n = ratio.ln() / (1.0 / gamma).ln();
    let nearest = n.round();
    // Exact powers of 1/γ must not be pushed up by rounding noise in the logs.
    let n = if (n - nearest).abs() < 1e-9 { nearest } else { n.ceil() };
    Ok(n as usize)
}

/// Result of value iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    /// Alpha sets for horizons `1..=T`; index `k` holds horizon `k + 1`.
    FiniteHorizon(Vec<AlphaSet>),
    /// Alpha set after `iterations` discounted backups.
    Discounted { alphas: AlphaSet, iterations: usize },
}

impl Solution {
    /// The alpha set for the longest horizon computed.
    pub fn final_alphas(&self) -> &AlphaSet {
        match self {
            Solution::FiniteHorizon(sets) => sets.last().expect("positive horizon"),
            Solution::Discounted { alphas, .. } => alphas,
        }
    }
}

/// Value iteration from the zero value function.
pub fn solve(model: &PomdpModel, criterion: OptimalityCriterion) -> Result<Solution> {
    solve_from(model, criterion, AlphaSet::zero(model.num_states()))
}

/// Value iteration from an arbitrary initial value function.
pub fn solve_from(
    model: &PomdpModel,
    criterion: OptimalityCriterion,
    init: AlphaSet,
) -> Result<Solution> {
    criterion.validate()?;
    if init.is_empty() || init.vectors().iter().any(|v| v.values.len() != model.num_states()) {
        return Err(Error::validation("initial alpha set does not match the state set"));
    }
    match criterion {
        OptimalityCriterion::FiniteHorizon(t) => {
            let mut sets = Vec::with_capacity(t);
            let mut current = init.0;
            for _ in 0..t {
                current = backup(model, &current, 1.0);
                sets.push(AlphaSet(current.clone()));
            }
            Ok(Solution::FiniteHorizon(sets))
        }
        OptimalityCriterion::DiscountedInfinite { gamma, epsilon } => {
            let n = iterations_for_error(model.max_abs_reward(), epsilon, gamma)?;
            let mut current = init.0;
            for _ in 0..n {
                current = backup(model, &current, gamma);
            }
            Ok(Solution::Discounted {
                alphas: AlphaSet(current),
                iterations: n,
            })
        }
    }
}
