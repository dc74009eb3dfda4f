//! Policy graphs: the optimal conditional plans along a belief slice, with
//! identical sub-plans merged.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::model::{ModelPrior, TypeBelief};
use crate::pomdp::{Belief, PomdpModel};
use crate::{Error, Result};

use super::search::{self, FlatProblem, InteractiveProblem, PlanTree};
use super::{IpomdpProblem, Solver};

const BOUNDARY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyNode {
    pub action: usize,
    /// Decisions left when this node is entered.
    pub steps: usize,
    /// Successor node per observation; empty at the last step.
    pub children: Vec<usize>,
}

/// Range of `P(first state)` whose optimal plan starts at `node`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryInterval {
    pub lo: f64,
    pub hi: f64,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGraph {
    pub nodes: Vec<PolicyNode>,
    pub entries: Vec<EntryInterval>,
    pub action_labels: Vec<String>,
    pub observation_labels: Vec<String>,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<(usize, usize, Vec<usize>), usize>,
    nodes: Vec<PolicyNode>,
}

impl Interner {
    fn intern(&mut self, tree: &PlanTree, steps: usize) -> usize {
        let children: Vec<usize> = tree.children.iter().map(|c| self.intern(c, steps - 1)).collect();
        let key = (tree.action, steps, children);
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(PolicyNode {
            action: key.0,
            steps,
            children: key.2.clone(),
        });
        self.ids.insert(key, id);
        id
    }
}

fn plan_at(solver: &Solver, problem: &IpomdpProblem, prior: &ModelPrior, p: f64, horizon: usize) -> Result<PlanTree> {
    let discount = problem.criterion().continuation_discount();
    let tree = match problem.slice_belief(prior, p)? {
        TypeBelief::Flat(flat) => {
            let fp = FlatProblem {
                model: problem.level0_model(),
                discount,
            };
            search::plan(&fp, &flat, horizon)?
        }
        TypeBelief::Interactive(ib) => {
            let ip = InteractiveProblem {
                solver,
                frame: problem.frame(),
                discount,
            };
            search::plan(&ip, ib.as_ref(), horizon)?
        }
    };
    Ok(tree.1)
}

/// Extracts the policy graph of `problem` at `horizon` along the slice
/// `P(first state) = p`, sampling `grid` points and refining each change of
/// plan by bisection.
pub fn extract_policy_graph(
    solver: &Solver,
    problem: &IpomdpProblem,
    prior: &ModelPrior,
    horizon: usize,
    grid: usize,
) -> Result<PolicyGraph> {
    build(
        |p| plan_at(solver, problem, prior, p, horizon),
        horizon,
        grid,
        problem.frame().actions(),
        problem.frame().observations(),
    )
}

/// Policy graph of a single-agent POMDP over two states.
pub fn extract_flat_policy_graph(model: &PomdpModel, discount: f64, horizon: usize, grid: usize) -> Result<PolicyGraph> {
    if model.num_states() != 2 {
        return Err(Error::domain("belief slices need exactly two physical states"));
    }
    let fp = FlatProblem { model, discount };
    build(
        |p| Ok(search::plan(&fp, &Belief::two_state(p)?, horizon)?.1),
        horizon,
        grid,
        model.actions(),
        model.observations(),
    )
}

fn build(
    plan_at: impl Fn(f64) -> Result<PlanTree> + Sync,
    horizon: usize,
    grid: usize,
    actions: &[String],
    observations: &[String],
) -> Result<PolicyGraph> {
    if horizon == 0 {
        return Err(Error::domain("policy graphs need a horizon of at least 1"));
    }
    if grid < 2 {
        return Err(Error::domain("policy graphs need at least 2 sample points"));
    }
    let xs: Vec<f64> = (0..grid).map(|k| k as f64 / (grid - 1) as f64).collect();
    let plans: Vec<PlanTree> = xs
        .par_iter()
        .map(|&p| plan_at(p))
        .collect::<Result<_>>()?;

    let mut interner = Interner::default();
    let roots: Vec<usize> = plans.iter().map(|t| interner.intern(t, horizon)).collect();

    let mut entries = Vec::new();
    let mut lo = 0.0;
    for k in 1..grid {
        if roots[k] == roots[k - 1] {
            continue;
        }
        let (mut a, mut b) = (xs[k - 1], xs[k]);
        while b - a > BOUNDARY_TOLERANCE {
            let mid = 0.5 * (a + b);
            let root = interner.intern(&plan_at(mid)?, horizon);
            if root == roots[k - 1] {
                a = mid;
            } else {
                b = mid;
            }
        }
        let boundary = 0.5 * (a + b);
        entries.push(EntryInterval {
            lo,
            hi: boundary,
            node: roots[k - 1],
        });
        lo = boundary;
    }
    entries.push(EntryInterval {
        lo,
        hi: 1.0,
        node: roots[grid - 1],
    });

    Ok(PolicyGraph {
        nodes: interner.nodes,
        entries,
        action_labels: actions.to_vec(),
        observation_labels: observations.to_vec(),
    })
}

impl PolicyGraph {
    /// Nodes reachable from some entry interval.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = self.entries.iter().map(|e| e.node).collect();
        while let Some(n) = stack.pop() {
            if !std::mem::replace(&mut seen[n], true) {
                stack.extend(self.nodes[n].children.iter().copied());
            }
        }
        (0..self.nodes.len()).filter(|&n| seen[n]).collect()
    }

    /// Graphviz rendering. Entry intervals appear as comments and as labels
    /// of the entry nodes; edges to the same successor are merged.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph policy {\n  rankdir=LR;\n");
        for e in &self.entries {
            let _ = writeln!(out, "  // entry [{:.6}, {:.6}] -> n{}", e.lo, e.hi, e.node);
        }
        for n in self.reachable() {
            let node = &self.nodes[n];
            let ranges: Vec<String> = self
                .entries
                .iter()
                .filter(|e| e.node == n)
                .map(|e| format!("[{:.6}, {:.6}]", e.lo, e.hi))
                .collect();
            let mut label = format!("{} (t={})", self.action_labels[node.action], node.steps);
            if !ranges.is_empty() {
                label.push_str("\\n");
                label.push_str(&ranges.join(" "));
            }
            let _ = writeln!(out, "  n{n} [label=\"{label}\"];");
        }
        for n in self.reachable() {
            let mut grouped: Vec<(usize, Vec<&str>)> = Vec::new();
            for (o, &c) in self.nodes[n].children.iter().enumerate() {
                match grouped.iter_mut().find(|(t, _)| *t == c) {
                    Some((_, labels)) => labels.push(&self.observation_labels[o]),
                    None => grouped.push((c, vec![&self.observation_labels[o]])),
                }
            }
            for (c, labels) in grouped {
                let _ = writeln!(out, "  n{n} -> n{c} [label=\"{}\"];", labels.join(" | "));
            }
        }
        out.push_str("}\n");
        out
    }
}
