//! Tiger game instances: single agent, single agent with door-opening noise,
//! and the two-agent version with door creaks.

use std::sync::Arc;

use crate::model::{Frame, FrameSpec};
use crate::pomdp::{OptimalityCriterion, PomdpModel};
use crate::{Error, Result};

pub const STATES: [&str; 2] = ["TL", "TR"];
pub const ACTIONS: [&str; 3] = ["OL", "L", "OR"];
pub const GROWLS: [&str; 2] = ["GL", "GR"];
pub const CREAKS: [&str; 3] = ["CL", "CR", "S"];

const OL: usize = 0;
const L: usize = 1;
const OR: usize = 2;

/// Payoffs and sensor accuracies of the tiger games.
#[derive(Debug, Clone, PartialEq)]
pub struct TigerParams {
    pub prize: f64,
    pub penalty: f64,
    pub listen_cost: f64,
    pub growl_accuracy: f64,
    pub creak_accuracy: f64,
    /// Probability that each door is opened by noise on a turn.
    pub noise_open_prob: f64,
}

impl Default for TigerParams {
    fn default() -> Self {
        TigerParams {
            prize: 10.0,
            penalty: -100.0,
            listen_cost: -1.0,
            growl_accuracy: 0.85,
            creak_accuracy: 0.9,
            noise_open_prob: 0.1,
        }
    }
}

impl TigerParams {
    pub fn validate(&self) -> Result<()> {
        for (name, acc) in [
            ("growl_accuracy", self.growl_accuracy),
            ("creak_accuracy", self.creak_accuracy),
        ] {
            if !(acc > 0.5 && acc <= 1.0) {
                return Err(Error::validation(format!("{name} {acc} outside (0.5, 1]")));
            }
        }
        if !(self.noise_open_prob >= 0.0 && 2.0 * self.noise_open_prob <= 1.0) {
            return Err(Error::validation(format!(
                "noise_open_prob {} must lie in [0, 0.5]",
                self.noise_open_prob
            )));
        }
        if ![self.prize, self.penalty, self.listen_cost]
            .iter()
            .all(|r| r.is_finite())
        {
            return Err(Error::validation("payoffs must be finite"));
        }
        Ok(())
    }

    /// Noise distribution over the other agent's `[OL, L, OR]`.
    pub fn noise(&self) -> Vec<f64> {
        let q = self.noise_open_prob;
        vec![q, 1.0 - 2.0 * q, q]
    }

    fn payoff(&self, s: usize, a: usize) -> f64 {
        match (a, s) {
            (L, _) => self.listen_cost,
            (OR, 0) | (OL, 1) => self.prize,
            _ => self.penalty,
        }
    }

    fn growl(&self, s2: usize, g: usize) -> f64 {
        if s2 == g {
            self.growl_accuracy
        } else {
            1.0 - self.growl_accuracy
        }
    }

    /// Creak likelihood given the other agent's action.
    fn creak(&self, other: usize, c: usize) -> f64 {
        let expected = match other {
            OL => 0,
            OR => 1,
            _ => 2,
        };
        if c == expected {
            self.creak_accuracy
        } else {
            (1.0 - self.creak_accuracy) / 2.0
        }
    }
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Joint growl/creak observation labels in table order.
pub fn joint_observations() -> Vec<String> {
    GROWLS
        .iter()
        .flat_map(|g| CREAKS.iter().map(move |c| format!("{g},{c}")))
        .collect()
}

fn single_tables(p: &TigerParams) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut t = Vec::with_capacity(12);
    for s in 0..2 {
        for a in 0..3 {
            for s2 in 0..2 {
                t.push(if a == L {
                    if s == s2 { 1.0 } else { 0.0 }
                } else {
                    0.5
                });
            }
        }
    }
    let mut o = Vec::with_capacity(12);
    for s2 in 0..2 {
        for a in 0..3 {
            for g in 0..2 {
                o.push(if a == L { p.growl(s2, g) } else { 0.5 });
            }
        }
    }
    let mut r = Vec::with_capacity(6);
    for s in 0..2 {
        for a in 0..3 {
            r.push(p.payoff(s, a));
        }
    }
    (t, o, r)
}

/// The classic single-agent tiger game.
pub fn single_tiger(p: &TigerParams) -> Result<PomdpModel> {
    p.validate()?;
    let (t, o, r) = single_tables(p);
    PomdpModel::from_flat(labels(&STATES), labels(&ACTIONS), labels(&GROWLS), t, o, r, 1.0)
}

/// Single-agent tiger where each door also opens by itself with
/// `noise_open_prob` per turn, resetting the tiger.
pub fn noisy_tiger(p: &TigerParams) -> Result<PomdpModel> {
    p.validate()?;
    let (t, o, r) = single_tables(p);
    let reset = 2.0 * p.noise_open_prob;
    let t = t.into_iter().map(|x| (1.0 - reset) * x + reset * 0.5).collect();
    PomdpModel::from_flat(labels(&STATES), labels(&ACTIONS), labels(&GROWLS), t, o, r, 1.0)
}

/// Frame of one agent in the two-agent tiger game, tables indexed by
/// (own action, other action).
pub fn multiagent_frame(p: &TigerParams, name: &str) -> Result<Frame> {
    p.validate()?;
    let obs = joint_observations();
    let mut transition = Vec::with_capacity(36);
    for s in 0..2 {
        for a in 0..3 {
            for b in 0..3 {
                for s2 in 0..2 {
                    transition.push(if a == L && b == L {
                        if s == s2 { 1.0 } else { 0.0 }
                    } else {
                        0.5
                    });
                }
            }
        }
    }
    let mut observation = Vec::with_capacity(108);
    for s2 in 0..2 {
        for a in 0..3 {
            for b in 0..3 {
                for g in 0..2 {
                    for c in 0..3 {
                        observation.push(if a == L {
                            p.growl(s2, g) * p.creak(b, c)
                        } else {
                            1.0 / 6.0
                        });
                    }
                }
            }
        }
    }
    let mut reward = Vec::with_capacity(18);
    for s in 0..2 {
        for a in 0..3 {
            for _b in 0..3 {
                reward.push(p.payoff(s, a));
            }
        }
    }
    Frame::new(FrameSpec {
        name: name.to_string(),
        states: labels(&STATES),
        actions: labels(&ACTIONS),
        other_actions: labels(&ACTIONS),
        observations: obs,
        transition,
        observation,
        reward,
        criterion: OptimalityCriterion::FiniteHorizon(3),
        noise: p.noise(),
    })
}

/// Frames of agents `i` and `j` in the two-agent tiger game.
pub fn multiagent_tiger(p: &TigerParams) -> Result<(Arc<Frame>, Arc<Frame>)> {
    Ok((
        Arc::new(multiagent_frame(p, "i")?),
        Arc::new(multiagent_frame(p, "j")?),
    ))
}
