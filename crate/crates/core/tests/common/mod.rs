//! Reference implementations written directly from the model tables,
//! sharing no code with the library's solvers.

#![allow(dead_code)]

use std::collections::HashMap;

use ipomdp::model::Frame;
use ipomdp::pomdp::PomdpModel;

pub const TIE: f64 = 1e-9;

/// Dense single-agent tables.
#[derive(Clone, Debug)]
pub struct Tables {
    pub ns: usize,
    pub na: usize,
    pub no: usize,
    /// `t[s][a][s2]`
    pub t: Vec<Vec<Vec<f64>>>,
    /// `o[s2][a][o]`
    pub o: Vec<Vec<Vec<f64>>>,
    /// `r[s][a]`
    pub r: Vec<Vec<f64>>,
}

pub fn tables(m: &PomdpModel) -> Tables {
    let (ns, na, no) = (m.num_states(), m.num_actions(), m.num_observations());
    Tables {
        ns,
        na,
        no,
        t: (0..ns)
            .map(|s| (0..na).map(|a| (0..ns).map(|s2| m.t(s, a, s2)).collect()).collect())
            .collect(),
        o: (0..ns)
            .map(|s2| (0..na).map(|a| (0..no).map(|o| m.o(s2, a, o)).collect()).collect())
            .collect(),
        r: (0..ns).map(|s| (0..na).map(|a| m.r(s, a)).collect()).collect(),
    }
}

/// Expectation of the frame's tables over a fixed distribution of the
/// other agent's actions.
pub fn fold(f: &Frame, dist: &[f64]) -> Tables {
    let (ns, na, nb, no) = (f.num_states(), f.num_actions(), f.num_other_actions(), f.num_observations());
    let mix = |g: &dyn Fn(usize) -> f64| (0..nb).map(|b| dist[b] * g(b)).sum::<f64>();
    Tables {
        ns,
        na,
        no,
        t: (0..ns)
            .map(|s| (0..na).map(|a| (0..ns).map(|s2| mix(&|b| f.t(s, a, b, s2))).collect()).collect())
            .collect(),
        o: (0..ns)
            .map(|s2| (0..na).map(|a| (0..no).map(|o| mix(&|b| f.o(s2, a, b, o))).collect()).collect())
            .collect(),
        r: (0..ns).map(|s| (0..na).map(|a| mix(&|b| f.r(s, a, b))).collect()).collect(),
    }
}

/// `(Pr(o | b, a), posterior)`, or `None` if `o` is impossible.
pub fn bayes(t: &Tables, b: &[f64], a: usize, o: usize) -> Option<(f64, Vec<f64>)> {
    let mut post = vec![0.0; t.ns];
    for s2 in 0..t.ns {
        let pred: f64 = (0..t.ns).map(|s| b[s] * t.t[s][a][s2]).sum();
        post[s2] = pred * t.o[s2][a][o];
    }
    let z: f64 = post.iter().sum();
    if z <= 0.0 {
        return None;
    }
    post.iter_mut().for_each(|x| *x /= z);
    Some((z, post))
}

/// Q-values by full enumeration of action/observation sequences.
pub fn brute_q(t: &Tables, b: &[f64], h: usize, gamma: f64) -> Vec<f64> {
    (0..t.na)
        .map(|a| {
            let mut q: f64 = (0..t.ns).map(|s| b[s] * t.r[s][a]).sum();
            if h > 1 {
                for o in 0..t.no {
                    if let Some((p, post)) = bayes(t, b, a, o) {
                        q += gamma * p * brute_value(t, &post, h - 1, gamma);
                    }
                }
            }
            q
        })
        .collect()
}

pub fn brute_value(t: &Tables, b: &[f64], h: usize, gamma: f64) -> f64 {
    if h == 0 {
        return 0.0;
    }
    brute_q(t, b, h, gamma).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub fn ties(q: &[f64]) -> Vec<usize> {
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..q.len()).filter(|&a| q[a] >= best - TIE).collect()
}

pub fn brute_opt(t: &Tables, b: &[f64], h: usize, gamma: f64) -> Vec<usize> {
    if h == 0 {
        return (0..t.na).collect();
    }
    ties(&brute_q(t, b, h, gamma))
}

/// Minimum and maximum of `u - v` on the two-state simplex, where each
/// function is the upper envelope of lines `(value at first state, value at
/// second state)`. The difference is linear between kinks, so checking the
/// endpoints and all pairwise crossings is exact.
pub fn diff_range_two_state(u: &[(f64, f64)], v: &[(f64, f64)]) -> (f64, f64) {
    let eval = |set: &[(f64, f64)], p: f64| {
        set.iter()
            .map(|&(a, b)| a * p + b * (1.0 - p))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut points = vec![0.0, 1.0];
    for set in [u, v] {
        for (k, &(a1, b1)) in set.iter().enumerate() {
            for &(a2, b2) in &set[k + 1..] {
                let denom = (a1 - b1) - (a2 - b2);
                if denom.abs() > 1e-15 {
                    let p = (b2 - b1) / denom;
                    if (0.0..=1.0).contains(&p) {
                        points.push(p);
                    }
                }
            }
        }
    }
    points.into_iter().map(|p| eval(u, p) - eval(v, p)).fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), d| (lo.min(d), hi.max(d)),
    )
}

pub fn sup_diff_two_state(u: &[(f64, f64)], v: &[(f64, f64)]) -> f64 {
    let (lo, hi) = diff_range_two_state(u, v);
    lo.abs().max(hi.abs())
}

/// One atom of a level-1 belief over (state, level-0 belief of the other
/// agent).
#[derive(Clone, Debug)]
pub struct IAtom {
    pub s: usize,
    pub bj: Vec<f64>,
    pub w: f64,
}

/// Level-1 reference: the reasoning agent's frame and the other agent's
/// folded level-0 tables, with a memo of the other agent's policy.
pub struct Level1 {
    pub fi: std::sync::Arc<Frame>,
    pub fj: std::sync::Arc<Frame>,
    pub fold_j: Tables,
    memo: std::cell::RefCell<HashMap<(Vec<i64>, usize), Vec<f64>>>,
}

fn key(b: &[f64]) -> Vec<i64> {
    b.iter().map(|x| (x * 1e12).round() as i64).collect()
}

impl Level1 {
    pub fn new(fi: std::sync::Arc<Frame>, fj: std::sync::Arc<Frame>) -> Self {
        let fold_j = fold(&fj, fj.noise());
        Level1 {
            fi,
            fj,
            fold_j,
            memo: Default::default(),
        }
    }

    /// Uniform over the other agent's optimal actions with `steps` to go.
    pub fn j_dist(&self, bj: &[f64], steps: usize) -> Vec<f64> {
        let k = (key(bj), steps);
        if let Some(d) = self.memo.borrow().get(&k) {
            return d.clone();
        }
        let opt = brute_opt(&self.fold_j, bj, steps, 1.0);
        let mut d = vec![0.0; self.fold_j.na];
        for &a in &opt {
            d[a] = 1.0 / opt.len() as f64;
        }
        self.memo.borrow_mut().insert(k, d.clone());
        d
    }

    /// Unnormalized joint prediction and correction, summed over the other
    /// agent's action and observation. Returns the likelihood and the
    /// merged posterior.
    pub fn update(&self, atoms: &[IAtom], ai: usize, oi: usize, steps_j: usize) -> Option<(f64, Vec<IAtom>)> {
        let (fi, fj) = (&self.fi, &self.fj);
        let ns = fi.num_states();
        let mut out: Vec<IAtom> = Vec::new();
        for at in atoms {
            let d = self.j_dist(&at.bj, steps_j);
            for (aj, &pa) in d.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for oj in 0..fj.num_observations() {
                    let next_bj = bayes(&self.fold_j, &at.bj, aj, oj).map(|x| x.1);
                    for s2 in 0..ns {
                        let w = at.w * pa * fi.t(at.s, ai, aj, s2) * fj.o(s2, aj, ai, oj) * fi.o(s2, ai, aj, oi);
                        if w > 0.0 {
                            let bj = next_bj.clone().expect("reachable observation");
                            match out.iter_mut().find(|x| x.s == s2 && key(&x.bj) == key(&bj)) {
                                Some(x) => x.w += w,
                                None => out.push(IAtom { s: s2, bj, w }),
                            }
                        }
                    }
                }
            }
        }
        let z: f64 = out.iter().map(|a| a.w).sum();
        if z <= 0.0 {
            return None;
        }
        out.iter_mut().for_each(|a| a.w /= z);
        Some((z, out))
    }

    pub fn expected_reward(&self, atoms: &[IAtom], ai: usize, steps_j: usize) -> f64 {
        atoms
            .iter()
            .map(|at| {
                let d = self.j_dist(&at.bj, steps_j);
                at.w * d.iter().enumerate().map(|(aj, p)| p * self.fi.r(at.s, ai, aj)).sum::<f64>()
            })
            .sum()
    }

    pub fn q(&self, atoms: &[IAtom], h: usize) -> Vec<f64> {
        (0..self.fi.num_actions())
            .map(|ai| {
                let mut q = self.expected_reward(atoms, ai, h);
                if h > 1 {
                    for oi in 0..self.fi.num_observations() {
                        if let Some((p, post)) = self.update(atoms, ai, oi, h) {
                            q += p * self.value(&post, h - 1);
                        }
                    }
                }
                q
            })
            .collect()
    }

    pub fn value(&self, atoms: &[IAtom], h: usize) -> f64 {
        if h == 0 {
            return 0.0;
        }
        self.q(atoms, h).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Level-1 belief `P(first state) = p` times a prior over the other agent's
/// two-state beliefs.
pub fn product(p: f64, prior: &[(f64, f64)]) -> Vec<IAtom> {
    let mut out = Vec::new();
    for (s, ps) in [(0, p), (1, 1.0 - p)] {
        for &(bj, w) in prior {
            if ps * w > 0.0 {
                out.push(IAtom {
                    s,
                    bj: vec![bj, 1.0 - bj],
                    w: ps * w,
                });
            }
        }
    }
    out
}

/// Uniform grid prior with trapezoid weights.
pub fn grid_prior(n: usize) -> Vec<(f64, f64)> {
    let total = (n - 1) as f64;
    (0..n)
        .map(|k| {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            (k as f64 / (n - 1) as f64, w / total)
        })
        .collect()
}
