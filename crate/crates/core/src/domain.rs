//! Plain-text domain files.
//!
//! A file is a sequence of whitespace-separated directives, one per line;
//! `#` starts a comment. Single-agent files:
//!
//! ```text
//! states TL TR
//! actions OL L OR
//! observations GL GR
//! criterion finite 3
//! transition * OL * 0.5
//! transition TL L TL 1
//! observation TL L GL 0.85
//! reward TL OR 10
//! ```
//!
//! Two-agent files declare `agents i j` and per-agent alphabets
//! (`actions i ...`, `observations i ...`, `noise i ...`). Rows then carry
//! the joint action in `(first agent, second agent)` order:
//! `transition s a_i a_j s' p`, `observation <agent> s' a_i a_j o p`,
//! `reward <agent> s a_i a_j r`. The first agent is the reasoning agent.
//!
//! Any key field may be `*`. For each cell the most specific matching row
//! (fewest wildcards) applies; two rows that match at equal specificity with
//! different values, or the same pattern given twice, are errors. Values may
//! be written as products and quotients such as `0.85*0.9` or `1/6`.
//! `discount g` sets the discount (default 1); `criterion discounted eps`
//! uses it as the infinite-horizon factor.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::model::{Frame, FrameSpec};
use crate::pomdp::{OptimalityCriterion, PomdpModel};
use crate::{Error, Result};

/// A loaded domain.
#[derive(Debug, Clone)]
pub enum Domain {
    Single {
        model: PomdpModel,
        criterion: OptimalityCriterion,
    },
    /// `i` is the reasoning agent and `j` the modeled one.
    Multi { i: Arc<Frame>, j: Arc<Frame> },
}

impl Domain {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        parse(&std::fs::read_to_string(path)?)
    }

    pub fn criterion(&self) -> OptimalityCriterion {
        match self {
            Domain::Single { criterion, .. } => *criterion,
            Domain::Multi { i, .. } => i.criterion(),
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            Domain::Single { model, .. } => model.states(),
            Domain::Multi { i, .. } => i.states(),
        }
    }

    /// Renders the domain with every cell written out, so that parsing the
    /// result reproduces all tables bit for bit.
    pub fn emit(&self) -> Result<String> {
        match self {
            Domain::Single { model, criterion } => Ok(emit_single(model, *criterion)),
            Domain::Multi { i, j } => emit_multi(i, j),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Evaluates `x`, `x*y`, `x/y` and longer chains left to right.
fn parse_value(token: &str, line: usize) -> Result<f64> {
    let bad = || parse_err(line, format!("invalid number `{token}`"));
    let mut value = 1.0;
    let mut op = '*';
    let mut start = 0;
    let bytes = token.as_bytes();
    for k in 0..=bytes.len() {
        let at_op = k < bytes.len() && (bytes[k] == b'*' || bytes[k] == b'/');
        if k == bytes.len() || at_op {
            let x: f64 = token[start..k].parse().map_err(|_| bad())?;
            value = if op == '*' { value * x } else { value / x };
            if k < bytes.len() {
                op = bytes[k] as char;
            }
            start = k + 1;
        }
    }
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

struct Row {
    key: Vec<Option<usize>>,
    value: f64,
    line: usize,
}

/// Rows for one table, resolved into a dense array over `dims`.
#[derive(Default)]
struct Table {
    rows: Vec<Row>,
}

impl Table {
    fn resolve(&self, dims: &[usize], what: &str) -> Result<Vec<f64>> {
        let total: usize = dims.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..total {
            let mut best: Vec<&Row> = Vec::new();
            let mut best_spec = 0;
            for row in &self.rows {
                if row.key.iter().zip(&idx).all(|(k, &i)| k.map_or(true, |k| k == i)) {
                    let spec = row.key.iter().filter(|k| k.is_some()).count();
                    if best.is_empty() || spec > best_spec {
                        best.clear();
                        best_spec = spec;
                    }
                    if spec == best_spec {
                        best.push(row);
                    }
                }
            }
            let Some(first) = best.first() else {
                return Err(Error::validation(format!("{what} cell {idx:?} is not defined")));
            };
            for other in &best[1..] {
                if other.key == first.key {
                    return Err(parse_err(other.line, format!("duplicate {what} row (first on line {})", first.line)));
                }
                if other.value != first.value {
                    return Err(parse_err(
                        other.line,
                        format!("{what} row conflicts with line {} at equal specificity", first.line),
                    ));
                }
            }
            out.push(first.value);
            for d in (0..dims.len()).rev() {
                idx[d] += 1;
                if idx[d] < dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(out)
    }
}

#[derive(Default)]
struct AgentDecl {
    name: String,
    actions: Option<Vec<String>>,
    observations: Option<Vec<String>>,
    noise: Option<Vec<f64>>,
    observation: Table,
    reward: Table,
}

#[derive(Default)]
struct Parser {
    states: Option<Vec<String>>,
    agents: Option<Vec<AgentDecl>>,
    actions: Option<Vec<String>>,
    observations: Option<Vec<String>>,
    discount: Option<f64>,
    criterion: Option<(String, f64, usize)>,
    transition: Table,
    observation: Table,
    reward: Table,
}

fn labels(tokens: &[&str], line: usize) -> Result<Vec<String>> {
    if tokens.is_empty() {
        return Err(parse_err(line, "empty label list"));
    }
    for t in tokens {
        if *t == "*" {
            return Err(parse_err(line, "`*` cannot be used as a label"));
        }
    }
    Ok(tokens.iter().map(|t| t.to_string()).collect())
}

fn set_once<T>(slot: &mut Option<T>, value: T, what: &str, line: usize) -> Result<()> {
    if slot.is_some() {
        return Err(parse_err(line, format!("`{what}` given twice")));
    }
    *slot = Some(value);
    Ok(())
}

fn key(token: &str, alphabet: &[String], kind: &'static str, line: usize) -> Result<Option<usize>> {
    if token == "*" {
        return Ok(None);
    }
    alphabet
        .iter()
        .position(|l| l == token)
        .map(Some)
        .ok_or_else(|| parse_err(line, format!("unknown {kind} `{token}`")))
}

impl Parser {
    fn states(&self, line: usize) -> Result<&[String]> {
        self.states.as_deref().ok_or_else(|| parse_err(line, "`states` must come first"))
    }

    fn agent_index(&self, name: &str, line: usize) -> Result<usize> {
        let agents = self.agents.as_ref().ok_or_else(|| parse_err(line, "no `agents` declared"))?;
        agents
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| parse_err(line, format!("unknown agent `{name}`")))
    }

    fn agent_actions(&self, k: usize, line: usize) -> Result<&[String]> {
        let a = &self.agents.as_ref().expect("agents")[k];
        a.actions
            .as_deref()
            .ok_or_else(|| parse_err(line, format!("actions of agent `{}` not declared yet", a.name)))
    }

    fn single_alphabets(&self, line: usize) -> Result<(&[String], &[String])> {
        match (&self.actions, &self.observations) {
            (Some(a), Some(o)) => Ok((a, o)),
            _ => Err(parse_err(line, "`actions` and `observations` must precede table rows")),
        }
    }

    fn directive(&mut self, tokens: &[&str], line: usize) -> Result<()> {
        let (head, rest) = (tokens[0], &tokens[1..]);
        let multi = self.agents.is_some();
        match head {
            "states" => set_once(&mut self.states, labels(rest, line)?, "states", line),
            "agents" => {
                if rest.len() != 2 {
                    return Err(parse_err(line, "exactly two agents are supported"));
                }
                if self.actions.is_some() || self.observations.is_some() {
                    return Err(parse_err(line, "`agents` must precede alphabets"));
                }
                let decls = labels(rest, line)?
                    .into_iter()
                    .map(|name| AgentDecl {
                        name,
                        ..AgentDecl::default()
                    })
                    .collect();
                set_once(&mut self.agents, decls, "agents", line)
            }
            "actions" | "observations" if !multi => {
                let slot = if head == "actions" {
                    &mut self.actions
                } else {
                    &mut self.observations
                };
                set_once(slot, labels(rest, line)?, head, line)
            }
            "actions" | "observations" | "noise" => {
                let Some((name, values)) = rest.split_first() else {
                    return Err(parse_err(line, format!("`{head}` needs an agent name")));
                };
                let k = self.agent_index(name, line)?;
                let agent = &mut self.agents.as_mut().expect("agents")[k];
                match head {
                    "actions" => set_once(&mut agent.actions, labels(values, line)?, head, line),
                    "observations" => set_once(&mut agent.observations, labels(values, line)?, head, line),
                    _ => {
                        let xs = values
                            .iter()
                            .map(|v| parse_value(v, line))
                            .collect::<Result<Vec<_>>>()?;
                        set_once(&mut agent.noise, xs, head, line)
                    }
                }
            }
            "discount" => {
                let [g] = rest else {
                    return Err(parse_err(line, "`discount` takes one value"));
                };
                set_once(&mut self.discount, parse_value(g, line)?, head, line)
            }
            "criterion" => {
                let [kind, x] = rest else {
                    return Err(parse_err(line, "`criterion finite <T>` or `criterion discounted <eps>`"));
                };
                let x = parse_value(x, line)?;
                set_once(&mut self.criterion, (kind.to_string(), x, line), head, line)
            }
            "transition" => self.transition_row(rest, line),
            "observation" => self.observation_row(rest, line),
            "reward" => self.reward_row(rest, line),
            other => Err(parse_err(line, format!("unknown directive `{other}`"))),
        }
    }

    fn transition_row(&mut self, rest: &[&str], line: usize) -> Result<()> {
        let states = self.states(line)?.to_vec();
        let row = if self.agents.is_some() {
            let [s, ai, aj, s2, p] = rest else {
                return Err(parse_err(line, "transition rows are `s a_i a_j s' p`"));
            };
            let (ai_l, aj_l) = (self.agent_actions(0, line)?, self.agent_actions(1, line)?);
            Row {
                key: vec![
                    key(s, &states, "state", line)?,
                    key(ai, ai_l, "action", line)?,
                    key(aj, aj_l, "action", line)?,
                    key(s2, &states, "state", line)?,
                ],
                value: parse_value(p, line)?,
                line,
            }
        } else {
            let [s, a, s2, p] = rest else {
                return Err(parse_err(line, "transition rows are `s a s' p`"));
            };
            let (actions, _) = self.single_alphabets(line)?;
            Row {
                key: vec![
                    key(s, &states, "state", line)?,
                    key(a, actions, "action", line)?,
                    key(s2, &states, "state", line)?,
                ],
                value: parse_value(p, line)?,
                line,
            }
        };
        self.transition.rows.push(row);
        Ok(())
    }

    fn observation_row(&mut self, rest: &[&str], line: usize) -> Result<()> {
        let states = self.states(line)?.to_vec();
        if self.agents.is_some() {
            let [agent, s2, ai, aj, o, p] = rest else {
                return Err(parse_err(line, "observation rows are `agent s' a_i a_j o p`"));
            };
            let k = self.agent_index(agent, line)?;
            let ai = key(ai, self.agent_actions(0, line)?, "action", line)?;
            let aj = key(aj, self.agent_actions(1, line)?, "action", line)?;
            let decl = &mut self.agents.as_mut().expect("agents")[k];
            let obs = decl
                .observations
                .as_deref()
                .ok_or_else(|| parse_err(line, format!("observations of agent `{}` not declared yet", decl.name)))?;
            let row = Row {
                key: vec![key(s2, &states, "state", line)?, ai, aj, key(o, obs, "observation", line)?],
                value: parse_value(p, line)?,
                line,
            };
            decl.observation.rows.push(row);
        } else {
            let [s2, a, o, p] = rest else {
                return Err(parse_err(line, "observation rows are `s' a o p`"));
            };
            let (actions, obs) = self.single_alphabets(line)?;
            let row = Row {
                key: vec![
                    key(s2, &states, "state", line)?,
                    key(a, actions, "action", line)?,
                    key(o, obs, "observation", line)?,
                ],
                value: parse_value(p, line)?,
                line,
            };
            self.observation.rows.push(row);
        }
        Ok(())
    }

    fn reward_row(&mut self, rest: &[&str], line: usize) -> Result<()> {
        let states = self.states(line)?.to_vec();
        if self.agents.is_some() {
            let [agent, s, ai, aj, r] = rest else {
                return Err(parse_err(line, "reward rows are `agent s a_i a_j r`"));
            };
            let k = self.agent_index(agent, line)?;
            let row = Row {
                key: vec![
                    key(s, &states, "state", line)?,
                    key(ai, self.agent_actions(0, line)?, "action", line)?,
                    key(aj, self.agent_actions(1, line)?, "action", line)?,
                ],
                value: parse_value(r, line)?,
                line,
            };
            self.agents.as_mut().expect("agents")[k].reward.rows.push(row);
        } else {
            let [s, a, r] = rest else {
                return Err(parse_err(line, "reward rows are `s a r`"));
            };
            let (actions, _) = self.single_alphabets(line)?;
            let row = Row {
                key: vec![key(s, &states, "state", line)?, key(a, actions, "action", line)?],
                value: parse_value(r, line)?,
                line,
            };
            self.reward.rows.push(row);
        }
        Ok(())
    }

    fn criterion(&self) -> Result<(OptimalityCriterion, f64)> {
        let discount = self.discount.unwrap_or(1.0);
        let (kind, x, line) = self
            .criterion
            .as_ref()
            .ok_or_else(|| Error::validation("no `criterion` given"))?;
        let criterion = match kind.as_str() {
            "finite" => {
                if x.fract() != 0.0 || *x < 1.0 {
                    return Err(parse_err(*line, "finite horizon must be a positive integer"));
                }
                OptimalityCriterion::FiniteHorizon(*x as usize)
            }
            "discounted" => OptimalityCriterion::DiscountedInfinite {
                gamma: discount,
                epsilon: *x,
            },
            other => return Err(parse_err(*line, format!("unknown criterion `{other}`"))),
        };
        criterion.validate()?;
        Ok((criterion, discount))
    }

    fn finish(self) -> Result<Domain> {
        let (criterion, discount) = self.criterion()?;
        let states = self.states.clone().ok_or_else(|| Error::validation("no `states` given"))?;
        let ns = states.len();
        if self.agents.is_some() && matches!(criterion, OptimalityCriterion::FiniteHorizon(_)) && discount != 1.0 {
            return Err(Error::validation("two-agent finite-horizon domains are undiscounted"));
        }
        match self.agents {
            None => {
                let (Some(actions), Some(observations)) = (self.actions, self.observations) else {
                    return Err(Error::validation("missing `actions` or `observations`"));
                };
                let (na, no) = (actions.len(), observations.len());
                let t = self.transition.resolve(&[ns, na, ns], "transition")?;
                let o = self.observation.resolve(&[ns, na, no], "observation")?;
                let r = self.reward.resolve(&[ns, na], "reward")?;
                let model = PomdpModel::from_flat(states, actions, observations, t, o, r, discount)?;
                Ok(Domain::Single { model, criterion })
            }
            Some(agents) => {
                let mut specs = Vec::new();
                for decl in &agents {
                    if decl.actions.is_none() || decl.observations.is_none() {
                        return Err(Error::validation(format!(
                            "agent `{}` needs `actions` and `observations`",
                            decl.name
                        )));
                    }
                }
                let acts: Vec<&Vec<String>> = agents.iter().map(|a| a.actions.as_ref().expect("checked")).collect();
                let (na, nb) = (acts[0].len(), acts[1].len());
                let joint_t = self.transition.resolve(&[ns, na, nb, ns], "transition")?;
                for (k, decl) in agents.iter().enumerate() {
                    let obs = decl.observations.clone().expect("checked");
                    let no = obs.len();
                    let joint_o = decl.observation.resolve(&[ns, na, nb, no], "observation")?;
                    let joint_r = decl.reward.resolve(&[ns, na, nb], "reward")?;
                    let (own, other) = if k == 0 { (na, nb) } else { (nb, na) };
                    let mut transition = Vec::with_capacity(ns * own * other * ns);
                    let mut observation = Vec::with_capacity(ns * own * other * no);
                    let mut reward = Vec::with_capacity(ns * own * other);
                    let joint = |x: usize, y: usize| if k == 0 { (x, y) } else { (y, x) };
                    for s in 0..ns {
                        for x in 0..own {
                            for y in 0..other {
                                let (ai, aj) = joint(x, y);
                                for s2 in 0..ns {
                                    transition.push(joint_t[((s * na + ai) * nb + aj) * ns + s2]);
                                }
                                for o in 0..no {
                                    observation.push(joint_o[((s * na + ai) * nb + aj) * no + o]);
                                }
                                reward.push(joint_r[(s * na + ai) * nb + aj]);
                            }
                        }
                    }
                    let noise = decl
                        .noise
                        .clone()
                        .unwrap_or_else(|| vec![1.0 / other as f64; other]);
                    specs.push(FrameSpec {
                        name: decl.name.clone(),
                        states: states.clone(),
                        actions: acts[k].clone(),
                        other_actions: acts[1 - k].clone(),
                        observations: obs,
                        transition,
                        observation,
                        reward,
                        criterion,
                        noise,
                    });
                }
                let j = Arc::new(Frame::new(specs.pop().expect("two agents"))?);
                let i = Arc::new(Frame::new(specs.pop().expect("two agents"))?);
                Ok(Domain::Multi { i, j })
            }
        }
    }
}

/// Parses a domain file.
pub fn parse(text: &str) -> Result<Domain> {
    let mut parser = Parser::default();
    for (n, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if !tokens.is_empty() {
            parser.directive(&tokens, n + 1)?;
        }
    }
    parser.finish()
}

fn write_criterion(out: &mut String, criterion: OptimalityCriterion, discount: f64) {
    match criterion {
        OptimalityCriterion::FiniteHorizon(t) => {
            if discount != 1.0 {
                let _ = writeln!(out, "discount {discount}");
            }
            let _ = writeln!(out, "criterion finite {t}");
        }
        OptimalityCriterion::DiscountedInfinite { gamma, epsilon } => {
            let _ = writeln!(out, "discount {gamma}");
            let _ = writeln!(out, "criterion discounted {epsilon}");
        }
    }
}

fn emit_single(m: &PomdpModel, criterion: OptimalityCriterion) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states {}", m.states().join(" "));
    let _ = writeln!(out, "actions {}", m.actions().join(" "));
    let _ = writeln!(out, "observations {}", m.observations().join(" "));
    write_criterion(&mut out, criterion, m.discount());
    let (st, ac, ob) = (m.states(), m.actions(), m.observations());
    for s in 0..st.len() {
        for a in 0..ac.len() {
            for s2 in 0..st.len() {
                let _ = writeln!(out, "transition {} {} {} {}", st[s], ac[a], st[s2], m.t(s, a, s2));
            }
        }
    }
    for s2 in 0..st.len() {
        for a in 0..ac.len() {
            for o in 0..ob.len() {
                let _ = writeln!(out, "observation {} {} {} {}", st[s2], ac[a], ob[o], m.o(s2, a, o));
            }
        }
    }
    for s in 0..st.len() {
        for a in 0..ac.len() {
            let _ = writeln!(out, "reward {} {} {}", st[s], ac[a], m.r(s, a));
        }
    }
    out
}

fn emit_multi(i: &Frame, j: &Frame) -> Result<String> {
    let consistent = i.states() == j.states()
        && i.actions() == j.other_actions()
        && i.other_actions() == j.actions()
        && i.criterion() == j.criterion();
    if !consistent {
        return Err(Error::validation("frames do not describe the same game"));
    }
    let (st, ai_l, aj_l) = (i.states(), i.actions(), j.actions());
    let (ns, na, nb) = (st.len(), ai_l.len(), aj_l.len());
    for s in 0..ns {
        for a in 0..na {
            for b in 0..nb {
                for s2 in 0..ns {
                    if i.t(s, a, b, s2).to_bits() != j.t(s, b, a, s2).to_bits() {
                        return Err(Error::validation("frames disagree on the transition function"));
                    }
                }
            }
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "states {}", st.join(" "));
    let _ = writeln!(out, "agents {} {}", i.name(), j.name());
    for f in [i, j] {
        let _ = writeln!(out, "actions {} {}", f.name(), f.actions().join(" "));
        let _ = writeln!(out, "observations {} {}", f.name(), f.observations().join(" "));
        let noise: Vec<String> = f.noise().iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "noise {} {}", f.name(), noise.join(" "));
    }
    write_criterion(&mut out, i.criterion(), i.level0_model().discount());
    for s in 0..ns {
        for a in 0..na {
            for b in 0..nb {
                for s2 in 0..ns {
                    let _ = writeln!(out, "transition {} {} {} {} {}", st[s], ai_l[a], aj_l[b], st[s2], i.t(s, a, b, s2));
                }
            }
        }
    }
    for (k, f) in [i, j].into_iter().enumerate() {
        let own = |a: usize, b: usize| if k == 0 { (a, b) } else { (b, a) };
        for s2 in 0..ns {
            for a in 0..na {
                for b in 0..nb {
                    let (x, y) = own(a, b);
                    for (o, label) in f.observations().iter().enumerate() {
                        let _ = writeln!(
                            out,
                            "observation {} {} {} {} {} {}",
                            f.name(),
                            st[s2],
                            ai_l[a],
                            aj_l[b],
                            label,
                            f.o(s2, x, y, o)
                        );
                    }
                }
            }
        }
        for s in 0..ns {
            for a in 0..na {
                for b in 0..nb {
                    let (x, y) = own(a, b);
                    let _ = writeln!(out, "reward {} {} {} {} {}", f.name(), st[s], ai_l[a], aj_l[b], f.r(s, x, y));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "
        states A B
        actions go stay
        observations x y
        criterion finite 2
        transition * * * 0.5
        transition A stay A 1
        transition A stay B 0
        observation * * x 1/4
        observation * * y 0.5*1.5
        reward * * 0
        reward A go 2   # comment
    ";

    #[test]
    fn wildcards_and_overrides() {
        let Domain::Single { model, criterion } = parse(SMALL).unwrap() else {
            panic!("single-agent domain expected")
        };
        assert_eq!(criterion, OptimalityCriterion::FiniteHorizon(2));
        assert_eq!(model.t(0, 1, 0), 1.0);
        assert_eq!(model.t(1, 1, 0), 0.5);
        assert_eq!(model.o(1, 0, 0), 0.25);
        assert_eq!(model.o(1, 0, 1), 0.75);
        assert_eq!(model.r(0, 0), 2.0);
        assert_eq!(model.r(1, 0), 0.0);
    }

    #[test]
    fn duplicate_rows_are_errors() {
        let text = format!("{SMALL}\nreward A go 2\n");
        assert!(matches!(parse(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn conflicting_wildcards_are_errors() {
        let text = SMALL.replace("reward A go 2", "reward A * 1\nreward * go 2");
        assert!(matches!(parse(&text), Err(Error::Parse { .. })));
        let agree = SMALL.replace("reward A go 2", "reward A * 2\nreward * go 2");
        assert!(parse(&agree).is_ok());
    }

    #[test]
    fn incomplete_and_non_stochastic_tables_are_rejected() {
        let text = SMALL.replace("reward * * 0", "");
        assert!(matches!(parse(&text), Err(Error::Validation(_))));
        let text = SMALL.replace("transition A stay B 0", "");
        assert!(matches!(parse(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_labels_and_directives() {
        let text = SMALL.replace("reward A go 2", "reward C go 2");
        assert!(matches!(parse(&text), Err(Error::Parse { line: 12, .. })));
        assert!(parse("states A\nfrobnicate\n").is_err());
    }

    #[test]
    fn value_expressions() {
        assert_eq!(parse_value("0.85*0.9", 1).unwrap(), 0.85 * 0.9);
        assert_eq!(parse_value("1/6", 1).unwrap(), 1.0 / 6.0);
        assert_eq!(parse_value("-100", 1).unwrap(), -100.0);
        assert!(parse_value("1/0", 1).is_err());
        assert!(parse_value("abc", 1).is_err());
    }

    #[test]
    fn emitted_single_domain_reparses() {
        let d = parse(SMALL).unwrap();
        let again = parse(&d.emit().unwrap()).unwrap();
        let (Domain::Single { model: a, .. }, Domain::Single { model: b, .. }) = (&d, &again) else {
            panic!()
        };
        assert_eq!(a, b);
    }
}
