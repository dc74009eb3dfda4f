//! CSV and DOT output.
//!
//! Floats are written with 17 significant digits so that files compare
//! byte for byte between runs.

use std::io::Write;

use crate::belief::{Atom, InteractiveBelief, PredictedBelief};
use crate::model::{Frame, ModelSpace};
use crate::pomdp::{AlphaSet, Belief};
use crate::solver::{PolicyGraph, SweepPoint};
use crate::Result;

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row of a belief trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    /// `prior`, `prediction` or `correction`.
    pub stage: &'static str,
    /// The other agent's action for prediction rows.
    pub other_action: Option<String>,
    pub state: String,
    pub kind: String,
    pub level: Option<usize>,
    pub model: String,
    pub weight: f64,
}

fn atom_row(step: usize, stage: &'static str, other: Option<String>, atom: &Atom, weight: f64, frame: &Frame) -> TraceRow {
    TraceRow {
        step,
        stage,
        other_action: other,
        state: frame.states()[atom.state].clone(),
        kind: atom.model.kind_label().to_string(),
        level: atom.model.is_intentional().then(|| atom.model.level()),
        model: atom.model.describe(),
        weight,
    }
}

/// Rows of an interactive belief.
pub fn belief_rows(step: usize, stage: &'static str, b: &InteractiveBelief, frame: &Frame) -> Vec<TraceRow> {
    b.atoms()
        .iter()
        .map(|a| atom_row(step, stage, None, a, a.weight, frame))
        .collect()
}

/// Rows of a prediction; weights are joint over the other agent's action.
pub fn prediction_rows(step: usize, pred: &PredictedBelief, frame: &Frame) -> Vec<TraceRow> {
    pred.branches
        .iter()
        .flat_map(|br| {
            let label = frame.other_actions()[br.other_action].clone();
            br.atoms
                .iter()
                .map(move |a| atom_row(step, "prediction", Some(label.clone()), a, br.probability * a.weight, frame))
        })
        .collect()
}

/// Rows of a flat belief (level-0 traces).
pub fn flat_rows(step: usize, stage: &'static str, b: &Belief, states: &[String]) -> Vec<TraceRow> {
    b.weights()
        .iter()
        .enumerate()
        .map(|(s, &w)| TraceRow {
            step,
            stage,
            other_action: None,
            state: states[s].clone(),
            kind: "none".to_string(),
            level: None,
            model: String::new(),
            weight: w,
        })
        .collect()
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "stage", "other_action", "state", "kind", "level", "model", "weight"])?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.stage.to_string(),
            r.other_action.clone().unwrap_or_default(),
            r.state.clone(),
            r.kind.clone(),
            r.level.map(|l| l.to_string()).unwrap_or_default(),
            r.model.clone(),
            fmt_f64(r.weight),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sweep table: the nested value next to the level-0 reference value.
pub fn write_sweep<W: Write>(out: W, level: &[SweepPoint], level0: &[SweepPoint], actions: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "value", "level0_value", "opt_actions"])?;
    for (a, b) in level.iter().zip(level0) {
        let opt: Vec<&str> = a.opt_actions.iter().map(|&k| actions[k].as_str()).collect();
        w.write_record([fmt_f64(a.p), fmt_f64(a.value), fmt_f64(b.value), opt.join("|")])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per alpha vector: horizon, action label, then one column per state.
pub fn write_alpha_sets<W: Write>(out: W, sets: &[(usize, &AlphaSet)], states: &[String], actions: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["horizon".to_string(), "action".to_string()];
    header.extend(states.iter().cloned());
    w.write_record(&header)?;
    for (h, set) in sets {
        for v in set.vectors() {
            let mut rec = vec![h.to_string(), actions[v.action].clone()];
            rec.extend(v.values.iter().map(|&x| fmt_f64(x)));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_model_space<W: Write>(out: W, space: &ModelSpace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "kind", "level", "frame", "model"])?;
    for (k, m) in space.atoms().iter().enumerate() {
        w.write_record([
            k.to_string(),
            m.kind_label().to_string(),
            if m.is_intentional() { m.level().to_string() } else { String::new() },
            m.frame().name().to_string(),
            m.describe(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dot<W: Write>(mut out: W, graph: &PolicyGraph) -> Result<()> {
    out.write_all(graph.to_dot().as_bytes())?;
    Ok(())
}
