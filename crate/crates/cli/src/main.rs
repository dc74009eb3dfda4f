//! `ipomdp`: solve, sweep, trace and draw policy graphs for domains in the
//! plain-text domain format.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ipomdp::belief::InteractiveBelief;
use ipomdp::domain::Domain;
use ipomdp::model::{build_level_hierarchy, Frame, Model, ModelPrior, ModelSpace};
use ipomdp::pomdp::{iterations_for_error, solve_from, AlphaSet, Belief, OptimalityCriterion, Solution};
use ipomdp::report;
use ipomdp::solver::{extract_flat_policy_graph, extract_policy_graph, IpomdpProblem, Solver, SweepPoint};

#[derive(Parser)]
#[command(name = "ipomdp", version, about = "Exact solver for finitely nested interactive POMDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Value and optimal actions at one belief.
    Solve {
        #[command(flatten)]
        common: Common,
        /// P(first state) of the reasoning agent.
        #[arg(long, default_value_t = 0.5)]
        belief: f64,
        /// Also write the level-0 alpha vectors per horizon to this CSV.
        #[arg(long)]
        alphas: Option<PathBuf>,
    },
    /// Values along P(first state) next to the level-0 reference curve.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Belief trace along a script of own actions and observations.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        belief: f64,
        /// Space-separated `action:observation` pairs, e.g. "L:GL,S L:GL,S".
        #[arg(long, default_value = "")]
        script: String,
    },
    /// Policy graph in Graphviz format.
    PolicyGraph {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Load a domain and report its alphabets.
    Validate {
        #[arg(long)]
        domain: PathBuf,
    },
    /// Write a domain back out with every table cell explicit.
    Emit {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the model space as CSV.
    Models {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    domain: PathBuf,
    /// Strategy level of the reasoning agent.
    #[arg(long, default_value_t = 0)]
    level: usize,
    /// Decisions to go; defaults to the domain's criterion.
    #[arg(long)]
    horizon: Option<usize>,
    /// Points per belief coordinate in the other agent's model space.
    #[arg(long, default_value_t = 101)]
    model_grid: usize,
    /// Prior over the other agent's models: `uniform`, `point:<p>` or `noinfo`.
    #[arg(long, default_value = "uniform")]
    prior: String,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum PriorSpec {
    Uniform,
    Point(f64),
    NoInformation,
}

fn parse_prior(spec: &str) -> Result<PriorSpec> {
    match spec {
        "uniform" => Ok(PriorSpec::Uniform),
        "noinfo" => Ok(PriorSpec::NoInformation),
        _ => {
            let p = spec
                .strip_prefix("point:")
                .ok_or_else(|| ipomdp::Error::Domain(format!("unknown prior `{spec}`")))?;
            let p: f64 = p
                .parse()
                .map_err(|_| ipomdp::Error::Domain(format!("bad point prior `{spec}`")))?;
            Ok(PriorSpec::Point(p))
        }
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Everything a command needs once the domain is loaded.
struct Setup {
    domain: Domain,
    level: usize,
    horizon: usize,
    problem: Option<IpomdpProblem>,
    prior: Option<ModelPrior>,
}

fn default_horizon(criterion: OptimalityCriterion, max_abs_reward: f64) -> Result<usize> {
    Ok(match criterion {
        OptimalityCriterion::FiniteHorizon(t) => t,
        OptimalityCriterion::DiscountedInfinite { gamma, epsilon } => {
            iterations_for_error(max_abs_reward, epsilon, gamma)?
        }
    })
}

fn frames(domain: &Domain) -> Option<(&Arc<Frame>, &Arc<Frame>)> {
    match domain {
        Domain::Multi { i, j } => Some((i, j)),
        Domain::Single { .. } => None,
    }
}

fn setup(c: &Common) -> Result<Setup> {
    let domain = Domain::load(&c.domain)?;
    let prior_spec = parse_prior(&c.prior)?;
    let (rmax, problem, prior) = match frames(&domain) {
        None => {
            if c.level != 0 {
                bail!(ipomdp::Error::Domain("single-agent domains only support level 0".into()));
            }
            let Domain::Single { model, .. } = &domain else { unreachable!() };
            (model.max_abs_reward(), None, None)
        }
        Some((i, j)) => {
            let noinfo = matches!(prior_spec, PriorSpec::NoInformation);
            let space = build_level_hierarchy(j, i, c.model_grid, c.level, noinfo)?;
            let prior = if c.level == 0 {
                None
            } else {
                Some(match prior_spec {
                    PriorSpec::Uniform => space.density_prior()?,
                    PriorSpec::NoInformation => space.no_information_prior()?,
                    PriorSpec::Point(p) => {
                        if c.level != 1 {
                            bail!(ipomdp::Error::Domain("point priors are only defined at level 1".into()));
                        }
                        ModelPrior::point(Arc::new(Model::level0(j.clone(), Belief::two_state(p)?)?))
                    }
                })
            };
            let problem = IpomdpProblem::new(i.clone(), space, domain.criterion())?;
            (i.max_abs_reward(), Some(problem), prior)
        }
    };
    let horizon = match c.horizon {
        Some(h) => h,
        None => default_horizon(domain.criterion(), rmax)?,
    };
    Ok(Setup {
        level: c.level,
        domain,
        horizon,
        problem,
        prior,
    })
}

fn action_labels(domain: &Domain) -> &[String] {
    match domain {
        Domain::Single { model, .. } => model.actions(),
        Domain::Multi { i, .. } => i.actions(),
    }
}

fn labels(actions: &[String], idx: &[usize]) -> String {
    idx.iter().map(|&a| actions[a].as_str()).collect::<Vec<_>>().join("|")
}

/// Value curves of the configured problem and of its level-0 reduction.
fn sweep_curves(s: &Setup, solver: &Solver, grid: usize) -> Result<(Vec<SweepPoint>, Vec<SweepPoint>)> {
    match (&s.domain, &s.problem) {
        (Domain::Single { model, criterion }, _) => {
            let discount = criterion.continuation_discount();
            let curve = (0..grid)
                .map(|k| {
                    let p = k as f64 / (grid - 1).max(1) as f64;
                    let r = solver.value_flat_with_terminal(model, discount, &Belief::two_state(p)?, s.horizon, None)?;
                    Ok(SweepPoint {
                        p,
                        value: r.value,
                        opt_actions: r.opt_actions,
                    })
                })
                .collect::<ipomdp::Result<Vec<_>>>()?;
            Ok((curve.clone(), curve))
        }
        (Domain::Multi { i, j }, Some(problem)) => {
            let empty = ModelPrior(Vec::new());
            let prior = s.prior.as_ref().unwrap_or(&empty);
            let main = solver.value_sweep(problem, prior, grid, s.horizon)?;
            let base = if s.level == 0 {
                main.clone()
            } else {
                let space0 = build_level_hierarchy(j, i, 2, 0, false)?;
                let p0 = IpomdpProblem::new(i.clone(), space0, problem.criterion())?;
                solver.value_sweep(&p0, &empty, grid, s.horizon)?
            };
            Ok((main, base))
        }
        _ => unreachable!("multi-agent setups carry a problem"),
    }
}

fn cmd_solve(c: &Common, belief: f64, alphas: &Option<PathBuf>) -> Result<()> {
    let s = setup(c)?;
    let solver = Solver::new();
    let act = action_labels(&s.domain);
    let res = match (&s.domain, &s.problem) {
        (Domain::Single { model, criterion }, _) => solver.value_flat_with_terminal(
            model,
            criterion.continuation_discount(),
            &Belief::two_state(belief)?,
            s.horizon,
            None,
        )?,
        (_, Some(problem)) => {
            let empty = ModelPrior(Vec::new());
            let b = problem.slice_belief(s.prior.as_ref().unwrap_or(&empty), belief)?;
            solver.value(problem, &b, s.horizon)?
        }
        _ => unreachable!(),
    };
    if c.out.is_some() {
        let point = SweepPoint {
            p: belief,
            value: res.value,
            opt_actions: res.opt_actions.clone(),
        };
        report::write_sweep(output(&c.out)?, &[point.clone()], &[point], act)?;
    }
    println!("value {}", report::fmt_f64(res.value));
    println!("opt {}", labels(act, &res.opt_actions));
    if let Some(path) = alphas {
        let model = match &s.domain {
            Domain::Single { model, .. } => model.clone(),
            Domain::Multi { i, .. } => i.level0_model().clone(),
        };
        let criterion = OptimalityCriterion::FiniteHorizon(s.horizon.max(1));
        let sets: Vec<AlphaSet> = match solve_from(&model, criterion, AlphaSet::zero(model.num_states()))? {
            Solution::FiniteHorizon(sets) => sets,
            Solution::Discounted { alphas, .. } => vec![alphas],
        };
        let rows: Vec<(usize, &AlphaSet)> = sets.iter().enumerate().map(|(k, a)| (k + 1, a)).collect();
        report::write_alpha_sets(output(&Some(path.clone()))?, &rows, model.states(), model.actions())?;
    }
    Ok(())
}

fn cmd_sweep(c: &Common, grid: usize) -> Result<()> {
    if grid < 2 {
        bail!(ipomdp::Error::Domain("a sweep needs at least 2 points".into()));
    }
    let s = setup(c)?;
    let solver = Solver::new();
    let (main, base) = sweep_curves(&s, &solver, grid)?;
    report::write_sweep(output(&c.out)?, &main, &base, action_labels(&s.domain))?;
    Ok(())
}

fn parse_script(script: &str, actions: &[String], observations: &[String]) -> Result<Vec<(usize, usize)>> {
    script
        .split_whitespace()
        .map(|pair| {
            let (a, o) = pair
                .split_once(':')
                .ok_or_else(|| ipomdp::Error::Domain(format!("script entry `{pair}` is not `action:observation`")))?;
            let idx = |labels: &[String], l: &str, kind: &'static str| {
                labels.iter().position(|x| x == l).ok_or_else(|| ipomdp::Error::UnknownLabel {
                    kind,
                    label: l.to_string(),
                })
            };
            Ok((idx(actions, a, "action")?, idx(observations, o, "observation")?))
        })
        .collect()
}

/// Error raised by a failing trace step.
#[derive(Debug)]
struct StepError {
    step: usize,
    source: ipomdp::Error,
}

impl std::fmt::Display for StepError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "step {}: {}", self.step, self.source)
    }
}

impl std::error::Error for StepError {}

fn cmd_trace(c: &Common, belief: f64, script: &str) -> Result<()> {
    let s = setup(c)?;
    let solver = Solver::new();
    let mut rows = Vec::new();
    match (&s.domain, &s.problem) {
        (Domain::Multi { i, .. }, Some(problem)) if s.level > 0 => {
            let script = parse_script(script, i.actions(), i.observations())?;
            let prior = s.prior.as_ref().expect("nested setups carry a prior");
            let b0 = InteractiveBelief::product(&Belief::two_state(belief)?, prior)?;
            rows.extend(report::belief_rows(0, "prior", &b0, i));
            let horizon = c.horizon.unwrap_or(s.horizon.max(script.len()));
            let steps = solver
                .trace(problem.frame(), &b0, &script, horizon)
                .map_err(|(step, source)| StepError { step, source })?;
            for (k, st) in steps.iter().enumerate() {
                rows.extend(report::prediction_rows(k + 1, &st.prediction, i));
                rows.extend(report::belief_rows(k + 1, "correction", &st.posterior, i));
            }
        }
        _ => {
            let model = match &s.domain {
                Domain::Single { model, .. } => model,
                Domain::Multi { i, .. } => i.level0_model(),
            };
            let script = parse_script(script, model.actions(), model.observations())?;
            let mut b = Belief::two_state(belief)?;
            rows.extend(report::flat_rows(0, "prior", &b, model.states()));
            for (k, &(a, o)) in script.iter().enumerate() {
                b = model
                    .belief_update(&b, a, o)
                    .map_err(|source| StepError { step: k + 1, source })?;
                rows.extend(report::flat_rows(k + 1, "correction", &b, model.states()));
            }
        }
    }
    report::write_trace(output(&c.out)?, &rows)?;
    Ok(())
}

fn cmd_policy_graph(c: &Common, grid: usize) -> Result<()> {
    let s = setup(c)?;
    let solver = Solver::new();
    let graph = match (&s.domain, &s.problem) {
        (Domain::Single { model, criterion }, _) => {
            extract_flat_policy_graph(model, criterion.continuation_discount(), s.horizon, grid)?
        }
        (_, Some(problem)) => {
            let empty = ModelPrior(Vec::new());
            extract_policy_graph(&solver, problem, s.prior.as_ref().unwrap_or(&empty), s.horizon, grid)?
        }
        _ => unreachable!(),
    };
    report::write_dot(output(&c.out)?, &graph)?;
    Ok(())
}

fn cmd_validate(path: &PathBuf) -> Result<()> {
    let d = Domain::load(path)?;
    match &d {
        Domain::Single { model, .. } => println!(
            "single-agent domain: {} states, {} actions, {} observations",
            model.num_states(),
            model.num_actions(),
            model.num_observations()
        ),
        Domain::Multi { i, j } => {
            println!("two-agent domain: {} states", i.num_states());
            for f in [i, j] {
                println!(
                    "agent {}: {} actions, {} observations",
                    f.name(),
                    f.num_actions(),
                    f.num_observations()
                );
            }
        }
    }
    Ok(())
}

fn cmd_emit(path: &PathBuf, out: &Option<PathBuf>) -> Result<()> {
    let text = Domain::load(path)?.emit()?;
    output(out)?.write_all(text.as_bytes())?;
    Ok(())
}

fn cmd_models(c: &Common) -> Result<()> {
    let s = setup(c)?;
    let space: ModelSpace = match &s.problem {
        Some(p) => p.model_space().clone(),
        None => bail!(ipomdp::Error::Domain("single-agent domains have no model space".into())),
    };
    report::write_model_space(output(&c.out)?, &space)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Solve { common, belief, alphas } => cmd_solve(common, *belief, alphas),
        Command::Sweep { common, grid } => cmd_sweep(common, *grid),
        Command::Trace { common, belief, script } => cmd_trace(common, *belief, script),
        Command::PolicyGraph { common, grid } => cmd_policy_graph(common, *grid),
        Command::Validate { domain } => cmd_validate(domain),
        Command::Emit { domain, out } => cmd_emit(domain, out),
        Command::Models { common } => cmd_models(common),
    }
}

/// 3 for vanishing observation likelihoods, 2 for every other load or
/// validation failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    let lib = err
        .downcast_ref::<StepError>()
        .map(|e| &e.source)
        .or_else(|| err.downcast_ref::<ipomdp::Error>());
    match lib {
        Some(ipomdp::Error::ZeroLikelihood { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
