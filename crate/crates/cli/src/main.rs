//! `lowdim`: graph analysis, map fitting, sequential assimilation and sampling.

mod config;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lowdim::graph::{
    decompose, direct_sparsity, fill_in, inverse_sparsity, min_fill_ordering, pairwise_imap, schedule_decomposition,
    ImapOptions, Ordering, SchedulePolicy, SparsityPattern, UndirectedGraph,
};
use lowdim::models::simulate;
use lowdim::parallel::Execution;
use lowdim::sequential::{
    assimilate, assimilate_linear_gaussian, extend, extend_linear_gaussian, fixed_point_smoother, sample_filtering,
    sample_parameters, sample_smoothing, SmootherState, StateKind,
};
use lowdim::transport::{to_checkpoint, MonotoneTriangularMap};
use lowdim::variational::{compute_map, ReferenceRule, RuleKind};
use serde::Serialize;
use serde_json::json;

use config::{build_target, Model, RunConfig, SparsitySource, TargetConfig};

/// Failures, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<lowdim::Error> for CliError {
    fn from(e: lowdim::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 3,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "lowdim", version, about = "Low-dimensional transport maps for inference")]
struct Cli {
    /// Worker threads; `LOWDIM_THREADS` takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderingChoice {
    Given,
    Minfill,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Frontier,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleKind {
    Smoothing,
    Filtering,
    FixedPoint,
}

#[derive(Subcommand)]
enum Command {
    /// Sparsity bounds of the direct and inverse triangular maps.
    Sparsity {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "given")]
        ordering: OrderingChoice,
    },
    /// Min-fill elimination ordering and its fill-in.
    Ordering { graph: PathBuf },
    /// Recursive decomposition schedule.
    Decompose {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "frontier")]
        policy: Policy,
    },
    /// Fit a map to a target; exits 0 only when the optimiser converged.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Also write the optimiser trace as CSV.
        #[arg(long)]
        trace: bool,
    },
    /// Simulate a trajectory of the configured model.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parameter values for models with estimated parameters.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Recursive smoothing over an observation sequence.
    Assimilate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Extend the state already in `output`.
        #[arg(long)]
        resume: bool,
        /// Exact maps for linear-Gaussian models.
        #[arg(long)]
        closed_form: bool,
        /// Track the initial state as a static parameter.
        #[arg(long)]
        fixed_point: bool,
    },
    /// Draw samples from a saved state.
    Sample {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum, default_value = "smoothing")]
        kind: SampleKind,
        #[arg(short = 'm', long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(e.code());
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let env = match std::env::var("LOWDIM_THREADS") {
        Ok(v) => Some(
            v.trim().parse::<usize>().map_err(|_| CliError::Config(format!("LOWDIM_THREADS={v} is not a count")))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = env.or(flag).filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Sparsity { graph, ordering } => cmd_sparsity(&graph, ordering),
        Command::Ordering { graph } => cmd_ordering(&graph),
        Command::Decompose { graph, policy } => cmd_decompose(&graph, policy),
        Command::Fit { config, output, trace } => cmd_fit(&config, &output, trace),
        Command::Simulate { config, length, seed, theta, output } => {
            cmd_simulate(&config, length, seed, theta, &output)
        }
        Command::Assimilate { config, observations, output, resume, closed_form, fixed_point } => {
            cmd_assimilate(&config, &observations, &output, resume, closed_form, fixed_point)
        }
        Command::Sample { state, kind, samples, seed, output } => cmd_sample(&state, kind, samples, seed, &output),
    }
}

fn read_graph(path: &Path) -> Result<UndirectedGraph, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    UndirectedGraph::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json value"));
}

fn pairs(p: &SparsityPattern) -> Vec<(usize, usize)> {
    p.one_based()
}

fn one_based_pairs<'a, I: IntoIterator<Item = &'a (usize, usize)>>(it: I) -> Vec<(usize, usize)> {
    it.into_iter().map(|&(i, j)| (i.min(j) + 1, i.max(j) + 1)).collect()
}

fn cmd_sparsity(path: &Path, choice: OrderingChoice) -> Result<u8, CliError> {
    let g = read_graph(path)?;
    let given_fill = fill_in(&g, &Ordering::identity(g.n()))?;
    let order = match choice {
        OrderingChoice::Given => Ordering::identity(g.n()),
        OrderingChoice::Minfill => min_fill_ordering(&g),
    };
    let relabelled = g.relabel(&order)?;
    let fill = fill_in(&g, &order)?;
    let inverse = inverse_sparsity(&relabelled);
    let direct = direct_sparsity(&relabelled);
    print_json(&json!({
        "n": g.n(),
        "ordering": order.one_based(),
        "inverse_sparsity": pairs(&inverse),
        "direct_sparsity": pairs(&direct),
        "fill_in": one_based_pairs(&fill),
        "fill_in_count": fill.len(),
        "given_order_fill_in_count": given_fill.len(),
    }));
    Ok(0)
}

fn cmd_ordering(path: &Path) -> Result<u8, CliError> {
    let g = read_graph(path)?;
    let order = min_fill_ordering(&g);
    let fill = fill_in(&g, &order)?;
    print_json(&json!({
        "ordering": order.one_based(),
        "fill_in": one_based_pairs(&fill),
        "fill_in_count": fill.len(),
    }));
    Ok(0)
}

fn one_based_set(s: &std::collections::BTreeSet<usize>) -> Vec<usize> {
    s.iter().map(|v| v + 1).collect()
}

fn cmd_decompose(path: &Path, policy: Policy) -> Result<u8, CliError> {
    let g = read_graph(path)?;
    let policy = match policy {
        Policy::Frontier => SchedulePolicy::Frontier,
        Policy::Greedy => SchedulePolicy::Greedy,
    };
    let first =
        decompose(&g).map(|d| json!({ "a": one_based_set(&d.a), "s": one_based_set(&d.s), "b": one_based_set(&d.b) }));
    let schedule = schedule_decomposition(&g, policy);
    let steps: Vec<_> = schedule
        .steps
        .iter()
        .map(|s| {
            json!({
                "a": one_based_set(&s.decomposition.a),
                "s": one_based_set(&s.decomposition.s),
                "b": one_based_set(&s.decomposition.b),
                "sigma": s.sigma.one_based(),
                "effective_dim": s.effective_dim,
                "added_edges": one_based_pairs(&s.added_edges),
            })
        })
        .collect();
    print_json(&json!({
        "decomposition": first,
        "steps": steps,
        "final_dim": schedule.final_r_dim,
        "effective_dims": schedule.effective_dims(),
    }));
    Ok(0)
}

fn fit_template(
    cfg: &RunConfig,
    config: &Path,
    target: &dyn lowdim::transport::LogDensity,
    rule: &ReferenceRule,
) -> Result<MonotoneTriangularMap, CliError> {
    let template = cfg.template.template();
    let dim = target.dim();
    let pattern = match &cfg.template.sparsity {
        SparsitySource::None => return Ok(MonotoneTriangularMap::identity(dim, &template)?),
        SparsitySource::Graph(path) => {
            let g = read_graph(&resolve(config, path))?;
            if g.n() != dim {
                return Err(CliError::Config(format!(
                    "graph has {} vertices but the target has dimension {dim}",
                    g.n()
                )));
            }
            direct_sparsity(&g)
        }
        SparsitySource::Auto => {
            let probes: Vec<Vec<f64>> = (0..rule.len().min(20)).map(|i| rule.point(i).to_vec()).collect();
            direct_sparsity(&pairwise_imap(target, &probes, &ImapOptions::default())?)
        }
    };
    Ok(MonotoneTriangularMap::from_direct_pattern(&pattern, &template)?)
}

#[derive(Serialize)]
struct FitOutput<'a> {
    report: &'a lowdim::variational::FitReport,
    dim: usize,
    n_coefficients: usize,
}

fn cmd_fit(config: &Path, output: &Path, trace: bool) -> Result<u8, CliError> {
    let cfg = RunConfig::load(config)?;
    let observations = match &cfg.target {
        Some(TargetConfig::Posterior { observations }) => Some(io::read_observations(&resolve(config, observations))?),
        _ => None,
    };
    let target = build_target(&cfg, observations.as_deref())?;
    let dim = target.dim();
    let kind = cfg.rule.unwrap_or_else(|| RuleKind::default_for(dim, cfg.seed));
    let rule = ReferenceRule::new(kind, dim)?;
    let template = fit_template(&cfg, config, target.as_ref(), &rule)?;
    let (map, report) = compute_map(target.as_ref(), &template, &rule, &cfg.optimizer.fit_options())?;
    std::fs::create_dir_all(output)?;
    std::fs::write(output.join("map.json"), to_checkpoint(&map)? + "\n")?;
    io::write_json(
        &output.join("report.json"),
        &FitOutput { report: &report, dim, n_coefficients: map.n_coefficients() },
    )?;
    if trace {
        std::fs::write(output.join("trace.csv"), report.trace_csv())?;
    }
    eprintln!(
        "objective {:.6e}  variance diagnostic {:.3e}  iterations {}  converged {}",
        report.final_objective, report.variance_diagnostic, report.iterations, report.converged
    );
    Ok(if report.converged { 0 } else { 3 })
}

/// Paths inside a config file are relative to that file.
fn resolve(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn cmd_simulate(
    config: &Path,
    length: usize,
    seed: u64,
    theta: Option<Vec<f64>>,
    output: &Path,
) -> Result<u8, CliError> {
    let cfg = RunConfig::load(config)?;
    let model = cfg.model()?;
    let p = model.as_dyn().param_dim();
    let given = theta.as_ref().map_or(0, Vec::len);
    if given != p {
        return Err(CliError::Config(format!("--theta needs {p} values for this model, got {given}")));
    }
    let traj = match &model {
        Model::Sv(m) => simulate(m, length, theta.as_deref(), seed)?,
        Model::Lg(m) => simulate(m, length, theta.as_deref(), seed)?,
    };
    std::fs::create_dir_all(output)?;
    let d = traj.observations.first().map_or(0, Vec::len);
    let n = traj.states.first().map_or(0, Vec::len);
    let names = |p: &str, k: usize| -> Vec<String> {
        if k == 1 {
            vec![p.to_string()]
        } else {
            (1..=k).map(|j| format!("{p}_{j}")).collect()
        }
    };
    io::write_rows(&output.join("observations.csv"), &names("y", d), &traj.observations)?;
    io::write_rows(&output.join("states.csv"), &names("z", n), &traj.states)?;
    Ok(0)
}

fn cmd_assimilate(
    config: &Path,
    observations: &Path,
    output: &Path,
    resume: bool,
    closed_form: bool,
    fixed_point: bool,
) -> Result<u8, CliError> {
    let cfg = RunConfig::load(config)?;
    let model = cfg.model()?;
    let obs = io::read_observations(observations)?;
    let hash = cfg.model_hash();
    let opts = cfg.assimilation_options();
    let lg = match (&model, closed_form) {
        (Model::Lg(m), true) => Some(m),
        (_, true) => return Err(CliError::Config("--closed-form needs a linear-gaussian model".into())),
        _ => None,
    };
    let state = if resume {
        let (mut state, manifest) = SmootherState::load(output)?;
        if manifest.model_hash != hash {
            return Err(CliError::Config("the configuration differs from the one that produced this state".into()));
        }
        if state.closed_form != closed_form || (state.kind == StateKind::FixedPoint) != fixed_point {
            return Err(CliError::Config("--closed-form and --fixed-point must match the saved state".into()));
        }
        if state.failure.is_some() {
            return Err(CliError::Numerical("the saved state ends in a failed step".into()));
        }
        match lg {
            Some(m) => extend_linear_gaussian(&mut state, m, &obs)?,
            None => extend(&mut state, model.as_dyn(), &obs, &opts)?,
        }
        state
    } else {
        match (lg, fixed_point) {
            (Some(_), true) => return Err(CliError::Config("--closed-form does not support --fixed-point".into())),
            (Some(m), false) => assimilate_linear_gaussian(m, &obs)?,
            (None, true) => fixed_point_smoother(model.as_dyn(), &obs, &opts)?,
            (None, false) => assimilate(model.as_dyn(), &obs, &opts)?,
        }
    };
    state.save(output, &hash)?;
    for (i, step) in state.steps.iter().enumerate() {
        let vd = step.variance_diagnostic().map_or("-".to_string(), |v| format!("{v:.3e}"));
        eprintln!("step {i:4}  log c {:+.6e}  variance diagnostic {vd}", step.log_c);
    }
    eprintln!("log evidence {:.10e}", state.evidence());
    if let Some(f) = &state.failure {
        eprintln!("error: step {} failed: {}", f.step, f.reason);
        return Ok(3);
    }
    Ok(0)
}

fn cmd_sample(dir: &Path, kind: SampleKind, m: usize, seed: u64, output: &Path) -> Result<u8, CliError> {
    if m == 0 {
        return Err(CliError::Config("-m must be positive".into()));
    }
    let (state, _) = SmootherState::load(dir)?;
    let exec = Execution::Parallel;
    let (names, samples) = match kind {
        SampleKind::Smoothing => (io::smoothing_header(&state), sample_smoothing(&state, m, seed, exec)?),
        SampleKind::Filtering => (io::filtering_header(&state), sample_filtering(&state, m, seed, exec)?),
        SampleKind::FixedPoint => {
            if state.kind != StateKind::FixedPoint {
                return Err(CliError::Config("the state was not produced with --fixed-point".into()));
            }
            let names = io::smoothing_header(&state)[..state.param_dim].to_vec();
            (names, sample_parameters(&state, m, seed, exec)?)
        }
    };
    std::fs::create_dir_all(output)?;
    io::write_rows(&output.join("samples.csv"), &names, &samples)?;
    io::write_percentiles(&output.join("percentiles.csv"), &names, &samples)?;
    Ok(0)
}
