//! Command-line front end: `fit`, `select`, `cluster` and `eval`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::affinity::AffinityMode;
use crate::clustering::{kmeans, spectral_cluster, KMeansOptions};
use crate::data::{
    load_dataset, minmax_normalize, read_labels, stack_views, write_labels, write_matrix_csv, LoadOptions,
    MultiViewDataset,
};
use crate::error::{Error, Result};
use crate::metrics::{acc, nmi, purity};
use crate::model::{feature_scores, fit, select_features, FitResult, Hyperparams};

/// Number of k-means runs averaged per selection percentage.
pub const SELECT_RUNS: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "mvfsgl", version, about = "Multi-view feature selection and graph learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Learn W, S and H; write them with the iteration trace.
    Fit(RunArgs),
    /// Fit, rank features, and evaluate k-means on the selected subsets.
    Select(RunArgs),
    /// Fit, then spectral clustering on the learned graph.
    Cluster(RunArgs),
    /// Print NMI, ACC and purity for two label files.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AffinityArg {
    Row,
    Sym,
}

impl From<AffinityArg> for AffinityMode {
    fn from(a: AffinityArg) -> Self {
        match a {
            AffinityArg::Row => AffinityMode::RowScaled,
            AffinityArg::Sym => AffinityMode::Symmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RunArgs {
    /// One matrix file per view (features × samples unless --transpose)
    #[arg(long, num_args = 1.., required = true)]
    pub views: Vec<PathBuf>,
    /// Ground-truth labels, one integer per line
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1e3)]
    pub alpha: f64,
    /// Number of clusters
    #[arg(long)]
    pub c: usize,
    /// Neighbors in the K-NN affinity graphs
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Projected dimension per view (defaults to --c)
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_enum, default_value_t = AffinityArg::Row)]
    pub affinity: AffinityArg,
    /// Selection percentages, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 20.0, 30.0, 40.0, 50.0])]
    pub percent: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Matrix files are samples × features
    #[arg(long)]
    pub transpose: bool,
    /// Skip the first line of every matrix file
    #[arg(long)]
    pub header: bool,
    /// Print the canonical argument list and exit
    #[arg(long)]
    pub dump_config: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct EvalArgs {
    pub pred: PathBuf,
    pub truth: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Fit,
    Select,
    Cluster,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Fit => "fit",
            Task::Select => "select",
            Task::Cluster => "cluster",
        }
    }
}

/// Validated settings of one `fit`, `select` or `cluster` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub views: Vec<PathBuf>,
    pub labels: Option<PathBuf>,
    pub hyperparams: Hyperparams,
    pub percents: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub load: LoadOptions,
}

impl RunConfig {
    pub fn from_args(task: Task, args: &RunArgs) -> Result<Self> {
        let hyperparams = Hyperparams {
            eta: args.eta,
            beta: args.beta,
            gamma: args.gamma,
            alpha: args.alpha,
            clusters: args.c,
            neighbors: args.k,
            epsilon: args.epsilon,
            max_iters: args.max_iters,
            projected_dim: args.d,
            affinity: args.affinity.into(),
            learn_graph: true,
        };
        hyperparams.validate()?;
        if let Some(p) = args.percent.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
            return Err(Error::InvalidArgument(format!(
                "selection percentage must lie in (0, 100], got {p}"
            )));
        }
        Ok(Self {
            task,
            views: args.views.clone(),
            labels: args.labels.clone(),
            hyperparams,
            percents: args.percent.clone(),
            seed: args.seed,
            out: args.out.clone(),
            load: LoadOptions {
                header: args.header,
                transpose: args.transpose,
            },
        })
    }

    /// Canonical argument list (without the program name) that parses back to
    /// this configuration.
    pub fn to_args(&self) -> Vec<String> {
        let hp = &self.hyperparams;
        let mut args = vec![self.task.name().to_string(), "--views".into()];
        args.extend(self.views.iter().map(|p| p.display().to_string()));
        if let Some(l) = &self.labels {
            args.extend(["--labels".into(), l.display().to_string()]);
        }
        let mut flag = |name: &str, value: String| {
            args.push(format!("--{name}"));
            args.push(value);
        };
        flag("eta", hp.eta.to_string());
        flag("beta", hp.beta.to_string());
        flag("gamma", hp.gamma.to_string());
        flag("alpha", hp.alpha.to_string());
        flag("c", hp.clusters.to_string());
        flag("k", hp.neighbors.to_string());
        flag("epsilon", hp.epsilon.to_string());
        flag("max-iters", hp.max_iters.to_string());
        if let Some(d) = hp.projected_dim {
            flag("d", d.to_string());
        }
        let mode = match hp.affinity {
            AffinityMode::RowScaled => "row",
            AffinityMode::Symmetric => "sym",
        };
        flag("affinity", mode.into());
        flag(
            "percent",
            self.percents.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        );
        flag("seed", self.seed.to_string());
        flag("out", self.out.display().to_string());
        if self.load.transpose {
            args.push("--transpose".into());
        }
        if self.load.header {
            args.push("--header".into());
        }
        args
    }
}

/// How a subcommand finished; maps to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    IterationCap,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Done => 0,
            Outcome::IterationCap => 2,
        }
    }
}

/// Sizes the global rayon pool from `MVFSGL_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MVFSGL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("MVFSGL_THREADS must be a positive integer, got {raw:?}")))?;
    // an already-initialized pool keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Executes a parsed command line, writing reports to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut impl std::io::Write) -> Result<Outcome> {
    let (task, args) = match &cli.command {
        Command::Fit(a) => (Task::Fit, a),
        Command::Select(a) => (Task::Select, a),
        Command::Cluster(a) => (Task::Cluster, a),
        Command::Eval(e) => {
            let row = cmd_eval(&e.pred, &e.truth)?;
            write!(stdout, "{row}").map_err(|e| io_error(Path::new("<stdout>"), e))?;
            return Ok(Outcome::Done);
        }
    };
    let config = RunConfig::from_args(task, args)?;
    if args.dump_config {
        let mut text = String::new();
        for a in config.to_args() {
            let _ = writeln!(text, "{a}");
        }
        write!(stdout, "{text}").map_err(|e| io_error(Path::new("<stdout>"), e))?;
        return Ok(Outcome::Done);
    }
    match task {
        Task::Fit => cmd_fit(&config),
        Task::Select => cmd_select(&config),
        Task::Cluster => cmd_cluster(&config),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load(config: &RunConfig) -> Result<MultiViewDataset> {
    let raw = load_dataset(&config.views, config.labels.as_deref(), config.load)?;
    Ok(minmax_normalize(&raw))
}

fn dataset_name(ds: &MultiViewDataset) -> String {
    ds.view_names()
        .map(|n| n.join("+"))
        .unwrap_or_else(|| "dataset".into())
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_fit(dir: &Path, result: &FitResult) -> Result<()> {
    let state = &result.state;
    write_matrix_csv(dir.join("S.csv"), &state.s)?;
    write_matrix_csv(dir.join("H.csv"), &state.h)?;
    write_matrix_csv(
        dir.join("delta.csv"),
        &crate::DMatrix::from_row_slice(1, state.delta.len(), &state.delta),
    )?;
    for (v, w) in state.w.iter().enumerate() {
        write_matrix_csv(dir.join(format!("W_{}.csv", v + 1)), w)?;
    }
    result.trace.write_csv(dir.join("trace.csv"))
}

fn fit_and_write(config: &RunConfig, ds: &MultiViewDataset) -> Result<FitResult> {
    prepare_out(&config.out)?;
    let result = fit(ds, &config.hyperparams, config.seed)?;
    write_fit(&config.out, &result)?;
    Ok(result)
}

fn outcome(result: &FitResult) -> Outcome {
    if result.converged {
        Outcome::Done
    } else {
        Outcome::IterationCap
    }
}

pub fn cmd_fit(config: &RunConfig) -> Result<Outcome> {
    let ds = load(config)?;
    Ok(outcome(&fit_and_write(config, &ds)?))
}

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub dataset: String,
    pub task: String,
    pub run: String,
    pub nmi: f64,
    pub acc: f64,
    pub purity: f64,
}

pub const METRICS_HEADER: &str = "dataset,task,run,nmi,acc,pur";

impl MetricsRow {
    pub fn evaluate(dataset: &str, task: &str, run: String, pred: &[usize], truth: &[usize]) -> Result<Self> {
        Ok(Self {
            dataset: dataset.into(),
            task: task.into(),
            run,
            nmi: nmi(pred, truth)?,
            acc: acc(pred, truth)?,
            purity: purity(pred, truth)?,
        })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.dataset, self.task, self.run, self.nmi, self.acc, self.purity
        )
    }
}

/// Mean and population standard deviation rows over `runs`.
pub fn summarize(runs: &[MetricsRow]) -> [MetricsRow; 2] {
    let n = runs.len() as f64;
    let stats = |f: fn(&MetricsRow) -> f64| {
        let mean = runs.iter().map(f).sum::<f64>() / n;
        let var = runs.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (nm, ns) = stats(|r| r.nmi);
    let (am, as_) = stats(|r| r.acc);
    let (pm, ps) = stats(|r| r.purity);
    let base = |run: &str, nmi, acc, purity| MetricsRow {
        dataset: runs[0].dataset.clone(),
        task: runs[0].task.clone(),
        run: run.into(),
        nmi,
        acc,
        purity,
    };
    [base("mean", nm, am, pm), base("std", ns, as_, ps)]
}

fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut text = String::from(METRICS_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// `SELECT_RUNS` k-means runs on the stacked views, seeded `seed, seed+1, …`.
pub fn kmeans_runs(
    ds: &MultiViewDataset,
    clusters: usize,
    seed: u64,
    dataset: &str,
    task: &str,
) -> Result<Vec<MetricsRow>> {
    let truth = ds
        .labels()
        .ok_or_else(|| Error::InvalidArgument("evaluation needs ground-truth labels".into()))?;
    let x = stack_views(ds.views());
    (0..SELECT_RUNS)
        .map(|run| {
            let km = kmeans(
                &x,
                clusters,
                &KMeansOptions {
                    seed: seed.wrapping_add(run as u64),
                    ..KMeansOptions::default()
                },
            )?;
            MetricsRow::evaluate(dataset, task, run.to_string(), &km.assignment.labels, truth)
        })
        .collect()
}

pub fn cmd_select(config: &RunConfig) -> Result<Outcome> {
    let ds = load(config)?;
    let result = fit_and_write(config, &ds)?;
    let rankings = feature_scores(&result.state);
    for (v, r) in rankings.iter().enumerate() {
        let path = config.out.join(format!("ranking_{}.csv", v + 1));
        let mut text = String::from("rank,feature,score\n");
        for (rank, &f) in r.order.iter().enumerate() {
            let _ = writeln!(text, "{},{},{}", rank + 1, f, r.scores[f]);
        }
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    }
    let name = dataset_name(&ds);
    let mut rows = Vec::new();
    for &p in &config.percents {
        let reduced = select_features(&ds, &rankings, p)?;
        let dir = config.out.join(format!("selected_{p}"));
        prepare_out(&dir)?;
        for (v, x) in reduced.views().iter().enumerate() {
            write_matrix_csv(dir.join(format!("X_{}.csv", v + 1)), x)?;
        }
        if ds.labels().is_some() {
            let task = format!("select_{p}");
            let runs = kmeans_runs(&reduced, config.hyperparams.clusters, config.seed, &name, &task)?;
            let summary = summarize(&runs);
            rows.extend(runs);
            rows.extend(summary);
        }
    }
    if !rows.is_empty() {
        write_metrics(&config.out.join("metrics.csv"), &rows)?;
    }
    Ok(outcome(&result))
}

pub fn cmd_cluster(config: &RunConfig) -> Result<Outcome> {
    let ds = load(config)?;
    let result = fit_and_write(config, &ds)?;
    let assignment = spectral_cluster(&result.state.s, config.hyperparams.clusters, config.seed)?;
    write_labels(config.out.join("labels.txt"), &assignment.labels)?;
    if let Some(truth) = ds.labels() {
        let row = MetricsRow::evaluate(&dataset_name(&ds), "cluster", "0".into(), &assignment.labels, truth)?;
        write_metrics(&config.out.join("metrics.csv"), &[row])?;
    }
    Ok(outcome(&result))
}

/// Header and one row of NMI, ACC and purity.
pub fn cmd_eval(pred: &Path, truth: &Path) -> Result<String> {
    let p = read_labels(pred)?;
    let t = read_labels(truth)?;
    Ok(format!(
        "nmi,acc,pur\n{},{},{}\n",
        nmi(&p, &t)?,
        acc(&p, &t)?,
        purity(&p, &t)?
    ))
}
