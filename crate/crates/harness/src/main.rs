use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dynepi::acceptance;
use dynepi::compare::{compare, read_curve_csv};
use dynepi::config::{preset, Comparison, Engine, ExperimentConfig};
use dynepi::experiments::{infection_times, run_graph_experiment, run_limit_experiment, run_seeds, RunSeeds};
use dynepi::rundir::RunDir;
use dynepi::svg::svg_document;
use dynepi_core::epidemic::{infection_times_csv, DistSpec, EpidemicCurve};
use dynepi_core::generators::{DerConfig, ModelConfig};
use dynepi_core::graph::rooted_ball;
use dynepi_core::limits::{materialize, Dynamics, LimitModel};
use dynepi_core::metrics::{ball_to_text, convergence_diagnostic, diagnostic_csv, empirical_ball_distribution};
use dynepi_core::rng::{derive_seed, tag};

#[derive(Parser)]
#[command(name = "dynepi", version, about = "SIR epidemics on dynamic random graphs and their local limits")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "DYNEPI_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one dynamic graph and write it with its generator statistics.
    Generate {
        #[command(flatten)]
        exp: ExpArgs,
        /// Run index whose graph seed is used.
        #[arg(long, default_value_t = 0)]
        run: u64,
    },
    /// Average epidemic curve over graph realizations.
    Epidemic {
        #[command(flatten)]
        exp: ExpArgs,
        /// Also dump per-vertex infection times of run 0.
        #[arg(long)]
        times: bool,
    },
    /// Epidemic curve of the local limit.
    Limit {
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Run both sides of a comparison (or read two curve files) and report
    /// sup-norm gaps; exits 1 when a gap exceeds the tolerance.
    Compare {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long, default_value_t = 0.03)]
        tolerance: f64,
        /// Compare two existing curve CSV files instead of running.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        curves: Option<Vec<PathBuf>>,
    },
    /// TV distance between empirical ball histograms of growing graphs and
    /// the limit ball law.
    Diagnose {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [500u32, 2000, 8000])]
        sizes: Vec<u32>,
        /// Limit balls sampled for the reference histogram.
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        /// Include edge marks rounded to this step in the ball classes.
        #[arg(long)]
        quantize: Option<f64>,
    },
    /// Run the acceptance suite; exit 0 = all pass, 1 = a failure, 2 = error.
    Accept {
        /// Criteria to run, e.g. `--only 1,5` (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Experiment selection: a preset, a JSON config file, or flags alone
/// (dynamic Erdős–Rényi with its limit); the remaining flags override.
#[derive(Args, Clone)]
struct ExpArgs {
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Published scale for presets (n = 25000, 500 runs).
    #[arg(long, requires = "preset")]
    full_scale: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Horizon T.
    #[arg(long = "horizon", short = 'T')]
    horizon: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Transmission law, e.g. `exp:2`.
    #[arg(long)]
    d_i: Option<DistSpec>,
    /// Recovery law, e.g. `exp:3`.
    #[arg(long)]
    d_r: Option<DistSpec>,
    /// Backward radius / limit depth.
    #[arg(long)]
    radius: Option<u32>,
    #[arg(long, value_parser = ["backward", "forward"])]
    engine: Option<String>,
    /// Use the static counterpart (time-0 snapshot kept ON throughout).
    #[arg(long = "static")]
    static_graph: bool,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    roots_per_run: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExpArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.preset, &self.config) {
            (Some(p), _) => preset(p, self.full_scale)?,
            (None, Some(path)) => ExperimentConfig::load(path)?,
            // flags alone start from the figure 1(a) setting
            (None, None) => ExperimentConfig { name: "der".into(), ..preset("fig1a", false)? },
        };
        if let Some(name) = &self.name {
            cfg.name = name.clone();
        }
        if let Some(n) = self.n {
            match cfg.graph.as_mut() {
                Some(ModelConfig::Der(c) | ModelConfig::AltDer(c)) => c.n = n,
                Some(ModelConfig::Rig(c)) => c.n = n,
                Some(ModelConfig::Cm(_)) => bail!("--n does not apply to a configuration model (set its degrees)"),
                None => bail!("--n needs a graph model"),
            }
        }
        if let Some(gamma) = self.gamma {
            let mut used = false;
            if let Some(ModelConfig::Der(c) | ModelConfig::AltDer(c)) = cfg.graph.as_mut() {
                c.gamma = gamma;
                used = true;
            }
            if let Some(LimitModel::Der { gamma: g, .. }) = cfg.limit.as_mut() {
                *g = gamma;
                used = true;
            }
            if !used {
                bail!("--gamma applies to Erdős–Rényi models only");
            }
        }
        if let Some(t) = self.horizon {
            match cfg.graph.as_mut() {
                Some(ModelConfig::Der(c) | ModelConfig::AltDer(c)) => c.horizon = t,
                Some(ModelConfig::Rig(c)) => c.horizon = t,
                Some(ModelConfig::Cm(c)) => c.horizon = t,
                None => {}
            }
            if let Some(l) = cfg.limit.take() {
                cfg.limit = Some(l.with_horizon(t));
            }
        }
        if let Some(rho) = self.rho {
            cfg.epidemic.rho = rho;
        }
        if let Some(d) = self.d_i {
            cfg.epidemic.d_i = d;
        }
        if let Some(d) = self.d_r {
            cfg.epidemic.d_r = d;
        }
        if self.radius.is_some() {
            cfg.radius = self.radius;
        }
        match self.engine.as_deref() {
            Some("forward") => cfg.engine = Engine::Forward,
            Some("backward") => cfg.engine = Engine::Backward,
            _ => {}
        }
        if self.static_graph {
            cfg.dynamics = Dynamics::Static;
        }
        if let Some(r) = self.runs {
            cfg.runs = r;
        }
        if let Some(r) = self.roots_per_run {
            cfg.limit_roots_per_run = r;
        }
        if let Some(g) = self.grid_points {
            cfg.grid_points = g;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.out.is_some() {
            cfg.output_dir = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run_dir(cfg: &ExperimentConfig, command: &str) -> Result<RunDir> {
    let path = cfg.output_dir.clone().unwrap_or_else(|| Path::new("runs").join(format!("{}-{command}", cfg.name)));
    RunDir::create(&path)
}

fn side_label(cfg: &ExperimentConfig, side: &str) -> String {
    let dynamics = match cfg.dynamics {
        Dynamics::Dynamic => "dynamic",
        Dynamics::Static => "static",
    };
    format!("{dynamics} {side}")
}

fn curve_for(cfg: &ExperimentConfig, graph_side: bool) -> Result<EpidemicCurve> {
    if graph_side {
        run_graph_experiment(cfg)
    } else {
        run_limit_experiment(cfg)
    }
}

fn cmd_generate(exp: &ExpArgs, run: u64) -> Result<ExitCode> {
    let cfg = exp.resolve()?;
    let model = cfg.graph.as_ref().context("generate needs a graph model")?;
    let mut dir = run_dir(&cfg, "generate")?;
    let seeds = RunSeeds::derive(cfg.seed, run);
    let out = model.generate(seeds.graph)?;
    let g = if cfg.dynamics == Dynamics::Static { out.graph.frozen_snapshot(0.0)? } else { out.graph.clone() };
    let comments = vec![format!("model: {}", out.meta.model), format!("seed: {}", seeds.graph)];
    dir.write("graph.txt", &dynepi_core::io::encode_graph(&g, &comments))?;
    dir.write("meta.json", &(serde_json::to_string_pretty(&out.meta)? + "\n"))?;
    if let Some(groups) = &out.groups {
        dir.write("groups.json", &serde_json::to_string(groups)?)?;
    }
    if let Some(nc) = &out.new_connections {
        let mut csv = String::from("v,new_connections\n");
        for (v, c) in nc.iter().enumerate() {
            csv.push_str(&format!("{v},{c}\n"));
        }
        dir.write("new_connections.csv", &csv)?;
    }
    println!("{} vertices, {} union edges -> {}", g.n(), g.edge_count(), dir.path().display());
    dir.finish("generate", &cfg, cfg.seed, vec![seeds])?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_epidemic(exp: &ExpArgs, times: bool) -> Result<ExitCode> {
    let cfg = exp.resolve()?;
    let mut dir = run_dir(&cfg, "epidemic")?;
    let curve = run_graph_experiment(&cfg)?;
    dir.write("curve.csv", &curve.to_csv())?;
    dir.write("curve.svg", &svg_document(&[curve], &[side_label(&cfg, "graph")], &cfg.name)?)?;
    if times {
        let (t, r) = infection_times(&cfg, 0)?;
        dir.write("infection_times.csv", &infection_times_csv(&t, &r))?;
    }
    println!("{} runs -> {}", cfg.runs, dir.path().display());
    dir.finish("epidemic", &cfg, cfg.seed, run_seeds(&cfg))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_limit(exp: &ExpArgs) -> Result<ExitCode> {
    let cfg = exp.resolve()?;
    let mut dir = run_dir(&cfg, "limit")?;
    let curve = run_limit_experiment(&cfg)?;
    dir.write("limit_curve.csv", &curve.to_csv())?;
    dir.write("limit_curve.svg", &svg_document(&[curve], &[side_label(&cfg, "limit")], &cfg.name)?)?;
    println!("{} root samples -> {}", cfg.runs * cfg.limit_roots_per_run, dir.path().display());
    dir.finish("limit", &cfg, cfg.seed, Vec::new())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(exp: &ExpArgs, tolerance: f64, curves: Option<&[PathBuf]>) -> Result<ExitCode> {
    if let Some([a, b]) = curves {
        let read = |p: &PathBuf| -> Result<EpidemicCurve> {
            read_curve_csv(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
                .with_context(|| format!("in {}", p.display()))
        };
        let rep = compare(&read(a)?, &read(b)?, tolerance)?
            .with_labels(&a.display().to_string(), &b.display().to_string());
        println!("{}", rep.summary());
        return Ok(if rep.pass { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let cfg = exp.resolve()?;
    let (a_cfg, b_cfg, graph_side) = match cfg.comparison {
        Comparison::GraphVsLimit => {
            if cfg.graph.is_none() || cfg.limit.is_none() {
                bail!("graph-vs-limit comparison needs both a graph and a limit model");
            }
            (cfg.clone(), cfg.clone(), None)
        }
        Comparison::StaticVsDynamic => {
            (cfg.with_dynamics(Dynamics::Static), cfg.with_dynamics(Dynamics::Dynamic), Some(cfg.graph.is_some()))
        }
    };
    let mut dir = run_dir(&cfg, "compare")?;
    let start = Instant::now();
    let a = curve_for(&a_cfg, graph_side.unwrap_or(true))?;
    let mid = Instant::now();
    let b = curve_for(&b_cfg, graph_side.unwrap_or(false))?;
    let side = |g: bool| if g { "graph" } else { "limit" };
    let labels = [side_label(&a_cfg, side(graph_side.unwrap_or(true))), side_label(&b_cfg, side(graph_side.unwrap_or(false)))];
    let mut rep = compare(&a, &b, tolerance)?.with_labels(&labels[0], &labels[1]);
    rep.meta.elapsed_secs = [(mid - start).as_secs_f64(), mid.elapsed().as_secs_f64()];
    dir.write("a.csv", &a.to_csv())?;
    dir.write("b.csv", &b.to_csv())?;
    dir.write("gaps.csv", &rep.gaps_csv())?;
    dir.write("report.json", &(serde_json::to_string_pretty(&rep)? + "\n"))?;
    dir.write("compare.svg", &svg_document(&[a, b], &labels, &cfg.name)?)?;
    println!("{}", rep.summary());
    let seeds = if cfg.graph.is_some() { run_seeds(&cfg) } else { Vec::new() };
    dir.finish("compare", &cfg, cfg.seed, seeds)?;
    Ok(if rep.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Histograms with more classes than this are written without example files.
const MAX_EXAMPLE_FILES: usize = 500;

fn cmd_diagnose(exp: &ExpArgs, sizes: &[u32], samples: usize, quantize: Option<f64>) -> Result<ExitCode> {
    let cfg = exp.resolve()?;
    let model = cfg.graph.as_ref().context("diagnose needs a graph model")?;
    let limit = cfg.limit.as_ref().context("diagnose needs a limit model")?;
    let r = cfg.radius.context("diagnose needs --radius")?;
    let mut dir = run_dir(&cfg, "diagnose")?;
    let mut graphs = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        let sized = match model.clone() {
            ModelConfig::Der(c) => ModelConfig::Der(DerConfig { n, ..c }),
            ModelConfig::AltDer(c) => ModelConfig::AltDer(DerConfig { n, ..c }),
            ModelConfig::Rig(mut c) => {
                c.n = n;
                ModelConfig::Rig(c)
            }
            ModelConfig::Cm(_) => bail!("diagnose needs a model parametrized by n (der, alt_der or rig)"),
        };
        graphs.push(sized.generate(derive_seed(cfg.seed, tag::RUN_GRAPH, k as u64))?.graph.union_graph());
    }
    let with_marks = quantize.is_some();
    let limit_ball = |seed: u64| {
        let tree = materialize(limit, None, r, seed, false)?;
        rooted_ball(&tree.union_graph(), 0, r, with_marks)
    };
    let rows = convergence_diagnostic(&graphs, limit_ball, r, samples, cfg.seed, quantize)?;
    dir.write("diagnostic.csv", &diagnostic_csv(&rows))?;
    for g in &graphs {
        let h = empirical_ball_distribution(g, r, quantize)?;
        let name = format!("histogram_n{}", g.n());
        let examples = h.classes.len() <= MAX_EXAMPLE_FILES;
        let prefix = format!("{name}_balls/class_");
        dir.write(&format!("{name}.csv"), &h.to_csv(examples.then_some(prefix.as_str())))?;
        if examples {
            for (k, c) in h.classes.iter().enumerate() {
                if let Some(ball) = &c.example {
                    dir.write(&format!("{prefix}{k}.txt"), &ball_to_text(ball)?)?;
                }
            }
        }
    }
    for row in &rows {
        println!("n={} r={}: TV {:.4} (se {:.4})", row.n, row.r, row.tv_distance, row.se);
    }
    dir.finish("diagnose", &cfg, cfg.seed, Vec::new())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_accept(only: &[u8], out: Option<&Path>) -> Result<ExitCode> {
    if let Some(bad) = only.iter().find(|&&c| !(1..=10).contains(&c)) {
        bail!("no criterion {bad}; criteria are numbered 1 to 10");
    }
    let lines = acceptance::run(only, |line| println!("{}", line.render()));
    let code = acceptance::exit_code(&lines);
    if let Some(out) = out {
        let mut dir = RunDir::create(out)?;
        let text: String = lines.iter().map(|l| l.render() + "\n").collect();
        dir.write("acceptance.txt", &text)?;
        dir.finish("accept", &serde_json::json!({ "only": only }), 0, Vec::new())?;
    }
    Ok(ExitCode::from(code as u8))
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring thread pool")?;
    }
    match &cli.command {
        Command::Generate { exp, run } => cmd_generate(exp, *run),
        Command::Epidemic { exp, times } => cmd_epidemic(exp, *times),
        Command::Limit { exp } => cmd_limit(exp),
        Command::Compare { exp, tolerance, curves } => cmd_compare(exp, *tolerance, curves.as_deref()),
        Command::Diagnose { exp, sizes, samples, quantize } => cmd_diagnose(exp, sizes, *samples, *quantize),
        Command::Accept { only, out } => cmd_accept(only, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
