use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use vista_sbl::glm::{Family, GlmProblem, WorkingExample};
use vista_sbl::hyperprior::HyperPrior;
use vista_sbl::io::{self, FitReport, ResponseColumn};
use vista_sbl::prox::{lattice_min, prox_cost, prox_vc_l1, ProxQuery};
use vista_sbl::sbl::{fit_sbl, SaaDraw};
use vista_sbl::trajectory::{
    lasso_path, map_record, run_trajectory_from, sbl_record, simulate_table, LassoConfig, Mode, SimConfig, TauGrid,
    CREDIBLE_LEVEL,
};
use vista_sbl::vista::{vista_run, Ablation, MapObjective, VistaConfig};
use vista_sbl::{Error, Result};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "vista-sbl", version, about = "Sparse Bayesian lasso and VISTA fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model at a fixed tau and write a JSON report.
    Fit(FitArgs),
    /// Warm-started fits along a tau grid, written as a long-format CSV.
    Trajectory(TrajectoryArgs),
    /// Replicate simulation on the working example, written as metrics JSON.
    Simulate(SimulateArgs),
    /// Evaluate the variable-coefficient l1 proximal operator.
    Prox(ProxArgs),
    /// Repeat a run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExampleKind {
    Working,
    Toy,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long, required_unless_present = "example")]
    data: Option<PathBuf>,
    /// Response column name, or zero-based index.
    #[arg(long, default_value = "y")]
    response: ResponseColumn,
    /// Generate a simulated dataset instead of reading one.
    #[arg(long, value_enum, conflicts_with = "data")]
    example: Option<ExampleKind>,
    /// Seed for the simulated dataset.
    #[arg(long, default_value_t = 0, requires = "example")]
    data_seed: u64,
    /// Also save the simulated dataset to this CSV.
    #[arg(long, requires = "example")]
    dataset_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value = "normal")]
    family: Family,
    #[arg(long, default_value = "half-cauchy:1")]
    prior: HyperPrior,
    #[arg(long, default_value = "sbl")]
    mode: Mode,
    #[arg(long, default_value_t = vista_sbl::trajectory::DEFAULT_MC_SAMPLES)]
    mc_samples: usize,
    /// Required for sbl mode and for simulate.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = VistaConfig::default().max_iter)]
    max_iter: usize,
    #[arg(long, default_value_t = VistaConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value = "full")]
    ablation: Ablation,
    /// Permit priors whose objective is unbounded below.
    #[arg(long)]
    allow_unbounded_prior: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    output: PathBuf,
    /// Optimizer trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrajectoryArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, conflicts_with = "tau_grid", required_unless_present = "tau_grid")]
    tau: Option<f64>,
    /// `max,min,n`: n log-spaced values from max down to min.
    #[arg(long, value_parser = parse_grid)]
    tau_grid: Option<TauGrid>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock time in the metrics (makes output non-reproducible).
    #[arg(long)]
    time: bool,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct ProxArgs {
    #[arg(long, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long)]
    lambda0: f64,
    #[arg(long)]
    sx: f64,
    #[arg(long)]
    slambda: f64,
    /// Also minimize over a 2001 x 2001 lattice as a check.
    #[arg(long)]
    oracle: bool,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_grid(s: &str) -> std::result::Result<TauGrid, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [max, min, n] = parts[..] else {
        return Err(format!("expected max,min,n, got '{s}'"));
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    let n = n.parse::<usize>().map_err(|e| format!("'{n}': {e}"))?;
    TauGrid::new(num(max)?, num(min)?, n).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    /// Arguments after the program name, as given.
    args: Vec<String>,
    seed: Option<u64>,
    outputs: Vec<PathBuf>,
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_manifest(args: &[String], seed: Option<u64>, outputs: Vec<PathBuf>) -> Result<()> {
    let m = Manifest {
        tool: "vista-sbl".into(),
        version: VERSION.into(),
        args: args.to_vec(),
        seed,
        outputs,
    };
    io::write_json(manifest_path(&m.outputs[0]), &m)
}

impl ModelArgs {
    fn vista(&self, tau: f64) -> Result<VistaConfig> {
        let cfg = VistaConfig {
            tau,
            max_iter: self.max_iter,
            tol: self.tol,
            ablation: self.ablation,
            allow_unbounded_prior: self.allow_unbounded_prior,
            ..VistaConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn check(&self, need_seed: bool) -> Result<()> {
        if (need_seed || self.mode == Mode::Sbl) && self.seed.is_none() {
            return Err(Error::Domain(format!("--seed is required for {}", if need_seed { "simulate" } else { "sbl mode" })));
        }
        if self.mode == Mode::Sbl && self.mc_samples < 2 {
            return Err(Error::Domain("--mc-samples must be at least 2".into()));
        }
        if self.mode == Mode::LassoBaseline && self.family != Family::Normal {
            return Err(Error::Domain("lasso-baseline mode needs --family normal".into()));
        }
        if self.mode != Mode::LassoBaseline && !self.prior.is_bounded() && !self.allow_unbounded_prior {
            return Err(Error::UnboundedObjective(format!(
                "prior {} gives an objective unbounded below; pass --allow-unbounded-prior to proceed",
                self.prior
            )));
        }
        Ok(())
    }
}

impl DataArgs {
    fn load(&self, family: Family) -> Result<GlmProblem> {
        match (&self.data, self.example) {
            (Some(path), _) => io::load_csv(path, &self.response, family),
            (None, Some(kind)) => {
                let ex = match kind {
                    ExampleKind::Working => WorkingExample::with_family(family),
                    ExampleKind::Toy => WorkingExample {
                        family,
                        ..WorkingExample::toy()
                    },
                };
                let (prob, _) = ex.generate(self.data_seed)?;
                if let Some(out) = &self.dataset_out {
                    io::save_csv(out, &prob, "y")?;
                }
                Ok(prob)
            }
            (None, None) => Err(Error::Domain("one of --data or --example is required".into())),
        }
    }
}

fn fit(a: &FitArgs, argv: &[String]) -> Result<()> {
    let m = &a.model;
    m.check(false)?;
    let cfg = m.vista(a.tau)?;
    let problem = a.data.load(m.family)?;
    let seed = m.seed.unwrap_or(0);
    let (record, trace) = match m.mode {
        Mode::Map => {
            let fit = vista_run(&MapObjective::new(&problem), &m.prior, &cfg, None)?;
            (map_record(&problem, &fit.state, a.tau, fit.iterations, fit.converged), fit.trace)
        }
        Mode::Sbl => {
            let draw = SaaDraw::for_problem(&problem, m.mc_samples, seed)?;
            let fit = fit_sbl(&problem, &m.prior, &cfg, &draw, None)?;
            let rec = sbl_record(&fit.state, CREDIBLE_LEVEL, fit.iterations, fit.cost, fit.converged)?;
            (rec, fit.trace)
        }
        Mode::LassoBaseline => {
            let lc = LassoConfig {
                max_iter: m.max_iter,
                tol: m.tol,
            };
            (lasso_path(&problem, &[a.tau], &lc, false)?.remove(0), Vec::new())
        }
    };
    let mc = (m.mode == Mode::Sbl).then_some(m.mc_samples);
    let report = FitReport::from_record(&record, m.family, m.prior.to_string(), seed, mc);
    io::write_json(&a.output, &report)?;
    let mut outputs = vec![a.output.clone()];
    if let Some(t) = &a.trace {
        io::write_trace_csv(t, &trace)?;
        outputs.push(t.clone());
    }
    if let Some(d) = &a.data.dataset_out {
        outputs.push(d.clone());
    }
    write_manifest(argv, m.seed, outputs)
}

fn trajectory(a: &TrajectoryArgs, argv: &[String]) -> Result<()> {
    let m = &a.model;
    m.check(false)?;
    let taus = match (a.tau, &a.tau_grid) {
        (Some(t), None) => vec![t],
        (None, Some(g)) => g.points(),
        _ => return Err(Error::Domain("exactly one of --tau and --tau-grid is required".into())),
    };
    for &t in &taus {
        m.vista(t)?;
    }
    let problem = a.data.load(m.family)?;
    let cfg = m.vista(taus[0])?;
    let records = run_trajectory_from(&problem, &m.prior, &taus, m.mode, &cfg, m.seed.unwrap_or(0), m.mc_samples, true)?;
    io::write_trajectory_csv(&a.output, &records)?;
    let mut outputs = vec![a.output.clone()];
    if let Some(d) = &a.data.dataset_out {
        outputs.push(d.clone());
    }
    write_manifest(argv, m.seed, outputs)
}

fn simulate(a: &SimulateArgs, argv: &[String]) -> Result<()> {
    let m = &a.model;
    m.check(true)?;
    let vcfg = m.vista(a.tau)?;
    if a.reps == 0 {
        return Err(Error::Domain("--reps must be at least 1".into()));
    }
    if a.threads == Some(0) {
        return Err(Error::Domain("--threads must be at least 1".into()));
    }
    let mut cfg = SimConfig::new(m.family, m.mode);
    cfg.prior = m.prior;
    cfg.vista = vcfg;
    cfg.mc_samples = m.mc_samples;
    cfg.threads = a.threads;
    cfg.record_time = a.time;
    let metrics = simulate_table(&cfg, a.reps, a.tau, m.seed.unwrap_or(0))?;
    io::write_json(&a.output, &metrics)?;
    write_manifest(argv, m.seed, vec![a.output.clone()])
}

fn prox(a: &ProxArgs, argv: &[String]) -> Result<()> {
    let q = ProxQuery::new(a.x0, a.lambda0, a.sx, a.slambda)?;
    let r = prox_vc_l1(&q);
    let mut out = json!({
        "x0": a.x0,
        "lambda0": a.lambda0,
        "sx": a.sx,
        "slambda": a.slambda,
        "x": r.x_star,
        "lambda": r.lambda_star,
        "tie": r.tie,
        "cost": prox_cost(r.x_star, r.lambda_star, &q)?,
    });
    if r.tie {
        out["alternative"] = json!({
            "x": a.x0,
            "lambda": 0.0,
            "cost": prox_cost(a.x0, 0.0, &q)?,
        });
    }
    if a.oracle {
        // lattice wide enough to hold both the input and the origin
        let xr = 1.0 + 2.0 * a.x0.abs();
        let lr = 1.0 + 2.0 * a.lambda0.abs();
        let lat = lattice_min(&q, -xr, xr, lr, 2001)?;
        let cost = prox_cost(r.x_star, r.lambda_star, &q)?;
        out["oracle"] = json!({
            "x": lat.x,
            "lambda": lat.lambda,
            "cost": lat.cost,
            "x_spacing": lat.x_spacing,
            "lambda_spacing": lat.lambda_spacing,
            "agrees": cost <= lat.cost + 1e-6,
        });
    }
    match &a.output {
        Some(path) => {
            io::write_json(path, &out)?;
            write_manifest(argv, None, vec![path.clone()])
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
    }
}

fn rerun(path: &Path) -> Result<()> {
    let m: Manifest = io::read_json(path)?;
    if m.tool != "vista-sbl" {
        return Err(Error::Data(format!("{} is not a vista-sbl manifest", path.display())));
    }
    if m.version != VERSION {
        eprintln!("warning: manifest written by version {}, running {VERSION}", m.version);
    }
    let cli = parse(&m.args).map_err(|e| Error::Data(format!("manifest arguments do not parse: {e}")))?;
    if matches!(cli.command, Command::Rerun { .. }) {
        return Err(Error::Data("a manifest cannot record a rerun".into()));
    }
    dispatch(&cli, &m.args)
}

fn parse(args: &[String]) -> std::result::Result<Cli, clap::Error> {
    Cli::try_parse_from(std::iter::once("vista-sbl".to_string()).chain(args.iter().cloned()))
}

fn dispatch(cli: &Cli, argv: &[String]) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => fit(a, argv),
        Command::Trajectory(a) => trajectory(a, argv),
        Command::Simulate(a) => simulate(a, argv),
        Command::Prox(a) => prox(a, argv),
        Command::Rerun { manifest } => rerun(manifest),
    }
}

fn report(kind: &str, message: String) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            report("usage", e.to_string().trim_end().to_string());
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), e.to_string());
            ExitCode::FAILURE
        }
    }
}
