use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use eidarp::oracle::{brute_force_solve, verify, ExactLimits};
use eidarp::search::{best_of, run_many, Operator, SearchConfig};
use eidarp::solution::kpis;
use eidarp::toolkit::{self, Axis, GeneratorConfig, Layout, SweepRow};
use eidarp::{Instance, KpiReport, Problem, Solution};

#[derive(Parser)]
#[command(
    name = "eidarp",
    version,
    about = "Electric dial-a-ride routing integrated with timetabled transit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random instance.
    Generate(GenerateArgs),
    /// Write the departure-expanded transit graph and its transit pairs as CSV.
    Expand {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance with the large neighbourhood search.
    Solve(SolveArgs),
    /// Verify a solution against every constraint; exit 1 on violations.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// KPI row of a solution as CSV.
    Kpi {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance under a range of values of one parameter.
    Sweep(SweepArgs),
    /// Independent verification or exhaustive solution of a tiny instance.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator configuration (JSON); missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    customers: Option<usize>,
    #[arg(long)]
    fleet: Option<usize>,
    /// none, one, two-crossed, three or four
    #[arg(long)]
    layout: Option<Layout>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Iterations per run; defaults to the instance's n_iter.
    #[arg(long)]
    iters: Option<usize>,
    /// JSON object overriding fields of the instance parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Operator to switch off, e.g. r_regret; repeatable.
    #[arg(long = "disable-op")]
    disable_op: Vec<Operator>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Best solution (JSON); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    kpi_csv: Option<PathBuf>,
    /// Best objective after every iteration, one column per run.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Base instance; generated from --config and --instance-seed when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
    /// phi, lambda2, gamma, fleet, bus_speed, init_soc, headway or n_lines
    #[arg(long)]
    axis: Axis,
    /// a:step:b or a comma-separated list
    #[arg(long)]
    values: String,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "mode")]
struct OracleMode {
    /// Solution to verify.
    #[arg(long)]
    verify: Option<PathBuf>,
    /// Solve the instance exhaustively.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    mode: OracleMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure that maps to exit code 1.
#[derive(Debug)]
struct Infeasible(String);

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Infeasible {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EIDARP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd) -> anyhow::Result<()> {
    match cmd {
        Cmd::Generate(a) => generate(a),
        Cmd::Expand { instance, out } => {
            let prob = load_problem(&instance)?;
            emit(out.as_deref(), prob.graph.to_csv().as_bytes())
        }
        Cmd::Solve(a) => solve(a),
        Cmd::Check { instance, solution } => {
            let prob = load_problem(&instance)?;
            let sol = load_solution(&solution)?;
            let rep = verify(&prob, &sol);
            if rep.is_feasible() {
                println!("ok: objective {:.6}", rep.objective);
                Ok(())
            } else {
                for f in &rep.findings {
                    println!("{f}");
                }
                Err(Infeasible(format!("{} violation(s)", rep.findings.len())).into())
            }
        }
        Cmd::Kpi {
            instance,
            solution,
            out,
        } => {
            let prob = load_problem(&instance)?;
            let sol = load_solution(&solution)?;
            let k = kpis(&sol, &prob);
            emit(
                out.as_deref(),
                &kpi_csv(&[("best".into(), sol.seed, sol.objective, k)])?,
            )
        }
        Cmd::Sweep(a) => sweep(a),
        Cmd::Oracle(a) => oracle(a),
    }
}

fn load_problem(path: &Path) -> anyhow::Result<Problem> {
    let inst = Instance::load(path).map_err(|e| Infeasible(format!("{}: {e}", path.display())))?;
    Ok(Problem::new(inst))
}

fn load_solution(path: &Path) -> anyhow::Result<Solution> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Solution::from_json(&text).map_err(|e| Infeasible(format!("{}: {e}", path.display())))?)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn generator_config(path: Option<&Path>) -> anyhow::Result<GeneratorConfig> {
    let cfg: GeneratorConfig = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| Infeasible(format!("{}: {e}", p.display())))?
        }
        None => GeneratorConfig::default(),
    };
    Ok(cfg)
}

fn generate(a: GenerateArgs) -> anyhow::Result<()> {
    let mut cfg = generator_config(a.config.as_deref())?;
    if let Some(n) = a.customers {
        cfg.n_customers = n;
    }
    if a.fleet.is_some() {
        cfg.fleet = a.fleet;
    }
    if let Some(l) = a.layout {
        cfg.layout = l;
    }
    log::info!("generator config: {}", serde_json::to_string(&cfg)?);
    let inst = toolkit::generate(&cfg, a.seed).map_err(|e| Infeasible(e.to_string()))?;
    emit(a.out.as_deref(), inst.to_json().as_bytes())
}

/// Instance with --params applied on top of its own parameters.
fn apply_params(mut inst: Instance, path: Option<&Path>) -> anyhow::Result<Instance> {
    if let Some(p) = path {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let over: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Infeasible(format!("{}: {e}", p.display())))?;
        let serde_json::Value::Object(over) = over else {
            bail!(Infeasible(format!("{}: expected a JSON object", p.display())));
        };
        let mut base = serde_json::to_value(&inst.params)?;
        for (k, v) in over {
            if base.get(&k).is_none() {
                bail!(Infeasible(format!("{}: unknown parameter '{k}'", p.display())));
            }
            base[&k] = v;
        }
        inst.params = serde_json::from_value(base).map_err(|e| Infeasible(format!("{}: {e}", p.display())))?;
    }
    inst.validate().map_err(|e| Infeasible(e.to_string()))?;
    Ok(inst)
}

fn search_config(prob: &Problem, a: &SearchArgs) -> anyhow::Result<SearchConfig> {
    let mut cfg = SearchConfig::from_params(prob.params(), a.seed);
    if let Some(n) = a.iters {
        cfg.n_iter = n;
    }
    cfg.disabled = a.disable_op.iter().copied().collect();
    cfg.validate().map_err(Infeasible)?;
    if a.runs == 0 {
        bail!(Infeasible("--runs must be at least 1".into()));
    }
    log::info!(
        "search: seed {} runs {} jobs {} n_iter {} t_max_factor {} t_red {} xi_max {} alpha_ls {} disabled {:?}",
        cfg.seed,
        a.runs,
        a.jobs,
        cfg.n_iter,
        cfg.t_max_factor,
        cfg.t_red,
        cfg.xi_max,
        cfg.alpha_ls,
        cfg.disabled.iter().map(|o| o.name()).collect::<Vec<_>>()
    );
    Ok(cfg)
}

fn kpi_csv(rows: &[(String, u64, f64, KpiReport)]) -> anyhow::Result<Vec<u8>> {
    let mut header = vec!["run".to_string(), "seed".into(), "objective".into()];
    header.extend(KpiReport::HEADER.iter().map(|s| s.to_string()));
    let recs: Vec<Vec<String>> = rows
        .iter()
        .map(|(run, seed, obj, k)| {
            let mut r = vec![run.clone(), seed.to_string(), format!("{obj:.6}")];
            r.extend(k.row());
            r
        })
        .collect();
    let mut buf = Vec::new();
    toolkit::write_csv(&mut buf, &header, &recs)?;
    Ok(buf)
}

fn solve(a: SolveArgs) -> anyhow::Result<()> {
    let inst = Instance::load(&a.instance).map_err(|e| Infeasible(format!("{}: {e}", a.instance.display())))?;
    let inst = apply_params(inst, a.search.params.as_deref())?;
    log::info!("params: {}", serde_json::to_string(&inst.params)?);
    let prob = Problem::new(inst);
    let cfg = search_config(&prob, &a.search)?;
    let results = run_many(&prob, &cfg, a.search.runs, a.search.jobs);
    let best = best_of(&results).expect("at least one run");
    for r in &results {
        log::info!(
            "run seed {}: initial {:.3} best {:.3}",
            r.best.seed,
            r.initial_objective,
            r.best.objective
        );
    }
    let rep = verify(&prob, &best.best);
    if !rep.is_feasible() {
        for f in &rep.findings {
            eprintln!("{f}");
        }
        bail!(Infeasible("best solution failed verification".into()));
    }
    if let Some(p) = &a.kpi_csv {
        let mut rows: Vec<(String, u64, f64, KpiReport)> = results
            .iter()
            .map(|r| {
                (
                    r.best.seed.to_string(),
                    r.best.seed,
                    r.best.objective,
                    kpis(&r.best, &prob),
                )
            })
            .collect();
        rows.push((
            "best".into(),
            best.best.seed,
            best.best.objective,
            kpis(&best.best, &prob),
        ));
        emit(Some(p), &kpi_csv(&rows)?)?;
    }
    if let Some(p) = &a.trace_csv {
        let header: Vec<String> = std::iter::once("iter".to_string())
            .chain(results.iter().map(|r| format!("seed_{}", r.best.seed)))
            .collect();
        let n = results.iter().map(|r| r.trace.len()).max().unwrap_or(0);
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                std::iter::once((i + 1).to_string())
                    .chain(
                        results
                            .iter()
                            .map(|r| r.trace.get(i).map_or(String::new(), |v| format!("{v:.6}"))),
                    )
                    .collect()
            })
            .collect();
        let mut buf = Vec::new();
        toolkit::write_csv(&mut buf, &header, &rows)?;
        emit(Some(p), &buf)?;
    }
    let mut json = best.best.to_json();
    json.push('\n');
    emit(a.out.as_deref(), json.as_bytes())
}

fn sweep(a: SweepArgs) -> anyhow::Result<()> {
    let gen = generator_config(a.config.as_deref())?;
    let base = match &a.instance {
        Some(p) => Instance::load(p).map_err(|e| Infeasible(format!("{}: {e}", p.display())))?,
        None => toolkit::generate(&gen, a.instance_seed).map_err(|e| Infeasible(e.to_string()))?,
    };
    let base = apply_params(base, a.search.params.as_deref())?;
    let values = toolkit::parse_values(&a.values).map_err(|e| Infeasible(e.to_string()))?;
    let prob = Problem::new(base.clone());
    let cfg = search_config(&prob, &a.search)?;
    log::info!("sweep {} over {:?}", a.axis, values);
    let rows = toolkit::sweep(&base, &gen, a.axis, &values, &cfg, a.search.runs, a.search.jobs)
        .map_err(|e| Infeasible(e.to_string()))?;
    for r in &rows {
        log::info!(
            "{}={} seed {} objective {:.3} ({:.1}s)",
            r.axis,
            r.value,
            r.seed,
            r.objective,
            r.runtime_s
        );
    }
    // runtimes are wall-clock; keep them out of the data file
    let header: Vec<String> = SweepRow::header().into_iter().filter(|h| h != "runtime_s").collect();
    let keep = SweepRow::header().iter().map(|h| h != "runtime_s").collect::<Vec<_>>();
    let recs: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            r.record()
                .into_iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(v, _)| v)
                .collect()
        })
        .collect();
    let mut buf = Vec::new();
    toolkit::write_csv(&mut buf, &header, &recs)?;
    emit(a.out.as_deref(), &buf)
}

fn oracle(a: OracleArgs) -> anyhow::Result<()> {
    let prob = load_problem(&a.instance)?;
    if let Some(sol_path) = &a.mode.verify {
        let sol = load_solution(sol_path)?;
        let rep = verify(&prob, &sol);
        let mut json = serde_json::to_string_pretty(&rep)?;
        json.push('\n');
        emit(a.out.as_deref(), json.as_bytes())?;
        if !rep.is_feasible() {
            bail!(Infeasible(format!("{} violation(s)", rep.findings.len())));
        }
        return Ok(());
    }
    let sol = brute_force_solve(&prob, ExactLimits::default()).map_err(|e| Infeasible(e.to_string()))?;
    log::info!("exact objective {:.6}", sol.objective);
    let mut json = sol.to_json();
    json.push('\n');
    emit(a.out.as_deref(), json.as_bytes())
}
