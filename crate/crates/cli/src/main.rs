use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wegscheider::ctmc::DEFAULT_TOLERANCE;
use wegscheider::explorer::{
    explore, CheckReport, EncodedState, EncodingSource, OracleSource, TruncatedChain, DEFAULT_STATE_CAP,
};
use wegscheider::pcp::{compile, is_success, solve_pcp_bounded, EncodingParams, PcpInstance};
use wegscheider::simulator::{
    petri_experiment, simulate, Budget, PetriModel, RuleSystem, SimulationReport, SsaConfig, StopFn,
};
use wegscheider::sitegraph::{parse_model, RateMode};

#[derive(Parser)]
#[command(name = "wegscheider", version, about = "Energy functions and cycle checks for rule-based CTMCs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a PCP instance into a rule model.
    Compile(CompileArgs),
    /// List every PCP solution up to a length.
    SolvePcp(SolveArgs),
    /// Explore the truncated chain of an encoding.
    Explore(ExploreArgs),
    /// Explore the extended encoding and report energy, census and partition sums.
    Check(CheckArgs),
    /// Simulate a rule model or an encoding.
    Simulate(SimulateArgs),
    /// Simulate the two-species Petri example against its closed form.
    Petri(PetriArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// PCP instance JSON.
    #[arg(long)]
    instance: PathBuf,
    /// Encoding parameters JSON [default: epsilon 1.5, e_switch 1, base_rate 1].
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// Largest number of non-dummy logged indices explored.
    #[arg(long, default_value_t = 4)]
    bound: usize,
    /// Abort exploration beyond this many states.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Threads for frontier expansion; 0 uses every core, 1 runs sequentially.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    input: InstanceArgs,
    /// Include the erase and restart rules.
    #[arg(long)]
    extended: bool,
    /// Model file; printed to stdout when absent.
    #[arg(short)]
    o: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// PCP instance JSON.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 8)]
    max_len: usize,
    /// Solutions JSON.
    #[arg(short)]
    o: Option<PathBuf>,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[command(flatten)]
    bound: BoundArgs,
    /// Include the erase and restart rules.
    #[arg(long)]
    extended: bool,
    /// Use the direct word-level semantics instead of the rule engine.
    #[arg(long)]
    oracle: bool,
    /// embedding_weighted or unit_rate.
    #[arg(long, default_value = "embedding_weighted")]
    rate_mode: RateMode,
    /// Chain JSON.
    #[arg(short)]
    o: Option<PathBuf>,
    /// Graphviz file with rules and energy differences on edges.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[command(flatten)]
    bound: BoundArgs,
    /// Absolute tolerance on cycle energy sums.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    /// Report JSON.
    #[arg(short)]
    o: Option<PathBuf>,
    /// Graphviz file of the explored chain.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Census CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Rule model file; its first %init graph (or --init) is the start state.
    #[arg(long, conflicts_with_all = ["instance", "params", "extended", "stop_at_solution"], required_unless_present = "instance")]
    model: Option<PathBuf>,
    /// Named %init graph of --model.
    #[arg(long, requires = "model")]
    init: Option<String>,
    /// PCP instance JSON; simulates its encoding.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, requires = "instance")]
    params: Option<PathBuf>,
    #[arg(long, requires = "instance")]
    extended: bool,
    /// Stop on a checking state whose log is a solution.
    #[arg(long)]
    stop_at_solution: bool,
    /// Event budget.
    #[arg(long, conflicts_with = "time", required_unless_present = "time")]
    events: Option<u64>,
    /// Simulated-time budget.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// embedding_weighted or unit_rate.
    #[arg(long, default_value = "embedding_weighted")]
    rate_mode: RateMode,
    /// Report JSON.
    #[arg(short)]
    o: Option<PathBuf>,
    /// Occupancy CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PetriArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    e1: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    e2: f64,
    #[arg(long, default_value_t = 1_000_000)]
    events: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// unit_rate or embedding_weighted.
    #[arg(long, default_value = "unit_rate")]
    rate_mode: RateMode,
    /// Closed-form grid size in A.
    #[arg(long, default_value_t = 10)]
    n_max: usize,
    /// Closed-form grid size in B.
    #[arg(long, default_value_t = 10)]
    m_max: usize,
    /// Edges reported in the flux table.
    #[arg(long, default_value_t = 10)]
    top_edges: usize,
    /// Report JSON.
    #[arg(short)]
    o: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    if let Some(path) = path {
        write(path, &(serde_json::to_string_pretty(value)? + "\n"))?;
    }
    Ok(())
}

fn load_instance(path: &Path) -> Result<PcpInstance> {
    Ok(PcpInstance::from_json_str(&read(path)?)?)
}

fn load(input: &InstanceArgs) -> Result<(PcpInstance, EncodingParams)> {
    let x = load_instance(&input.instance)?;
    let params = match &input.params {
        Some(p) => EncodingParams::from_json_str(&read(p)?)?,
        None => EncodingParams::default(),
    };
    for w in params.validate(&x)? {
        eprintln!("warning: {w}");
    }
    Ok((x, params))
}

fn threads(b: &BoundArgs) -> Result<bool> {
    if b.threads != 1 {
        rayon::ThreadPoolBuilder::new().num_threads(b.threads).build_global()?;
    }
    Ok(b.threads != 1)
}

fn summarize_chain(t: &TruncatedChain) {
    println!(
        "{} states, {} edges at bound {} ({} frontier states{})",
        t.num_states(),
        t.graph.num_edges(),
        t.bound,
        t.frontier,
        if t.complete { "" } else { ", state cap reached" }
    );
    println!("{} success states, {} anomalies", t.successes.len(), t.anomalies.len());
}

fn cmd_compile(a: CompileArgs) -> Result<()> {
    let (x, params) = load(&a.input)?;
    let enc = compile(&x, &params, a.extended)?;
    match &a.o {
        Some(path) => {
            write(path, &enc.model_text())?;
            println!("{} directed rules written to {}", enc.model.rules.len(), path.display());
        }
        None => print!("{}", enc.model_text()),
    }
    Ok(())
}

#[derive(Serialize)]
struct Solutions {
    max_len: usize,
    solutions: Vec<Vec<usize>>,
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let x = load_instance(&a.instance)?;
    let solutions = solve_pcp_bounded(&x, a.max_len);
    println!("{} solutions of length at most {}", solutions.len(), a.max_len);
    for s in &solutions {
        println!("  {s:?}  {}", x.spell(&x.top_concat(s)));
    }
    write_json(a.o.as_deref(), &Solutions { max_len: a.max_len, solutions })
}

fn cmd_explore(a: ExploreArgs) -> Result<()> {
    let (x, params) = load(&a.input)?;
    let parallel = threads(&a.bound)?;
    let (bound, cap) = (a.bound.bound, a.bound.state_cap);
    let t = if a.oracle {
        explore(&OracleSource { instance: &x, params, extended: a.extended }, bound, cap, parallel)?
    } else {
        let enc = compile(&x, &params, a.extended)?;
        explore(&EncodingSource { encoding: &enc, rate_mode: a.rate_mode }, bound, cap, parallel)?
    };
    summarize_chain(&t);
    if let Some(dot) = &a.dot {
        write(dot, &t.to_dot())?;
    }
    write_json(a.o.as_deref(), &t.to_json())
}

fn cmd_check(a: CheckArgs) -> Result<()> {
    let (x, params) = load(&a.input)?;
    let parallel = threads(&a.bound)?;
    let (report, t) = CheckReport::run(&x, &params, a.bound.bound, a.bound.state_cap, parallel, a.tol)?;
    summarize_chain(&t);
    let eq = &report.equilibrium;
    println!("verdict: {}", eq.verdict);
    if let Some(w) = &eq.witness {
        println!("witness: {} steps, energy sum {}, through restart: {}", w.steps.len(), w.energy_sum, w.traverses_restart);
        for s in &w.steps {
            println!("  {} -> {}  [{}]  dE {}", s.from, s.to, s.rules.join(","), s.delta_e);
        }
    }
    if let Some(d) = eq.max_deviation_from_n_epsilon {
        println!("max |E - n eps - c|: {d} ({} in the forward region)", eq.max_deviation_forward_region.unwrap_or(0.0));
    }
    let counts: Vec<usize> = report.census.rows.iter().map(|r| r.count).collect();
    println!("census: {counts:?}{}", if report.census.any_exceeds { " (exceeds (n+1)|X|^n)" } else { "" });
    let tail = report.partition.tail_bound.map_or("infinite".to_string(), |t| format!("{t:.6}"));
    println!("partition: {:?}, tail bound {tail}", report.partition.verdict);
    if let Some(dot) = &a.dot {
        write(dot, &t.to_dot())?;
    }
    if let Some(csv) = &a.csv {
        write(csv, &report.census.to_csv())?;
    }
    write_json(a.o.as_deref(), &report)
}

fn occupancy_csv(r: &SimulationReport) -> String {
    let mut out = String::from("state,time,fraction\n");
    for row in &r.occupancy {
        out.push_str(&format!("\"{}\",{},{}\n", row.state.replace('"', "\"\""), row.time, row.fraction));
    }
    out
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let budget = match (a.events, a.time) {
        (Some(n), _) => Budget::Events(n),
        (None, Some(t)) => Budget::Time(t),
        (None, None) => unreachable!("clap requires a budget"),
    };
    let cfg = SsaConfig { budget, seed: a.seed, record_events: false };
    let report = if let Some(path) = &a.model {
        let mut model = parse_model(&read(path)?)?;
        if let Some(name) = &a.init {
            let i = model.graphs.iter().position(|(n, _)| n == name).ok_or_else(|| anyhow!("no %init graph {name:?}"))?;
            model.graphs.swap(0, i);
        }
        simulate(&RuleSystem::new(&model, a.rate_mode), &cfg, None)?
    } else {
        let input = InstanceArgs { instance: a.instance.clone().expect("clap requires --instance"), params: a.params.clone() };
        let (x, params) = load(&input)?;
        let enc = compile(&x, &params, a.extended)?;
        let src = EncodingSource { encoding: &enc, rate_mode: a.rate_mode };
        let solved = |s: &EncodedState| enc.decode(&s.graph).is_some_and(|d| is_success(&d) && x.is_solution(&d.log));
        let stop: Option<StopFn<EncodedState>> = if a.stop_at_solution { Some(&solved) } else { None };
        simulate(&src, &cfg, stop)?
    };
    println!(
        "{} events, simulated time {:.4}, {} states visited{}{}",
        report.events,
        report.total_time,
        report.occupancy.len(),
        if report.stopped { ", stopped" } else { "" },
        if report.deadlocked { ", deadlocked" } else { "" }
    );
    println!("final state: {}", report.final_state);
    for row in report.occupancy.iter().take(5) {
        println!("  {:.4}  {}", row.fraction, row.state);
    }
    if let Some(csv) = &a.csv {
        write(csv, &occupancy_csv(&report))?;
    }
    write_json(a.o.as_deref(), &report)
}

fn cmd_petri(a: PetriArgs) -> Result<()> {
    let model = PetriModel::new(a.e1, a.e2, a.rate_mode);
    let r = petri_experiment(&model, a.events, a.seed, a.n_max, a.m_max, a.top_edges)?;
    println!("{} events, simulated time {:.2}", r.events, r.total_time);
    println!("p(0,0): empirical {:.5}, closed form {:.5}", r.p00_empirical, r.p00_closed_form);
    println!("total variation {:.5} (truncated mass {:.2e})", r.total_variation, r.truncated_mass);
    println!("max flux asymmetry {:.2e} over {} edges", r.max_flux_asymmetry, r.flux.len());
    write_json(a.o.as_deref(), &r)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::SolvePcp(a) => cmd_solve(a),
        Command::Explore(a) => cmd_explore(a),
        Command::Check(a) => cmd_check(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Petri(a) => cmd_petri(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
