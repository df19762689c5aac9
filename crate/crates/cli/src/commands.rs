use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bbspan::generate::{generate, GenParams, Kind};
use bbspan::instance::{solution_cost, validate_instance};
use bbspan::junction::{default_height, min_density_junction_tree, JunctionOptions};
use bbspan::oracle::{brute_force_optimum, OracleOptions};
use bbspan::rcsp::{self, RcspOptions, RcspQuery, ResourceGraph};
use bbspan::solvers::{solve, Algorithm, SolverConfig};
use bbspan::{Error, ExactInstance, Rational, Scalar, Seed};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bench::{self, Suite};
use crate::doc::{
    from_json, to_json, CapsDoc, GeneratorDoc, InstanceDocument, Metadata, ReportDocument, SolutionDoc, SolverDoc, StagesDoc, TimingDoc, Q,
};
use crate::verify::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_CAP: i32 = 5;
pub const EXIT_VERIFY: i32 = 6;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(String),
    Verify(Vec<String>),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(Error::Invalid(_)) => EXIT_USAGE,
            Failure::Core(Error::Validation(_)) => EXIT_VALIDATION,
            Failure::Core(Error::Infeasible(_)) => EXIT_INFEASIBLE,
            Failure::Core(Error::CapExceeded(_)) => EXIT_CAP,
            Failure::Core(Error::Internal(_)) | Failure::Io(_) => EXIT_INTERNAL,
            Failure::Verify(_) => EXIT_VERIFY,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Io(m) => m.clone(),
            Failure::Verify(diffs) => format!("verification failed:\n  {}", diffs.join("\n  ")),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(name = "bbspan", version, about = "Buy-at-bulk spanners with per-pair distance budgets")]
pub struct Cli {
    /// Worker threads for root and bench fan-out (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a random instance document.
    Generate(GenerateArgs),
    /// Route every pair and write a report.
    Solve(SolveArgs),
    /// Answer one resource-constrained shortest path query.
    Rcsp(RcspArgs),
    /// Find one minimum-density junction tree.
    Junction(JunctionArgs),
    /// Exact optimum by enumeration, written as a report.
    Oracle(OracleArgs),
    /// Recompute every number in a report.
    Verify(VerifyArgs),
    /// Sweep generated instances and algorithms.
    Bench(BenchArgs),
}

fn parse_kind(text: &str) -> std::result::Result<Kind, String> {
    Kind::parse(text).ok_or_else(|| format!("unknown kind {text:?}; expected one of {}", kind_names()))
}

fn kind_names() -> String {
    Kind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
}

fn parse_algo(text: &str) -> std::result::Result<Algorithm, String> {
    Algorithm::parse(text).ok_or_else(|| format!("unknown algorithm {text:?}; expected n45, k or single-source"))
}

#[derive(Args, Debug, Clone)]
pub struct GenParamArgs {
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 0.35)]
    pub edge_probability: f64,
    #[arg(long, default_value_t = 5)]
    pub max_length: i64,
    #[arg(long, default_value_t = 10)]
    pub max_sigma: i64,
    #[arg(long, default_value_t = 3)]
    pub max_delta: i64,
    #[arg(long, default_value_t = 1)]
    pub max_demand: u64,
    #[arg(long, default_value_t = 1)]
    pub denominator: i64,
    #[arg(long, default_value_t = 0.5)]
    pub slack: f64,
    /// Hub count (hub-planted) or backbone length (backbone-planted).
    #[arg(long, default_value_t = 4)]
    pub hubs: usize,
}

impl GenParamArgs {
    fn params(&self) -> GenParams {
        GenParams {
            n: self.n,
            k: self.k,
            edge_probability: self.edge_probability,
            max_length: self.max_length,
            max_sigma: self.max_sigma,
            max_delta: self.max_delta,
            max_demand: self.max_demand,
            denominator: self.denominator,
            slack: self.slack,
            hubs: self.hubs,
        }
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_kind, default_value = "random")]
    pub kind: Kind,
    #[command(flatten)]
    pub params: GenParamArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CapArgs {
    /// Rejected τ guesses before giving up.
    #[arg(long, default_value_t = 40)]
    pub max_doublings: usize,
    #[arg(long, default_value_t = 200_000)]
    pub max_tree_nodes: usize,
    #[arg(long, default_value_t = 4096)]
    pub max_layers: i64,
    #[arg(long, default_value_t = 2_000_000)]
    pub max_patterns: usize,
    #[arg(long, default_value_t = 40_000_000)]
    pub max_cells: usize,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_parser = parse_algo, default_value = "k")]
    pub algo: Algorithm,
    #[arg(long, default_value = "1/2")]
    pub theta: Q,
    #[arg(long, default_value = "1/2")]
    pub epsilon: Q,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed τ instead of the doubling search (n45 only).
    #[arg(long)]
    pub tau: Option<Q>,
    /// Junction-tree height; defaults to max(2, ⌈1/ε⌉).
    #[arg(long)]
    pub h: Option<usize>,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RcspMode {
    /// Budgets relaxed by (1+ε_i); cost at most the strict optimum.
    Approx,
    /// Exact optimum for integral consumptions.
    Exact,
    /// Integral dimensions exact, the last one relaxed by (1+ζ).
    OneRational,
}

#[derive(Args, Debug)]
pub struct RcspArgs {
    /// Query document; see the README for the schema.
    #[arg(long, conflicts_with_all = ["instance", "pair"])]
    pub query: Option<PathBuf>,
    /// Build the query from a pair of an instance: cost σ + Dem·δ, one
    /// length resource with budget Dis.
    #[arg(long, requires = "pair")]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub pair: Option<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: RcspMode,
    /// Tolerance for every dimension in approx mode, overriding the document.
    #[arg(long)]
    pub epsilon: Option<Q>,
    #[arg(long, default_value = "1/10")]
    pub zeta: Q,
    #[arg(long, default_value_t = 2_000_000)]
    pub max_patterns: usize,
    #[arg(long, default_value_t = 40_000_000)]
    pub max_cells: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct JunctionArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "1/2")]
    pub theta: Q,
    #[arg(long, default_value = "1/2")]
    pub epsilon: Q,
    #[arg(long)]
    pub h: Option<usize>,
    /// Only try these roots (repeatable).
    #[arg(long)]
    pub root: Vec<usize>,
    /// Pairs to cover, comma separated (default: all).
    #[arg(long, value_delimiter = ',')]
    pub pairs: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200_000)]
    pub max_tree_nodes: usize,
    #[arg(long, default_value_t = 4096)]
    pub max_layers: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "1/2")]
    pub theta: Q,
    #[arg(long, default_value_t = 200_000)]
    pub max_paths: usize,
    #[arg(long, default_value_t = 200_000_000)]
    pub max_nodes: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_kind, value_delimiter = ',', default_value = "random")]
    pub kinds: Vec<Kind>,
    /// Vertex counts, comma separated.
    #[arg(long = "sizes", value_delimiter = ',', default_value = "6")]
    pub sizes: Vec<usize>,
    /// Pair counts, comma separated.
    #[arg(long = "pairs", value_delimiter = ',', default_value = "2")]
    pub pairs: Vec<usize>,
    /// Instances per (kind, size, pairs) cell.
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    #[arg(long, value_parser = parse_algo, value_delimiter = ',', default_value = "k")]
    pub algos: Vec<Algorithm>,
    #[arg(long, default_value = "1/2")]
    pub theta: Q,
    #[arg(long, default_value = "1/2")]
    pub epsilon: Q,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the brute-force oracle and the ratio column.
    #[arg(long)]
    pub no_oracle: bool,
    /// Also write the table as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub params: GenParamArgs,
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn load_instance(path: &Path) -> std::result::Result<ExactInstance, Failure> {
    let doc: InstanceDocument = from_json(&read(path)?)?;
    Ok(doc.to_instance()?)
}

fn validated(path: &Path) -> std::result::Result<ExactInstance, Failure> {
    let inst = load_instance(path)?;
    validate_instance(&inst).into_result()?;
    Ok(inst)
}

pub fn run(cli: Cli) -> Outcome {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Invalid("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Io(format!("cannot size the thread pool: {e}")))?;
    }
    match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Solve(a) => run_solve(a, cli.threads),
        Command::Rcsp(a) => run_rcsp(a),
        Command::Junction(a) => run_junction(a),
        Command::Oracle(a) => run_oracle(a, cli.threads),
        Command::Verify(a) => run_verify(a),
        Command::Bench(a) => run_bench(a),
    }
}

fn run_generate(a: GenerateArgs) -> Outcome {
    let params = a.params.params();
    let g = generate::<Rational>(a.kind, &params, Seed(a.seed))?;
    let mut doc = InstanceDocument::from_instance(&g.instance);
    let planted_cost = match &g.planted {
        Some(sol) => Some(Q(solution_cost(&g.instance, sol)?)),
        None => None,
    };
    doc.metadata = Some(Metadata {
        generator: Some(GeneratorDoc::new(a.kind, &params, a.seed)),
        planted: g.planted.as_ref().map(SolutionDoc::from_solution),
        planted_cost,
    });
    emit(&a.out, &to_json(&doc))
}

fn caps_doc(c: &CapArgs, max_paths: usize) -> CapsDoc {
    CapsDoc {
        max_doublings: c.max_doublings,
        max_tree_nodes: c.max_tree_nodes,
        max_layers: c.max_layers,
        max_patterns: c.max_patterns,
        max_cells: c.max_cells,
        max_paths,
    }
}

fn run_solve(a: SolveArgs, threads: Option<usize>) -> Outcome {
    let start = Instant::now();
    let inst = load_instance(&a.instance)?;
    let mut cfg = SolverConfig::new(a.algo, a.theta.0.clone(), a.epsilon.0.clone(), Seed(a.seed));
    cfg.tau = a.tau.as_ref().map(|t| t.0.clone());
    cfg.height = a.h;
    cfg.max_doublings = a.caps.max_doublings;
    cfg.junction.max_tree_nodes = a.caps.max_tree_nodes;
    cfg.junction.max_layers = a.caps.max_layers;
    let rcsp = RcspOptions { max_patterns: a.caps.max_patterns, max_cells: a.caps.max_cells, ..RcspOptions::default() };
    cfg.rcsp = rcsp;
    cfg.lpflow.rcsp = rcsp;
    cfg.junction.reduction.rcsp = rcsp;
    let height = cfg.junction_options().h;
    let solved = Instant::now();
    let out = solve(&inst, &cfg)?;
    let solve_us = solved.elapsed().as_micros() as u64;
    let solver = SolverDoc {
        algorithm: a.algo.name().into(),
        theta: a.theta,
        epsilon: a.epsilon,
        tau: a.tau,
        height,
        seed: a.seed,
        caps: caps_doc(&a.caps, OracleOptions::default().max_paths),
        threads,
    };
    let mut report = ReportDocument::new(&inst, solver, &out.solution, StagesDoc::new(&out.report), TimingDoc::default())?;
    report.timings = TimingDoc { solve_us, total_us: start.elapsed().as_micros() as u64 };
    emit(&a.out, &to_json(&report))
}

fn run_oracle(a: OracleArgs, threads: Option<usize>) -> Outcome {
    let start = Instant::now();
    let inst = validated(&a.instance)?;
    let opts = OracleOptions { max_paths: a.max_paths, max_nodes: a.max_nodes };
    let (sol, _) = brute_force_optimum(&inst, &a.theta.0, &opts)?;
    let solve_us = start.elapsed().as_micros() as u64;
    let defaults = JunctionOptions::default();
    let rcsp = RcspOptions::default();
    let solver = SolverDoc {
        algorithm: "oracle".into(),
        theta: a.theta,
        epsilon: Q(Rational::int(0)),
        tau: None,
        height: 0,
        seed: 0,
        caps: CapsDoc {
            max_doublings: 0,
            max_tree_nodes: defaults.max_tree_nodes,
            max_layers: defaults.max_layers,
            max_patterns: rcsp.max_patterns,
            max_cells: rcsp.max_cells,
            max_paths: a.max_paths,
        },
        threads,
    };
    let mut report = ReportDocument::new(&inst, solver, &sol, StagesDoc::default(), TimingDoc::default())?;
    report.timings = TimingDoc { solve_us, total_us: start.elapsed().as_micros() as u64 };
    emit(&a.out, &to_json(&report))
}

fn run_verify(a: VerifyArgs) -> Outcome {
    let inst = load_instance(&a.instance)?;
    let report: ReportDocument = from_json(&read(&a.report)?)?;
    let diffs = verify(&inst, &report);
    if diffs.is_empty() {
        println!("PASS: {} routes, total cost {}", report.solution.routes.len(), report.cost.total);
        Ok(())
    } else {
        Err(Failure::Verify(diffs))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcDoc {
    pub tail: usize,
    pub head: usize,
    pub cost: Q,
    pub weights: Vec<Q>,
}

/// Standalone RCSP query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcspDocument {
    pub n: usize,
    pub arcs: Vec<ArcDoc>,
    pub source: usize,
    pub sink: usize,
    pub budgets: Vec<Q>,
    /// Per-dimension ε for approx mode; defaults to 1/10.
    #[serde(default)]
    pub tolerances: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcspAnswer {
    pub mode: String,
    pub path: Vec<usize>,
    pub cost: Q,
    pub consumption: Vec<Q>,
    pub patterns: usize,
    pub relaxations: u64,
}

fn query_from_instance(inst: &ExactInstance, pair: usize) -> std::result::Result<RcspDocument, Failure> {
    let d = inst.demands.get(pair).ok_or_else(|| Error::Invalid(format!("pair {pair} does not exist")))?;
    let dem = Rational::int(d.demand as i64);
    Ok(RcspDocument {
        n: inst.n,
        arcs: inst
            .edges
            .iter()
            .map(|e| ArcDoc {
                tail: e.tail,
                head: e.head,
                cost: Q(e.sigma.clone() + e.delta.clone() * &dem),
                weights: vec![Q(e.length.clone())],
            })
            .collect(),
        source: d.source,
        sink: d.sink,
        budgets: vec![Q(d.dist_budget.clone())],
        tolerances: Vec::new(),
    })
}

fn run_rcsp(a: RcspArgs) -> Outcome {
    let doc = match (&a.query, &a.instance, a.pair) {
        (Some(q), _, _) => from_json::<RcspDocument>(&read(q)?)?,
        (None, Some(i), Some(p)) => query_from_instance(&load_instance(i)?, p)?,
        _ => return Err(Error::Invalid("give --query, or --instance with --pair".into()).into()),
    };
    let m = doc.budgets.len();
    if doc.arcs.iter().any(|arc| arc.weights.len() != m) {
        return Err(Error::Invalid(format!("every arc needs {m} weights")).into());
    }
    if doc.source >= doc.n || doc.sink >= doc.n {
        return Err(Error::Invalid("terminal outside the vertex range".into()).into());
    }
    let graph = ResourceGraph::new(
        doc.n,
        doc.arcs.iter().map(|arc| (arc.tail, arc.head)).collect(),
        doc.arcs.iter().map(|arc| arc.cost.0.clone()).collect(),
        (0..m).map(|i| doc.arcs.iter().map(|arc| arc.weights[i].0.clone()).collect()).collect(),
    );
    let tolerances: Vec<Rational> = match (&a.epsilon, doc.tolerances.is_empty()) {
        (Some(eps), _) => vec![eps.0.clone(); m],
        (None, false) => doc.tolerances.iter().map(|q| q.0.clone()).collect(),
        (None, true) => vec![Rational::ratio(1, 10); m],
    };
    if tolerances.len() != m {
        return Err(Error::Invalid("one tolerance per budget expected".into()).into());
    }
    let query = RcspQuery {
        graph: &graph,
        source: doc.source,
        sink: doc.sink,
        budgets: doc.budgets.iter().map(|q| q.0.clone()).collect(),
        tolerances,
    };
    let opts = RcspOptions { max_patterns: a.max_patterns, max_cells: a.max_cells, ..RcspOptions::default() };
    let (name, res) = match a.mode {
        RcspMode::Approx => ("approx", rcsp::solve(&query, &opts)?),
        RcspMode::Exact => ("exact", rcsp::solve_exact_integer(&query, &opts)?),
        RcspMode::OneRational => ("one-rational", rcsp::solve_one_rational(&query, &a.zeta.0, &opts)?),
    };
    let answer = RcspAnswer {
        mode: name.into(),
        path: res.path,
        cost: Q(res.cost),
        consumption: res.consumption.into_iter().map(Q).collect(),
        patterns: res.patterns,
        relaxations: res.relaxations,
    };
    emit(&a.out, &to_json(&answer))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionRouteDoc {
    pub pair: usize,
    /// s⇝r edges.
    pub inbound: Vec<usize>,
    /// r⇝t edges.
    pub outbound: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionDocument {
    pub root: usize,
    pub theta: Q,
    pub height: usize,
    pub seed: u64,
    pub cost: Q,
    pub density: Q,
    pub routes: Vec<JunctionRouteDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_bound: Option<f64>,
}

fn run_junction(a: JunctionArgs) -> Outcome {
    let inst = validated(&a.instance)?;
    if a.theta.0 <= Rational::int(0) || a.epsilon.0 <= Rational::int(0) {
        return Err(Error::Invalid("θ and ε must be positive".into()).into());
    }
    let pairs: Vec<usize> = if a.pairs.is_empty() { (0..inst.demands.len()).collect() } else { a.pairs.clone() };
    if let Some(&p) = pairs.iter().find(|&&p| p >= inst.demands.len()) {
        return Err(Error::Invalid(format!("pair {p} does not exist")).into());
    }
    let opts = JunctionOptions {
        h: a.h.unwrap_or_else(|| default_height(a.epsilon.0.approx())),
        max_tree_nodes: a.max_tree_nodes,
        max_layers: a.max_layers,
        roots: (!a.root.is_empty()).then(|| a.root.clone()),
        ..JunctionOptions::default()
    };
    let tree = min_density_junction_tree(&inst, &pairs, &a.theta.0, Seed(a.seed), &opts)?;
    let doc = JunctionDocument {
        root: tree.root,
        theta: a.theta,
        height: opts.h,
        seed: a.seed,
        cost: Q(tree.cost),
        density: Q(tree.density),
        routes: tree.routes.iter().map(|(&pair, (i, o))| JunctionRouteDoc { pair, inbound: i.clone(), outbound: o.clone() }).collect(),
        lp_bound: tree.lp_bound,
    };
    emit(&a.out, &to_json(&doc))
}

fn run_bench(a: BenchArgs) -> Outcome {
    let suite = Suite {
        kinds: a.kinds,
        sizes: a.sizes,
        pairs: a.pairs,
        count: a.count,
        algorithms: a.algos,
        theta: a.theta.0,
        epsilon: a.epsilon.0,
        seed: Seed(a.seed),
        oracle: !a.no_oracle,
        params: a.params.params(),
    };
    let table = bench::run(&suite);
    print!("{}", table.render());
    if let Some(path) = &a.json {
        emit(&Some(path.clone()), &to_json(&table))?;
    }
    Ok(())
}
