//! JSON documents exchanged by the command line tool.
//!
//! Every rational is written as an exact "numerator/denominator" string.

use std::fmt;
use std::str::FromStr;

use bbspan::generate::{GenParams, Kind};
use bbspan::instance::{cost_breakdown, CostBreakdown};
use bbspan::solvers::{Stage, StageRecord, StageReport};
use bbspan::{Error, ExactInstance, ExactSolution, Instance, Rational, Result, RouteSolution};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

pub const INSTANCE_FORMAT: &str = "bbspan-instance";
pub const REPORT_FORMAT: &str = "bbspan-report";
pub const VERSION: u32 = 1;

/// Exact rational carried as a "num/den" string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Q(pub Rational);

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Q {
    type Err = String;

    fn from_str(text: &str) -> std::result::Result<Self, String> {
        let value: Rational = text.trim().parse().map_err(|_| format!("{text:?} is not a rational"))?;
        Ok(Q(value))
    }
}

impl From<Rational> for Q {
    fn from(r: Rational) -> Self {
        Q(r)
    }
}

impl From<&Rational> for Q {
    fn from(r: &Rational) -> Self {
        Q(r.clone())
    }
}

impl Serialize for Q {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub tail: usize,
    pub head: usize,
    pub length: Q,
    pub sigma: Q,
    pub delta: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandDoc {
    pub source: usize,
    pub sink: usize,
    pub demand: u64,
    pub dist_budget: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteDoc {
    pub pair: usize,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub theta: Q,
    pub routes: Vec<RouteDoc>,
}

impl SolutionDoc {
    pub fn from_solution(sol: &ExactSolution) -> Self {
        SolutionDoc {
            theta: Q::from(&sol.theta),
            routes: sol.routes.iter().map(|(&pair, edges)| RouteDoc { pair, edges: edges.clone() }).collect(),
        }
    }

    pub fn to_solution(&self) -> Result<ExactSolution> {
        let mut sol = RouteSolution::new(self.theta.0.clone());
        for r in &self.routes {
            if sol.routes.insert(r.pair, r.edges.clone()).is_some() {
                return Err(Error::Invalid(format!("pair {} is routed twice", r.pair)));
            }
        }
        Ok(sol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDoc {
    pub kind: String,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub edge_probability: f64,
    pub max_length: i64,
    pub max_sigma: i64,
    pub max_delta: i64,
    pub max_demand: u64,
    pub denominator: i64,
    pub slack: f64,
    pub hubs: usize,
}

impl GeneratorDoc {
    pub fn new(kind: Kind, p: &GenParams, seed: u64) -> Self {
        GeneratorDoc {
            kind: kind.name().to_string(),
            seed,
            n: p.n,
            k: p.k,
            edge_probability: p.edge_probability,
            max_length: p.max_length,
            max_sigma: p.max_sigma,
            max_delta: p.max_delta,
            max_demand: p.max_demand,
            denominator: p.denominator,
            slack: p.slack,
            hubs: p.hubs,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorDoc>,
    /// Known feasible solution embedded by planted generators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<SolutionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_cost: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub edges: Vec<EdgeDoc>,
    pub demands: Vec<DemandDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl InstanceDocument {
    pub fn from_instance(inst: &ExactInstance) -> Self {
        InstanceDocument {
            format: INSTANCE_FORMAT.into(),
            version: VERSION,
            n: inst.n,
            edges: inst
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    tail: e.tail,
                    head: e.head,
                    length: Q::from(&e.length),
                    sigma: Q::from(&e.sigma),
                    delta: Q::from(&e.delta),
                })
                .collect(),
            demands: inst
                .demands
                .iter()
                .map(|d| DemandDoc { source: d.source, sink: d.sink, demand: d.demand, dist_budget: Q::from(&d.dist_budget) })
                .collect(),
            metadata: None,
        }
    }

    pub fn to_instance(&self) -> Result<ExactInstance> {
        check_header(&self.format, self.version, INSTANCE_FORMAT)?;
        let mut inst = Instance::new(self.n);
        for (i, e) in self.edges.iter().enumerate() {
            if e.tail >= self.n || e.head >= self.n {
                return Err(Error::Invalid(format!("edge {i} references a vertex outside 0..{}", self.n)));
            }
            inst.add_edge(e.tail, e.head, e.length.0.clone(), e.sigma.0.clone(), e.delta.0.clone());
        }
        for (i, d) in self.demands.iter().enumerate() {
            if d.source >= self.n || d.sink >= self.n {
                return Err(Error::Invalid(format!("pair {i} references a vertex outside 0..{}", self.n)));
            }
            inst.add_demand(d.source, d.sink, d.demand, d.dist_budget.0.clone());
        }
        Ok(inst)
    }
}

fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Invalid(format!("expected a {expected} document, found {format:?}")));
    }
    if version != VERSION {
        return Err(Error::Invalid(format!("unsupported {expected} version {version}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapsDoc {
    pub max_doublings: usize,
    pub max_tree_nodes: usize,
    pub max_layers: i64,
    pub max_patterns: usize,
    pub max_cells: usize,
    pub max_paths: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverDoc {
    /// `n45`, `k`, `single-source` or `oracle`.
    pub algorithm: String,
    pub theta: Q,
    pub epsilon: Q,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Q>,
    pub height: usize,
    pub seed: u64,
    pub caps: CapsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostDoc {
    pub sigma: Q,
    pub delta: Q,
    pub total: Q,
}

impl CostDoc {
    pub fn new(c: &CostBreakdown<Rational>) -> Self {
        CostDoc { sigma: Q::from(&c.sigma), delta: Q::from(&c.delta), total: Q::from(&c.total) }
    }
}

/// Slack of one route against its strict and θ-relaxed distance budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginDoc {
    pub pair: usize,
    pub length: Q,
    /// Dis − length.
    pub strict: Q,
    /// Dis + θ|Dis| − length.
    pub relaxed: Q,
}

pub fn margins(inst: &ExactInstance, sol: &ExactSolution) -> Vec<MarginDoc> {
    sol.routes
        .iter()
        .filter(|(&p, _)| p < inst.demands.len())
        .map(|(&pair, route)| {
            let length = inst.path_length(route);
            let strict = inst.demands[pair].dist_budget.clone() - &length;
            let relaxed = inst.relaxed_bound(pair, &sol.theta) - &length;
            MarginDoc { pair, length: Q(length), strict: Q(strict), relaxed: Q(relaxed) }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordDoc {
    pub stage: String,
    pub pairs: Vec<usize>,
    pub remaining_before: usize,
    pub cost: Q,
    pub density: Q,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StagesDoc {
    pub records: Vec<RecordDoc>,
    pub taus: Vec<Q>,
    pub tau_attempts: usize,
}

impl StagesDoc {
    pub fn new(r: &StageReport<Rational>) -> Self {
        StagesDoc {
            records: r
                .records
                .iter()
                .map(|rec| RecordDoc {
                    stage: rec.stage.tag().to_string(),
                    pairs: rec.pairs.clone(),
                    remaining_before: rec.remaining_before,
                    cost: Q::from(&rec.cost),
                    density: Q::from(&rec.density),
                    root: rec.root,
                })
                .collect(),
            taus: r.taus.iter().map(Q::from).collect(),
            tau_attempts: r.tau_attempts,
        }
    }

    pub fn to_report(&self) -> Result<StageReport<Rational>> {
        let records = self
            .records
            .iter()
            .map(|r| {
                let stage = Stage::parse(&r.stage).ok_or_else(|| Error::Invalid(format!("unknown stage {:?}", r.stage)))?;
                Ok(StageRecord {
                    stage,
                    pairs: r.pairs.clone(),
                    remaining_before: r.remaining_before,
                    cost: r.cost.0.clone(),
                    density: r.density.0.clone(),
                    root: r.root,
                })
            })
            .collect::<Result<_>>()?;
        Ok(StageReport { records, taus: self.taus.iter().map(|q| q.0.clone()).collect(), tau_attempts: self.tau_attempts })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingDoc {
    pub solve_us: u64,
    pub total_us: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub format: String,
    pub version: u32,
    pub solver: SolverDoc,
    pub solution: SolutionDoc,
    pub cost: CostDoc,
    pub margins: Vec<MarginDoc>,
    pub stages: StagesDoc,
    pub timings: TimingDoc,
}

impl ReportDocument {
    pub fn new(inst: &ExactInstance, solver: SolverDoc, sol: &ExactSolution, stages: StagesDoc, timings: TimingDoc) -> Result<Self> {
        let cost = cost_breakdown(inst, sol)?;
        Ok(ReportDocument {
            format: REPORT_FORMAT.into(),
            version: VERSION,
            solver,
            solution: SolutionDoc::from_solution(sol),
            cost: CostDoc::new(&cost),
            margins: margins(inst, sol),
            stages,
            timings,
        })
    }

    pub fn check_header(&self) -> Result<()> {
        check_header(&self.format, self.version, REPORT_FORMAT)
    }
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Invalid(format!("malformed document: {e}")))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    text
}
