//! Instance × algorithm sweeps with optional oracle ratios.

use std::fmt::Write as _;
use std::time::Instant;

use bbspan::generate::{generate, GenParams, Kind};
use bbspan::instance::solution_cost;
use bbspan::oracle::{brute_force_optimum, OracleOptions};
use bbspan::solvers::{solve, Algorithm, SolverConfig};
use bbspan::{Rational, Scalar, Seed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doc::Q;

#[derive(Clone, Debug)]
pub struct Suite {
    pub kinds: Vec<Kind>,
    pub sizes: Vec<usize>,
    pub pairs: Vec<usize>,
    pub count: usize,
    pub algorithms: Vec<Algorithm>,
    pub theta: Rational,
    pub epsilon: Rational,
    pub seed: Seed,
    pub oracle: bool,
    pub params: GenParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub algorithm: String,
    /// `ok` or the error class.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Q>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_cost: Option<Q>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    pub time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub oracle: bool,
    pub rows: Vec<BenchRow>,
}

struct Job {
    name: String,
    kind: Kind,
    n: usize,
    k: usize,
}

fn status_of(e: &bbspan::Error) -> &'static str {
    match e {
        bbspan::Error::Invalid(_) => "invalid",
        bbspan::Error::Validation(_) => "validation",
        bbspan::Error::Infeasible(_) => "infeasible",
        bbspan::Error::CapExceeded(_) => "cap-exceeded",
        bbspan::Error::Internal(_) => "internal",
    }
}

pub fn run(suite: &Suite) -> BenchTable {
    let mut jobs = Vec::new();
    for &kind in &suite.kinds {
        for &n in &suite.sizes {
            for &k in &suite.pairs {
                for index in 0..suite.count {
                    jobs.push(Job { name: format!("{}-n{n}-k{k}-{index}", kind.name()), kind, n, k });
                }
            }
        }
    }
    let rows: Vec<Vec<BenchRow>> = jobs.par_iter().map(|job| run_job(suite, job)).collect();
    BenchTable { oracle: suite.oracle, rows: rows.into_iter().flatten().collect() }
}

fn run_job(suite: &Suite, job: &Job) -> Vec<BenchRow> {
    let params = GenParams { n: job.n, k: job.k, ..suite.params.clone() };
    let seed = suite.seed.child(&job.name);
    let failed = |algorithm: &str, status: &str| BenchRow {
        instance: job.name.clone(),
        algorithm: algorithm.to_string(),
        status: status.to_string(),
        cost: None,
        oracle_cost: None,
        ratio: None,
        time_ms: 0.0,
    };
    let inst = match generate::<Rational>(job.kind, &params, seed.child("instance")) {
        Ok(g) => g.instance,
        Err(e) => return suite.algorithms.iter().map(|a| failed(a.name(), status_of(&e))).collect(),
    };
    let oracle_cost =
        if suite.oracle { brute_force_optimum(&inst, &suite.theta, &OracleOptions::default()).ok().map(|(_, c)| c) } else { None };
    suite
        .algorithms
        .iter()
        .map(|&algo| {
            let cfg = SolverConfig::new(algo, suite.theta.clone(), suite.epsilon.clone(), seed.child("solve"));
            let start = Instant::now();
            let out = solve(&inst, &cfg);
            let time_ms = start.elapsed().as_secs_f64() * 1e3;
            match out {
                Ok(o) => {
                    let cost = solution_cost(&inst, &o.solution).expect("solver output is consistent");
                    let ratio = oracle_cost.as_ref().map(|opt| {
                        if *opt == Rational::int(0) {
                            if cost == Rational::int(0) {
                                1.0
                            } else {
                                f64::INFINITY
                            }
                        } else {
                            (cost.clone() / opt.clone()).approx()
                        }
                    });
                    BenchRow {
                        instance: job.name.clone(),
                        algorithm: algo.name().to_string(),
                        status: "ok".into(),
                        cost: Some(Q(cost)),
                        oracle_cost: oracle_cost.clone().map(Q),
                        ratio,
                        time_ms,
                    }
                }
                Err(e) => BenchRow { time_ms, oracle_cost: oracle_cost.clone().map(Q), ..failed(algo.name(), status_of(&e)) },
            }
        })
        .collect()
}

impl BenchTable {
    /// Aligned text table; the oracle and ratio columns appear only when the
    /// oracle ran.
    pub fn render(&self) -> String {
        let mut header = vec!["instance", "algo", "status", "cost"];
        if self.oracle {
            header.extend(["oracle", "ratio"]);
        }
        header.push("time_ms");
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![
                    r.instance.clone(),
                    r.algorithm.clone(),
                    r.status.clone(),
                    r.cost.as_ref().map_or("-".into(), |c| c.0.to_string()),
                ];
                if self.oracle {
                    cells.push(r.oracle_cost.as_ref().map_or("-".into(), |c| c.0.to_string()));
                    cells.push(r.ratio.map_or("-".into(), |x| format!("{x:.3}")));
                }
                cells.push(format!("{:.1}", r.time_ms));
                cells
            })
            .collect();
        let widths: Vec<usize> =
            (0..header.len()).map(|i| rows.iter().map(|r| r[i].chars().count()).chain([header[i].len()]).max().unwrap_or(0)).collect();
        let mut out = String::new();
        let line = |cells: Vec<String>, out: &mut String| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", padded.join("  ").trim_end());
        };
        line(header.iter().map(|h| h.to_string()).collect(), &mut out);
        for r in rows {
            line(r, &mut out);
        }
        out
    }
}
