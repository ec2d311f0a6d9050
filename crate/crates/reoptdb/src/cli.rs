// Copyright 2026 The reoptdb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


//! The `reoptdb` command line.
//!
//! Exit codes: 0 on success, 1 on runtime failure (IO, corrupt catalog),
//! 2 on usage errors (bad flags, unparsable or unbindable queries), and 3
//! when re-optimization reports an invariant violation.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reoptdb_core::ball::sn_monte_carlo;
use reoptdb_core::explain::explain;
use reoptdb_core::ott::OttConfig;
use reoptdb_core::{
    execute, optimize, parse, reoptimize, Catalog, ExecOptions, Gamma, HistogramEstimator, QueryGraph, ReoptConfig,
    ReoptReport, TreeShape,
};
use serde::Serialize;

use crate::bench::{bench_ott, BenchConfig};
use crate::error::Error;
use crate::store::{open_catalog, save_catalog};
use crate::SCHEMA_VERSION;

#[derive(Debug, Parser)]
#[command(name = "reoptdb", version, about = "Sampling-validated iterative query re-optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an OTT database into a catalog directory.
    GenOtt {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        ott: OttArgs,
        #[arg(long)]
        json: bool,
    },
    /// Collect MCV lists and histograms for every relation.
    Analyze {
        #[command(flatten)]
        catalog: CatalogArg,
        #[arg(long, default_value_t = reoptdb_core::stats::DEFAULT_MCV_LIMIT)]
        mcv_limit: usize,
        #[arg(long, default_value_t = reoptdb_core::stats::DEFAULT_BUCKET_COUNT)]
        buckets: usize,
        #[arg(long)]
        json: bool,
    },
    /// Draw a Bernoulli sample of every relation.
    Sample {
        #[command(flatten)]
        catalog: CatalogArg,
        #[arg(long, default_value_t = reoptdb_core::DEFAULT_SAMPLE_FRACTION)]
        fraction: f64,
        #[arg(long, env = "REOPTDB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Show the optimizer's plan, optionally with validated cardinalities.
    Explain {
        #[command(flatten)]
        catalog: CatalogArg,
        #[command(flatten)]
        query: QueryArg,
        /// JSON file holding Γ, or a `reopt --json` report.
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[command(flatten)]
        opt: OptArgs,
        #[arg(long)]
        json: bool,
    },
    /// Re-optimize a query, printing the per-round EXPLAIN trace.
    Reopt {
        #[command(flatten)]
        catalog: CatalogArg,
        #[command(flatten)]
        query: QueryArg,
        #[command(flatten)]
        opt: OptArgs,
        #[arg(long)]
        json: bool,
    },
    /// Execute the original or re-optimized plan.
    Run {
        #[command(flatten)]
        catalog: CatalogArg,
        #[command(flatten)]
        query: QueryArg,
        #[arg(long, value_enum, default_value_t = PlanChoice::Reopt)]
        plan: PlanChoice,
        #[command(flatten)]
        opt: OptArgs,
        /// Keep evaluating joins above an empty input.
        #[arg(long)]
        no_short_circuit: bool,
        #[arg(long)]
        json: bool,
    },
    /// Tabulate the expected rounds of the ball model as CSV.
    SimulateSn {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, env = "REOPTDB_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Run the OTT benchmark and report results as JSON.
    BenchOtt {
        /// JSON benchmark configuration; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        ott: OttArgs,
        #[arg(long)]
        joins: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        fraction: Option<f64>,
        #[command(flatten)]
        opt: OptArgs,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct CatalogArg {
    #[arg(long)]
    pub catalog: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct QueryArg {
    /// Query text.
    #[arg(long)]
    pub query: Option<String>,
    /// File holding the query text.
    #[arg(long)]
    pub query_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OttArgs {
    #[arg(long)]
    pub tables: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub rows_per_value: Option<usize>,
    #[arg(long, env = "REOPTDB_SEED")]
    pub seed: Option<u64>,
}

impl OttArgs {
    fn apply(&self, mut cfg: OttConfig) -> OttConfig {
        cfg.tables = self.tables.unwrap_or(cfg.tables);
        cfg.rows_per_table = self.rows.unwrap_or(cfg.rows_per_table);
        cfg.rows_per_value = self.rows_per_value.unwrap_or(cfg.rows_per_value);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg
    }
}

#[derive(Debug, Args)]
pub struct OptArgs {
    /// JSON re-optimization configuration; flags below override it.
    #[arg(long = "reopt-config")]
    pub reopt_config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub shape: Option<Shape>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Count an empty sample join as one row.
    #[arg(long)]
    pub zero_floor: bool,
}

impl OptArgs {
    fn config(&self, base: ReoptConfig) -> Result<ReoptConfig, Failure> {
        let mut cfg = match &self.reopt_config {
            Some(p) => read_json(p)?,
            None => base,
        };
        if let Some(s) = self.shape {
            cfg.optimizer.shape = s.into();
        }
        cfg.max_iters = self.max_iters.unwrap_or(cfg.max_iters);
        cfg.zero_floor |= self.zero_floor;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Bushy,
    LeftDeep,
}

impl From<Shape> for TreeShape {
    fn from(s: Shape) -> Self {
        match s {
            Shape::Bushy => TreeShape::Bushy,
            Shape::LeftDeep => TreeShape::LeftDeep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlanChoice {
    Original,
    Reopt,
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if let Error::Core(c) = e {
            return c.into();
        }
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<reoptdb_core::Error> for Failure {
    fn from(e: reoptdb_core::Error) -> Self {
        use reoptdb_core::Error as E;
        let code = match &e {
            E::MaxIterations(_) => 3,
            E::Parse(_)
            | E::InvalidQuery(_)
            | E::UnknownRelation(_)
            | E::UnknownColumn { .. }
            | E::InvalidParameter(_)
            | E::InvalidFraction(_)
            | E::TooManyRelations(_)
            | E::Disconnected => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct Doc<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

fn to_json<T: Serialize>(body: &T) -> String {
    let doc = Doc {
        schema_version: SCHEMA_VERSION,
        body,
    };
    serde_json::to_string_pretty(&doc).expect("serializable output")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path)(e))?;
    serde_json::from_str(&text).map_err(|e| Failure::from(Error::json(path)(e)))
}

fn query_text(q: &QueryArg) -> Result<String, Failure> {
    match (&q.query, &q.query_file) {
        (Some(t), _) => Ok(t.clone()),
        (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| Error::io(p)(e).into()),
        (None, None) => Err(Failure::usage("one of --query or --query-file is required")),
    }
}

fn bind(catalog: &Catalog, q: &QueryArg) -> Result<QueryGraph, Failure> {
    let spec = parse(&query_text(q)?).map_err(reoptdb_core::Error::from)?;
    Ok(QueryGraph::bind(&spec, catalog)?)
}

/// Γ from a bare entry list or from a document with a `gamma_final` field.
fn read_gamma(path: &Path) -> Result<Gamma, Failure> {
    let value: serde_json::Value = read_json(path)?;
    let inner = match value.get("gamma_final") {
        Some(g) => g.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| Error::json(path)(e).into())
}

fn trace(report: &ReoptReport, graph: &QueryGraph, est: &HistogramEstimator, cfg: &ReoptConfig) -> Result<String, Failure> {
    let mut out = String::new();
    for (r, plan) in report.plans.iter().enumerate() {
        let validated = report.gamma_at(r).resolve(graph);
        out.push_str(&format!("-- round {} --\n", r + 1));
        out.push_str(&explain(plan, graph, est, &validated, &cfg.optimizer.cost)?);
        if let Some(delta) = report.deltas.get(r) {
            for (key, v) in delta.iter() {
                out.push_str(&format!("  validated {key} = {v}\n"));
            }
        }
    }
    out.push_str(&format!(
        "final plan: {} after {} rounds ({:?})\n",
        report.final_plan().render(graph),
        report.iterations,
        report.sequence_case
    ));
    for n in &report.notices {
        out.push_str(&format!("notice: {n}\n"));
    }
    for v in &report.violations {
        out.push_str(&format!("violation: {v}\n"));
    }
    Ok(out)
}

fn violation_exit(report: &ReoptReport) -> Result<(), Failure> {
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            message: format!("invariant violations: {}", report.violations.join("; ")),
        })
    }
}

#[derive(Serialize)]
struct ExplainDoc<'a> {
    plan: String,
    encoding: Vec<String>,
    ops: Vec<reoptdb_core::JoinOp>,
    cost: f64,
    validated: &'a Gamma,
    explain: String,
}

#[derive(Serialize)]
struct RunDoc<'a> {
    plan: String,
    #[serde(flatten)]
    report: &'a reoptdb_core::ExecReport,
}

#[derive(Serialize)]
struct SimRow {
    n: u64,
    closed_form: f64,
    mc_mean: f64,
    mc_stderr: f64,
    ratio_sqrt: f64,
}

/// Runs one parsed command, writing to `out`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure {
        code: 1,
        message: e.to_string(),
    };
    match cli.command {
        Command::GenOtt { out: dir, ott, json } => {
            let cfg = ott.apply(OttConfig::default());
            let mut cat = Catalog::new();
            for r in reoptdb_core::ott::generate_ott(&cfg)? {
                cat.add_relation(r);
            }
            let manifest = save_catalog(&cat, &dir)?;
            if json {
                writeln!(out, "{}", to_json(&manifest)).map_err(io)?;
            } else {
                writeln!(out, "wrote {} tables to {}", manifest.relations.len(), dir.display()).map_err(io)?;
            }
        }
        Command::Analyze {
            catalog,
            mcv_limit,
            buckets,
            json,
        } => {
            let mut cat = open_catalog(&catalog.catalog)?;
            cat.analyze_all(mcv_limit, buckets)?;
            let manifest = save_catalog(&cat, &catalog.catalog)?;
            if json {
                writeln!(out, "{}", to_json(&manifest)).map_err(io)?;
            } else {
                writeln!(out, "analyzed {} tables", manifest.relations.len()).map_err(io)?;
            }
        }
        Command::Sample {
            catalog,
            fraction,
            seed,
            json,
        } => {
            let mut cat = open_catalog(&catalog.catalog)?;
            cat.sample_all(fraction, seed)?;
            let manifest = save_catalog(&cat, &catalog.catalog)?;
            if json {
                writeln!(out, "{}", to_json(&manifest)).map_err(io)?;
            } else {
                for s in cat.samples() {
                    let total = cat.relation(&s.source).map_or(0, |r| r.row_count());
                    writeln!(out, "{}: {} of {} rows", s.source, s.len(), total).map_err(io)?;
                }
            }
        }
        Command::Explain {
            catalog,
            query,
            gamma,
            opt,
            json,
        } => {
            let cat = open_catalog(&catalog.catalog)?;
            let graph = bind(&cat, &query)?;
            let cfg = opt.config(ReoptConfig::default())?;
            let gamma = match gamma {
                Some(p) => read_gamma(&p)?,
                None => Gamma::new(),
            };
            let est = HistogramEstimator::new(&graph, &cat)?;
            let validated = gamma.resolve(&graph);
            let cards = reoptdb_core::cost::Overlay::new(&est, &validated);
            let plan = optimize(&graph, &cards, &cfg.optimizer)?;
            let text = explain(&plan, &graph, &est, &validated, &cfg.optimizer.cost)?;
            if json {
                let doc = ExplainDoc {
                    plan: plan.render(&graph),
                    encoding: plan.encoding_labels(&graph),
                    ops: plan.ops(),
                    cost: reoptdb_core::plan_cost(&plan, &graph, &cards, &cfg.optimizer.cost)?,
                    validated: &gamma,
                    explain: text,
                };
                writeln!(out, "{}", to_json(&doc)).map_err(io)?;
            } else {
                write!(out, "{text}").map_err(io)?;
            }
        }
        Command::Reopt {
            catalog,
            query,
            opt,
            json,
        } => {
            let cat = open_catalog(&catalog.catalog)?;
            let graph = bind(&cat, &query)?;
            let cfg = opt.config(ReoptConfig::default())?;
            let report = reoptimize(&graph, &cat, &cfg)?;
            let est = HistogramEstimator::new(&graph, &cat)?;
            let text = trace(&report, &graph, &est, &cfg)?;
            if json {
                write!(err, "{text}").map_err(io)?;
                writeln!(out, "{}", to_json(&report)).map_err(io)?;
            } else {
                write!(out, "{text}").map_err(io)?;
            }
            violation_exit(&report)?;
        }
        Command::Run {
            catalog,
            query,
            plan,
            opt,
            no_short_circuit,
            json,
        } => {
            let cat = open_catalog(&catalog.catalog)?;
            let graph = bind(&cat, &query)?;
            let cfg = opt.config(ReoptConfig::default())?;
            let report = reoptimize(&graph, &cat, &cfg)?;
            let chosen = match plan {
                PlanChoice::Original => &report.plans[0],
                PlanChoice::Reopt => report.final_plan(),
            };
            let tables: Vec<_> = graph
                .relations()
                .iter()
                .map(|r| cat.relation(&r.table).expect("bound relation"))
                .collect();
            let exec = execute(
                chosen,
                &graph,
                &tables,
                ExecOptions {
                    short_circuit: !no_short_circuit,
                },
            )?;
            if json {
                let doc = RunDoc {
                    plan: chosen.render(&graph),
                    report: &exec,
                };
                writeln!(out, "{}", to_json(&doc)).map_err(io)?;
            } else {
                writeln!(out, "plan: {}", chosen.render(&graph)).map_err(io)?;
                writeln!(out, "result_rows: {}", exec.result_rows).map_err(io)?;
                writeln!(out, "rows_processed: {}", exec.rows_processed).map_err(io)?;
                writeln!(out, "wall_time: {:?}", exec.wall_time).map_err(io)?;
                for (k, v) in &exec.node_rows {
                    writeln!(out, "  {k}: {v}").map_err(io)?;
                }
            }
            violation_exit(&report)?;
        }
        Command::SimulateSn { n_list, trials, seed } => {
            let mut w = csv::Writer::from_writer(out);
            for (i, &n) in n_list.iter().enumerate() {
                let r = sn_monte_carlo(n, trials, seed.wrapping_add(i as u64))?;
                w.serialize(SimRow {
                    n,
                    closed_form: r.closed_form,
                    mc_mean: r.monte_carlo_mean,
                    mc_stderr: r.monte_carlo_stderr,
                    ratio_sqrt: r.closed_form / (n as f64).sqrt(),
                })
                .map_err(|e| Failure {
                    code: 1,
                    message: e.to_string(),
                })?;
            }
            w.flush().map_err(io)?;
        }
        Command::BenchOtt {
            config,
            ott,
            joins,
            m,
            fraction,
            opt,
            json,
        } => {
            let mut cfg: BenchConfig = match &config {
                Some(p) => read_json(p)?,
                None => BenchConfig::default(),
            };
            cfg.ott = ott.apply(cfg.ott);
            cfg.sample_seed = ott.seed.unwrap_or(cfg.sample_seed);
            cfg.joins = joins.unwrap_or(cfg.joins);
            cfg.m = m.unwrap_or(cfg.m);
            cfg.sample_fraction = fraction.unwrap_or(cfg.sample_fraction);
            cfg.reopt = opt.config(cfg.reopt.clone())?;
            let results = bench_ott(&cfg)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&results).expect("serializable")).map_err(io)?;
            } else {
                for q in &results.queries {
                    writeln!(
                        out,
                        "{}\n  rounds {}  rows {} -> {}  wall {:.3} ms -> {:.3} ms",
                        q.query, q.iterations, q.rows_processed_original, q.rows_processed_reopt, q.wall_ms_original, q.wall_ms_reopt
                    )
                    .map_err(io)?;
                }
                writeln!(
                    out,
                    "total rows_processed {} -> {} ({:.1}x)",
                    results.rows_processed_original,
                    results.rows_processed_reopt,
                    results.ratio()
                )
                .map_err(io)?;
            }
            if results.queries.iter().any(|q| !q.violations.is_empty()) {
                return Err(Failure {
                    code: 3,
                    message: "invariant violations during the benchmark".into(),
                });
            }
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = main_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code)
}
