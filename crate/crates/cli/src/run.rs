//! Command implementations. Each returns the paths it wrote.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pcornet_core::bootstrap::{
    case_dropping_boot, difference_test, edge_quantile_intervals, nonparametric_boot,
    permutation_comparison, BootstrapResult, DifferenceTarget, CS_ACCEPTABLE,
    CS_STABLE, DEFAULT_PROPORTIONS,
};
use pcornet_core::error::Error as CoreError;
use pcornet_core::glasso::PcorNetwork;
use pcornet_core::network::centrality_table;
use pcornet_core::pipeline::{estimate, EstimatorConfig};
use pcornet_core::simulator::{
    chain_graph, net_simulator, Generator, SimulationGrid, SimulationResult, ThresholdMode,
};
use serde_json::{json, Value};

use crate::args::*;
use crate::document::{DocumentMeta, NetworkDocument, SchemaError, TOOL_VERSION};
use crate::export::*;
use crate::input::{read_csv_default, CsvError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or unusable paths; exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write `{path}`: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Csv(e) => e.kind(),
            CliError::Schema(_) => "SchemaError",
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "IoError",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() }).to_string()
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Json,
    Csv,
    Dot,
    Svg,
}

pub fn parse_formats(s: &str) -> Result<BTreeSet<Format>> {
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        out.insert(match part {
            "json" => Format::Json,
            "csv" => Format::Csv,
            "dot" => Format::Dot,
            "svg" => Format::Svg,
            other => return Err(CliError::Usage(format!("unknown format `{other}`"))),
        });
    }
    if out.is_empty() {
        return Err(CliError::Usage("--format needs at least one of json,csv,dot,svg".into()));
    }
    Ok(out)
}

fn format_names(f: &BTreeSet<Format>) -> Vec<&'static str> {
    f.iter()
        .map(|f| match f {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Dot => "dot",
            Format::Svg => "svg",
        })
        .collect()
}

/// Uses the given seed or derives one from the clock.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64);
        let seed = nanos % 1_000_000_000;
        eprintln!("pcornet: no --seed given, using seed {seed}");
        seed
    })
}

fn check_readable(path: &Path) -> Result<()> {
    std::fs::File::open(path)
        .map(|_| ())
        .map_err(|e| CliError::Usage(format!("cannot read `{}`: {e}", path.display())))
}

fn estimator_config(a: &EstimatorArgs) -> Result<EstimatorConfig> {
    if !(a.gamma >= 0.0 && a.gamma.is_finite()) {
        return Err(CliError::Usage(format!("--gamma must be a finite value >= 0, got {}", a.gamma)));
    }
    if a.n_lambda == 0 {
        return Err(CliError::Usage("--n-lambda must be at least 1".into()));
    }
    if !(a.lambda_ratio > 0.0 && a.lambda_ratio < 1.0) {
        return Err(CliError::Usage(format!("--lambda-ratio must lie in (0, 1), got {}", a.lambda_ratio)));
    }
    Ok(EstimatorConfig {
        cor_method: a.cor.into(),
        gamma: a.gamma,
        n_lambda: a.n_lambda,
        lambda_ratio: a.lambda_ratio,
        refit: a.refit,
        ..Default::default()
    })
}

fn estimator_json(c: &EstimatorConfig) -> Value {
    json!({
        "cor": c.cor_method.as_str(),
        "gamma": c.gamma,
        "refit": c.refit,
        "n_lambda": c.n_lambda,
        "lambda_ratio": c.lambda_ratio,
        "glasso_tol": c.glasso.tol,
        "glasso_max_iter": c.glasso.max_iter,
    })
}

struct Output {
    dir: PathBuf,
    formats: BTreeSet<Format>,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(a: &OutputArgs) -> Result<Self> {
        let formats = parse_formats(&a.format)?;
        std::fs::create_dir_all(&a.out_dir)
            .map_err(|e| CliError::Usage(format!("cannot create `{}`: {e}", a.out_dir.display())))?;
        Ok(Self { dir: a.out_dir.clone(), formats, written: Vec::new() })
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
        self.written.push(path);
        Ok(())
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn input_string(p: &Path) -> String {
    p.display().to_string()
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<Vec<PathBuf>> {
    let cfg = estimator_config(&a.estimator)?;
    check_readable(&a.input)?;
    let mut out = Output::new(&a.output)?;
    let seed = resolve_seed(a.output.seed);
    let config = json!({
        "command": "estimate",
        "input": input_string(&a.input),
        "estimator": estimator_json(&cfg),
        "format": format_names(&out.formats),
    });
    let meta = RunMeta { seed, config: config.clone() };

    let data = read_csv_default(&a.input)?;
    let est = estimate(&data, &cfg)?;
    warn_all(&est.warnings);
    let doc = NetworkDocument::from_network(
        &est.network,
        DocumentMeta {
            gamma: Some(cfg.gamma),
            selected_lambda: Some(est.trace.selected_lambda()),
            n: Some(data.n_rows()),
            cor_method: Some(est.correlation.method.as_str().to_string()),
            pd_repaired: Some(est.correlation.pd_repaired),
            refit: Some(cfg.refit),
            tool_version: Some(TOOL_VERSION.to_string()),
            seed: Some(seed),
            config: Some(config),
            warnings: est.warnings.clone(),
            ..Default::default()
        },
    );
    if out.wants(Format::Json) {
        out.write("network.json", &doc.to_json())?;
    }
    if out.wants(Format::Csv) {
        out.write("edges.csv", &edges_csv(&est.network, &meta))?;
        out.write("trace.csv", &trace_csv(&est.trace, &meta))?;
    }
    if out.wants(Format::Dot) {
        out.write("network.dot", &network_dot(&est.network, &meta))?;
    }
    if out.wants(Format::Svg) {
        out.write("network.svg", &network_svg(&est.network, &meta))?;
    }
    println!(
        "{} edges selected at lambda {} (gamma {}, n {})",
        est.network.edge_count(),
        est.trace.selected_lambda(),
        cfg.gamma,
        data.n_rows()
    );
    Ok(out.written)
}

fn read_document(path: &Path) -> Result<NetworkDocument> {
    check_readable(path)?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| SchemaError(format!("cannot read `{}` as text: {e}", path.display())))?;
    Ok(NetworkDocument::from_json(&text)?)
}

pub fn cmd_centrality(a: &CentralityArgs) -> Result<Vec<PathBuf>> {
    let doc = read_document(&a.input)?;
    let mut out = Output::new(&a.output)?;
    let seed = resolve_seed(a.output.seed);
    let config = json!({
        "command": "centrality",
        "input": input_string(&a.input),
        "format": format_names(&out.formats),
    });
    let meta = RunMeta { seed, config };
    let net = doc.to_network()?;
    let table = centrality_table(&net);
    if out.wants(Format::Csv) {
        out.write("centrality.csv", &centrality_csv(&net, &table, &meta))?;
    }
    if out.wants(Format::Json) {
        let nodes: Vec<Value> = net
            .labels()
            .iter()
            .enumerate()
            .map(|(i, l)| {
                json!({
                    "node": l,
                    "strength": table.strength[i],
                    "closeness": table.closeness[i],
                    "betweenness": table.betweenness[i],
                    "z_strength": table.z_strength[i],
                    "z_closeness": table.z_closeness[i],
                    "z_betweenness": table.z_betweenness[i],
                })
            })
            .collect();
        out.write("centrality.json", &json_text(&json!({ "meta": meta.json(), "nodes": nodes })))?;
    }
    if out.wants(Format::Svg) {
        out.write("network.svg", &network_svg(&net, &meta))?;
    }
    if out.wants(Format::Dot) {
        out.write("network.dot", &network_dot(&net, &meta))?;
    }
    Ok(out.written)
}

fn replicate_summaries(res: &BootstrapResult) -> Value {
    Value::Array(
        res.replicates
            .iter()
            .map(|r| {
                json!({
                    "index": r.index,
                    "proportion": r.proportion,
                    "n_rows": r.n_rows,
                    "n_distinct": r.n_distinct,
                    "edge_count": r.network.edge_count(),
                })
            })
            .collect(),
    )
}

fn failure_summaries(res: &BootstrapResult) -> Value {
    Value::Array(
        res.failures
            .iter()
            .map(|f| json!({ "index": f.index, "proportion": f.proportion, "error": f.error.kind(), "message": f.error.to_string() }))
            .collect(),
    )
}

fn edge_name(net: &PcorNetwork, i: usize, j: usize) -> String {
    format!("{}--{}", net.labels()[i], net.labels()[j])
}

pub fn cmd_bootstrap(a: &BootstrapArgs) -> Result<Vec<PathBuf>> {
    let cfg = estimator_config(&a.estimator)?;
    if !(0.0..=1.0).contains(&a.level) {
        return Err(CliError::Usage(format!("--level must lie in [0, 1], got {}", a.level)));
    }
    if !(0.0..=1.0).contains(&a.cs_certainty) || !(-1.0..=1.0).contains(&a.cs_threshold) {
        return Err(CliError::Usage("CS threshold must lie in [-1, 1] and certainty in [0, 1]".into()));
    }
    let proportions = a.proportions.clone().unwrap_or_else(|| DEFAULT_PROPORTIONS.to_vec());
    if proportions.is_empty() || proportions.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
        return Err(CliError::Usage("--proportions must lie in (0, 1]".into()));
    }
    check_readable(&a.input)?;
    if a.centrality_ci {
        return Err(CoreError::CentralityIntervalsUnsupported.into());
    }
    let mut out = Output::new(&a.output)?;
    let seed = resolve_seed(a.output.seed);
    let mut config = json!({
        "command": "bootstrap",
        "input": input_string(&a.input),
        "estimator": estimator_json(&cfg),
        "type": match a.boot_type { BootTypeArg::Nonparametric => "nonparametric", BootTypeArg::Case => "case" },
        "nboots": a.nboots,
        "format": format_names(&out.formats),
    });
    match a.boot_type {
        BootTypeArg::Nonparametric => config["level"] = json!(a.level),
        BootTypeArg::Case => {
            config["proportions"] = json!(proportions);
            config["cs_threshold"] = json!(a.cs_threshold);
            config["cs_certainty"] = json!(a.cs_certainty);
        }
    }
    let meta = RunMeta { seed, config };
    let data = read_csv_default(&a.input)?;
    match a.boot_type {
        BootTypeArg::Nonparametric => {
            let res = nonparametric_boot(&data, &cfg, a.nboots, seed)?;
            warn_all(&res.warnings);
            bootstrap_nonparametric_outputs(&res, a.level, &meta, &mut out)?;
        }
        BootTypeArg::Case => {
            let res = case_dropping_boot(&data, &cfg, &proportions, a.nboots, seed)?;
            warn_all(&res.warnings);
            bootstrap_case_outputs(&res, a.cs_threshold, a.cs_certainty, &meta, &mut out)?;
        }
    }
    Ok(out.written)
}

fn bootstrap_nonparametric_outputs(
    res: &BootstrapResult,
    level: f64,
    meta: &RunMeta,
    out: &mut Output,
) -> Result<()> {
    let net = &res.original;
    let enough = res.replicates.len() >= 2;
    if !enough {
        eprintln!("warning: fewer than 2 successful replicates; no interval tables written");
    }
    let intervals = if enough { edge_quantile_intervals(res, level)? } else { Vec::new() };
    if out.wants(Format::Csv) && enough {
        let mut s = meta.csv_header();
        s.push_str("from,to,original,mean,lo,hi\n");
        for iv in &intervals {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                net.labels()[iv.i],
                net.labels()[iv.j],
                iv.original,
                iv.mean,
                iv.lo,
                iv.hi
            );
        }
        out.write("bootstrap_edges.csv", &s)?;

        let p = net.dim();
        let mut s = meta.csv_header();
        s.push_str("node_a,node_b,lo,hi,significant\n");
        for x in 0..p {
            for y in (x + 1)..p {
                let t = difference_test(res, DifferenceTarget::StrengthVsStrength { a: x, b: y }, level)?;
                let _ = writeln!(s, "{},{},{},{},{}", net.labels()[x], net.labels()[y], t.lo, t.hi, t.significant);
            }
        }
        out.write("bootstrap_strength_diff.csv", &s)?;

        let edges = net.edges();
        let mut s = meta.csv_header();
        s.push_str("edge_a,edge_b,lo,hi,significant\n");
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            for &(u, v, _) in &edges[k + 1..] {
                let t = difference_test(res, DifferenceTarget::EdgeVsEdge { a: (i, j), b: (u, v) }, level)?;
                let _ = writeln!(s, "{},{},{},{},{}", edge_name(net, i, j), edge_name(net, u, v), t.lo, t.hi, t.significant);
            }
        }
        out.write("bootstrap_edge_diff.csv", &s)?;
    }
    if out.wants(Format::Json) {
        let iv: Vec<Value> = intervals
            .iter()
            .map(|iv| json!({ "from": net.labels()[iv.i], "to": net.labels()[iv.j], "original": iv.original, "mean": iv.mean, "lo": iv.lo, "hi": iv.hi }))
            .collect();
        let doc = json!({
            "meta": meta.json(),
            "kind": "nonparametric",
            "requested": res.requested,
            "succeeded": res.replicates.len(),
            "failures": failure_summaries(res),
            "level": level,
            "edge_intervals": iv,
            "replicates": replicate_summaries(res),
            "warnings": res.warnings,
        });
        out.write("bootstrap.json", &json_text(&doc))?;
    }
    println!("{} of {} replicates succeeded", res.replicates.len(), res.requested);
    Ok(())
}

fn bootstrap_case_outputs(
    res: &BootstrapResult,
    threshold: f64,
    certainty: f64,
    meta: &RunMeta,
    out: &mut Output,
) -> Result<()> {
    let report = stability_report(res, threshold, certainty, meta)?;
    for (which, cs, rating) in &report.cs {
        println!("CS({}) = {} ({})", which.as_str(), cs, rating.describe());
    }
    if out.wants(Format::Csv) {
        out.write("bootstrap_stability.csv", &report.stability_csv)?;
        out.write("bootstrap_cs.csv", &report.cs_csv)?;
    }
    if out.wants(Format::Json) {
        let cs_json: Vec<Value> = report
            .cs
            .iter()
            .map(|(which, cs, rating)| json!({ "index": which.as_str(), "cs": cs, "rating": rating.describe() }))
            .collect();
        let doc = json!({
            "meta": meta.json(),
            "kind": "case",
            "requested": res.requested,
            "succeeded": res.replicates.len(),
            "failures": failure_summaries(res),
            "cs_threshold": threshold,
            "cs_certainty": certainty,
            "rating_thresholds": { "stable": CS_STABLE, "minimally_acceptable": CS_ACCEPTABLE },
            "cs": cs_json,
            "stability": report.curves,
            "replicates": replicate_summaries(res),
            "warnings": res.warnings,
        });
        out.write("bootstrap.json", &json_text(&doc))?;
    }
    Ok(())
}

fn simulation_csv(res: &SimulationResult, meta: &RunMeta) -> String {
    let mut s = meta.csv_header();
    s.push_str(
        "condition,config,n,rep,sensitivity,specificity,edge_correlation,strength_correlation,\
         closeness_correlation,betweenness_correlation,edge_count,converged,error\n",
    );
    for r in &res.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.condition,
            r.config_index,
            r.n,
            r.rep,
            fmt_opt(r.sensitivity),
            fmt_opt(r.specificity),
            fmt_opt(r.edge_correlation),
            fmt_opt(r.strength_correlation),
            fmt_opt(r.closeness_correlation),
            fmt_opt(r.betweenness_correlation),
            r.edge_count.map_or_else(|| "NA".to_string(), |e| e.to_string()),
            r.converged,
            r.error.as_deref().map_or_else(|| "NA".to_string(), |e| format!("\"{}\"", e.replace('"', "\"\"")))
        );
    }
    s
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let cfg = estimator_config(&a.estimator)?;
    if a.ncases.is_empty() || a.ncases.iter().any(|&n| n < 10) {
        return Err(CliError::Usage("--ncases values must be at least 10".into()));
    }
    if a.nreps == 0 {
        return Err(CliError::Usage("--nreps must be at least 1".into()));
    }
    if let Some(l) = a.levels {
        if !(2..=10).contains(&l) {
            return Err(CliError::Usage(format!("--levels must lie in 2..=10, got {l}")));
        }
    }
    if let Some(p) = a.chain {
        if p < 3 {
            return Err(CliError::Usage(format!("--chain needs at least 3 nodes, got {p}")));
        }
        if !(0.0 <= a.w_min && a.w_min <= a.w_max && a.w_max < 1.0) {
            return Err(CliError::Usage("need 0 <= --w-min <= --w-max < 1".into()));
        }
    }
    let mut out = Output::new(&a.output)?;
    let seed = resolve_seed(a.output.seed);
    let grid_seed = seed.wrapping_add(1);
    let (truth, truth_json) = match (&a.input, a.chain) {
        (Some(path), _) => (
            read_document(path)?.to_network()?,
            json!({ "input": input_string(path) }),
        ),
        (None, Some(p)) => (
            chain_graph(p, a.w_min, a.w_max, seed, a.random_signs)?,
            json!({ "chain": p, "w_min": a.w_min, "w_max": a.w_max, "random_signs": a.random_signs, "chain_seed": seed }),
        ),
        (None, None) => return Err(CliError::Usage("give --input or --chain".into())),
    };
    let generator = match a.levels {
        None => Generator::Continuous,
        Some(levels) => Generator::Ordinal {
            levels,
            thresholds: match a.thresholds {
                ThresholdArg::Equiprobable => ThresholdMode::Equiprobable,
                // Sampled thresholds draw from each cell's own stream.
                ThresholdArg::Sampled => ThresholdMode::Sampled(grid_seed),
            },
        },
    };
    let config = json!({
        "command": "simulate",
        "truth": truth_json,
        "ncases": a.ncases,
        "nreps": a.nreps,
        "generator": generator,
        "grid_seed": grid_seed,
        "estimator": estimator_json(&cfg),
        "format": format_names(&out.formats),
    });
    let meta = RunMeta { seed, config: config.clone() };
    let grid = SimulationGrid {
        truth: truth.clone(),
        n_cases: a.ncases.clone(),
        n_reps: a.nreps,
        generator,
        configs: vec![cfg],
        master_seed: grid_seed,
    };
    let res = net_simulator(&grid)?;
    let summary = res.summary();
    for s in &summary {
        println!(
            "n = {}: sensitivity {}, specificity {}, correlation {} ({} failed)",
            s.n,
            fmt_opt(s.sensitivity.mean),
            fmt_opt(s.specificity.mean),
            fmt_opt(s.edge_correlation.mean),
            s.failed
        );
    }
    if out.wants(Format::Csv) {
        out.write("simulation.csv", &simulation_csv(&res, &meta))?;
    }
    if out.wants(Format::Json) {
        let doc = json!({ "meta": meta.json(), "conditions": summary });
        out.write("simulation_summary.json", &json_text(&doc))?;
        let truth_doc = NetworkDocument::from_network(
            &truth,
            DocumentMeta {
                tool_version: Some(TOOL_VERSION.to_string()),
                seed: Some(seed),
                config: Some(config),
                ..Default::default()
            },
        );
        out.write("truth.json", &truth_doc.to_json())?;
    }
    Ok(out.written)
}

pub fn cmd_compare(a: &CompareArgs) -> Result<Vec<PathBuf>> {
    let cfg = estimator_config(&a.estimator)?;
    check_readable(&a.input)?;
    check_readable(&a.input_b)?;
    let mut out = Output::new(&a.output)?;
    let seed = resolve_seed(a.output.seed);
    let config = json!({
        "command": "compare",
        "input": input_string(&a.input),
        "input_b": input_string(&a.input_b),
        "nperm": a.nperm,
        "estimator": estimator_json(&cfg),
        "format": format_names(&out.formats),
    });
    let meta = RunMeta { seed, config };
    let data_a = read_csv_default(&a.input)?;
    let data_b = read_csv_default(&a.input_b)?;
    let res = permutation_comparison(&data_a, &data_b, &cfg, a.nperm, seed)?;
    warn_all(&res.warnings);
    if out.wants(Format::Json) {
        out.write("comparison.json", &json_text(&json!({ "meta": meta.json(), "result": res })))?;
    }
    if out.wants(Format::Csv) {
        let mut s = meta.csv_header();
        s.push_str("statistic,observed,p_value,permutations\n");
        let _ = writeln!(s, "global_strength,{},{},{}", res.stat_global_strength, res.p_global, res.n_permutations);
        let _ = writeln!(s, "max_edge_difference,{},{},{}", res.stat_max_edge_diff, res.p_max_edge, res.n_permutations);
        out.write("comparison.csv", &s)?;
    }
    println!(
        "global strength difference {} (p = {}), max edge difference {} (p = {})",
        res.stat_global_strength, res.p_global, res.stat_max_edge_diff, res.p_max_edge
    );
    Ok(out.written)
}

pub fn run(command: &Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Centrality(a) => cmd_centrality(a),
        Command::Bootstrap(a) => cmd_bootstrap(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

/// Thread count from the flag, else `PCORNET_THREADS`, else `None`
/// (all cores).
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("PCORNET_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("PCORNET_THREADS must be a positive integer, got `{v}`")))?,
            ),
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(CliError::Usage("thread count must be at least 1".into()));
    }
    Ok(n)
}
