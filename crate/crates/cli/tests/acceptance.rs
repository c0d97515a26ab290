//! Acceptance criteria, run sequentially with one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL but do not fail
//! the target; any other outcome (an unexpected failure, or a known failure
//! that starts passing) does.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use pcornet::export::{stability_report, RunMeta};
use pcornet::input::write_csv;
use pcornet_core::bootstrap::{
    cs_coefficient, difference_test, nonparametric_boot, permutation_comparison, BootKind, BootstrapResult,
    CsRating, DifferenceTarget, Replicate,
};
use pcornet_core::correlation::{pearson_corr, polychoric_pair, CorMethod};
use pcornet_core::data::{default_labels, DataMatrix};
use pcornet_core::glasso::{
    glasso_fit_matrix, kkt_residual, nodewise_pcor, precision_to_pcor, GlassoOptions, PcorNetwork,
};
use pcornet_core::network::{CentralityIndex, CentralityTable};
use pcornet_core::pipeline::{estimate, EstimatorConfig};
use pcornet_core::selection::{ebic, ebic_glasso};
use pcornet_core::simulator::{
    chain_graph, net_simulator, ordinalize, sample_ggm, Generator, SimulationGrid, ThresholdMode,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

const KNOWN_FAILURES: &[u32] = &[3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, minutes: u64) -> bool {
    elapsed <= Duration::from_secs(60 * minutes)
}

fn pearson_config() -> EstimatorConfig {
    EstimatorConfig { cor_method: CorMethod::Pearson, ..Default::default() }
}

/// Random correlation matrix from a Wishart-like draw with 2P degrees of freedom.
fn random_correlation(p: usize, rng: &mut StdRng) -> DMatrix<f64> {
    let z = DMatrix::from_fn(p, 2 * p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let c = &z * z.transpose();
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt() })
}

/// N rows from a zero-mean normal with correlation `c`.
fn gaussian_data(c: &DMatrix<f64>, n: usize, rng: &mut StdRng) -> DataMatrix {
    let l = c.clone().cholesky().expect("positive definite").l();
    let p = c.nrows();
    let mut columns = vec![Vec::with_capacity(n); p];
    for _ in 0..n {
        let z = nalgebra::DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &l * z;
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(x[j]);
        }
    }
    DataMatrix::continuous(columns).unwrap()
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(101);
    let opts = GlassoOptions { tol: 1e-10, ..Default::default() };
    let (mut worst_inv, mut worst_pcor) = (0.0_f64, 0.0_f64);
    for t in 0..50 {
        let p = 2 + t % 9;
        let c = random_correlation(p, &mut rng);
        let (fit, _) = glasso_fit_matrix(&c, 0.0, &opts, None).unwrap();
        let inv = c.clone().try_inverse().unwrap();
        worst_inv = worst_inv.max(max_abs_diff(&fit.k, &inv));

        let data = gaussian_data(&c, 300, &mut rng);
        let s = pearson_corr(&data).unwrap();
        let (fit, _) = glasso_fit_matrix(&s.entries, 0.0, &opts, None).unwrap();
        let via_precision = precision_to_pcor(&fit.k, data.labels());
        let via_regression = nodewise_pcor(&data).unwrap();
        worst_pcor = worst_pcor.max(max_abs_diff(via_precision.weights(), via_regression.weights()));
    }
    let elapsed = start.elapsed();
    outcome(
        worst_inv <= 1e-6 && worst_pcor <= 1e-6 && within(elapsed, 1),
        format!("max |K - inv(S)| = {worst_inv:.2e}, max |pcor - nodewise| = {worst_pcor:.2e}, {elapsed:.1?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(202);
    let opts = GlassoOptions::default();
    let (mut worst_drop, mut worst_kkt_ratio, mut failures) = (0.0_f64, 0.0_f64, 0);
    for _ in 0..100 {
        let p = rng.random_range(3..=12);
        let n = rng.random_range(30..=200);
        let c = random_correlation(p, &mut rng);
        let s = pearson_corr(&gaussian_data(&c, n, &mut rng)).unwrap();
        let lambda = rng.random_range(0.02..0.9) * s.max_abs_off_diagonal();
        let (fit, trace) = match glasso_fit_matrix(&s.entries, lambda, &opts, None) {
            Ok(r) => r,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        for w in trace.objective.windows(2) {
            // a decrease beyond floating-point noise is a violation
            let slack = 1e-12 * (1.0 + w[0].abs());
            worst_drop = worst_drop.max((w[0] - w[1] - slack) / (1.0 + w[0].abs()));
        }
        let bound = opts.tol * s.mean_abs_off_diagonal();
        worst_kkt_ratio = worst_kkt_ratio.max(kkt_residual(&fit.k, &s.entries, lambda, false) / bound);
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && worst_drop <= 0.0 && worst_kkt_ratio <= 1.0 && within(elapsed, 2),
        format!(
            "{failures} non-converged, worst relative objective decrease {:.1e}, worst KKT / tolerance {worst_kkt_ratio:.3}, {elapsed:.1?}",
            worst_drop.max(0.0)
        ),
    )
}

fn chain_truth(seed: u64) -> PcorNetwork {
    chain_graph(8, 0.3, 0.4, seed, false).unwrap()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let grid = SimulationGrid {
        truth: chain_truth(303),
        n_cases: vec![100, 1000],
        n_reps: 100,
        generator: Generator::Continuous,
        configs: vec![EstimatorConfig::default()],
        master_seed: 304,
    };
    let summary = net_simulator(&grid).unwrap().summary();
    let mean = |n: usize, f: fn(&pcornet_core::simulator::ConditionSummary) -> Option<f64>| {
        summary.iter().find(|c| c.n == n).and_then(f).unwrap_or(f64::NAN)
    };
    let (sens_1000, spec_1000) = (mean(1000, |c| c.sensitivity.mean), mean(1000, |c| c.specificity.mean));
    let (sens_100, spec_100) = (mean(100, |c| c.sensitivity.mean), mean(100, |c| c.specificity.mean));
    let elapsed = start.elapsed();
    outcome(
        sens_1000 >= 0.9 && spec_1000 >= 0.9 && spec_100 >= sens_100 && within(elapsed, 5),
        format!(
            "N=1000: sensitivity {sens_1000:.3}, specificity {spec_1000:.3} (need both >= 0.9); N=100: specificity {spec_100:.3} vs sensitivity {sens_100:.3}; {elapsed:.1?}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut violations = Vec::new();
    let mut counts_seen = Vec::new();
    for d in 0..20u64 {
        let truth = chain_graph(6 + (d as usize % 5), 0.2, 0.4, 400 + d, d % 2 == 1).unwrap();
        let data = sample_ggm(&truth, 100 + 25 * d as usize, 500 + d).unwrap();
        let counts: Vec<usize> = [0.0, 0.25, 0.5]
            .iter()
            .map(|&gamma| estimate(&data, &EstimatorConfig { gamma, ..pearson_config() }).unwrap().network.edge_count())
            .collect();
        if counts.windows(2).any(|w| w[1] > w[0]) {
            violations.push(d);
        }
        counts_seen.push(counts);
    }
    let elapsed = start.elapsed();
    let strict = counts_seen.iter().filter(|c| c[0] > c[2]).count();
    outcome(
        violations.is_empty() && within(elapsed, 2),
        format!(
            "{} of 20 datasets non-increasing ({strict} strictly sparser at 0.5 than at 0), {elapsed:.1?}",
            20 - violations.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = StdRng::seed_from_u64(505);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let loglik = rng.random_range(-5000.0..0.0);
        let e = rng.random_range(0..200);
        let n = rng.random_range(10..5000);
        let p = rng.random_range(2..40);
        let bic = -2.0 * loglik + e as f64 * (n as f64).ln();
        worst = worst.max((ebic(loglik, e, n, p, 0.0) - bic).abs() / bic.abs().max(1.0));
    }
    // 200 + 10 ln 221 + 2 * 10 ln 20
    let hand = 313.8962724862574;
    let got = ebic(-100.0, 10, 221, 20, 0.5);

    // the same identity along a fitted path
    let data = sample_ggm(&chain_truth(506), 221, 507).unwrap();
    let trace = ebic_glasso(&pearson_corr(&data).unwrap(), 221, 0.0).unwrap();
    let path_worst = (0..trace.len())
        .map(|k| {
            let bic = -2.0 * trace.logliks[k] + trace.edge_counts[k] as f64 * 221f64.ln();
            (trace.ebic[k] - bic).abs() / bic.abs().max(1.0)
        })
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-12 && path_worst <= 1e-12 && (got - hand).abs() <= 1e-6,
        format!("EBIC(0) vs BIC relative gap {:.1e}; hand example {got:.10} vs {hand}", worst.max(path_worst)),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut w = DMatrix::zeros(2, 2);
    w[(0, 1)] = 0.5;
    w[(1, 0)] = 0.5;
    let truth = PcorNetwork::new(w, default_labels(2)).unwrap();
    let mut errors = Vec::new();
    for seed in 0..20 {
        let latent = sample_ggm(&truth, 10_000, 600 + seed).unwrap();
        let ord = ordinalize(&latent, 5, ThresholdMode::Equiprobable).unwrap();
        let r = polychoric_pair(ord.column(0), ord.column(1)).unwrap();
        errors.push((r - 0.5).abs());
    }
    let mae = errors.iter().sum::<f64>() / errors.len() as f64;
    let elapsed = start.elapsed();
    outcome(mae <= 0.05 && within(elapsed, 1), format!("mean absolute error {mae:.4}, {elapsed:.1?}"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let n_cases = vec![100, 250, 500, 1000, 2500];
    let grid = SimulationGrid {
        truth: chain_truth(707),
        n_cases: n_cases.clone(),
        n_reps: 50,
        generator: Generator::Continuous,
        configs: vec![EstimatorConfig::default()],
        master_seed: 708,
    };
    let summary = net_simulator(&grid).unwrap().summary();
    let sens: Vec<f64> = summary.iter().map(|c| c.sensitivity.mean.unwrap_or(f64::NAN)).collect();
    let cor: Vec<f64> = summary.iter().map(|c| c.edge_correlation.mean.unwrap_or(f64::NAN)).collect();
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let elapsed = start.elapsed();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        monotone(&sens) && monotone(&cor) && cor[4] >= 0.9 && within(elapsed, 10),
        format!("N {:?}: sensitivity [{}], correlation [{}], {elapsed:.1?}", n_cases, fmt(&sens), fmt(&cor)),
    )
}

/// Four-cycle with equal weights, so every pair of edges has a zero true difference.
fn equal_cycle() -> PcorNetwork {
    let mut w = DMatrix::zeros(4, 4);
    for i in 0..4 {
        let j = (i + 1) % 4;
        w[(i, j)] = 0.3;
        w[(j, i)] = 0.3;
    }
    PcorNetwork::new(w, default_labels(4)).unwrap()
}

/// Largest distance between the empirical CDF of `p` and the uniform CDF.
fn ks_uniform(p: &[f64]) -> f64 {
    let mut v = p.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let truth = equal_cycle();
    let cfg = pearson_config();
    let meta_reps = 200;
    let mut rejections = 0;
    for m in 0..meta_reps {
        let data = sample_ggm(&truth, 300, 800 + m).unwrap();
        let res = nonparametric_boot(&data, &cfg, 500, 10_000 + m).unwrap();
        let t = difference_test(&res, DifferenceTarget::EdgeVsEdge { a: (0, 1), b: (2, 3) }, 0.95).unwrap();
        rejections += t.significant as usize;
    }
    let rate = rejections as f64 / meta_reps as f64;

    let mut p_global = Vec::new();
    let mut p_edge = Vec::new();
    let mut rng = StdRng::seed_from_u64(888);
    for m in 0..100 {
        let data = sample_ggm(&truth, 300, 20_000 + m).unwrap();
        let mut rows: Vec<usize> = (0..300).collect();
        for i in (1..rows.len()).rev() {
            rows.swap(i, rng.random_range(0..=i));
        }
        let a = data.select_rows(&rows[..150]).unwrap();
        let b = data.select_rows(&rows[150..]).unwrap();
        let r = permutation_comparison(&a, &b, &cfg, 99, 30_000 + m).unwrap();
        p_global.push(r.p_global);
        p_edge.push(r.p_max_edge);
    }
    // asymptotic critical value at alpha = 0.01: sqrt(-ln(0.005) / 2) / sqrt(n)
    let critical = (-(0.005f64).ln() / 2.0).sqrt() / (p_global.len() as f64).sqrt();
    let (d_global, d_edge) = (ks_uniform(&p_global), ks_uniform(&p_edge));
    let elapsed = start.elapsed();
    outcome(
        (0.02..=0.08).contains(&rate) && d_global <= critical && d_edge <= critical && within(elapsed, 10),
        format!(
            "null rejection rate {rate:.3} over {meta_reps} (need 0.05 +/- 0.03); KS D global {d_global:.3}, max-edge {d_edge:.3} (critical {critical:.3}); {elapsed:.1?}"
        ),
    )
}

/// `base` moved to Pearson correlation exactly `r` with itself.
fn correlated_with(base: &[f64], r: f64) -> Vec<f64> {
    let n = base.len() as f64;
    let mean = base.iter().sum::<f64>() / n;
    let z: Vec<f64> = base.iter().map(|x| x - mean).collect();
    let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let z: Vec<f64> = z.iter().map(|x| x / norm).collect();
    // a centred direction orthogonal to z
    let mut u: Vec<f64> = (0..base.len()).map(|i| ((i * i) % 7) as f64).collect();
    let um = u.iter().sum::<f64>() / n;
    u.iter_mut().for_each(|x| *x -= um);
    let proj: f64 = u.iter().zip(&z).map(|(a, b)| a * b).sum();
    u.iter_mut().zip(&z).for_each(|(x, zi)| *x -= proj * zi);
    let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    z.iter().zip(&u).map(|(zi, ui)| 10.0 + r * zi + (1.0 - r * r).sqrt() * ui / un).collect()
}

fn table_with(v: Vec<f64>) -> CentralityTable {
    CentralityTable {
        strength: v.clone(),
        closeness: v.clone(),
        betweenness: v.clone(),
        z_strength: v.clone(),
        z_closeness: v.clone(),
        z_betweenness: v,
    }
}

/// Case-dropping result whose replicate at level `q` and position `i`
/// has centrality `profile(level, i)`.
fn synthetic_case_result(per_level: usize, profile: impl Fn(usize, usize) -> Vec<f64>) -> BootstrapResult {
    let proportions = vec![0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3];
    let original: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let labels = default_labels(original.len());
    let mut replicates = Vec::new();
    for (l, &q) in proportions.iter().enumerate() {
        for i in 0..per_level {
            replicates.push(Replicate {
                index: replicates.len(),
                proportion: q,
                n_rows: (q * 100.0) as usize,
                n_distinct: (q * 100.0) as usize,
                network: PcorNetwork::empty(labels.clone()),
                centrality: table_with(profile(l, i)),
            });
        }
    }
    BootstrapResult {
        kind: BootKind::CaseDropping,
        requested: replicates.len(),
        replicates,
        failures: Vec::new(),
        master_seed: 0,
        config: EstimatorConfig::default(),
        proportions,
        n_rows: 100,
        original: PcorNetwork::empty(labels),
        original_centrality: table_with(original),
        warnings: Vec::new(),
    }
}

fn criterion_9() -> Outcome {
    let original = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let good = correlated_with(&original, 0.71);
    let bad = correlated_with(&original, 0.69);
    let flat = vec![2.0; 6];
    let mut problems = Vec::new();

    // (description, below-threshold replicates per level, replicate used for them, expected CS)
    let cases: Vec<(&str, [usize; 7], &Vec<f64>, f64)> = vec![
        ("all above", [0; 7], &bad, 0.7),
        ("non-prefix qualifying level", [0, 1, 0, 1, 2, 0, 3], &bad, 0.6),
        ("none qualifies", [2; 7], &bad, 0.0),
        ("undefined counts as failing", [0, 1, 2, 2, 2, 2, 2], &flat, 0.2),
        ("exactly 95% at 0.5", [1, 1, 1, 1, 1, 2, 2], &bad, 0.5),
        ("qualifying through 0.3", [1, 1, 1, 2, 2, 2, 2], &bad, 0.3),
        ("unstable below 0.25", [0, 1, 2, 2, 2, 2, 2], &bad, 0.2),
    ];
    for (name, below, filler, expected) in &cases {
        let res = synthetic_case_result(20, |l, i| if i < below[l] { (*filler).clone() } else { good.clone() });
        let got = cs_coefficient(&res, CentralityIndex::Strength, 0.7, 0.95).unwrap();
        if got != *expected {
            problems.push(format!("{name}: {got} != {expected}"));
        }
        let meta = RunMeta { seed: 0, config: serde_json::json!({}) };
        let report = stability_report(&res, 0.7, 0.95, &meta).unwrap();
        let line = format!("strength,{},{}\n", expected, CsRating::of(*expected).describe());
        if !report.cs_csv.contains(&line) {
            problems.push(format!("{name}: report lacks `{}`", line.trim()));
        }
    }

    let ratings = [
        (0.7, "stable"),
        (0.5, "stable"),
        (0.4, "minimally acceptable"),
        (0.25, "minimally acceptable"),
        (0.2, "unstable"),
        (0.0, "unstable"),
    ];
    for (cs, want) in ratings {
        if CsRating::of(cs).describe() != want {
            problems.push(format!("rating of {cs} is not {want}"));
        }
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{} replicate profiles and {} rating boundaries reproduced", cases.len(), ratings.len())
        } else {
            problems.join("; ")
        },
    )
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let work = tempfile::tempdir().unwrap();
    let dir = work.path();
    let truth = chain_graph(6, 0.3, 0.4, 1010, true).unwrap();
    let data = sample_ggm(&truth, 200, 1011).unwrap();
    let ord = ordinalize(&sample_ggm(&truth, 150, 1012).unwrap(), 4, ThresholdMode::Equiprobable).unwrap();
    std::fs::write(dir.join("a.csv"), write_csv(&data)).unwrap();
    std::fs::write(dir.join("b.csv"), write_csv(&sample_ggm(&truth, 180, 1013).unwrap())).unwrap();
    std::fs::write(dir.join("ord.csv"), write_csv(&ord)).unwrap();
    let path = |f: &str| dir.join(f).display().to_string();

    let network = path("net/network.json");
    let commands: Vec<(&str, Vec<String>)> = vec![
        ("estimate", vec!["estimate".into(), "--input".into(), path("a.csv"), "--format".into(), "json,csv,dot,svg".into()]),
        ("estimate-ordinal", vec!["estimate".into(), "--input".into(), path("ord.csv"), "--refit".into()]),
        ("centrality", vec!["centrality".into(), "--input".into(), network.clone(), "--format".into(), "json,csv,svg".into()]),
        ("bootstrap", vec!["bootstrap".into(), "--input".into(), path("a.csv"), "--nboots".into(), "60".into()]),
        ("case", vec!["bootstrap".into(), "--input".into(), path("a.csv"), "--type".into(), "case".into(), "--nboots".into(), "70".into()]),
        ("simulate", vec!["simulate".into(), "--chain".into(), "6".into(), "--ncases".into(), "80,160".into(), "--nreps".into(), "5".into(), "--levels".into(), "4".into(), "--thresholds".into(), "sampled".into()]),
        ("compare", vec!["compare".into(), "--input".into(), path("a.csv"), "--input-b".into(), path("b.csv"), "--nperm".into(), "40".into()]),
    ];

    let bin = env!("CARGO_BIN_EXE_pcornet");
    let run = |args: &[String], threads: &str, out: &Path| {
        let status = Command::new(bin)
            .args(args)
            .args(["--seed", "77", "--threads", threads, "--out-dir"])
            .arg(out)
            .env_remove("PCORNET_THREADS")
            .output()
            .unwrap();
        status.status.success()
    };
    // the centrality command reads the network written by the first estimate
    assert!(run(&commands[0].1, "1", &dir.join("net")));

    let mut problems = Vec::new();
    let mut files = 0;
    for (name, args) in &commands {
        let mut outputs = Vec::new();
        for (k, threads) in ["1", "4", "1"].iter().enumerate() {
            let out = dir.join(format!("{name}-{k}"));
            if !run(args, threads, &out) {
                problems.push(format!("{name} failed with {threads} threads"));
            }
            outputs.push(read_dir_bytes(&out));
        }
        if outputs[0].is_empty() || outputs.iter().any(|o| *o != outputs[0]) {
            problems.push(format!("{name} outputs differ"));
        }
        files += outputs[0].len();
    }
    let elapsed = start.elapsed();
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{} commands, {files} files byte-identical across 1/4/1 threads, {elapsed:.1?}", commands.len())
        } else {
            problems.join("; ")
        },
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "oracle equivalence", criterion_1),
        (2, "objective and KKT", criterion_2),
        (3, "chain-graph recovery", criterion_3),
        (4, "gamma monotonicity", criterion_4),
        (5, "EBIC formula", criterion_5),
        (6, "polychoric consistency", criterion_6),
        (7, "sample-size curves", criterion_7),
        (8, "bootstrap calibration", criterion_8),
        (9, "CS-coefficient logic", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut stdout = std::io::stdout();
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let r = check();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (r.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        let _ = writeln!(stdout, "ACCEPTANCE {id:>2} {tag}: {name}: {}", r.detail);
        let _ = stdout.flush();
        if r.pass == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        let _ = writeln!(stdout, "acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
