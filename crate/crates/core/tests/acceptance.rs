//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria 7 and 8 need the real GSM Arena and Arrow tables; point
//! `OBSOLESCENCE_GSM_CSV` / `OBSOLESCENCE_ARROW_CSV` at them (label column from
//! `OBSOLESCENCE_LABEL_COLUMN`, default `label`). Without them those lines
//! report FAIL (BLOCKED). The process exits non-zero on any failure only when
//! `ACCEPTANCE_STRICT=1`.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use obsolescence::data::Dataset;
use obsolescence::eval::stats::range_coverage;
use obsolescence::eval::{
    classifier_scores, detection_aauc, ks_two_sample, pearson_similarity, vote, wasserstein_1d, Metric, MetricValues, VotePolicy,
};
use obsolescence::generators::{FlowConfig, FlowModel, GanConfig, GanModel, GeneratorKind, Standardizer, VaeConfig, VaeModel};
use obsolescence::info::{entropy_knn, mutual_info_ksg};
use obsolescence::linalg::standard_normal;
use obsolescence::nn::{Activation, Loss, NetworkParams};
use obsolescence::pipeline::{run_pipeline, PipelineConfig, PipelineReport, DATASET_FILE, REPORT_FILE};
use obsolescence::semisup::{self_train, Provenance, SemiSupConfig};
use obsolescence::seed;
use obsolescence::topsis;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("metric oracles", metric_oracles),
        ("estimator calibration", estimator_calibration),
        ("gradient integrity", gradient_integrity),
        ("flow invertibility", flow_invertibility),
        ("vote reproduction", vote_reproduction),
        ("topsis selection", topsis_selection),
        ("discriminator performance", discriminator_performance),
        ("ml efficiency", ml_efficiency),
        ("determinism", determinism),
        ("semi-supervised sanity", semisup_sanity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        if !outcome.pass {
            failed += 1;
        }
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name} ({secs:.1}s): {}", i + 1, outcome.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- criterion 1

const EXACT: f64 = 1e-9;

fn sample_with_ties(rng: &mut seed::Rng, n: usize) -> Vec<f64> {
    // Half-integers on a short range so that ties are common.
    (0..n).map(|_| f64::from(rng.random_range(0..12)) * 0.5).collect()
}

fn ks_d_oracle(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], t: f64| s.iter().filter(|v| **v <= t).count() as f64 / s.len() as f64;
    a.iter().chain(b).map(|&t| (cdf(a, t) - cdf(b, t)).abs()).fold(0.0, f64::max)
}

fn ks_p_oracle(d: f64, na: usize, nb: usize) -> f64 {
    let z = d * ((na * nb) as f64 / (na + nb) as f64).sqrt();
    if z == 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for i in 1..=200_000u64 {
        let term = (-2.0 * (i * i) as f64 * z * z).exp();
        if i % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term == 0.0 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Integral of |F_a⁻¹(t) − F_b⁻¹(t)| over (0, 1).
fn wasserstein_oracle(a: &[f64], b: &[f64]) -> f64 {
    let sorted = |s: &[f64]| {
        let mut v = s.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (sa, sb) = (sorted(a), sorted(b));
    let mut cuts: Vec<f64> = (0..=sa.len()).map(|i| i as f64 / sa.len() as f64).collect();
    cuts.extend((0..=sb.len()).map(|j| j as f64 / sb.len() as f64));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let quantile = |s: &[f64], t: f64| s[((t * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
    cuts.windows(2)
        .map(|w| {
            let mid = (w[0] + w[1]) / 2.0;
            (quantile(&sa, mid) - quantile(&sb, mid)).abs() * (w[1] - w[0])
        })
        .sum()
}

/// Pearson r from all pairwise differences.
fn pearson_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in 0..x.len() {
            let (dx, dy) = (x[i] - x[j], y[i] - y[j]);
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn column(m: &Array2<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[[i, j]]).collect()
}

fn range_coverage_oracle(real: &Array2<f64>, synth: &Array2<f64>) -> Option<f64> {
    let mut total = 0.0;
    let mut used = 0;
    for j in 0..real.ncols() {
        let (mut lo_l, mut hi_l, mut lo_u, mut hi_u) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for v in column(real, j) {
            lo_l = lo_l.min(v);
            hi_l = hi_l.max(v);
        }
        for v in column(synth, j) {
            lo_u = lo_u.min(v);
            hi_u = hi_u.max(v);
        }
        if hi_l == lo_l {
            continue;
        }
        let below = if lo_u > lo_l { (lo_u - lo_l) / (hi_l - lo_l) } else { 0.0 };
        let above = if hi_u < hi_l { (hi_l - hi_u) / (hi_l - lo_l) } else { 0.0 };
        total += 1.0 - below - above;
        used += 1;
    }
    (used > 0).then(|| total / used as f64)
}

/// Mann-Whitney AUC with ties counted as one half.
fn auc_oracle(scores: &[f64], truth: &[i32]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &ti) in truth.iter().enumerate() {
        for (j, &tj) in truth.iter().enumerate() {
            if ti == 1 && tj == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

struct OracleTally {
    cases: usize,
    worst: f64,
    mismatches: Vec<String>,
}

impl OracleTally {
    fn check(&mut self, what: &str, got: f64, want: f64) {
        self.cases += 1;
        let err = (got - want).abs();
        self.worst = self.worst.max(err);
        if err > EXACT || got.is_nan() != want.is_nan() {
            self.mismatches.push(format!("{what}: {got} vs {want}"));
        }
    }

    fn flag(&mut self, what: String) {
        self.cases += 1;
        self.mismatches.push(what);
    }
}

fn metric_oracles() -> Outcome {
    let mut rng = seed::rng(101);
    let mut t = OracleTally {
        cases: 0,
        worst: 0.0,
        mismatches: Vec::new(),
    };
    for case in 0..200 {
        let (na, nb) = (rng.random_range(1..26), rng.random_range(1..26));
        let a = sample_with_ties(&mut rng, na);
        let b: Vec<f64> = sample_with_ties(&mut rng, nb).iter().map(|v| v + f64::from(case % 3) * 0.5).collect();
        let ks = ks_two_sample(&a, &b).unwrap();
        let d = ks_d_oracle(&a, &b);
        t.check("ks D", ks.d, d);
        t.check("ks p", ks.p_value, ks_p_oracle(d, na, nb));
        t.check("wasserstein", wasserstein_1d(&a, &b).unwrap(), wasserstein_oracle(&a, &b));

        let rows_l = rng.random_range(3..20);
        let rows_u = rng.random_range(3..20);
        let cols = rng.random_range(1..5);
        let real = standard_normal::<f64>(rows_l, cols, &mut rng);
        let synth = standard_normal::<f64>(rows_u, cols, &mut rng) * 1.3;
        let got = pearson_similarity(&real.view(), &synth.view()).unwrap();
        let want = if cols < 2 {
            0.0
        } else {
            let r = |m: &Array2<f64>| pearson_oracle(&column(m, 0), &column(m, 1)).unwrap();
            (r(&synth) - r(&real)).abs() / 2.0
        };
        t.check("pearson similarity", got, want);

        let real = Array2::from_shape_vec((rows_l, cols), sample_with_ties(&mut rng, rows_l * cols)).unwrap();
        let synth = Array2::from_shape_vec((rows_u, cols), sample_with_ties(&mut rng, rows_u * cols)).unwrap() - 0.5;
        match (range_coverage(&real.view(), &synth.view()), range_coverage_oracle(&real, &synth)) {
            (Ok(got), Some(want)) => t.check("range coverage", got, want),
            (Err(_), None) => t.cases += 1,
            (got, want) => t.flag(format!("range coverage: {got:?} vs {want:?}")),
        }

        let n = rng.random_range(2..40);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..=10)) / 10.0).collect();
        let truth: Vec<i32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let s = classifier_scores(&scores, &truth, 0.5).unwrap();
        let (mut tp, mut fp, mut tn, mut fn_) = (0.0, 0.0, 0.0, 0.0);
        for (&p, &y) in scores.iter().zip(&truth) {
            match (p >= 0.5, y) {
                (true, 1) => tp += 1.0,
                (true, _) => fp += 1.0,
                (false, 0) => tn += 1.0,
                (false, _) => fn_ += 1.0,
            }
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        t.check("accuracy", s.accuracy, (tp + tn) / n as f64);
        t.check("precision", s.precision, precision);
        t.check("recall", s.recall, recall);
        t.check("f1", s.f1, f1);
        match (s.roc_auc, auc_oracle(&scores, &truth)) {
            (Some(got), Some(want)) => {
                t.check("roc auc", got, want);
                let aauc = 1.0 - (2.0 * want.max(0.5) - 1.0);
                t.check("detection aauc", detection_aauc(&scores, &truth, 0.5).unwrap(), aauc);
            }
            (None, None) => t.cases += 1,
            (got, want) => t.flag(format!("roc auc: {got:?} vs {want:?}")),
        }
    }
    let detail = format!("{} comparisons on 200 random inputs, worst |diff| {:.1e}", t.cases, t.worst);
    match t.mismatches.first() {
        None => Outcome::new(true, detail),
        Some(first) => Outcome::new(false, format!("{detail}; {} mismatches, first {first}", t.mismatches.len())),
    }
}

// ---------------------------------------------------------------- criterion 2

fn gaussian_pair(n: usize, rho: f64, rng: &mut seed::Rng) -> (Array2<f64>, Array2<f64>) {
    let e = standard_normal::<f64>(n, 2, rng);
    let x = Array2::from_shape_fn((n, 1), |(i, _)| e[[i, 0]]);
    let z = Array2::from_shape_fn((n, 1), |(i, _)| rho * e[[i, 0]] + (1.0 - rho * rho).sqrt() * e[[i, 1]]);
    (x, z)
}

fn estimator_calibration() -> Outcome {
    let mut rng = seed::rng(202);
    let mut ok = true;
    let mut parts = Vec::new();

    let x = standard_normal::<f64>(50_000, 1, &mut rng);
    let h = entropy_knn(&x.view(), 3).unwrap().value;
    let truth = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    ok &= (h - truth).abs() <= 0.03;
    parts.push(format!("H={h:.4} (target {truth:.4} ±0.03)"));

    let n = 5000;
    let (x, _) = gaussian_pair(n, 0.0, &mut rng);
    let (z, _) = gaussian_pair(n, 0.0, &mut rng);
    let mi = mutual_info_ksg(&x.view(), &z.view(), 3).unwrap();
    ok &= mi.abs() <= 0.02;
    parts.push(format!("MI_indep={mi:.4} (±0.02)"));

    for rho in [0.5, 0.9] {
        let (x, z) = gaussian_pair(n, rho, &mut rng);
        let mi = mutual_info_ksg(&x.view(), &z.view(), 3).unwrap();
        let truth = -0.5 * (1.0 - rho * rho).ln();
        ok &= (mi - truth).abs() <= 0.05;
        parts.push(format!("MI(ρ={rho})={mi:.4} vs {truth:.4} (±0.05)"));
    }
    Outcome::new(ok, parts.join(", "))
}

// ---------------------------------------------------------------- criterion 3

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
/// Denominator floor so that near-zero gradients are compared absolutely.
const FD_FLOOR: f64 = 1e-5;
const FD_PROBES: usize = 8;

struct FdTally {
    cases: BTreeMap<&'static str, usize>,
    worst: f64,
    failures: Vec<String>,
}

impl FdTally {
    /// Compares `analytic` against central differences of `loss` at a few
    /// random coordinates of `params`.
    fn check(&mut self, path: &'static str, params: &[f64], analytic: &[f64], rng: &mut seed::Rng, mut loss: impl FnMut(&[f64]) -> f64) {
        assert_eq!(params.len(), analytic.len(), "{path}: gradient length");
        let mut worst: f64 = 0.0;
        for _ in 0..FD_PROBES {
            let k = rng.random_range(0..params.len());
            let mut p = params.to_vec();
            p[k] = params[k] + FD_STEP;
            let up = loss(&p);
            p[k] = params[k] - FD_STEP;
            let down = loss(&p);
            let numeric = (up - down) / (2.0 * FD_STEP);
            let err = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(FD_FLOOR);
            worst = worst.max(err);
        }
        *self.cases.entry(path).or_default() += 1;
        self.worst = self.worst.max(worst);
        if worst > FD_REL_TOL {
            self.failures.push(format!("{path} rel err {worst:.2e}"));
        }
    }
}

fn randomize(net: &mut NetworkParams<f64>, scale: f64, rng: &mut seed::Rng) {
    let values: Vec<f64> = standard_normal::<f64>(1, net.parameter_count(), rng).iter().map(|v| v * scale).collect();
    net.set_parameters_flat(&values);
}

fn small_mlp(rng: &mut seed::Rng, output: Activation) -> NetworkParams<f64> {
    let input = rng.random_range(1..5);
    let hidden: Vec<usize> = (0..rng.random_range(1..3)).map(|_| rng.random_range(2..6)).collect();
    let out = rng.random_range(1..4);
    let act = [Activation::Tanh, Activation::Relu, Activation::Sigmoid][rng.random_range(0..3)];
    let l2 = if rng.random_bool(0.5) { 1e-3 } else { 0.0 };
    let mut net = NetworkParams::mlp(input, &hidden, out, act, output, l2, rng).unwrap();
    randomize(&mut net, 0.7, rng);
    net
}

fn fd_mse_bce(t: &mut FdTally, rng: &mut seed::Rng) {
    for case in 0..40 {
        let bce = case % 2 == 1;
        let net = small_mlp(rng, if bce { Activation::Sigmoid } else { Activation::Linear });
        let rows = rng.random_range(1..6);
        let x = standard_normal::<f64>(rows, net.input_width(), rng);
        let target = if bce {
            Array2::from_shape_fn((rows, net.output_width()), |_| f64::from(rng.random_range(0..2)))
        } else {
            standard_normal::<f64>(rows, net.output_width(), rng)
        };
        let make_loss = || if bce { Loss::Bce(target.view()) } else { Loss::Mse(target.view()) };
        let (_, grads) = net.gradients(&x.view(), make_loss()).unwrap();
        let mut probe = net.clone();
        t.check(if bce { "bce" } else { "mse" }, &net.parameters_flat(), &grads.flatten(), rng, |p| {
            probe.set_parameters_flat(p);
            probe.gradients(&x.view(), make_loss()).unwrap().0
        });
    }
}

fn fd_elbo(t: &mut FdTally, rng: &mut seed::Rng) {
    for _ in 0..20 {
        let dim = rng.random_range(1..4);
        let cfg = VaeConfig {
            hidden: vec![rng.random_range(2..6)],
            latent_dim: rng.random_range(1..3),
            l2: 1e-3,
            ..VaeConfig::default()
        };
        let mut vae = VaeModel::<f64>::new(dim, &cfg, Standardizer::identity(dim), rng).unwrap();
        randomize(&mut vae.encoder, 0.5, rng);
        randomize(&mut vae.decoder, 0.5, rng);
        let rows = rng.random_range(1..6);
        let x = standard_normal::<f64>(rows, dim, rng);
        let eps = standard_normal::<f64>(rows, cfg.latent_dim, rng);
        let out = vae.loss_and_gradients(&x.view(), &eps.view()).unwrap();
        let split = vae.encoder.parameter_count();
        let mut params = vae.encoder.parameters_flat();
        params.extend(vae.decoder.parameters_flat());
        let mut grads = out.encoder.flatten();
        grads.extend(out.decoder.flatten());
        let mut probe = vae.clone();
        t.check("elbo", &params, &grads, rng, |p| {
            probe.encoder.set_parameters_flat(&p[..split]);
            probe.decoder.set_parameters_flat(&p[split..]);
            probe.loss_and_gradients(&x.view(), &eps.view()).unwrap().total
        });
    }
}

fn fd_gan(t: &mut FdTally, rng: &mut seed::Rng) {
    for case in 0..30 {
        let dim = rng.random_range(1..4);
        let cfg = GanConfig {
            noise_dim: rng.random_range(1..4),
            generator_hidden: vec![rng.random_range(2..6)],
            discriminator_hidden: vec![rng.random_range(2..6)],
            pac: rng.random_range(1..3),
            weight_decay: 1e-3,
            ..GanConfig::default()
        };
        let mut gan = GanModel::<f64>::new(dim, &cfg, Standardizer::identity(dim), rng).unwrap();
        randomize(&mut gan.generator, 0.6, rng);
        randomize(&mut gan.discriminator, 0.6, rng);
        let rows = cfg.pac * rng.random_range(1..4);
        let mut probe = gan.clone();
        if case % 2 == 0 {
            let real = standard_normal::<f64>(rows, dim, rng);
            let fake = standard_normal::<f64>(rows, dim, rng);
            let (_, grads) = gan.discriminator_loss_and_gradients(&real.view(), &fake.view()).unwrap();
            t.check("gan discriminator", &gan.discriminator.parameters_flat(), &grads.flatten(), rng, |p| {
                probe.discriminator.set_parameters_flat(p);
                probe.discriminator_loss_and_gradients(&real.view(), &fake.view()).unwrap().0
            });
        } else {
            let noise = standard_normal::<f64>(rows, cfg.noise_dim, rng);
            let (_, grads) = gan.generator_loss_and_gradients(&noise.view()).unwrap();
            t.check("gan generator", &gan.generator.parameters_flat(), &grads.flatten(), rng, |p| {
                probe.generator.set_parameters_flat(p);
                probe.generator_loss_and_gradients(&noise.view()).unwrap().0
            });
        }
    }
}

fn random_flow(dim: usize, layers: usize, rng: &mut seed::Rng) -> FlowModel<f64> {
    let cfg = FlowConfig {
        coupling_layers: layers,
        hidden: 5,
        ..FlowConfig::default()
    };
    let mut flow = FlowModel::<f64>::new(dim, &cfg, Standardizer::identity(dim), rng).unwrap();
    for layer in &mut flow.layers {
        randomize(&mut layer.scale_net, 0.5, rng);
        randomize(&mut layer.translate_net, 0.5, rng);
    }
    flow
}

fn flow_params(flow: &FlowModel<f64>) -> Vec<f64> {
    flow.layers
        .iter()
        .flat_map(|l| l.scale_net.parameters_flat().into_iter().chain(l.translate_net.parameters_flat()))
        .collect()
}

fn set_flow_params(flow: &mut FlowModel<f64>, p: &[f64]) {
    let mut at = 0;
    for layer in &mut flow.layers {
        for net in [&mut layer.scale_net, &mut layer.translate_net] {
            let n = net.parameter_count();
            net.set_parameters_flat(&p[at..at + n]);
            at += n;
        }
    }
}

fn fd_flow(t: &mut FdTally, rng: &mut seed::Rng) {
    for _ in 0..20 {
        let dim = rng.random_range(2..5);
        let flow = random_flow(dim, rng.random_range(1..4), rng);
        let x = standard_normal::<f64>(rng.random_range(1..6), dim, rng);
        let (_, grads) = flow.loss_and_gradients(&x.view()).unwrap();
        let analytic: Vec<f64> = grads.iter().flat_map(|(s, tr)| s.flatten().into_iter().chain(tr.flatten())).collect();
        let mut probe = flow.clone();
        t.check("flow nll", &flow_params(&flow), &analytic, rng, |p| {
            set_flow_params(&mut probe, p);
            probe.loss_and_gradients(&x.view()).unwrap().0
        });
    }
}

fn gradient_integrity() -> Outcome {
    let mut rng = seed::rng(303);
    let mut t = FdTally {
        cases: BTreeMap::new(),
        worst: 0.0,
        failures: Vec::new(),
    };
    fd_mse_bce(&mut t, &mut rng);
    fd_elbo(&mut t, &mut rng);
    fd_gan(&mut t, &mut rng);
    fd_flow(&mut t, &mut rng);
    let total: usize = t.cases.values().sum();
    let per_path: Vec<String> = t.cases.iter().map(|(k, v)| format!("{k} {v}")).collect();
    let detail = format!(
        "{total} cases ({}), worst rel err {:.2e} (tol {FD_REL_TOL:.0e}, floor {FD_FLOOR:.0e})",
        per_path.join(", "),
        t.worst
    );
    let pass = t.failures.is_empty() && total >= 100;
    match t.failures.first() {
        None => Outcome::new(pass, detail),
        Some(first) => Outcome::new(false, format!("{detail}; {} failing, first {first}", t.failures.len())),
    }
}

// ---------------------------------------------------------------- criterion 4

fn flow_invertibility() -> Outcome {
    let mut rng = seed::rng(404);
    let mut worst_trip: f64 = 0.0;
    let mut worst_logdet: f64 = 0.0;
    for dim in [2, 3, 5] {
        let flow = random_flow(dim, 6, &mut rng);
        let x = standard_normal::<f64>(200, dim, &mut rng) * 2.0;
        let (z, _) = flow.forward(&x.view()).unwrap();
        let back = flow.inverse(&z.view()).unwrap();
        worst_trip = worst_trip.max((&back - &x).iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let flow = random_flow(2, 6, &mut rng);
    let h = 1e-5;
    for _ in 0..50 {
        let p = standard_normal::<f64>(1, 2, &mut rng);
        let (_, logdet) = flow.forward(&p.view()).unwrap();
        let mut jac = [[0.0; 2]; 2];
        for (j, col) in [0, 1].into_iter().enumerate() {
            let mut up = p.clone();
            let mut down = p.clone();
            up[[0, col]] += h;
            down[[0, col]] -= h;
            let fu = flow.forward(&up.view()).unwrap().0;
            let fd = flow.forward(&down.view()).unwrap().0;
            for (i, row) in jac.iter_mut().enumerate() {
                row[j] = (fu[[0, i]] - fd[[0, i]]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        worst_logdet = worst_logdet.max((det.abs().ln() - logdet[0]).abs());
    }
    Outcome::new(
        worst_trip < 1e-8 && worst_logdet < 1e-4,
        format!("round trip max err {worst_trip:.1e} (< 1e-8), log-det vs numeric Jacobian max err {worst_logdet:.1e} (< 1e-4, m=2)"),
    )
}

// ---------------------------------------------------------------- criterion 5

fn printed_comparison() -> BTreeMap<(String, String), MetricValues> {
    // KS D, KS p, W1, Pearson, range coverage, log L, LR aAUC, SVM aAUC.
    let rows = [
        ("gan", "arrow", [0.0731, 8.49e-47, 0.281, 0.0, 0.289, -2.656, 0.976, 1.000]),
        ("gan", "gsm", [0.1005, 1.54e-16, 1.779, 0.209, 0.917, -5.663, 0.860, 0.995]),
        ("vae", "arrow", [0.0543, 5.85e-26, 0.166, 0.0, 0.319, -2.439, 0.997, 0.998]),
        ("vae", "gsm", [0.0593, 4.62e-08, 1.538, 0.0211, 0.659, -4.652, 0.946, 0.986]),
        ("flow", "arrow", [0.1616, 3.81e-228, 0.526, 0.0, 0.142, -3.561, 1.000, 0.890]),
        ("flow", "gsm", [0.0476, 6.77e-06, 0.966, 0.0290, 0.964, -5.237, 0.991, 0.987]),
    ];
    rows.iter()
        .map(|(g, d, v)| ((g.to_string(), d.to_string()), Metric::ALL.iter().copied().zip(*v).collect()))
        .collect()
}

fn vote_reproduction() -> Outcome {
    let table = printed_comparison();
    let default = vote(&table, &VotePolicy::default()).unwrap();
    let strict = vote(&table, &VotePolicy::strict()).unwrap();
    let totals = |t: &obsolescence::eval::VoteTally| {
        ["flow", "vae", "gan"].iter().map(|g| format!("{g} {}", t.totals.get(*g).copied().unwrap_or(0))).collect::<Vec<_>>().join(" / ")
    };
    let expected = [("flow", 8), ("vae", 6), ("gan", 4)];
    let deviation = if expected.iter().all(|(g, n)| default.totals.get(*g) == Some(n)) {
        "no deviation from 8/6/4".to_string()
    } else {
        "DEVIATES from 8/6/4".to_string()
    };
    Outcome::new(
        default.winner == "flow",
        format!(
            "winner {} with {} under shared-tie policy ({deviation}); strict policy gives {} (winner {})",
            default.winner,
            totals(&default),
            totals(&strict),
            strict.winner
        ),
    )
}

// ---------------------------------------------------------------- criterion 6

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn topsis_selection() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut notes = Vec::new();
    for (name, file, want_m) in [("arrow", "arrow_sweep.csv", 1.0), ("gsm", "gsm_sweep.csv", 2.0)] {
        let mut reader = csv::Reader::from_path(fixture(file)).unwrap();
        let headers = reader.headers().unwrap().clone();
        let col = |h: &str| headers.iter().position(|x| x == h).unwrap();
        let picks = [col("m"), col("rmse"), col("mi"), col("info_loss")];
        let closeness_col = col("closeness");
        let mut rows = Vec::new();
        let mut printed = Vec::new();
        for rec in reader.records() {
            let rec = rec.unwrap();
            rows.extend(picks.iter().map(|&j| rec[j].parse::<f64>().unwrap()));
            printed.push(rec[closeness_col].parse::<f64>().unwrap());
        }
        let m = Array2::from_shape_vec((printed.len(), picks.len()), rows).unwrap();
        let decision = topsis::rank(&m.view(), &topsis::equal_weights(picks.len()), &topsis::default_sweep_directions()).unwrap();
        let best_m = m[[decision.best(), 0]];
        ok &= best_m == want_m;
        let max_dev = decision.closeness.iter().zip(&printed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let side: Vec<String> = decision.closeness.iter().zip(&printed).map(|(a, b)| format!("{a:.4}|{b:.4}")).collect();
        parts.push(format!("{name}: best m={best_m} (want {want_m}), C computed|printed [{}]", side.join(" ")));
        if max_dev > 0.05 {
            notes.push(format!("{name} max |ΔC| {max_dev:.3} > 0.05: printed weights unknown, equal weights used"));
        }
    }
    if notes.is_empty() {
        notes.push("all |ΔC| <= 0.05".into());
    }
    Outcome::new(ok, format!("{}; calibration: {}", parts.join("; "), notes.join("; ")))
}

// ------------------------------------------------------------ criteria 7 and 8

fn label_column() -> String {
    std::env::var("OBSOLESCENCE_LABEL_COLUMN").unwrap_or_else(|_| "label".into())
}

fn real_run(path: &str, cv_folds: usize) -> Result<PipelineReport, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        dataset: PathBuf::from(path),
        label_column: label_column(),
        generator: GeneratorKind::Flow,
        cv_folds,
        out_dir: dir.path().to_path_buf(),
        ..PipelineConfig::default()
    };
    run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(dir.path().join(REPORT_FILE)).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn blocked(vars: &[&str]) -> Outcome {
    Outcome::new(false, format!("BLOCKED: dataset not available (set {})", vars.join(", ")))
}

fn discriminator_performance() -> Outcome {
    let (Ok(gsm), Ok(arrow)) = (std::env::var("OBSOLESCENCE_GSM_CSV"), std::env::var("OBSOLESCENCE_ARROW_CSV")) else {
        return blocked(&["OBSOLESCENCE_GSM_CSV", "OBSOLESCENCE_ARROW_CSV"]);
    };
    let acc = |path: &str| -> Result<f64, String> {
        real_run(path, 5)?
            .cross_validation
            .map(|cv| cv.accuracy)
            .ok_or_else(|| "no cross-validation in report".to_string())
    };
    match (acc(&gsm), acc(&arrow)) {
        (Ok(g), Ok(a)) => {
            let pass = g >= 0.95 && g > 0.9136 && a >= 0.94;
            let band = |v: f64, c: f64| if (v - c).abs() <= 0.03 { "in band" } else { "outside band" };
            Outcome::new(
                pass,
                format!(
                    "gsm s_acc {g:.4} (>= 0.95 and > 0.9136; {} of 0.9836±0.03), arrow s_acc {a:.4} (>= 0.94; {} of 0.9679±0.03)",
                    band(g, 0.9836),
                    band(a, 0.9679)
                ),
            )
        }
        (g, a) => Outcome::new(false, format!("run failed: gsm {g:?}, arrow {a:?}")),
    }
}

fn ml_efficiency() -> Outcome {
    let Ok(arrow) = std::env::var("OBSOLESCENCE_ARROW_CSV") else {
        return blocked(&["OBSOLESCENCE_ARROW_CSV"]);
    };
    match real_run(&arrow, 0).map(|r| r.efficiency) {
        Ok(Some(eff)) => {
            let dt = eff.get("dtree").copied().unwrap_or(f64::NAN);
            let lr = eff.get("logreg").copied().unwrap_or(f64::NAN);
            Outcome::new(
                dt >= 0.94 && (0.78..=0.90).contains(&lr),
                format!("DT {dt:.4} (>= 0.94), LR {lr:.4} (in [0.78, 0.90])"),
            )
        }
        Ok(None) => Outcome::new(false, "efficiency not computed"),
        Err(e) => Outcome::new(false, format!("run failed: {e}")),
    }
}

// ---------------------------------------------------------------- criterion 9

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = common::write_toy(dir.path(), "toy.csv", 150, 4, 9);
    let run = |out: &str| {
        let cfg = common::fast_config(&data, &dir.path().join(out));
        run_pipeline(&cfg).unwrap();
        let read = |f: &str| std::fs::read(dir.path().join(out).join(f)).unwrap();
        (read(DATASET_FILE), read(REPORT_FILE))
    };
    let (csv_a, report_a) = run("a");
    let (csv_b, report_b) = run("b");
    let same = csv_a == csv_b && report_a == report_b;
    Outcome::new(
        same,
        format!(
            "seed 42 twice: {} ({} and {} bytes)",
            if same { "byte-identical dataset and report" } else { "outputs differ" },
            csv_a.len(),
            report_a.len()
        ),
    )
}

// --------------------------------------------------------------- criterion 10

fn planted(n_per_class: usize, rng: &mut seed::Rng) -> (Array2<f64>, Vec<i32>) {
    let e = standard_normal::<f64>(2 * n_per_class, 2, rng) * 0.6;
    let x = Array2::from_shape_fn((2 * n_per_class, 2), |(i, j)| if i < n_per_class { 0.0 } else { 10.0 } + e[[i, j]]);
    let y = (0..2 * n_per_class).map(|i| i32::from(i >= n_per_class)).collect();
    (x, y)
}

fn planted_truth(x: &ArrayView2<f64>) -> Vec<i32> {
    x.rows().into_iter().map(|r| i32::from(r[0] + r[1] > 10.0)).collect()
}

fn semisup_sanity() -> Outcome {
    let mut rng = seed::rng(1010);
    let (lx, ly) = planted(150, &mut rng);
    let (ux, _) = planted(150, &mut rng);
    let labeled = Dataset::with_default_names(lx.clone(), ly.clone()).unwrap();
    let generated = Dataset::unlabeled(ux.clone());
    let (model, aug) = self_train(&labeled, &generated, &SemiSupConfig::default()).unwrap();

    let n_l = ly.len();
    let originals_kept = aug.provenance[..n_l].iter().all(|p| *p == Provenance::Original)
        && aug.labels[..n_l] == ly[..]
        && aug.features.slice(ndarray::s![..n_l, ..]) == lx;
    let kept = aug.features.slice(ndarray::s![n_l.., ..]);
    let assigned_right = planted_truth(&kept) == aug.labels[n_l..];
    let predicted = model.predict(&ux.view()).unwrap();
    let recovered = predicted.iter().zip(planted_truth(&ux.view())).filter(|(a, b)| **a == *b).count();
    let pass = originals_kept && assigned_right && recovered == ux.nrows();
    Outcome::new(
        pass,
        format!(
            "{recovered}/{} unlabeled labels recovered, {} assigned by cluster rules ({} scrubbed, {} skipped), originals {}",
            ux.nrows(),
            aug.assigned_count(),
            aug.scrubbed_count(),
            aug.skipped_count(),
            if originals_kept { "unchanged" } else { "ALTERED" }
        ),
    )
}
