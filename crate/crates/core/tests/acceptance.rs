//! Acceptance checks. Runs as a plain binary (no libtest harness) and prints
//! one PASS/FAIL line per criterion; exits nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use aelasso::data::{build_laplacian, Dataset, Edge, FeatureGraph, Laplacian};
use aelasso::exec::ExecMode;
use aelasso::experiment::{
    compare_models, run_experiment_with, synthetic_sweep_configs, write_synthetic_bundle, ComparisonTable,
};
use aelasso::metrics::{auc, PredictionSet};
use aelasso::models::ModelKind;
use aelasso::objectives::{
    ae_grad, ae_loss, joint_grad, joint_loss, lasso_loss, linear_grad, linear_loss, logistic_factorized_grad,
    logistic_loss_factorized, FactorizedParams, HyperParams, LinearParams, LinearPenalty,
};
use aelasso::optimizer::{init_params, minimize, FnObjective, OptimizerConfig};
use aelasso::stability::{consistency_index, mean_consistency, SubsetFamily};
use aelasso::synthetic::{generate, SyntheticSpec};
use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- oracles

/// Central differences with step `h`.
fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest `|a − b| / max(|a|, |b|, 1e-6)` over coordinates.
fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

/// `(1/M) Σ log(1 + exp(−y (θᵀx + b))) + α Σ sqrt(θ² + ε)`, written out
/// directly.
fn lasso_loss_oracle(x: &Array2<f64>, y: &Array1<f64>, theta: &[f64], bias: f64, alpha: f64, eps: f64) -> f64 {
    let m = x.nrows();
    let mut total = 0.0;
    for i in 0..m {
        let s: f64 = (0..theta.len()).map(|j| x[[i, j]] * theta[j]).sum::<f64>() + bias;
        total += (1.0 + (-y[i] * s).exp()).ln();
    }
    total / m as f64 + alpha * theta.iter().map(|t| (t * t + eps).sqrt()).sum::<f64>()
}

/// Mann-Whitney AUC by enumerating every (positive, negative) pair.
fn pairwise_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let mut sum = 0.0;
    let (mut np, mut nn) = (0usize, 0usize);
    for (i, &li) in labels.iter().enumerate() {
        if li > 0.0 {
            np += 1;
        } else {
            nn += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj < 0.0 {
                if scores[i] > scores[j] {
                    sum += 1.0;
                } else if scores[i] == scores[j] {
                    sum += 0.5;
                }
            }
        }
    }
    sum / (np as f64 * nn as f64)
}

// ------------------------------------------------------- random instances

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, sd: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| sd * rng.sample::<f64, _>(StandardNormal))
}

fn random_dataset(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Dataset {
    let names = (0..n).map(|j| format!("f{j}")).collect();
    let y = Array1::from_shape_fn(m, |i| if i % 2 == 0 || rng.random_bool(0.5) { 1.0 } else { -1.0 });
    Dataset::new(names, normal_matrix(rng, m, n, 1.0), Some(y)).unwrap()
}

fn random_laplacian(rng: &mut ChaCha8Rng, d: &Dataset) -> Laplacian {
    let names = d.feature_names();
    let mut edges = Vec::new();
    for a in 0..names.len() {
        for b in (a + 1)..names.len() {
            if rng.random_bool(0.3) {
                edges.push(Edge { a: names[a].clone(), b: names[b].clone(), weight: rng.random_range(0.1..2.0) });
            }
        }
    }
    build_laplacian(&FeatureGraph::new(edges).unwrap(), names).unwrap()
}

fn random_hyper(rng: &mut ChaCha8Rng, k: usize) -> HyperParams {
    HyperParams {
        alpha: rng.random_range(0.01..0.5),
        lambda_en: rng.random_range(0.0..1.0),
        lambda_fg: rng.random_range(0.01..1.0),
        lambda_ae: rng.random_range(0.1..2.0),
        lambda_l2: rng.random_range(0.001..0.1),
        hidden_units: k,
        ..Default::default()
    }
}

fn random_factorized(rng: &mut ChaCha8Rng, n: usize, k: usize) -> FactorizedParams {
    let flat: Vec<f64> = (0..FactorizedParams::flat_len(n, k))
        .map(|_| 0.7 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    FactorizedParams::from_flat(n, k, &flat).unwrap()
}

// ------------------------------------------------------------- criteria

fn gradient_checks() -> Outcome {
    const N: usize = 12;
    const K: usize = 3;
    const M: usize = 20;
    const STEP: f64 = 1e-5;
    let start = Instant::now();
    let mut worst = [0.0f64; 7];
    for instance in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + instance);
        let d = random_dataset(&mut rng, M, N);
        let l = random_laplacian(&mut rng, &d);
        let aug = normal_matrix(&mut rng, 7, N, 1.0);
        let h = random_hyper(&mut rng, K);
        let h_plain = HyperParams { lambda_fg: 0.0, ..h.clone() };

        let lin_flat: Vec<f64> = (0..=N).map(|_| rng.sample(StandardNormal)).collect();
        let lin = LinearParams::from_flat(N, &lin_flat).unwrap();
        let penalties = [LinearPenalty::Lasso, LinearPenalty::ElasticNet, LinearPenalty::Graph(&l)];
        for (slot, pen) in penalties.into_iter().enumerate() {
            let f = |x: &[f64]| linear_loss(&LinearParams::from_flat(N, x).unwrap(), &d, &h, pen).unwrap();
            let g = linear_grad(&lin, &d, &h, pen).unwrap().to_flat();
            worst[slot] = worst[slot].max(max_rel_err(&g, &fd_gradient(&f, &lin_flat, STEP)));
        }

        let p = random_factorized(&mut rng, N, K);
        let flat = p.to_flat();
        let unflat = |x: &[f64]| FactorizedParams::from_flat(N, K, x).unwrap();
        let factorized: [(Box<dyn Fn(&[f64]) -> f64>, Vec<f64>); 4] = [
            (
                Box::new(|x| logistic_loss_factorized(&unflat(x), &d).unwrap()),
                logistic_factorized_grad(&p, &d).unwrap().to_flat(),
            ),
            (Box::new(|x| ae_loss(&unflat(x), d.x()).unwrap()), ae_grad(&p, d.x()).unwrap().to_flat()),
            (
                Box::new(|x| joint_loss(&unflat(x), &d, None, &h_plain, None).unwrap()),
                joint_grad(&p, &d, None, &h_plain, None).unwrap().to_flat(),
            ),
            (
                Box::new(|x| joint_loss(&unflat(x), &d, Some(aug.view()), &h, Some(&l)).unwrap()),
                joint_grad(&p, &d, Some(aug.view()), &h, Some(&l)).unwrap().to_flat(),
            ),
        ];
        for (i, (f, g)) in factorized.iter().enumerate() {
            worst[3 + i] = worst[3 + i].max(max_rel_err(g, &fd_gradient(f.as_ref(), &flat, STEP)));
        }
    }
    let elapsed = start.elapsed();
    let names = ["lasso", "elastic-net", "graph", "factorized", "autoencoder", "joint", "joint+graph"];
    let max = worst.iter().copied().fold(0.0, f64::max);
    let per: Vec<String> = names.iter().zip(&worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    outcome(
        max <= 1e-4 && elapsed < Duration::from_secs(5),
        format!(
            "gradient vs central differences, 7 losses × 20 instances: max rel err {max:.2e} ≤ 1e-4 [{}]; {:.2} s < 5 s",
            per.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn formula_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ci_mismatch = 0;
    for _ in 0..1000 {
        let d = rng.random_range(2..=200usize);
        let k = rng.random_range(1..d);
        let r = rng.random_range((2 * k).saturating_sub(d)..=k);
        // s_i = {0..k}; s_j shares its last r members and fills from k onward.
        let s_i: Vec<usize> = (0..k).collect();
        let s_j: Vec<usize> = ((k - r)..k).chain(k..(2 * k - r)).collect();
        let oracle = (r as f64 * d as f64 - (k * k) as f64) / ((k * (d - k)) as f64);
        if consistency_index(&s_i, &s_j, d).unwrap() != oracle {
            ci_mismatch += 1;
        }
    }
    let identical = (0..200).all(|_| {
        let d = rng.random_range(2..=200usize);
        let k = rng.random_range(1..d);
        let s = sample(&mut rng, d, k).into_vec();
        consistency_index(&s, &s, d).unwrap() == 1.0
    });
    let disjoint = (1..100usize).all(|k| {
        let a: Vec<usize> = (0..k).collect();
        let b: Vec<usize> = (k..2 * k).collect();
        consistency_index(&a, &b, 2 * k).unwrap() == -1.0
    });

    let mut auc_mismatch = 0;
    for _ in 0..200 {
        let m = rng.random_range(2..=200usize);
        let levels = rng.random_range(2..12);
        let scores: Vec<f64> = (0..m).map(|_| rng.random_range(0..levels) as f64 * 0.25).collect();
        let mut labels: Vec<f64> = (0..m).map(|_| if rng.random_bool(0.4) { 1.0 } else { -1.0 }).collect();
        labels[0] = 1.0;
        labels[1] = -1.0;
        let fast = auc(&PredictionSet::new(scores.clone(), labels.clone()).unwrap()).unwrap();
        if fast != pairwise_auc(&scores, &labels) {
            auc_mismatch += 1;
        }
    }
    outcome(
        ci_mismatch == 0 && identical && disjoint && auc_mismatch == 0,
        format!(
            "CI exact on 1000 (d,k,r) triples: {} mismatches; identical → 1.0: {identical}; disjoint d=2k → −1.0: {disjoint}; \
             AUC vs pairwise oracle on 200 tied instances: {auc_mismatch} mismatches",
            ci_mismatch
        ),
    )
}

fn chance_correction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let family = SubsetFamily {
        k: 10,
        subsets: (0..200).map(|_| sample(&mut rng, 100, 10).into_vec()).collect(),
    };
    let mean = mean_consistency(&family, 100).unwrap();
    outcome(
        (-0.05..=0.05).contains(&mean),
        format!("mean CI of 200 random 10-subsets of 100 = {mean:.4} ∈ [−0.05, 0.05]"),
    )
}

fn definitional_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for draw in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + draw);
        let (n, k, m) = (rng.random_range(2..30), rng.random_range(1..6), rng.random_range(2..40));
        let d = random_dataset(&mut rng, m, n);
        let h = HyperParams {
            alpha: rng.random_range(0.0..1.0),
            hidden_units: k,
            ..Default::default()
        };
        let p = random_factorized(&mut rng, n, k);
        let joint = joint_loss(&p, &d, None, &h, None).unwrap();
        let theta = p.effective_theta();
        let lin = LinearParams { theta: theta.clone(), bias: p.bias };
        let lasso = lasso_loss(&lin, &d, &h).unwrap();
        let oracle = lasso_loss_oracle(&d.x().to_owned(), &d.labels().unwrap().to_owned(), theta.as_slice().unwrap(), p.bias, h.alpha, h.l1_epsilon);
        worst = worst.max((joint - lasso).abs()).max((joint - oracle).abs());
    }
    outcome(
        worst <= 1e-12,
        format!("joint loss with λ_AE = λ_ℓ2 = λ_fg = 0 vs lasso loss at θ = Wᵀu, 50 draws: max |Δ| = {worst:.2e} ≤ 1e-12"),
    )
}

fn autoencoder_learns() -> Outcome {
    let start = Instant::now();
    let spec = SyntheticSpec::default();
    let d = generate(&spec).unwrap().standardize().unwrap();
    let (n, k) = (d.n_features(), spec.n_groups);
    let x = d.x();
    let obj = FnObjective(
        |f: &[f64]| ae_loss(&FactorizedParams::from_flat(n, k, f).unwrap(), x).unwrap(),
        |f: &[f64]| ae_grad(&FactorizedParams::from_flat(n, k, f).unwrap(), x).unwrap().to_flat(),
    );
    let init = init_params(n, k, spec.seed);
    let before = ae_loss(&init, x).unwrap();
    let cfg = OptimizerConfig { rel_tol: 0.0, ..Default::default() };
    let fit = minimize(&obj, init.to_flat(), &cfg).unwrap();
    let ratio = fit.final_loss / before;
    let elapsed = start.elapsed();
    outcome(
        ratio <= 0.1 && elapsed < Duration::from_secs(30),
        format!(
            "autoencoder with k = G = {k}: reconstruction {before:.4} → {:.4} (ratio {ratio:.4} ≤ 0.1); {:.1} s < 30 s",
            fit.final_loss,
            elapsed.as_secs_f64()
        ),
    )
}

fn ci20(t: &ComparisonTable, kind: ModelKind) -> f64 {
    let i = t.k_list.iter().position(|&k| k == 20).expect("k = 20 in sweep");
    t.row(kind.tag()).expect("model in sweep").mean_ci[i]
}

fn stability_ordering(t: &ComparisonTable, elapsed: Duration) -> Outcome {
    use ModelKind::*;
    let [lasso, lg, lae, laeg, ag] =
        [Lasso, LassoGraph, LassoAutoencoder, LassoAutoencoderGraph, AgLassoAutoencoderGraph].map(|m| ci20(t, m));
    let best_ae = lae.max(laeg).max(ag);
    let pass = lae > lasso
        && ag >= laeg
        && laeg >= lg
        && lg > lasso
        && best_ae - lasso > 0.02
        && elapsed < Duration::from_secs(600);
    outcome(
        pass,
        format!(
            "mean CI at k=20, B=50: lasso {lasso:.4}, lasso-graph {lg:.4}, lasso-ae {lae:.4}, lasso-ae-graph {laeg:.4}, ag {ag:.4}; \
             need lae > lasso, ag ≥ laeg ≥ lg > lasso, best AE − lasso = {:.4} > 0.02; sweep {:.0} s < 600 s",
            best_ae - lasso,
            elapsed.as_secs_f64()
        ),
    )
}

fn snr_ordering(t: &ComparisonTable) -> Outcome {
    let count = |m: ModelKind| t.row(m.tag()).unwrap().snr_above_count;
    let lasso = count(ModelKind::Lasso);
    let ae: Vec<(ModelKind, usize)> = ModelKind::ALL.into_iter().filter(|m| m.is_factorized()).map(|m| (m, count(m))).collect();
    let pass = ae.iter().all(|&(_, c)| c >= lasso);
    let listed: Vec<String> = ae.iter().map(|(m, c)| format!("{m} {c}")).collect();
    outcome(
        pass,
        format!("top-20 features with |SNR| ≥ 1.96: lasso {lasso}; {} (each ≥ lasso)", listed.join(", ")),
    )
}

fn sparsity_without_loss(t: &ComparisonTable) -> Outcome {
    let lasso = t.row(ModelKind::Lasso.tag()).unwrap();
    let ag = t.row(ModelKind::AgLassoAutoencoderGraph.tag()).unwrap();
    let sparser = ag.selected_fraction <= lasso.selected_fraction;
    let no_loss = ag.validation_auc >= lasso.validation_auc - 0.03;
    outcome(
        sparser && no_loss,
        format!(
            "ag selected fraction {:.3} ≤ lasso {:.3}: {sparser}; ag AUC {:.4} ≥ lasso AUC {:.4} − 0.03: {no_loss}",
            ag.selected_fraction, lasso.selected_fraction, ag.validation_auc, lasso.validation_auc
        ),
    )
}

fn determinism(first_report: &Path, rerun_dir: &Path, cfg: &aelasso::experiment::ExperimentConfig) -> Outcome {
    let mut again = cfg.clone();
    again.output_dir = rerun_dir.to_path_buf();
    // The rerun is scheduled sequentially; the sweep ran on the thread pool.
    run_experiment_with(&again, ExecMode::Sequential).unwrap();
    let a = fs::read(first_report).unwrap();
    let b = fs::read(rerun_dir.join("report.json")).unwrap();
    outcome(
        a == b,
        format!(
            "{} report.json rerun (sequential vs parallel schedule): {} bytes, byte-identical: {}",
            cfg.model,
            a.len(),
            a == b
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |id: usize, o: Outcome| {
        println!("{} [{id}] {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, o));
    };

    report(1, gradient_checks());
    report(2, formula_oracles());
    report(3, chance_correction());
    report(4, definitional_identity());
    report(5, autoencoder_learns());

    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("synthetic");
    let spec = SyntheticSpec::default();
    write_synthetic_bundle(&spec, &bundle).unwrap();
    let cfgs = synthetic_sweep_configs(&bundle, &spec, 50);
    let start = Instant::now();
    let table = compare_models(&cfgs, ExecMode::Parallel).unwrap();
    let elapsed = start.elapsed();
    for row in &table.rows {
        println!(
            "     {:27} CI@k {:?} AUC {:.4} selected {:.3} |SNR|≥1.96 {}",
            row.model_tag,
            table.k_list.iter().zip(&row.mean_ci).map(|(k, c)| format!("{k}:{c:.3}")).collect::<Vec<_>>(),
            row.validation_auc,
            row.selected_fraction,
            row.snr_above_count
        );
    }
    report(6, stability_ordering(&table, elapsed));
    report(7, snr_ordering(&table));
    report(8, sparsity_without_loss(&table));

    let ag_cfg = cfgs.iter().find(|c| c.model == ModelKind::AgLassoAutoencoderGraph).unwrap();
    report(9, determinism(&ag_cfg.output_dir.join("report.json"), &tmp.path().join("rerun"), ag_cfg));

    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(id, _)| *id).collect();
    println!("{} of {} acceptance criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
