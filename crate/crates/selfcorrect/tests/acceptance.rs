//! Acceptance gate: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::process::Command;

use selfcorrect::estimation::{
    aggregate_metrics_strict, estimate_classification, estimate_generation, ClassificationMode,
    LabelSnapshot,
};
use selfcorrect::fitting::{fit_geometric, predict_from_single_round};
use selfcorrect::simulator::{
    empirical_curve, run_corollary1, simulate, ChainRng, ForcingMode, SimulationConfig,
};
use selfcorrect::theory::{
    closed_form_accuracy, derive_params, oracle_verifier_curve, recursive_curve,
    rounds_to_converge, AccuracyCurve, DatasetProfile, QuestionProfile,
};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id} ({name}): {verdict} — {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn random_params(rng: &mut ChainRng) -> selfcorrect::TheoryParams {
    loop {
        let cl = rng.next_f64();
        let cs = rng.next_f64();
        let acc0 = rng.next_f64();
        if 1.0 - cl + cs > 1e-6 {
            return derive_params(cl, cs, acc0).unwrap();
        }
    }
}

fn homogeneous(n: usize, p0: f64, p_con: f64, p_cri: f64) -> DatasetProfile {
    DatasetProfile::new(vec![QuestionProfile::new(p0, p_con, p_cri).unwrap(); n]).unwrap()
}

#[test]
fn criterion_01_closed_form_equals_recursion() {
    let mut rng = ChainRng::from_seed(0xACC1);
    let mut max_diff = 0.0f64;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let rec = recursive_curve(&p, 50).unwrap();
        for t in 0..=50u32 {
            let cf = closed_form_accuracy(&p, t).unwrap();
            max_diff = max_diff.max((cf - rec.values[t as usize]).abs());
        }
    }
    report(
        1,
        "closed form vs recursion",
        max_diff < 1e-10,
        &format!("max |diff| = {max_diff:.3e} over 1000 draws, t <= 50"),
    );
}

#[test]
fn criterion_02_geometric_gap_law() {
    let mut rng = ChainRng::from_seed(0xACC2);
    let mut max_dev = 0.0f64;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let upp = p.upp.unwrap();
        for t in 0..=50u32 {
            let acc = closed_form_accuracy(&p, t).unwrap();
            let lhs = (upp - acc).abs();
            let rhs = p.alpha.abs().powi(t as i32) * (upp - p.acc0).abs();
            max_dev = max_dev.max((lhs - rhs).abs());
        }
    }
    report(
        2,
        "geometric gap law",
        max_dev < 1e-10,
        &format!("max deviation = {max_dev:.3e}"),
    );
}

#[test]
fn criterion_03_simulation_agreement() {
    let d = homogeneous(500, 0.5, 0.9, 0.3);
    let config = SimulationConfig {
        rounds: 5,
        samples_per_question: 20,
        master_seed: 1,
        oracle_verifier: false,
    };
    let curve = empirical_curve(&simulate(&d, &config).unwrap());
    let params = derive_params(0.9, 0.3, 0.5).unwrap();
    let mut worst = 0.0f64;
    let mut pass = true;
    for t in 0..=5u32 {
        let theory = closed_form_accuracy(&params, t).unwrap();
        let se = (theory * (1.0 - theory) / 10_000.0).sqrt();
        let z = (curve.values[t as usize] - theory).abs() / se;
        worst = worst.max(z);
        pass &= z < 3.0;
    }
    report(
        3,
        "simulation within 3 SE of closed form",
        pass,
        &format!("worst |z| = {worst:.2} over rounds 0..=5"),
    );
}

#[test]
fn criterion_04_single_round_prediction() {
    let d = homogeneous(500, 0.5, 0.9, 0.3);
    let config = SimulationConfig {
        rounds: 5,
        samples_per_question: 20,
        master_seed: 1,
        oracle_verifier: false,
    };
    let transcript = simulate(&d, &config).unwrap();
    // Only rounds 0 -> 1 feed the estimate.
    let estimates: Vec<_> = (0..transcript.n_questions())
        .map(|q| estimate_generation(&transcript, q, 0).unwrap())
        .collect();
    let (cl_hat, cs_hat) = aggregate_metrics_strict(&estimates).unwrap();
    let acc0 = empirical_curve(&transcript).values[0];
    let predicted = predict_from_single_round(acc0, cl_hat, cs_hat, 5).unwrap();

    let held_out = SimulationConfig {
        master_seed: 2,
        ..config
    };
    let observed = empirical_curve(&simulate(&d, &held_out).unwrap());
    let err = (predicted.values[5] - observed.values[5]).abs();
    report(
        4,
        "single-round prediction of Acc_5",
        err <= 0.02,
        &format!("|predicted - held-out| = {err:.4}"),
    );
}

#[test]
fn criterion_05_corollary1_final_spread() {
    let d = homogeneous(500, 0.5, 0.9, 0.3);
    let config = SimulationConfig {
        rounds: 10,
        samples_per_question: 20,
        master_seed: 51,
        oracle_verifier: false,
    };
    let targets = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    let curves = run_corollary1(
        &d,
        &targets,
        &config,
        ForcingMode::Classification { k_classes: 4 },
    )
    .unwrap();
    let finals: Vec<f64> = curves.iter().map(|c| *c.values.last().unwrap()).collect();
    let spread = finals.iter().cloned().fold(f64::MIN, f64::max)
        - finals.iter().cloned().fold(f64::MAX, f64::min);
    report(
        5,
        "corollary 1: final accuracy independent of Acc_0",
        spread < 0.02,
        &format!("final-round spread = {spread:.4} across 6 targets"),
    );
}

#[test]
fn criterion_06_corollary2_convergence_rounds() {
    let fast = derive_params(0.6, 0.4, 0.0).unwrap(); // alpha 0.2, gap 0.5
    let slow = derive_params(0.95, 0.05, 0.0).unwrap(); // alpha 0.9, gap 0.5
    let t_fast = rounds_to_converge(&fast, 1e-6).unwrap();
    let t_slow = rounds_to_converge(&slow, 1e-6).unwrap();
    let decay = 0.2f64.powi(10);
    let pass = t_fast == 9 && t_slow == 125 && decay < 2e-7;
    report(
        6,
        "corollary 2: convergence-rate comparison",
        pass,
        &format!("rounds: alpha=0.2 -> {t_fast}, alpha=0.9 -> {t_slow}; 0.2^10 = {decay:.3e}"),
    );
}

#[test]
fn criterion_07_corollary3_oracle_verifier() {
    let d = homogeneous(500, 0.0, 0.9, 0.5);
    let config = SimulationConfig {
        rounds: 10,
        samples_per_question: 20,
        master_seed: 7,
        oracle_verifier: true,
    };
    let curve = empirical_curve(&simulate(&d, &config).unwrap());
    let theory = oracle_verifier_curve(0.5, 0.0, 10).unwrap();
    let mut pass = true;
    let mut worst = 0.0f64;
    for t in 0..=10usize {
        let p = theory.values[t];
        let se = (p * (1.0 - p) / 10_000.0).sqrt();
        let diff = (curve.values[t] - p).abs();
        if se == 0.0 {
            pass &= diff == 0.0;
        } else {
            worst = worst.max(diff / se);
            pass &= diff < 3.0 * se;
        }
    }
    let acc10 = curve.values[10];
    pass &= acc10 > 0.999;
    report(
        7,
        "corollary 3: oracle verifier matches 1 - 0.5^t",
        pass,
        &format!("worst |z| = {worst:.2}, Acc_10 = {acc10}"),
    );
}

#[test]
fn criterion_08_estimator_consistency() {
    let q = QuestionProfile::new(0.5, 0.9, 0.3).unwrap();
    let d = DatasetProfile::new(vec![q]).unwrap();
    let config = SimulationConfig {
        rounds: 1,
        samples_per_question: 10_000,
        master_seed: 8,
        oracle_verifier: false,
    };
    let tr = simulate(&d, &config).unwrap();
    let e = estimate_generation(&tr, 0, 0).unwrap();
    let z_p = (e.p_hat - 0.5).abs() / (0.5f64 * 0.5 / 10_000.0).sqrt();
    let z_con = (e.p_con_hat.unwrap() - 0.9).abs()
        / (0.9f64 * 0.1 / e.n_correct_support as f64).sqrt();
    let z_cri =
        (e.p_cri_hat.unwrap() - 0.3).abs() / (0.3f64 * 0.7 / e.n_wrong_support as f64).sqrt();
    let generation_ok = z_p < 3.0 && z_con < 3.0 && z_cri < 3.0;

    // Worked classification example: K=4, prior (0.4, 0.3, 0.2, 0.1),
    // repair column (0.9, 0.5, 0.3, 0.1).
    let rows = vec![
        vec![0.9, 0.1 / 3.0, 0.1 / 3.0, 0.1 / 3.0],
        vec![0.5, 0.5, 0.0, 0.0],
        vec![0.3, 0.0, 0.7, 0.0],
        vec![0.1, 0.0, 0.0, 0.9],
    ];
    let snap = LabelSnapshot::new(0, vec![0.4, 0.3, 0.2, 0.1], rows).unwrap();
    let literal = estimate_classification(&snap, ClassificationMode::Literal)
        .unwrap()
        .p_cri_hat
        .unwrap();
    let normalized = estimate_classification(&snap, ClassificationMode::Normalized)
        .unwrap()
        .p_cri_hat
        .unwrap();
    let classification_ok =
        (literal - 0.22).abs() < 1e-12 && (normalized - 0.22 / 0.6).abs() < 1e-12;

    report(
        8,
        "estimator consistency",
        generation_ok && classification_ok,
        &format!(
            "z-scores: p {z_p:.2}, con {z_con:.2}, cri {z_cri:.2}; literal {literal}, normalized {normalized:.10}"
        ),
    );
}

#[test]
fn criterion_09_fit_round_trip() {
    let mut rng = ChainRng::from_seed(0xACC9);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let upp = rng.next_f64();
        let mag = 0.05 + 0.90 * rng.next_f64();
        let alpha = if rng.next_f64() < 0.5 { mag } else { -mag };
        let mut acc0 = rng.next_f64();
        if (upp - acc0).abs() < 0.05 {
            acc0 = if upp < 0.5 { upp + 0.05 } else { upp - 0.05 };
        }
        let values = (0..=10)
            .map(|t| upp - alpha.powi(t) * (upp - acc0))
            .collect();
        let fit = fit_geometric(&AccuracyCurve::new(values)).unwrap();
        worst = worst
            .max((fit.upp - upp).abs())
            .max((fit.alpha - alpha).abs())
            .max((fit.acc0 - acc0).abs());
    }

    // Failure-regime curve (Upp = 1/3 < Acc_0 = 0.8) must be flagged.
    let failure = predict_from_single_round(0.8, 0.6, 0.2, 6).unwrap();
    let fit = fit_geometric(&failure).unwrap();
    let pass = worst < 1e-8 && fit.is_descending();
    report(
        9,
        "fit round-trip and descending flag",
        pass,
        &format!("worst parameter error = {worst:.3e}; descending = {}", fit.is_descending()),
    );
}

#[test]
fn criterion_10_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_selfcorrect");
    let profile = concat!(env!("CARGO_MANIFEST_DIR"), "/../../profiles/demo.toml");
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = tmp.path().join(format!("run{run}"));
        let status = Command::new(bin)
            .args([
                "simulate",
                "--profile",
                profile,
                "--rounds",
                "5",
                "--samples",
                "5",
                "--seed",
                "99",
                "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let transcript = std::fs::read(out.join("transcript.csv")).unwrap();
        let curve = std::fs::read(out.join("curve.csv")).unwrap();
        outputs.push((transcript, curve));
    }
    let pass = outputs[0] == outputs[1];
    report(
        10,
        "CLI determinism under identical seeds",
        pass,
        "two simulate runs produced byte-identical transcript and curve tables",
    );
}
