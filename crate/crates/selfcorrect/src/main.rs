//! Command-line front end: simulate, predict, estimate, fit, verify.
//!
//! Every run that writes output also writes `run.txt` in the output
//! directory with the fully resolved options, so any result can be
//! reproduced from its artifacts alone.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use selfcorrect::error::Result;
use selfcorrect::estimation::{
    aggregate_metrics, estimate_generation, estimate_generation_pooled, stability_report,
};
use selfcorrect::fitting::{fit_geometric, goodness_of_fit, predict_from_single_round};
use selfcorrect::io::{
    format_sig6, load_curves, load_profiles, load_transcript, save_curves, save_transcript,
};
use selfcorrect::simulator::{
    empirical_curve, run_corollary1, run_corollary3, simulate, ForcingMode, SimulationConfig,
};
use selfcorrect::theory::{
    closed_form_accuracy, derive_params, metrics_at_round, oracle_verifier_curve,
    rounds_to_converge, AccuracyCurve, DatasetProfile,
};

#[derive(Parser)]
#[command(
    name = "selfcorrect",
    about = "Simulate, estimate, and predict multi-round self-correction accuracy curves",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SimOpts {
    /// Self-correction rounds T (round 0 is the initial answer)
    #[arg(long, default_value_t = 5)]
    rounds: u32,
    /// Independent samples per question
    #[arg(long, default_value_t = 5)]
    samples: usize,
    /// Master seed for all RNG streams
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo simulation of a profile file
    Simulate {
        /// Dataset profile (TOML)
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        sim: SimOpts,
        /// Make the correct state absorbing (external oracle verifier)
        #[arg(long)]
        oracle_verifier: bool,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the theoretical curve from (acc0, cl, cs)
    Predict {
        #[arg(long)]
        acc0: f64,
        #[arg(long)]
        cl: f64,
        #[arg(long)]
        cs: f64,
        #[arg(long, default_value_t = 5)]
        rounds: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate per-question probabilities and CL/CS from a transcript
    Estimate {
        /// Transcript file (CSV)
        #[arg(long)]
        transcript: PathBuf,
        /// Round t of the adjacent pair (t, t+1) used for the headline estimate
        #[arg(long, default_value_t = 0)]
        round: usize,
        /// Pool transition counts across all rounds for the per-question table
        #[arg(long)]
        pooled: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit (upp, alpha, acc0) to each curve in a curve table
    Fit {
        /// Curve table (CSV, as written by the other subcommands)
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reproduce a corollary experiment (1: initial-accuracy independence,
    /// 2: convergence-rate comparison, 3: oracle verifier)
    Verify {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        corollary: u8,
        #[arg(long)]
        profile: PathBuf,
        /// Second profile, required for corollary 2
        #[arg(long)]
        profile_b: Option<PathBuf>,
        /// Initial-accuracy targets for corollary 1
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0])]
        targets: Vec<f64>,
        /// Convergence threshold for corollary 2
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[command(flatten)]
        sim: SimOpts,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| selfcorrect::Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn prepare_out(out: &Path, stanza: &str) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| selfcorrect::Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    write_file(&out.join("run.txt"), stanza)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            profile,
            sim,
            oracle_verifier,
            out,
        } => cmd_simulate(&profile, &sim, oracle_verifier, &out),
        Command::Predict {
            acc0,
            cl,
            cs,
            rounds,
            out,
        } => cmd_predict(acc0, cl, cs, rounds, &out),
        Command::Estimate {
            transcript,
            round,
            pooled,
            out,
        } => cmd_estimate(&transcript, round, pooled, &out),
        Command::Fit { curve, out } => cmd_fit(&curve, &out),
        Command::Verify {
            corollary,
            profile,
            profile_b,
            targets,
            epsilon,
            sim,
            out,
        } => cmd_verify(corollary, &profile, profile_b.as_deref(), &targets, epsilon, &sim, &out),
    }
}

fn cmd_simulate(profile: &Path, sim: &SimOpts, oracle_verifier: bool, out: &Path) -> Result<()> {
    let dataset = load_profiles(profile)?;
    let config = SimulationConfig {
        rounds: sim.rounds,
        samples_per_question: sim.samples,
        master_seed: sim.seed,
        oracle_verifier,
    };
    let stanza = format!(
        "command=simulate\nprofile={}\nrounds={}\nsamples={}\nseed={}\noracle_verifier={}\n",
        profile.display(),
        sim.rounds,
        sim.samples,
        sim.seed,
        oracle_verifier
    );
    prepare_out(out, &stanza)?;

    let transcript = simulate(&dataset, &config)?;
    let curve = empirical_curve(&transcript);
    save_transcript(&transcript, &out.join("transcript.csv"))?;
    save_curves(&[("acc".into(), &curve)], &out.join("curve.csv"))?;

    println!("round  acc      se");
    let se = curve.stderr.as_ref().expect("empirical curves carry SEs");
    for (t, v) in curve.values.iter().enumerate() {
        println!("{t:<6} {} {}", format_sig6(*v), format_sig6(se[t]));
    }
    Ok(())
}

fn cmd_predict(acc0: f64, cl: f64, cs: f64, rounds: u32, out: &Path) -> Result<()> {
    let params = derive_params(cl, cs, acc0)?;
    let stanza = format!("command=predict\nacc0={acc0}\ncl={cl}\ncs={cs}\nrounds={rounds}\n");
    prepare_out(out, &stanza)?;

    let curve = predict_from_single_round(acc0, cl, cs, rounds)?;
    save_curves(&[("acc".into(), &curve)], &out.join("curve.csv"))?;

    let mut report = String::new();
    match params.upp {
        Some(upp) => {
            let _ = writeln!(
                report,
                "Upp={}, alpha={}",
                format_sig6(upp),
                format_sig6(params.alpha)
            );
            if upp < acc0 {
                let _ = writeln!(
                    report,
                    "warning: failure regime Upp < Acc_0; accuracy descends toward the bound"
                );
            }
        }
        None => {
            let _ = writeln!(report, "Upp=undefined, alpha={}", format_sig6(params.alpha));
            let _ = writeln!(
                report,
                "warning: degenerate parameters (cl=1, cs=0); curve is constant at Acc_0"
            );
        }
    }
    print!("{report}");
    write_file(&out.join("report.txt"), &report)
}

fn cmd_estimate(transcript: &Path, round: usize, pooled: bool, out: &Path) -> Result<()> {
    let tr = load_transcript(transcript)?;
    let stanza = format!(
        "command=estimate\ntranscript={}\nround={round}\npooled={pooled}\n",
        transcript.display()
    );
    prepare_out(out, &stanza)?;

    let estimates: Vec<_> = (0..tr.n_questions())
        .map(|q| {
            if pooled {
                estimate_generation_pooled(&tr, q)
            } else {
                estimate_generation(&tr, q, round)
            }
        })
        .collect::<Result<_>>()?;

    let mut table = String::from("question_id,p_hat,p_con_hat,p_cri_hat,n_correct,n_wrong\n");
    let fmt_opt = |v: Option<f64>| v.map_or("undefined".to_string(), format_sig6);
    for (id, e) in tr.question_ids().iter().zip(&estimates) {
        let _ = writeln!(
            table,
            "{id},{},{},{},{},{}",
            format_sig6(e.p_hat),
            fmt_opt(e.p_con_hat),
            fmt_opt(e.p_cri_hat),
            e.n_correct_support,
            e.n_wrong_support
        );
    }
    write_file(&out.join("estimates.csv"), &table)?;

    let agg = aggregate_metrics(&estimates);
    let mut report = String::new();
    let _ = writeln!(
        report,
        "CL_hat={} (weight {})",
        fmt_opt(agg.cl_hat),
        format_sig6(agg.cl_weight)
    );
    let _ = writeln!(
        report,
        "CS_hat={} (weight {})",
        fmt_opt(agg.cs_hat),
        format_sig6(agg.cs_weight)
    );
    print!("{report}");
    write_file(&out.join("metrics.txt"), &report)?;

    let stability = stability_report(&tr)?;
    let mut table = String::from("round,cl_hat,cs_hat,cl_weight,cs_weight\n");
    for (t, m) in stability.per_round.iter().enumerate() {
        let _ = writeln!(
            table,
            "{t},{},{},{},{}",
            fmt_opt(m.cl_hat),
            fmt_opt(m.cs_hat),
            format_sig6(m.cl_weight),
            format_sig6(m.cs_weight)
        );
    }
    write_file(&out.join("stability.csv"), &table)?;

    if agg.cl_hat.is_none() || agg.cs_hat.is_none() {
        eprintln!(
            "error: degenerate aggregate at round {round}: cl_weight={}, cs_weight={}",
            format_sig6(agg.cl_weight),
            format_sig6(agg.cs_weight)
        );
        return Err(selfcorrect::Error::DegenerateWeights(
            "aggregate CL/CS undefined at the requested round",
        ));
    }
    Ok(())
}

fn cmd_fit(curve_path: &Path, out: &Path) -> Result<()> {
    let curves = load_curves(curve_path)?;
    let stanza = format!("command=fit\ncurve={}\n", curve_path.display());
    prepare_out(out, &stanza)?;

    let mut report = String::new();
    for (name, curve) in &curves {
        let fit = fit_geometric(curve)?;
        let _ = writeln!(
            report,
            "{name}: upp={}, alpha={}, acc0={}, rmse={}, max_abs_residual={}",
            format_sig6(fit.upp),
            format_sig6(fit.alpha),
            format_sig6(fit.acc0),
            format_sig6(fit.rmse),
            format_sig6(fit.max_abs_residual)
        );
        if fit.flat {
            let _ = writeln!(report, "{name}: warning: flat curve, alpha unidentifiable");
        } else if fit.is_descending() {
            let _ = writeln!(report, "{name}: warning: descending regime (Upp < Acc_0)");
        }
    }
    print!("{report}");
    write_file(&out.join("fit.txt"), &report)
}

/// Round-0 (CL, CS, Acc_0) for a profile. When one side's weight vanishes
/// (all questions certainly right or certainly wrong initially) the
/// probability-weighted average is undefined; fall back to the unweighted
/// mean, which coincides with it for homogeneous profiles.
fn dataset_round0_params(dataset: &DatasetProfile) -> Result<(f64, f64, f64)> {
    let n = dataset.len() as f64;
    let acc0 = dataset.questions().iter().map(|q| q.p0).sum::<f64>() / n;
    let (cl, cs) = match metrics_at_round(dataset, 0) {
        Ok(pair) => pair,
        Err(selfcorrect::Error::DegenerateWeights(_)) => {
            let cl = dataset.questions().iter().map(|q| q.p_con).sum::<f64>() / n;
            let cs = dataset.questions().iter().map(|q| q.p_cri).sum::<f64>() / n;
            (cl, cs)
        }
        Err(e) => return Err(e),
    };
    Ok((cl, cs, acc0))
}

fn cmd_verify(
    corollary: u8,
    profile: &Path,
    profile_b: Option<&Path>,
    targets: &[f64],
    epsilon: f64,
    sim: &SimOpts,
    out: &Path,
) -> Result<()> {
    let dataset = load_profiles(profile)?;
    let config = SimulationConfig {
        rounds: sim.rounds,
        samples_per_question: sim.samples,
        master_seed: sim.seed,
        oracle_verifier: false,
    };
    let stanza = format!(
        "command=verify\ncorollary={corollary}\nprofile={}\nprofile_b={}\ntargets={targets:?}\nepsilon={epsilon}\nrounds={}\nsamples={}\nseed={}\n",
        profile.display(),
        profile_b.map_or("none".into(), |p| p.display().to_string()),
        sim.rounds,
        sim.samples,
        sim.seed
    );
    prepare_out(out, &stanza)?;

    match corollary {
        1 => {
            let curves = run_corollary1(
                &dataset,
                targets,
                &config,
                ForcingMode::Classification { k_classes: 4 },
            )?;
            let named: Vec<(String, &AccuracyCurve)> = targets
                .iter()
                .zip(&curves)
                .map(|(t, c)| (format!("acc0_{t}"), c))
                .collect();
            save_curves(&named, &out.join("curves.csv"))?;
            let finals: Vec<f64> = curves.iter().map(|c| *c.values.last().unwrap()).collect();
            let spread = finals.iter().cloned().fold(f64::MIN, f64::max)
                - finals.iter().cloned().fold(f64::MAX, f64::min);
            let report = format!(
                "final-round spread={} over targets {targets:?}\n",
                format_sig6(spread)
            );
            print!("{report}");
            write_file(&out.join("report.txt"), &report)
        }
        2 => {
            let path_b = profile_b.ok_or_else(|| selfcorrect::Error::Validation {
                violations: vec!["corollary 2 requires --profile-b".into()],
            })?;
            let dataset_b = load_profiles(path_b)?;
            let mut report = String::new();
            let mut named = Vec::new();
            let mut curves = Vec::new();
            for (label, d) in [("a", &dataset), ("b", &dataset_b)] {
                let (cl, cs, acc0) = dataset_round0_params(d)?;
                let params = derive_params(cl, cs, acc0)?;
                let t_star = rounds_to_converge(&params, epsilon)?;
                let _ = writeln!(
                    report,
                    "profile_{label}: alpha={}, upp={}, rounds_to_converge(eps={epsilon})={t_star}",
                    format_sig6(params.alpha),
                    format_sig6(params.upp.unwrap_or(f64::NAN)),
                );
                let curve: Vec<f64> = (0..=sim.rounds)
                    .map(|t| closed_form_accuracy(&params, t))
                    .collect::<Result<_>>()?;
                curves.push(AccuracyCurve::new(curve));
            }
            for (label, curve) in ["a", "b"].iter().zip(&curves) {
                named.push((format!("theory_{label}"), curve));
            }
            save_curves(&named, &out.join("curves.csv"))?;
            print!("{report}");
            write_file(&out.join("report.txt"), &report)
        }
        3 => {
            let empirical = run_corollary3(&dataset, &config)?;
            let (_, cs, acc0) = dataset_round0_params(&dataset)?;
            let theory = oracle_verifier_curve(cs, acc0, sim.rounds)?;
            save_curves(
                &[("empirical".into(), &empirical), ("theory".into(), &theory)],
                &out.join("curves.csv"),
            )?;
            let gof = goodness_of_fit(&empirical, &theory)?;
            let report = format!(
                "oracle-verifier: rmse={}, max_abs_residual={}, within_band={}\n",
                format_sig6(gof.rmse),
                format_sig6(gof.max_abs_residual),
                gof.within_band
            );
            print!("{report}");
            write_file(&out.join("report.txt"), &report)
        }
        _ => unreachable!("clap restricts corollary to 1..=3"),
    }
}
