//! Plug-in estimation of per-question probabilities and dataset-level CL/CS
//! from sampled transcripts (generation tasks) or label-distribution
//! snapshots (classification tasks).

use crate::error::{Error, Result};
use crate::simulator::Transcript;

/// Frequency estimates for one question at one round, with the counts that
/// back each conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuestionEstimate {
    /// Estimated P(correct at round t).
    pub p_hat: f64,
    /// Estimated P(correct at t+1 | correct at t); `None` when no sample was
    /// correct at t.
    pub p_con_hat: Option<f64>,
    /// Estimated P(correct at t+1 | wrong at t); `None` when no sample was
    /// wrong at t.
    pub p_cri_hat: Option<f64>,
    pub n_correct_support: usize,
    pub n_wrong_support: usize,
}

/// How the classification critique estimate treats the wrong-label mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassificationMode {
    /// Divide by the total prior mass on wrong labels, making the estimate a
    /// proper conditional probability.
    #[default]
    Normalized,
    /// The raw total-probability sum without normalization.
    Literal,
}

/// Label-level snapshot of one classification question: prior distribution
/// and the post-correction transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSnapshot {
    correct_label: usize,
    prior: Vec<f64>,
    transition: Vec<Vec<f64>>,
}

impl LabelSnapshot {
    pub fn new(correct_label: usize, prior: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let k = prior.len();
        let mut violations = Vec::new();
        if k < 2 {
            violations.push(format!("need at least 2 labels, got {k}"));
        }
        if correct_label >= k {
            violations.push(format!("correct_label {correct_label} out of range for K={k}"));
        }
        if prior.iter().any(|p| !(0.0..=1.0).contains(p)) {
            violations.push("prior entries must lie in [0,1]".into());
        }
        if (prior.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            violations.push("prior must sum to 1".into());
        }
        if transition.len() != k {
            violations.push(format!("transition must have {k} rows"));
        } else {
            for (j, row) in transition.iter().enumerate() {
                if row.len() != k {
                    violations.push(format!("transition row {j} must have {k} entries"));
                } else {
                    if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        violations.push(format!("transition row {j} entries must lie in [0,1]"));
                    }
                    if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                        violations.push(format!("transition row {j} must sum to 1"));
                    }
                }
            }
        }
        if violations.is_empty() {
            Ok(Self {
                correct_label,
                prior,
                transition,
            })
        } else {
            Err(Error::Validation { violations })
        }
    }

    pub fn k(&self) -> usize {
        self.prior.len()
    }
}

/// Frequency estimates from the adjacent-round pair (round, round + 1) of a
/// transcript.
pub fn estimate_generation(
    transcript: &Transcript,
    question: usize,
    round: usize,
) -> Result<QuestionEstimate> {
    let t_max = transcript.n_rounds();
    if round + 1 > t_max {
        return Err(Error::RoundOutOfRange {
            round,
            max_round: t_max,
        });
    }
    let m = transcript.n_samples();
    let mut n_correct = 0usize;
    let mut n_stay = 0usize;
    let mut n_repair = 0usize;
    for s in 0..m {
        let before = transcript.correct(question, s, round);
        let after = transcript.correct(question, s, round + 1);
        if before {
            n_correct += 1;
            n_stay += after as usize;
        } else {
            n_repair += after as usize;
        }
    }
    let n_wrong = m - n_correct;
    Ok(QuestionEstimate {
        p_hat: n_correct as f64 / m as f64,
        p_con_hat: (n_correct > 0).then(|| n_stay as f64 / n_correct as f64),
        p_cri_hat: (n_wrong > 0).then(|| n_repair as f64 / n_wrong as f64),
        n_correct_support: n_correct,
        n_wrong_support: n_wrong,
    })
}

/// Pool the adjacent-round transition counts of one question across all
/// rounds. Valid exactly insofar as the chain's CL/CS are round-constant.
pub fn estimate_generation_pooled(transcript: &Transcript, question: usize) -> Result<QuestionEstimate> {
    let t_max = transcript.n_rounds();
    if t_max < 1 {
        return Err(Error::RoundOutOfRange {
            round: 1,
            max_round: t_max,
        });
    }
    let m = transcript.n_samples();
    let mut n_correct = 0usize;
    let mut n_stay = 0usize;
    let mut n_wrong = 0usize;
    let mut n_repair = 0usize;
    let mut correct_at_0 = 0usize;
    for s in 0..m {
        correct_at_0 += transcript.correct(question, s, 0) as usize;
        for t in 0..t_max {
            let before = transcript.correct(question, s, t);
            let after = transcript.correct(question, s, t + 1);
            if before {
                n_correct += 1;
                n_stay += after as usize;
            } else {
                n_wrong += 1;
                n_repair += after as usize;
            }
        }
    }
    Ok(QuestionEstimate {
        p_hat: correct_at_0 as f64 / m as f64,
        p_con_hat: (n_correct > 0).then(|| n_stay as f64 / n_correct as f64),
        p_cri_hat: (n_wrong > 0).then(|| n_repair as f64 / n_wrong as f64),
        n_correct_support: n_correct,
        n_wrong_support: n_wrong,
    })
}

/// Probability estimates from a label snapshot.
pub fn estimate_classification(
    snapshot: &LabelSnapshot,
    mode: ClassificationMode,
) -> Result<QuestionEstimate> {
    let c = snapshot.correct_label;
    let p_hat = snapshot.prior[c];
    let p_con_hat = snapshot.transition[c][c];
    let mut repair_mass = 0.0;
    let mut wrong_mass = 0.0;
    let mut n_wrong_support = 0usize;
    for j in 0..snapshot.k() {
        if j == c {
            continue;
        }
        repair_mass += snapshot.transition[j][c] * snapshot.prior[j];
        wrong_mass += snapshot.prior[j];
        if snapshot.prior[j] > 0.0 {
            n_wrong_support += 1;
        }
    }
    let p_cri_hat = match mode {
        ClassificationMode::Literal => Some(repair_mass),
        ClassificationMode::Normalized => {
            if wrong_mass <= 0.0 {
                return Err(Error::DegenerateWeights(
                    "no prior mass on wrong labels; critique estimate undefined",
                ));
            }
            Some(repair_mass / wrong_mass)
        }
    };
    Ok(QuestionEstimate {
        p_hat,
        p_con_hat: Some(p_con_hat),
        p_cri_hat,
        n_correct_support: 1,
        n_wrong_support: match mode {
            ClassificationMode::Literal => snapshot.k() - 1,
            ClassificationMode::Normalized => n_wrong_support,
        },
    })
}

/// Weighted CL/CS aggregates for one round, with the weight (denominator)
/// behind each side. A side with zero weight is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub cl_hat: Option<f64>,
    pub cs_hat: Option<f64>,
    pub cl_weight: f64,
    pub cs_weight: f64,
}

/// Dataset-level CL/CS per round with supporting weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedMetrics {
    pub per_round: Vec<RoundMetrics>,
}

/// Plug-in weighted averages: CL from `p_hat * p_con_hat / sum(p_hat)`,
/// CS from `(1 - p_hat) * p_cri_hat / sum(1 - p_hat)`. Questions with an
/// undefined conditional are excluded from that side's numerator and
/// denominator.
pub fn aggregate_metrics(estimates: &[QuestionEstimate]) -> RoundMetrics {
    let mut cl_num = 0.0;
    let mut cl_den = 0.0;
    let mut cs_num = 0.0;
    let mut cs_den = 0.0;
    for e in estimates {
        if let Some(con) = e.p_con_hat {
            cl_num += e.p_hat * con;
            cl_den += e.p_hat;
        }
        if let Some(cri) = e.p_cri_hat {
            cs_num += (1.0 - e.p_hat) * cri;
            cs_den += 1.0 - e.p_hat;
        }
    }
    RoundMetrics {
        cl_hat: (cl_den > 0.0).then(|| cl_num / cl_den),
        cs_hat: (cs_den > 0.0).then(|| cs_num / cs_den),
        cl_weight: cl_den,
        cs_weight: cs_den,
    }
}

/// Like [`aggregate_metrics`] but requiring both sides to be defined.
pub fn aggregate_metrics_strict(estimates: &[QuestionEstimate]) -> Result<(f64, f64)> {
    let m = aggregate_metrics(estimates);
    let cl = m
        .cl_hat
        .ok_or(Error::DegenerateWeights("zero weight on the CL side"))?;
    let cs = m
        .cs_hat
        .ok_or(Error::DegenerateWeights("zero weight on the CS side"))?;
    Ok((cl, cs))
}

/// Aggregated CL/CS for every adjacent-round pair of the transcript — the
/// round-stability view.
pub fn stability_report(transcript: &Transcript) -> Result<EstimatedMetrics> {
    let t_max = transcript.n_rounds();
    if t_max < 1 {
        return Err(Error::RoundOutOfRange {
            round: 1,
            max_round: t_max,
        });
    }
    let mut per_round = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let estimates: Vec<QuestionEstimate> = (0..transcript.n_questions())
            .map(|q| estimate_generation(transcript, q, t))
            .collect::<Result<_>>()?;
        per_round.push(aggregate_metrics(&estimates));
    }
    Ok(EstimatedMetrics { per_round })
}
