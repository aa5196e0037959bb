//! Closed-form accuracy dynamics for multi-round self-correction.
//!
//! Each question is a two-state Markov chain over {correct, wrong}. With a
//! retention probability `p_con` (correct stays correct) and a repair
//! probability `p_cri` (wrong becomes correct), the per-round probability of
//! correctness follows a geometric approach to a fixed point:
//!
//! ```text
//! P_t = upp - alpha^t * (upp - P_0),   upp = p_cri / (1 - p_con + p_cri),
//!                                      alpha = p_con - p_cri.
//! ```
//!
//! The same recursion holds at dataset level with the probability-weighted
//! aggregates `CL` and `CS` in place of `p_con` and `p_cri`.

use crate::error::{Error, Result};

/// Denominator threshold below which `upp` is treated as undefined
/// (the `cl = 1, cs = 0` identity recursion).
pub const DEGENERATE_DENOM_EPS: f64 = 1e-12;

/// Maximum amount by which floating error may push a curve value outside
/// [0, 1] before it is an error rather than a clamp.
pub const DOMAIN_EPS: f64 = 1e-12;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

/// Ground-truth per-question chain parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuestionProfile {
    /// Probability the initial answer is correct.
    pub p0: f64,
    /// Probability a correct answer stays correct after one correction.
    pub p_con: f64,
    /// Probability a wrong answer becomes correct after one correction.
    pub p_cri: f64,
}

impl QuestionProfile {
    pub fn new(p0: f64, p_con: f64, p_cri: f64) -> Result<Self> {
        check_probability("p0", p0)?;
        check_probability("p_con", p_con)?;
        check_probability("p_cri", p_cri)?;
        Ok(Self { p0, p_con, p_cri })
    }

    /// Per-question convergence factor.
    pub fn alpha(&self) -> f64 {
        self.p_con - self.p_cri
    }

    /// Per-question fixed point, `None` in the degenerate identity case.
    pub fn upp(&self) -> Option<f64> {
        let denom = 1.0 - self.p_con + self.p_cri;
        if denom.abs() < DEGENERATE_DENOM_EPS {
            None
        } else {
            Some(self.p_cri / denom)
        }
    }
}

/// An ordered, nonempty set of question profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetProfile {
    questions: Vec<QuestionProfile>,
}

impl DatasetProfile {
    pub fn new(questions: Vec<QuestionProfile>) -> Result<Self> {
        if questions.is_empty() {
            return Err(Error::Validation {
                violations: vec!["dataset must contain at least one question".into()],
            });
        }
        Ok(Self { questions })
    }

    pub fn questions(&self) -> &[QuestionProfile] {
        &self.questions
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Dataset-level parameters with the derived fixed point and rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub cl: f64,
    pub cs: f64,
    pub acc0: f64,
    /// Accuracy limit, `None` when `1 - cl + cs` vanishes.
    pub upp: Option<f64>,
    /// Per-round gap multiplier `cl - cs`.
    pub alpha: f64,
}

/// A sequence of accuracies indexed by round, with optional standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCurve {
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl AccuracyCurve {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            stderr: None,
        }
    }

    pub fn with_stderr(values: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        if values.len() != stderr.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: stderr.len(),
            });
        }
        Ok(Self {
            values,
            stderr: Some(stderr),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Fill in `upp` and `alpha` from `(cl, cs, acc0)`.
pub fn derive_params(cl: f64, cs: f64, acc0: f64) -> Result<TheoryParams> {
    check_probability("cl", cl)?;
    check_probability("cs", cs)?;
    check_probability("acc0", acc0)?;
    let denom = 1.0 - cl + cs;
    let upp = if denom.abs() < DEGENERATE_DENOM_EPS {
        None
    } else {
        Some(cs / denom)
    };
    Ok(TheoryParams {
        cl,
        cs,
        acc0,
        upp,
        alpha: cl - cs,
    })
}

fn clamp_unit(value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else if value > 1.0 && value - 1.0 <= DOMAIN_EPS {
        Ok(1.0)
    } else if value < 0.0 && -value <= DOMAIN_EPS {
        Ok(0.0)
    } else {
        Err(Error::NumericalDomain {
            value,
            tolerance: DOMAIN_EPS,
        })
    }
}

fn geometric_value(upp: Option<f64>, alpha: f64, start: f64, t: u32) -> Result<f64> {
    match upp {
        // Identity recursion: the curve is constant at its start.
        None => Ok(start),
        Some(upp) => clamp_unit(upp - alpha.powi(t as i32) * (upp - start)),
    }
}

/// Accuracy after `t` rounds from the closed form.
pub fn closed_form_accuracy(params: &TheoryParams, t: u32) -> Result<f64> {
    geometric_value(params.upp, params.alpha, params.acc0, t)
}

/// Accuracy curve `[Acc_0 .. Acc_rounds]` by iterating the one-step recursion.
pub fn recursive_curve(params: &TheoryParams, rounds: u32) -> Result<AccuracyCurve> {
    let mut values = Vec::with_capacity(rounds as usize + 1);
    let mut acc = params.acc0;
    values.push(acc);
    for _ in 0..rounds {
        acc = acc * params.cl + (1.0 - acc) * params.cs;
        values.push(clamp_unit(acc)?);
    }
    Ok(AccuracyCurve::new(values))
}

/// Per-question probability of correctness after `t` rounds.
pub fn question_closed_form(profile: &QuestionProfile, t: u32) -> Result<f64> {
    geometric_value(profile.upp(), profile.alpha(), profile.p0, t)
}

/// The `cl = 1` special case: `Acc_t = 1 - (1 - cs)^t (1 - acc0)`.
pub fn oracle_verifier_curve(cs: f64, acc0: f64, rounds: u32) -> Result<AccuracyCurve> {
    check_probability("cs", cs)?;
    check_probability("acc0", acc0)?;
    let mut values = Vec::with_capacity(rounds as usize + 1);
    for t in 0..=rounds {
        values.push(clamp_unit(1.0 - (1.0 - cs).powi(t as i32) * (1.0 - acc0))?);
    }
    Ok(AccuracyCurve::new(values))
}

/// Exact dataset-level `(CL_t, CS_t)`: probability-weighted averages of
/// `p_con` and `p_cri`, with weights `P(a_{i,t})` from the closed form.
///
/// For heterogeneous datasets these drift with `t`; for homogeneous ones they
/// are constant.
pub fn metrics_at_round(dataset: &DatasetProfile, t: u32) -> Result<(f64, f64)> {
    let mut cl_num = 0.0;
    let mut cl_den = 0.0;
    let mut cs_num = 0.0;
    let mut cs_den = 0.0;
    for q in dataset.questions() {
        let p = question_closed_form(q, t)?;
        cl_num += p * q.p_con;
        cl_den += p;
        cs_num += (1.0 - p) * q.p_cri;
        cs_den += 1.0 - p;
    }
    if cl_den <= 0.0 {
        return Err(Error::DegenerateWeights(
            "all questions certainly wrong at this round; CL_t undefined",
        ));
    }
    if cs_den <= 0.0 {
        return Err(Error::DegenerateWeights(
            "all questions certainly right at this round; CS_t undefined",
        ));
    }
    Ok((cl_num / cl_den, cs_num / cs_den))
}

/// Smallest `t` with `|alpha|^t * |upp - acc0| < epsilon`.
pub fn rounds_to_converge(params: &TheoryParams, epsilon: f64) -> Result<u32> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let upp = params.upp.ok_or(Error::NonConvergent {
        alpha: params.alpha,
        gap: f64::INFINITY,
    })?;
    let gap = (upp - params.acc0).abs();
    if gap < epsilon {
        return Ok(0);
    }
    let a = params.alpha.abs();
    if a >= 1.0 {
        return Err(Error::NonConvergent {
            alpha: params.alpha,
            gap,
        });
    }
    if a == 0.0 {
        return Ok(1);
    }
    // Log-space estimate, then fix up against float rounding at the boundary.
    let mut t = ((epsilon / gap).ln() / a.ln()).ceil().max(0.0) as u32;
    while t > 0 && a.powi(t as i32 - 1) * gap < epsilon {
        t -= 1;
    }
    while a.powi(t as i32) * gap >= epsilon {
        t += 1;
    }
    Ok(t)
}
