//! Seeded Monte Carlo simulation of multi-round self-correction.
//!
//! Every (question, sample) pair is an independent two-state Markov chain
//! driven by its own RNG stream, so results are identical regardless of
//! evaluation order.
//!
//! # Sub-seeding scheme (frozen)
//!
//! The stream for question `i`, sample `m` is a splitmix64 generator whose
//! initial state is
//!
//! ```text
//! state = mix64(master_seed ^ mix64(((i as u64) << 32) ^ (m as u64) ^ GOLDEN_GAMMA))
//! ```
//!
//! where `mix64` is the splitmix64 finalizer. Each subsequent draw advances
//! the state by `GOLDEN_GAMMA` and finalizes it. Changing this mapping breaks
//! every checked-in golden; do not.

use crate::error::{Error, Result};
use crate::theory::{check_probability, AccuracyCurve, DatasetProfile, QuestionProfile};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A splitmix64 stream.
#[derive(Debug, Clone, Copy)]
pub struct ChainRng {
    state: u64,
}

impl ChainRng {
    pub fn from_seed(seed: u64) -> Self {
        Self { state: mix64(seed) }
    }

    /// The frozen per-chain stream for (question, sample) under `master_seed`.
    pub fn for_chain(master_seed: u64, question: usize, sample: usize) -> Self {
        let key = ((question as u64) << 32) ^ (sample as u64) ^ GOLDEN_GAMMA;
        Self {
            state: mix64(master_seed ^ mix64(key)),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

/// Per-question, per-sample, per-round correctness records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    question_ids: Vec<String>,
    n_samples: usize,
    n_rounds: usize,
    correctness: Vec<bool>,
}

impl Transcript {
    pub fn new(
        question_ids: Vec<String>,
        n_samples: usize,
        n_rounds: usize,
        correctness: Vec<bool>,
    ) -> Result<Self> {
        let expected = question_ids.len() * n_samples * (n_rounds + 1);
        if question_ids.is_empty() || n_samples == 0 {
            return Err(Error::Validation {
                violations: vec!["transcript needs at least one question and one sample".into()],
            });
        }
        if correctness.len() != expected {
            return Err(Error::LengthMismatch {
                left: correctness.len(),
                right: expected,
            });
        }
        Ok(Self {
            question_ids,
            n_samples,
            n_rounds,
            correctness,
        })
    }

    pub fn n_questions(&self) -> usize {
        self.question_ids.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Number of self-correction rounds T; rounds are indexed 0..=T.
    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    pub fn question_ids(&self) -> &[String] {
        &self.question_ids
    }

    #[inline]
    fn index(&self, question: usize, sample: usize, round: usize) -> usize {
        (question * self.n_samples + sample) * (self.n_rounds + 1) + round
    }

    #[inline]
    pub fn correct(&self, question: usize, sample: usize, round: usize) -> bool {
        self.correctness[self.index(question, sample, round)]
    }
}

/// Run parameters for one simulation.
#[derive(Debug, Clone, Copy)]
pub struct SimulationConfig {
    /// Number of self-correction rounds T (round 0 is the initial answer).
    pub rounds: u32,
    /// Independent samples per question (M).
    pub samples_per_question: usize,
    pub master_seed: u64,
    /// Make the correct state absorbing (external oracle verifier).
    pub oracle_verifier: bool,
}

impl Default for SimulationConfig {
    // T = 5 rounds, M = 5 samples.
    fn default() -> Self {
        Self {
            rounds: 5,
            samples_per_question: 5,
            master_seed: 0,
            oracle_verifier: false,
        }
    }
}

/// Simulate every (question, sample) chain for `config.rounds` rounds.
pub fn simulate(dataset: &DatasetProfile, config: &SimulationConfig) -> Result<Transcript> {
    if config.samples_per_question == 0 {
        return Err(Error::Validation {
            violations: vec!["samples_per_question must be >= 1".into()],
        });
    }
    let n = dataset.len();
    let m = config.samples_per_question;
    let t_max = config.rounds as usize;
    let mut correctness = vec![false; n * m * (t_max + 1)];
    for (i, q) in dataset.questions().iter().enumerate() {
        for sample in 0..m {
            let mut rng = ChainRng::for_chain(config.master_seed, i, sample);
            let base = (i * m + sample) * (t_max + 1);
            let mut prev = rng.bernoulli(q.p0);
            correctness[base] = prev;
            for t in 1..=t_max {
                let cur = if config.oracle_verifier && prev {
                    true
                } else if prev {
                    rng.bernoulli(q.p_con)
                } else {
                    rng.bernoulli(q.p_cri)
                };
                correctness[base + t] = cur;
                prev = cur;
            }
        }
    }
    let ids = (0..n).map(|i| format!("q{i}")).collect();
    Transcript::new(ids, m, t_max, correctness)
}

/// Per-round mean correctness over all (question, sample) pairs, with
/// binomial standard errors `sqrt(v(1-v) / (n*M))`.
pub fn empirical_curve(transcript: &Transcript) -> AccuracyCurve {
    let total = (transcript.n_questions() * transcript.n_samples()) as f64;
    let mut values = Vec::with_capacity(transcript.n_rounds() + 1);
    let mut stderr = Vec::with_capacity(transcript.n_rounds() + 1);
    for t in 0..=transcript.n_rounds() {
        let mut count = 0usize;
        for q in 0..transcript.n_questions() {
            for s in 0..transcript.n_samples() {
                count += transcript.correct(q, s, t) as usize;
            }
        }
        let v = count as f64 / total;
        values.push(v);
        stderr.push((v * (1.0 - v) / total).sqrt());
    }
    AccuracyCurve::with_stderr(values, stderr).expect("parallel by construction")
}

/// Set every question's initial correctness probability to `acc_target`.
///
/// The per-wrong-label mass `(1 - acc_target) / (k - 1)` only matters for
/// label-level bookkeeping; the two-state chain sees `p0 = acc_target`.
pub fn force_initial_accuracy_classification(
    dataset: &DatasetProfile,
    acc_target: f64,
    k_classes: usize,
) -> Result<DatasetProfile> {
    check_probability("acc_target", acc_target)?;
    if k_classes < 2 {
        return Err(Error::Validation {
            violations: vec![format!("k_classes must be >= 2, got {k_classes}")],
        });
    }
    let questions = dataset
        .questions()
        .iter()
        .map(|q| QuestionProfile {
            p0: acc_target,
            ..*q
        })
        .collect();
    DatasetProfile::new(questions)
}

/// Force exactly `floor(acc_target * n)` uniformly chosen questions to
/// `p0 = 1` and the rest to `p0 = 0`.
pub fn force_initial_accuracy_generation(
    dataset: &DatasetProfile,
    acc_target: f64,
    seed: u64,
) -> Result<DatasetProfile> {
    check_probability("acc_target", acc_target)?;
    let n = dataset.len();
    let n_correct = (acc_target * n as f64).floor() as usize;
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChainRng::from_seed(seed);
    // Partial Fisher-Yates: the first n_correct entries are the chosen set.
    for i in 0..n_correct.min(n.saturating_sub(1)) {
        let j = i + (rng.next_u64() % (n - i) as u64) as usize;
        indices.swap(i, j);
    }
    let mut questions: Vec<QuestionProfile> = dataset.questions().to_vec();
    for (rank, &idx) in indices.iter().enumerate() {
        questions[idx].p0 = if rank < n_correct { 1.0 } else { 0.0 };
    }
    DatasetProfile::new(questions)
}

/// How initial-accuracy targets are imposed on a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingMode {
    /// Every `p0` set to the target (label-distribution construction).
    Classification { k_classes: usize },
    /// Exactly `floor(target * n)` questions forced correct (seeded).
    Generation,
}

/// One empirical curve per initial-accuracy target, all sharing the
/// dataset's `p_con`/`p_cri`.
pub fn run_corollary1(
    dataset: &DatasetProfile,
    targets: &[f64],
    config: &SimulationConfig,
    mode: ForcingMode,
) -> Result<Vec<AccuracyCurve>> {
    if targets.is_empty() {
        return Err(Error::Validation {
            violations: vec!["at least one initial-accuracy target required".into()],
        });
    }
    targets
        .iter()
        .map(|&target| {
            let forced = match mode {
                ForcingMode::Classification { k_classes } => {
                    force_initial_accuracy_classification(dataset, target, k_classes)?
                }
                ForcingMode::Generation => {
                    force_initial_accuracy_generation(dataset, target, config.master_seed)?
                }
            };
            Ok(empirical_curve(&simulate(&forced, config)?))
        })
        .collect()
}

/// Empirical curve under the correct-state-absorbing (oracle verifier) regime.
pub fn run_corollary3(dataset: &DatasetProfile, config: &SimulationConfig) -> Result<AccuracyCurve> {
    let config = SimulationConfig {
        oracle_verifier: true,
        ..*config
    };
    Ok(empirical_curve(&simulate(dataset, &config)?))
}
