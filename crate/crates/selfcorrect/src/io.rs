//! File formats: TOML question profiles, line-oriented CSV transcripts, and
//! CSV curve tables.
//!
//! All numeric table output uses fixed 6-significant-digit formatting so
//! checked-in goldens are byte-stable.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::Transcript;
use crate::theory::{AccuracyCurve, DatasetProfile, QuestionProfile};

pub const PROFILE_SCHEMA_VERSION: u32 = 1;
pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

const TRANSCRIPT_HEADER: &str = "question_id,sample,round,correct";

/// One question entry of a profile document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub id: String,
    pub p0: f64,
    pub p_con: f64,
    pub p_cri: f64,
}

/// On-disk form of a dataset profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub questions: Vec<ProfileEntry>,
}

impl ProfileDocument {
    /// Validate and convert to a [`DatasetProfile`], preserving file order.
    /// Reports every violation, not just the first.
    pub fn dataset(&self) -> Result<DatasetProfile> {
        let mut violations = Vec::new();
        if self.schema_version != PROFILE_SCHEMA_VERSION {
            violations.push(format!(
                "unsupported schema_version {} (expected {PROFILE_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.questions.is_empty() {
            violations.push("profile document has no questions".into());
        }
        let mut seen: HashMap<&str, usize> = HashMap::new();
        let mut questions = Vec::with_capacity(self.questions.len());
        for (i, entry) in self.questions.iter().enumerate() {
            if let Some(first) = seen.insert(entry.id.as_str(), i) {
                violations.push(format!(
                    "duplicate question id {:?} (entries {first} and {i})",
                    entry.id
                ));
            }
            for (field, value) in [
                ("p0", entry.p0),
                ("p_con", entry.p_con),
                ("p_cri", entry.p_cri),
            ] {
                if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                    violations.push(format!(
                        "question {:?}: {field} = {value} is outside [0, 1]",
                        entry.id
                    ));
                }
            }
            if violations.is_empty() {
                questions.push(QuestionProfile {
                    p0: entry.p0,
                    p_con: entry.p_con,
                    p_cri: entry.p_cri,
                });
            }
        }
        if !violations.is_empty() {
            return Err(Error::Validation { violations });
        }
        DatasetProfile::new(questions)
    }

    pub fn ids(&self) -> Vec<String> {
        self.questions.iter().map(|q| q.id.clone()).collect()
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Load and validate a TOML profile document.
pub fn load_profile_document(path: &Path) -> Result<ProfileDocument> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.span().map(|s| text[..s.start].lines().count()).unwrap_or(0),
        message: e.message().to_string(),
    })
}

/// Load a profile file straight to a validated dataset.
pub fn load_profiles(path: &Path) -> Result<DatasetProfile> {
    load_profile_document(path)?.dataset()
}

pub fn save_profile_document(doc: &ProfileDocument, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(doc).expect("profile documents always serialize");
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Write a transcript as one `question_id,sample,round,correct` record per
/// line, grouped by question then sample then round.
pub fn save_transcript(transcript: &Transcript, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(TRANSCRIPT_HEADER);
    out.push('\n');
    for (q, id) in transcript.question_ids().iter().enumerate() {
        for s in 0..transcript.n_samples() {
            for t in 0..=transcript.n_rounds() {
                let _ = writeln!(out, "{id},{s},{t},{}", transcript.correct(q, s, t));
            }
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Load a transcript file into a dense [`Transcript`].
///
/// Question order is first-appearance order. Every (question, sample) pair
/// must cover the same contiguous round range 0..=T and every question the
/// same sample set 0..M-1; a missing cell is a [`Error::Gap`].
pub fn load_transcript(path: &Path) -> Result<Transcript> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut ids: Vec<String> = Vec::new();
    let mut id_index: HashMap<String, usize> = HashMap::new();
    // (question, sample, round) -> correct
    let mut cells: HashMap<(usize, usize, usize), bool> = HashMap::new();
    let mut max_sample = 0usize;
    let mut max_round = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if lineno == 0 {
            if trimmed != TRANSCRIPT_HEADER {
                return Err(parse_err(1, format!("expected header {TRANSCRIPT_HEADER:?}")));
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(lineno + 1, format!("expected 4 fields, got {}", fields.len())));
        }
        let sample: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(lineno + 1, format!("bad sample index {:?}", fields[1])))?;
        let round: usize = fields[2]
            .parse()
            .map_err(|_| parse_err(lineno + 1, format!("bad round index {:?}", fields[2])))?;
        let correct = match fields[3] {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(parse_err(lineno + 1, format!("bad correct flag {other:?}"))),
        };
        let q = *id_index.entry(fields[0].to_string()).or_insert_with(|| {
            ids.push(fields[0].to_string());
            ids.len() - 1
        });
        if cells.insert((q, sample, round), correct).is_some() {
            return Err(Error::Validation {
                violations: vec![format!(
                    "duplicate record for question {:?}, sample {sample}, round {round}",
                    fields[0]
                )],
            });
        }
        max_sample = max_sample.max(sample);
        max_round = max_round.max(round);
    }

    if ids.is_empty() {
        return Err(Error::Validation {
            violations: vec!["transcript file contains no records".into()],
        });
    }
    let n_samples = max_sample + 1;
    let n_rounds = max_round;
    let mut correctness = Vec::with_capacity(ids.len() * n_samples * (n_rounds + 1));
    for (q, id) in ids.iter().enumerate() {
        for s in 0..n_samples {
            for t in 0..=n_rounds {
                match cells.get(&(q, s, t)) {
                    Some(&c) => correctness.push(c),
                    None => {
                        return Err(Error::Gap {
                            question: id.clone(),
                            sample: s,
                            round: t,
                        })
                    }
                }
            }
        }
    }
    Transcript::new(ids, n_samples, n_rounds, correctness)
}

/// Format with 6 significant digits; frozen for golden-file stability.
pub fn format_sig6(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value:.6}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

/// Write named curves as a CSV table: `round, <name>, <name>_se, ...`,
/// one row per round. Missing standard errors are written as 0.
pub fn save_curves(curves: &[(String, &AccuracyCurve)], path: &Path) -> Result<()> {
    let mut out = String::from("round");
    for (name, _) in curves {
        let _ = write!(out, ",{name},{name}_se");
    }
    out.push('\n');
    let rows = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    for t in 0..rows {
        let _ = write!(out, "{t}");
        for (_, curve) in curves {
            let v = curve.values.get(t).copied().unwrap_or(f64::NAN);
            let se = curve
                .stderr
                .as_ref()
                .and_then(|s| s.get(t).copied())
                .unwrap_or(0.0);
            let _ = write!(out, ",{},{}", format_sig6(v), format_sig6(se));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Read a curve table written by [`save_curves`] back into named curves.
pub fn load_curves(path: &Path) -> Result<Vec<(String, AccuracyCurve)>> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut names: Vec<String> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut stderrs: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if lineno == 0 {
            if fields.first() != Some(&"round") || fields.len().is_multiple_of(2) {
                return Err(parse_err(1, "expected header: round,<name>,<name>_se,...".into()));
            }
            for pair in fields[1..].chunks(2) {
                names.push(pair[0].to_string());
                values.push(Vec::new());
                stderrs.push(Vec::new());
            }
            continue;
        }
        if fields.len() != 1 + 2 * names.len() {
            return Err(parse_err(lineno + 1, format!("expected {} fields", 1 + 2 * names.len())));
        }
        for (i, pair) in fields[1..].chunks(2).enumerate() {
            let v: f64 = pair[0]
                .parse()
                .map_err(|_| parse_err(lineno + 1, format!("bad value {:?}", pair[0])))?;
            let se: f64 = pair[1]
                .parse()
                .map_err(|_| parse_err(lineno + 1, format!("bad stderr {:?}", pair[1])))?;
            values[i].push(v);
            stderrs[i].push(se);
        }
    }
    Ok(names
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let curve = if stderrs[i].iter().all(|&s| s == 0.0) {
                AccuracyCurve::new(values[i].clone())
            } else {
                AccuracyCurve::with_stderr(values[i].clone(), stderrs[i].clone())
                    .expect("parallel by construction")
            };
            (name, curve)
        })
        .collect())
}
