//! Corpus BLEU-1..4 and ROUGE-L for generated captions.
//!
//! BLEU uses clipped n-gram counts (clip = maximum count in any single
//! reference), the closest reference length for the brevity penalty, and no
//! smoothing: an order with zero matches makes the score 0. An order for which
//! the hypotheses contain no n-grams at all (every hypothesis shorter than n)
//! has no defined precision and is left out of the geometric mean, so BLEU-4
//! of a corpus of identical 3-token sentences is 1. ROUGE-L follows
//! the coco-caption convention: per pair, the best precision and best recall
//! over the references are combined into an F-measure with β = 1.2, then
//! averaged over pairs.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

pub const ROUGE_BETA: f64 = 1.2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no evaluation pairs")]
    Empty,
    #[error("BLEU order must be in 1..=4, got {0}")]
    InvalidOrder(usize),
    #[error("invalid evaluation pair: {0}")]
    InvalidPair(String),
    #[error("results line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPair {
    pub hypothesis: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl EvalPair {
    pub fn new(hypothesis: Vec<String>, references: Vec<Vec<String>>) -> Result<Self, MetricsError> {
        if references.is_empty() {
            return Err(MetricsError::InvalidPair("no references".into()));
        }
        if references.iter().any(Vec::is_empty) {
            return Err(MetricsError::InvalidPair("empty reference".into()));
        }
        if hypothesis.iter().chain(references.iter().flatten()).any(String::is_empty) {
            return Err(MetricsError::InvalidPair("empty token".into()));
        }
        Ok(Self {
            hypothesis,
            references,
        })
    }

    /// Whitespace-tokenizes a hypothesis and its references.
    pub fn from_text(hypothesis: &str, references: &[&str]) -> Result<Self, MetricsError> {
        let split = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        Self::new(split(hypothesis), references.iter().map(|r| split(r)).collect())
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Closest reference length to `hyp_len`; ties go to the shorter reference.
fn closest_ref_len(hyp_len: usize, refs: &[Vec<String>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

/// Corpus-level BLEU over orders `1..=max_n`.
pub fn bleu(pairs: &[EvalPair], max_n: usize) -> Result<f64, MetricsError> {
    if !(1..=4).contains(&max_n) {
        return Err(MetricsError::InvalidOrder(max_n));
    }
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }

    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;

    for pair in pairs {
        hyp_len += pair.hypothesis.len();
        ref_len += closest_ref_len(pair.hypothesis.len(), &pair.references);
        for n in 1..=max_n {
            let hyp = ngram_counts(&pair.hypothesis, n);
            let refs: Vec<_> = pair.references.iter().map(|r| ngram_counts(r, n)).collect();
            for (gram, count) in hyp {
                let max_ref = refs.iter().map(|r| r.get(gram).copied().unwrap_or(0)).max().unwrap_or(0);
                matched[n - 1] += count.min(max_ref);
                total[n - 1] += count;
            }
        }
    }

    if hyp_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 0..max_n {
        if total[n] == 0 {
            continue;
        }
        if matched[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (matched[n] as f64 / total[n] as f64).ln();
        orders += 1;
    }
    let brevity = if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    Ok(brevity * (log_sum / orders as f64).exp())
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rouge_l_pair(pair: &EvalPair) -> f64 {
    if pair.hypothesis.is_empty() {
        return 0.0;
    }
    let mut best_p: f64 = 0.0;
    let mut best_r: f64 = 0.0;
    for r in &pair.references {
        let l = lcs_len(&pair.hypothesis, r) as f64;
        best_p = best_p.max(l / pair.hypothesis.len() as f64);
        best_r = best_r.max(l / r.len() as f64);
    }
    if best_p == 0.0 || best_r == 0.0 {
        return 0.0;
    }
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * best_p * best_r / (best_r + b2 * best_p)
}

/// Mean per-pair ROUGE-L F-measure.
pub fn rouge_l(pairs: &[EvalPair]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(pairs.iter().map(rouge_l_pair).sum::<f64>() / pairs.len() as f64)
}

/// Parses `clip_id<TAB>hypothesis<TAB>reference` lines. Repeated clip ids add
/// references to the same pair and must repeat the same hypothesis.
pub fn parse_results(text: &str) -> Result<Vec<(String, EvalPair)>, MetricsError> {
    let mut out: Vec<(String, String, Vec<String>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        let [clip, hyp, reference] = fields[..] else {
            return Err(MetricsError::Syntax {
                line,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        };
        match index.get(clip) {
            Some(&i) => {
                if out[i].1 != hyp {
                    return Err(MetricsError::Syntax {
                        line,
                        message: format!("clip `{clip}` has conflicting hypotheses"),
                    });
                }
                out[i].2.push(reference.to_string());
            }
            None => {
                index.insert(clip.to_string(), out.len());
                out.push((clip.to_string(), hyp.to_string(), vec![reference.to_string()]));
            }
        }
    }
    out.into_iter()
        .map(|(clip, hyp, refs)| {
            let refs: Vec<&str> = refs.iter().map(String::as_str).collect();
            Ok((clip, EvalPair::from_text(&hyp, &refs)?))
        })
        .collect()
}

/// `bleu_1`..`bleu_4`, `rouge_l` and `pairs` as `key=value` lines.
pub fn report(pairs: &[EvalPair]) -> Result<String, MetricsError> {
    let mut out = String::new();
    for n in 1..=4 {
        let _ = writeln!(out, "bleu_{n}={:.6}", bleu(pairs, n)?);
    }
    let _ = writeln!(out, "rouge_l={:.6}", rouge_l(pairs)?);
    let _ = writeln!(out, "pairs={}", pairs.len());
    Ok(out)
}
