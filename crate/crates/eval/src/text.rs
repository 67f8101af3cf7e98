use std::collections::HashMap;

use serde::Serialize;

use crate::MetricError;

/// Settings that shape every text metric. Recorded in each report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MetricConfig {
    pub bleu_max_n: usize,
    /// Add one to numerator and denominator of a zero precision for n >= 2.
    pub bleu_add_one: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { bleu_max_n: 4, bleu_add_one: true }
    }
}

impl MetricConfig {
    pub fn describe(&self) -> String {
        format!(
            "tokens: lowercase alphanumeric runs; BLEU: corpus, n<={}, {}; ROUGE: F1",
            self.bleu_max_n,
            if self.bleu_add_one { "add-one smoothing for zero counts at n>=2" } else { "unsmoothed" }
        )
    }
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

fn clipped_overlap(a: &HashMap<&[String], usize>, b: &HashMap<&[String], usize>) -> usize {
    a.iter().map(|(g, c)| (*c).min(b.get(g).copied().unwrap_or(0))).sum()
}

fn f1(overlap: usize, cand: usize, refr: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand as f64;
    let r = overlap as f64 / refr as f64;
    2.0 * p * r / (p + r)
}

/// ROUGE-N F1. Two texts without any n-gram score 1.0.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> f64 {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    let (cg, rg) = (ngrams(&c, n), ngrams(&r, n));
    let (ct, rt): (usize, usize) = (cg.values().sum(), rg.values().sum());
    if ct == 0 && rt == 0 {
        tracing::debug!("rouge-{n} of two empty texts scored 1.0");
        return 1.0;
    }
    f1(clipped_overlap(&cg, &rg), ct, rt)
}

fn lcs(a: &[String], b: &[String]) -> usize {
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

/// ROUGE-L F1 over the longest common subsequence.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    if c.is_empty() && r.is_empty() {
        tracing::debug!("rouge-l of two empty texts scored 1.0");
        return 1.0;
    }
    f1(lcs(&c, &r), c.len(), r.len())
}

/// Corpus BLEU on a 0 to 100 scale, one reference per candidate.
pub fn bleu<S: AsRef<str>>(candidates: &[S], references: &[S], cfg: &MetricConfig) -> Result<f64, MetricError> {
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch { predictions: candidates.len(), references: references.len() });
    }
    if candidates.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let n_max = cfg.bleu_max_n.max(1);
    let mut matched = vec![0usize; n_max];
    let mut total = vec![0usize; n_max];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for (c, r) in candidates.iter().zip(references) {
        let (c, r) = (tokenize(c.as_ref()), tokenize(r.as_ref()));
        c_len += c.len();
        r_len += r.len();
        for n in 1..=n_max {
            let (cg, rg) = (ngrams(&c, n), ngrams(&r, n));
            matched[n - 1] += clipped_overlap(&cg, &rg);
            total[n - 1] += cg.values().sum::<usize>();
        }
    }
    if c_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=n_max {
        let (m, t) = (matched[n - 1], total[n - 1]);
        let p = if m == 0 && n >= 2 && cfg.bleu_add_one {
            1.0 / (t as f64 + 1.0)
        } else if t == 0 || m == 0 {
            return Ok(0.0);
        } else {
            m as f64 / t as f64
        };
        log_sum += p.ln();
    }
    let bp = if c_len > r_len { 1.0 } else { (1.0 - r_len as f64 / c_len as f64).exp() };
    Ok(100.0 * bp * (log_sum / n_max as f64).exp())
}
