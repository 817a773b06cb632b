//! Scoring against human annotations and pairwise-judge statistics.

mod score;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::{ContextDocument, Verdict, YesNo};
use crate::verify::{segment_sentences, snap_run, MatchPolicy};

pub use score::{
    score, AnnotatorLabel, GoldRow, MetricScores, PredRow, ScoreError, ScoreOptions, ScoreReport,
};

/// Annotators write this in place of a citation when a statement is
/// hallucinated.
pub const HALU_MARKER: &str = "[<halu>]";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("nothing to score")]
    Empty,
    #[error("gold citations are marked hallucinated and cannot be scored")]
    HaluGold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Prf {
    /// Precision is 1 only when nothing was predicted and nothing was
    /// missed; an empty side against a non-empty other side scores 0.
    /// Recall follows the same rule with the roles swapped.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
        let ratio = |num: usize, den: usize, other: usize| {
            if den == 0 {
                if other == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp, fn_);
        let recall = ratio(tp, tp + fn_, fp);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

/// Mean of per-item scores plus summed counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfSummary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub n: usize,
}

impl PrfSummary {
    pub fn aggregate(items: &[Prf]) -> Option<PrfSummary> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        Some(PrfSummary {
            precision: items.iter().map(|p| p.precision).sum::<f64>() / n,
            recall: items.iter().map(|p| p.recall).sum::<f64>() / n,
            f1: items.iter().map(|p| p.f1).sum::<f64>() / n,
            tp: items.iter().map(|p| p.tp).sum(),
            fp: items.iter().map(|p| p.fp).sum(),
            fn_: items.iter().map(|p| p.fn_).sum(),
            n: items.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoldCitationSet {
    pub snippets: Vec<String>,
    pub halu: bool,
}

impl GoldCitationSet {
    pub fn new(snippets: Vec<String>) -> Self {
        GoldCitationSet {
            snippets,
            halu: false,
        }
    }

    pub fn halu() -> Self {
        GoldCitationSet {
            snippets: Vec::new(),
            halu: true,
        }
    }

    /// Reads an annotator's citation list. Any halu marker makes the whole
    /// set hallucinated.
    pub fn from_annotation(citations: &[String]) -> Self {
        if citations.iter().any(|c| c.trim() == HALU_MARKER) {
            GoldCitationSet::halu()
        } else {
            GoldCitationSet::new(citations.to_vec())
        }
    }
}

/// How snippets are compared once reduced to sentences.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnippetMatching {
    /// Normalized sentence equality.
    #[default]
    Exact,
    /// One-to-one pairing of sentences whose token F1 reaches the threshold.
    TokenF1 { threshold: f64 },
}

/// Distinct sentences, keyed by their normalized text, in first-seen order.
#[derive(Debug, Clone, Default)]
struct SentenceSet {
    keys: Vec<String>,
    texts: Vec<String>,
}

impl SentenceSet {
    fn push(&mut self, text: &str) {
        let key = MatchPolicy::Normalized.key(text);
        if !key.is_empty() && !self.keys.contains(&key) {
            self.keys.push(key);
            self.texts.push(text.to_string());
        }
    }

    fn len(&self) -> usize {
        self.keys.len()
    }
}

/// Expands each snippet to the full context sentences it touches. Snippets
/// that cannot be located (or no context) are split on their own.
fn sentences_of(snippets: &[String], context: Option<&ContextDocument>, policy: MatchPolicy) -> SentenceSet {
    let mut set = SentenceSet::default();
    for s in snippets {
        match context.map(|c| snap_run(s, c, policy)) {
            Some(Ok(run)) => run.sentences.iter().for_each(|x| set.push(&x.text)),
            _ => segment_sentences(s).iter().for_each(|x| set.push(&x.text)),
        }
    }
    set
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Bag-of-words F1 between two texts.
pub fn token_f1(a: &str, b: &str) -> f64 {
    let ta = tokens(a);
    let mut tb = tokens(b);
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let mut common = 0usize;
    for t in &ta {
        if let Some(i) = tb.iter().position(|x| x == t) {
            tb.swap_remove(i);
            common += 1;
        }
    }
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / ta.len() as f64;
    let r = common as f64 / tokens(b).len() as f64;
    2.0 * p * r / (p + r)
}

fn matched_pairs(pred: &SentenceSet, gold: &SentenceSet, matching: SnippetMatching) -> usize {
    match matching {
        SnippetMatching::Exact => {
            let gold: HashSet<&String> = gold.keys.iter().collect();
            pred.keys.iter().filter(|k| gold.contains(k)).count()
        }
        SnippetMatching::TokenF1 { threshold } => {
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (i, p) in pred.keys.iter().enumerate() {
                for (j, g) in gold.keys.iter().enumerate() {
                    let s = token_f1(p, g);
                    if s >= threshold {
                        pairs.push((s, i, j));
                    }
                }
            }
            pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut used_p = vec![false; pred.len()];
            let mut used_g = vec![false; gold.len()];
            let mut count = 0;
            for (_, i, j) in pairs {
                if !used_p[i] && !used_g[j] {
                    used_p[i] = true;
                    used_g[j] = true;
                    count += 1;
                }
            }
            count
        }
    }
}

/// Precision, recall and F1 of predicted citations against a gold set, both
/// reduced to deduplicated full sentences of the context.
pub fn citation_prf(
    predicted: &[String],
    gold: &GoldCitationSet,
    context: Option<&ContextDocument>,
    policy: MatchPolicy,
    matching: SnippetMatching,
) -> Result<Prf, MetricsError> {
    if gold.halu {
        return Err(MetricsError::HaluGold);
    }
    let pred = sentences_of(predicted, context, policy);
    let gold = sentences_of(&gold.snippets, context, policy);
    let tp = matched_pairs(&pred, &gold, matching);
    Ok(Prf::from_counts(tp, pred.len() - tp, gold.len() - tp))
}

/// Sentences both annotators cited. A halu mark on either side wins.
pub fn gold_intersection(
    a: &GoldCitationSet,
    b: &GoldCitationSet,
    context: Option<&ContextDocument>,
    policy: MatchPolicy,
) -> GoldCitationSet {
    if a.halu || b.halu {
        return GoldCitationSet::halu();
    }
    let sa = sentences_of(&a.snippets, context, policy);
    let sb = sentences_of(&b.snippets, context, policy);
    let keep: HashSet<&String> = sb.keys.iter().collect();
    GoldCitationSet::new(
        sa.keys
            .iter()
            .zip(&sa.texts)
            .filter(|(k, _)| keep.contains(k))
            .map(|(_, t)| t.clone())
            .collect(),
    )
}

pub fn binary_accuracy(preds: &[YesNo], golds: &[YesNo]) -> Result<f64, MetricsError> {
    if preds.len() != golds.len() {
        return Err(MetricsError::LengthMismatch {
            left: preds.len(),
            right: golds.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let hits = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Raw percent agreement between two annotators.
pub fn inter_rater_agreement(a: &[YesNo], b: &[YesNo]) -> Result<f64, MetricsError> {
    binary_accuracy(a, b)
}

const VERDICT_TOKENS: [(&str, Verdict); 4] = [
    ("output (a)", Verdict::A),
    ("output (b)", Verdict::B),
    ("[[a]]", Verdict::A),
    ("[[b]]", Verdict::B),
];

/// Reads a judge reply. One side named → that side. Both sides named → the
/// last token decides if nothing but punctuation or whitespace follows it.
pub fn parse_pairwise_verdict(text: &str) -> Verdict {
    let lower = text.to_lowercase();
    let mut hits: Vec<(usize, usize, Verdict)> = Vec::new();
    for (token, verdict) in VERDICT_TOKENS {
        for (pos, _) in lower.match_indices(token) {
            hits.push((pos, pos + token.len(), verdict));
        }
    }
    let Some(&(_, last_end, last)) = hits.iter().max_by_key(|(pos, _, _)| *pos) else {
        return Verdict::Unparseable;
    };
    if hits.iter().all(|(_, _, v)| *v == last) {
        return last;
    }
    let terminal = lower[last_end..]
        .chars()
        .all(|c| c.is_whitespace() || c.is_ascii_punctuation());
    if terminal {
        last
    } else {
        Verdict::Unparseable
    }
}

/// Fraction of items where the judge picked the chosen response. An
/// unparseable verdict counts as a loss.
pub fn win_rate(verdicts: &[Verdict], chosen_is: &[Verdict]) -> Result<f64, MetricsError> {
    if verdicts.len() != chosen_is.len() {
        return Err(MetricsError::LengthMismatch {
            left: verdicts.len(),
            right: chosen_is.len(),
        });
    }
    if verdicts.is_empty() {
        return Err(MetricsError::Empty);
    }
    let wins = verdicts
        .iter()
        .zip(chosen_is)
        .filter(|(v, c)| **v != Verdict::Unparseable && v == c)
        .count();
    Ok(wins as f64 / verdicts.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderBias {
    pub value: f64,
    pub considered: usize,
    pub excluded: usize,
}

/// Share of items whose verdict named the same presented position under both
/// orders, i.e. the preferred response changed with the order. Items with an
/// unparseable verdict are left out and counted.
pub fn order_bias(pairs: &[(Verdict, Verdict)]) -> Result<OrderBias, MetricsError> {
    let usable: Vec<_> = pairs
        .iter()
        .filter(|(ab, ba)| *ab != Verdict::Unparseable && *ba != Verdict::Unparseable)
        .collect();
    if usable.is_empty() {
        return Err(MetricsError::Empty);
    }
    let flipped = usable.iter().filter(|(ab, ba)| ab == ba).count();
    Ok(OrderBias {
        value: flipped as f64 / usable.len() as f64,
        considered: usable.len(),
        excluded: pairs.len() - usable.len(),
    })
}
