//! Per-metric report over aligned prediction and annotation rows.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Deserializer, Serialize};

use super::{
    binary_accuracy, citation_prf, gold_intersection, GoldCitationSet, MetricsError, Prf, PrfSummary,
    SnippetMatching,
};
use crate::model::{ContextDocument, MetricName, YesNo};
use crate::verify::MatchPolicy;

fn metric_from_str<'de, D: Deserializer<'de>>(d: D) -> Result<MetricName, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

fn yes_no<'de, D: Deserializer<'de>>(d: D) -> Result<YesNo, D::Error> {
    let s = String::deserialize(d)?;
    YesNo::parse_lenient(&s).ok_or_else(|| serde::de::Error::custom(format!("expected Yes or No, got {s:?}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PredRow {
    pub context_ref: String,
    #[serde(deserialize_with = "metric_from_str")]
    pub metric: MetricName,
    #[serde(deserialize_with = "yes_no")]
    pub rating_pred: YesNo,
    #[serde(default)]
    pub predicted_citations: Vec<String>,
}

/// One annotator's judgment of a prediction.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct AnnotatorLabel {
    /// The annotator's own rating.
    #[serde(deserialize_with = "yes_no")]
    pub rating: YesNo,
    /// Whether the annotator found the model's explanation correct.
    #[serde(deserialize_with = "yes_no")]
    pub explanation: YesNo,
    #[serde(default)]
    pub citations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct GoldRow {
    pub context_ref: String,
    #[serde(deserialize_with = "metric_from_str")]
    pub metric: MetricName,
    pub gold_a: AnnotatorLabel,
    pub gold_b: AnnotatorLabel,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreOptions {
    pub policy: MatchPolicy,
    pub matching: SnippetMatching,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricScores {
    /// Rating accuracy, averaged over the two annotators.
    pub rate_acc: f64,
    /// Share of explanations judged correct, averaged over the annotators.
    pub explain_acc: f64,
    /// Absent when every row had a hallucination-marked gold.
    pub citation_prf: Option<PrfSummary>,
    pub n: usize,
    pub excluded_halu: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub per_metric: BTreeMap<String, MetricScores>,
    pub n: usize,
    pub excluded_halu: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("row {row}: prediction is for ({pred_ref}, {pred_metric}) but gold is for ({gold_ref}, {gold_metric})")]
    Misaligned {
        row: usize,
        pred_ref: String,
        pred_metric: MetricName,
        gold_ref: String,
        gold_metric: MetricName,
    },
}

#[derive(Default)]
struct Acc {
    preds: Vec<YesNo>,
    gold_a: Vec<YesNo>,
    gold_b: Vec<YesNo>,
    explain_yes: usize,
    prfs: Vec<Prf>,
    halu: usize,
}

/// Scores predictions row by row against two annotators. Citations are
/// compared with the intersection of both annotators' sentences; rows where
/// either annotator marked a hallucination are left out of the citation
/// scores and counted.
pub fn score(
    preds: &[PredRow],
    golds: &[GoldRow],
    contexts: &HashMap<String, ContextDocument>,
    opts: ScoreOptions,
) -> Result<ScoreReport, ScoreError> {
    if preds.len() != golds.len() {
        return Err(MetricsError::LengthMismatch {
            left: preds.len(),
            right: golds.len(),
        }
        .into());
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty.into());
    }
    let mut by_metric: BTreeMap<MetricName, Acc> = BTreeMap::new();
    for (row, (p, g)) in preds.iter().zip(golds).enumerate() {
        if p.context_ref != g.context_ref || p.metric != g.metric {
            return Err(ScoreError::Misaligned {
                row: row + 1,
                pred_ref: p.context_ref.clone(),
                pred_metric: p.metric,
                gold_ref: g.context_ref.clone(),
                gold_metric: g.metric,
            });
        }
        let acc = by_metric.entry(p.metric).or_default();
        acc.preds.push(p.rating_pred);
        acc.gold_a.push(g.gold_a.rating);
        acc.gold_b.push(g.gold_b.rating);
        acc.explain_yes += [&g.gold_a, &g.gold_b]
            .iter()
            .filter(|a| a.explanation == YesNo::Yes)
            .count();

        let ctx = contexts.get(&p.context_ref);
        let gold = gold_intersection(
            &GoldCitationSet::from_annotation(&g.gold_a.citations),
            &GoldCitationSet::from_annotation(&g.gold_b.citations),
            ctx,
            opts.policy,
        );
        match citation_prf(&p.predicted_citations, &gold, ctx, opts.policy, opts.matching) {
            Ok(prf) => acc.prfs.push(prf),
            Err(MetricsError::HaluGold) => acc.halu += 1,
            Err(e) => return Err(e.into()),
        }
    }

    let mut per_metric = BTreeMap::new();
    let mut excluded_halu = 0;
    for (metric, acc) in by_metric {
        let n = acc.preds.len();
        let rate_acc =
            (binary_accuracy(&acc.preds, &acc.gold_a)? + binary_accuracy(&acc.preds, &acc.gold_b)?) / 2.0;
        excluded_halu += acc.halu;
        per_metric.insert(
            metric.display_name().to_string(),
            MetricScores {
                rate_acc,
                explain_acc: acc.explain_yes as f64 / (2 * n) as f64,
                citation_prf: PrfSummary::aggregate(&acc.prfs),
                n,
                excluded_halu: acc.halu,
            },
        );
    }
    Ok(ScoreReport {
        per_metric,
        n: preds.len(),
        excluded_halu,
    })
}
