//! Detection and temporal-localization metrics.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeline::{SegmentScore, TimeInterval};

/// How the detection and localization metrics combine into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalScoreRule {
    /// `(auc + ap + ar) / 3`
    #[default]
    MeanOfThree,
    /// `(auc + (ap + ar) / 2) / 2`
    MeanOfDetAndLoc,
}

impl FromStr for FinalScoreRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_of_three" => Ok(Self::MeanOfThree),
            "mean_of_det_and_loc" => Ok(Self::MeanOfDetAndLoc),
            other => Err(Error::InvalidConfig(format!("unknown final score rule `{other}`"))),
        }
    }
}

impl fmt::Display for FinalScoreRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MeanOfThree => "mean_of_three",
            Self::MeanOfDetAndLoc => "mean_of_det_and_loc",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol {
    pub iou_thresholds: Vec<f64>,
    pub final_score_rule: FinalScoreRule,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        Self {
            // 0.50, 0.55, ..., 0.95
            iou_thresholds: (0..10).map(|k| f64::from(50 + 5 * k) / 100.0).collect(),
            final_score_rule: FinalScoreRule::default(),
        }
    }
}

impl EvalProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.is_empty() {
            return Err(Error::InvalidConfig("no IoU thresholds".into()));
        }
        if self.iou_thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(Error::InvalidConfig("IoU thresholds must lie in (0, 1]".into()));
        }
        if self.iou_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "IoU thresholds must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// ROC AUC as the normalized Mann-Whitney U statistic (ties count half).
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs scores",
            left: labels.len(),
            right: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate(format!(
            "AUC needs both classes (positives={n_pos}, negatives={n_neg})"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sum of mid-ranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum += mid_rank * pos_in_group as f64;
        i = j;
    }

    let (p, n) = (n_pos as f64, n_neg as f64);
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

/// Temporal intersection over union; 0 for disjoint intervals.
pub fn interval_iou(a: &TimeInterval, b: &TimeInterval) -> f64 {
    let inter = a.intersection_len(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.len() + b.len() - inter;
    (inter / union).min(1.0)
}

/// Per-video predicted segments.
pub type Predictions = BTreeMap<String, Vec<SegmentScore>>;
/// Per-video ground-truth forged intervals.
pub type GroundTruth = BTreeMap<String, Vec<TimeInterval>>;

/// A prediction reference in global confidence order.
struct Ranked<'a> {
    video: &'a str,
    seg: &'a SegmentScore,
}

fn rank_predictions<'a>(predictions: &'a Predictions, gt: &GroundTruth) -> Result<Vec<Ranked<'a>>> {
    let mut ranked = Vec::new();
    for (video, segs) in predictions {
        if !gt.contains_key(video) {
            return Err(Error::UnknownVideo(video.clone()));
        }
        ranked.extend(segs.iter().map(|seg| Ranked { video, seg }));
    }
    // descending confidence; ties resolved by video id then start time
    ranked.sort_by(|a, b| {
        b.seg
            .confidence()
            .total_cmp(&a.seg.confidence())
            .then_with(|| a.video.cmp(b.video))
            .then_with(|| a.seg.interval.start().total_cmp(&b.seg.interval.start()))
    });
    Ok(ranked)
}

fn total_gt(gt: &GroundTruth) -> Result<usize> {
    let n: usize = gt.values().map(Vec::len).sum();
    if n == 0 {
        return Err(Error::Degenerate("no ground-truth segments".into()));
    }
    Ok(n)
}

/// True-positive flags, in ranked order, of greedy one-to-one matching.
///
/// Each prediction claims the unmatched ground-truth segment of its video
/// with the highest IoU, provided that IoU reaches `threshold`.
fn greedy_match(ranked: &[Ranked<'_>], gt: &GroundTruth, threshold: f64) -> Vec<bool> {
    let mut taken: BTreeMap<&str, Vec<bool>> = gt.iter().map(|(k, v)| (k.as_str(), vec![false; v.len()])).collect();
    ranked
        .iter()
        .map(|r| {
            let truths = &gt[r.video];
            let used = taken.get_mut(r.video).expect("video present in ground truth");
            let best = truths
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, t)| (k, interval_iou(&r.seg.interval, t)))
                .filter(|(_, iou)| *iou >= threshold)
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(b.0.cmp(&a.0)));
            match best {
                Some((k, _)) => {
                    used[k] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

/// All-point interpolated area under the precision/recall curve.
fn interpolated_ap(tp: &[bool], n_gt: usize) -> f64 {
    let mut precision = Vec::with_capacity(tp.len());
    let mut recall = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (i, &hit) in tp.iter().enumerate() {
        hits += usize::from(hit);
        precision.push(hits as f64 / (i + 1) as f64);
        recall.push(hits as f64 / n_gt as f64);
    }
    // precision envelope: max precision at any recall >= current
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        if *r > prev_recall {
            ap += (r - prev_recall) * p;
            prev_recall = *r;
        }
    }
    ap
}

/// AP per IoU threshold, in protocol order.
pub fn average_precision_per_threshold(
    predictions: &Predictions,
    gt: &GroundTruth,
    protocol: &EvalProtocol,
) -> Result<Vec<f64>> {
    let n_gt = total_gt(gt)?;
    let ranked = rank_predictions(predictions, gt)?;
    Ok(protocol
        .iou_thresholds
        .iter()
        .map(|&t| interpolated_ap(&greedy_match(&ranked, gt, t), n_gt))
        .collect())
}

/// Recall per IoU threshold, in protocol order.
pub fn recall_per_threshold(predictions: &Predictions, gt: &GroundTruth, protocol: &EvalProtocol) -> Result<Vec<f64>> {
    let n_gt = total_gt(gt)?;
    let ranked = rank_predictions(predictions, gt)?;
    Ok(protocol
        .iou_thresholds
        .iter()
        .map(|&t| {
            let hits = greedy_match(&ranked, gt, t).iter().filter(|&&h| h).count();
            hits as f64 / n_gt as f64
        })
        .collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean over IoU thresholds of the interpolated average precision.
pub fn average_precision(predictions: &Predictions, gt: &GroundTruth, protocol: &EvalProtocol) -> Result<f64> {
    average_precision_per_threshold(predictions, gt, protocol).map(|v| mean(&v))
}

/// Mean over IoU thresholds of the recall reached by all predictions.
pub fn average_recall(predictions: &Predictions, gt: &GroundTruth, protocol: &EvalProtocol) -> Result<f64> {
    recall_per_threshold(predictions, gt, protocol).map(|v| mean(&v))
}

pub fn final_score(auc: f64, ap: f64, ar: f64, rule: FinalScoreRule) -> f64 {
    match rule {
        FinalScoreRule::MeanOfThree => (auc + ap + ar) / 3.0,
        FinalScoreRule::MeanOfDetAndLoc => (auc + 0.5 * (ap + ar)) / 2.0,
    }
}
