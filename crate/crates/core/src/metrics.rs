//! Confusion counts, the accuracy / sensitivity / specificity / F1 suite, and
//! ROC with trapezoidal AUC.
//!
//! A metric whose denominator is zero is reported as `None` rather than NaN so
//! that mean ± std aggregation can skip it explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Tallies predictions against truth, one-vs-rest around `positive`.
pub fn confusion(
    truth: &[ClassLabel],
    predicted: &[ClassLabel],
    positive: ClassLabel,
) -> Result<ConfusionCounts> {
    if truth.len() != predicted.len() {
        return Err(Error::Dimension(format!(
            "{} truth labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Dimension("no samples to tally".into()));
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t == positive, p == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Identifies one metric of [`MetricSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    Sensitivity,
    Specificity,
    F1,
    Auc,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Accuracy,
        MetricKind::Sensitivity,
        MetricKind::Specificity,
        MetricKind::F1,
        MetricKind::Auc,
    ];

    pub fn title(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "Accuracy",
            MetricKind::Sensitivity => "Sensitivity",
            MetricKind::Specificity => "Specificity",
            MetricKind::F1 => "F1 score",
            MetricKind::Auc => "AUC",
        }
    }

    /// Accuracy, sensitivity and specificity are reported as percentages;
    /// F1 and AUC as fractions.
    pub fn is_percent(self) -> bool {
        matches!(
            self,
            MetricKind::Accuracy | MetricKind::Sensitivity | MetricKind::Specificity
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
}

impl MetricSet {
    pub fn get(&self, kind: MetricKind) -> Option<f64> {
        match kind {
            MetricKind::Accuracy => self.accuracy,
            MetricKind::Sensitivity => self.sensitivity,
            MetricKind::Specificity => self.specificity,
            MetricKind::F1 => self.f1,
            MetricKind::Auc => self.auc,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Accuracy `(tp+tn)/total`, sensitivity `tp/(tp+fn)`, specificity
/// `tn/(tn+fp)`, F1 `2tp/(2tp+fp+fn)`. `auc` is left unset.
pub fn metric_set(c: &ConfusionCounts) -> Result<MetricSet> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    Ok(MetricSet {
        accuracy: ratio(c.tp + c.tn, total),
        sensitivity: ratio(c.tp, c.tp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        auc: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Samples scoring at or above this value are called positive. The
    /// initial `(0, 0)` vertex uses `+inf`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
            .sum()
    }
}

/// Sweeps every distinct score as a threshold, highest first. Samples that
/// share a score enter the curve together, so ties earn half credit.
///
/// `scores` must be oriented so that larger means more likely `positive`.
pub fn roc_and_auc(
    truth: &[ClassLabel],
    scores: &[f64],
    positive: ClassLabel,
) -> Result<(RocCurve, f64)> {
    if truth.len() != scores.len() {
        return Err(Error::Dimension(format!(
            "{} truth labels but {} scores",
            truth.len(),
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::Domain(format!("score {bad} is outside [0, 1]")));
    }
    let n_pos = truth.iter().filter(|&&t| t == positive).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateRoc);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::with_capacity(order.len() + 1);
    points.push(RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] == positive {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold,
        });
    }
    let curve = RocCurve { points };
    let auc = curve.area();
    Ok((curve, auc))
}

/// Converts "probability of the decided class" into "probability of
/// `positive`" for binary problems.
pub fn positive_scores(decisions: &[ClassLabel], scores: &[f64], positive: ClassLabel) -> Vec<f64> {
    decisions
        .iter()
        .zip(scores)
        .map(|(&d, &s)| if d == positive { s } else { 1.0 - s })
        .collect()
}

/// Full metric suite for one classifier output. AUC is `None` when the truth
/// has a single class.
pub fn evaluate(
    truth: &[ClassLabel],
    decisions: &[ClassLabel],
    scores: &[f64],
    positive: ClassLabel,
) -> Result<MetricSet> {
    let counts = confusion(truth, decisions, positive)?;
    let mut set = metric_set(&counts)?;
    let oriented = positive_scores(decisions, scores, positive);
    set.auc = match roc_and_auc(truth, &oriented, positive) {
        Ok((_, auc)) => Some(auc),
        Err(Error::DegenerateRoc) => None,
        Err(e) => return Err(e),
    };
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P: ClassLabel = ClassLabel::COVID;
    const N: ClassLabel = ClassLabel::NOT_COVID;

    fn l(v: &[i32]) -> Vec<ClassLabel> {
        v.iter().copied().map(ClassLabel).collect()
    }

    /// Probability that a random positive outscores a random negative, ties ½.
    fn pairwise_auc(truth: &[ClassLabel], scores: &[f64], positive: ClassLabel) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (i, &ti) in truth.iter().enumerate() {
            if ti != positive {
                continue;
            }
            for (j, &tj) in truth.iter().enumerate() {
                if tj == positive {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn hand_counted_confusion() {
        let c = confusion(&l(&[-1, -1, 1, 1]), &l(&[-1, 1, 1, 1]), P).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 0,
                tn: 2,
                fn_: 1
            }
        );
    }

    #[test]
    fn identity_prediction_has_no_errors() {
        let t = l(&[1, -1, -1, 1, -1]);
        let c = confusion(&t, &t, P).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        assert_eq!(c.total(), 5);
    }

    #[test]
    fn confusion_matches_loop_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draw = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { P } else { N };
        let truth: Vec<_> = (0..200).map(|_| draw(&mut rng)).collect();
        let pred: Vec<_> = (0..200).map(|_| draw(&mut rng)).collect();
        let c = confusion(&truth, &pred, P).unwrap();
        let mut expect = [0u64; 4];
        for i in 0..200 {
            let idx = match (truth[i].0, pred[i].0) {
                (-1, -1) => 0,
                (1, -1) => 1,
                (1, 1) => 2,
                _ => 3,
            };
            expect[idx] += 1;
        }
        assert_eq!([c.tp, c.fp, c.tn, c.fn_], expect);
    }

    #[test]
    fn confusion_length_mismatch() {
        assert!(matches!(
            confusion(&l(&[1, 1]), &l(&[1]), P),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn sensitivity_fraction() {
        let m = metric_set(&ConfusionCounts {
            tp: 50,
            fp: 3,
            tn: 7,
            fn_: 10,
        })
        .unwrap();
        assert_eq!(m.sensitivity, Some(50.0 / 60.0));
        assert_eq!(m.accuracy, Some(57.0 / 70.0));
    }

    #[test]
    fn perfect_classifier() {
        let m = metric_set(&ConfusionCounts {
            tp: 1,
            fp: 0,
            tn: 1,
            fn_: 0,
        })
        .unwrap();
        assert_eq!(m.accuracy, Some(1.0));
        assert_eq!(m.sensitivity, Some(1.0));
        assert_eq!(m.specificity, Some(1.0));
        assert_eq!(m.f1, Some(1.0));
        assert_eq!(m.auc, None);
    }

    #[test]
    fn no_positive_calls_still_defines_f1() {
        let m = metric_set(&ConfusionCounts {
            tp: 0,
            fp: 0,
            tn: 4,
            fn_: 3,
        })
        .unwrap();
        assert_eq!(m.f1, Some(0.0));
        assert_eq!(m.sensitivity, Some(0.0));
    }

    #[test]
    fn zero_denominators_are_undefined() {
        let m = metric_set(&ConfusionCounts {
            tp: 0,
            fp: 0,
            tn: 5,
            fn_: 0,
        })
        .unwrap();
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.specificity, Some(1.0));
        assert!(matches!(
            metric_set(&ConfusionCounts::default()),
            Err(Error::EmptyEvaluation)
        ));
    }

    #[test]
    fn perfect_ranking_and_complete_ties() {
        let t = l(&[-1, -1, 1, 1, 1]);
        let (_, auc) = roc_and_auc(&t, &[0.9, 0.8, 0.3, 0.2, 0.1], P).unwrap();
        assert_eq!(auc, 1.0);
        let (curve, auc) = roc_and_auc(&t, &[0.4; 5], P).unwrap();
        assert_eq!(auc, 0.5);
        assert_eq!(curve.points.len(), 2);
    }

    #[test]
    fn roc_endpoints_and_thresholds() {
        let t = l(&[-1, 1, -1, 1]);
        let (curve, _) = roc_and_auc(&t, &[0.9, 0.4, 0.4, 0.2], P).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!(curve
            .points
            .windows(2)
            .all(|w| w[0].threshold > w[1].threshold));
    }

    #[test]
    fn single_class_roc_is_degenerate() {
        assert!(matches!(
            roc_and_auc(&l(&[1, 1]), &[0.2, 0.3], P),
            Err(Error::DegenerateRoc)
        ));
    }

    #[test]
    fn auc_matches_pairwise_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t: Vec<_> = (0..50)
                .map(|_| if rng.gen_bool(0.4) { P } else { N })
                .collect();
            if t.iter().all(|&x| x == t[0]) {
                continue;
            }
            let s: Vec<f64> = (0..50).map(|_| rng.gen::<f64>()).collect();
            let (_, auc) = roc_and_auc(&t, &s, P).unwrap();
            assert!((auc - pairwise_auc(&t, &s, P)).abs() <= 1e-9);
        }
    }

    #[test]
    fn positive_orientation() {
        let s = positive_scores(&l(&[-1, 1]), &[0.75, 0.75], P);
        assert_eq!(s, vec![0.75, 0.25]);
    }

    fn labelled_grid_scores() -> impl Strategy<Value = (Vec<ClassLabel>, Vec<f64>)> {
        (2usize..40)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { P } else { N }), n),
                    // Dyadic grid keeps 1 - s exact and produces plenty of ties.
                    prop::collection::vec((0u32..=16).prop_map(|k| k as f64 / 16.0), n),
                )
            })
            .prop_filter("both classes", |(t, _)| t.contains(&P) && t.contains(&N))
    }

    proptest! {
        #[test]
        fn trapezoid_equals_pairwise((t, s) in labelled_grid_scores()) {
            let (curve, auc) = roc_and_auc(&t, &s, P).unwrap();
            prop_assert!((auc - pairwise_auc(&t, &s, P)).abs() <= 1e-9);
            prop_assert!(curve.points.windows(2).all(|w| w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr));
        }

        #[test]
        fn swapping_positive_class((t, s) in labelled_grid_scores()) {
            let (_, auc) = roc_and_auc(&t, &s, P).unwrap();
            let (_, swapped) = roc_and_auc(&t, &s, N).unwrap();
            prop_assert!((swapped - (1.0 - auc)).abs() <= 1e-12);
            let negated: Vec<f64> = s.iter().map(|x| 1.0 - x).collect();
            let (_, both) = roc_and_auc(&t, &negated, N).unwrap();
            prop_assert!((both - auc).abs() <= 1e-12);

            let pred: Vec<ClassLabel> = s.iter().map(|&x| if x >= 0.5 { P } else { N }).collect();
            let a = metric_set(&confusion(&t, &pred, P).unwrap()).unwrap();
            let b = metric_set(&confusion(&t, &pred, N).unwrap()).unwrap();
            prop_assert_eq!(a.sensitivity, b.specificity);
            prop_assert_eq!(a.specificity, b.sensitivity);
        }

        #[test]
        fn metrics_stay_in_unit_interval(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            let c = ConfusionCounts { tp, fp, tn, fn_ };
            prop_assume!(c.total() > 0);
            let m = metric_set(&c).unwrap();
            for k in MetricKind::ALL {
                if let Some(v) = m.get(k) {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
}
