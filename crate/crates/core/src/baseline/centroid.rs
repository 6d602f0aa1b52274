use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{ClassLabel, LabelSpace};

use super::features::{common_dim, FeatureVector, Sample};
use super::logistic::Prediction;

/// Per-class feature means, in ascending label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidModel {
    pub centroids: Vec<(ClassLabel, Vec<f64>)>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Every label of `space` must have at least one sample.
pub fn nearest_centroid_train(samples: &[Sample], space: LabelSpace) -> Result<CentroidModel> {
    let dim = common_dim(samples)?;
    let mut centroids = Vec::new();
    for label in space.labels() {
        let mut sum = vec![0.0; dim];
        let mut count = 0usize;
        for s in samples.iter().filter(|s| s.label == label) {
            sum.iter_mut()
                .zip(s.features.as_slice())
                .for_each(|(a, b)| *a += b);
            count += 1;
        }
        if count == 0 {
            return Err(Error::DegenerateTraining(format!(
                "class {label} has no samples"
            )));
        }
        sum.iter_mut().for_each(|v| *v /= count as f64);
        centroids.push((label, sum));
    }
    if let Some(s) = samples.iter().find(|s| !space.contains(s.label)) {
        return Err(Error::InvalidLabel(format!(
            "code {} is not in the {space} label space",
            s.label
        )));
    }
    Ok(CentroidModel { centroids })
}

impl CentroidModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, |(_, c)| c.len())
    }

    /// Nearest centroid's label, scored `d_far / (d_near + d_far)` against the
    /// runner-up. Equal distances give 0.5 and the lower label code.
    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.dim(),
                x.dim()
            )));
        }
        let mut ranked: Vec<(f64, ClassLabel)> = self
            .centroids
            .iter()
            .map(|(label, c)| (distance(x.as_slice(), c), *label))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (near, label) = ranked[0];
        let far = ranked.get(1).map_or(near, |r| r.0);
        let score = if near + far > 0.0 {
            far / (near + far)
        } else {
            0.5
        };
        Ok(Prediction {
            decision: label,
            score,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(x: Vec<f64>, label: i32) -> Sample {
        Sample {
            features: FeatureVector(x),
            label: ClassLabel(label),
        }
    }

    #[test]
    fn single_sample_per_class_recovers_itself() {
        let data = vec![sample(vec![0.0, 1.0], -1), sample(vec![1.0, 0.0], 1)];
        let m = nearest_centroid_train(&data, LabelSpace::Binary).unwrap();
        for s in &data {
            let p = m.predict(&s.features).unwrap();
            assert_eq!(p.decision, s.label);
            assert!(p.score > 0.5);
        }
    }

    #[test]
    fn equidistant_point_is_a_tie() {
        let data = vec![sample(vec![0.0], 1), sample(vec![2.0], -1)];
        let m = nearest_centroid_train(&data, LabelSpace::Binary).unwrap();
        let p = m.predict(&FeatureVector(vec![1.0])).unwrap();
        assert_eq!((p.decision, p.score), (ClassLabel(-1), 0.5));
    }

    #[test]
    fn agrees_with_direct_distance_comparison() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut data = Vec::new();
        for _ in 0..30 {
            data.push(sample(
                vec![rng.gen_range(-1.0..0.5), rng.gen_range(-1.0..0.5)],
                -1,
            ));
            data.push(sample(
                vec![rng.gen_range(-0.5..1.0), rng.gen_range(-0.5..1.0)],
                1,
            ));
        }
        let m = nearest_centroid_train(&data, LabelSpace::Binary).unwrap();
        let mean = |label: i32| {
            let pts: Vec<_> = data.iter().filter(|s| s.label.0 == label).collect();
            let n = pts.len() as f64;
            (
                pts.iter().map(|s| s.features.0[0]).sum::<f64>() / n,
                pts.iter().map(|s| s.features.0[1]).sum::<f64>() / n,
            )
        };
        let (neg, pos) = (mean(-1), mean(1));
        for _ in 0..200 {
            let q = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let dn = ((q.0 - neg.0).powi(2) + (q.1 - neg.1).powi(2)).sqrt();
            let dp = ((q.0 - pos.0).powi(2) + (q.1 - pos.1).powi(2)).sqrt();
            let expect = if dp < dn { 1 } else { -1 };
            let p = m.predict(&FeatureVector(vec![q.0, q.1])).unwrap();
            assert_eq!(p.decision.0, expect);
            assert!((0.5..=1.0).contains(&p.score));
        }
    }

    #[test]
    fn empty_class_is_degenerate() {
        let data = vec![sample(vec![0.0], 1)];
        assert!(matches!(
            nearest_centroid_train(&data, LabelSpace::Binary),
            Err(Error::DegenerateTraining(_))
        ));
        assert!(matches!(
            nearest_centroid_train(&[], LabelSpace::Binary),
            Err(Error::DegenerateTraining(_))
        ));
    }

    #[test]
    fn multiclass_uses_runner_up() {
        let space = LabelSpace::multiclass(3).unwrap();
        let data = vec![
            sample(vec![0.0], 0),
            sample(vec![1.0], 1),
            sample(vec![10.0], 2),
        ];
        let m = nearest_centroid_train(&data, space).unwrap();
        let p = m.predict(&FeatureVector(vec![0.25])).unwrap();
        assert_eq!(p.decision, ClassLabel(0));
        assert!((p.score - 0.75).abs() < 1e-15);
    }
}
