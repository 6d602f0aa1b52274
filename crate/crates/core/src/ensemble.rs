//! Mode-based fusion of a committee's decisions and posterior scores.
//!
//! A committee of `n` classifiers labels the same `k` images. Their decisions
//! form an `n × k` [`DecisionMatrix`] and the matching posterior scores an
//! `n × k` [`ScoreMatrix`]; entry `(i, j)` of both refers to model `i` on image
//! `j`. Fusion takes the mode of every column: the fused label is the most
//! frequent decision and the fused confidence is the mean score of exactly the
//! models that voted for it.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{ClassLabel, LabelSpace};
use crate::par::{self, Parallelism};

fn check_unique(kind: &str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(format!("{kind} {id}")));
        }
    }
    Ok(())
}

fn check_shape(rows: &[String], cols: &[String], len: usize) -> Result<()> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::Dimension(format!(
            "matrix needs at least one model and one image, got {}x{}",
            rows.len(),
            cols.len()
        )));
    }
    if rows.len() * cols.len() != len {
        return Err(Error::Dimension(format!(
            "{} entries do not fill a {}x{} matrix",
            len,
            rows.len(),
            cols.len()
        )));
    }
    check_unique("model", rows)?;
    check_unique("image", cols)
}

fn check_score(value: f64, model: &str, image: &str) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "score {value} for model `{model}`, image `{image}` is outside [0, 1]"
        )))
    }
}

/// Per-model class decisions, rows are models and columns are images.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMatrix {
    space: LabelSpace,
    model_ids: Vec<String>,
    image_ids: Vec<String>,
    /// Row-major, `model_ids.len() * image_ids.len()` entries.
    entries: Vec<ClassLabel>,
}

impl DecisionMatrix {
    pub fn new(
        space: LabelSpace,
        model_ids: Vec<String>,
        image_ids: Vec<String>,
        entries: Vec<ClassLabel>,
    ) -> Result<Self> {
        check_shape(&model_ids, &image_ids, entries.len())?;
        for (idx, &label) in entries.iter().enumerate() {
            if !space.contains(label) {
                let (i, j) = (idx / image_ids.len(), idx % image_ids.len());
                return Err(Error::InvalidLabel(format!(
                    "code {label} for model `{}`, image `{}` is not in the {space} label space",
                    model_ids[i], image_ids[j]
                )));
            }
        }
        Ok(Self {
            space,
            model_ids,
            image_ids,
            entries,
        })
    }

    /// Builds a matrix from one row per model.
    pub fn from_rows(
        space: LabelSpace,
        model_ids: Vec<String>,
        image_ids: Vec<String>,
        rows: Vec<Vec<ClassLabel>>,
    ) -> Result<Self> {
        if rows.len() != model_ids.len() || rows.iter().any(|r| r.len() != image_ids.len()) {
            return Err(Error::Dimension(
                "row count or row length does not match the ids".into(),
            ));
        }
        Self::new(space, model_ids, image_ids, rows.concat())
    }

    pub fn space(&self) -> LabelSpace {
        self.space
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn n_images(&self) -> usize {
        self.image_ids.len()
    }

    pub fn get(&self, model: usize, image: usize) -> ClassLabel {
        self.entries[model * self.n_images() + image]
    }

    pub fn row(&self, model: usize) -> &[ClassLabel] {
        let k = self.n_images();
        &self.entries[model * k..(model + 1) * k]
    }

    pub fn column(&self, image: usize) -> Vec<ClassLabel> {
        (0..self.n_models()).map(|i| self.get(i, image)).collect()
    }
}

/// Posterior scores aligned index-for-index with a [`DecisionMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    model_ids: Vec<String>,
    image_ids: Vec<String>,
    entries: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(model_ids: Vec<String>, image_ids: Vec<String>, entries: Vec<f64>) -> Result<Self> {
        check_shape(&model_ids, &image_ids, entries.len())?;
        let k = image_ids.len();
        for (idx, &s) in entries.iter().enumerate() {
            check_score(s, &model_ids[idx / k], &image_ids[idx % k])?;
        }
        Ok(Self {
            model_ids,
            image_ids,
            entries,
        })
    }

    pub fn from_rows(
        model_ids: Vec<String>,
        image_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != model_ids.len() || rows.iter().any(|r| r.len() != image_ids.len()) {
            return Err(Error::Dimension(
                "row count or row length does not match the ids".into(),
            ));
        }
        Self::new(model_ids, image_ids, rows.concat())
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn get(&self, model: usize, image: usize) -> f64 {
        self.entries[model * self.image_ids.len() + image]
    }

    pub fn row(&self, model: usize) -> &[f64] {
        let k = self.image_ids.len();
        &self.entries[model * k..(model + 1) * k]
    }

    pub fn column(&self, image: usize) -> Vec<f64> {
        (0..self.model_ids.len())
            .map(|i| self.get(i, image))
            .collect()
    }
}

/// The modal label of one column together with the rows that voted for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMode {
    pub label: ClassLabel,
    /// Ascending row indices holding `label`.
    pub voters: Vec<usize>,
}

/// Most frequent label of a column and the positions that hold it.
///
/// Frequency ties go to the label whose voters have the higher mean score,
/// then to the lower label code.
pub fn column_mode(decisions: &[ClassLabel], scores: &[f64]) -> Result<ColumnMode> {
    if decisions.is_empty() {
        return Err(Error::Dimension(
            "cannot take the mode of an empty column".into(),
        ));
    }
    if decisions.len() != scores.len() {
        return Err(Error::Dimension(format!(
            "{} decisions but {} scores",
            decisions.len(),
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::Domain(format!("score {bad} is outside [0, 1]")));
    }

    // label -> (count, score sum); BTreeMap iterates in ascending code order.
    let mut tally: BTreeMap<ClassLabel, (usize, f64)> = BTreeMap::new();
    for (&d, &s) in decisions.iter().zip(scores) {
        let e = tally.entry(d).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += s;
    }

    let mut best: Option<(ClassLabel, usize, f64)> = None;
    for (&label, &(count, sum)) in &tally {
        let mean = sum / count as f64;
        let better = match best {
            None => true,
            Some((_, bc, bm)) => count > bc || (count == bc && mean > bm),
        };
        if better {
            best = Some((label, count, mean));
        }
    }
    let (label, _, _) = best.expect("nonempty column has a mode");
    let voters = decisions
        .iter()
        .enumerate()
        .filter_map(|(i, &d)| (d == label).then_some(i))
        .collect();
    Ok(ColumnMode { label, voters })
}

/// Per-image fused class (`dm`), fused confidence (`ds`), and the number of
/// models that voted for the fused class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionResult {
    pub image_ids: Vec<String>,
    pub dm: Vec<ClassLabel>,
    pub ds: Vec<f64>,
    pub support: Vec<usize>,
}

impl FusionResult {
    pub fn len(&self) -> usize {
        self.dm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dm.is_empty()
    }
}

fn check_paired(d: &DecisionMatrix, s: &ScoreMatrix) -> Result<()> {
    if d.model_ids != s.model_ids {
        return Err(Error::Pairing(format!(
            "model ids differ: decisions {:?}, scores {:?}",
            d.model_ids, s.model_ids
        )));
    }
    if d.image_ids != s.image_ids {
        return Err(Error::Pairing(
            "image ids of the decision and score matrices differ".into(),
        ));
    }
    Ok(())
}

/// Mean of the voters' scores, kept inside the voters' score range.
fn voter_mean(scores: &[f64], voters: &[usize]) -> f64 {
    let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for &v in voters {
        let s = scores[v];
        sum += s;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    (sum / voters.len() as f64).clamp(lo, hi)
}

/// Fuses a committee column by column. See [`fuse_with`].
pub fn fuse(d: &DecisionMatrix, s: &ScoreMatrix) -> Result<FusionResult> {
    fuse_with(d, s, Parallelism::default())
}

/// Fuses a committee column by column, scheduling columns per `mode`.
pub fn fuse_with(d: &DecisionMatrix, s: &ScoreMatrix, mode: Parallelism) -> Result<FusionResult> {
    check_paired(d, s)?;
    let columns = par::try_map_indexed(d.n_images(), mode, |j| {
        let decisions = d.column(j);
        let scores = s.column(j);
        let m = column_mode(&decisions, &scores)?;
        let ds = voter_mean(&scores, &m.voters);
        Ok::<_, Error>((m.label, ds, m.voters.len()))
    })?;

    let mut out = FusionResult {
        image_ids: d.image_ids.clone(),
        dm: Vec::with_capacity(columns.len()),
        ds: Vec::with_capacity(columns.len()),
        support: Vec::with_capacity(columns.len()),
    };
    for (label, ds, support) in columns {
        out.dm.push(label);
        out.ds.push(ds);
        out.support.push(support);
    }
    Ok(out)
}

/// Inputs of the grouped-frequency mode estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupedModeInput {
    /// Lower limit of the modal class.
    pub lower: f64,
    /// Class interval width.
    pub width: f64,
    /// Frequency of the modal class.
    pub f_modal: f64,
    /// Frequency of the class before the modal class.
    pub f_before: f64,
    /// Frequency of the class after the modal class.
    pub f_after: f64,
}

/// Grouped-frequency mode: `l + (f1 - f0) / (2 f1 - f0 - f2) * h`.
pub fn grouped_mode(g: &GroupedModeInput) -> Result<f64> {
    if !g.width.is_finite() || g.width <= 0.0 {
        return Err(Error::Domain(format!(
            "class interval width must be positive, got {}",
            g.width
        )));
    }
    for f in [g.f_modal, g.f_before, g.f_after] {
        if !f.is_finite() || f < 0.0 {
            return Err(Error::Domain(format!(
                "frequency {f} must be a nonnegative real"
            )));
        }
    }
    let denom = 2.0 * g.f_modal - g.f_before - g.f_after;
    if denom == 0.0 {
        return Err(Error::SingularMode);
    }
    Ok(g.lower + ((g.f_modal - g.f_before) / denom) * g.width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l(v: &[i32]) -> Vec<ClassLabel> {
        v.iter().copied().map(ClassLabel).collect()
    }

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn matrices(rows: Vec<Vec<i32>>, scores: Vec<Vec<f64>>) -> (DecisionMatrix, ScoreMatrix) {
        let n = rows.len();
        let k = rows[0].len();
        let d = DecisionMatrix::from_rows(
            LabelSpace::Binary,
            ids("m", n),
            ids("img", k),
            rows.iter().map(|r| l(r)).collect(),
        )
        .unwrap();
        let s = ScoreMatrix::from_rows(ids("m", n), ids("img", k), scores).unwrap();
        (d, s)
    }

    #[test]
    fn mode_strict_majority() {
        let m = column_mode(&l(&[-1, -1, 1]), &[0.9, 0.8, 0.6]).unwrap();
        assert_eq!(m.label, ClassLabel(-1));
        assert_eq!(m.voters, vec![0, 1]);
    }

    #[test]
    fn mode_singleton() {
        let m = column_mode(&l(&[1]), &[0.7]).unwrap();
        assert_eq!(m.label, ClassLabel(1));
        assert_eq!(m.voters, vec![0]);
    }

    #[test]
    fn mode_tie_goes_to_higher_mean_score() {
        // Both tie resolutions enumerated: -1 has mean 0.4, +1 has mean 0.9.
        let m = column_mode(&l(&[-1, 1]), &[0.4, 0.9]).unwrap();
        assert_eq!(m.label, ClassLabel(1));
        assert_eq!(m.voters, vec![1]);
        let m = column_mode(&l(&[-1, 1]), &[0.9, 0.4]).unwrap();
        assert_eq!(m.label, ClassLabel(-1));
    }

    #[test]
    fn mode_full_tie_goes_to_lower_code() {
        let m = column_mode(&l(&[1, -1]), &[0.6, 0.6]).unwrap();
        assert_eq!(m.label, ClassLabel(-1));
        assert_eq!(m.voters, vec![1]);
    }

    #[test]
    fn mode_rejects_empty_and_mismatched() {
        assert!(matches!(column_mode(&[], &[]), Err(Error::Dimension(_))));
        assert!(matches!(
            column_mode(&l(&[1, 1]), &[0.5]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            column_mode(&l(&[1]), &[1.5]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn fuse_three_model_column() {
        let (d, s) = matrices(
            vec![vec![-1], vec![-1], vec![1]],
            vec![vec![0.9], vec![0.8], vec![0.6]],
        );
        let r = fuse(&d, &s).unwrap();
        assert_eq!(r.dm, l(&[-1]));
        assert!((r.ds[0] - 0.85).abs() < 1e-15);
        assert_eq!(r.support, vec![2]);
    }

    #[test]
    fn fuse_single_model_is_identity() {
        let row = vec![1, -1, -1, 1, 1];
        let scores = vec![0.51, 0.99, 0.73, 0.5, 1.0];
        let (d, s) = matrices(vec![row.clone()], vec![scores.clone()]);
        let r = fuse(&d, &s).unwrap();
        assert_eq!(r.dm, l(&row));
        assert_eq!(r.ds, scores);
        assert_eq!(r.support, vec![1; 5]);
    }

    #[test]
    fn multiclass_columns_fuse() {
        let space = LabelSpace::multiclass(3).unwrap();
        let d = DecisionMatrix::from_rows(
            space,
            ids("m", 4),
            ids("i", 1),
            vec![l(&[2]), l(&[0]), l(&[2]), l(&[1])],
        )
        .unwrap();
        let s = ScoreMatrix::from_rows(
            ids("m", 4),
            ids("i", 1),
            vec![vec![0.7], vec![0.9], vec![0.5], vec![0.8]],
        )
        .unwrap();
        let r = fuse(&d, &s).unwrap();
        assert_eq!(r.dm, l(&[2]));
        assert!((r.ds[0] - 0.6).abs() < 1e-15);
        assert_eq!(r.support, vec![2]);
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(
            DecisionMatrix::new(LabelSpace::Binary, ids("m", 1), ids("i", 1), l(&[0])),
            Err(Error::InvalidLabel(_))
        ));
        assert!(matches!(
            DecisionMatrix::new(LabelSpace::Binary, vec![], ids("i", 1), vec![]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            DecisionMatrix::new(
                LabelSpace::Binary,
                vec!["a".into(), "a".into()],
                ids("i", 1),
                l(&[1, 1])
            ),
            Err(Error::DuplicateId(_))
        ));
        assert!(matches!(
            ScoreMatrix::new(ids("m", 1), ids("i", 2), vec![0.5, -0.1]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            ScoreMatrix::new(ids("m", 1), ids("i", 2), vec![0.5, f64::NAN]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn fuse_rejects_unpaired_matrices() {
        let d =
            DecisionMatrix::new(LabelSpace::Binary, ids("m", 2), ids("i", 1), l(&[1, 1])).unwrap();
        let s =
            ScoreMatrix::new(vec!["m0".into(), "x".into()], ids("i", 1), vec![0.5, 0.5]).unwrap();
        assert!(matches!(fuse(&d, &s), Err(Error::Pairing(_))));
        let s = ScoreMatrix::new(ids("m", 2), ids("j", 1), vec![0.5, 0.5]).unwrap();
        assert!(matches!(fuse(&d, &s), Err(Error::Pairing(_))));
    }

    #[test]
    fn grouped_mode_examples() {
        let g = |lower, width, f_modal, f_before, f_after| GroupedModeInput {
            lower,
            width,
            f_modal,
            f_before,
            f_after,
        };
        assert_eq!(
            grouped_mode(&g(10.0, 5.0, 15.0, 10.0, 12.0)).unwrap(),
            13.125
        );
        assert_eq!(grouped_mode(&g(3.5, 2.0, 7.0, 7.0, 1.0)).unwrap(), 3.5);
        assert_eq!(grouped_mode(&g(0.0, 1.0, 2.0, 1.0, 1.0)).unwrap(), 0.5);
        assert!(matches!(
            grouped_mode(&g(0.0, 1.0, 1.0, 1.0, 1.0)),
            Err(Error::SingularMode)
        ));
        assert!(matches!(
            grouped_mode(&g(0.0, 0.0, 2.0, 1.0, 1.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            grouped_mode(&g(0.0, -1.0, 2.0, 1.0, 1.0)),
            Err(Error::Domain(_))
        ));
    }

    fn committee() -> impl Strategy<Value = (Vec<Vec<i32>>, Vec<Vec<f64>>)> {
        (1usize..8, 1usize..12).prop_flat_map(|(n, k)| {
            (
                prop::collection::vec(
                    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1 } else { -1 }), k),
                    n,
                ),
                prop::collection::vec(prop::collection::vec(0.0f64..=1.0, k), n),
            )
        })
    }

    proptest! {
        #[test]
        fn permuting_models_changes_nothing((rows, scores) in committee(), rot in 0usize..8) {
            let n = rows.len();
            let (d, s) = matrices(rows.clone(), scores.clone());
            let base = fuse(&d, &s).unwrap();
            let order: Vec<usize> = (0..n).map(|i| (i + rot) % n).rev().collect();
            let prow: Vec<_> = order.iter().map(|&i| rows[i].clone()).collect();
            let psc: Vec<_> = order.iter().map(|&i| scores[i].clone()).collect();
            let (pd, ps) = matrices(prow, psc);
            let permuted = fuse(&pd, &ps).unwrap();
            prop_assert_eq!(&base.dm, &permuted.dm);
            prop_assert_eq!(&base.support, &permuted.support);
            for (a, b) in base.ds.iter().zip(&permuted.ds) {
                // Summation order differs, so allow rounding-level drift.
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }

        #[test]
        fn fused_score_within_voter_range((rows, scores) in committee()) {
            let (d, s) = matrices(rows, scores);
            let r = fuse(&d, &s).unwrap();
            for j in 0..d.n_images() {
                let col = s.column(j);
                let voters: Vec<f64> = (0..d.n_models())
                    .filter(|&i| d.get(i, j) == r.dm[j])
                    .map(|i| col[i])
                    .collect();
                prop_assert_eq!(voters.len(), r.support[j]);
                let lo = voters.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = voters.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= r.ds[j] && r.ds[j] <= hi);
                prop_assert!(r.support[j] >= 1 && r.support[j] <= d.n_models());
            }
        }

        #[test]
        fn unanimous_columns((scores, label, n) in (prop::collection::vec(0.0f64..=1.0, 1..9), prop::bool::ANY, Just(()))
            .prop_map(|(s, b, _)| { let n = s.len(); (s, if b { 1 } else { -1 }, n) })) {
            let rows = vec![vec![label]; n];
            let sc: Vec<Vec<f64>> = scores.iter().map(|&x| vec![x]).collect();
            let (d, s) = matrices(rows, sc);
            let r = fuse(&d, &s).unwrap();
            prop_assert_eq!(r.dm[0], ClassLabel(label));
            prop_assert_eq!(r.support[0], n);
            let mean = scores.iter().sum::<f64>() / n as f64;
            prop_assert!((r.ds[0] - mean).abs() <= 1e-15);
        }

        #[test]
        fn sequential_and_parallel_agree((rows, scores) in committee()) {
            let (d, s) = matrices(rows, scores);
            let a = fuse_with(&d, &s, Parallelism::Sequential).unwrap();
            let b = fuse_with(&d, &s, Parallelism::Parallel).unwrap();
            prop_assert_eq!(a.dm, b.dm);
            prop_assert_eq!(a.support, b.support);
            prop_assert!(a.ds.iter().zip(&b.ds).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
