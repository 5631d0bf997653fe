//! User satisfaction, top-k overlap, Gini-based disparity and aggregate
//! diversity.

use std::collections::HashSet;
use std::io::Write;

use crate::dataset::{RatingsDataset, UserIdx};
use crate::error::{Error, Result};
use crate::predictors::ScoreGraph;
use crate::reranking::RecommendationSet;

fn check_pair(r: &RecommendationSet, top: &RecommendationSet) -> Result<()> {
    if r.k() != top.k() {
        return Err(Error::InvalidInput(format!(
            "k mismatch: {} vs {}",
            r.k(),
            top.k()
        )));
    }
    if r.n_users() != top.n_users() {
        return Err(Error::InvalidInput(format!(
            "user count mismatch: {} vs {}",
            r.n_users(),
            top.n_users()
        )));
    }
    Ok(())
}

/// Per-user satisfaction: score mass of the served list over the score mass
/// of the user's top-k list.
pub fn satisfaction(
    s: &ScoreGraph,
    r: &RecommendationSet,
    top: &RecommendationSet,
) -> Result<Vec<f64>> {
    check_pair(r, top)?;
    if s.n_users() != r.n_users() {
        return Err(Error::InvalidInput(
            "score graph and recommendations disagree on users".into(),
        ));
    }
    let mass = |set: &RecommendationSet, u: UserIdx| -> Result<f64> {
        set.items(u)
            .map(|i| {
                s.score(u, i).ok_or_else(|| {
                    Error::InvalidInput(format!("user {u}: item {i} has no score"))
                })
            })
            .sum()
    };
    (0..r.n_users() as UserIdx)
        .map(|u| {
            let best = mass(top, u)?;
            if best.is_nan() || best <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "user {u}: top-k score mass {best} is not positive"
                )));
            }
            Ok(mass(r, u)? / best)
        })
        .collect()
}

/// Per-user `|R(u) ∩ R_top(u)| / k`.
pub fn overlap_similarity(r: &RecommendationSet, top: &RecommendationSet) -> Result<Vec<f64>> {
    check_pair(r, top)?;
    let k = r.k() as f64;
    Ok((0..r.n_users() as UserIdx)
        .map(|u| {
            let best: HashSet<_> = top.items(u).collect();
            r.items(u).filter(|i| best.contains(i)).count() as f64 / k
        })
        .collect())
}

/// Gini coefficient `Σ_{a,b} |x_a − x_b| / (2 n Σ x)` over ordered pairs,
/// evaluated through the sorted form `Σ_i (2i − n − 1) x_(i) / (n Σ x)`.
/// An all-zero population has Gini 0.
pub fn gini(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidInput("gini of an empty vector".into()));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "gini needs finite non-negative entries, got {v}"
        )));
    }
    let total: f64 = x.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Ok(0.0);
    }
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, v)| (2.0 * (i + 1) as f64 - n - 1.0) * v)
        .sum();
    // rounding can push an all-equal population slightly below zero
    Ok((weighted / (n * total)).max(0.0))
}

/// Gini coefficient of the satisfaction vector.
pub fn score_disparity(satisfaction: &[f64]) -> Result<f64> {
    gini(satisfaction)
}

/// Gini coefficient of the overlap vector.
pub fn recommendation_disparity(overlap: &[f64]) -> Result<f64> {
    gini(overlap)
}

/// Fraction of the `n_items` catalog recommended to at least one user.
pub fn aggregate_diversity(r: &RecommendationSet, n_items: usize) -> f64 {
    if n_items == 0 {
        return 0.0;
    }
    r.distinct_items() as f64 / n_items as f64
}

/// Where a report came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// `knn` or `nmf`.
    pub predictor: String,
    /// `none`, `random` or `greedy`.
    pub post: String,
    /// `ell` for random, `theta` for greedy, `k` for the baseline.
    pub param: usize,
    pub k: usize,
    /// Free-form details: model hyperparameters, seed, achieved increase.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisparityReport {
    pub provenance: Provenance,
    pub aggregate_diversity: f64,
    pub score_disparity: f64,
    pub recommendation_disparity: f64,
    pub satisfaction: Vec<f64>,
    pub overlap: Vec<f64>,
}

impl DisparityReport {
    /// Evaluates `r` against the top-k set of the same score graph.
    pub fn evaluate(
        s: &ScoreGraph,
        r: &RecommendationSet,
        top: &RecommendationSet,
        n_items: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        let satisfaction = satisfaction(s, r, top)?;
        let overlap = overlap_similarity(r, top)?;
        Ok(DisparityReport {
            provenance,
            aggregate_diversity: aggregate_diversity(r, n_items),
            score_disparity: score_disparity(&satisfaction)?,
            recommendation_disparity: recommendation_disparity(&overlap)?,
            satisfaction,
            overlap,
        })
    }

    /// Writes `user,satisfaction,overlap` rows with raw user ids.
    pub fn write_per_user_csv<W: Write>(
        &self,
        d: &RatingsDataset,
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(out, "user,satisfaction,overlap")?;
        for (u, (a, o)) in self.satisfaction.iter().zip(&self.overlap).enumerate() {
            writeln!(out, "{},{:.6},{:.6}", d.raw_user(u as UserIdx), a, o)?;
        }
        Ok(())
    }
}

/// Formats a fraction as a percentage with two decimals.
pub fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reranking::{top_k, Procedure};

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert_close(gini(&[0.0, 1.0]).unwrap(), 0.5);
        assert_close(gini(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.25);
        assert_close(gini(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 0.25);
        assert_eq!(gini(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini(&[7.0]).unwrap(), 0.0);
    }

    #[test]
    fn gini_rejects_bad_input() {
        assert!(gini(&[]).is_err());
        assert!(gini(&[1.0, -0.5]).is_err());
        assert!(gini(&[f64::NAN]).is_err());
    }

    #[test]
    fn disparity_examples() {
        assert_eq!(score_disparity(&[1.0; 10]).unwrap(), 0.0);
        assert_close(score_disparity(&[1.0, 0.5]).unwrap(), 1.0 / 6.0);
        assert_eq!(recommendation_disparity(&[1.0; 4]).unwrap(), 0.0);
        assert_close(recommendation_disparity(&[0.0, 1.0]).unwrap(), 0.5);
    }

    fn abcd() -> ScoreGraph {
        // a=0, b=1, c=2, d=3
        ScoreGraph::new("t", vec![vec![(0, 5.0), (1, 4.0), (2, 3.0), (3, 1.0)]]).unwrap()
    }

    #[test]
    fn satisfaction_hand_values() {
        let s = abcd();
        let top = top_k(&s, 2).unwrap();
        assert_eq!(satisfaction(&s, &top, &top).unwrap(), vec![1.0]);

        let r = RecommendationSet::new(2, vec![vec![(1, 4.0), (2, 3.0)]], Procedure::TopK).unwrap();
        assert_close(satisfaction(&s, &r, &top).unwrap()[0], 7.0 / 9.0);

        let top1 = top_k(&s, 1).unwrap();
        let r1 = RecommendationSet::new(1, vec![vec![(3, 1.0)]], Procedure::TopK).unwrap();
        assert_close(satisfaction(&s, &r1, &top1).unwrap()[0], 0.2);
    }

    #[test]
    fn satisfaction_rejects_zero_mass() {
        let s = ScoreGraph::new("foreign", vec![vec![(0, 0.0), (1, 0.0)]]).unwrap();
        let top = top_k(&s, 1).unwrap();
        assert!(matches!(
            satisfaction(&s, &top, &top),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn overlap_values() {
        let list = |items: &[u32]| items.iter().map(|&i| (i, 1.0)).collect::<Vec<_>>();
        let top = RecommendationSet::new(5, vec![list(&[0, 1, 2, 3, 4]); 3], Procedure::TopK).unwrap();
        let r = RecommendationSet::new(
            5,
            vec![list(&[0, 1, 2, 3, 4]), list(&[5, 6, 7, 8, 9]), list(&[0, 1, 7, 8, 9])],
            Procedure::TopK,
        )
        .unwrap();
        let sim = overlap_similarity(&r, &top).unwrap();
        assert_eq!(sim, vec![1.0, 0.0, 0.4]);

        let short = RecommendationSet::new(5, vec![list(&[0, 1, 2, 3, 4])], Procedure::TopK).unwrap();
        assert!(overlap_similarity(&short, &top).is_err());
    }

    #[test]
    fn aggregate_diversity_values() {
        let list = |items: &[u32]| items.iter().map(|&i| (i, 1.0)).collect::<Vec<_>>();
        let shared = RecommendationSet::new(2, vec![list(&[0, 1]); 4], Procedure::TopK).unwrap();
        assert_close(aggregate_diversity(&shared, 10), 0.2);
        let all = RecommendationSet::new(2, vec![list(&[0, 1]), list(&[2, 3])], Procedure::TopK).unwrap();
        assert_eq!(aggregate_diversity(&all, 4), 1.0);
    }

    #[test]
    fn percent_format() {
        assert_eq!(percent(0.605), "60.50%");
        assert_eq!(percent(0.0001), "0.01%");
    }
}
