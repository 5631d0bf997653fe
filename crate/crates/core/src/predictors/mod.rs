//! Collaborative-filtering predictors producing per-user candidate scores.

mod knn;
mod nmf;

use std::fmt;
use std::io::{BufRead, Write};

pub use knn::{predict_knn, KnnParams};
pub use nmf::{fit_nmf, predict_nmf, NmfModel, NmfParams};

use crate::dataset::{CandidateSets, ItemIdx, RatingsDataset, UserIdx, MAX_RATING, MIN_RATING};
use crate::error::{Error, Result};

/// Predicted preference scores `w(u, i)` over each user's candidate items.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGraph {
    provenance: String,
    // per user, sorted by item, items unique
    per_user: Vec<Vec<(ItemIdx, f64)>>,
}

impl ScoreGraph {
    /// Wraps externally produced scores. Each user's list is sorted by item;
    /// duplicate items and non-finite scores are rejected. Scores are not
    /// clamped here, so a foreign graph may carry non-positive values.
    pub fn new(provenance: impl Into<String>, mut per_user: Vec<Vec<(ItemIdx, f64)>>) -> Result<Self> {
        for (u, scores) in per_user.iter_mut().enumerate() {
            scores.sort_by_key(|&(i, _)| i);
            if let Some(w) = scores.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidInput(format!(
                    "user {u} has item {} scored twice",
                    w[0].0
                )));
            }
            if let Some(&(i, s)) = scores.iter().find(|(_, s)| !s.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "user {u}, item {i}: non-finite score {s}"
                )));
            }
        }
        Ok(ScoreGraph {
            provenance: provenance.into(),
            per_user,
        })
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn n_users(&self) -> usize {
        self.per_user.len()
    }

    /// `(item, score)` pairs for one user, ascending by item.
    pub fn user(&self, user: UserIdx) -> &[(ItemIdx, f64)] {
        &self.per_user[user as usize]
    }

    pub fn score(&self, user: UserIdx, item: ItemIdx) -> Option<f64> {
        let scores = self.user(user);
        scores
            .binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|pos| scores[pos].1)
    }

    /// Writes `user,item,score` rows (raw ids, 6 decimals).
    pub fn write_csv<W: Write>(&self, d: &RatingsDataset, mut out: W) -> std::io::Result<()> {
        writeln!(out, "user,item,score")?;
        for (u, scores) in self.per_user.iter().enumerate() {
            let raw_u = d.raw_user(u as UserIdx);
            for &(i, s) in scores {
                writeln!(out, "{},{},{:.6}", raw_u, d.raw_item(i), s)?;
            }
        }
        Ok(())
    }

    /// Reads the format written by [`ScoreGraph::write_csv`].
    pub fn read_csv<R: BufRead>(
        d: &RatingsDataset,
        provenance: impl Into<String>,
        source: R,
    ) -> Result<Self> {
        let mut per_user = vec![Vec::new(); d.n_users()];
        for (pos, line) in source.lines().enumerate() {
            let line_no = pos + 1;
            let line = line.map_err(|e| Error::io("<score cache>", e))?;
            if line_no == 1 {
                if line.trim() != "user,item,score" {
                    return Err(Error::Parse {
                        line: 1,
                        message: format!("unexpected header {line:?}"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse { line: line_no, message };
            let mut fields = line.split(',');
            let (Some(u), Some(i), Some(s), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad("expected 3 fields".into()));
            };
            let u: u32 = u.parse().map_err(|_| bad(format!("bad user {u:?}")))?;
            let i: u32 = i.parse().map_err(|_| bad(format!("bad item {i:?}")))?;
            let s: f64 = s.parse().map_err(|_| bad(format!("bad score {s:?}")))?;
            let u = d.user_idx(u).ok_or_else(|| bad(format!("unknown user {u}")))?;
            let i = d.item_idx(i).ok_or_else(|| bad(format!("unknown item {i}")))?;
            per_user[u as usize].push((i, s));
        }
        ScoreGraph::new(provenance, per_user)
    }

    /// Checks that every user is scored on exactly their candidate set.
    pub fn check_covers(&self, c: &CandidateSets) -> Result<()> {
        if self.n_users() != c.n_users() {
            return Err(Error::InvalidInput(format!(
                "score graph has {} users, candidate sets {}",
                self.n_users(),
                c.n_users()
            )));
        }
        for (u, cands) in c.iter() {
            if !self.user(u).iter().map(|&(i, _)| i).eq(cands.iter().copied()) {
                return Err(Error::InvalidInput(format!(
                    "user {u}: scored items differ from candidate set"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn clamp_score(x: f64) -> f64 {
    x.clamp(MIN_RATING, MAX_RATING)
}

/// A configured predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Knn(KnnParams),
    Nmf(NmfParams),
}

impl Predictor {
    /// Short name used in result tables (`knn` / `nmf`).
    pub fn name(&self) -> &'static str {
        match self {
            Predictor::Knn(_) => "knn",
            Predictor::Nmf(_) => "nmf",
        }
    }

    pub fn fit(&self, d: &RatingsDataset, c: &CandidateSets) -> Result<ScoreGraph> {
        match self {
            Predictor::Knn(p) => predict_knn(d, c, p),
            Predictor::Nmf(p) => predict_nmf(d, c, p),
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predictor::Knn(p) => write!(
                f,
                "knn(n_neighbors={},min_overlap={})",
                p.n_neighbors, p.min_overlap
            ),
            Predictor::Nmf(p) => write!(
                f,
                "nmf(n_factors={},n_epochs={},seed={})",
                p.n_factors, p.n_epochs, p.init_seed
            ),
        }
    }
}
