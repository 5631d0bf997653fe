use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{clamp_score, ScoreGraph};
use crate::dataset::{CandidateSets, ItemIdx, RatingsDataset, UserIdx};
use crate::error::{Error, Result};

const EPSILON: f64 = 1e-12;

/// Non-negative matrix factorization trained with multiplicative updates on
/// the observed entries only.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfParams {
    pub n_factors: usize,
    pub n_epochs: usize,
    pub init_seed: u64,
}

impl Default for NmfParams {
    fn default() -> Self {
        NmfParams {
            n_factors: 15,
            n_epochs: 50,
            init_seed: 42,
        }
    }
}

/// Fitted factors. Rows are row-major with `n_factors` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfModel {
    pub n_factors: usize,
    pub user_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
    /// Squared error over observed ratings, at init and after every epoch.
    pub loss_history: Vec<f64>,
}

impl NmfModel {
    pub fn user_row(&self, u: UserIdx) -> &[f64] {
        let f = self.n_factors;
        &self.user_factors[u as usize * f..(u as usize + 1) * f]
    }

    pub fn item_row(&self, i: ItemIdx) -> &[f64] {
        let f = self.n_factors;
        &self.item_factors[i as usize * f..(i as usize + 1) * f]
    }

    /// Unclamped reconstruction `P_u . Q_i`.
    pub fn predict(&self, u: UserIdx, i: ItemIdx) -> f64 {
        dot(self.user_row(u), self.item_row(i))
    }

    fn loss(&self, d: &RatingsDataset) -> f64 {
        d.ratings()
            .iter()
            .map(|r| (r.value - self.predict(r.user, r.item)).powi(2))
            .sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One multiplicative half-step for the rows of `target`, holding `other`
/// fixed. `observed(row)` yields `(other_row, rating)` pairs.
fn update_rows<'a, F, I>(target: &mut [f64], other: &[f64], f: usize, observed: F)
where
    F: Fn(usize) -> I + Sync,
    I: Iterator<Item = (usize, f64)> + 'a,
{
    target.par_chunks_mut(f).enumerate().for_each(|(row, x)| {
        let mut num = vec![0.0; f];
        let mut den = vec![0.0; f];
        for (o, rating) in observed(row) {
            let y = &other[o * f..(o + 1) * f];
            let pred = dot(x, y);
            for k in 0..f {
                num[k] += rating * y[k];
                den[k] += pred * y[k];
            }
        }
        for k in 0..f {
            x[k] *= num[k] / (den[k] + EPSILON);
        }
    });
}

/// Trains the factorization. Deterministic for a given `init_seed`.
pub fn fit_nmf(d: &RatingsDataset, p: &NmfParams) -> Result<NmfModel> {
    if p.n_factors == 0 {
        return Err(Error::Config("n_factors must be at least 1".into()));
    }
    let f = p.n_factors;
    let (n, m) = (d.n_users(), d.n_items());

    // Uniform(0, 1) entries scaled so the expected initial prediction
    // f * E[x]^2 * scale^2 equals the global mean rating.
    let scale = 2.0 * (d.global_mean() / f as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(p.init_seed);
    let mut init = |len: usize| -> Vec<f64> {
        (0..len).map(|_| rng.random::<f64>() * scale).collect()
    };
    let user_factors = init(n * f);
    let item_factors = init(m * f);

    let mut model = NmfModel {
        n_factors: f,
        user_factors,
        item_factors,
        loss_history: Vec::with_capacity(p.n_epochs + 1),
    };
    model.loss_history.push(model.loss(d));

    for epoch in 1..=p.n_epochs {
        update_rows(&mut model.user_factors, &model.item_factors, f, |u| {
            d.user_ratings(u as UserIdx)
                .iter()
                .map(|r| (r.item as usize, r.value))
        });
        update_rows(&mut model.item_factors, &model.user_factors, f, |i| {
            d.item_ratings(i as ItemIdx)
                .iter()
                .map(|&(u, v)| (u as usize, v))
        });
        let loss = model.loss(d);
        if !loss.is_finite()
            || model
                .user_factors
                .iter()
                .chain(&model.item_factors)
                .any(|x| !x.is_finite())
        {
            return Err(Error::Numerical(format!(
                "non-finite factors after epoch {epoch}"
            )));
        }
        model.loss_history.push(loss);
    }
    Ok(model)
}

/// Fits NMF and scores every candidate as `clamp(P_u . Q_i, 1, 5)`.
pub fn predict_nmf(d: &RatingsDataset, c: &CandidateSets, p: &NmfParams) -> Result<ScoreGraph> {
    if c.n_users() != d.n_users() {
        return Err(Error::InvalidInput(
            "candidate sets do not match dataset".into(),
        ));
    }
    let model = fit_nmf(d, p)?;
    let per_user = (0..d.n_users() as UserIdx)
        .into_par_iter()
        .map(|u| {
            c.user(u)
                .iter()
                .map(|&i| (i, clamp_score(model.predict(u, i))))
                .collect()
        })
        .collect();
    ScoreGraph::new(
        format!(
            "nmf(n_factors={},n_epochs={},seed={})",
            p.n_factors, p.n_epochs, p.init_seed
        ),
        per_user,
    )
}
