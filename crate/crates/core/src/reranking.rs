//! Top-k ranking and the two diversity post-processors.
//!
//! * [`top_k`]: each user's `k` highest-scored candidates.
//! * [`random_rerank`]: a uniform sample of `k` items out of the top-`ell`.
//! * [`greedy_rerank`]: swaps never-recommended items into lists until the
//!   number of distinct recommended items has grown by `theta`.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{ItemIdx, RatingsDataset, UserIdx, MAX_RATING, MIN_RATING};
use crate::error::{Error, Result};
use crate::predictors::ScoreGraph;

/// Which procedure produced a [`RecommendationSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum Procedure {
    TopK,
    Random { ell: usize, seed: u64 },
    Greedy { theta: usize, threshold: f64, achieved: usize },
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Procedure::TopK => write!(f, "none"),
            Procedure::Random { ell, seed } => write!(f, "random(ell={ell},seed={seed})"),
            Procedure::Greedy {
                theta,
                threshold,
                achieved,
            } => write!(
                f,
                "greedy(theta={theta},threshold={threshold},achieved={achieved})"
            ),
        }
    }
}

/// Per-user ordered lists of exactly `k` distinct `(item, score)` entries,
/// ordered by descending score, ties by ascending item.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationSet {
    k: usize,
    lists: Vec<Vec<(ItemIdx, f64)>>,
    procedure: Procedure,
}

impl RecommendationSet {
    /// Validates list sizes and distinctness and puts lists in rank order.
    pub fn new(k: usize, mut lists: Vec<Vec<(ItemIdx, f64)>>, procedure: Procedure) -> Result<Self> {
        for (u, list) in lists.iter_mut().enumerate() {
            if list.len() != k {
                return Err(Error::InvalidInput(format!(
                    "user {u} has {} recommendations, expected {k}",
                    list.len()
                )));
            }
            let mut items: Vec<ItemIdx> = list.iter().map(|&(i, _)| i).collect();
            items.sort_unstable();
            if items.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!(
                    "user {u} has a repeated recommendation"
                )));
            }
            list.sort_by(rank_order);
        }
        Ok(RecommendationSet {
            k,
            lists,
            procedure,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_users(&self) -> usize {
        self.lists.len()
    }

    pub fn procedure(&self) -> &Procedure {
        &self.procedure
    }

    pub fn list(&self, user: UserIdx) -> &[(ItemIdx, f64)] {
        &self.lists[user as usize]
    }

    pub fn items(&self, user: UserIdx) -> impl Iterator<Item = ItemIdx> + '_ {
        self.list(user).iter().map(|&(i, _)| i)
    }

    pub fn lists(&self) -> impl Iterator<Item = (UserIdx, &[(ItemIdx, f64)])> {
        self.lists
            .iter()
            .enumerate()
            .map(|(u, l)| (u as UserIdx, l.as_slice()))
    }

    /// Number of distinct items recommended to at least one user.
    pub fn distinct_items(&self) -> usize {
        let mut all: Vec<ItemIdx> = self.lists.iter().flatten().map(|&(i, _)| i).collect();
        all.sort_unstable();
        all.dedup();
        all.len()
    }

    /// Writes `user,rank,item,score` rows with raw ids and 6-decimal scores.
    pub fn write_csv<W: Write>(&self, d: &RatingsDataset, mut out: W) -> std::io::Result<()> {
        writeln!(out, "user,rank,item,score")?;
        for (u, list) in self.lists() {
            for (rank, &(i, s)) in list.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{:.6}",
                    d.raw_user(u),
                    rank + 1,
                    d.raw_item(i),
                    s
                )?;
            }
        }
        Ok(())
    }
}

/// Descending score, then ascending item id.
fn rank_order(a: &(ItemIdx, f64), b: &(ItemIdx, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// The `n` best candidates of one user in rank order.
fn ranked(scores: &[(ItemIdx, f64)], n: usize) -> Vec<(ItemIdx, f64)> {
    let mut all = scores.to_vec();
    if n < all.len() && n > 0 {
        all.select_nth_unstable_by(n - 1, rank_order);
    }
    all.truncate(n);
    all.sort_by(rank_order);
    all
}

/// Standard ranking: the `k` highest-scored candidates per user.
pub fn top_k(s: &ScoreGraph, k: usize) -> Result<RecommendationSet> {
    let lists = (0..s.n_users() as UserIdx)
        .into_par_iter()
        .map(|u| {
            let scores = s.user(u);
            if scores.len() < k {
                return Err(Error::TooFewCandidates {
                    user: u,
                    available: scores.len(),
                    k,
                });
            }
            Ok(ranked(scores, k))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecommendationSet {
        k,
        lists,
        procedure: Procedure::TopK,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    pub ell: usize,
    pub seed: u64,
}

/// Per-user RNG: the global seed selects the key, the dense user id the
/// stream, so samples do not depend on evaluation order.
fn user_rng(seed: u64, user: UserIdx) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(user as u64);
    rng
}

/// Samples `k` items uniformly without replacement from each user's
/// top-`ell` list (`ell` truncated to the user's candidate count). Output is
/// in rank order.
pub fn random_rerank(s: &ScoreGraph, p: RandomParams, k: usize) -> Result<RecommendationSet> {
    if p.ell < k {
        return Err(Error::Config(format!(
            "ell = {} must be at least k = {k}",
            p.ell
        )));
    }
    let lists = (0..s.n_users() as UserIdx)
        .into_par_iter()
        .map(|u| {
            let scores = s.user(u);
            if scores.len() < k {
                return Err(Error::TooFewCandidates {
                    user: u,
                    available: scores.len(),
                    k,
                });
            }
            let pool = ranked(scores, p.ell.min(scores.len()));
            let mut picks = rand::seq::index::sample(&mut user_rng(p.seed, u), pool.len(), k).into_vec();
            picks.sort_unstable();
            Ok(picks.into_iter().map(|j| pool[j]).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecommendationSet {
        k,
        lists,
        procedure: Procedure::Random {
            ell: p.ell,
            seed: p.seed,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyParams {
    /// Target number of new distinct recommended items.
    pub theta: usize,
    /// Minimum score an item needs to be introduced to a user.
    pub threshold: f64,
}

impl Default for GreedyParams {
    fn default() -> Self {
        GreedyParams {
            theta: 0,
            threshold: 3.5,
        }
    }
}

/// One replacement performed by [`greedy_rerank`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyMove {
    pub user: UserIdx,
    pub added: ItemIdx,
    pub removed: ItemIdx,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    pub set: RecommendationSet,
    /// Number of new distinct items actually introduced (`<= theta`).
    pub achieved: usize,
    pub moves: Vec<GreedyMove>,
}

/// Raises the number of distinct recommended items by up to `theta`.
///
/// Repeatedly takes the highest-scored `(user, item)` pair over items no one
/// is recommended yet with score `>= threshold` (ties: lower item, then lower
/// user). The item replaces the user's lowest-scored recommendation that at
/// least one other user also receives, so no item ever leaves the pool. A
/// user without such a recommendation is passed over. Stops after `theta`
/// introductions or when no pair is feasible.
pub fn greedy_rerank(
    s: &ScoreGraph,
    base: &RecommendationSet,
    p: GreedyParams,
) -> Result<GreedyOutcome> {
    if !(MIN_RATING..=MAX_RATING).contains(&p.threshold) {
        return Err(Error::Config(format!(
            "threshold {} outside [1, 5]",
            p.threshold
        )));
    }
    if s.n_users() != base.n_users() {
        return Err(Error::InvalidInput(format!(
            "score graph has {} users, recommendation set {}",
            s.n_users(),
            base.n_users()
        )));
    }

    let n_slots = (0..s.n_users() as UserIdx)
        .flat_map(|u| s.user(u).iter().map(|&(i, _)| i).chain(base.items(u)))
        .max()
        .map_or(0, |i| i as usize + 1);
    let mut counts = vec![0u32; n_slots];
    for (_, list) in base.lists() {
        for &(i, _) in list {
            counts[i as usize] += 1;
        }
    }

    let mut lists = base.lists.clone();
    let mut moves = Vec::new();

    if p.theta > 0 {
        // Pair feasibility only ever goes from true to false: items entering
        // the pool stay there, and a user's replaceable entries only shrink
        // because newly added items have count 1. One pass over the pairs in
        // selection order is therefore the same as repeated arg-max.
        let mut pairs: Vec<(f64, ItemIdx, UserIdx)> = (0..s.n_users() as UserIdx)
            .flat_map(|u| {
                let counts = &counts;
                s.user(u)
                    .iter()
                    .filter(move |&&(i, w)| w >= p.threshold && counts[i as usize] == 0)
                    .map(move |&(i, w)| (w, i, u))
            })
            .collect();
        pairs.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        for (w, item, u) in pairs {
            if moves.len() == p.theta {
                break;
            }
            if counts[item as usize] > 0 {
                continue;
            }
            let list = &mut lists[u as usize];
            // lowest score, ties by larger item id: the last shared entry in rank order
            let Some(slot) = list
                .iter()
                .rposition(|&(i, _)| counts[i as usize] >= 2)
            else {
                continue;
            };
            let removed = list[slot].0;
            counts[removed as usize] -= 1;
            counts[item as usize] = 1;
            list[slot] = (item, w);
            list.sort_by(rank_order);
            moves.push(GreedyMove {
                user: u,
                added: item,
                removed,
                score: w,
            });
        }
    }

    let achieved = moves.len();
    Ok(GreedyOutcome {
        set: RecommendationSet {
            k: base.k,
            lists,
            procedure: Procedure::Greedy {
                theta: p.theta,
                threshold: p.threshold,
                achieved,
            },
        },
        achieved,
        moves,
    })
}
