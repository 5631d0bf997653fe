use rayon::prelude::*;

use super::{clamp_score, ScoreGraph};
use crate::dataset::{CandidateSets, ItemIdx, RatingsDataset, UserIdx};
use crate::error::{Error, Result};

/// User-based neighborhood model parameters.
///
/// Similarity is the cosine between mean-centered rating vectors (unrated
/// entries count as zero). A pair of users is only considered neighbors if
/// they co-rated at least `min_overlap` items.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnParams {
    pub n_neighbors: usize,
    pub min_overlap: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            n_neighbors: 40,
            min_overlap: 1,
        }
    }
}

/// Pairwise similarity matrix, row-major `n_users x n_users`. Entries for
/// pairs below the overlap requirement are `None`.
struct Similarities {
    n: usize,
    values: Vec<Option<f64>>,
}

impl Similarities {
    fn compute(d: &RatingsDataset, means: &[f64], min_overlap: usize) -> Self {
        let n = d.n_users();
        let norms: Vec<f64> = (0..n as UserIdx)
            .map(|u| {
                d.user_ratings(u)
                    .iter()
                    .map(|r| (r.value - means[u as usize]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();

        let mut values = vec![None; n * n];
        values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(u, row)| {
                let mut dot = vec![0.0f64; n];
                let mut overlap = vec![0usize; n];
                for r in d.user_ratings(u as UserIdx) {
                    let cu = r.value - means[u];
                    for &(v, rv) in d.item_ratings(r.item) {
                        dot[v as usize] += cu * (rv - means[v as usize]);
                        overlap[v as usize] += 1;
                    }
                }
                for v in 0..n {
                    if v == u || overlap[v] == 0 || overlap[v] < min_overlap {
                        continue;
                    }
                    let denom = norms[u] * norms[v];
                    if denom > 0.0 {
                        row[v] = Some(dot[v] / denom);
                    }
                }
            });
        Similarities { n, values }
    }

    fn get(&self, u: usize, v: usize) -> Option<f64> {
        self.values[u * self.n + v]
    }
}

/// Scores every candidate item of every user with mean-centered user-based
/// KNN. Among the users who rated item `i` and qualify as neighbors of `u`,
/// the `n_neighbors` most similar (ties by ascending user id) contribute
/// `sim * (r_vi - mean_v)`, normalized by the sum of `|sim|`. Items with no
/// usable neighbor fall back to the user's mean. Results are clamped to
/// `[1, 5]`.
pub fn predict_knn(d: &RatingsDataset, c: &CandidateSets, p: &KnnParams) -> Result<ScoreGraph> {
    if p.n_neighbors == 0 {
        return Err(Error::Config("n_neighbors must be at least 1".into()));
    }
    if c.n_users() != d.n_users() {
        return Err(Error::InvalidInput(
            "candidate sets do not match dataset".into(),
        ));
    }
    let means: Vec<f64> = (0..d.n_users() as UserIdx).map(|u| d.user_mean(u)).collect();
    let sims = Similarities::compute(d, &means, p.min_overlap);

    let per_user: Vec<Vec<(ItemIdx, f64)>> = (0..d.n_users())
        .into_par_iter()
        .map(|u| {
            let mut neighbors: Vec<(f64, UserIdx, f64)> = Vec::new();
            c.user(u as UserIdx)
                .iter()
                .map(|&item| {
                    neighbors.clear();
                    neighbors.extend(d.item_ratings(item).iter().filter_map(|&(v, rv)| {
                        sims.get(u, v as usize).map(|s| (s, v, rv))
                    }));
                    let by_rank = |a: &(f64, UserIdx, f64), b: &(f64, UserIdx, f64)| {
                        b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
                    };
                    if neighbors.len() > p.n_neighbors {
                        neighbors.select_nth_unstable_by(p.n_neighbors - 1, by_rank);
                        neighbors.truncate(p.n_neighbors);
                    }
                    // fixed summation order
                    neighbors.sort_unstable_by(by_rank);
                    let (mut num, mut den) = (0.0, 0.0);
                    for &(s, v, rv) in neighbors.iter() {
                        num += s * (rv - means[v as usize]);
                        den += s.abs();
                    }
                    let raw = if den > 0.0 {
                        means[u] + num / den
                    } else {
                        means[u]
                    };
                    (item, clamp_score(raw))
                })
                .collect()
        })
        .collect();

    ScoreGraph::new(
        format!("knn(n_neighbors={},min_overlap={})", p.n_neighbors, p.min_overlap),
        per_user,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::candidate_sets;

    fn fit(triples: &[(u32, u32, f64)], p: &KnnParams) -> (RatingsDataset, ScoreGraph) {
        let d = RatingsDataset::from_triples(triples.iter().copied()).unwrap();
        let c = candidate_sets(&d, 0).unwrap();
        let g = predict_knn(&d, &c, p).unwrap();
        g.check_covers(&c).unwrap();
        (d, g)
    }

    #[test]
    fn identical_neighbor_copies_deviation() {
        // u and v agree on items 1..=3; only v rated item 4
        let (d, g) = fit(
            &[
                (1, 1, 5.0),
                (1, 2, 3.0),
                (1, 3, 1.0),
                (2, 1, 5.0),
                (2, 2, 3.0),
                (2, 3, 1.0),
                (2, 4, 5.0),
            ],
            &KnnParams::default(),
        );
        let u = d.user_idx(1).unwrap();
        let item = d.item_idx(4).unwrap();
        // mean_u = 3, mean_v = 3.5: 3 + (5 - 3.5) = 4.5
        assert!((g.score(u, item).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn perfect_neighbor_with_equal_means_gives_five() {
        // v's rating of 5 on item 4 is offset by a 1 on item 5 so means match
        let (d, g) = fit(
            &[
                (1, 1, 5.0),
                (1, 2, 1.0),
                (1, 3, 3.0),
                (2, 1, 5.0),
                (2, 2, 1.0),
                (2, 4, 5.0),
                (2, 5, 1.0),
            ],
            &KnnParams::default(),
        );
        let u = d.user_idx(1).unwrap();
        assert!((d.user_mean(0) - d.user_mean(1)).abs() < 1e-12);
        assert_eq!(g.score(u, d.item_idx(4).unwrap()), Some(5.0));
    }

    #[test]
    fn zero_deviation_predicts_mean() {
        let (d, g) = fit(
            &[
                (1, 1, 4.0),
                (1, 2, 3.0),
                (1, 3, 5.0),
                (2, 1, 5.0),
                (2, 2, 3.0),
                (2, 3, 4.0),
                (2, 4, 4.0),
                (3, 1, 3.0),
                (3, 2, 4.0),
                (3, 3, 5.0),
                (3, 4, 4.0),
            ],
            &KnnParams::default(),
        );
        for u in 0..3 {
            assert!((d.user_mean(u) - 4.0).abs() < 1e-12);
        }
        assert!((g.score(0, d.item_idx(4).unwrap()).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn three_user_hand_instance() {
        // u {a:5, b:1}, v {a:4, b:2, c:5}, w {a:1, b:5, c:1}
        let (d, g) = fit(
            &[
                (1, 1, 5.0),
                (1, 2, 1.0),
                (2, 1, 4.0),
                (2, 2, 2.0),
                (2, 3, 5.0),
                (3, 1, 1.0),
                (3, 2, 5.0),
                (3, 3, 1.0),
            ],
            &KnnParams::default(),
        );
        // Hand evaluation. Centered vectors:
        //   u = (2, -2, 0), mean 3
        //   v = (1/3, -5/3, 4/3), mean 11/3
        //   w = (-4/3, 8/3, -4/3), mean 7/3
        let norm_u = 8f64.sqrt();
        let norm_v = (42f64 / 9.0).sqrt();
        let norm_w = (96f64 / 9.0).sqrt();
        let sim_uv = (2.0 / 3.0 + 10.0 / 3.0) / (norm_u * norm_v);
        let sim_uw = (-8.0 / 3.0 - 16.0 / 3.0) / (norm_u * norm_w);
        let expected = 3.0
            + (sim_uv * (5.0 - 11.0 / 3.0) + sim_uw * (1.0 - 7.0 / 3.0))
                / (sim_uv.abs() + sim_uw.abs());
        let got = g.score(0, d.item_idx(3).unwrap()).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        // locked regression value
        assert!((got - 4.333_333_333_333_333).abs() < 1e-9, "{got}");
    }

    #[test]
    fn single_neighbor_picks_most_similar() {
        let p = KnnParams {
            n_neighbors: 1,
            min_overlap: 1,
        };
        let (d, g) = fit(
            &[
                (1, 1, 5.0),
                (1, 2, 1.0),
                (2, 1, 4.0),
                (2, 2, 2.0),
                (2, 3, 5.0),
                (3, 1, 1.0),
                (3, 2, 5.0),
                (3, 3, 1.0),
            ],
            &p,
        );
        // only v (positive similarity) is used: 3 + (5 - 11/3)
        let got = g.score(0, d.item_idx(3).unwrap()).unwrap();
        assert!((got - (3.0 + 4.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn cold_item_falls_back_to_user_mean() {
        // item 3 is only rated by user 2, who shares nothing with user 1
        let (d, g) = fit(
            &[(1, 1, 2.0), (1, 2, 3.0), (2, 3, 5.0), (2, 4, 1.0)],
            &KnnParams::default(),
        );
        assert_eq!(g.score(0, d.item_idx(3).unwrap()), Some(2.5));
    }

    #[test]
    fn min_overlap_excludes_thin_neighbors() {
        let p = KnnParams {
            n_neighbors: 40,
            min_overlap: 3,
        };
        let (d, g) = fit(
            &[(1, 1, 5.0), (1, 2, 1.0), (2, 1, 5.0), (2, 2, 1.0), (2, 3, 5.0)],
            &p,
        );
        assert_eq!(g.score(0, d.item_idx(3).unwrap()), Some(3.0));
    }

    #[test]
    fn zero_neighbors_is_config_error() {
        let d = RatingsDataset::from_triples([(1, 1, 5.0)]).unwrap();
        let c = candidate_sets(&d, 0).unwrap();
        let p = KnnParams {
            n_neighbors: 0,
            min_overlap: 1,
        };
        assert!(matches!(predict_knn(&d, &c, &p), Err(Error::Config(_))));
    }
}
