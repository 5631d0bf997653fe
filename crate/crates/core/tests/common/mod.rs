#![allow(dead_code)]

use std::path::PathBuf;

use fairrec::predictors::ScoreGraph;

/// Location of MovieLens 100K `u.data`: `$FAIRREC_DATA`, else
/// `<workspace>/data/ml-100k/u.data`.
pub fn movielens_path() -> PathBuf {
    if let Ok(p) = std::env::var("FAIRREC_DATA") {
        return PathBuf::from(p);
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k/u.data");
    assert!(
        p.exists(),
        "MovieLens 100K not found at {}; run scripts/fetch-ml100k.sh or set FAIRREC_DATA",
        p.display()
    );
    p
}

/// Greedy move as seen by the oracle: (user, added, removed).
pub type OracleMove = (u32, u32, u32);

/// Literal re-statement of the greedy selection rule, recomputing all state
/// from scratch at every step.
pub fn greedy_oracle(
    s: &ScoreGraph,
    base: &[Vec<(u32, f64)>],
    theta: usize,
    threshold: f64,
) -> (Vec<Vec<u32>>, Vec<OracleMove>) {
    let mut lists: Vec<Vec<(u32, f64)>> = base.to_vec();
    let mut moves = Vec::new();
    while moves.len() < theta {
        let count = |lists: &Vec<Vec<(u32, f64)>>, item: u32| {
            lists.iter().flatten().filter(|&&(i, _)| i == item).count()
        };
        let mut best: Option<(f64, u32, u32)> = None;
        for u in 0..s.n_users() as u32 {
            let has_victim = lists[u as usize].iter().any(|&(i, _)| count(&lists, i) >= 2);
            if !has_victim {
                continue;
            }
            for &(i, w) in s.user(u) {
                if w < threshold || count(&lists, i) > 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bw, bi, bu)) => {
                        w > bw || (w == bw && (i < bi || (i == bi && u < bu)))
                    }
                };
                if better {
                    best = Some((w, i, u));
                }
            }
        }
        let Some((w, i, u)) = best else { break };
        let victim_pos = lists[u as usize]
            .iter()
            .enumerate()
            .filter(|&(_, &(j, _))| count(&lists, j) >= 2)
            .min_by(|a, b| {
                // lowest score; among equal scores the larger item id
                a.1 .1.total_cmp(&b.1 .1).then(b.1 .0.cmp(&a.1 .0))
            })
            .map(|(pos, _)| pos)
            .unwrap();
        let removed = lists[u as usize][victim_pos].0;
        lists[u as usize][victim_pos] = (i, w);
        moves.push((u, i, removed));
    }
    let sets = lists
        .into_iter()
        .map(|l| {
            let mut items: Vec<u32> = l.into_iter().map(|(i, _)| i).collect();
            items.sort_unstable();
            items
        })
        .collect();
    (sets, moves)
}

/// Literal `Σ_{a,b} |x_a − x_b| / (2 n Σ x)` over ordered pairs.
pub fn gini_double_sum(x: &[f64]) -> f64 {
    let total: f64 = x.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for a in x {
        for b in x {
            acc += (a - b).abs();
        }
    }
    acc / (2.0 * x.len() as f64 * total)
}
