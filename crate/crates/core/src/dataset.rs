//! MovieLens `u.data` ingestion and per-user candidate sets.
//!
//! Raw user/item ids from the file are remapped to dense 0-based indices in
//! ascending raw-id order, so the same set of lines always yields the same
//! dataset regardless of line order. Everything downstream works on dense
//! ids; [`RatingsDataset::raw_user`] and [`RatingsDataset::raw_item`]
//! translate back for output.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense user index in `[0, n_users)`.
pub type UserIdx = u32;
/// Dense item index in `[0, n_items)`.
pub type ItemIdx = u32;

pub const MIN_RATING: f64 = 1.0;
pub const MAX_RATING: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: UserIdx,
    pub item: ItemIdx,
    pub value: f64,
}

/// Sparse user-item rating matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsDataset {
    raw_users: Vec<u32>,
    raw_items: Vec<u32>,
    user_index: HashMap<u32, UserIdx>,
    item_index: HashMap<u32, ItemIdx>,
    // sorted by (user, item)
    ratings: Vec<Rating>,
    user_offsets: Vec<usize>,
    // per item: (user, value) sorted by user
    by_item: Vec<Vec<(UserIdx, f64)>>,
}

impl RatingsDataset {
    /// Builds a dataset from `(raw_user, raw_item, stars)` triples.
    ///
    /// Triples are validated the same way as parsed lines; `line` numbers in
    /// errors are the 1-based position in the iterator.
    pub fn from_triples<I>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32, f64)>,
    {
        let mut seen: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for (pos, (user, item, value)) in triples.into_iter().enumerate() {
            let line = pos + 1;
            if !(MIN_RATING..=MAX_RATING).contains(&value) {
                return Err(Error::RatingRange { line, value: value as i64 });
            }
            if seen.insert((user, item), value).is_some() {
                return Err(Error::Duplicate { line, user, item });
            }
        }
        Ok(Self::build(seen))
    }

    fn build(entries: BTreeMap<(u32, u32), f64>) -> Self {
        let raw_users: Vec<u32> = entries
            .keys()
            .map(|&(u, _)| u)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let raw_items: Vec<u32> = entries
            .keys()
            .map(|&(_, i)| i)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let user_index: HashMap<u32, UserIdx> = raw_users
            .iter()
            .enumerate()
            .map(|(dense, &raw)| (raw, dense as UserIdx))
            .collect();
        let item_index: HashMap<u32, ItemIdx> = raw_items
            .iter()
            .enumerate()
            .map(|(dense, &raw)| (raw, dense as ItemIdx))
            .collect();

        // BTreeMap iteration is ordered by raw (user, item), and the dense
        // remap is monotone, so `ratings` comes out sorted by dense ids too.
        let ratings: Vec<Rating> = entries
            .iter()
            .map(|(&(u, i), &value)| Rating {
                user: user_index[&u],
                item: item_index[&i],
                value,
            })
            .collect();

        let mut user_offsets = vec![0usize; raw_users.len() + 1];
        for r in &ratings {
            user_offsets[r.user as usize + 1] += 1;
        }
        for u in 0..raw_users.len() {
            user_offsets[u + 1] += user_offsets[u];
        }

        let mut by_item = vec![Vec::new(); raw_items.len()];
        for r in &ratings {
            by_item[r.item as usize].push((r.user, r.value));
        }

        RatingsDataset {
            raw_users,
            raw_items,
            user_index,
            item_index,
            ratings,
            user_offsets,
            by_item,
        }
    }

    /// Reads a ratings file from disk.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        parse_ratings(BufReader::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn n_users(&self) -> usize {
        self.raw_users.len()
    }

    pub fn n_items(&self) -> usize {
        self.raw_items.len()
    }

    /// All ratings, sorted by `(user, item)`.
    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    /// Ratings of one user, sorted by item.
    pub fn user_ratings(&self, user: UserIdx) -> &[Rating] {
        let u = user as usize;
        &self.ratings[self.user_offsets[u]..self.user_offsets[u + 1]]
    }

    /// `(user, stars)` pairs for one item, sorted by user.
    pub fn item_ratings(&self, item: ItemIdx) -> &[(UserIdx, f64)] {
        &self.by_item[item as usize]
    }

    pub fn user_mean(&self, user: UserIdx) -> f64 {
        let rs = self.user_ratings(user);
        rs.iter().map(|r| r.value).sum::<f64>() / rs.len() as f64
    }

    pub fn global_mean(&self) -> f64 {
        self.ratings.iter().map(|r| r.value).sum::<f64>() / self.ratings.len() as f64
    }

    pub fn raw_user(&self, user: UserIdx) -> u32 {
        self.raw_users[user as usize]
    }

    pub fn raw_item(&self, item: ItemIdx) -> u32 {
        self.raw_items[item as usize]
    }

    pub fn user_idx(&self, raw: u32) -> Option<UserIdx> {
        self.user_index.get(&raw).copied()
    }

    pub fn item_idx(&self, raw: u32) -> Option<ItemIdx> {
        self.item_index.get(&raw).copied()
    }

    /// Writes the dataset back in `user\titem\trating\ttimestamp` form.
    /// Timestamps are not retained and are written as `0`.
    pub fn write_lines<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.ratings {
            writeln!(
                out,
                "{}\t{}\t{}\t0",
                self.raw_user(r.user),
                self.raw_item(r.item),
                r.value as i64
            )?;
        }
        Ok(())
    }
}

/// Parses MovieLens 100K `u.data` lines: `user item rating timestamp`,
/// separated by a tab or a single space. Blank lines are skipped.
pub fn parse_ratings<R: BufRead>(source: R) -> Result<RatingsDataset> {
    let mut entries: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for (pos, line) in source.lines().enumerate() {
        let line_no = pos + 1;
        let line = line.map_err(|e| Error::io("<ratings stream>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(['\t', ' ']).collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let number = |idx: usize, name: &str| -> Result<i64> {
            fields[idx].parse::<i64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{name} {:?} is not an integer", fields[idx]),
            })
        };
        let user = number(0, "user")?;
        let item = number(1, "item")?;
        let rating = number(2, "rating")?;
        number(3, "timestamp")?;

        let id = |v: i64, name: &str| -> Result<u32> {
            u32::try_from(v).map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{name} id {v} out of range"),
            })
        };
        let (user, item) = (id(user, "user")?, id(item, "item")?);
        if !(1..=5).contains(&rating) {
            return Err(Error::RatingRange { line: line_no, value: rating });
        }
        if entries.insert((user, item), rating as f64).is_some() {
            return Err(Error::Duplicate { line: line_no, user, item });
        }
    }
    Ok(RatingsDataset::build(entries))
}

/// For each user, the items they have not rated, ascending by item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSets {
    per_user: Vec<Vec<ItemIdx>>,
}

impl CandidateSets {
    pub fn user(&self, user: UserIdx) -> &[ItemIdx] {
        &self.per_user[user as usize]
    }

    pub fn contains(&self, user: UserIdx, item: ItemIdx) -> bool {
        self.user(user).binary_search(&item).is_ok()
    }

    pub fn n_users(&self) -> usize {
        self.per_user.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserIdx, &[ItemIdx])> {
        self.per_user
            .iter()
            .enumerate()
            .map(|(u, items)| (u as UserIdx, items.as_slice()))
    }
}

/// Complement of each user's rated items within the catalog. Fails if any
/// user is left with fewer than `k` candidates.
pub fn candidate_sets(d: &RatingsDataset, k: usize) -> Result<CandidateSets> {
    let n_items = d.n_items() as ItemIdx;
    let mut per_user = Vec::with_capacity(d.n_users());
    for u in 0..d.n_users() as UserIdx {
        let mut rated = d.user_ratings(u).iter().map(|r| r.item).peekable();
        let mut cands = Vec::with_capacity(d.n_items() - d.user_ratings(u).len());
        for i in 0..n_items {
            if rated.peek() == Some(&i) {
                rated.next();
            } else {
                cands.push(i);
            }
        }
        if cands.len() < k {
            return Err(Error::TooFewCandidates {
                user: d.raw_user(u),
                available: cands.len(),
                k,
            });
        }
        per_user.push(cands);
    }
    Ok(CandidateSets { per_user })
}
