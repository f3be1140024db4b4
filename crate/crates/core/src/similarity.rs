//! Jaccard similarity between users' POI sets.
//!
//! Scores are kept as exact `(shared, union)` pairs; division happens only
//! when rendering.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// An exact Jaccard ratio. Two empty sets score 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Jaccard {
    pub shared: usize,
    pub union: usize,
}

impl Jaccard {
    pub fn of<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Self {
        let shared = a.intersection(b).count();
        Jaccard {
            shared,
            union: a.len() + b.len() - shared,
        }
    }

    pub fn score(&self) -> f64 {
        if self.union == 0 {
            0.0
        } else {
            self.shared as f64 / self.union as f64
        }
    }

    /// Score truncated (never rounded up) to `decimals` places.
    pub fn truncated(&self, decimals: u32) -> String {
        let scale = 10u128.pow(decimals);
        let scaled = if self.union == 0 {
            0
        } else {
            self.shared as u128 * scale / self.union as u128
        };
        if decimals == 0 {
            return scaled.to_string();
        }
        format!(
            "{}.{:0width$}",
            scaled / scale,
            scaled % scale,
            width = decimals as usize
        )
    }
}

impl Ord for Jaccard {
    fn cmp(&self, other: &Self) -> Ordering {
        // a/b vs c/d  <=>  a*d vs c*b, with 0/0 treated as 0/1.
        let (a, b) = (self.shared as u128, self.union.max(1) as u128);
        let (c, d) = (other.shared as u128, other.union.max(1) as u128);
        (a * d).cmp(&(c * b))
    }
}

impl PartialOrd for Jaccard {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Jaccard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.shared, self.union)
    }
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    Jaccard::of(a, b).score()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityRecord {
    pub user_a: String,
    pub user_b: String,
    pub similarity: Jaccard,
}

impl SimilarityRecord {
    pub fn score(&self) -> f64 {
        self.similarity.score()
    }
}

/// Every unordered user pair, most similar first; ties by `(user_a, user_b)`.
pub fn rank_pairs(sets: &BTreeMap<String, BTreeSet<usize>>) -> Result<Vec<SimilarityRecord>> {
    if sets.len() < 2 {
        return Err(Error::TooFewUsers(sets.len()));
    }
    let users: Vec<(&String, &BTreeSet<usize>)> = sets.iter().collect();
    let mut out = Vec::with_capacity(users.len() * (users.len() - 1) / 2);
    for (i, (ua, a)) in users.iter().enumerate() {
        for (ub, b) in &users[i + 1..] {
            out.push(SimilarityRecord {
                user_a: (*ua).clone(),
                user_b: (*ub).clone(),
                similarity: Jaccard::of(a, b),
            });
        }
    }
    out.sort_by(|x, y| {
        y.similarity
            .cmp(&x.similarity)
            .then_with(|| (&x.user_a, &x.user_b).cmp(&(&y.user_a, &y.user_b)))
    });
    Ok(out)
}
