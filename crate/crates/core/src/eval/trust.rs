use std::cmp::Ordering;

use rand::seq::index::sample;

use super::sq_dist;
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, Matrix};
use crate::par::Exec;

/// Original-space ranks and k-nearest-neighbour sets in both spaces.
///
/// Neighbours are ordered by ascending Euclidean distance with ties broken
/// by ascending sample index; a sample is never its own neighbour.
#[derive(Clone, Debug)]
pub struct NeighborRanks {
    m: usize,
    k: usize,
    /// `ranks[i * m + j]`: 1-based rank of `j` among `i`'s original-space
    /// neighbours, 0 on the diagonal.
    ranks: Vec<u32>,
    knn_original: Vec<Vec<usize>>,
    knn_embedded: Vec<Vec<usize>>,
}

fn by_distance(d: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b))
}

impl NeighborRanks {
    pub fn new(x: &Matrix, e: &Matrix, k: usize, exec: Exec) -> Result<Self> {
        let m = x.rows();
        if e.rows() != m {
            return Err(Error::shape("trustworthiness", x.shape(), e.shape()));
        }
        if m < 3 {
            return Err(Error::Config(format!(
                "trustworthiness needs at least 3 samples, got {m}"
            )));
        }
        if k == 0 || 2 * k >= m {
            return Err(Error::Config(format!(
                "trustworthiness k = {k} must satisfy 1 <= k < m/2 (m = {m})"
            )));
        }
        let rows = exec.map_range(m, |i| {
            let others: Vec<usize> = (0..m).filter(|&j| j != i).collect();

            let dx: Vec<f64> = (0..m).map(|j| sq_dist(x.row(i), x.row(j))).collect();
            let mut ordered = others.clone();
            ordered.sort_unstable_by(by_distance(&dx));
            let mut rank_row = vec![0u32; m];
            for (r, &j) in ordered.iter().enumerate() {
                rank_row[j] = r as u32 + 1;
            }
            let knn_x = ordered[..k].to_vec();

            let de: Vec<f64> = (0..m).map(|j| sq_dist(e.row(i), e.row(j))).collect();
            let mut cand = others;
            let cmp = by_distance(&de);
            cand.select_nth_unstable_by(k - 1, &cmp);
            let mut knn_e = cand[..k].to_vec();
            knn_e.sort_unstable_by(&cmp);
            (rank_row, knn_x, knn_e)
        });
        let mut ranks = Vec::with_capacity(m * m);
        let mut knn_original = Vec::with_capacity(m);
        let mut knn_embedded = Vec::with_capacity(m);
        for (r, kx, ke) in rows {
            ranks.extend(r);
            knn_original.push(kx);
            knn_embedded.push(ke);
        }
        Ok(NeighborRanks {
            m,
            k,
            ranks,
            knn_original,
            knn_embedded,
        })
    }

    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.m + j]
    }

    pub fn knn_original(&self, i: usize) -> &[usize] {
        &self.knn_original[i]
    }

    pub fn knn_embedded(&self, i: usize) -> &[usize] {
        &self.knn_embedded[i]
    }

    /// `1 - 2/(m k (2m - 3k - 1)) · Σ_i Σ_{j in U_k(i)} (r(i,j) - k)` where
    /// `U_k(i)` holds the embedded-space neighbours of `i` that are not
    /// among its original-space neighbours.
    pub fn trustworthiness(&self) -> f64 {
        let (m, k) = (self.m as u64, self.k as u64);
        // every intruder has original rank > k, so the sum is a
        // non-negative integer and accumulates exactly
        let penalty: u64 = (0..self.m)
            .map(|i| {
                self.knn_embedded[i]
                    .iter()
                    .map(|&j| u64::from(self.rank(i, j)))
                    .filter(|&r| r > k)
                    .map(|r| r - k)
                    .sum::<u64>()
            })
            .sum();
        let norm = (m * k * (2 * m - 3 * k - 1)) as f64;
        1.0 - 2.0 * penalty as f64 / norm
    }
}

pub fn trustworthiness(x: &Matrix, e: &Matrix, k: usize) -> Result<f64> {
    trustworthiness_with(x, e, k, Exec::default())
}

pub fn trustworthiness_with(x: &Matrix, e: &Matrix, k: usize, exec: Exec) -> Result<f64> {
    Ok(NeighborRanks::new(x, e, k, exec)?.trustworthiness())
}

/// Sorted seeded sample of `cap` indices out of `m`, or all of them when
/// `m <= cap`.
pub fn subsample_indices(m: usize, cap: usize, seed: u64) -> Vec<usize> {
    if m <= cap {
        return (0..m).collect();
    }
    let mut idx = sample(&mut seeded_rng(seed), m, cap).into_vec();
    idx.sort_unstable();
    idx
}
