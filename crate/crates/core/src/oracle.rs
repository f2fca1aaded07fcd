//! Exhaustive ground truth for small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{topk_plus, SparseVec};
use crate::error::{Error, Result};
use crate::graph::{modularity_of_labels, Graph, Partition};

/// Largest graph the exhaustive search accepts by default.
pub const DEFAULT_MAX_N: usize = 12;

/// Iterates over all set partitions of `0..n` as restricted growth
/// strings: `a[0] = 0` and `a[i] ≤ 1 + max(a[..i])`.
#[derive(Debug, Clone)]
pub struct SetPartitions {
    labels: Vec<usize>,
    /// `prefix_max[i] = max(labels[..=i])`.
    prefix_max: Vec<usize>,
    started: bool,
    done: bool,
}

impl SetPartitions {
    pub fn new(n: usize) -> SetPartitions {
        SetPartitions {
            labels: vec![0; n],
            prefix_max: vec![0; n],
            started: false,
            done: false,
        }
    }

    /// Advances in place and returns the next string, or `None` when
    /// exhausted. Avoids the allocation of the `Iterator` impl.
    pub fn advance(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.labels);
        }
        let n = self.labels.len();
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.labels[i] <= self.prefix_max[i - 1] {
                self.labels[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.labels[i]);
                for j in i + 1..n {
                    self.labels[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return Some(&self.labels);
            }
        }
        self.done = true;
        None
    }
}

impl Iterator for SetPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        self.advance().map(<[usize]>::to_vec)
    }
}

/// Exact maximum modularity over every set partition. Ties keep the first
/// partition in enumeration order.
pub fn brute_force_max_modularity(g: &Graph, max_n: usize) -> Result<(f64, Partition)> {
    let n = g.n();
    if n > max_n {
        return Err(Error::TooLarge { n, cap: max_n });
    }
    if g.two_m() <= 0.0 {
        return Err(Error::Domain(
            "modularity is undefined for a graph without edges".into(),
        ));
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_labels = vec![0; n];
    let mut parts = SetPartitions::new(n);
    while let Some(labels) = parts.advance() {
        let count = labels.iter().max().map_or(0, |&m| m + 1);
        let q = modularity_of_labels(g, labels, count);
        if q > best {
            best = q;
            best_labels.copy_from_slice(labels);
        }
    }
    Ok((best, Partition::new(best_labels)))
}

const SUBPROBLEM_TOLERANCE: f64 = 1e-9;

fn value(q: &[f64], v: &SparseVec) -> f64 {
    v.entries()
        .iter()
        .map(|&(t, x)| q.get(t).copied().unwrap_or(0.0) * x)
        .sum()
}

/// Checks that `claimed` maximizes `qᵀv` over nonnegative unit vectors with
/// at most `k` nonzeros, by comparison against every basis vector, every
/// support of size ≤ k when `q` has at most 12 coordinates, and `samples`
/// random feasible vectors drawn from `seed`.
pub fn verify_subproblem_optimum(
    q: &[f64],
    k: usize,
    claimed: &SparseVec,
    samples: usize,
    seed: u64,
) -> bool {
    if !claimed.is_feasible(k, 1e-9) || claimed.entries().iter().any(|&(t, _)| t >= q.len()) {
        return false;
    }
    let r = q.len();
    let mine = value(q, claimed);
    let beats = |other: f64| mine >= other - SUBPROBLEM_TOLERANCE;

    if !q.iter().all(|&x| beats(x)) {
        return false;
    }

    if r <= 12 {
        for mask in 1u32..(1 << r) {
            if mask.count_ones() as usize > k {
                continue;
            }
            let restricted: Vec<f64> = (0..r)
                .map(|t| if mask >> t & 1 == 1 { q[t] } else { 0.0 })
                .collect();
            let u = topk_plus(&restricted, k);
            if !u.is_empty() && !beats(value(q, &u.normalized())) {
                return false;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let size = rng.gen_range(1..=k.min(r));
        let support = rand::seq::index::sample(&mut rng, r, size);
        let pairs: Vec<(usize, f64)> = support
            .iter()
            .map(|t| (t, rng.gen_range(1e-6..1.0)))
            .collect();
        let u = SparseVec::from_pairs(pairs).unwrap().normalized();
        if !beats(value(q, &u)) {
            return false;
        }
    }
    true
}
