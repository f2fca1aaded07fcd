//! Sparse nonnegative unit vectors over a growable community space.
//!
//! Coordinate `t` of the space plays the role of community `t`. A vector
//! with a single entry is an ordinary community assignment; up to `k`
//! entries let a node sit in several communities at once.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};

/// Entries whose magnitude falls below this after an accumulate are dropped.
pub const DROP_TOLERANCE: f64 = 1e-13;

/// Sparse vector stored as `(coordinate, value)` pairs with strictly
/// increasing coordinates. Embedding vectors additionally keep every value
/// positive and the 2-norm at one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn new() -> SparseVec {
        SparseVec::default()
    }

    /// Builds from unordered pairs; zeros are dropped, duplicates rejected.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Result<SparseVec> {
        pairs.retain(|&(_, v)| v != 0.0);
        pairs.sort_unstable_by_key(|&(t, _)| t);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(
                "duplicate coordinate in sparse vector".into(),
            ));
        }
        if pairs.iter().any(|&(_, v)| !v.is_finite()) {
            return Err(Error::Validation(
                "non-finite value in sparse vector".into(),
            ));
        }
        Ok(SparseVec { entries: pairs })
    }

    pub fn from_dense(values: &[f64]) -> SparseVec {
        SparseVec {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(t, &v)| (t, v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, t: usize) -> f64 {
        self.entries
            .binary_search_by_key(&t, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, r: usize) -> Vec<f64> {
        let mut out = vec![0.0; r];
        for &(t, v) in &self.entries {
            out[t] = v;
        }
        out
    }

    pub fn normalized(&self) -> SparseVec {
        let norm = self.norm();
        SparseVec {
            entries: self.entries.iter().map(|&(t, v)| (t, v / norm)).collect(),
        }
    }

    /// `self ← self + scale · v`, dropping entries that cancel to below
    /// [`DROP_TOLERANCE`].
    pub fn axpy(&mut self, scale: f64, v: &SparseVec) {
        let mut merged = Vec::with_capacity(self.entries.len() + v.entries.len());
        let (mut a, mut b) = (0, 0);
        let (x, y) = (&self.entries, &v.entries);
        while a < x.len() || b < y.len() {
            let (t, val) = match (x.get(a), y.get(b)) {
                (Some(&(ta, va)), Some(&(tb, vb))) => match ta.cmp(&tb) {
                    Ordering::Less => {
                        a += 1;
                        (ta, va)
                    }
                    Ordering::Greater => {
                        b += 1;
                        (tb, scale * vb)
                    }
                    Ordering::Equal => {
                        a += 1;
                        b += 1;
                        (ta, va + scale * vb)
                    }
                },
                (Some(&(ta, va)), None) => {
                    a += 1;
                    (ta, va)
                }
                (None, Some(&(tb, vb))) => {
                    b += 1;
                    (tb, scale * vb)
                }
                (None, None) => unreachable!(),
            };
            if val.abs() >= DROP_TOLERANCE {
                merged.push((t, val));
            }
        }
        self.entries = merged;
    }

    /// Checks the embedding constraints: positive entries, unit norm (to
    /// `tol`), at most `k` entries.
    pub fn is_feasible(&self, k: usize, tol: f64) -> bool {
        !self.entries.is_empty()
            && self.entries.len() <= k
            && self.entries.iter().all(|&(_, v)| v > 0.0)
            && self.entries.windows(2).all(|w| w[0].0 < w[1].0)
            && (self.norm() - 1.0).abs() <= tol
    }
}

/// Orders candidates for top-k selection: larger value first, then lower
/// coordinate.
#[inline]
pub(crate) fn rank_desc(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Keeps the `k` largest strictly positive entries of `candidates` in place
/// (ties to the lower coordinate) and sorts the survivors by coordinate.
/// Uses partial selection, so the cost is linear in the number of
/// candidates plus `k log k`.
pub(crate) fn select_topk_plus(candidates: &mut Vec<(usize, f64)>, k: usize) {
    candidates.retain(|&(_, v)| v > 0.0);
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, rank_desc);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by_key(|&(t, _)| t);
}

/// The top-k⁺ operator on a dense vector: keeps the `k` largest strictly
/// positive coordinates and zeroes everything else. The result is not
/// normalized.
pub fn topk_plus(q: &[f64], k: usize) -> SparseVec {
    assert!(k >= 1, "top-k requires k >= 1");
    let mut candidates: Vec<(usize, f64)> = q.iter().copied().enumerate().collect();
    select_topk_plus(&mut candidates, k);
    SparseVec {
        entries: candidates,
    }
}

/// Same operator on a sparse input; absent coordinates count as zero.
pub fn topk_plus_sparse(q: &SparseVec, k: usize) -> SparseVec {
    assert!(k >= 1, "top-k requires k >= 1");
    let mut candidates = q.entries.clone();
    select_topk_plus(&mut candidates, k);
    SparseVec {
        entries: candidates,
    }
}

/// Standard basis vector `e(t)` in a space of dimension `r`.
pub fn basis(t: usize, r: usize) -> Result<SparseVec> {
    if t >= r {
        return Err(Error::Domain(format!("coordinate {t} out of range 0..{r}")));
    }
    Ok(SparseVec {
        entries: vec![(t, 1.0)],
    })
}

/// Inner product by sorted merge over the two supports.
pub fn dot(u: &SparseVec, v: &SparseVec) -> f64 {
    let (x, y) = (&u.entries, &v.entries);
    let (mut a, mut b) = (0, 0);
    let mut sum = 0.0;
    while a < x.len() && b < y.len() {
        match x[a].0.cmp(&y[b].0) {
            Ordering::Less => a += 1,
            Ordering::Greater => b += 1,
            Ordering::Equal => {
                sum += x[a].1 * y[b].1;
                a += 1;
                b += 1;
            }
        }
    }
    sum
}

/// Per-node embedding vectors with the degree-weighted sum
/// `z = Σ_j d_j v_j`, per-coordinate occupancy counts, and a LIFO list of
/// vacated coordinates.
#[derive(Debug, Clone)]
pub struct Embedding {
    vectors: Vec<SparseVec>,
    z: Vec<f64>,
    occupancy: Vec<u32>,
    free: Vec<usize>,
    max_dim: usize,
    /// Recycled buffer for [`Embedding::assign`].
    spare: Vec<(usize, f64)>,
}

impl Embedding {
    /// `v_i = e(c_i)` for the communities of `p`. The space starts with
    /// `max(n, community_count)` coordinates; unused ones are free.
    /// `k` fixes the dimension bound `n·k`.
    pub fn from_partition(g: &Graph, p: &Partition, k: usize) -> Embedding {
        assert_eq!(p.len(), g.n(), "partition does not match graph");
        let n = g.n();
        let r = n.max(p.community_count());
        // Full-size buffers up front, so ascent never reallocates them.
        let capacity = k.clamp(1, 32);
        let vectors = (0..n)
            .map(|i| {
                let mut entries = Vec::with_capacity(capacity);
                entries.push((p.community_of(i), 1.0));
                SparseVec { entries }
            })
            .collect();
        Self::assemble(g, vectors, r, k)
    }

    pub fn singletons(g: &Graph, k: usize) -> Embedding {
        Self::from_partition(g, &Partition::singletons(g.n()), k)
    }

    /// Wraps caller-supplied vectors. Each must be nonnegative with unit
    /// norm; cardinality is not limited here so higher-cardinality
    /// embeddings can be handed to rounding.
    pub fn from_vectors(g: &Graph, vectors: Vec<SparseVec>) -> Result<Embedding> {
        if vectors.len() != g.n() {
            return Err(Error::Validation(format!(
                "{} vectors for a graph with {} nodes",
                vectors.len(),
                g.n()
            )));
        }
        let mut k = 1;
        let mut r = g.n();
        for (i, v) in vectors.iter().enumerate() {
            if !v.is_feasible(usize::MAX, 1e-9) {
                return Err(Error::Validation(format!(
                    "vector of node {i} is not a nonnegative unit vector"
                )));
            }
            k = k.max(v.len());
            r = r.max(v.entries.last().map_or(0, |e| e.0 + 1));
        }
        Ok(Self::assemble(g, vectors, r, k))
    }

    fn assemble(g: &Graph, vectors: Vec<SparseVec>, r: usize, k: usize) -> Embedding {
        let mut e = Embedding {
            vectors,
            z: vec![0.0; r],
            occupancy: vec![0; r],
            free: Vec::new(),
            spare: Vec::new(),
            max_dim: g.n().saturating_mul(k.max(1)).max(r),
        };
        for v in &e.vectors {
            for &(t, _) in &v.entries {
                e.occupancy[t] += 1;
            }
        }
        // Reversed so the lowest vacant coordinate is handed out first.
        e.free = (0..r).rev().filter(|&t| e.occupancy[t] == 0).collect();
        e.refresh_z(g);
        e
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    /// Current dimension `r` of the community space.
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    #[inline]
    pub fn vector(&self, i: usize) -> &SparseVec {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[SparseVec] {
        &self.vectors
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    #[inline]
    pub fn z_at(&self, t: usize) -> f64 {
        self.z[t]
    }

    #[inline]
    pub fn occupancy(&self, t: usize) -> u32 {
        self.occupancy[t]
    }

    /// Largest cardinality over all vectors.
    pub fn max_cardinality(&self) -> usize {
        self.vectors.iter().map(SparseVec::len).max().unwrap_or(0)
    }

    /// Returns a coordinate nobody occupies, reusing vacated ones first and
    /// growing the space by one only when none is left.
    ///
    /// Panics if growth would exceed the `n·k` bound, which no valid
    /// sequence of updates can reach.
    pub fn allocate_free_coordinate(&mut self) -> usize {
        while let Some(t) = self.free.pop() {
            if self.occupancy[t] == 0 {
                // Keep the slot listed until someone actually moves in.
                self.free.push(t);
                return t;
            }
        }
        let t = self.z.len();
        assert!(
            t < self.max_dim,
            "community space would exceed its n·k bound of {}",
            self.max_dim
        );
        self.z.push(0.0);
        self.occupancy.push(0);
        self.free.push(t);
        t
    }

    /// Replaces `v_i`, keeping `z`, occupancy and the free list in sync.
    pub fn replace(&mut self, i: usize, degree: f64, new: SparseVec) {
        self.assign(i, degree, &new.entries);
    }

    /// Same as [`Embedding::replace`] but copies `new` (sorted by coordinate,
    /// valid) into the existing storage.
    pub(crate) fn assign(&mut self, i: usize, degree: f64, new: &[(usize, f64)]) {
        // Each node keeps its own buffer so vectors stay where they were
        // allocated; the old entries are copied aside instead.
        let mut old = std::mem::take(&mut self.spare);
        let current = &mut self.vectors[i].entries;
        old.extend_from_slice(current);
        for &(t, v) in &old {
            self.z[t] -= degree * v;
            self.occupancy[t] -= 1;
        }
        current.clear();
        current.extend_from_slice(new);
        for &(t, v) in new {
            self.z[t] += degree * v;
            self.occupancy[t] += 1;
        }
        // Pop the slot we may have just filled.
        if let Some(&top) = self.free.last() {
            if self.occupancy[top] > 0 {
                self.free.pop();
            }
        }
        for &(t, _) in &old {
            if self.occupancy[t] == 0 {
                self.z[t] = 0.0;
                self.free.push(t);
            } else if self.z[t].abs() < DROP_TOLERANCE {
                self.z[t] = 0.0;
            }
        }
        old.clear();
        self.spare = old;
    }

    /// Recomputes `z` from scratch in node order.
    pub fn refresh_z(&mut self, g: &Graph) {
        self.z.iter_mut().for_each(|z| *z = 0.0);
        for (i, v) in self.vectors.iter().enumerate() {
            let d = g.degree(i);
            for &(t, x) in &v.entries {
                self.z[t] += d * x;
            }
        }
    }

    /// Support coordinate of each vector, compacted. Only meaningful once
    /// every vector has cardinality one; otherwise the largest entry wins.
    pub fn to_partition(&self) -> Partition {
        Partition::new(
            self.vectors
                .iter()
                .map(|v| {
                    v.entries
                        .iter()
                        .copied()
                        .min_by(rank_desc)
                        .map(|(t, _)| t)
                        .expect("embedding vectors are never empty")
                })
                .collect(),
        )
    }

    /// Writes one `node_id idx:val idx:val ...` line per node, using the
    /// graph's original node ids.
    pub fn write<W: Write>(&self, g: &Graph, mut out: W) -> Result<()> {
        let mut line = String::new();
        for (i, v) in self.vectors.iter().enumerate() {
            line.clear();
            write!(line, "{}", g.label(i)).unwrap();
            for &(t, x) in &v.entries {
                write!(line, " {t}:{x}").unwrap();
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Parses the dump format written by [`Embedding::write`].
    pub fn read<R: BufRead>(reader: R, g: &Graph) -> Result<Embedding> {
        let index: std::collections::HashMap<u64, usize> = g
            .labels()
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, i))
            .collect();
        let mut vectors: Vec<Option<SparseVec>> = vec![None; g.n()];
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let node = fields.next().unwrap();
            let node: u64 = node
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid node id {node:?}")))?;
            let Some(&i) = index.get(&node) else {
                return Err(Error::Validation(format!(
                    "line {lineno}: node {node} is not in the graph"
                )));
            };
            let mut pairs = Vec::new();
            for field in fields {
                let (t, x) = field.split_once(':').ok_or_else(|| {
                    Error::parse(lineno, format!("expected idx:val, found {field:?}"))
                })?;
                let t: usize = t
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid index {t:?}")))?;
                let x: f64 = x
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid value {x:?}")))?;
                pairs.push((t, x));
            }
            let v = SparseVec::from_pairs(pairs)
                .map_err(|e| Error::Validation(format!("line {lineno}: {e}")))?;
            if vectors[i].replace(v).is_some() {
                return Err(Error::Validation(format!(
                    "line {lineno}: node {node} listed twice"
                )));
            }
        }
        let vectors = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::Validation(format!("missing vector for node {}", g.label(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(r) = vectors
            .iter()
            .filter_map(|v| v.entries.last())
            .map(|e| e.0)
            .max()
        {
            if r >= g
                .n()
                .saturating_mul(vectors.iter().map(|v| v.len()).max().unwrap_or(1))
                .max(g.n())
            {
                return Err(Error::Validation(format!(
                    "coordinate {r} exceeds the n·k bound"
                )));
            }
        }
        Embedding::from_vectors(g, vectors)
    }
}
