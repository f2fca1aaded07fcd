//! Block coordinate ascent over low-cardinality embeddings.
//!
//! Each step pops a node `i` from the work queue, forms the gradient
//! `q = Σ_{j≠i} a_ij v_j − (d_i/2m)(z − d_i v_i)` and replaces `v_i` by the
//! exact maximizer of `qᵀv` over nonnegative unit vectors with at most `k`
//! nonzeros:
//! - some `q_t > 0`: the normalized top-k⁺ of `q`;
//! - otherwise: a basis vector at a maximal entry. An unoccupied coordinate
//!   has gradient exactly 0, so it wins whenever every occupied entry is
//!   negative. Ties among zero entries keep the node's previous coordinate.
//!
//! The inner loop works with this unscaled gradient (the `1/2m` factor and
//! the diagonal constant do not change the maximizer); the diagnostics
//! rescale to the true gradient.

use crate::embedding::{rank_desc, select_topk_plus, Embedding, SparseVec};
use crate::graph::{Graph, Partition};
use crate::queue::RingQueue;

/// Scaled objective increment below which an update counts as stagnant.
pub const STAGNATION_GAIN: f64 = 1e-8;

/// Slack allowed on the per-update projected-gradient inequality.
pub const DESCENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LocaleOptions {
    /// Cardinality bound on every vector.
    pub k: usize,
    /// Stop after this many sweeps of `n` pops; `None` runs to convergence.
    pub rounds: Option<usize>,
    /// Shuffles the initial queue order.
    pub seed: Option<u64>,
    /// Checks the projected-gradient inequality on every update.
    pub validated: bool,
    /// Keeps a log of every applied move.
    pub record_moves: bool,
}

impl Default for LocaleOptions {
    fn default() -> Self {
        LocaleOptions {
            k: 8,
            rounds: Some(2),
            seed: None,
            validated: false,
            record_moves: false,
        }
    }
}

impl LocaleOptions {
    pub fn with_k(k: usize) -> Self {
        LocaleOptions {
            k,
            ..Self::default()
        }
    }

    /// Settings for a rounding pass: `k = 1`, run to convergence.
    pub fn rounding(&self) -> Self {
        LocaleOptions {
            k: 1,
            rounds: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    QueueEmpty,
    RoundLimit,
    Stagnation,
}

/// One applied update: at pop number `step`, node `node` moved to the
/// given support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub step: usize,
    pub node: usize,
    pub support: Vec<usize>,
}

/// Projected-gradient bookkeeping collected in validated mode.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Validation {
    pub checks: usize,
    pub violations: usize,
    /// Smallest `2ΔQ − ‖P(v_i + q) − v_i‖²` seen.
    pub min_slack: f64,
    /// Sum of `‖P(v_i + q) − v_i‖²` over all updates.
    pub pg_sq_sum: f64,
    /// Updates of vectors that exceeded the cardinality bound. The
    /// inequality only applies to feasible vectors, so these are not checked.
    pub skipped: usize,
}

impl Default for Validation {
    fn default() -> Self {
        Validation {
            checks: 0,
            violations: 0,
            min_slack: f64::INFINITY,
            pg_sq_sum: 0.0,
            skipped: 0,
        }
    }
}

impl Validation {
    pub fn merge(&mut self, other: &Validation) {
        self.checks += other.checks;
        self.violations += other.violations;
        self.min_slack = self.min_slack.min(other.min_slack);
        self.pg_sq_sum += other.pg_sq_sum;
        self.skipped += other.skipped;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentStats {
    pub pops: usize,
    pub moves: usize,
    pub stop: StopReason,
    pub validation: Option<Validation>,
    pub move_log: Vec<Move>,
}

/// Dense scratch space reused across updates.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    acc: Vec<f64>,
    mark: Vec<bool>,
    touched: Vec<usize>,
    cand: Vec<(usize, f64)>,
    sel: Vec<(usize, f64)>,
}

impl Scratch {
    fn fit(&mut self, r: usize) {
        if self.acc.len() < r {
            self.acc.resize(r, 0.0);
            self.mark.resize(r, false);
        }
    }

    fn touch(&mut self, t: usize) {
        if !self.mark[t] {
            self.mark[t] = true;
            self.touched.push(t);
        }
    }

    fn reset(&mut self) {
        for &t in &self.touched {
            self.acc[t] = 0.0;
            self.mark[t] = false;
        }
        self.touched.clear();
        self.cand.clear();
    }
}

#[inline]
pub(crate) fn null_ratio(g: &Graph, i: usize) -> f64 {
    if g.two_m() > 0.0 {
        g.degree(i) / g.two_m()
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn scaled_gain(g: &Graph, gain: f64) -> f64 {
    if g.two_m() > 0.0 {
        2.0 * gain / g.two_m()
    } else {
        0.0
    }
}

/// Picks the basis coordinate for a nonpositive gradient among explicit
/// candidates attaining `best`: largest previous value, then lowest index.
fn tie_break(cand: &[(usize, f64)], best: f64, prev: &SparseVec) -> usize {
    cand.iter()
        .filter(|&&(_, q)| q == best)
        .map(|&(t, _)| (t, prev.get(t)))
        .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
        .map(|(t, _)| t)
        .expect("at least one candidate attains the maximum")
}

fn normalize_in_place(sel: &mut [(usize, f64)]) {
    if let [(_, v)] = sel {
        *v = 1.0;
        return;
    }
    let norm = sel.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
    for (_, v) in sel.iter_mut() {
        *v /= norm;
    }
}

fn normalize_selection(mut sel: Vec<(usize, f64)>) -> SparseVec {
    normalize_in_place(&mut sel);
    SparseVec::from_pairs(sel).unwrap()
}

/// The closed-form maximizer of `qᵀv` over nonnegative unit vectors with at
/// most `k` nonzeros, for an explicit dense `q`. Ties in the nonpositive
/// case go to the largest entry of `prev`, then to the lowest index.
///
/// Because every feasible vector has unit norm, this is also the Euclidean
/// projection of `q` onto the feasible set.
pub fn closed_form_update(q: &[f64], k: usize, prev: &SparseVec) -> SparseVec {
    assert!(k >= 1, "k must be at least 1");
    assert!(!q.is_empty(), "empty gradient");
    let mut cand: Vec<(usize, f64)> = q.iter().copied().enumerate().collect();
    let best = cand.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    if best > 0.0 {
        select_topk_plus(&mut cand, k);
        normalize_selection(cand)
    } else {
        let t = tie_break(&cand, best, prev);
        SparseVec::from_pairs(vec![(t, 1.0)]).unwrap()
    }
}

/// Outcome of one coordinate update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Step {
    /// Unscaled increment `qᵀ(v_new − v_old)`.
    pub gain: f64,
    pub changed: bool,
}

#[inline]
fn same_block(restrict: Option<&[usize]>, i: usize, j: usize) -> bool {
    restrict.map_or(true, |r| r[i] == r[j])
}

/// One exact block update of node `i`, applied in place.
pub(crate) fn update_node(
    g: &Graph,
    e: &mut Embedding,
    i: usize,
    k: usize,
    restrict: Option<&[usize]>,
    s: &mut Scratch,
    validation: Option<&mut Validation>,
) -> Step {
    s.fit(e.dim());
    let d = g.degree(i);
    let ratio = null_ratio(g, i);
    let (targets, weights) = g.neighbors(i);
    for (&j, &w) in targets.iter().zip(weights) {
        if j == i || !same_block(restrict, i, j) {
            continue;
        }
        for &(t, x) in e.vector(j).entries() {
            s.touch(t);
            s.acc[t] += w * x;
        }
    }
    for &(t, _) in e.vector(i).entries() {
        s.touch(t);
    }

    let old = e.vector(i);
    let mut best = f64::NEG_INFINITY;
    for idx in 0..s.touched.len() {
        let t = s.touched[idx];
        let own = old.get(t);
        let alone = e.occupancy(t) == u32::from(own > 0.0);
        let others = if alone { 0.0 } else { e.z_at(t) - d * own };
        let q = s.acc[t] - ratio * others;
        s.acc[t] = q;
        s.cand.push((t, q));
        best = best.max(q);
    }
    let old_value: f64 = old.entries().iter().map(|&(t, x)| s.acc[t] * x).sum();
    let old_len = old.len();

    s.sel.clear();
    if best > 0.0 {
        s.sel.extend_from_slice(&s.cand);
        select_topk_plus(&mut s.sel, k);
        normalize_in_place(&mut s.sel);
    } else if best == 0.0 {
        let t = tie_break(&s.cand, best, old);
        s.sel.push((t, 1.0));
    } else {
        let t = e.allocate_free_coordinate();
        s.fit(e.dim());
        s.sel.push((t, 1.0));
    }

    let new_value: f64 = s.sel.iter().map(|&(t, x)| s.acc[t] * x).sum();
    let gain = new_value - old_value;
    let changed = gain > 0.0 || old_len > k;

    let validation = match validation {
        Some(val) if old_len > k => {
            val.skipped += 1;
            None
        }
        other => other,
    };
    if let Some(val) = validation {
        let inv = if g.two_m() > 0.0 {
            1.0 / g.two_m()
        } else {
            0.0
        };
        let lhs = projected_step_sq(&s.cand, inv, k, e.vector(i));
        let rhs = if changed { 2.0 * gain * inv } else { 0.0 };
        let slack = rhs - lhs;
        val.checks += 1;
        val.pg_sq_sum += lhs;
        val.min_slack = val.min_slack.min(slack);
        if slack < -DESCENT_TOLERANCE {
            val.violations += 1;
        }
    }

    if changed {
        e.assign(i, d, &s.sel);
    }
    s.reset();
    Step {
        gain: if changed { gain } else { 0.0 },
        changed,
    }
}

/// `‖P(v + q·scale) − v‖²` where `cand` lists the explicit gradient
/// entries and every other coordinate has a nonpositive entry, with an
/// unoccupied coordinate (entry 0) always available.
fn projected_step_sq(cand: &[(usize, f64)], scale: f64, k: usize, v: &SparseVec) -> f64 {
    let mut x: Vec<(usize, f64)> = cand
        .iter()
        .map(|&(t, q)| (t, v.get(t) + q * scale))
        .collect();
    let best = x.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let p = if best > 0.0 {
        select_topk_plus(&mut x, k);
        normalize_selection(x)
    } else if best == 0.0 && x.iter().any(|&(t, xv)| xv == 0.0 && v.get(t) > 0.0) {
        let t = tie_break(&x, best, v);
        SparseVec::from_pairs(vec![(t, 1.0)]).unwrap()
    } else {
        // Some coordinate outside the support of v: distance² = 1 + ‖v‖².
        return 2.0;
    };
    let mut diff = p;
    diff.axpy(-1.0, v);
    diff.entries().iter().map(|&(_, x)| x * x).sum()
}

/// Runs the queue-driven ascent on `e` in place.
///
/// `restrict` confines every node to neighbors in its own block (used by
/// refinement). Stops when the queue drains, after `rounds` sweeps of `n`
/// pops, or once `n` consecutive updates each gain less than
/// [`STAGNATION_GAIN`] while every vector already satisfies the
/// cardinality bound.
pub fn ascend(
    g: &Graph,
    e: &mut Embedding,
    opts: &LocaleOptions,
    restrict: Option<&Partition>,
) -> AscentStats {
    assert!(opts.k >= 1, "k must be at least 1");
    assert_eq!(e.n(), g.n(), "embedding does not match graph");
    let n = g.n();
    let k = opts.k;
    let restrict = restrict.map(Partition::assignment);
    let mut stats = AscentStats {
        pops: 0,
        moves: 0,
        stop: StopReason::QueueEmpty,
        validation: opts.validated.then(Validation::default),
        move_log: Vec::new(),
    };
    if n == 0 {
        return stats;
    }
    let mut queue = RingQueue::seeded(n, opts.seed);
    let mut scratch = Scratch::default();
    let limit = opts.rounds.map(|r| r.saturating_mul(n));
    let mut infeasible = e.vectors().iter().filter(|v| v.len() > k).count();
    let mut quiet = 0usize;
    let mut since_refresh = 0usize;

    while let Some(i) = queue.pop() {
        stats.pops += 1;
        if e.vector(i).len() > k {
            infeasible -= 1;
        }
        let step = update_node(
            g,
            e,
            i,
            k,
            restrict,
            &mut scratch,
            stats.validation.as_mut(),
        );
        if step.changed {
            stats.moves += 1;
            if opts.record_moves {
                stats.move_log.push(Move {
                    step: stats.pops,
                    node: i,
                    support: e.vector(i).entries().iter().map(|&(t, _)| t).collect(),
                });
            }
            for &j in g.neighbors(i).0 {
                if j != i && same_block(restrict, i, j) {
                    queue.push(j);
                }
            }
        }
        since_refresh += 1;
        if since_refresh == n {
            e.refresh_z(g);
            since_refresh = 0;
        }
        if scaled_gain(g, step.gain) < STAGNATION_GAIN {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= n && infeasible == 0 {
            stats.stop = StopReason::Stagnation;
            break;
        }
        if limit == Some(stats.pops) {
            stats.stop = StopReason::RoundLimit;
            break;
        }
    }
    stats
}

/// Embeds `g` starting from `v_i = e(p_i)` and runs the ascent with the
/// options' `k` and round limit.
pub fn locale_embeddings(
    g: &Graph,
    p: &Partition,
    opts: &LocaleOptions,
) -> (Embedding, AscentStats) {
    let mut e = Embedding::from_partition(g, p, opts.k);
    let stats = ascend(g, &mut e, opts, None);
    (e, stats)
}

/// Rounds an embedding to a partition by rerunning the ascent with `k = 1`
/// from it until convergence. The first sweep collapses every vector to a
/// single coordinate.
pub fn locale_rounding(
    g: &Graph,
    mut e: Embedding,
    opts: &LocaleOptions,
) -> (Partition, AscentStats) {
    let stats = ascend(g, &mut e, &opts.rounding(), None);
    (e.to_partition(), stats)
}

/// `k = 1` ascent from singletons with moves confined to the blocks of
/// `blocks`.
pub fn restricted_rounding(
    g: &Graph,
    blocks: &Partition,
    opts: &LocaleOptions,
) -> (Partition, AscentStats) {
    let mut e = Embedding::singletons(g, 1);
    let stats = ascend(g, &mut e, &opts.rounding(), Some(blocks));
    (e.to_partition(), stats)
}

/// Applies one exact update to node `i` and returns the new vector and the
/// unscaled gain `qᵀ(v_new − v_old)` (zero when nothing changed).
pub fn locale_update(
    g: &Graph,
    e: &mut Embedding,
    i: usize,
    k: usize,
    restrict: Option<&Partition>,
) -> (SparseVec, f64) {
    assert!(k >= 1, "k must be at least 1");
    let mut s = Scratch::default();
    let step = update_node(
        g,
        e,
        i,
        k,
        restrict.map(Partition::assignment),
        &mut s,
        None,
    );
    (e.vector(i).clone(), step.gain)
}

fn fresh_z(g: &Graph, e: &Embedding) -> Vec<f64> {
    let mut z = vec![0.0; e.dim()];
    for (j, v) in e.vectors().iter().enumerate() {
        for &(t, x) in v.entries() {
            z[t] += g.degree(j) * x;
        }
    }
    z
}

fn dense_gradient(
    g: &Graph,
    e: &Embedding,
    i: usize,
    restrict: Option<&Partition>,
    z: &[f64],
) -> Vec<f64> {
    let mut q = vec![0.0; e.dim()];
    let (targets, weights) = g.neighbors(i);
    for (&j, &w) in targets.iter().zip(weights) {
        if j == i || restrict.is_some_and(|p| p.community_of(i) != p.community_of(j)) {
            continue;
        }
        for &(t, x) in e.vector(j).entries() {
            q[t] += w * x;
        }
    }
    let ratio = null_ratio(g, i);
    let d = g.degree(i);
    let v = e.vector(i);
    for (t, qt) in q.iter_mut().enumerate() {
        *qt -= ratio * (z[t] - d * v.get(t));
    }
    q
}

/// Unscaled gradient of node `i`, computed densely from scratch (the
/// running `z` is not consulted). Self-loops are excluded from the
/// neighbor sum; they only add a constant to the subproblem.
pub fn gradient(g: &Graph, e: &Embedding, i: usize, restrict: Option<&Partition>) -> SparseVec {
    let z = fresh_z(g, e);
    let mut q = dense_gradient(g, e, i, restrict, &z);
    for x in &mut q {
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
    SparseVec::from_dense(&q)
}

/// `Q(V) = (1/2m) Σ_ij [a_ij − d_i d_j/2m] v_iᵀv_j`, diagonal included.
pub fn embedding_objective(g: &Graph, e: &Embedding) -> f64 {
    let two_m = g.two_m();
    if two_m <= 0.0 {
        return 0.0;
    }
    let mut inner = 0.0;
    for i in 0..g.n() {
        let (targets, weights) = g.neighbors(i);
        for (&j, &w) in targets.iter().zip(weights) {
            inner += w * crate::embedding::dot(e.vector(i), e.vector(j));
        }
    }
    let z = fresh_z(g, e);
    let zz: f64 = z.iter().map(|x| x * x).sum();
    inner / two_m - zz / (two_m * two_m)
}

/// Projection of `v_i + q_i` (true, `1/2m`-scaled gradient) onto node i's
/// feasible set, over the current coordinates plus one fresh coordinate.
fn project_column(g: &Graph, e: &Embedding, i: usize, k: usize, z: &[f64]) -> SparseVec {
    let two_m = g.two_m();
    let mut x = dense_gradient(g, e, i, None, z);
    let v = e.vector(i);
    for (t, xt) in x.iter_mut().enumerate() {
        *xt = v.get(t) + if two_m > 0.0 { *xt / two_m } else { 0.0 };
    }
    x.push(0.0);
    closed_form_update(&x, k, v)
}

/// `‖P_Ω(V + ∇Q(V)) − V‖` (Frobenius). Zero exactly at fixed points of the
/// update.
pub fn projected_gradient_norm(g: &Graph, e: &Embedding, k: usize) -> f64 {
    let z = fresh_z(g, e);
    (0..g.n())
        .map(|i| {
            let mut diff = project_column(g, e, i, k, &z);
            diff.axpy(-1.0, e.vector(i));
            diff.entries().iter().map(|&(_, x)| x * x).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentCheck {
    /// `‖P(v_i + q) − v_i‖²`.
    pub lhs: f64,
    /// `2 qᵀ(v_i⁺ − v_i)`, i.e. twice the subproblem increment.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `‖P(v_i + q) − v_i‖² ≤ 2 qᵀ(v_i⁺ − v_i)` for a single update of
/// node `i` from `before` to `after`. The increment is taken from the full
/// objective, which changes by exactly twice the subproblem increment.
pub fn descent_inequality_check(
    g: &Graph,
    before: &Embedding,
    after: &Embedding,
    i: usize,
    k: usize,
) -> DescentCheck {
    let z = fresh_z(g, before);
    let mut diff = project_column(g, before, i, k, &z);
    diff.axpy(-1.0, before.vector(i));
    let lhs: f64 = diff.entries().iter().map(|&(_, x)| x * x).sum();
    let rhs = embedding_objective(g, after) - embedding_objective(g, before);
    DescentCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + DESCENT_TOLERANCE,
    }
}

/// The best coordinate of each vector (largest entry, then lowest index).
pub fn argmax_partition(e: &Embedding) -> Partition {
    Partition::new(
        e.vectors()
            .iter()
            .map(|v| v.entries().iter().copied().min_by(rank_desc).unwrap().0)
            .collect(),
    )
}
