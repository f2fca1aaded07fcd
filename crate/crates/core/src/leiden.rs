//! Multi-level drivers: the greedy local-move baseline, refinement and
//! aggregation, and the Louvain / Leiden / Leiden-Locale main loop.

use std::borrow::Cow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embedding::select_topk_plus;
use crate::error::{Error, Result};
use crate::graph::{aggregate, modularity, split_disconnected, Graph, Partition};
use crate::locale::{
    locale_embeddings, locale_rounding, null_ratio, restricted_rounding, scaled_gain, AscentStats,
    LocaleOptions, Move, StopReason, Validation, STAGNATION_GAIN,
};
use crate::queue::RingQueue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Louvain,
    Leiden,
    Locale,
}

/// How long each embedding (or local-move) phase runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerRounds {
    /// Two sweeps of `n` queue pops.
    Two,
    /// Until the queue drains or progress stagnates.
    Full,
}

impl InnerRounds {
    pub fn limit(self) -> Option<usize> {
        match self {
            InnerRounds::Two => Some(2),
            InnerRounds::Full => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub inner_rounds: InnerRounds,
    pub iterations: usize,
    pub seed: Option<u64>,
    pub validated: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Locale,
            k: 8,
            inner_rounds: InnerRounds::Two,
            iterations: 1,
            seed: None,
            validated: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Validation("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub iteration: usize,
    pub level: usize,
    pub nodes: usize,
    pub communities: usize,
    /// Modularity of the flat partition after this level's local-move phase.
    pub modularity: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    pub records: Vec<LevelRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub partition: Partition,
    pub modularity: f64,
    /// Final modularity after each iteration, in order.
    pub iteration_modularity: Vec<f64>,
    pub iteration_seconds: Vec<f64>,
    pub trace: LevelTrace,
    pub validation: Option<Validation>,
}

/// Louvain-style local moves on community totals, written independently
/// of the embedding code. Starts from `p`; with `restrict`, nodes only see
/// neighbors in their own block. Queue order, tie-breaking, the handling
/// of empty communities and the stopping rules match the `k = 1` ascent.
pub fn greedy_local_move(
    g: &Graph,
    p: &Partition,
    opts: &LocaleOptions,
    restrict: Option<&Partition>,
) -> (Partition, AscentStats) {
    assert_eq!(p.len(), g.n(), "partition does not match graph");
    let n = g.n();
    let restrict = restrict.map(Partition::assignment);
    let mut stats = AscentStats {
        pops: 0,
        moves: 0,
        stop: StopReason::QueueEmpty,
        validation: None,
        move_log: Vec::new(),
    };
    if n == 0 {
        return (p.clone(), stats);
    }

    let mut comm = p.assignment().to_vec();
    let r = n.max(p.community_count());
    let mut occ = vec![0u32; r];
    for &c in &comm {
        occ[c] += 1;
    }
    let mut tot = vec![0.0; r];
    let refresh = |tot: &mut Vec<f64>, comm: &[usize]| {
        tot.iter_mut().for_each(|x| *x = 0.0);
        for (i, &c) in comm.iter().enumerate() {
            tot[c] += g.degree(i);
        }
    };
    refresh(&mut tot, &comm);
    let mut free: Vec<usize> = (0..r).rev().filter(|&c| occ[c] == 0).collect();

    let mut acc = vec![0.0; r];
    let mut seen = vec![false; r];
    let mut touched: Vec<usize> = Vec::new();
    let mut cand: Vec<(usize, f64)> = Vec::new();

    let mut queue = RingQueue::seeded(n, opts.seed);
    let limit = opts.rounds.map(|x| x.saturating_mul(n));
    let mut quiet = 0usize;
    let mut since_refresh = 0usize;

    while let Some(i) = queue.pop() {
        stats.pops += 1;
        let c = comm[i];
        let d = g.degree(i);
        let ratio = null_ratio(g, i);
        let (targets, weights) = g.neighbors(i);
        for (&j, &w) in targets.iter().zip(weights) {
            if j == i || restrict.is_some_and(|b| b[i] != b[j]) {
                continue;
            }
            let cj = comm[j];
            if !seen[cj] {
                seen[cj] = true;
                touched.push(cj);
            }
            acc[cj] += w;
        }
        if !seen[c] {
            seen[c] = true;
            touched.push(c);
        }
        let mut best = f64::NEG_INFINITY;
        for &t in &touched {
            let alone = occ[t] == u32::from(t == c);
            let others = if alone {
                0.0
            } else {
                tot[t] - if t == c { d } else { 0.0 }
            };
            let q = acc[t] - ratio * others;
            acc[t] = q;
            cand.push((t, q));
            best = best.max(q);
        }

        let target = if best > 0.0 {
            select_topk_plus(&mut cand, 1);
            cand[0].0
        } else if best == 0.0 {
            if acc[c] == 0.0 {
                c
            } else {
                cand.iter()
                    .filter(|x| x.1 == 0.0)
                    .map(|x| x.0)
                    .min()
                    .unwrap()
            }
        } else {
            loop {
                match free.last() {
                    Some(&t) if occ[t] == 0 => break t,
                    Some(_) => {
                        free.pop();
                    }
                    None => {
                        let t = tot.len();
                        assert!(t < n, "no empty community left");
                        tot.push(0.0);
                        occ.push(0);
                        acc.push(0.0);
                        seen.push(false);
                        free.push(t);
                    }
                }
            }
        };
        let gain = acc[target] - acc[c];

        for &t in &touched {
            acc[t] = 0.0;
            seen[t] = false;
        }
        touched.clear();
        cand.clear();

        let changed = gain > 0.0;
        if changed {
            tot[c] -= d;
            occ[c] -= 1;
            tot[target] += d;
            occ[target] += 1;
            comm[i] = target;
            if let Some(&top) = free.last() {
                if occ[top] > 0 {
                    free.pop();
                }
            }
            if occ[c] == 0 {
                tot[c] = 0.0;
                free.push(c);
            } else if tot[c].abs() < 1e-13 {
                tot[c] = 0.0;
            }
            stats.moves += 1;
            if opts.record_moves {
                stats.move_log.push(Move {
                    step: stats.pops,
                    node: i,
                    support: vec![target],
                });
            }
            for &j in targets {
                if j != i && !restrict.is_some_and(|b| b[i] != b[j]) {
                    queue.push(j);
                }
            }
        }

        since_refresh += 1;
        if since_refresh == n {
            refresh(&mut tot, &comm);
            since_refresh = 0;
        }
        let step_gain = if changed { gain } else { 0.0 };
        if scaled_gain(g, step_gain) < STAGNATION_GAIN {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= n {
            stats.stop = StopReason::Stagnation;
            break;
        }
        if limit == Some(stats.pops) {
            stats.stop = StopReason::RoundLimit;
            break;
        }
    }
    (Partition::new(comm), stats)
}

/// Result of one refine-and-aggregate step.
#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    /// The refined partition `P′` of the input graph; every community is
    /// connected and nested inside a community of `p`.
    pub refined: Partition,
    /// The graph contracted along `P′`.
    pub graph: Graph,
    /// `p` expressed on the contracted graph.
    pub partition: Partition,
    /// `|P| == |G′|`: every community of `p` survived refinement intact.
    pub done: bool,
}

/// Restricted `k = 1` moves from singletons within each community of `p`,
/// then contraction along the refined partition.
pub fn refine_and_aggregate(
    g: &Graph,
    p: &Partition,
    algorithm: Algorithm,
    opts: &LocaleOptions,
) -> Refined {
    let singletons = Partition::singletons(g.n());
    let refined = match algorithm {
        Algorithm::Locale => restricted_rounding(g, p, opts).0,
        _ => greedy_local_move(g, &singletons, &opts.rounding(), Some(p)).0,
    };
    // Restricted moves start from connected singletons and only join
    // neighbors, but a node leaving a community can cut it in two.
    contract(g, p, split_disconnected(g, &refined))
}

fn contract(g: &Graph, p: &Partition, refined: Partition) -> Refined {
    let coarse = aggregate(g, &refined);
    let mut labels = vec![0; refined.community_count()];
    for i in 0..g.n() {
        labels[refined.community_of(i)] = p.community_of(i);
    }
    let done = p.community_count() == coarse.n();
    Refined {
        refined,
        graph: coarse,
        partition: Partition::new(labels),
        done,
    }
}

/// Composes per-level assignments down to the original nodes: level 0 maps
/// original nodes to level-1 nodes, and so on.
pub fn flatten(levels: &[Partition]) -> Result<Partition> {
    let Some(first) = levels.first() else {
        return Err(Error::Domain("no levels to flatten".into()));
    };
    let mut flat = first.assignment().to_vec();
    for (depth, next) in levels.iter().enumerate().skip(1) {
        if next.len() != levels[depth - 1].community_count() {
            return Err(Error::Domain(format!(
                "level {depth} has {} entries but the level below has {} communities",
                next.len(),
                levels[depth - 1].community_count()
            )));
        }
        for c in &mut flat {
            *c = next.community_of(*c);
        }
    }
    Ok(Partition::new(flat))
}

fn compose(flat_map: &[usize], p: &Partition) -> Vec<usize> {
    flat_map.iter().map(|&v| p.community_of(v)).collect()
}

/// Queue order seed for one level. Without a user seed the first pass keeps
/// id order and later passes shuffle deterministically, so repeated passes
/// do not retrace the same moves.
fn mix_seed(seed: Option<u64>, iteration: usize, level: usize) -> Option<u64> {
    let seed = seed.or((iteration > 0).then_some(0));
    seed.map(|s| {
        let mut x =
            s ^ ((iteration as u64) << 32 | level as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        x ^= x >> 31;
        x.wrapping_mul(0xBF58_476D_1CE4_E5B9)
    })
}

fn quality(g: &Graph, p: &Partition) -> f64 {
    modularity(g, p).unwrap_or(0.0)
}

/// One local-move phase: embed and round for Locale, plain greedy moves
/// otherwise. Never returns a partition worse than `p`.
fn local_phase(
    g: &Graph,
    p: &Partition,
    cfg: &RunConfig,
    opts: &LocaleOptions,
    validation: &mut Option<Validation>,
) -> Partition {
    let moved = match cfg.algorithm {
        Algorithm::Locale => {
            let (e, s1) = locale_embeddings(g, p, opts);
            let (out, s2) = locale_rounding(g, e, opts);
            if let Some(v) = validation.as_mut() {
                for s in [s1, s2] {
                    if let Some(sv) = &s.validation {
                        v.merge(sv);
                    }
                }
            }
            out
        }
        _ => greedy_local_move(g, p, opts, None).0,
    };
    if quality(g, &moved) < quality(g, p) {
        p.clone()
    } else {
        moved
    }
}

/// One full multi-level pass starting from `init` on the original graph.
fn run_pass(
    g: &Graph,
    init: Partition,
    cfg: &RunConfig,
    iteration: usize,
    trace: &mut LevelTrace,
    validation: &mut Option<Validation>,
) -> Partition {
    let mut graph: Cow<Graph> = Cow::Borrowed(g);
    let mut flat_map: Vec<usize> = (0..g.n()).collect();
    let mut p = init;
    for level in 0.. {
        let start = Instant::now();
        let opts = LocaleOptions {
            k: if cfg.algorithm == Algorithm::Locale {
                cfg.k
            } else {
                1
            },
            rounds: cfg.inner_rounds.limit(),
            seed: mix_seed(cfg.seed, iteration, level),
            validated: cfg.validated,
            record_moves: false,
        };
        p = local_phase(&graph, &p, cfg, &opts, validation);
        let mut record = LevelRecord {
            iteration,
            level,
            nodes: graph.n(),
            communities: p.community_count(),
            modularity: quality(&graph, &p),
            seconds: 0.0,
        };

        if cfg.algorithm == Algorithm::Louvain {
            record.seconds = start.elapsed().as_secs_f64();
            trace.records.push(record);
            if p.community_count() == graph.n() {
                return Partition::new(compose(&flat_map, &p));
            }
            let coarse = aggregate(&graph, &p);
            flat_map = compose(&flat_map, &p);
            p = Partition::singletons(coarse.n());
            graph = Cow::Owned(coarse);
            continue;
        }

        // Finished once the local phase merges nothing on the current graph.
        if p.community_count() == graph.n() {
            record.seconds = start.elapsed().as_secs_f64();
            trace.records.push(record);
            return Partition::new(compose(&flat_map, &p));
        }
        let mut step = refine_and_aggregate(&graph, &p, cfg.algorithm, &opts);
        if step.graph.n() == graph.n() {
            // Refinement kept every node apart, so contracting along it would
            // not shrink the graph. Contract along the connected parts of `p`
            // instead; they are still connected, and `p` has fewer
            // communities than the graph has nodes.
            let parts = split_disconnected(&graph, &p);
            if parts.community_count() == graph.n() {
                record.seconds = start.elapsed().as_secs_f64();
                trace.records.push(record);
                return Partition::new(compose(&flat_map, &parts));
            }
            step = contract(&graph, &p, parts);
        }
        record.seconds = start.elapsed().as_secs_f64();
        trace.records.push(record);
        flat_map = compose(&flat_map, &step.refined);
        p = step.partition;
        graph = Cow::Owned(step.graph);
    }
    unreachable!()
}

/// Runs `cfg.iterations` full passes; each pass after the first starts from
/// the previous pass's partition.
pub fn leiden_locale(g: &Graph, cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let mut trace = LevelTrace::default();
    let mut validation = cfg.validated.then(Validation::default);
    let mut current = Partition::singletons(g.n());
    let mut iteration_modularity = Vec::with_capacity(cfg.iterations);
    let mut iteration_seconds = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let start = Instant::now();
        let next = run_pass(
            g,
            current.clone(),
            cfg,
            iteration,
            &mut trace,
            &mut validation,
        );
        if iteration == 0 || quality(g, &next) >= quality(g, &current) {
            current = next;
        }
        iteration_seconds.push(start.elapsed().as_secs_f64());
        iteration_modularity.push(quality(g, &current));
    }
    Ok(RunResult {
        modularity: quality(g, &current),
        partition: current,
        iteration_modularity,
        iteration_seconds,
        trace,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::community_is_connected;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    fn barbell() -> Graph {
        Graph::from_edges(
            6,
            [
                (0, 1, 1.0),
                (0, 2, 1.0),
                (1, 2, 1.0),
                (3, 4, 1.0),
                (3, 5, 1.0),
                (4, 5, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap()
    }

    fn full() -> LocaleOptions {
        LocaleOptions {
            k: 1,
            rounds: None,
            ..LocaleOptions::default()
        }
    }

    #[test]
    fn greedy_examples() {
        let g = Graph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        let (p, _) = greedy_local_move(&g, &Partition::singletons(2), &full(), None);
        assert_eq!(p.community_count(), 1);

        let g = path3();
        let (p, _) = greedy_local_move(&g, &Partition::singletons(3), &full(), None);
        assert_eq!(p.community_count(), 1);
        assert_eq!(modularity(&g, &p).unwrap(), 0.0);
    }

    #[test]
    fn refine_singletons_is_a_no_op() {
        let g = barbell();
        let p = Partition::singletons(6);
        for algo in [Algorithm::Leiden, Algorithm::Locale] {
            let r = refine_and_aggregate(&g, &p, algo, &full());
            assert_eq!(r.refined, p);
            assert_eq!(r.graph.n(), 6);
            assert_eq!(r.graph.two_m(), g.two_m());
            assert!(r.done);
        }
    }

    #[test]
    fn refine_path_keeps_it_whole() {
        let g = path3();
        let p = Partition::single_community(3);
        let r = refine_and_aggregate(&g, &p, Algorithm::Locale, &full());
        assert_eq!(r.graph.n(), 1);
        assert!(r.done);
    }

    #[test]
    fn refine_splits_disconnected_community() {
        // Two disjoint edges forced into one community.
        let g = Graph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let p = Partition::single_community(4);
        for algo in [Algorithm::Leiden, Algorithm::Locale] {
            let r = refine_and_aggregate(&g, &p, algo, &full());
            assert_eq!(r.refined, Partition::new(vec![0, 0, 1, 1]));
            assert_eq!(r.partition, Partition::new(vec![0, 0]));
            assert!(!r.done);
        }
    }

    #[test]
    fn flatten_examples() {
        let one = Partition::new(vec![0, 1, 1]);
        assert_eq!(flatten(std::slice::from_ref(&one)).unwrap(), one);
        let levels = [Partition::new(vec![0, 0, 1]), Partition::new(vec![0, 0])];
        assert_eq!(flatten(&levels).unwrap().assignment(), &[0, 0, 0]);
        assert!(flatten(&[Partition::new(vec![0, 1]), Partition::new(vec![0])]).is_err());
    }

    #[test]
    fn flatten_after_aggregate_preserves_modularity() {
        let g = barbell();
        let p = Partition::new(vec![0, 0, 1, 2, 2, 3]);
        let coarse = aggregate(&g, &p);
        let upper = Partition::new(vec![0, 0, 1, 1]);
        let flat = flatten(&[p, upper.clone()]).unwrap();
        let a = modularity(&g, &flat).unwrap();
        let b = modularity(&coarse, &upper).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn drivers_find_barbell_split() {
        let g = barbell();
        for algorithm in [Algorithm::Louvain, Algorithm::Leiden, Algorithm::Locale] {
            let cfg = RunConfig {
                algorithm,
                ..RunConfig::default()
            };
            let res = leiden_locale(&g, &cfg).unwrap();
            assert_eq!(
                res.partition,
                Partition::new(vec![0, 0, 0, 1, 1, 1]),
                "{algorithm:?}"
            );
            assert!((res.modularity - 5.0 / 14.0).abs() < 1e-12);
        }
    }

    #[test]
    fn levels_never_lose_modularity() {
        let g = barbell();
        let cfg = RunConfig {
            iterations: 3,
            ..RunConfig::default()
        };
        let res = leiden_locale(&g, &cfg).unwrap();
        for w in res.trace.records.windows(2) {
            if w[0].iteration == w[1].iteration {
                assert!(w[1].modularity >= w[0].modularity - 1e-9);
            }
        }
        for c in 0..res.partition.community_count() {
            assert!(community_is_connected(&g, &res.partition, c).unwrap());
        }
    }

    #[test]
    fn rejects_bad_config() {
        let g = barbell();
        let cfg = RunConfig {
            k: 0,
            ..RunConfig::default()
        };
        assert!(leiden_locale(&g, &cfg).is_err());
        let cfg = RunConfig {
            iterations: 0,
            ..RunConfig::default()
        };
        assert!(leiden_locale(&g, &cfg).is_err());
    }
}
