//! Undirected weighted graphs in compressed sparse row layout, plus the
//! partition type and the partition-level operations (modularity,
//! aggregation, connectivity).
//!
//! Conventions: `a_ij` is stored for both `(i, j)` and `(j, i)`; a self-loop
//! is a single diagonal entry `a_ii`. Degrees are row sums (so `a_ii` counts
//! once) and `two_m` is the sum of all stored entries.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    two_m: f64,
    /// Original node ids, indexed by dense node index.
    labels: Vec<u64>,
}

impl Graph {
    /// Builds a graph over nodes `0..n` from undirected edges. Repeated
    /// edges are summed; `(u, u, w)` stores `a_uu = w`.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::build(n, edges, (0..n as u64).collect())
    }

    fn build<I>(n: usize, edges: I, labels: Vec<u64>) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        debug_assert_eq!(labels.len(), n);
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) has invalid weight {w}"
                )));
            }
            if w == 0.0 {
                continue;
            }
            entries.push((u, v, w));
            if u != v {
                entries.push((v, u, w));
            }
        }
        entries.sort_unstable_by_key(|e| (e.0, e.1));

        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::with_capacity(entries.len());
        let mut weights: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (u, v, w) in entries {
            if last == Some((u, v)) {
                *weights.last_mut().unwrap() += w;
            } else {
                targets.push(v);
                weights.push(w);
                offsets[u + 1] += 1;
                last = Some((u, v));
            }
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let degrees: Vec<f64> = (0..n)
            .map(|i| weights[offsets[i]..offsets[i + 1]].iter().sum())
            .collect();
        let two_m = degrees.iter().sum();
        Ok(Graph {
            offsets,
            targets,
            weights,
            degrees,
            two_m,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges, self-loops included.
    pub fn edge_count(&self) -> usize {
        let loops = (0..self.n())
            .filter(|&i| self.neighbors(i).0.binary_search(&i).is_ok())
            .count();
        (self.targets.len() - loops) / 2 + loops
    }

    /// Number of stored nonzeros of the adjacency matrix, i.e. `card(A)`.
    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    /// Neighbor indices and weights of `i`, sorted by neighbor index.
    #[inline]
    pub fn neighbors(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.offsets[i]..self.offsets[i + 1];
        (&self.targets[range.clone()], &self.weights[range])
    }

    #[inline]
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    #[inline]
    pub fn two_m(&self) -> f64 {
        self.two_m
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (t, w) = self.neighbors(i);
        t.binary_search(&j).map(|p| w[p]).unwrap_or(0.0)
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u64 {
        self.labels[i]
    }

    fn label_index(&self) -> HashMap<u64, usize> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, i))
            .collect()
    }

    /// Reads a whitespace-separated edge list. Lines starting with `#` are
    /// comments. Node ids are remapped to `0..n` in order of first
    /// appearance; the original ids are kept as labels. Without `weighted`
    /// a third column is ignored and every edge weighs 1.
    pub fn load_edge_list<R: BufRead>(reader: R, weighted: bool) -> Result<Graph> {
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        let mut intern = |id: u64| {
            *index.entry(id).or_insert_with(|| {
                labels.push(id);
                labels.len() - 1
            })
        };
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "expected \"u v\" or \"u v w\", found {} fields",
                        fields.len()
                    ),
                ));
            }
            let parse_id = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| Error::parse(lineno, format!("invalid node id {s:?}")))
            };
            let u = parse_id(fields[0])?;
            let v = parse_id(fields[1])?;
            let w = match fields.get(2) {
                Some(s) if weighted => {
                    let w: f64 = s
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("invalid weight {s:?}")))?;
                    if !w.is_finite() || w <= 0.0 {
                        return Err(Error::Validation(format!(
                            "line {lineno}: weight must be positive and finite, found {w}"
                        )));
                    }
                    w
                }
                _ => 1.0,
            };
            let (u, v) = (intern(u), intern(v));
            edges.push((u, v, w));
        }
        Graph::build(labels.len(), edges, labels)
    }

    pub fn parse_edge_list(text: &str, weighted: bool) -> Result<Graph> {
        Self::load_edge_list(text.as_bytes(), weighted)
    }

    /// Writes one `label_u label_v weight` line per stored edge. Reloading
    /// (weighted) gives the same labelled graph, though node indices may be
    /// assigned in a different order. Isolated nodes are not written.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n() {
            let (t, w) = self.neighbors(i);
            for (&j, &x) in t.iter().zip(w).filter(|(&j, _)| j >= i) {
                writeln!(out, "{} {} {}", self.labels[i], self.labels[j], x)?;
            }
        }
        Ok(())
    }

    /// Edges as `(label_u, label_v, weight)` with `label_u ≤ label_v`,
    /// sorted. Two graphs with equal edge sets describe the same network
    /// regardless of index order.
    pub fn labelled_edges(&self) -> Vec<(u64, u64, f64)> {
        let mut edges: Vec<(u64, u64, f64)> = (0..self.n())
            .flat_map(|i| {
                let (t, w) = self.neighbors(i);
                t.iter()
                    .zip(w)
                    .filter(move |(&j, _)| j >= i)
                    .map(move |(&j, &x)| {
                        let (a, b) = (self.labels[i], self.labels[j]);
                        (a.min(b), a.max(b), x)
                    })
            })
            .collect();
        edges.sort_by_key(|e| (e.0, e.1));
        edges
    }
}

/// Dense node → community assignment with ids compacted to
/// `0..community_count` in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    count: usize,
}

impl Partition {
    /// Compacts arbitrary labels into dense community ids.
    pub fn new(labels: Vec<usize>) -> Partition {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let assignment: Vec<usize> = labels
            .into_iter()
            .map(|c| {
                let next = remap.len();
                *remap.entry(c).or_insert(next)
            })
            .collect();
        Partition {
            count: remap.len(),
            assignment,
        }
    }

    pub fn singletons(n: usize) -> Partition {
        Partition {
            assignment: (0..n).collect(),
            count: n,
        }
    }

    pub fn single_community(n: usize) -> Partition {
        Partition {
            assignment: vec![0; n],
            count: usize::from(n > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn community_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn into_assignment(self) -> Vec<usize> {
        self.assignment
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.count];
        for (i, &c) in self.assignment.iter().enumerate() {
            members[c].push(i);
        }
        members
    }

    /// Reads `original_node_id community_id` lines against `g`'s labels.
    /// Every node must appear exactly once.
    pub fn read<R: BufRead>(reader: R, g: &Graph) -> Result<Partition> {
        let index = g.label_index();
        let mut labels: Vec<Option<u64>> = vec![None; g.n()];
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(node), Some(comm), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(lineno, "expected \"node_id community_id\""));
            };
            let node: u64 = node
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid node id {node:?}")))?;
            let comm: u64 = comm
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid community id {comm:?}")))?;
            let Some(&i) = index.get(&node) else {
                return Err(Error::Validation(format!(
                    "line {lineno}: node {node} is not in the graph"
                )));
            };
            if labels[i].replace(comm).is_some() {
                return Err(Error::Validation(format!(
                    "line {lineno}: node {node} assigned twice"
                )));
            }
        }
        let mut dense = Vec::with_capacity(g.n());
        for (i, l) in labels.into_iter().enumerate() {
            match l {
                Some(c) => dense.push(c),
                None => {
                    return Err(Error::Validation(format!(
                        "partition does not assign node {}",
                        g.label(i)
                    )))
                }
            }
        }
        let mut remap: HashMap<u64, usize> = HashMap::new();
        let labels = dense
            .into_iter()
            .map(|c| {
                let next = remap.len();
                *remap.entry(c).or_insert(next)
            })
            .collect();
        Ok(Partition::new(labels))
    }

    /// Writes one `original_node_id community_id` line per node, sorted by
    /// original id.
    pub fn write<W: Write>(&self, g: &Graph, mut out: W) -> Result<()> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| g.label(i));
        for i in order {
            writeln!(out, "{} {}", g.label(i), self.assignment[i])?;
        }
        Ok(())
    }
}

fn check_cover(g: &Graph, p: &Partition) -> Result<()> {
    if p.len() != g.n() {
        return Err(Error::Domain(format!(
            "partition covers {} nodes but the graph has {}",
            p.len(),
            g.n()
        )));
    }
    Ok(())
}

/// Modularity from a raw community label per node (labels in `0..count`).
/// Shared by [`modularity`] and the exhaustive oracle so both produce
/// bit-identical values.
pub(crate) fn modularity_of_labels(g: &Graph, labels: &[usize], count: usize) -> f64 {
    let mut inner = vec![0.0; count];
    let mut total = vec![0.0; count];
    for i in 0..g.n() {
        let c = labels[i];
        total[c] += g.degrees[i];
        let (t, w) = g.neighbors(i);
        for (&j, &w) in t.iter().zip(w) {
            if labels[j] == c {
                inner[c] += w;
            }
        }
    }
    let two_m = g.two_m;
    inner
        .iter()
        .zip(&total)
        .map(|(&a, &d)| a / two_m - (d / two_m) * (d / two_m))
        .sum()
}

/// Newman modularity `(1/2m) Σ_ij [a_ij − d_i d_j / 2m] δ(c_i, c_j)`.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64> {
    check_cover(g, p)?;
    if g.two_m <= 0.0 {
        return Err(Error::Domain(
            "modularity is undefined for a graph without edges".into(),
        ));
    }
    Ok(modularity_of_labels(g, &p.assignment, p.count))
}

/// Contracts every community of `p` to one node. Intra-community weight
/// (over ordered pairs) becomes the diagonal, so modularity of `p` equals
/// modularity of the singleton partition on the result.
pub fn aggregate(g: &Graph, p: &Partition) -> Graph {
    assert_eq!(p.len(), g.n(), "partition does not match graph");
    let count = p.count;
    let members = p.members();
    let mut acc = vec![0.0; count];
    let mut mark = vec![false; count];
    let mut touched: Vec<usize> = Vec::new();
    let mut offsets = Vec::with_capacity(count + 1);
    offsets.push(0);
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    let mut degrees = Vec::with_capacity(count);
    for group in &members {
        let mut degree = 0.0;
        for &i in group {
            degree += g.degrees[i];
            let (t, w) = g.neighbors(i);
            for (&j, &w) in t.iter().zip(w) {
                let d = p.assignment[j];
                if !mark[d] {
                    mark[d] = true;
                    touched.push(d);
                }
                acc[d] += w;
            }
        }
        touched.sort_unstable();
        for &d in &touched {
            targets.push(d);
            weights.push(acc[d]);
            acc[d] = 0.0;
            mark[d] = false;
        }
        touched.clear();
        offsets.push(targets.len());
        degrees.push(degree);
    }
    Graph {
        offsets,
        targets,
        weights,
        degrees,
        two_m: g.two_m,
        labels: (0..count as u64).collect(),
    }
}

/// Whether the members of community `c` induce a connected subgraph.
pub fn community_is_connected(g: &Graph, p: &Partition, c: usize) -> Result<bool> {
    check_cover(g, p)?;
    if c >= p.count {
        return Err(Error::Domain(format!(
            "community {c} does not exist (partition has {})",
            p.count
        )));
    }
    let members: Vec<usize> = (0..g.n()).filter(|&i| p.assignment[i] == c).collect();
    let mut seen = vec![false; g.n()];
    let mut stack = vec![members[0]];
    seen[members[0]] = true;
    let mut reached = 1;
    while let Some(i) = stack.pop() {
        let (t, w) = g.neighbors(i);
        for (&j, &w) in t.iter().zip(w) {
            if w > 0.0 && !seen[j] && p.assignment[j] == c {
                seen[j] = true;
                reached += 1;
                stack.push(j);
            }
        }
    }
    Ok(reached == members.len())
}

/// Splits every community into its connected components. Never lowers
/// modularity: no intra-community weight is lost and the null-model term
/// can only shrink.
pub fn split_disconnected(g: &Graph, p: &Partition) -> Partition {
    let n = g.n();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        stack.push(s);
        while let Some(i) = stack.pop() {
            let (t, _) = g.neighbors(i);
            for &j in t {
                if label[j] == usize::MAX && p.assignment[j] == p.assignment[s] {
                    label[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    Partition::new(label)
}
