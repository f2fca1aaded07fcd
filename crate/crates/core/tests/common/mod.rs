#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use locale_core::{Graph, Partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, p) with unit weights.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v, 1.0));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// G(n, p) with weights in [0.5, 3) and occasional self-loops.
pub fn weighted_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        if rng.gen_bool(0.1) {
            edges.push((u, u, rng.gen_range(0.5..3.0)));
        }
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v, rng.gen_range(0.5..3.0)));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// `m` uniformly random edges between distinct nodes.
pub fn gnm(n: usize, m: usize, seed: u64) -> Graph {
    let mut rng = rng(seed);
    let edges: Vec<_> = (0..m)
        .map(|_| {
            let u = rng.gen_range(0..n);
            let mut v = rng.gen_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            (u, v, 1.0)
        })
        .collect();
    Graph::from_edges(n, edges).unwrap()
}

pub fn random_partition(n: usize, max_communities: usize, seed: u64) -> Partition {
    let mut rng = rng(seed);
    Partition::new((0..n).map(|_| rng.gen_range(0..max_communities)).collect())
}

pub fn barbell() -> Graph {
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

pub fn bundled_data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// Directory holding user-provided datasets (`LOCALE_DATA_DIR`), falling
/// back to the bundled test data.
pub fn data_dir() -> PathBuf {
    std::env::var_os("LOCALE_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(bundled_data)
}

pub fn load(path: &Path) -> Graph {
    Graph::load_edge_list(BufReader::new(File::open(path).unwrap()), false).unwrap()
}

pub fn zachary() -> Graph {
    load(&bundled_data().join("zachary.txt"))
}

/// First existing file among `names` in [`data_dir`] or the bundled data.
pub fn find_dataset(names: &[&str]) -> Option<PathBuf> {
    [data_dir(), bundled_data()]
        .iter()
        .flat_map(|dir| names.iter().map(move |n| dir.join(n)))
        .find(|p| p.is_file())
}
