//! Replays the checked-in fuzz seeds through the same checks the fuzz
//! targets make, so parser regressions show up in `cargo test`.

use std::fs;
use std::path::PathBuf;

use locale_core::graph::modularity;
use locale_core::{Embedding, Graph, Partition};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn edge_list_seeds() {
    let mut accepted = Vec::new();
    for (name, data) in seeds("edge_list") {
        for weighted in [false, true] {
            let Ok(g) = Graph::load_edge_list(&data[..], weighted) else {
                continue;
            };
            let mut out = Vec::new();
            g.write_edge_list(&mut out).unwrap();
            let back = Graph::load_edge_list(&out[..], true).unwrap();
            assert_eq!(back.labelled_edges(), g.labelled_edges(), "{name}");
            accepted.push(format!("{name}/{weighted}"));
        }
    }
    accepted.sort();
    assert_eq!(
        accepted,
        [
            "max_id/false",
            "max_id/true",
            "negative_weight/false",
            "triangle/false",
            "triangle/true",
            "weighted_self_loop/false",
            "weighted_self_loop/true"
        ]
    );
}

#[test]
fn partition_seeds() {
    let g = Graph::parse_edge_list("0 1\n1 2\n2 0\n2 3\n3 4\n4 5\n5 3\n", false).unwrap();
    for (name, data) in seeds("partition") {
        match Partition::read(&data[..], &g) {
            Ok(p) => {
                assert_eq!(name, "two_triangles");
                assert!((modularity(&g, &p).unwrap() - 5.0 / 14.0).abs() < 1e-15);
            }
            Err(e) => assert_ne!(name, "two_triangles", "{e}"),
        }
    }
}

#[test]
fn embedding_dump_seeds() {
    let g = Graph::parse_edge_list("0 1\n1 2\n2 0\n2 3\n", false).unwrap();
    for (name, data) in seeds("embedding_dump") {
        match Embedding::read(&data[..], &g) {
            Ok(e) => {
                assert_eq!(name, "mixed");
                let mut out = Vec::new();
                e.write(&g, &mut out).unwrap();
                assert_eq!(
                    Embedding::read(&out[..], &g).unwrap().vectors(),
                    e.vectors()
                );
            }
            Err(err) => assert_ne!(name, "mixed", "{err}"),
        }
    }
}
