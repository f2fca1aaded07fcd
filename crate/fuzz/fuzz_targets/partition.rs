#![no_main]

use libfuzzer_sys::fuzz_target;
use locale_core::graph::modularity;
use locale_core::{Graph, Partition};

fuzz_target!(|data: &[u8]| {
    let g = Graph::parse_edge_list("0 1\n1 2\n2 0\n2 3\n3 4\n4 5\n5 3\n", false).unwrap();
    if let Ok(p) = Partition::read(data, &g) {
        assert_eq!(p.len(), g.n());
        let q = modularity(&g, &p).unwrap();
        assert!((-0.5..=1.0).contains(&q));
    }
});
