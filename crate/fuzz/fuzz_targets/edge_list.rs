#![no_main]

use libfuzzer_sys::fuzz_target;
use locale_core::Graph;

fuzz_target!(|data: &[u8]| {
    for weighted in [false, true] {
        let Ok(g) = Graph::load_edge_list(data, weighted) else {
            continue;
        };
        let mut out = Vec::new();
        g.write_edge_list(&mut out).unwrap();
        let back = Graph::load_edge_list(&out[..], true).unwrap();
        assert_eq!(back.labelled_edges(), g.labelled_edges());
    }
});
