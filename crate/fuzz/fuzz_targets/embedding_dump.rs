#![no_main]

use libfuzzer_sys::fuzz_target;
use locale_core::{Embedding, Graph};

fuzz_target!(|data: &[u8]| {
    let g = Graph::parse_edge_list("0 1\n1 2\n2 0\n2 3\n", false).unwrap();
    if let Ok(e) = Embedding::read(data, &g) {
        let mut out = Vec::new();
        e.write(&g, &mut out).unwrap();
        let back = Embedding::read(&out[..], &g).unwrap();
        assert_eq!(back.vectors(), e.vectors());
    }
});
