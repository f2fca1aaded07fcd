use std::fs;
use std::path::PathBuf;

use locale_cli::bench::Manifest;

#[test]
fn manifest_seeds() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/manifest");
    let mut accepted = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if let Ok(m) = Manifest::parse(&text) {
            accepted.push((
                path.file_name().unwrap().to_string_lossy().into_owned(),
                m.datasets.len(),
            ));
        }
    }
    accepted.sort();
    assert_eq!(accepted, [("empty".to_owned(), 0), ("full".to_owned(), 2)]);
}
