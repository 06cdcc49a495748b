//! Replays the checked-in fuzz corpus through the parsers.

use std::fs;
use std::path::Path;

use nclmi::io;

type Parser = fn(&str) -> bool;

const TARGETS: &[(&str, Parser, &[&str])] = &[
    ("parse_polynomial", |s| io::parse_polynomial(s).is_ok(), &["ball.json", "matrix.json"]),
    ("parse_tuple", |s| io::parse_tuple(s).is_ok(), &["level2.json", "scalar.json"]),
    ("parse_pencil", |s| io::parse_pencil(s).is_ok(), &["ball.json", "minus.json"]),
    ("parse_boundary_pair", |s| io::parse_boundary_pair(s).is_ok(), &["interval.json", "level2.json"]),
    ("parse_vanishing_space", |s| io::parse_vanishing_space(s).is_ok(), &["interval.json"]),
];

#[test]
fn corpus_replays_without_panics() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    for (target, parse, valid) in TARGETS {
        let dir = root.join(target);
        let mut seen = 0;
        for entry in fs::read_dir(&dir).unwrap_or_else(|e| panic!("{}: {e}", dir.display())) {
            let path = entry.unwrap().path();
            let bytes = fs::read(&path).unwrap();
            let name = path.file_name().unwrap().to_str().unwrap();
            let ok = std::str::from_utf8(&bytes).map(parse).unwrap_or(false);
            assert_eq!(ok, valid.contains(&name), "{target}/{name}");
            seen += 1;
        }
        assert!(seen >= 3, "{target} corpus too small");
    }
}

#[test]
fn truncations_never_panic() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    for (target, parse, _) in TARGETS {
        for entry in fs::read_dir(root.join(target)).unwrap() {
            let text = fs::read_to_string(entry.unwrap().path()).unwrap();
            for cut in 0..text.len() {
                if text.is_char_boundary(cut) {
                    let _ = parse(&text[..cut]);
                }
            }
        }
    }
}
