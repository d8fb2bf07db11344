use std::io::Write;

use genderalt::corpus::{read_eval_pairs, read_jsonl, toy_corpus, write_jsonl, CorpusError, GTagRecord, GTransRecord};
use genderalt::derive::enumerate_alternatives;

#[test]
fn write_then_read_preserves_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.jsonl");
    let corpus = toy_corpus();
    write_jsonl(&corpus, &path).unwrap();
    let back: Vec<GTransRecord> = read_jsonl(&path).unwrap();
    assert_eq!(back, corpus);
}

#[test]
fn error_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, r#"{{"src": ["a", "b"], "entities": [{{"i": 1, "g": "A"}}]}}"#).unwrap();
    writeln!(f, r#"{{"src": ["a", "b"], "entities": [{{"i": 2, "g": "A"}}]}}"#).unwrap();
    drop(f);
    match read_jsonl::<GTagRecord>(&path) {
        Err(CorpusError::Invalid { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a line-2 error, got {other:?}"),
    }
}

#[test]
fn unknown_label_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("label.jsonl");
    std::fs::write(&path, "{\"src\": [\"a\"], \"entities\": [{\"i\": 0, \"g\": \"X\"}]}\n").unwrap();
    assert!(matches!(read_jsonl::<GTagRecord>(&path), Err(CorpusError::Invalid { line: 1, .. })));
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(read_jsonl::<GTransRecord>("/nonexistent/x.jsonl"), Err(CorpusError::Io { .. })));
}

#[test]
fn eval_pairs_need_matching_sources() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = toy_corpus();
    let r = dir.path().join("r.jsonl");
    let h = dir.path().join("h.jsonl");
    write_jsonl(&corpus[..3], &r).unwrap();
    write_jsonl(&corpus[1..4], &h).unwrap();
    assert!(read_eval_pairs(&r, &h).is_err());
    write_jsonl(&corpus[..2], &h).unwrap();
    assert!(matches!(read_eval_pairs(&r, &h), Err(CorpusError::Mismatch { .. })));
    write_jsonl(&corpus[..3], &h).unwrap();
    assert_eq!(read_eval_pairs(&r, &h).unwrap().len(), 3);
}

#[test]
fn lawyer_is_fixed_in_all_alternatives() {
    let rec = &toy_corpus()[2];
    let alts = enumerate_alternatives(&rec.target, &rec.alignments).unwrap();
    assert_eq!(alts.len(), 4);
    for (_, y) in alts {
        assert!(y.text().starts_with("El abogado"), "{y}");
    }
}
