mod common;

use hyperdoc::composition::{CompositionConfig, CompositionMethod};
use hyperdoc::corpus::*;

#[test]
fn synthetic_files_load_cleanly() {
    let files = common::synthetic_corpus(5);
    let table = load_embeddings(&files.poincare, Flavor::Poincare).unwrap();
    let r = table.report();
    assert_eq!(table.len(), 3 * common::WORDS_PER_CLASS + common::SHARED_WORDS);
    assert_eq!(table.dim(), common::DIM);
    assert_eq!(r.parsed + r.skipped(), r.total_lines);
    assert_eq!(r.malformed, 0);

    let corpus = load_corpus(&files.corpus).unwrap();
    assert_eq!(corpus.len(), common::DOCS);
    assert_eq!(corpus.labels(), &common::CLASSES);
    let cr = corpus.report();
    assert_eq!(cr.parsed + cr.rejected, cr.total_lines);
}

#[test]
fn representations_cover_every_document_and_stay_in_ball() {
    let files = common::synthetic_corpus(6);
    let table = load_embeddings(&files.poincare, Flavor::Poincare).unwrap();
    let corpus = load_corpus(&files.corpus).unwrap();
    for m in CompositionMethod::ALL {
        let rep = represent_corpus(&corpus, &table, m, &CompositionConfig::default(), &TokenizerConfig::default()).unwrap();
        assert_eq!(rep.vectors.len(), corpus.len());
        assert_eq!(rep.labels, corpus.class_ids());
        assert!(rep.vectors.iter().all(|v| v.iter().map(|x| x * x).sum::<f64>() < 1.0));
        assert!(rep.diagnostics.oov_rate() > 0.0 && rep.diagnostics.oov_rate() < 0.2);
    }
}

#[test]
fn loading_and_representation_are_deterministic() {
    let files = common::synthetic_corpus(7);
    let load = || {
        let t = load_embeddings(&files.poincare, Flavor::Poincare).unwrap();
        let c = load_corpus(&files.corpus).unwrap();
        let r = represent_corpus(&c, &t, CompositionMethod::Lca, &CompositionConfig::default(), &TokenizerConfig::default()).unwrap();
        (t, r)
    };
    let (t1, r1) = load();
    let (t2, r2) = load();
    assert_eq!(t1, t2);
    assert_eq!(r1, r2);
}

#[test]
fn word2vec_header_and_crlf_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("e.txt");
    std::fs::write(&emb, "2 2\r\nfoo 0.1 0.2\r\nbar -0.3 0.4\r\n").unwrap();
    let t = load_embeddings(&emb, Flavor::Poincare).unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!(t.get("bar").unwrap(), &[-0.3, 0.4]);

    let c = dir.path().join("c.tsv");
    std::fs::write(&c, "x\tfoo bar\r\ny\tbar\r\n").unwrap();
    let corpus = load_corpus(&c).unwrap();
    assert_eq!(corpus.records()[0].text, "foo bar");
}
