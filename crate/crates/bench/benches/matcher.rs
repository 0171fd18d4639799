use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ontomatch_core::graph::parse_turtle;
use ontomatch_core::{high_recall_match, ExtractorKind, Ontology};

const WORDS: &[&str] = &[
    "paper",
    "review",
    "author",
    "chair",
    "committee",
    "member",
    "conference",
    "session",
    "track",
    "topic",
    "person",
    "document",
    "abstract",
    "event",
    "program",
    "organizer",
    "workshop",
    "poster",
    "demo",
    "student",
];

fn ontology(ns: &str, classes: usize, seed: u64) -> Ontology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ttl = format!(
        "@prefix : <http://{ns}.example/onto#> .\n@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n"
    );
    for i in 0..classes {
        let words: Vec<&str> = (0..rng.random_range(1..4))
            .map(|_| WORDS[rng.random_range(0..WORDS.len())])
            .collect();
        ttl.push_str(&format!(
            ":C{i} rdfs:label \"{}\" ; rdfs:comment \"a {} thing\" .\n",
            words.join(" "),
            words[0]
        ));
    }
    parse_turtle(ttl.as_bytes()).unwrap()
}

fn matcher(c: &mut Criterion) {
    let mut group = c.benchmark_group("high_recall_match");
    group.sample_size(20);
    for n in [200, 1000] {
        let (o1, o2) = (ontology("a", n, 1), ontology("b", n, 2));
        group.bench_with_input(BenchmarkId::from_parameter(n), &(o1, o2), |b, (o1, o2)| {
            b.iter(|| high_recall_match(o1, o2, ExtractorKind::ForTransformers))
        });
    }
    group.finish();
}

criterion_group!(benches, matcher);
criterion_main!(benches);
