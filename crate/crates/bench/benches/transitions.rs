use std::hint::black_box;
use std::path::PathBuf;

use ajparse::isr::translate_sequence;
use ajparse::oracle::oracle_action_sequence;
use ajparse::predictor::{decode_beam, decode_greedy, train, TrainConfig};
use ajparse::transition::apply_sequence;
use ajparse::tree::ConstituencyTree;
use ajparse::treebank::{load_corpus, LoadOptions};
use criterion::{criterion_group, criterion_main, Criterion};

fn corpus() -> Vec<ConstituencyTree> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic.mrg");
    load_corpus(path, LoadOptions::default())
        .unwrap()
        .trees()
        .take(500)
        .cloned()
        .collect()
}

fn transitions(c: &mut Criterion) {
    let trees = corpus();
    let sequences: Vec<_> = trees
        .iter()
        .map(|t| oracle_action_sequence(t).unwrap())
        .collect();
    c.bench_function("oracle 500 trees", |b| {
        b.iter(|| {
            trees
                .iter()
                .map(|t| oracle_action_sequence(black_box(t)).unwrap().len())
                .sum::<usize>()
        })
    });
    c.bench_function("apply 500 sequences", |b| {
        b.iter(|| {
            trees
                .iter()
                .zip(&sequences)
                .map(|(t, a)| apply_sequence(&t.tokens(), black_box(a)).unwrap().len())
                .sum::<usize>()
        })
    });
    c.bench_function("translate 500 sequences", |b| {
        b.iter(|| {
            trees
                .iter()
                .zip(&sequences)
                .map(|(t, a)| translate_sequence(&t.tokens(), black_box(a)).unwrap().len())
                .sum::<usize>()
        })
    });
}

fn decoding(c: &mut Criterion) {
    let trees = corpus();
    let model = train(&trees, TrainConfig { epochs: 3, seed: 1 }, |_| {}).unwrap();
    let sentences: Vec<_> = trees
        .iter()
        .take(100)
        .map(ConstituencyTree::tokens)
        .collect();
    c.bench_function("greedy 100 sentences", |b| {
        b.iter(|| {
            sentences
                .iter()
                .map(|s| decode_greedy(&model, black_box(s)).score)
                .sum::<i64>()
        })
    });
    c.bench_function("beam-10 100 sentences", |b| {
        b.iter(|| {
            sentences
                .iter()
                .map(|s| decode_beam(&model, black_box(s), 10).score)
                .sum::<i64>()
        })
    });
}

criterion_group!(benches, transitions, decoding);
criterion_main!(benches);
