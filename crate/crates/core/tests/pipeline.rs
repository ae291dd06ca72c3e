use std::path::PathBuf;

use ajparse::eval::{extract_brackets, score};
use ajparse::isr::{phi, replay, translate_sequence, xi};
use ajparse::oracle::oracle_action_sequence;
use ajparse::predictor::{decode_beam, decode_greedy, train, Model, TrainConfig};
use ajparse::transition::apply_sequence;
use ajparse::tree::ConstituencyTree;
use ajparse::treebank::{load_corpus, parse_bracketed, write_bracketed, LoadOptions};

fn fixtures() -> Vec<ConstituencyTree> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures.mrg");
    load_corpus(path, LoadOptions::default())
        .unwrap()
        .trees()
        .cloned()
        .collect()
}

#[test]
fn fixtures_are_normalized() {
    let trees = fixtures();
    assert_eq!(trees.len(), 20);
    for t in &trees {
        assert!(!t.has_unary_chains(), "{t}");
        let text = write_bracketed(t);
        assert!(!text.contains("-NONE-") && !text.contains("-SBJ"), "{text}");
        assert_eq!(parse_bracketed(&text).unwrap(), *t);
    }
    assert_eq!(extract_brackets(&trees[0]).iter().count(), 7);
}

#[test]
fn oracle_transition_and_isr_agree() {
    for tree in fixtures() {
        let tokens = tree.tokens();
        let actions = oracle_action_sequence(&tree).unwrap();
        assert_eq!(actions.len(), tokens.len());
        assert_eq!(apply_sequence(&tokens, &actions).unwrap(), tree);
        let isr = translate_sequence(&tokens, &actions).unwrap();
        assert_eq!(isr.len(), tokens.len() + 2 * tree.internal_count());
        let end = replay(&tokens, &isr).unwrap();
        assert_eq!(phi(&end).unwrap().tree(), xi(&tree).tree());
    }
}

#[test]
fn predictor_round_trip_through_text() {
    let trees = fixtures();
    let model = train(&trees, TrainConfig { epochs: 8, seed: 2 }, |_| {}).unwrap();
    let reloaded = Model::from_text(&model.to_text()).unwrap();
    let parsed: Vec<_> = trees
        .iter()
        .map(|t| decode_greedy(&reloaded, &t.tokens()).tree)
        .collect();
    for (p, t) in parsed.iter().zip(&trees) {
        assert_eq!(p.tokens(), t.tokens());
        assert_eq!(decode_beam(&reloaded, &t.tokens(), 1).tree, *p);
    }
    assert!(score(&trees, &parsed).unwrap().f1 > 90.0);
}
