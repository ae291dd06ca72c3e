//! Greedy and beam decoding with legality masking.

use std::cmp::Reverse;

use super::features::featurize;
use super::model::{Decision, Model, StepScores};
use crate::eval::extract_brackets;
use crate::transition::{apply_action, ActionKind, AjAction, ParserState};
use crate::tree::{ConstituencyTree, Label, Token};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub tree: ConstituencyTree,
    pub actions: Vec<AjAction>,
    pub score: i64,
}

/// Sort key matching the derived action order.
fn order(x: &Decision) -> (bool, usize, usize, usize) {
    (x.new != 0, x.target, x.parent, x.new)
}

pub fn decode_greedy(model: &Model, tokens: &[Token]) -> Decoded {
    let mut state = ParserState::new();
    let mut actions = Vec::with_capacity(tokens.len());
    let mut prev = None;
    let mut score = 0;
    for token in tokens {
        let s = model.log_scores(&featurize(&state, tokens, prev), state.tree().chain_len());
        let x = s.argmax();
        score += s.total(x);
        let action = model.decode(x);
        state = apply_action(&state, token, &action).expect("argmax is over legal actions");
        prev = Some(action.kind());
        actions.push(action);
    }
    Decoded {
        tree: state.into_tree(),
        actions,
        score,
    }
}

struct Hyp {
    state: ParserState,
    score: i64,
    prev: Option<ActionKind>,
    /// Index into the previous step's history.
    back: usize,
}

/// The `k` best classes of `scores[from..]`, lower class first on ties.
fn top_classes(scores: &[i64], from: usize, k: usize) -> Vec<usize> {
    let mut classes: Vec<usize> = (from..scores.len()).collect();
    classes.sort_by_key(|&c| (Reverse(scores[c]), c));
    classes.truncate(k);
    classes
}

fn expand(
    s: &StepScores,
    base: i64,
    hyp: usize,
    beam: usize,
    out: &mut Vec<(i64, usize, Decision)>,
) {
    for d in 0..s.chain_len.max(1) {
        let parents = top_classes(s.parent_at(d), s.min_parent(), beam);
        for &p in &parents {
            let x = Decision {
                target: d,
                parent: p,
                new: 0,
            };
            out.push((base + s.total(x), hyp, x));
        }
        if s.allows_juxtapose() {
            for q in top_classes(s.new_at(d), 1, beam) {
                for &p in &parents {
                    let x = Decision {
                        target: d,
                        parent: p,
                        new: q,
                    };
                    out.push((base + s.total(x), hyp, x));
                }
            }
        }
    }
}

/// Beam search over summed factor scores. `beam = 1` is identical to
/// [`decode_greedy`].
pub fn decode_beam(model: &Model, tokens: &[Token], beam: usize) -> Decoded {
    let beam = beam.max(1);
    let mut hyps = vec![Hyp {
        state: ParserState::new(),
        score: 0,
        prev: None,
        back: 0,
    }];
    let mut history: Vec<Vec<(usize, Decision)>> = Vec::with_capacity(tokens.len());
    let mut candidates = Vec::new();
    for token in tokens {
        candidates.clear();
        for (h, hyp) in hyps.iter().enumerate() {
            let s = model.log_scores(
                &featurize(&hyp.state, tokens, hyp.prev),
                hyp.state.tree().chain_len(),
            );
            expand(&s, hyp.score, h, beam, &mut candidates);
        }
        let key = |c: &(i64, usize, Decision)| (Reverse(c.0), c.1, order(&c.2));
        if candidates.len() > beam {
            candidates.select_nth_unstable_by_key(beam - 1, key);
            candidates.truncate(beam);
        }
        candidates.sort_unstable_by_key(key);
        let mut step = Vec::with_capacity(candidates.len());
        hyps = candidates
            .iter()
            .map(|&(score, h, x)| {
                let action = model.decode(x);
                let state =
                    apply_action(&hyps[h].state, token, &action).expect("candidates are legal");
                step.push((hyps[h].back, x));
                Hyp {
                    state,
                    score,
                    prev: Some(action.kind()),
                    back: step.len() - 1,
                }
            })
            .collect();
        history.push(step);
    }
    let best = &hyps[0];
    let mut actions = Vec::with_capacity(tokens.len());
    let mut at = best.back;
    for step in history.iter().rev() {
        let (back, x) = step[at];
        actions.push(model.decode(x));
        at = back;
    }
    actions.reverse();
    Decoded {
        tree: best.state.tree().clone(),
        actions,
        score: best.score,
    }
}

/// The most frequent bracket label; ties go to the smaller label.
pub fn majority_label<'a>(trees: impl IntoIterator<Item = &'a ConstituencyTree>) -> Option<Label> {
    let mut counts = std::collections::BTreeMap::<Label, usize>::new();
    for t in trees {
        for b in extract_brackets(t).iter() {
            *counts.entry(b.label.clone()).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .fold(None, |best: Option<(Label, usize)>, (l, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((l, c)),
        })
        .map(|(l, _)| l)
}

/// Every token attached at the deepest chain node under a new `label` node.
pub fn right_branching_baseline(tokens: &[Token], label: &Label) -> ConstituencyTree {
    let mut state = ParserState::new();
    for token in tokens {
        let depth = state.tree().chain_len().saturating_sub(1);
        state = apply_action(&state, token, &AjAction::attach(depth, Some(label.clone())))
            .expect("deepest attach is always legal");
    }
    state.into_tree()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_action_sequence;
    use crate::predictor::{train, TrainConfig};
    use crate::tree::t;

    fn corpus() -> Vec<ConstituencyTree> {
        [
            "(S (NP Arthur) (VP is (NP (NP King) (PP of (NP the Britons)))))",
            "(S (NP the king) (VP rules (NP Britons)))",
            "(S (NP Arthur) (VP rules (PP of (NP Camelot))))",
            "(NP (NP the Britons) (PP of (NP Camelot)))",
        ]
        .iter()
        .map(|s| t(s))
        .collect()
    }

    #[test]
    fn memorized_tree_is_reproduced() {
        let gold = &corpus()[0];
        let model = train(
            std::slice::from_ref(gold),
            TrainConfig { epochs: 5, seed: 3 },
            |_| {},
        )
        .unwrap();
        let out = decode_greedy(&model, &gold.tokens());
        assert_eq!(&out.tree, gold);
        assert_eq!(out.actions, oracle_action_sequence(gold).unwrap());
        assert_eq!(decode_beam(&model, &gold.tokens(), 10).tree, *gold);
    }

    #[test]
    fn beam_of_one_is_greedy() {
        let trees = corpus();
        let model = train(&trees[1..], TrainConfig { epochs: 2, seed: 5 }, |_| {}).unwrap();
        for tree in &trees {
            let tokens = tree.tokens();
            let g = decode_greedy(&model, &tokens);
            assert_eq!(decode_beam(&model, &tokens, 1), g);
            assert_eq!(g.actions.len(), tokens.len());
            assert_eq!(g.tree.len(), tokens.len());
            assert!(!g.tree.has_unary_chains());
            let b = decode_beam(&model, &tokens, 10);
            assert!(b.score >= g.score);
            assert_eq!(b, decode_beam(&model, &tokens, 10));
        }
    }

    #[test]
    fn untrained_decoding_is_total() {
        let model = train(&[t("(S a)")], TrainConfig { epochs: 1, seed: 1 }, |_| {}).unwrap();
        let single = decode_greedy(&model, &t("(S w)").tokens());
        assert_eq!(single.tree.to_string(), "(S w)");
        let longer = decode_greedy(&model, &t("(S a b c d e)").tokens());
        assert_eq!(longer.tree.len(), 5);
        assert!(decode_greedy(&model, &[]).tree.is_empty());
    }

    #[test]
    fn baseline() {
        let tokens = t("(S a b c)").tokens();
        let x = Label::new("X").unwrap();
        assert_eq!(
            right_branching_baseline(&tokens, &x).to_string(),
            "(X a (X b (X c)))"
        );
        assert_eq!(majority_label(&corpus()).unwrap().as_str(), "NP");
        assert_eq!(majority_label(&[t("(B (A x) y)")]).unwrap().as_str(), "A");
        assert_eq!(majority_label(&[]), None);
    }
}
