//! Labeled bracket scoring (LP, LR, F1, exact match).

use std::fmt;
use std::ops::{Add, AddAssign};

use thiserror::Error;

use crate::tree::{ConstituencyTree, Label, Node};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bracket {
    pub label: Label,
    /// Inclusive leaf indices.
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.label, self.start, self.end)
    }
}

/// Sorted multiset of brackets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BracketSet(Vec<Bracket>);

impl BracketSet {
    pub fn from_brackets(mut brackets: Vec<Bracket>) -> Self {
        brackets.sort();
        BracketSet(brackets)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Bracket> {
        self.0.iter()
    }

    /// Size of the multiset intersection.
    pub fn matched(&self, other: &BracketSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// One bracket per internal node of the tree with unary chains restored.
/// Preterminal tags are not brackets.
pub fn extract_brackets(tree: &ConstituencyTree) -> BracketSet {
    fn walk(node: &Node, start: usize, out: &mut Vec<Bracket>) -> usize {
        match node {
            Node::Leaf(_) => start + 1,
            Node::Internal(n) => {
                let end = n.children().iter().fold(start, |pos, c| walk(c, pos, out));
                out.push(Bracket {
                    label: n.label().clone(),
                    start,
                    end: end - 1,
                });
                end
            }
        }
    }
    let mut out = Vec::new();
    if let Some(root) = tree.restore_unary_chains().root_node() {
        walk(&root, 0, &mut out);
    }
    BracketSet::from_brackets(out)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{gold} gold trees but {predicted} predicted trees")]
    CorpusLength { gold: usize, predicted: usize },
    #[error("sentence {index}: gold has {gold} tokens, prediction has {predicted}")]
    SentenceLength {
        index: usize,
        gold: usize,
        predicted: usize,
    },
    #[error("nothing to score")]
    Empty,
}

/// Raw counts; merging is associative and commutative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub matched: usize,
    pub gold: usize,
    pub predicted: usize,
    pub exact: usize,
    pub sentences: usize,
}

impl Counts {
    pub fn sentence(gold: &ConstituencyTree, predicted: &ConstituencyTree) -> Counts {
        let g = extract_brackets(gold);
        let p = extract_brackets(predicted);
        Counts {
            matched: g.matched(&p),
            gold: g.len(),
            predicted: p.len(),
            exact: usize::from(g == p),
            sentences: 1,
        }
    }

    pub fn report(&self) -> ScoreReport {
        let pct = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                100.0 * num as f64 / den as f64
            }
        };
        let lp = pct(self.matched, self.predicted);
        let lr = pct(self.matched, self.gold);
        let f1 = if lp + lr > 0.0 {
            2.0 * lp * lr / (lp + lr)
        } else {
            0.0
        };
        let em = if self.sentences == 0 {
            0.0
        } else {
            self.exact as f64 / self.sentences as f64
        };
        ScoreReport {
            em,
            f1,
            lp,
            lr,
            counts: *self,
        }
    }
}

impl Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            matched: self.matched + o.matched,
            gold: self.gold + o.gold,
            predicted: self.predicted + o.predicted,
            exact: self.exact + o.exact,
            sentences: self.sentences + o.sentences,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreReport {
    /// Fraction of sentences with identical bracket multisets.
    pub em: f64,
    /// Percentages.
    pub f1: f64,
    pub lp: f64,
    pub lr: f64,
    pub counts: Counts,
}

/// `EM` is printed as a percentage like the other metrics.
impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        writeln!(f, "EM {:.2}", 100.0 * self.em)?;
        writeln!(f, "F1 {:.2}", self.f1)?;
        writeln!(f, "LP {:.2}", self.lp)?;
        writeln!(f, "LR {:.2}", self.lr)?;
        write!(
            f,
            "sentences {} exact {} matched {} gold {} predicted {}",
            c.sentences, c.exact, c.matched, c.gold, c.predicted
        )
    }
}

pub fn check_pair(
    index: usize,
    gold: &ConstituencyTree,
    predicted: &ConstituencyTree,
) -> Result<(), EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::SentenceLength {
            index,
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    Ok(())
}

/// Micro-averaged corpus scores.
pub fn score(
    gold: &[ConstituencyTree],
    predicted: &[ConstituencyTree],
) -> Result<ScoreReport, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::CorpusLength {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut total = Counts::default();
    for (i, (g, p)) in gold.iter().zip(predicted).enumerate() {
        check_pair(i, g, p)?;
        total += Counts::sentence(g, p);
    }
    Ok(total.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::{apply_action, legal_actions, ParserState};
    use crate::tree::t;
    use proptest::prelude::*;

    fn spans(tree: &str) -> Vec<String> {
        extract_brackets(&t(tree))
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    #[test]
    fn brackets() {
        assert_eq!(spans("(S (NP a) (VP b))"), ["NP(0,0)", "S(0,1)", "VP(1,1)"]);
        assert_eq!(spans("(S+NP a)"), ["NP(0,0)", "S(0,0)"]);
        // Hand count for the running example: seven phrases, "King" included.
        let fig = "(S (NP Arthur) (VP is (NP (NP King) (PP of (NP the Britons)))))";
        assert_eq!(
            spans(fig),
            ["NP(0,0)", "NP(2,2)", "NP(2,5)", "NP(4,5)", "PP(3,5)", "S(0,5)", "VP(1,5)"]
        );
        assert!(spans("()").is_empty());
    }

    #[test]
    fn hand_counted_example() {
        let r = score(&[t("(S (NP a) (VP b))")], &[t("(S (NP a) (NP b))")]).unwrap();
        assert_eq!(
            (r.counts.matched, r.counts.gold, r.counts.predicted),
            (2, 3, 3)
        );
        assert!((r.lp - 66.67).abs() < 0.01 && (r.lr - 66.67).abs() < 0.01);
        assert_eq!(r.em, 0.0);
    }

    #[test]
    fn duplicates_match_one_to_one() {
        let gold = t("(S (S+S a))");
        let pred = t("(S a)");
        let r = score(&[gold], &[pred]).unwrap();
        assert_eq!(
            (r.counts.matched, r.counts.gold, r.counts.predicted),
            (1, 3, 1)
        );
    }

    #[test]
    fn errors() {
        assert_eq!(score(&[], &[]), Err(EvalError::Empty));
        assert_eq!(
            score(&[t("(S a)")], &[]),
            Err(EvalError::CorpusLength {
                gold: 1,
                predicted: 0
            })
        );
        assert_eq!(
            score(&[t("(S a)"), t("(S a b)")], &[t("(S a)"), t("(S a)")]),
            Err(EvalError::SentenceLength {
                index: 1,
                gold: 2,
                predicted: 1
            })
        );
    }

    #[test]
    fn report_format() {
        let r = score(&[t("(S (NP a) (VP b))")], &[t("(S (NP a) (NP b))")]).unwrap();
        assert_eq!(
            r.to_string(),
            "EM 0.00\nF1 66.67\nLP 66.67\nLR 66.67\nsentences 1 exact 0 matched 2 gold 3 predicted 3"
        );
    }

    /// A second tree over the same words, grown by random legal actions.
    fn arb_pair() -> impl Strategy<Value = (ConstituencyTree, ConstituencyTree)> {
        crate::tree::tests::arb_tree()
            .prop_flat_map(|a| {
                let n = a.len();
                (Just(a), prop::collection::vec(any::<u32>(), n))
            })
            .prop_map(|(a, picks)| {
                let vocab: Vec<Label> = ["S", "NP", "VP"]
                    .iter()
                    .map(|l| Label::new(l).unwrap())
                    .collect();
                let mut state = ParserState::new();
                for (token, pick) in a.tokens().iter().zip(picks) {
                    let legal = legal_actions(&state, &vocab);
                    let action = &legal[pick as usize % legal.len()];
                    state = apply_action(&state, token, action).unwrap();
                }
                (a, state.into_tree())
            })
    }

    proptest! {
        #[test]
        fn self_score_is_perfect(tree in crate::tree::tests::arb_tree()) {
            let r = score(std::slice::from_ref(&tree), std::slice::from_ref(&tree)).unwrap();
            prop_assert_eq!((r.f1, r.lp, r.lr, r.em), (100.0, 100.0, 100.0, 1.0));
        }

        #[test]
        fn swap_and_bounds((a, b) in arb_pair()) {
            let ab = score(std::slice::from_ref(&a), std::slice::from_ref(&b)).unwrap();
            let ba = score(std::slice::from_ref(&b), std::slice::from_ref(&a)).unwrap();
            prop_assert_eq!(ab.lp, ba.lr);
            prop_assert_eq!(ab.lr, ba.lp);
            prop_assert!(ab.f1 <= ab.lp.max(ab.lr) + 1e-9);
            prop_assert!(ab.f1 >= ab.lp.min(ab.lr) - 1e-9);
        }
    }
}
