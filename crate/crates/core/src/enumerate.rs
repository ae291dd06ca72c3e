//! Exhaustive checks over every small tree and stack.
//!
//! Trees are enumerated directly from their shape (no transition system
//! involved), with leaf `i` always the word `w<i>`. The checks are:
//!
//! * `reachability`: the attach-juxtapose states reachable with `k` tokens
//!   are exactly the enumerated trees with `k` leaves;
//! * `uniqueness`: each such tree is produced by exactly one action sequence;
//! * `oracle`: the oracle sequence rebuilds the tree;
//! * `phi-gamma`: `phi(gamma(t, i)) = (t, i)` for every tree and mark;
//! * `gamma-phi`: `gamma(phi(s)) = s` for every reachable legal stack;
//! * `stack-coverage`: every `gamma(t, i)` is a reachable stack;
//! * `reduce-step`: one reduce maps `(t, i)` to `(t, i - 1)`;
//! * `legality`: the static stack characterisation agrees with reduction.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::isr::{
    gamma, is_legal_stack, isr_apply, phi, stack_defect, AugmentedTree, IsrAction, IsrStack,
    StackElement,
};
use crate::oracle::{oracle_trace, OracleCase};
use crate::transition::{apply_action, apply_sequence, legal_actions, AjAction, ParserState};
use crate::tree::{ConstituencyTree, Internal, Label, Node, Token};

/// Deliberate faults for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    /// `gamma` opens one chain node too few.
    Gamma,
    /// The last oracle action loses or gains its parent label.
    Oracle,
}

pub fn word(i: usize) -> Token {
    Token::untagged(format!("w{i}")).expect("non-empty word")
}

pub fn words(n: usize) -> Vec<Token> {
    (0..n).map(word).collect()
}

/// `labels` as atomic labels `A`, `B`, `C`, ...
pub fn label_alphabet(size: usize) -> Vec<Label> {
    (0..size)
        .map(|i| Label::atomic(char::from(b'A' + i as u8).to_string()).expect("letter"))
        .collect()
}

fn compositions(total: usize) -> Vec<Vec<usize>> {
    if total == 0 {
        return vec![vec![]];
    }
    (1..=total)
        .flat_map(|first| {
            compositions(total - first)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
        })
        .collect()
}

struct Shapes<'a> {
    labels: &'a [Label],
    memo: FxHashMap<(usize, usize), Vec<Node>>,
}

impl Shapes<'_> {
    /// Every unary-chain-free node covering leaves `start..start + len`.
    fn nodes(&mut self, start: usize, len: usize) -> Vec<Node> {
        if let Some(v) = self.memo.get(&(start, len)) {
            return v.clone();
        }
        let mut out = Vec::new();
        if len == 1 {
            let leaf = Node::leaf(word(start));
            for x in self.labels {
                out.push(Node::Internal(Arc::new(Internal::from_parts(
                    x.clone(),
                    vec![leaf.clone()],
                ))));
            }
            out.push(leaf);
        } else {
            let mut child_lists = Vec::new();
            for parts in compositions(len).into_iter().filter(|p| p.len() >= 2) {
                let mut partial: Vec<Vec<Node>> = vec![vec![]];
                let mut at = start;
                for part in parts {
                    let options = self.nodes(at, part);
                    at += part;
                    partial = partial
                        .into_iter()
                        .flat_map(|prefix| {
                            options.iter().map(move |o| {
                                let mut p = prefix.clone();
                                p.push(o.clone());
                                p
                            })
                        })
                        .collect();
                }
                child_lists.extend(partial);
            }
            for x in self.labels {
                for children in &child_lists {
                    out.push(Node::Internal(Arc::new(Internal::from_parts(
                        x.clone(),
                        children.clone(),
                    ))));
                }
            }
        }
        self.memo.insert((start, len), out.clone());
        out
    }
}

/// All unary-chain-free trees with exactly `n ≥ 1` leaves over `labels`.
pub fn enumerate_trees(n: usize, labels: &[Label]) -> Vec<ConstituencyTree> {
    let mut shapes = Shapes {
        labels,
        memo: FxHashMap::default(),
    };
    shapes
        .nodes(0, n)
        .into_iter()
        .filter_map(ConstituencyTree::from_node)
        .collect()
}

/// Number of distinct action sequences reaching each state, level by level.
pub fn count_derivations(n: usize, labels: &[Label]) -> Vec<FxHashMap<ConstituencyTree, u64>> {
    let mut levels = vec![FxHashMap::from_iter([(ConstituencyTree::empty(), 1u64)])];
    let tokens = words(n);
    for token in &tokens {
        let mut next = FxHashMap::default();
        for (tree, &count) in levels.last().expect("level 0") {
            let state = ParserState::from_tree(tree.clone());
            for a in legal_actions(&state, labels) {
                let succ = apply_action(&state, token, &a).expect("legal action");
                *next.entry(succ.into_tree()).or_insert(0) += count;
            }
        }
        levels.push(next);
    }
    levels
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub name: &'static str,
    pub checked: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default)]
pub struct EnumerationReport {
    pub n_max: usize,
    pub vocab_size: usize,
    /// Enumerated trees with `k + 1` leaves at index `k`.
    pub trees: Vec<usize>,
    pub tallies: Vec<Tally>,
    pub cases: BTreeMap<OracleCase, usize>,
    /// Reachable legal stacks that hold a lone token.
    pub bare_stacks: usize,
    pub witnesses: Vec<String>,
}

const MAX_WITNESSES: usize = 10;

impl EnumerationReport {
    fn check(&mut self, name: &'static str, ok: bool, witness: impl FnOnce() -> String) {
        let tally = match self.tallies.iter_mut().find(|t| t.name == name) {
            Some(t) => t,
            None => {
                self.tallies.push(Tally {
                    name,
                    checked: 0,
                    failed: 0,
                });
                self.tallies.last_mut().expect("just pushed")
            }
        };
        tally.checked += 1;
        if !ok {
            tally.failed += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(format!("{name}: {}", witness()));
            }
        }
    }

    pub fn tally(&self, name: &str) -> Option<&Tally> {
        self.tallies.iter().find(|t| t.name == name)
    }

    pub fn failures(&self) -> usize {
        self.tallies.iter().map(|t| t.failed).sum()
    }

    pub fn case_count(&self, case: OracleCase) -> usize {
        self.cases.get(&case).copied().unwrap_or(0)
    }

    /// Every case except the unreachable one was hit, and that one never.
    pub fn case_coverage_complete(&self) -> bool {
        OracleCase::ALL
            .iter()
            .all(|&c| (self.case_count(c) == 0) == (c == OracleCase::SiblingRoot))
    }
}

impl fmt::Display for EnumerationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_max {} vocab {}", self.n_max, self.vocab_size)?;
        for (k, count) in self.trees.iter().enumerate() {
            writeln!(f, "trees n={} {}", k + 1, count)?;
        }
        for t in &self.tallies {
            writeln!(
                f,
                "check {} checked={} failed={}",
                t.name, t.checked, t.failed
            )?;
        }
        for c in OracleCase::ALL {
            writeln!(f, "case {} {}", c.name(), self.case_count(c))?;
        }
        write!(f, "bare-token stacks {}", self.bare_stacks)?;
        for w in &self.witnesses {
            write!(f, "\nwitness {w}")?;
        }
        Ok(())
    }
}

fn corrupt_gamma(aug: &AugmentedTree, corruption: Option<Corruption>) -> IsrStack {
    match corruption {
        Some(Corruption::Gamma) if aug.mark() >= 0 => gamma(
            &AugmentedTree::new(aug.tree().clone(), aug.mark() - 1).expect("lower mark is valid"),
        ),
        _ => gamma(aug),
    }
}

/// Perturbs the last action of a sequence (negative-control hook).
pub fn corrupt_actions(actions: &mut [AjAction], fallback: &Label) {
    let Some(last) = actions.last_mut() else {
        return;
    };
    let parent = match last.parent_label() {
        Some(_) => None,
        None => Some(fallback.clone()),
    };
    *last = match last {
        AjAction::Attach { target, .. } => AjAction::attach(*target, parent),
        AjAction::Juxtapose {
            target, new_label, ..
        } => AjAction::juxtapose(*target, parent, new_label.clone()),
    };
}

/// A reduce that would build a phrase over a single phrase.
fn makes_unary_chain(stack: &IsrStack) -> bool {
    matches!(
        stack.elements().last(),
        Some(StackElement::Subtree(Node::Internal(n)))
            if matches!(n.children(), [Node::Internal(_)])
    )
}

/// Runs every check over trees with up to `n_max` leaves and `vocab_size`
/// labels.
pub fn run_checks(
    n_max: usize,
    vocab_size: usize,
    corruption: Option<Corruption>,
) -> EnumerationReport {
    let labels = label_alphabet(vocab_size);
    let mut report = EnumerationReport {
        n_max,
        vocab_size,
        ..Default::default()
    };
    let enumerated: Vec<Vec<ConstituencyTree>> =
        (1..=n_max).map(|n| enumerate_trees(n, &labels)).collect();
    report.trees = enumerated.iter().map(Vec::len).collect();

    // Forward search over attach-juxtapose derivations.
    let levels = count_derivations(n_max, &labels);
    for (k, trees) in enumerated.iter().enumerate() {
        let reached = &levels[k + 1];
        let expected: FxHashSet<&ConstituencyTree> = trees.iter().collect();
        let stray = reached.keys().filter(|t| !expected.contains(t)).count();
        report.check(
            "reachability",
            stray == 0 && reached.len() == trees.len(),
            || {
                format!(
                    "{} reachable states, {} trees, {stray} not enumerated, n={}",
                    reached.len(),
                    trees.len(),
                    k + 1
                )
            },
        );
        for tree in trees {
            let count = reached.get(tree).copied().unwrap_or(0);
            report.check("uniqueness", count == 1, || {
                format!("{tree} has {count} derivations")
            });

            let trace = oracle_trace(tree).expect("enumerated trees are unary-chain-free");
            for (_, case) in &trace {
                *report.cases.entry(*case).or_insert(0) += 1;
            }
            let mut actions: Vec<AjAction> = trace.into_iter().map(|(a, _)| a).collect();
            if corruption == Some(Corruption::Oracle) {
                corrupt_actions(&mut actions, &labels[0]);
            }
            let rebuilt = apply_sequence(&tree.tokens(), &actions);
            report.check("oracle", rebuilt.as_ref() == Ok(tree), || {
                format!(
                    "{tree} <- {} gave {rebuilt:?}",
                    crate::transition::format_actions(&actions)
                )
            });
        }
    }

    // Augmented trees; the empty tree is included.
    let mut images = FxHashSet::default();
    let all_trees =
        std::iter::once(ConstituencyTree::empty()).chain(enumerated.iter().flatten().cloned());
    for tree in all_trees {
        for mark in -1..tree.chain_len() as isize {
            let aug = AugmentedTree::new(tree.clone(), mark).expect("mark in range");
            let s = corrupt_gamma(&aug, corruption);
            let back = phi(&s);
            report.check("phi-gamma", back.as_ref() == Ok(&aug), || {
                let back = match &back {
                    Ok(b) => format!("({}, {})", b.tree(), b.mark()),
                    Err(e) => e.to_string(),
                };
                format!("({tree}, {mark}) -> [{s}] -> {back}")
            });
            images.insert(s);
        }
    }

    // Breadth-first search over ISR stacks.
    let tokens = words(n_max);
    let mut seen = FxHashSet::from_iter([IsrStack::new()]);
    let mut queue = VecDeque::from([IsrStack::new()]);
    while let Some(s) = queue.pop_front() {
        match phi(&s) {
            Ok(aug) => {
                let roundtrip = corrupt_gamma(&aug, corruption);
                report.check("gamma-phi", roundtrip == s, || {
                    format!("[{s}] -> [{roundtrip}]")
                });
                if aug.mark() >= 0 {
                    let lowered = isr_apply(&s, &IsrAction::Reduce, None).and_then(|r| phi(&r));
                    let expected = AugmentedTree::new(aug.tree().clone(), aug.mark() - 1);
                    report.check(
                        "reduce-step",
                        lowered.is_ok() && lowered == expected,
                        || format!("[{s}] reduces to {lowered:?}"),
                    );
                }
            }
            Err(crate::isr::IsrError::BareToken) => report.bare_stacks += 1,
            Err(e) => report.check("gamma-phi", false, || format!("[{s}]: {e}")),
        }
        let mut moves = vec![IsrAction::Reduce];
        moves.extend(labels.iter().cloned().map(IsrAction::Project));
        if s.consumed() < n_max {
            moves.push(IsrAction::Shift);
        }
        for m in moves {
            let Ok(next) = isr_apply(&s, &m, tokens.get(s.consumed())) else {
                continue;
            };
            if m == IsrAction::Reduce && makes_unary_chain(&next) {
                continue;
            }
            let legal = is_legal_stack(&next);
            report.check("legality", legal == stack_defect(&next).is_none(), || {
                format!("[{next}]")
            });
            if legal && seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    let missing = images.iter().filter(|s| !seen.contains(*s)).count();
    report.check("stack-coverage", missing == 0, || {
        format!("{missing} gamma images never reached")
    });
    report
}
