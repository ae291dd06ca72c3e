//! Oracle extraction: the unique attach-juxtapose sequence that builds a
//! given tree without unary chains.
//!
//! The last action is read off the local shape around the last leaf, then
//! undone, and the process repeats until the tree is empty.
//! [`last_action`] works on immutable trees and returns the predecessor;
//! [`oracle_trace`] runs the same decision table over a mutable arena and
//! keeps the rightmost chain as a stack, which makes the whole extraction
//! amortized linear: every node is pushed onto the chain at most once.

use std::sync::Arc;

use thiserror::Error;

use crate::transition::{rebuild_chain, AjAction};
use crate::tree::{ConstituencyTree, Internal, Label, Node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("the empty tree has no last action")]
    EmptyTree,
    #[error("tree contains unary chains; collapse them first")]
    UnaryChains,
}

/// Which branch of the last-action decision table fired.
///
/// The first word says whether the last leaf has siblings (`Sibling*`, the
/// leaf itself is the constituent added last) or is an only child (`Sole*`,
/// its parent was added together with it). The second says where that
/// constituent sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OracleCase {
    /// Last leaf has siblings and is the root. A leaf can never be the root,
    /// so reaching this is a bug.
    SiblingRoot,
    SiblingJuxtapose,
    SiblingAttach,
    SoleRoot,
    SoleJuxtapose,
    SoleAttach,
}

impl OracleCase {
    pub const ALL: [OracleCase; 6] = [
        OracleCase::SiblingRoot,
        OracleCase::SiblingJuxtapose,
        OracleCase::SiblingAttach,
        OracleCase::SoleRoot,
        OracleCase::SoleJuxtapose,
        OracleCase::SoleAttach,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleCase::SiblingRoot => "sibling-root",
            OracleCase::SiblingJuxtapose => "sibling-juxtapose",
            OracleCase::SiblingAttach => "sibling-attach",
            OracleCase::SoleRoot => "sole-root",
            OracleCase::SoleJuxtapose => "sole-juxtapose",
            OracleCase::SoleAttach => "sole-attach",
        }
    }
}

/// The last action of a tree together with the tree it was applied to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleStep {
    pub action: AjAction,
    pub predecessor: ConstituencyTree,
    pub case: OracleCase,
}

pub fn last_action(tree: &ConstituencyTree) -> Result<OracleStep, OracleError> {
    if tree.is_empty() {
        return Err(OracleError::EmptyTree);
    }
    if tree.has_unary_chains() {
        return Err(OracleError::UnaryChains);
    }
    let chain = tree.rightmost_chain();
    let bottom = chain[chain.len() - 1];
    let (parent_depth, parent_label, sibling_case) = if bottom.children().len() > 1 {
        (chain.len() - 1, None, true)
    } else if chain.len() == 1 {
        return Ok(OracleStep {
            action: AjAction::attach(0, Some(bottom.label().clone())),
            predecessor: ConstituencyTree::empty(),
            case: OracleCase::SoleRoot,
        });
    } else {
        (chain.len() - 2, Some(bottom.label().clone()), false)
    };

    let parent = chain[parent_depth];
    let len = tree.len() - 1;
    if let [Node::Internal(sibling), _] = parent.children() {
        let action = AjAction::juxtapose(parent_depth, parent_label, parent.label().clone());
        let root = rebuild_chain(&chain[..parent_depth], sibling.clone());
        return Ok(OracleStep {
            action,
            predecessor: ConstituencyTree::from_arc_with_len(root, len),
            case: if sibling_case {
                OracleCase::SiblingJuxtapose
            } else {
                OracleCase::SoleJuxtapose
            },
        });
    }
    let mut children = parent.children().to_vec();
    children.pop();
    let trimmed = Arc::new(Internal::from_parts(parent.label().clone(), children));
    let root = rebuild_chain(&chain[..parent_depth], trimmed);
    Ok(OracleStep {
        action: AjAction::attach(parent_depth, parent_label),
        predecessor: ConstituencyTree::from_arc_with_len(root, len),
        case: if sibling_case {
            OracleCase::SiblingAttach
        } else {
            OracleCase::SoleAttach
        },
    })
}

/// The oracle sequence, in forward order.
pub fn oracle_action_sequence(tree: &ConstituencyTree) -> Result<Vec<AjAction>, OracleError> {
    Ok(oracle_trace(tree)?.into_iter().map(|(a, _)| a).collect())
}

/// The oracle sequence with the decision-table case behind each action.
pub fn oracle_trace(tree: &ConstituencyTree) -> Result<Vec<(AjAction, OracleCase)>, OracleError> {
    if tree.has_unary_chains() {
        return Err(OracleError::UnaryChains);
    }
    let Some(root) = tree.root() else {
        return Ok(Vec::new());
    };
    let mut arena = Arena::default();
    let root = arena.add(root);
    let mut chain = vec![root];
    arena.descend(&mut chain);

    let mut out = Vec::with_capacity(tree.len());
    while let Some(&bottom) = chain.last() {
        let (parent_depth, parent_label, sibling_case) = if arena.children[bottom].len() > 1 {
            (chain.len() - 1, None, true)
        } else if chain.len() == 1 {
            out.push((
                AjAction::attach(0, arena.label(bottom).cloned()),
                OracleCase::SoleRoot,
            ));
            break;
        } else {
            (chain.len() - 2, arena.label(bottom).cloned(), false)
        };
        let parent = chain[parent_depth];
        let parent_label_of = arena
            .label(parent)
            .cloned()
            .expect("chain nodes are internal");
        let kids = &arena.children[parent];
        if kids.len() == 2 && arena.label(kids[0]).is_some() {
            let sibling = kids[0];
            out.push((
                AjAction::juxtapose(parent_depth, parent_label, parent_label_of),
                if sibling_case {
                    OracleCase::SiblingJuxtapose
                } else {
                    OracleCase::SoleJuxtapose
                },
            ));
            chain.truncate(parent_depth);
            if let Some(&grand) = chain.last() {
                *arena.children[grand].last_mut().expect("non-empty") = sibling;
            }
            chain.push(sibling);
        } else {
            out.push((
                AjAction::attach(parent_depth, parent_label),
                if sibling_case {
                    OracleCase::SiblingAttach
                } else {
                    OracleCase::SoleAttach
                },
            ));
            arena.children[parent].pop();
            chain.truncate(parent_depth + 1);
        }
        arena.descend(&mut chain);
    }
    out.reverse();
    Ok(out)
}

/// Flat copy of a tree: `labels[i]` is `None` for leaves.
#[derive(Default)]
struct Arena {
    labels: Vec<Option<Label>>,
    children: Vec<Vec<usize>>,
}

impl Arena {
    fn add(&mut self, node: &Internal) -> usize {
        let id = self.labels.len();
        self.labels.push(Some(node.label().clone()));
        self.children
            .push(Vec::with_capacity(node.children().len()));
        for child in node.children() {
            let cid = match child {
                Node::Leaf(_) => {
                    self.labels.push(None);
                    self.children.push(Vec::new());
                    self.labels.len() - 1
                }
                Node::Internal(c) => self.add(c),
            };
            self.children[id].push(cid);
        }
        id
    }

    fn label(&self, id: usize) -> Option<&Label> {
        self.labels[id].as_ref()
    }

    /// Extends `chain` down through last children until the next one is a leaf.
    fn descend(&self, chain: &mut Vec<usize>) {
        while let Some(&bottom) = chain.last() {
            match self.children[bottom].last() {
                Some(&last) if self.labels[last].is_some() => chain.push(last),
                _ => break,
            }
        }
    }
}
