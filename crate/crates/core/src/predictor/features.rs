//! Sparse, hashed features of a parser state.
//!
//! Shared features describe the token window and the previous action. Each
//! rightmost-chain node gets its own block of depth features, used by the
//! target factor and, together with the shared block, by both label
//! factors.

use std::hash::{Hash, Hasher};

use rustc_hash::FxHasher;

use crate::transition::{ActionKind, ParserState};
use crate::tree::{Node, Token};

pub const SHARED_TEMPLATES: usize = 17;
pub const DEPTH_TEMPLATES: usize = 14;

const BOS: &str = "<s>";
const EOS: &str = "</s>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateFeatures {
    pub shared: Vec<u64>,
    depth: Vec<u64>,
    offsets: Vec<usize>,
}

impl StateFeatures {
    /// Number of depth blocks: the chain length, or 1 for the empty tree.
    pub fn depths(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn at_depth(&self, d: usize) -> &[u64] {
        &self.depth[self.offsets[d]..self.offsets[d + 1]]
    }

    pub fn len(&self) -> usize {
        self.shared.len() + self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn key<T: Hash>(value: T) -> u64 {
    let mut h = FxHasher::default();
    value.hash(&mut h);
    h.finish()
}

fn pos(token: &Token) -> &str {
    if token.has_pos() {
        token.pos()
    } else {
        crate::treebank::UNTAGGED_POS
    }
}

fn describe(node: &Node) -> (u8, &str) {
    match node {
        Node::Leaf(t) => (0, pos(t)),
        Node::Internal(n) => (1, n.label().as_str()),
    }
}

fn suffix(word: &str) -> &str {
    let start = word.char_indices().rev().nth(2).map_or(0, |(i, _)| i);
    &word[start..]
}

/// Features for predicting the action that consumes `tokens[state.consumed()]`.
pub fn featurize(state: &ParserState, tokens: &[Token], prev: Option<ActionKind>) -> StateFeatures {
    let i = state.consumed();
    let at = |k: isize| -> (&str, &str) {
        let j = i as isize + k;
        if j < 0 {
            (BOS, BOS)
        } else {
            tokens
                .get(j as usize)
                .map_or((EOS, EOS), |t| (t.word(), pos(t)))
        }
    };
    let (w0, t0) = at(0);
    let (wm1, tm1) = at(-1);
    let (_, tm2) = at(-2);
    let (w1, t1) = at(1);
    let chain = state.tree().rightmost_chain();
    let chain_len = chain.len();
    let prev = prev.map_or(2u8, |k| k as u8);
    let bottom = chain.last().map_or(BOS, |n| n.label().as_str());

    let shared = vec![
        key(0u8),
        key((1u8, t0)),
        key((2u8, w0)),
        key((3u8, tm1)),
        key((4u8, tm2)),
        key((5u8, t1)),
        key((6u8, w1)),
        key((7u8, wm1)),
        key((8u8, tm1, t0)),
        key((9u8, t0, t1)),
        key((10u8, tm2, tm1, t0)),
        key((11u8, chain_len.min(8))),
        key((12u8, prev)),
        key((13u8, prev, t0)),
        key((14u8, bottom)),
        key((15u8, bottom, t0)),
        key((16u8, suffix(w0))),
    ];
    debug_assert_eq!(shared.len(), SHARED_TEMPLATES);

    let mut depth = Vec::with_capacity(DEPTH_TEMPLATES * chain_len.max(1));
    let mut offsets = Vec::with_capacity(chain_len + 2);
    offsets.push(0);
    if chain.is_empty() {
        depth.push(key((100u8, t0)));
        depth.push(key((101u8, w0)));
        offsets.push(depth.len());
    }
    for (d, node) in chain.iter().enumerate() {
        let b = chain_len - 1 - d;
        let lab = node.label().as_str();
        let lc = describe(node.last_child());
        let fc = describe(&node.children()[0]);
        let par = if d == 0 {
            BOS
        } else {
            chain[d - 1].label().as_str()
        };
        let nk = node.children().len().min(3);
        depth.extend([
            key((200u8, b.min(6))),
            key((201u8, d.min(6))),
            key((202u8, lab)),
            key((203u8, lab, t0)),
            key((204u8, lab, b.min(3), t0)),
            key((205u8, lc, t0)),
            key((206u8, lab, lc)),
            key((207u8, fc, t0)),
            key((208u8, lab, par)),
            key((209u8, lab, t0, t1)),
            key((210u8, lab, w0)),
            key((211u8, b.min(3), tm1, t0)),
            key((212u8, nk, lab, t0)),
            key((213u8, lab, lc, t0)),
        ]);
        offsets.push(depth.len());
    }
    StateFeatures {
        shared,
        depth,
        offsets,
    }
}
