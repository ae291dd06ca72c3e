//! The attach-juxtapose transition system.
//!
//! A parser state is a partial tree over the tokens read so far. Each action
//! integrates exactly one new token somewhere on the rightmost chain:
//!
//! * `attach(d, p)` makes the token (or a new `p` node over it) the last
//!   child of the chain node at depth `d`;
//! * `juxtapose(d, p, q)` replaces the chain node at depth `d` with a new
//!   `q` node whose children are that node and the token (or a new `p` node
//!   over it).
//!
//! On the empty tree the only actions are `attach(0, p)` with `p` present,
//! which makes `p` the root.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::tree::{ConstituencyTree, Internal, Label, Node, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Attach,
    Juxtapose,
}

/// One attach-juxtapose action. The derived ordering is the decoder's
/// tie-break order: attach before juxtapose, then target depth, then
/// `parent_label` (`None` first), then `new_label`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AjAction {
    Attach {
        target: usize,
        parent_label: Option<Label>,
    },
    Juxtapose {
        target: usize,
        parent_label: Option<Label>,
        new_label: Label,
    },
}

impl AjAction {
    pub fn attach(target: usize, parent_label: Option<Label>) -> Self {
        AjAction::Attach {
            target,
            parent_label,
        }
    }

    pub fn juxtapose(target: usize, parent_label: Option<Label>, new_label: Label) -> Self {
        AjAction::Juxtapose {
            target,
            parent_label,
            new_label,
        }
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            AjAction::Attach { .. } => ActionKind::Attach,
            AjAction::Juxtapose { .. } => ActionKind::Juxtapose,
        }
    }

    pub fn target(&self) -> usize {
        match self {
            AjAction::Attach { target, .. } | AjAction::Juxtapose { target, .. } => *target,
        }
    }

    pub fn parent_label(&self) -> Option<&Label> {
        match self {
            AjAction::Attach { parent_label, .. } | AjAction::Juxtapose { parent_label, .. } => {
                parent_label.as_ref()
            }
        }
    }

    pub fn new_label(&self) -> Option<&Label> {
        match self {
            AjAction::Attach { .. } => None,
            AjAction::Juxtapose { new_label, .. } => Some(new_label),
        }
    }
}

fn opt_label(l: Option<&Label>) -> &str {
    l.map_or("None", Label::as_str)
}

impl fmt::Display for AjAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AjAction::Attach {
                target,
                parent_label,
            } => {
                write!(f, "attach({},{})", target, opt_label(parent_label.as_ref()))
            }
            AjAction::Juxtapose {
                target,
                parent_label,
                new_label,
            } => {
                write!(
                    f,
                    "juxtapose({},{},{})",
                    target,
                    opt_label(parent_label.as_ref()),
                    new_label
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("illegal action {action} on a tree with rightmost chain of length {chain_len}")]
    IllegalAction { action: AjAction, chain_len: usize },
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<TransitionError>,
    },
    #[error("{tokens} tokens but {actions} actions")]
    LengthMismatch { tokens: usize, actions: usize },
    #[error("cannot parse action {text:?}: {message}")]
    Parse { text: String, message: String },
}

impl FromStr for AjAction {
    type Err = TransitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |message: &str| TransitionError::Parse {
            text: s.to_string(),
            message: message.into(),
        };
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let open = compact.find('(').ok_or_else(|| fail("missing '('"))?;
        let args = compact[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| fail("missing ')'"))?;
        let args: Vec<&str> = args.split(',').collect();
        let label = |a: &str| Label::new(a).map_err(|e| fail(&e.to_string()));
        let opt = |a: &str| {
            if a == "None" {
                Ok(None)
            } else {
                label(a).map(Some)
            }
        };
        let target = |a: &str| a.parse::<usize>().map_err(|_| fail("bad target index"));
        match (&compact[..open], args.as_slice()) {
            ("attach", [d, p]) => Ok(AjAction::attach(target(d)?, opt(p)?)),
            ("juxtapose", [d, p, q]) => {
                if *q == "None" {
                    return Err(fail("juxtapose requires new_label"));
                }
                Ok(AjAction::juxtapose(target(d)?, opt(p)?, label(q)?))
            }
            ("attach" | "juxtapose", _) => Err(fail("wrong number of arguments")),
            _ => Err(fail("unknown action")),
        }
    }
}

/// Renders actions separated by single spaces.
pub fn format_actions(actions: &[AjAction]) -> String {
    actions
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses a list of actions; whitespace anywhere is ignored.
pub fn parse_actions(text: &str) -> Result<Vec<AjAction>, TransitionError> {
    let mut out = Vec::new();
    let mut rest = text.trim_start();
    while !rest.is_empty() {
        let close = rest.find(')').ok_or_else(|| TransitionError::Parse {
            text: rest.to_string(),
            message: "missing ')'".into(),
        })?;
        out.push(rest[..=close].parse()?);
        rest = rest[close + 1..].trim_start();
    }
    Ok(out)
}

/// A partial tree over the first `consumed()` tokens of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ParserState {
    tree: ConstituencyTree,
}

impl ParserState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps an existing partial tree. Callers must ensure it has no unary
    /// chains; states reached through [`apply_action`] always satisfy this.
    pub fn from_tree(tree: ConstituencyTree) -> Self {
        debug_assert!(!tree.has_unary_chains());
        ParserState { tree }
    }

    pub fn tree(&self) -> &ConstituencyTree {
        &self.tree
    }

    pub fn into_tree(self) -> ConstituencyTree {
        self.tree
    }

    pub fn consumed(&self) -> usize {
        self.tree.len()
    }
}

/// Checks `action` against a partial tree whose rightmost chain has
/// `chain_len` nodes.
pub fn is_legal(chain_len: usize, action: &AjAction) -> bool {
    if chain_len == 0 {
        matches!(
            action,
            AjAction::Attach {
                target: 0,
                parent_label: Some(_)
            }
        )
    } else {
        action.target() < chain_len
    }
}

/// Executes one action, returning the successor state.
pub fn apply_action(
    state: &ParserState,
    token: &Token,
    action: &AjAction,
) -> Result<ParserState, TransitionError> {
    let tree = &state.tree;
    let chain = tree.rightmost_chain();
    if !is_legal(chain.len(), action) {
        return Err(TransitionError::IllegalAction {
            action: action.clone(),
            chain_len: chain.len(),
        });
    }
    let leaf = Node::leaf(token.clone());
    let incoming = match action.parent_label() {
        Some(p) => Node::Internal(Arc::new(Internal::from_parts(p.clone(), vec![leaf]))),
        None => leaf,
    };
    let len = tree.len() + 1;

    let Some(&target) = chain.get(action.target()) else {
        // Empty tree: the parent label becomes the root.
        let Node::Internal(root) = incoming else {
            unreachable!("checked by is_legal")
        };
        return Ok(ParserState {
            tree: ConstituencyTree::from_arc_with_len(root, len),
        });
    };

    let replacement = match action {
        AjAction::Attach { .. } => {
            let mut children = target.children().to_vec();
            children.push(incoming);
            Internal::from_parts(target.label().clone(), children)
        }
        AjAction::Juxtapose { new_label, .. } => Internal::from_parts(
            new_label.clone(),
            vec![Node::Internal(target.clone()), incoming],
        ),
    };
    let root = rebuild_chain(&chain[..action.target()], Arc::new(replacement));
    Ok(ParserState {
        tree: ConstituencyTree::from_arc_with_len(root, len),
    })
}

/// Replaces the last child of each ancestor, bottom-up, so that `node`
/// takes the place of the chain node just below `ancestors`.
pub(crate) fn rebuild_chain(ancestors: &[&Arc<Internal>], node: Arc<Internal>) -> Arc<Internal> {
    ancestors.iter().rev().fold(node, |child, parent| {
        let mut children = parent.children().to_vec();
        *children.last_mut().expect("non-empty") = Node::Internal(child);
        Arc::new(Internal::from_parts(parent.label().clone(), children))
    })
}

/// Every action legal in `state`, in tie-break order.
pub fn legal_actions(state: &ParserState, vocabulary: &[Label]) -> Vec<AjAction> {
    let mut vocab = vocabulary.to_vec();
    vocab.sort();
    vocab.dedup();
    let chain_len = state.tree.chain_len();
    if chain_len == 0 {
        return vocab
            .into_iter()
            .map(|x| AjAction::attach(0, Some(x)))
            .collect();
    }
    let parents: Vec<Option<Label>> = std::iter::once(None)
        .chain(vocab.iter().cloned().map(Some))
        .collect();
    let mut out = Vec::with_capacity(chain_len * parents.len() * (vocab.len() + 1));
    for d in 0..chain_len {
        for p in &parents {
            out.push(AjAction::attach(d, p.clone()));
        }
    }
    for d in 0..chain_len {
        for p in &parents {
            for q in &vocab {
                out.push(AjAction::juxtapose(d, p.clone(), q.clone()));
            }
        }
    }
    out
}

/// Folds `actions` over `tokens` starting from the empty tree.
pub fn apply_sequence(
    tokens: &[Token],
    actions: &[AjAction],
) -> Result<ConstituencyTree, TransitionError> {
    if tokens.len() != actions.len() {
        return Err(TransitionError::LengthMismatch {
            tokens: tokens.len(),
            actions: actions.len(),
        });
    }
    let mut state = ParserState::new();
    for (step, (token, action)) in tokens.iter().zip(actions).enumerate() {
        state = apply_action(&state, token, action).map_err(|e| TransitionError::Step {
            step,
            source: Box::new(e),
        })?;
    }
    Ok(state.tree)
}
