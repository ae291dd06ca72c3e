//! In-order shift-reduce (ISR) semantics and its correspondence with
//! attach-juxtapose states.
//!
//! An ISR stack holds completed subtrees and projected nonterminals, bottom
//! first. `Project(X)` is only possible on top of a completed item, which
//! becomes the first child of `X`; `Reduce` pops everything above the
//! nearest projected nonterminal, the nonterminal itself and the item below
//! it, and pushes the finished phrase. Reading the stack bottom to top is thus
//! an in-order walk: first child, parent, remaining children.
//!
//! [`phi`] maps a legal stack to an [`AugmentedTree`] by reducing it fully
//! and counting open nonterminals; [`gamma`] is its inverse.
//! [`translate_action`] turns one attach-juxtapose step into the ISR actions
//! that move between the corresponding stacks.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::transition::{apply_action, is_legal, AjAction, ParserState};
use crate::tree::{ConstituencyTree, Internal, Label, Node, Token};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IsrAction {
    Shift,
    Reduce,
    Project(Label),
}

impl fmt::Display for IsrAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsrAction::Shift => f.write_str("shift"),
            IsrAction::Reduce => f.write_str("reduce"),
            IsrAction::Project(x) => write!(f, "pj:{x}"),
        }
    }
}

impl FromStr for IsrAction {
    type Err = IsrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shift" => Ok(IsrAction::Shift),
            "reduce" => Ok(IsrAction::Reduce),
            _ => s
                .strip_prefix("pj:")
                .and_then(|l| Label::new(l).ok())
                .map(IsrAction::Project)
                .ok_or_else(|| IsrError::Parse(s.to_string())),
        }
    }
}

pub fn format_isr(actions: &[IsrAction]) -> String {
    actions
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_isr(text: &str) -> Result<Vec<IsrAction>, IsrError> {
    text.split_whitespace().map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsrError {
    #[error("shift with an exhausted buffer")]
    ShiftWithoutToken,
    #[error("project needs a completed item on top of the stack")]
    ProjectWithoutSubtree,
    #[error("reduce with no projected nonterminal on the stack")]
    ReduceWithoutNonterminal,
    #[error("reduce: projected {0} has no completed first child below it")]
    ReduceWithoutFirstChild(Label),
    #[error("illegal stack [{0}]")]
    IllegalStack(String),
    #[error("stack reduces to a bare token, which is not a constituency tree")]
    BareToken,
    #[error("mark {mark} out of range for rightmost chain of length {chain_len}")]
    InvalidMark { mark: isize, chain_len: usize },
    #[error("cannot translate {action} on a tree with rightmost chain of length {chain_len}")]
    IllegalAction { action: AjAction, chain_len: usize },
    #[error("{tokens} tokens but {actions} actions")]
    LengthMismatch { tokens: usize, actions: usize },
    #[error("unknown ISR action {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StackElement {
    Subtree(Node),
    Projected(Label),
}

impl StackElement {
    pub fn is_projected(&self) -> bool {
        matches!(self, StackElement::Projected(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IsrStack {
    elements: Vec<StackElement>,
    consumed: usize,
}

impl IsrStack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_elements(elements: Vec<StackElement>, consumed: usize) -> Self {
        IsrStack { elements, consumed }
    }

    /// Bottom first.
    pub fn elements(&self) -> &[StackElement] {
        &self.elements
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn projected_count(&self) -> usize {
        self.elements.iter().filter(|e| e.is_projected()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn apply(
        &mut self,
        action: &IsrAction,
        next_token: Option<&Token>,
    ) -> Result<(), IsrError> {
        match action {
            IsrAction::Shift => {
                let token = next_token.ok_or(IsrError::ShiftWithoutToken)?;
                self.elements
                    .push(StackElement::Subtree(Node::leaf(token.clone())));
                self.consumed += 1;
            }
            IsrAction::Project(x) => match self.elements.last() {
                Some(StackElement::Subtree(_)) => {
                    self.elements.push(StackElement::Projected(x.clone()))
                }
                _ => return Err(IsrError::ProjectWithoutSubtree),
            },
            IsrAction::Reduce => reduce(&mut self.elements)?,
        }
        Ok(())
    }
}

/// Bottom-first rendering; `(X` marks a projected nonterminal.
impl fmt::Display for IsrStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match e {
                StackElement::Projected(x) => write!(f, "({x}")?,
                StackElement::Subtree(Node::Leaf(t)) => f.write_str(t.word())?,
                StackElement::Subtree(n) => write!(
                    f,
                    "{}",
                    ConstituencyTree::from_node(n.clone()).expect("internal")
                )?,
            }
        }
        Ok(())
    }
}

fn reduce(elements: &mut Vec<StackElement>) -> Result<(), IsrError> {
    let p = elements
        .iter()
        .rposition(StackElement::is_projected)
        .ok_or(IsrError::ReduceWithoutNonterminal)?;
    let StackElement::Projected(label) = elements[p].clone() else {
        unreachable!()
    };
    if p == 0 || elements[p - 1].is_projected() {
        return Err(IsrError::ReduceWithoutFirstChild(label));
    }
    let above: Vec<StackElement> = elements.drain(p - 1..).collect();
    let children = above
        .into_iter()
        .filter_map(|e| match e {
            StackElement::Subtree(n) => Some(n),
            StackElement::Projected(_) => None,
        })
        .collect();
    elements.push(StackElement::Subtree(Node::Internal(Arc::new(
        Internal::from_parts(label, children),
    ))));
    Ok(())
}

/// Applies one ISR action to a copy of `stack`.
pub fn isr_apply(
    stack: &IsrStack,
    action: &IsrAction,
    next_token: Option<&Token>,
) -> Result<IsrStack, IsrError> {
    let mut next = stack.clone();
    next.apply(action, next_token)?;
    Ok(next)
}

/// Replays ISR actions from the empty stack, shifting `tokens` in order.
pub fn replay(tokens: &[Token], actions: &[IsrAction]) -> Result<IsrStack, IsrError> {
    let mut stack = IsrStack::new();
    for action in actions {
        let next = tokens.get(stack.consumed);
        stack.apply(action, next)?;
    }
    Ok(stack)
}

/// A legal stack reduces, by repeated `Reduce`, to at most one element.
pub fn is_legal_stack(stack: &IsrStack) -> bool {
    // Only the projected/completed pattern matters.
    let mut shape: Vec<bool> = stack
        .elements
        .iter()
        .map(StackElement::is_projected)
        .collect();
    while let Some(p) = shape.iter().rposition(|&projected| projected) {
        if p == 0 || shape[p - 1] {
            return false;
        }
        shape.truncate(p - 1);
        shape.push(false);
    }
    shape.len() <= 1
}

/// Why a stack can never be reduced to a single tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackDefect {
    /// More than one element and no projected nonterminal.
    NoNonterminal,
    /// A projected nonterminal at the bottom has no first child.
    NonterminalAtBottom,
    /// Two adjacent projected nonterminals; the upper has no first child.
    ConsecutiveNonterminals,
    /// Completed items below the lowest nonterminal's first child; they
    /// stay disconnected once everything else is reduced.
    LeftoverSubtrees,
}

/// Static characterisation of illegal stacks, equivalent to
/// [`is_legal_stack`] returning `false`.
pub fn stack_defect(stack: &IsrStack) -> Option<StackDefect> {
    let e = &stack.elements;
    let first = e.iter().position(StackElement::is_projected);
    match first {
        None if e.len() > 1 => Some(StackDefect::NoNonterminal),
        None => None,
        Some(0) => Some(StackDefect::NonterminalAtBottom),
        Some(_)
            if e.windows(2)
                .any(|w| w[0].is_projected() && w[1].is_projected()) =>
        {
            Some(StackDefect::ConsecutiveNonterminals)
        }
        Some(1) => None,
        Some(_) => Some(StackDefect::LeftoverSubtrees),
    }
}

/// A partial tree with one rightmost-chain depth marked; `-1` marks
/// nothing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AugmentedTree {
    tree: ConstituencyTree,
    mark: isize,
}

impl AugmentedTree {
    pub fn new(tree: ConstituencyTree, mark: isize) -> Result<Self, IsrError> {
        let chain_len = tree.chain_len();
        if mark < -1 || mark >= chain_len as isize {
            return Err(IsrError::InvalidMark { mark, chain_len });
        }
        Ok(AugmentedTree { tree, mark })
    }

    pub fn tree(&self) -> &ConstituencyTree {
        &self.tree
    }

    pub fn mark(&self) -> isize {
        self.mark
    }
}

/// Fully reduces a legal stack; the mark is the number of projected
/// nonterminals minus one.
pub fn phi(stack: &IsrStack) -> Result<AugmentedTree, IsrError> {
    if !is_legal_stack(stack) {
        return Err(IsrError::IllegalStack(stack.to_string()));
    }
    let mark = stack.projected_count() as isize - 1;
    let mut elements = stack.elements.clone();
    while elements.iter().any(StackElement::is_projected) {
        reduce(&mut elements)?;
    }
    let tree = match elements.pop() {
        None => ConstituencyTree::empty(),
        Some(StackElement::Subtree(Node::Internal(root))) => ConstituencyTree::from_arc(root),
        Some(_) => return Err(IsrError::BareToken),
    };
    AugmentedTree::new(tree, mark)
}

/// The stack whose full reduction is `aug`. Rightmost-chain nodes at depth
/// up to the mark are opened as projected nonterminals; every other subtree
/// is pushed whole, in in-order sequence.
pub fn gamma(aug: &AugmentedTree) -> IsrStack {
    fn visit(node: &Node, depth: isize, on_chain: bool, mark: isize, out: &mut Vec<StackElement>) {
        let open = match node {
            Node::Internal(n) if on_chain && depth <= mark => n,
            _ => {
                out.push(StackElement::Subtree(node.clone()));
                return;
            }
        };
        let kids = open.children();
        let last = kids.len() - 1;
        visit(&kids[0], depth + 1, last == 0, mark, out);
        out.push(StackElement::Projected(open.label().clone()));
        for (j, child) in kids.iter().enumerate().skip(1) {
            visit(child, depth + 1, j == last, mark, out);
        }
    }
    let mut elements = Vec::new();
    if let Some(root) = aug.tree.root_node() {
        visit(&root, 0, true, aug.mark, &mut elements);
    }
    IsrStack {
        elements,
        consumed: aug.tree.len(),
    }
}

/// Embeds an attach-juxtapose state: every rightmost-chain node is open.
pub fn xi(tree: &ConstituencyTree) -> AugmentedTree {
    AugmentedTree {
        mark: tree.chain_len() as isize - 1,
        tree: tree.clone(),
    }
}

/// ISR actions taking `gamma(xi(state_tree))` to
/// `gamma(xi(state_tree(action)))`.
///
/// `attach(i, X)` closes the chain below depth `i`, shifts, and projects
/// `X` if present. `juxtapose(i, X, Y)` also closes depth `i` itself and
/// projects `Y` over it before the shift.
pub fn translate_action(
    state_tree: &ConstituencyTree,
    action: &AjAction,
) -> Result<Vec<IsrAction>, IsrError> {
    let chain_len = state_tree.chain_len();
    if !is_legal(chain_len, action) {
        return Err(IsrError::IllegalAction {
            action: action.clone(),
            chain_len,
        });
    }
    let i = action.target();
    let mut out = Vec::new();
    match action {
        AjAction::Attach { .. } => {
            // The empty tree has nothing open, so its first attach needs no reduces.
            let closes = chain_len.saturating_sub(i + 1);
            out.extend(std::iter::repeat_n(IsrAction::Reduce, closes));
            out.push(IsrAction::Shift);
        }
        AjAction::Juxtapose { new_label, .. } => {
            out.extend(std::iter::repeat_n(IsrAction::Reduce, chain_len - i));
            out.push(IsrAction::Project(new_label.clone()));
            out.push(IsrAction::Shift);
        }
    }
    if let Some(x) = action.parent_label() {
        out.push(IsrAction::Project(x.clone()));
    }
    Ok(out)
}

/// Translates a whole attach-juxtapose derivation, then closes every open
/// nonterminal so the final stack holds the finished tree alone.
pub fn translate_sequence(
    tokens: &[Token],
    actions: &[AjAction],
) -> Result<Vec<IsrAction>, IsrError> {
    if tokens.len() != actions.len() {
        return Err(IsrError::LengthMismatch {
            tokens: tokens.len(),
            actions: actions.len(),
        });
    }
    let mut state = ParserState::new();
    let mut out = Vec::new();
    for (token, action) in tokens.iter().zip(actions) {
        out.extend(translate_action(state.tree(), action)?);
        state = apply_action(&state, token, action).map_err(|_| IsrError::IllegalAction {
            action: action.clone(),
            chain_len: state.tree().chain_len(),
        })?;
    }
    out.extend(std::iter::repeat_n(
        IsrAction::Reduce,
        state.tree().chain_len(),
    ));
    Ok(out)
}
