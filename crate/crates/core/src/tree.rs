//! Constituency trees over token sequences.
//!
//! Trees are immutable values. Internal nodes sit behind [`Arc`] so that
//! producing a modified tree only rebuilds the path from the root to the
//! edited node; every other subtree is shared with the original.
//!
//! Preterminals are not nodes: a part-of-speech tag lives on its leaf as
//! [`Token::pos`]. An internal node whose only child is a leaf is therefore
//! an ordinary phrase over a single word, not a unary chain.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Joins the labels of a collapsed unary chain, outermost first.
pub const SEPARATOR: char = '+';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty label")]
    EmptyLabel,
    #[error("malformed label {0:?}: `+` may only join non-empty chain parts")]
    MalformedLabel(String),
    #[error("label {0:?} contains whitespace or parentheses")]
    InvalidLabelChar(String),
    #[error("atomic label {0:?} contains the chain separator")]
    SeparatorInAtomicLabel(String),
    #[error("empty word")]
    EmptyWord,
    #[error("internal node {0} has no children")]
    NoChildren(String),
    #[error("parse error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

/// A syntactic category, possibly several categories of a collapsed unary
/// chain joined with [`SEPARATOR`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(Arc<str>);

impl Label {
    /// Accepts atomic labels and well-formed `A+B+C` chains.
    pub fn new(value: impl AsRef<str>) -> Result<Self, TreeError> {
        let value = value.as_ref();
        if value.is_empty() {
            return Err(TreeError::EmptyLabel);
        }
        if value
            .chars()
            .any(|c| c.is_whitespace() || c == '(' || c == ')')
        {
            return Err(TreeError::InvalidLabelChar(value.to_string()));
        }
        if value.split(SEPARATOR).any(str::is_empty) {
            return Err(TreeError::MalformedLabel(value.to_string()));
        }
        Ok(Label(value.into()))
    }

    /// Like [`Label::new`] but rejects the separator outright.
    pub fn atomic(value: impl AsRef<str>) -> Result<Self, TreeError> {
        let value = value.as_ref();
        if value.contains(SEPARATOR) {
            return Err(TreeError::SeparatorInAtomicLabel(value.to_string()));
        }
        Self::new(value)
    }

    /// Joins chain labels outermost first. Already-collapsed parts are
    /// flattened, so joining is associative.
    pub fn join<'a>(parts: impl IntoIterator<Item = &'a Label>) -> Label {
        let joined = parts
            .into_iter()
            .map(Label::as_str)
            .collect::<Vec<_>>()
            .join(&SEPARATOR.to_string());
        Label(joined.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_chain(&self) -> bool {
        self.0.contains(SEPARATOR)
    }

    /// The atomic labels of a collapsed chain, outermost first.
    pub fn parts(&self) -> impl Iterator<Item = Label> + '_ {
        self.0.split(SEPARATOR).map(|p| Label(p.into()))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Label {
    type Err = TreeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::new(s)
    }
}

/// A word and its part-of-speech tag. An empty `pos` means "untagged".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    word: String,
    pos: String,
}

impl Token {
    pub fn new(word: impl Into<String>, pos: impl Into<String>) -> Result<Self, TreeError> {
        let word = word.into();
        if word.is_empty() {
            return Err(TreeError::EmptyWord);
        }
        Ok(Token {
            word,
            pos: pos.into(),
        })
    }

    pub fn untagged(word: impl Into<String>) -> Result<Self, TreeError> {
        Self::new(word, String::new())
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn pos(&self) -> &str {
        &self.pos
    }

    pub fn has_pos(&self) -> bool {
        !self.pos.is_empty()
    }

    /// Word equality, with tags compared only when both sides carry one.
    pub fn matches(&self, other: &Token) -> bool {
        self.word == other.word && (!self.has_pos() || !other.has_pos() || self.pos == other.pos)
    }
}

/// A labeled phrase with an ordered, non-empty child list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Internal {
    label: Label,
    children: Vec<Node>,
}

impl Internal {
    pub fn new(label: Label, children: Vec<Node>) -> Result<Self, TreeError> {
        if children.is_empty() {
            return Err(TreeError::NoChildren(label.to_string()));
        }
        Ok(Internal { label, children })
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn children(&self) -> &[Node] {
        &self.children
    }

    pub fn last_child(&self) -> &Node {
        self.children.last().expect("internal nodes have children")
    }

    pub(crate) fn from_parts(label: Label, children: Vec<Node>) -> Self {
        debug_assert!(!children.is_empty());
        Internal { label, children }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(Arc<Token>),
    Internal(Arc<Internal>),
}

impl Node {
    pub fn leaf(token: Token) -> Node {
        Node::Leaf(Arc::new(token))
    }

    pub fn internal(label: Label, children: Vec<Node>) -> Result<Node, TreeError> {
        Ok(Node::Internal(Arc::new(Internal::new(label, children)?)))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }

    pub fn as_internal(&self) -> Option<&Arc<Internal>> {
        match self {
            Node::Internal(n) => Some(n),
            Node::Leaf(_) => None,
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Internal(n) => n.children.iter().map(Node::leaf_count).sum(),
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Token>) {
        match self {
            Node::Leaf(t) => out.push(t),
            Node::Internal(n) => n.children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    fn internal_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Internal(n) => 1 + n.children.iter().map(Node::internal_count).sum::<usize>(),
        }
    }
}

/// A rightmost-chain position, counted from the root (depth 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainRef(pub usize);

/// A constituency tree, or the empty tree for a zero-length sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ConstituencyTree {
    root: Option<Arc<Internal>>,
    len: usize,
}

impl ConstituencyTree {
    pub fn empty() -> Self {
        ConstituencyTree::default()
    }

    pub fn from_root(root: Internal) -> Self {
        Self::from_arc(Arc::new(root))
    }

    pub fn from_arc(root: Arc<Internal>) -> Self {
        let len = root.children.iter().map(Node::leaf_count).sum();
        ConstituencyTree {
            root: Some(root),
            len,
        }
    }

    /// Wraps a node as a tree; a bare leaf cannot be a root.
    pub fn from_node(node: Node) -> Option<Self> {
        node.as_internal().map(|n| Self::from_arc(n.clone()))
    }

    pub(crate) fn from_arc_with_len(root: Arc<Internal>, len: usize) -> Self {
        debug_assert_eq!(
            len,
            root.children.iter().map(Node::leaf_count).sum::<usize>()
        );
        ConstituencyTree {
            root: Some(root),
            len,
        }
    }

    pub fn root(&self) -> Option<&Arc<Internal>> {
        self.root.as_ref()
    }

    pub fn root_node(&self) -> Option<Node> {
        self.root.clone().map(Node::Internal)
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    /// Number of leaves.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Leaves in sentence order; index in the returned vector is the leaf's
    /// position.
    pub fn leaves(&self) -> Vec<&Token> {
        let mut out = Vec::with_capacity(self.len);
        if let Some(root) = &self.root {
            root.children
                .iter()
                .for_each(|c| c.collect_leaves(&mut out));
        }
        out
    }

    pub fn tokens(&self) -> Vec<Token> {
        self.leaves().into_iter().cloned().collect()
    }

    /// Same tree with leaf tags replaced, in sentence order. Panics if
    /// `tags.len()` differs from the number of leaves.
    pub fn with_tags<S: AsRef<str>>(&self, tags: &[S]) -> ConstituencyTree {
        assert_eq!(tags.len(), self.len, "one tag per leaf");
        fn retag<S: AsRef<str>>(node: &Node, tags: &mut std::slice::Iter<'_, S>) -> Node {
            match node {
                Node::Leaf(t) => {
                    let pos = tags.next().expect("tag count checked").as_ref();
                    Node::Leaf(Arc::new(Token {
                        word: t.word.clone(),
                        pos: pos.to_string(),
                    }))
                }
                Node::Internal(n) => Node::Internal(Arc::new(Internal {
                    label: n.label.clone(),
                    children: n.children.iter().map(|c| retag(c, tags)).collect(),
                })),
            }
        }
        match self.root_node() {
            None => ConstituencyTree::empty(),
            Some(root) => match retag(&root, &mut tags.iter()) {
                Node::Internal(r) => ConstituencyTree::from_arc_with_len(r, self.len),
                Node::Leaf(_) => unreachable!(),
            },
        }
    }

    pub fn internal_count(&self) -> usize {
        self.root_node().map_or(0, |n| n.internal_count())
    }

    /// Internal nodes from the root down through last children.
    pub fn rightmost_chain(&self) -> Vec<&Arc<Internal>> {
        let mut chain = Vec::new();
        let mut cur = self.root.as_ref();
        while let Some(node) = cur {
            chain.push(node);
            cur = node.last_child().as_internal();
        }
        chain
    }

    pub fn chain_len(&self) -> usize {
        let mut n = 0;
        let mut cur = self.root.as_ref();
        while let Some(node) = cur {
            n += 1;
            cur = node.last_child().as_internal();
        }
        n
    }

    pub fn chain_node(&self, at: ChainRef) -> Option<&Arc<Internal>> {
        self.rightmost_chain().get(at.0).copied()
    }

    /// True iff some internal node has an internal node as its only child.
    pub fn has_unary_chains(&self) -> bool {
        fn walk(n: &Internal) -> bool {
            if let [Node::Internal(_)] = n.children.as_slice() {
                return true;
            }
            n.children
                .iter()
                .any(|c| c.as_internal().is_some_and(|c| walk(c)))
        }
        self.root.as_ref().is_some_and(|r| walk(r))
    }

    /// Merges every maximal unary chain into one node labeled with the
    /// joined chain labels.
    pub fn collapse_unary_chains(&self) -> ConstituencyTree {
        fn collapse(n: &Arc<Internal>) -> Arc<Internal> {
            let mut labels = vec![n.label.clone()];
            let mut bottom = n;
            while let [Node::Internal(only)] = bottom.children.as_slice() {
                labels.push(only.label.clone());
                bottom = only;
            }
            let children: Vec<Node> = bottom
                .children
                .iter()
                .map(|c| match c {
                    Node::Leaf(_) => c.clone(),
                    Node::Internal(ci) => Node::Internal(collapse(ci)),
                })
                .collect();
            if labels.len() == 1 && children == n.children {
                return n.clone();
            }
            Arc::new(Internal::from_parts(Label::join(&labels), children))
        }
        match &self.root {
            None => ConstituencyTree::empty(),
            Some(r) => ConstituencyTree::from_arc_with_len(collapse(r), self.len),
        }
    }

    /// Expands every chain label back into nested single-child nodes.
    ///
    /// Inverse of [`collapse_unary_chains`](Self::collapse_unary_chains) on
    /// trees whose input labels were atomic. Malformed chain labels cannot be
    /// constructed (see [`Label::new`]), so this is infallible.
    pub fn restore_unary_chains(&self) -> ConstituencyTree {
        fn restore(n: &Arc<Internal>) -> Arc<Internal> {
            let children: Vec<Node> = n
                .children
                .iter()
                .map(|c| match c {
                    Node::Leaf(_) => c.clone(),
                    Node::Internal(ci) => Node::Internal(restore(ci)),
                })
                .collect();
            if !n.label.is_chain() {
                return Arc::new(Internal::from_parts(n.label.clone(), children));
            }
            let parts: Vec<Label> = n.label.parts().collect();
            let mut node = Internal::from_parts(parts[parts.len() - 1].clone(), children);
            for label in parts[..parts.len() - 1].iter().rev() {
                node = Internal::from_parts(label.clone(), vec![Node::Internal(Arc::new(node))]);
            }
            Arc::new(node)
        }
        match &self.root {
            None => ConstituencyTree::empty(),
            Some(r) => ConstituencyTree::from_arc_with_len(restore(r), self.len),
        }
    }

    fn fmt_node(node: &Node, out: &mut String) {
        match node {
            Node::Leaf(t) => out.push_str(t.word()),
            Node::Internal(n) => {
                out.push('(');
                out.push_str(n.label.as_str());
                for c in &n.children {
                    out.push(' ');
                    Self::fmt_node(c, out);
                }
                out.push(')');
            }
        }
    }
}

/// Structural equality: same shape, labels and words; tags are compared only
/// where both trees carry them.
pub fn tree_equal(a: &ConstituencyTree, b: &ConstituencyTree) -> bool {
    fn node_eq(a: &Node, b: &Node) -> bool {
        match (a, b) {
            (Node::Leaf(x), Node::Leaf(y)) => x.matches(y),
            (Node::Internal(x), Node::Internal(y)) => {
                Arc::ptr_eq(x, y)
                    || (x.label == y.label
                        && x.children.len() == y.children.len()
                        && x.children
                            .iter()
                            .zip(&y.children)
                            .all(|(p, q)| node_eq(p, q)))
            }
            _ => false,
        }
    }
    a.len == b.len
        && match (&a.root, &b.root) {
            (None, None) => true,
            (Some(x), Some(y)) => node_eq(&Node::Internal(x.clone()), &Node::Internal(y.clone())),
            _ => false,
        }
}

/// Compact notation: every parenthesised group is a phrase and bare atoms
/// are untagged words, e.g. `(S (NP Arthur) (VP is))`. The empty tree
/// prints as `()`.
impl fmt::Display for ConstituencyTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.root {
            None => f.write_str("()"),
            Some(r) => {
                let mut s = String::new();
                Self::fmt_node(&Node::Internal(r.clone()), &mut s);
                f.write_str(&s)
            }
        }
    }
}

impl FromStr for ConstituencyTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = CompactParser { src: s, pos: 0 };
        p.skip_ws();
        if p.src[p.pos..].starts_with("()") {
            p.pos += 2;
            p.skip_ws();
            return if p.pos == s.len() {
                Ok(ConstituencyTree::empty())
            } else {
                Err(p.err("trailing input"))
            };
        }
        let node = p.node()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.err("trailing input"));
        }
        ConstituencyTree::from_node(node).ok_or(TreeError::Syntax {
            offset: 0,
            message: "root must be a phrase".into(),
        })
    }
}

struct CompactParser<'a> {
    src: &'a str,
    pos: usize,
}

impl CompactParser<'_> {
    fn err(&self, message: &str) -> TreeError {
        TreeError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn atom(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn node(&mut self) -> Result<Node, TreeError> {
        self.skip_ws();
        if !self.src[self.pos..].starts_with('(') {
            let word = self.atom();
            if word.is_empty() {
                return Err(self.err("expected word or '('"));
            }
            return Ok(Node::leaf(Token::untagged(word)?));
        }
        self.pos += 1;
        self.skip_ws();
        let label = Label::new(self.atom()).map_err(|_| self.err("expected label"))?;
        let mut children = Vec::new();
        loop {
            self.skip_ws();
            match self.src[self.pos..].chars().next() {
                None => return Err(self.err("unbalanced parentheses")),
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                Some(_) => children.push(self.node()?),
            }
        }
        Node::internal(label, children).map_err(|_| self.err("phrase without children"))
    }
}

#[cfg(test)]
pub(crate) fn t(s: &str) -> ConstituencyTree {
    s.parse().unwrap()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    const ARTHUR: &str = "(S (NP Arthur) (VP is (NP (NP King) (PP of (NP the Britons)))))";

    fn chain_labels(tree: &ConstituencyTree) -> Vec<String> {
        tree.rightmost_chain()
            .iter()
            .map(|n| n.label().to_string())
            .collect()
    }

    #[test]
    fn rightmost_chain_examples() {
        assert!(ConstituencyTree::empty().rightmost_chain().is_empty());
        assert_eq!(chain_labels(&t(ARTHUR)), ["S", "VP", "NP", "PP", "NP"]);
        assert_eq!(t(ARTHUR).chain_len(), 5);
        assert_eq!(chain_labels(&t("(X w)")), ["X"]);
    }

    #[test]
    fn unary_chain_detection() {
        assert!(t("(S (NP Arthur))").has_unary_chains());
        assert!(!t("(NP Arthur)").has_unary_chains());
        assert!(!t(ARTHUR).has_unary_chains());
        assert!(t("(S (NP a) (VP (V (X b))))").has_unary_chains());
    }

    #[test]
    fn collapse_examples() {
        assert_eq!(
            t("(S (NP Arthur))").collapse_unary_chains(),
            t("(S+NP Arthur)")
        );
        assert_eq!(t(ARTHUR).collapse_unary_chains(), t(ARTHUR));
        let collapsed = t("(A (B (C x) (D y)))").collapse_unary_chains();
        assert_eq!(collapsed, t("(A+B (C x) (D y))"));
        assert!(!collapsed.has_unary_chains());
        assert_eq!(collapsed.restore_unary_chains(), t("(A (B (C x) (D y)))"));
    }

    #[test]
    fn restore_examples() {
        assert_eq!(
            t("(S+NP Arthur)").restore_unary_chains(),
            t("(S (NP Arthur))")
        );
        assert_eq!(t(ARTHUR).restore_unary_chains(), t(ARTHUR));
        let restored = t("(A+B+C x)").restore_unary_chains();
        assert_eq!(restored, t("(A (B (C x)))"));
        assert_eq!(restored.collapse_unary_chains(), t("(A+B+C x)"));
    }

    #[test]
    fn malformed_chain_labels_are_rejected() {
        for bad in ["+A", "A+", "A++B", "+"] {
            assert!(
                matches!(Label::new(bad), Err(TreeError::MalformedLabel(_))),
                "{bad}"
            );
        }
        assert!(Label::atomic("A+B").is_err());
        assert!(Label::new("").is_err());
        assert!(Label::new("A B").is_err());
    }

    #[test]
    fn equality_ignores_missing_tags() {
        let a = t("(NP Arthur)");
        let tagged = ConstituencyTree::from_root(
            Internal::new(
                Label::new("NP").unwrap(),
                vec![Node::leaf(Token::new("Arthur", "NNP").unwrap())],
            )
            .unwrap(),
        );
        let other = ConstituencyTree::from_root(
            Internal::new(
                Label::new("NP").unwrap(),
                vec![Node::leaf(Token::new("Arthur", "NN").unwrap())],
            )
            .unwrap(),
        );
        assert!(tree_equal(&a, &a));
        assert!(tree_equal(&a, &tagged));
        assert!(!tree_equal(&tagged, &other));
        assert!(!tree_equal(
            &t("(S (NP a) (VP b))"),
            &t("(S (NP a) (NP b))")
        ));
        assert!(!tree_equal(&a, &ConstituencyTree::empty()));
    }

    #[test]
    fn counts_and_leaves() {
        let fig = t(ARTHUR);
        assert_eq!(fig.len(), 6);
        assert_eq!(fig.internal_count(), 7);
        let words: Vec<_> = fig.leaves().iter().map(|t| t.word().to_string()).collect();
        assert_eq!(words, ["Arthur", "is", "King", "of", "the", "Britons"]);
        assert_eq!(ConstituencyTree::empty().len(), 0);
    }

    #[test]
    fn compact_notation_errors() {
        assert!("(S".parse::<ConstituencyTree>().is_err());
        assert!("(S)".parse::<ConstituencyTree>().is_err());
        assert!("word".parse::<ConstituencyTree>().is_err());
        assert_eq!(
            "()".parse::<ConstituencyTree>().unwrap(),
            ConstituencyTree::empty()
        );
    }

    /// Random trees over atomic labels, unary chains allowed.
    pub(crate) fn arb_tree() -> impl Strategy<Value = ConstituencyTree> {
        let label = prop::sample::select(vec!["A", "B", "C", "NP", "VP"]);
        let leaf = "[a-z]{1,3}".prop_map(|w| Node::leaf(Token::untagged(w).unwrap()));
        let node = leaf.prop_recursive(5, 24, 4, move |inner| {
            (label.clone(), prop::collection::vec(inner, 1..4))
                .prop_map(|(l, cs)| Node::internal(Label::new(l).unwrap(), cs).unwrap())
        });
        (
            prop::sample::select(vec!["S", "X"]),
            prop::collection::vec(node, 1..4),
        )
            .prop_map(|(l, cs)| {
                ConstituencyTree::from_root(Internal::new(Label::new(l).unwrap(), cs).unwrap())
            })
    }

    proptest! {
        #[test]
        fn collapse_restore_round_trip(tree in arb_tree()) {
            let collapsed = tree.collapse_unary_chains();
            prop_assert!(!collapsed.has_unary_chains());
            prop_assert_eq!(collapsed.collapse_unary_chains(), collapsed.clone());
            prop_assert_eq!(collapsed.restore_unary_chains(), tree.clone());
            prop_assert_eq!(collapsed.leaves(), tree.leaves());
        }

        #[test]
        fn chain_length_matches_descent(tree in arb_tree()) {
            let mut depth = 0;
            let mut node = tree.root().cloned();
            while let Some(n) = node {
                depth += 1;
                node = n.last_child().as_internal().cloned();
            }
            prop_assert_eq!(tree.chain_len(), depth);
            prop_assert_eq!(tree.rightmost_chain().len(), depth);
        }

        #[test]
        fn compact_display_round_trip(tree in arb_tree()) {
            prop_assert_eq!(tree.to_string().parse::<ConstituencyTree>().unwrap(), tree);
        }
    }
}
