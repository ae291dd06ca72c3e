//! Penn-Treebank-style bracketed files.
//!
//! `(TAG word)` groups are preterminals and become tagged leaves. A
//! label-less, `TOP` or `ROOT` wrapper around a single phrase is dropped.
//! Files may hold one tree per line or pretty-printed multi-line trees; a
//! line that starts with `(` in the first column always begins a new tree,
//! so a malformed entry cannot swallow the ones after it.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::tree::{ConstituencyTree, Internal, Label, Node, Token, TreeError, SEPARATOR};

/// Written for leaves that carry no tag.
pub const UNTAGGED_POS: &str = "XX";

const EMPTY_ELEMENT: &str = "-NONE-";

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error("byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("entry {index}: {cause}")]
    Entry {
        index: usize,
        cause: Box<TreebankError>,
    },
    #[error("sentence has no tokens after removing empty elements")]
    Degenerate,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_err(offset: usize, message: impl Into<String>) -> TreebankError {
    TreebankError::Format {
        offset,
        message: message.into(),
    }
}

enum Sexp {
    Atom(String),
    List {
        label: Option<String>,
        items: Vec<Sexp>,
        offset: usize,
    },
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn atom(&mut self) -> &'a str {
        let rest = &self.src[self.pos..];
        let end = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn sexp(&mut self) -> Result<Sexp, TreebankError> {
        self.skip_ws();
        match self.peek() {
            None => Err(format_err(self.pos, "unexpected end of input")),
            Some(')') => Err(format_err(self.pos, "unexpected ')'")),
            Some('(') => {
                let offset = self.pos;
                self.pos += 1;
                self.skip_ws();
                let label = match self.peek() {
                    Some('(') | Some(')') | None => None,
                    Some(_) => Some(self.atom().to_string()),
                };
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(format_err(offset, "unbalanced parentheses")),
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => items.push(self.sexp()?),
                    }
                }
                Ok(Sexp::List {
                    label,
                    items,
                    offset,
                })
            }
            Some(_) => Ok(Sexp::Atom(self.atom().to_string())),
        }
    }
}

fn to_node(sexp: Sexp) -> Result<Node, TreebankError> {
    match sexp {
        Sexp::Atom(word) => Ok(Node::leaf(Token::untagged(word)?)),
        Sexp::List {
            label,
            mut items,
            offset,
        } => {
            let label = label.ok_or_else(|| format_err(offset, "constituent without a label"))?;
            if items.is_empty() {
                return Err(format_err(offset, format!("empty constituent ({label})")));
            }
            if let [Sexp::Atom(word)] = items.as_slice() {
                return Ok(Node::leaf(Token::new(word.clone(), label)?));
            }
            let label = Label::new(&label).map_err(|e| format_err(offset, e.to_string()))?;
            let children = items
                .drain(..)
                .map(to_node)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Node::Internal(Arc::new(Internal::new(label, children)?)))
        }
    }
}

/// Parses one bracketed tree.
pub fn parse_bracketed(text: &str) -> Result<ConstituencyTree, TreebankError> {
    let mut reader = Reader { src: text, pos: 0 };
    let mut sexp = reader.sexp()?;
    reader.skip_ws();
    if reader.pos != text.len() {
        return Err(format_err(reader.pos, "trailing input after tree"));
    }
    loop {
        match sexp {
            Sexp::List {
                label,
                mut items,
                offset,
            } if matches!(label.as_deref(), None | Some("TOP") | Some("ROOT"))
                && items.len() == 1
                && matches!(&items[0], Sexp::List { items: inner, .. } if !matches!(inner.as_slice(), [Sexp::Atom(_)])) =>
            {
                let _ = offset;
                sexp = items.pop().expect("one item");
            }
            other => {
                let offset = match &other {
                    Sexp::List { offset, .. } => *offset,
                    Sexp::Atom(_) => 0,
                };
                return match to_node(other)? {
                    Node::Internal(root) => Ok(ConstituencyTree::from_arc(root)),
                    Node::Leaf(_) => Err(format_err(offset, "leaf at root")),
                };
            }
        }
    }
}

/// Canonical one-line form. Untagged leaves are written with
/// [`UNTAGGED_POS`]; the empty tree is the empty string.
pub fn write_bracketed(tree: &ConstituencyTree) -> String {
    fn write(node: &Node, out: &mut String) {
        match node {
            Node::Leaf(t) => {
                out.push('(');
                out.push_str(if t.has_pos() { t.pos() } else { UNTAGGED_POS });
                out.push(' ');
                out.push_str(t.word());
                out.push(')');
            }
            Node::Internal(n) => {
                out.push('(');
                out.push_str(n.label().as_str());
                for c in n.children() {
                    out.push(' ');
                    write(c, out);
                }
                out.push(')');
            }
        }
    }
    let mut out = String::new();
    if let Some(root) = tree.root_node() {
        write(&root, &mut out);
    }
    out
}

/// Removes function tags and coindexation: everything from the first `-` or
/// `=` on. Labels that start with `-` (`-LRB-`, `-NONE-`) are atomic.
pub fn strip_function_tags(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    match label.find(['-', '=']) {
        Some(i) if i > 0 => &label[..i],
        _ => label,
    }
}

/// Drops empty elements, strips function tags and collapses unary chains.
pub fn normalize(tree: &ConstituencyTree) -> Result<ConstituencyTree, TreebankError> {
    fn clean(node: &Node) -> Result<Option<Node>, TreebankError> {
        match node {
            Node::Leaf(t) if t.pos() == EMPTY_ELEMENT => Ok(None),
            Node::Leaf(_) => Ok(Some(node.clone())),
            Node::Internal(n) => {
                let mut children = Vec::with_capacity(n.children().len());
                for c in n.children() {
                    children.extend(clean(c)?);
                }
                if children.is_empty() {
                    return Ok(None);
                }
                let parts: Vec<Label> = n
                    .label()
                    .parts()
                    .map(|p| Label::new(strip_function_tags(p.as_str())))
                    .collect::<Result<_, _>>()?;
                Ok(Some(Node::Internal(Arc::new(Internal::new(
                    Label::join(&parts),
                    children,
                )?))))
            }
        }
    }
    let Some(root) = tree.root_node() else {
        return Err(TreebankError::Degenerate);
    };
    match clean(&root)? {
        Some(Node::Internal(r)) => Ok(ConstituencyTree::from_arc(r).collapse_unary_chains()),
        _ => Err(TreebankError::Degenerate),
    }
}

fn check_atomic_labels(tree: &ConstituencyTree) -> Result<(), TreebankError> {
    fn walk(n: &Internal) -> Result<(), TreebankError> {
        if n.label().as_str().contains(SEPARATOR) {
            Label::atomic(n.label().as_str())?;
        }
        n.children()
            .iter()
            .filter_map(Node::as_internal)
            .try_for_each(|c| walk(c))
    }
    tree.root().map_or(Ok(()), |r| walk(r))
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: usize,
    pub tree: ConstituencyTree,
    pub raw: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Strip empty elements and function tags, and collapse unary chains.
    /// With this on, input labels must be atomic.
    pub normalize: bool,
    /// Fail on the first malformed entry instead of skipping it.
    pub strict: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            normalize: true,
            strict: true,
        }
    }
}

#[derive(Debug, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    /// Entries dropped in non-strict mode, by position in the file.
    pub skipped: Vec<(usize, TreebankError)>,
}

impl Corpus {
    pub fn trees(&self) -> impl Iterator<Item = &ConstituencyTree> {
        self.entries.iter().map(|e| &e.tree)
    }
}

/// Splits a file into the raw text of each bracketed entry.
pub fn split_entries(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut depth = 0i64;
    for line in text.lines() {
        if line.starts_with('(') && depth > 0 {
            out.push(std::mem::take(&mut current));
            depth = 0;
        }
        for c in line.chars() {
            if depth == 0 && !c.is_whitespace() && current.trim().is_empty() {
                current.clear();
            }
            current.push(c);
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth <= 0 {
                        out.push(std::mem::take(&mut current));
                        depth = 0;
                    }
                }
                _ => {}
            }
        }
        if depth > 0 {
            current.push('\n');
        }
    }
    if !current.trim().is_empty() {
        out.push(current);
    }
    out
}

pub fn read_corpus(text: &str, options: LoadOptions) -> Result<Corpus, TreebankError> {
    let mut corpus = Corpus::default();
    for (index, raw) in split_entries(text).into_iter().enumerate() {
        let parsed = parse_bracketed(&raw).and_then(|tree| {
            if options.normalize {
                check_atomic_labels(&tree)?;
                normalize(&tree)
            } else {
                Ok(tree)
            }
        });
        match parsed {
            Ok(tree) => corpus.entries.push(CorpusEntry {
                id: corpus.entries.len(),
                tree,
                raw,
            }),
            Err(e) if options.strict => {
                return Err(TreebankError::Entry {
                    index,
                    cause: Box::new(e),
                });
            }
            Err(e) => corpus.skipped.push((index, e)),
        }
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>, options: LoadOptions) -> Result<Corpus, TreebankError> {
    read_corpus(&fs::read_to_string(path)?, options)
}

/// Deterministic split: every `k`-th entry (by id) is held out.
pub fn holdout_split(entries: &[CorpusEntry], k: usize) -> (Vec<CorpusEntry>, Vec<CorpusEntry>) {
    entries
        .iter()
        .cloned()
        .partition(|e| k == 0 || e.id % k != k - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::t;
    use proptest::prelude::*;

    #[test]
    fn preterminals_become_tagged_leaves() {
        let tree = parse_bracketed("(S (NP (NNP Arthur)) (VP (VBZ is) (NP (NN King))))").unwrap();
        let leaves: Vec<_> = tree
            .leaves()
            .iter()
            .map(|l| (l.word().to_string(), l.pos().to_string()))
            .collect();
        assert_eq!(
            leaves,
            [
                ("Arthur".into(), "NNP".into()),
                ("is".into(), "VBZ".into()),
                ("King".into(), "NN".into())
            ]
        );
        assert_eq!(
            tree,
            t("(S (NP Arthur) (VP is (NP King)))").with_tags(&["NNP", "VBZ", "NN"])
        );
    }

    #[test]
    fn wrappers_are_unwrapped() {
        let inner = "(S (NP (NNP Arthur)) (VP (VBZ is)))";
        let plain = parse_bracketed(inner).unwrap();
        assert_eq!(parse_bracketed(&format!("({inner})")).unwrap(), plain);
        assert_eq!(parse_bracketed(&format!("( {inner} )")).unwrap(), plain);
        assert_eq!(parse_bracketed(&format!("(TOP {inner})")).unwrap(), plain);
        assert_eq!(
            parse_bracketed(&format!("(ROOT ({inner}))")).unwrap(),
            plain
        );
    }

    #[test]
    fn format_errors() {
        for bad in [
            "(S",
            "(S (NP (NN a))",
            "(S ())",
            "(NN word)",
            "(S (NP (NN a)))  )",
            "",
            "( (NN a) (NN b))",
        ] {
            assert!(
                matches!(parse_bracketed(bad), Err(TreebankError::Format { .. })),
                "{bad:?}"
            );
        }
        match parse_bracketed("(S (NP (NN a)) (VP") {
            Err(TreebankError::Format { offset, .. }) => assert_eq!(offset, 15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn function_tags() {
        assert_eq!(strip_function_tags("NP-SBJ-1"), "NP");
        assert_eq!(strip_function_tags("PP-LOC=2"), "PP");
        assert_eq!(strip_function_tags("NP=3"), "NP");
        assert_eq!(strip_function_tags("-LRB-"), "-LRB-");
        assert_eq!(strip_function_tags("-NONE-"), "-NONE-");
        assert_eq!(strip_function_tags("PRP$"), "PRP$");
    }

    #[test]
    fn normalization() {
        let raw =
            parse_bracketed("(S (NP-SBJ-1 (PRP he)) (VP (VBD left) (NP (-NONE- *T*-1))) (. .))")
                .unwrap();
        let norm = normalize(&raw).unwrap();
        assert_eq!(
            norm,
            t("(S (NP he) (VP left) .)").with_tags(&["PRP", "VBD", "."])
        );
        assert!(!norm.has_unary_chains());
        assert_eq!(normalize(&norm).unwrap(), norm);

        // Removing the subject trace leaves S over VP alone.
        let raw = parse_bracketed("(SBAR (IN that) (S (NP-SBJ (-NONE- *T*-1)) (VP (VBD ruled))))")
            .unwrap();
        assert_eq!(
            normalize(&raw).unwrap(),
            t("(SBAR that (S+VP ruled))").with_tags(&["IN", "VBD"])
        );
        let empty = parse_bracketed("(S (NP (-NONE- *)))").unwrap();
        assert!(matches!(normalize(&empty), Err(TreebankError::Degenerate)));
    }

    #[test]
    fn writing() {
        assert_eq!(
            write_bracketed(&t("(NP Arthur)").with_tags(&["NNP"])),
            "(NP (NNP Arthur))"
        );
        assert_eq!(write_bracketed(&t("(NP Arthur)")), "(NP (XX Arthur))");
        assert_eq!(write_bracketed(&ConstituencyTree::empty()), "");
    }

    #[test]
    fn corpus_loading() {
        let text =
            "(S (NP (NN a)) (VP (VB b)))\n( (S (NN c) (NN d)) )\n(NP\n  (DT the)\n  (NN e))\n";
        let corpus = read_corpus(text, LoadOptions::default()).unwrap();
        assert_eq!(corpus.entries.len(), 3);
        assert_eq!(
            corpus.entries.iter().map(|e| e.id).collect::<Vec<_>>(),
            [0, 1, 2]
        );
        assert_eq!(corpus.entries[2].tree.len(), 2);

        let broken = "(S (NP (NN a)) (VP (VB b)))\n(S (NP (NN x)\n(NP (NN ok))\n";
        match read_corpus(broken, LoadOptions::default()) {
            Err(TreebankError::Entry { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let lenient = read_corpus(
            broken,
            LoadOptions {
                normalize: true,
                strict: false,
            },
        )
        .unwrap();
        assert_eq!(lenient.entries.len(), 2);
        assert_eq!(lenient.skipped.len(), 1);
        assert_eq!(lenient.skipped[0].0, 1);

        let plus = "(S (NP+X (NN a)) (NN b))";
        assert!(read_corpus(plus, LoadOptions::default()).is_err());
        let raw = read_corpus(
            plus,
            LoadOptions {
                normalize: false,
                strict: true,
            },
        )
        .unwrap();
        assert_eq!(raw.entries[0].tree.to_string(), "(S (NP+X a) b)");
    }

    #[test]
    fn holdout() {
        let text = (0..10)
            .map(|i| format!("(S (NN w{i}))\n"))
            .collect::<String>();
        let corpus = read_corpus(&text, LoadOptions::default()).unwrap();
        let (train, test) = holdout_split(&corpus.entries, 5);
        assert_eq!(train.len(), 8);
        assert_eq!(test.iter().map(|e| e.id).collect::<Vec<_>>(), [4, 9]);
    }

    fn arb_tagged() -> impl Strategy<Value = ConstituencyTree> {
        crate::tree::tests::arb_tree().prop_map(|tree| {
            let tags: Vec<&str> = (0..tree.len())
                .map(|i| ["NN", "VB", "DT", "-LRB-"][i % 4])
                .collect();
            tree.with_tags(&tags)
        })
    }

    proptest! {
        #[test]
        fn write_parse_round_trip(tree in arb_tagged()) {
            prop_assert_eq!(parse_bracketed(&write_bracketed(&tree)).unwrap(), tree);
        }

        #[test]
        fn normalize_is_idempotent(tree in arb_tagged()) {
            let once = normalize(&tree).unwrap();
            prop_assert!(!once.has_unary_chains());
            prop_assert_eq!(normalize(&once).unwrap(), once);
        }
    }
}
