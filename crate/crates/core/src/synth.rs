//! Seeded generator of raw, treebank-style trees: preterminals, function
//! tags, coindexed traces and `-NONE-` elements, so that normalization has
//! real work to do.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tree::{ConstituencyTree, Internal, Label, Node, Token};

const DT: &[&str] = &["the", "a", "every", "this", "some", "no"];
const NN: &[&str] = &[
    "king", "knight", "castle", "sword", "quest", "river", "horse", "court", "table", "grail",
    "forest", "village", "bridge", "tower", "battle", "banner", "letter", "song",
];
const NNS: &[&str] = &[
    "knights", "castles", "swords", "rivers", "horses", "songs", "villages", "banners",
];
const NNP: &[&str] = &[
    "Arthur", "Lancelot", "Camelot", "Merlin", "Gawain", "Britain", "Avalon", "Percival",
];
const PRP: &[&str] = &["he", "she", "they", "it", "we"];
const JJ: &[&str] = &[
    "old", "brave", "dark", "golden", "quiet", "distant", "young", "wise", "round",
];
const VBZ: &[&str] = &["rules", "seeks", "holds", "guards", "sees", "keeps"];
const VBD: &[&str] = &[
    "ruled", "sought", "held", "guarded", "saw", "crossed", "found", "praised", "left",
];
const VBI: &[&str] = &["slept", "waited", "rode", "fell", "returned"];
const VB: &[&str] = &["find", "hold", "cross", "defend", "see"];
const MD: &[&str] = &["will", "must", "can", "might"];
const IN: &[&str] = &[
    "of", "in", "near", "with", "from", "under", "beyond", "before",
];
const RB: &[&str] = &["soon", "never", "quickly", "often", "still"];
const CD: &[&str] = &["two", "three", "seven", "twelve"];
const WDT: &[&str] = &["which", "that"];

struct Gen {
    rng: ChaCha8Rng,
    next_index: usize,
}

fn node(label: &str, children: Vec<Node>) -> Node {
    Node::Internal(Arc::new(
        Internal::new(Label::new(label).expect("valid label"), children).expect("children"),
    ))
}

impl Gen {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn word(&mut self, pos: &str, lexicon: &[&str]) -> Node {
        let w = lexicon[self.rng.random_range(0..lexicon.len())];
        Node::leaf(Token::new(w, pos).expect("non-empty"))
    }

    fn trace(&mut self, kind: &str, index: usize) -> Node {
        Node::leaf(Token::new(format!("{kind}-{index}"), "-NONE-").expect("non-empty"))
    }

    fn coindex(&mut self) -> usize {
        self.next_index += 1;
        self.next_index
    }

    fn simple_np(&mut self) -> Vec<Node> {
        let r: f64 = self.rng.random();
        if r < 0.35 {
            vec![self.word("DT", DT), self.word("NN", NN)]
        } else if r < 0.5 {
            vec![
                self.word("DT", DT),
                self.word("JJ", JJ),
                self.word("NN", NN),
            ]
        } else if r < 0.62 {
            vec![self.word("NNP", NNP)]
        } else if r < 0.68 {
            vec![self.word("NNP", NNP), self.word("NNP", NNP)]
        } else if r < 0.78 {
            vec![self.word("NNS", NNS)]
        } else if r < 0.86 {
            vec![self.word("CD", CD), self.word("NNS", NNS)]
        } else {
            vec![self.word("JJ", JJ), self.word("NNS", NNS)]
        }
    }

    fn np(&mut self, tag: &str, depth: usize) -> Node {
        let label = if tag.is_empty() {
            "NP".to_string()
        } else {
            format!("NP-{tag}")
        };
        let deep = depth < 5;
        let r: f64 = self.rng.random();
        if deep && r < 0.18 {
            let head = self.simple_np();
            let pp = self.pp(depth + 1);
            node(&label, vec![node("NP", head), pp])
        } else if deep && r < 0.24 {
            let head = self.simple_np();
            let rel = self.relative(depth + 1);
            node(&label, vec![node("NP", head), rel])
        } else if deep && r < 0.28 {
            let a = self.simple_np();
            let b = self.simple_np();
            node(
                &label,
                vec![
                    node("NP", a),
                    Node::leaf(Token::new("and", "CC").unwrap()),
                    node("NP", b),
                ],
            )
        } else if tag == "SBJ" && r < 0.4 {
            node(&label, vec![self.word("PRP", PRP)])
        } else {
            let kids = self.simple_np();
            node(&label, kids)
        }
    }

    fn pp(&mut self, depth: usize) -> Node {
        let tag = match self.rng.random_range(0..6) {
            0 => "PP-LOC",
            1 => "PP-TMP",
            _ => "PP",
        };
        let p = self.word("IN", IN);
        let obj = self.np("", depth + 1);
        node(tag, vec![p, obj])
    }

    /// `which` clause with a subject trace; after empty elements go the
    /// inner S has a lone VP.
    fn relative(&mut self, depth: usize) -> Node {
        let i = self.coindex();
        let wh = node(&format!("WHNP-{i}"), vec![self.word("WDT", WDT)]);
        let t = self.trace("*T*", i);
        let vp = self.vp(depth + 1);
        node(
            "SBAR",
            vec![wh, node("S", vec![node("NP-SBJ", vec![t]), vp])],
        )
    }

    fn vp(&mut self, depth: usize) -> Node {
        let deep = depth < 5;
        let r: f64 = self.rng.random();
        if r < 0.3 {
            let v = self.word("VBD", VBD);
            let o = self.np("", depth + 1);
            node("VP", vec![v, o])
        } else if r < 0.42 {
            let v = self.word("VBZ", VBZ);
            let o = self.np("", depth + 1);
            node("VP", vec![v, o])
        } else if deep && r < 0.55 {
            let v = self.word("VBD", VBD);
            let o = self.np("", depth + 1);
            let pp = self.pp(depth + 1);
            node("VP", vec![v, o, pp])
        } else if r < 0.63 {
            let v = self.word("VBD", VBI);
            let pp = self.pp(depth + 1);
            node("VP", vec![v, pp])
        } else if r < 0.69 {
            let v = self.word("VBD", VBI);
            if self.chance(0.5) {
                node("VP", vec![v, node("ADVP", vec![self.word("RB", RB)])])
            } else {
                node("VP", vec![v])
            }
        } else if r < 0.75 {
            let v = self.word("VBZ", &["is", "was"]);
            let adj = if self.chance(0.3) {
                vec![self.word("RB", RB), self.word("JJ", JJ)]
            } else {
                vec![self.word("JJ", JJ)]
            };
            node("VP", vec![v, node("ADJP-PRD", adj)])
        } else if deep && r < 0.83 {
            let v = self.word("VBD", &["said", "knew", "thought"]);
            let comp = self.word("IN", &["that"]);
            let s = self.clause(depth + 1);
            node("VP", vec![v, node("SBAR", vec![comp, s])])
        } else if deep && r < 0.9 {
            let m = self.word("MD", MD);
            let v = self.word("VB", VB);
            let o = self.np("", depth + 1);
            node("VP", vec![m, node("VP", vec![v, o])])
        } else if deep && r < 0.95 {
            // Control verb with an empty subject.
            let v = self.word("VBD", &["wanted", "tried", "hoped"]);
            let i = self.coindex();
            let t = self.trace("*", i);
            let to = Node::leaf(Token::new("to", "TO").unwrap());
            let inner_v = self.word("VB", VB);
            let o = self.np("", depth + 1);
            let inf = node("VP", vec![to, node("VP", vec![inner_v, o])]);
            node("VP", vec![v, node("S", vec![node("NP-SBJ", vec![t]), inf])])
        } else if deep {
            let a = self.vp(depth + 2);
            let b = self.vp(depth + 2);
            node(
                "VP",
                vec![a, Node::leaf(Token::new("and", "CC").unwrap()), b],
            )
        } else {
            let v = self.word("VBD", VBI);
            node("VP", vec![v])
        }
    }

    fn clause(&mut self, depth: usize) -> Node {
        let mut kids = Vec::new();
        if self.chance(0.12) {
            kids.push(self.pp(depth + 1));
            kids.push(Node::leaf(Token::new(",", ",").unwrap()));
        } else if self.chance(0.06) {
            kids.push(node("ADVP-TMP", vec![self.word("RB", RB)]));
        }
        kids.push(self.np("SBJ", depth + 1));
        kids.push(self.vp(depth + 1));
        node("S", kids)
    }

    fn sentence(&mut self) -> Node {
        self.next_index = 0;
        let Node::Internal(s) = self.clause(0) else {
            unreachable!()
        };
        let mut kids = s.children().to_vec();
        if self.chance(0.9) {
            kids.push(Node::leaf(Token::new(".", ".").unwrap()));
        }
        node("S", kids)
    }
}

/// `count` raw trees; identical for identical seeds.
pub fn generate(count: usize, seed: u64) -> Vec<ConstituencyTree> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        next_index: 0,
    };
    (0..count)
        .map(|_| ConstituencyTree::from_node(g.sentence()).expect("internal root"))
        .collect()
}
