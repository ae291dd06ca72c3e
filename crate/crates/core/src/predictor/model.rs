//! Factored averaged perceptron and its text model format.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use super::features::{featurize, StateFeatures};
use super::PredictorError;
use crate::oracle::oracle_action_sequence;
use crate::transition::{apply_action, AjAction, ParserState};
use crate::tree::{ConstituencyTree, Label};

pub const MAGIC: &str = "AJPARSE-MODEL";
pub const VERSION: u32 = 1;

/// Sparse weight table: feature key to one weight per class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Factor {
    classes: usize,
    table: FxHashMap<u64, Vec<i64>>,
}

impl Factor {
    fn new(classes: usize) -> Self {
        Factor {
            classes,
            table: FxHashMap::default(),
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    fn accumulate(&self, features: &[u64], out: &mut [i64]) {
        for f in features {
            if let Some(w) = self.table.get(f) {
                out.iter_mut().zip(w).for_each(|(o, w)| *o += w);
            }
        }
    }

    fn bump(&mut self, features: &[u64], class: usize, delta: i64) {
        for &f in features {
            self.table.entry(f).or_insert_with(|| vec![0; self.classes])[class] += delta;
        }
    }
}

/// One decision per factor. Classes of the label factors are 0 for `None`
/// and `1 + i` for the `i`-th vocabulary label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Decision {
    pub target: usize,
    pub parent: usize,
    pub new: usize,
}

/// Factor scores of one parser state, all depths at once.
#[derive(Debug, Clone)]
pub struct StepScores {
    pub chain_len: usize,
    pub classes: usize,
    pub target: Vec<i64>,
    pub parent: Vec<i64>,
    pub new: Vec<i64>,
}

impl StepScores {
    pub fn parent_at(&self, d: usize) -> &[i64] {
        &self.parent[d * self.classes..(d + 1) * self.classes]
    }

    pub fn new_at(&self, d: usize) -> &[i64] {
        &self.new[d * self.classes..(d + 1) * self.classes]
    }

    pub fn total(&self, x: Decision) -> i64 {
        self.target[x.target] + self.parent_at(x.target)[x.parent] + self.new_at(x.target)[x.new]
    }

    /// Lowest parent class allowed in this state.
    pub fn min_parent(&self) -> usize {
        usize::from(self.chain_len == 0)
    }

    pub fn allows_juxtapose(&self) -> bool {
        self.chain_len > 0 && self.classes > 1
    }

    /// Adds one to every entry that disagrees with `gold`, so that gold wins
    /// the argmax only by a strict margin.
    pub fn with_cost(mut self, gold: Decision) -> StepScores {
        let c = self.classes;
        for (d, t) in self.target.iter_mut().enumerate() {
            *t += i64::from(d != gold.target);
        }
        let own = |i: usize, class: usize| i / c == gold.target && i % c == class;
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p += i64::from(!own(i, gold.parent));
        }
        for (i, q) in self.new.iter_mut().enumerate() {
            *q += i64::from(!own(i, gold.new));
        }
        self
    }

    /// Highest-scoring legal decision; ties go to the action that sorts
    /// first.
    pub fn argmax(&self) -> Decision {
        let mut best: Option<(i64, Decision)> = None;
        let mut offer = |x: Decision| {
            let s = self.total(x);
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, x));
            }
        };
        let depths = self.chain_len.max(1);
        let parents: Vec<usize> = (0..depths)
            .map(|d| first_max(self.parent_at(d), self.min_parent()))
            .collect();
        for (d, &p) in parents.iter().enumerate() {
            offer(Decision {
                target: d,
                parent: p,
                new: 0,
            });
        }
        if self.allows_juxtapose() {
            for (d, &p) in parents.iter().enumerate() {
                offer(Decision {
                    target: d,
                    parent: p,
                    new: first_max(self.new_at(d), 1),
                });
            }
        }
        best.expect("at least one legal action").1
    }
}

/// Index of the first maximum of `scores[from..]`.
pub(crate) fn first_max(scores: &[i64], from: usize) -> usize {
    let mut best = from;
    for (i, &s) in scores.iter().enumerate().skip(from + 1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    labels: Vec<Label>,
    /// Common factor of all weights (the averaging clock).
    scale: i64,
    index: FxHashMap<Label, usize>,
    target: Factor,
    parent: Factor,
    new: Factor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 5, seed: 1 }
    }
}

/// Oracle-action accuracy under teacher forcing during one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub steps: usize,
    pub target: f64,
    pub parent: f64,
    pub new: f64,
    pub action: f64,
}

impl std::fmt::Display for EpochStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "epoch {} steps {} target {:.4} parent {:.4} new {:.4} action {:.4}",
            self.epoch, self.steps, self.target, self.parent, self.new, self.action
        )
    }
}

impl Model {
    fn with_labels(mut labels: Vec<Label>) -> Self {
        labels.sort();
        labels.dedup();
        let classes = labels.len() + 1;
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i + 1))
            .collect();
        Model {
            labels,
            scale: 1,
            index,
            target: Factor::new(1),
            parent: Factor::new(classes),
            new: Factor::new(classes),
        }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn factors(&self) -> [&Factor; 3] {
        [&self.target, &self.parent, &self.new]
    }

    pub fn class_label(&self, class: usize) -> Option<&Label> {
        class.checked_sub(1).map(|i| &self.labels[i])
    }

    fn class_of(&self, label: Option<&Label>) -> usize {
        label.map_or(0, |l| self.index[l])
    }

    pub fn encode(&self, action: &AjAction) -> Decision {
        Decision {
            target: action.target(),
            parent: self.class_of(action.parent_label()),
            new: self.class_of(action.new_label()),
        }
    }

    pub fn decode(&self, x: Decision) -> AjAction {
        let parent = self.class_label(x.parent).cloned();
        match self.class_label(x.new) {
            None => AjAction::attach(x.target, parent),
            Some(q) => AjAction::juxtapose(x.target, parent, q.clone()),
        }
    }

    pub fn scores(&self, f: &StateFeatures, chain_len: usize) -> StepScores {
        scores(&self.target, &self.parent, &self.new, f, chain_len)
    }

    /// Scores shifted by the log-partition over all legal actions, so that
    /// each action's total is its log-probability. Fixed point keeps sums
    /// exact; the ranking within a state is unchanged.
    pub fn log_scores(&self, f: &StateFeatures, chain_len: usize) -> StepScores {
        let raw = self.scores(f, chain_len);
        let scale = self.scale as f64;
        let c = raw.classes;
        let lse = |xs: &[i64]| -> f64 {
            let max = xs.iter().copied().max().expect("non-empty") as f64 / scale;
            max + xs
                .iter()
                .map(|&x| (x as f64 / scale - max).exp())
                .sum::<f64>()
                .ln()
        };
        let per_depth: Vec<f64> = (0..raw.target.len())
            .map(|d| {
                let parent = lse(&raw.parent_at(d)[raw.min_parent()..]);
                let new = if raw.allows_juxtapose() {
                    lse(raw.new_at(d))
                } else {
                    raw.new_at(d)[0] as f64 / scale
                };
                raw.target[d] as f64 / scale + parent + new
            })
            .collect();
        let max = per_depth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + per_depth.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        let fixed = |x: f64| (x * LOG_UNIT).round() as i64;
        StepScores {
            chain_len,
            classes: c,
            target: raw
                .target
                .iter()
                .map(|&t| fixed(t as f64 / scale - log_z))
                .collect(),
            parent: raw
                .parent
                .iter()
                .map(|&p| fixed(p as f64 / scale))
                .collect(),
            new: raw.new.iter().map(|&q| fixed(q as f64 / scale)).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MAGIC} {VERSION}\nscale {}\nlabels {}\n",
            self.scale,
            self.labels.len()
        );
        for l in &self.labels {
            out.push_str(l.as_str());
            out.push('\n');
        }
        for (name, factor) in [
            ("target", &self.target),
            ("parent", &self.parent),
            ("new", &self.new),
        ] {
            let mut keys: Vec<_> = factor.table.keys().copied().collect();
            keys.sort_unstable();
            let _ = writeln!(out, "factor {name} {} {}", factor.classes, keys.len());
            for k in keys {
                let _ = write!(out, "{k:016x}");
                for w in &factor.table[&k] {
                    let _ = write!(out, " {w}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Model, PredictorError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| PredictorError::ModelFormat {
                line: 0,
                message: format!("missing {what}"),
            })
        };
        let bad = |line: usize, message: String| PredictorError::ModelFormat { line, message };

        let (n, header) = next("header")?;
        let version = header
            .strip_prefix(MAGIC)
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| bad(n, "not a model file".into()))?;
        if version != VERSION {
            return Err(PredictorError::ModelVersion {
                found: version,
                expected: VERSION,
            });
        }
        let (n, line) = next("scale")?;
        let scale: i64 = line
            .strip_prefix("scale ")
            .and_then(|c| c.parse().ok())
            .filter(|&c| c > 0)
            .ok_or_else(|| bad(n, format!("expected positive scale, got {line:?}")))?;
        let (n, line) = next("label count")?;
        let count: usize = line
            .strip_prefix("labels ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad(n, format!("expected label count, got {line:?}")))?;
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next("label")?;
            labels.push(Label::new(line).map_err(|e| bad(n, e.to_string()))?);
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad(0, "labels are not sorted and unique".into()));
        }
        let mut model = Model::with_labels(labels);
        model.scale = scale;
        for (name, classes) in [("target", 1), ("parent", count + 1), ("new", count + 1)] {
            let (n, line) = next("factor header")?;
            let parts: Vec<&str> = line.split(' ').collect();
            let entries: usize = match parts.as_slice() {
                ["factor", f, c, e] if *f == name && c.parse() == Ok(classes) => e
                    .parse()
                    .map_err(|_| bad(n, format!("bad entry count {e:?}")))?,
                _ => {
                    return Err(bad(
                        n,
                        format!("expected factor {name} with {classes} classes"),
                    ))
                }
            };
            let factor = match name {
                "target" => &mut model.target,
                "parent" => &mut model.parent,
                _ => &mut model.new,
            };
            for _ in 0..entries {
                let (n, line) = next("weights")?;
                let mut fields = line.split(' ');
                let k = fields
                    .next()
                    .and_then(|k| u64::from_str_radix(k, 16).ok())
                    .ok_or_else(|| bad(n, "bad feature key".into()))?;
                let w: Vec<i64> = fields
                    .map(|w| w.parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad(n, "bad weight".into()))?;
                if w.len() != classes {
                    return Err(bad(
                        n,
                        format!("expected {classes} weights, got {}", w.len()),
                    ));
                }
                factor.table.insert(k, w);
            }
        }
        if let Some((n, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(bad(n, "trailing data".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_text())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model, PredictorError> {
        Model::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Fixed-point units per nat.
const LOG_UNIT: f64 = 1e6;

fn scores(
    target: &Factor,
    parent: &Factor,
    new: &Factor,
    f: &StateFeatures,
    chain_len: usize,
) -> StepScores {
    let classes = parent.classes;
    let depths = f.depths();
    let mut shared_p = vec![0; classes];
    let mut shared_q = vec![0; classes];
    parent.accumulate(&f.shared, &mut shared_p);
    new.accumulate(&f.shared, &mut shared_q);
    let mut s = StepScores {
        chain_len,
        classes,
        target: vec![0; depths],
        parent: shared_p.repeat(depths),
        new: shared_q.repeat(depths),
    };
    for d in 0..depths {
        let block = f.at_depth(d);
        target.accumulate(block, &mut s.target[d..d + 1]);
        parent.accumulate(block, &mut s.parent[d * classes..(d + 1) * classes]);
        new.accumulate(block, &mut s.new[d * classes..(d + 1) * classes]);
    }
    s
}

/// Current weights plus the time-weighted sums needed for averaging.
struct Trainer {
    current: Model,
    sums: [Factor; 3],
    clock: i64,
}

impl Trainer {
    fn update(&mut self, f: &StateFeatures, gold: Decision, guess: Decision) {
        let c = self.clock;
        let m = &mut self.current;
        if gold.target != guess.target {
            for (x, delta) in [(gold, 1), (guess, -1)] {
                m.target.bump(f.at_depth(x.target), 0, delta);
                self.sums[0].bump(f.at_depth(x.target), 0, delta * c);
            }
        }
        if (gold.target, gold.parent) != (guess.target, guess.parent) {
            for (x, delta) in [(gold, 1), (guess, -1)] {
                for block in [&f.shared[..], f.at_depth(x.target)] {
                    m.parent.bump(block, x.parent, delta);
                    self.sums[1].bump(block, x.parent, delta * c);
                }
            }
        }
        if (gold.target, gold.new) != (guess.target, guess.new) {
            for (x, delta) in [(gold, 1), (guess, -1)] {
                for block in [&f.shared[..], f.at_depth(x.target)] {
                    m.new.bump(block, x.new, delta);
                    self.sums[2].bump(block, x.new, delta * c);
                }
            }
        }
    }

    /// Averaged weights scaled by the final clock, so they stay integral.
    fn finish(self) -> Model {
        let mut model = self.current;
        let c = self.clock;
        model.scale = c;
        for (factor, sums) in [&mut model.target, &mut model.parent, &mut model.new]
            .into_iter()
            .zip(self.sums)
        {
            factor.table.retain(|k, w| {
                let u = &sums.table[k];
                w.iter_mut().zip(u).for_each(|(w, u)| *w = c * *w - u);
                w.iter().any(|&x| x != 0)
            });
        }
        model
    }
}

/// Training vocabulary: every label of the given (collapsed) trees.
pub fn collect_labels<'a>(trees: impl IntoIterator<Item = &'a ConstituencyTree>) -> Vec<Label> {
    let mut labels = std::collections::BTreeSet::new();
    fn walk(n: &crate::tree::Internal, out: &mut std::collections::BTreeSet<Label>) {
        out.insert(n.label().clone());
        n.children()
            .iter()
            .filter_map(|c| c.as_internal())
            .for_each(|c| walk(c, out));
    }
    for t in trees {
        if let Some(r) = t.root() {
            walk(r, &mut labels);
        }
    }
    labels.into_iter().collect()
}

/// Teacher-forced training on oracle actions. `on_epoch` receives the
/// factor accuracies of each pass.
pub fn train(
    trees: &[ConstituencyTree],
    config: TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<Model, PredictorError> {
    if trees.is_empty() {
        return Err(PredictorError::EmptyCorpus);
    }
    if config.epochs == 0 {
        return Err(PredictorError::NoEpochs);
    }
    let model = Model::with_labels(collect_labels(trees));
    let classes = model.labels.len() + 1;
    let oracles = trees
        .iter()
        .enumerate()
        .map(|(i, t)| {
            oracle_action_sequence(t).map_err(|e| PredictorError::Oracle {
                index: i,
                source: e,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut trainer = Trainer {
        current: model,
        sums: [Factor::new(1), Factor::new(classes), Factor::new(classes)],
        clock: 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..trees.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut hits = [0usize; 4];
        let mut steps = 0;
        for &i in &order {
            let tokens = trees[i].tokens();
            let mut state = ParserState::new();
            let mut prev = None;
            for (token, action) in tokens.iter().zip(&oracles[i]) {
                let f = featurize(&state, &tokens, prev);
                let chain_len = state.tree().chain_len();
                let gold = trainer.current.encode(action);
                let scores = trainer.current.scores(&f, chain_len);
                let guess = scores.argmax();
                hits[0] += usize::from(gold.target == guess.target);
                hits[1] += usize::from(gold.parent == guess.parent);
                hits[2] += usize::from(gold.new == guess.new);
                hits[3] += usize::from(gold == guess);
                steps += 1;
                let rival = scores.with_cost(gold).argmax();
                if gold != rival {
                    trainer.update(&f, gold, rival);
                }
                trainer.clock += 1;
                state = apply_action(&state, token, action).expect("oracle actions are legal");
                prev = Some(action.kind());
            }
        }
        let acc = |h: usize| {
            if steps == 0 {
                1.0
            } else {
                h as f64 / steps as f64
            }
        };
        on_epoch(&EpochStats {
            epoch,
            steps,
            target: acc(hits[0]),
            parent: acc(hits[1]),
            new: acc(hits[2]),
            action: acc(hits[3]),
        });
    }
    Ok(trainer.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::t;

    fn arthur() -> ConstituencyTree {
        t("(S (NP Arthur) (VP is (NP (NP King) (PP of (NP the Britons)))))")
    }

    #[test]
    fn memorizes_one_tree() {
        let mut last = None;
        train(&[arthur()], TrainConfig { epochs: 5, seed: 1 }, |s| {
            last = Some(*s)
        })
        .unwrap();
        let s = last.unwrap();
        assert_eq!(
            (s.target, s.parent, s.new, s.action),
            (1.0, 1.0, 1.0, 1.0),
            "{s}"
        );
    }

    #[test]
    fn margin_updates_survive_averaging() {
        for gold in [
            t("(S (NP Britain) (VP (VP flourished) and (VP grew)) .)"),
            t("(S (NP Twelve knights) (VP sat (PP at (NP (NP the round table) (PP in (NP the hall))))) .)"),
        ] {
            let m = train(std::slice::from_ref(&gold), TrainConfig { epochs: 5, seed: 1 }, |_| {}).unwrap();
            assert_eq!(crate::predictor::decode_greedy(&m, &gold.tokens()).tree, gold);
        }
    }

    #[test]
    fn cost_penalizes_only_disagreement() {
        let s = StepScores {
            chain_len: 2,
            classes: 2,
            target: vec![0, 0],
            parent: vec![0; 4],
            new: vec![0; 4],
        };
        let gold = Decision {
            target: 1,
            parent: 0,
            new: 1,
        };
        let c = s.with_cost(gold);
        assert_eq!(c.target, [1, 0]);
        assert_eq!(c.parent, [1, 1, 0, 1]);
        assert_eq!(c.new, [1, 1, 1, 0]);
        assert_eq!(c.total(gold), 0);
        assert_ne!(c.argmax(), gold);
    }

    #[test]
    fn encode_decode() {
        let m = Model::with_labels(collect_labels([&arthur()]));
        assert_eq!(
            m.labels().iter().map(Label::as_str).collect::<Vec<_>>(),
            ["NP", "PP", "S", "VP"]
        );
        for a in oracle_action_sequence(&arthur()).unwrap() {
            assert_eq!(m.decode(m.encode(&a)), a);
        }
    }

    #[test]
    fn argmax_ties_go_to_first_action() {
        let s = StepScores {
            chain_len: 2,
            classes: 3,
            target: vec![0, 0],
            parent: vec![0; 6],
            new: vec![0; 6],
        };
        assert_eq!(
            s.argmax(),
            Decision {
                target: 0,
                parent: 0,
                new: 0
            }
        );
        let empty = StepScores {
            chain_len: 0,
            classes: 3,
            target: vec![0],
            parent: vec![0; 3],
            new: vec![0; 3],
        };
        assert_eq!(
            empty.argmax(),
            Decision {
                target: 0,
                parent: 1,
                new: 0
            }
        );
        let mut jux = s.clone();
        jux.new = vec![0, 0, 0, -1, 5, 5];
        assert_eq!(
            jux.argmax(),
            Decision {
                target: 1,
                parent: 0,
                new: 1
            }
        );
    }

    #[test]
    fn text_round_trip_and_determinism() {
        let trees = [
            arthur(),
            t("(S (NP a b) (VP c (NP d)))"),
            t("(NP x (PP y z))"),
        ];
        let a = train(&trees, TrainConfig { epochs: 3, seed: 7 }, |_| {}).unwrap();
        let b = train(&trees, TrainConfig { epochs: 3, seed: 7 }, |_| {}).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(Model::from_text(&a.to_text()).unwrap(), a);
        assert!(a.to_text().starts_with("AJPARSE-MODEL 1\nscale "));
        assert!(a
            .to_text()
            .contains("\nlabels 4\nNP\nPP\nS\nVP\nfactor target 1 "));
    }

    #[test]
    fn model_format_errors() {
        let text = train(&[arthur()], TrainConfig::default(), |_| {})
            .unwrap()
            .to_text();
        assert!(matches!(
            Model::from_text(&text.replacen("MODEL 1", "MODEL 2", 1)),
            Err(PredictorError::ModelVersion {
                found: 2,
                expected: 1
            })
        ));
        assert!(matches!(
            Model::from_text("hello"),
            Err(PredictorError::ModelFormat { line: 1, .. })
        ));
        let truncated: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            Model::from_text(&truncated),
            Err(PredictorError::ModelFormat { .. })
        ));
    }

    #[test]
    fn preconditions() {
        assert!(matches!(
            train(&[], TrainConfig::default(), |_| {}),
            Err(PredictorError::EmptyCorpus)
        ));
        assert!(matches!(
            train(&[arthur()], TrainConfig { epochs: 0, seed: 1 }, |_| {}),
            Err(PredictorError::NoEpochs)
        ));
        assert!(matches!(
            train(&[t("(S (NP a))")], TrainConfig::default(), |_| {}),
            Err(PredictorError::Oracle { index: 0, .. })
        ));
    }
}
