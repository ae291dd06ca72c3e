//! Subcommands of the `ajparse` binary. Each returns an [`Outcome`] whose
//! summary line is printed last on stdout.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use ajparse::enumerate::{corrupt_actions, run_checks, Corruption};
use ajparse::eval::{check_pair, Counts};
use ajparse::isr::{
    format_isr, gamma, replay, translate_action, translate_sequence, xi, StackElement,
};
use ajparse::oracle::{oracle_action_sequence, oracle_trace, OracleCase};
use ajparse::predictor::{decode_beam, decode_greedy, train, Model, TrainConfig};
use ajparse::transition::{apply_action, apply_sequence, format_actions, ActionKind, ParserState};
use ajparse::tree::{tree_equal, ConstituencyTree, Label, Token};
use ajparse::treebank::{normalize, read_corpus, write_bracketed, LoadOptions};

pub const MAX_ENUM_LEAVES: usize = 6;
pub const MAX_ENUM_VOCAB: usize = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ajparse",
    version,
    about = "Attach-juxtapose constituency parsing toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Bracketed treebank file.
    pub input: PathBuf,
    /// Read trees as they are: keep empty elements, function tags and unary chains.
    #[arg(long)]
    pub no_normalize: bool,
    /// Skip malformed entries instead of stopping at the first one.
    #[arg(long)]
    pub lenient: bool,
}

impl CorpusArgs {
    fn options(&self) -> LoadOptions {
        LoadOptions {
            normalize: !self.no_normalize,
            strict: !self.lenient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorruptKind {
    Gamma,
    Oracle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the oracle action sequence of every tree, one line each.
    Oracle {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check that replaying each oracle sequence rebuilds its tree.
    Verify {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Perturb every oracle sequence before replay (negative control).
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Translate oracle sequences to in-order shift-reduce actions and check them.
    TranslateIsr {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exhaustively check uniqueness and the stack bijection on small trees.
    EnumerateCheck {
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        #[arg(long, alias = "vocab", default_value_t = 2)]
        vocab_size: usize,
        #[arg(long, hide = true, value_enum)]
        corrupt: Option<CorruptKind>,
    },
    /// Train the perceptron action predictor.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Parse sentences with a trained model.
    Parse {
        #[arg(long)]
        model: PathBuf,
        /// One sentence per line as `word_POS` tokens, or a treebank with --treebank.
        input: PathBuf,
        /// Take sentences (and tags) from a bracketed treebank.
        #[arg(long)]
        treebank: bool,
        #[arg(long, default_value_t = 1)]
        beam: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Labeled bracket scores of predicted trees against gold trees.
    Score {
        gold: PathBuf,
        predicted: PathBuf,
        /// Use the gold file as is.
        #[arg(long)]
        no_normalize: bool,
    },
    /// Action-sequence lengths and action histograms of a treebank.
    Stats {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Write a synthetic raw treebank.
    Generate {
        #[arg(long, default_value_t = 6000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Outcome {
    pub ok: usize,
    pub fail: usize,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RESULT ok={} fail={}", self.ok, self.fail)
    }
}

impl Outcome {
    fn tally<T, E>(results: &[Result<T, E>]) -> Outcome {
        let fail = results.iter().filter(|r| r.is_err()).count();
        Outcome {
            ok: results.len() - fail,
            fail,
        }
    }
}

struct Loaded {
    trees: Vec<ConstituencyTree>,
    skipped: usize,
}

fn load(args: &CorpusArgs, err: &mut dyn Write) -> Result<Loaded> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let corpus = read_corpus(&text, args.options())
        .with_context(|| format!("loading {}", args.input.display()))?;
    for (index, e) in &corpus.skipped {
        writeln!(err, "skipped entry {index}: {e}")?;
    }
    Ok(Loaded {
        skipped: corpus.skipped.len(),
        trees: corpus.entries.into_iter().map(|e| e.tree).collect(),
    })
}

fn sink<'a>(path: &Option<PathBuf>, out: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(out),
    })
}

/// Writes one line per result, reporting errors on `err` with their entry index.
fn emit(
    results: &[Result<String, String>],
    data: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(line) => writeln!(data, "{line}")?,
            Err(e) => {
                writeln!(data)?;
                writeln!(err, "entry {i}: {e}")?;
            }
        }
    }
    data.flush()?;
    Ok(())
}

pub fn verify_tree(tree: &ConstituencyTree, corrupt: bool) -> Result<(), String> {
    let tree = tree.collapse_unary_chains();
    let mut actions = oracle_action_sequence(&tree).map_err(|e| e.to_string())?;
    if corrupt {
        let fallback = tree
            .root()
            .map(|r| r.label().clone())
            .unwrap_or_else(|| Label::atomic("X").unwrap());
        corrupt_actions(&mut actions, &fallback);
    }
    let rebuilt = apply_sequence(&tree.tokens(), &actions).map_err(|e| e.to_string())?;
    if !tree_equal(&rebuilt, &tree) {
        return Err(format!("rebuilt {rebuilt}, expected {tree}"));
    }
    Ok(())
}

/// Translated ISR line for one tree, after checking every step and the
/// length law.
pub fn translate_tree(tree: &ConstituencyTree) -> Result<String, String> {
    let tree = tree.collapse_unary_chains();
    let tokens = tree.tokens();
    let actions = oracle_action_sequence(&tree).map_err(|e| e.to_string())?;
    let mut state = ParserState::new();
    for (step, (token, action)) in tokens.iter().zip(&actions).enumerate() {
        let isr = translate_action(state.tree(), action).map_err(|e| e.to_string())?;
        let mut stack = gamma(&xi(state.tree()));
        for a in &isr {
            stack
                .apply(a, Some(token))
                .map_err(|e| format!("step {step}: {e}"))?;
        }
        state = apply_action(&state, token, action).map_err(|e| e.to_string())?;
        let expected = gamma(&xi(state.tree()));
        if stack != expected {
            return Err(format!(
                "step {step} ({action}): reached [{stack}], expected [{expected}]"
            ));
        }
    }
    let isr = translate_sequence(&tokens, &actions).map_err(|e| e.to_string())?;
    let law = tree.len() + 2 * tree.internal_count();
    if isr.len() != law {
        return Err(format!(
            "{} ISR actions, expected n + 2m = {law}",
            isr.len()
        ));
    }
    let end = replay(&tokens, &isr).map_err(|e| e.to_string())?;
    match (end.elements(), tree.root_node()) {
        ([StackElement::Subtree(t)], Some(root)) if *t == root => {}
        ([], None) => {}
        _ => return Err(format!("final stack [{end}] is not the gold tree")),
    }
    Ok(format_isr(&isr))
}

/// Splits `word_POS` at the last underscore; a token without one is untagged.
pub fn parse_token(raw: &str) -> Result<Token, String> {
    if raw.contains(['(', ')']) {
        return Err(format!("token {raw:?} contains a parenthesis"));
    }
    let token = match raw.rsplit_once('_') {
        Some((w, p)) if !w.is_empty() && !p.is_empty() => Token::new(w, p),
        _ => Token::untagged(raw),
    };
    token.map_err(|e| e.to_string())
}

pub fn parse_token_line(line: &str) -> Result<Vec<Token>, String> {
    let tokens = line
        .split_whitespace()
        .map(parse_token)
        .collect::<Result<Vec<_>, _>>()?;
    if tokens.is_empty() {
        return Err("empty sentence".into());
    }
    Ok(tokens)
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    let outcome = match cli.command {
        Command::Oracle { corpus, output } => {
            let loaded = load(&corpus, err)?;
            let results: Vec<Result<String, String>> = loaded
                .trees
                .par_iter()
                .map(|t| {
                    oracle_action_sequence(t)
                        .map(|a| format_actions(&a))
                        .map_err(|e| e.to_string())
                })
                .collect();
            emit(&results, &mut *sink(&output, out)?, err)?;
            let mut o = Outcome::tally(&results);
            o.fail += loaded.skipped;
            o
        }
        Command::Verify { corpus, corrupt } => {
            let loaded = load(&corpus, err)?;
            let results: Vec<_> = loaded
                .trees
                .par_iter()
                .map(|t| verify_tree(t, corrupt))
                .collect();
            for (i, r) in results.iter().enumerate() {
                if let Err(e) = r {
                    writeln!(err, "entry {i}: {e}")?;
                }
            }
            let mut o = Outcome::tally(&results);
            o.fail += loaded.skipped;
            writeln!(out, "verified {} trees, {} failed", results.len(), o.fail)?;
            o
        }
        Command::TranslateIsr { corpus, output } => {
            let loaded = load(&corpus, err)?;
            let results: Vec<_> = loaded.trees.par_iter().map(translate_tree).collect();
            emit(&results, &mut *sink(&output, out)?, err)?;
            let mut o = Outcome::tally(&results);
            o.fail += loaded.skipped;
            o
        }
        Command::EnumerateCheck {
            n_max,
            vocab_size,
            corrupt,
        } => {
            if !(1..=MAX_ENUM_LEAVES).contains(&n_max) {
                bail!("--n-max must be between 1 and {MAX_ENUM_LEAVES}");
            }
            if !(1..=MAX_ENUM_VOCAB).contains(&vocab_size) {
                bail!("--vocab-size must be between 1 and {MAX_ENUM_VOCAB}");
            }
            let corruption = corrupt.map(|c| match c {
                CorruptKind::Gamma => Corruption::Gamma,
                CorruptKind::Oracle => Corruption::Oracle,
            });
            let report = run_checks(n_max, vocab_size, corruption);
            writeln!(out, "{report}")?;
            let unreachable = report.case_count(OracleCase::SiblingRoot);
            writeln!(
                out,
                "coverage {}",
                if report.case_coverage_complete() {
                    "complete"
                } else {
                    "incomplete"
                }
            )?;
            let checked: usize = report.tallies.iter().map(|t| t.checked).sum();
            let fail = report.failures() + unreachable;
            Outcome {
                ok: checked - report.failures(),
                fail,
            }
        }
        Command::Train {
            corpus,
            model,
            epochs,
            seed,
        } => {
            let loaded = load(&corpus, err)?;
            let trees: Vec<_> = loaded
                .trees
                .iter()
                .map(|t| t.collapse_unary_chains())
                .collect();
            let trained = train(&trees, TrainConfig { epochs, seed }, |s| {
                let _ = writeln!(err, "{s}");
            })?;
            trained
                .save(&model)
                .with_context(|| format!("writing {}", model.display()))?;
            writeln!(
                out,
                "trained on {} trees, {} labels",
                trees.len(),
                trained.labels().len()
            )?;
            Outcome {
                ok: trees.len(),
                fail: loaded.skipped,
            }
        }
        Command::Parse {
            model,
            input,
            treebank,
            beam,
            output,
        } => {
            let model = Model::load(&model)
                .with_context(|| format!("loading model {}", model.display()))?;
            let sentences: Vec<Result<Vec<Token>, String>> = if treebank {
                let args = CorpusArgs {
                    input,
                    no_normalize: false,
                    lenient: false,
                };
                load(&args, err)?
                    .trees
                    .iter()
                    .map(|t| Ok(t.tokens()))
                    .collect()
            } else {
                let text = std::fs::read_to_string(&input)
                    .with_context(|| format!("reading {}", input.display()))?;
                text.lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(parse_token_line)
                    .collect()
            };
            let results: Vec<Result<String, String>> = sentences
                .par_iter()
                .map(|s| {
                    let tokens = s.as_ref().map_err(Clone::clone)?;
                    let decoded = if beam <= 1 {
                        decode_greedy(&model, tokens)
                    } else {
                        decode_beam(&model, tokens, beam)
                    };
                    Ok(write_bracketed(&decoded.tree))
                })
                .collect();
            emit(&results, &mut *sink(&output, out)?, err)?;
            Outcome::tally(&results)
        }
        Command::Score {
            gold,
            predicted,
            no_normalize,
        } => {
            let gold_args = CorpusArgs {
                input: gold,
                no_normalize,
                lenient: false,
            };
            let gold = load(&gold_args, err)?.trees;
            let pred_args = CorpusArgs {
                input: predicted,
                no_normalize: true,
                lenient: false,
            };
            let predicted = load(&pred_args, err)?
                .trees
                .iter()
                .map(normalize)
                .collect::<Result<Vec<_>, _>>()
                .context("normalizing predicted trees")?;
            if gold.len() != predicted.len() {
                bail!(
                    "{} gold trees but {} predicted trees",
                    gold.len(),
                    predicted.len()
                );
            }
            if gold.is_empty() {
                bail!("nothing to score");
            }
            let counts: Vec<Result<Counts, String>> = gold
                .par_iter()
                .zip(&predicted)
                .enumerate()
                .map(|(i, (g, p))| {
                    check_pair(i, g, p).map_err(|e| e.to_string())?;
                    Ok(Counts::sentence(g, p))
                })
                .collect();
            let mut total = Counts::default();
            for (i, c) in counts.iter().enumerate() {
                match c {
                    Ok(c) => total += *c,
                    Err(e) => writeln!(err, "entry {i}: {e}")?,
                }
            }
            writeln!(out, "{}", total.report())?;
            Outcome::tally(&counts)
        }
        Command::Stats { corpus } => {
            let loaded = load(&corpus, err)?;
            let rows: Vec<Result<SentenceStats, String>> =
                loaded.trees.par_iter().map(sentence_stats).collect();
            let mut total = SentenceStats::default();
            for (i, r) in rows.iter().enumerate() {
                match r {
                    Ok(s) => total.merge(s),
                    Err(e) => writeln!(err, "entry {i}: {e}")?,
                }
            }
            total.print(out)?;
            let mut o = Outcome::tally(&rows);
            o.fail += loaded.skipped;
            o
        }
        Command::Generate {
            count,
            seed,
            output,
        } => {
            let mut data = sink(&output, out)?;
            for tree in ajparse::synth::generate(count, seed) {
                writeln!(data, "( {} )", write_bracketed(&tree))?;
            }
            data.flush()?;
            Outcome { ok: count, fail: 0 }
        }
    };
    Ok(outcome)
}

#[derive(Debug, Clone, Default)]
pub struct SentenceStats {
    pub sentences: usize,
    pub tokens: usize,
    pub internal: usize,
    pub aj_actions: usize,
    pub isr_actions: usize,
    pub attach: usize,
    pub juxtapose: usize,
    pub with_parent: usize,
    pub max_chain: usize,
    pub cases: [usize; 6],
}

impl SentenceStats {
    fn merge(&mut self, o: &SentenceStats) {
        self.sentences += o.sentences;
        self.tokens += o.tokens;
        self.internal += o.internal;
        self.aj_actions += o.aj_actions;
        self.isr_actions += o.isr_actions;
        self.attach += o.attach;
        self.juxtapose += o.juxtapose;
        self.with_parent += o.with_parent;
        self.max_chain = self.max_chain.max(o.max_chain);
        self.cases
            .iter_mut()
            .zip(o.cases)
            .for_each(|(a, b)| *a += b);
    }

    fn print(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "sentences {}", self.sentences)?;
        writeln!(out, "tokens {}", self.tokens)?;
        writeln!(out, "internal-nodes {}", self.internal)?;
        writeln!(out, "aj-actions {} (n = {})", self.aj_actions, self.tokens)?;
        writeln!(
            out,
            "isr-actions {} (n + 2m = {})",
            self.isr_actions,
            self.tokens + 2 * self.internal
        )?;
        writeln!(out, "attach {}", self.attach)?;
        writeln!(out, "juxtapose {}", self.juxtapose)?;
        writeln!(out, "with-parent-label {}", self.with_parent)?;
        writeln!(out, "max-chain {}", self.max_chain)?;
        for (case, n) in OracleCase::ALL.iter().zip(self.cases) {
            writeln!(out, "case {} {n}", case.name())?;
        }
        Ok(())
    }
}

/// Per-sentence lengths; an error if either length law fails.
pub fn sentence_stats(tree: &ConstituencyTree) -> Result<SentenceStats, String> {
    let tree = tree.collapse_unary_chains();
    let trace = oracle_trace(&tree).map_err(|e| e.to_string())?;
    let actions: Vec<_> = trace.iter().map(|(a, _)| a.clone()).collect();
    let isr = translate_sequence(&tree.tokens(), &actions).map_err(|e| e.to_string())?;
    let (n, m) = (tree.len(), tree.internal_count());
    if actions.len() != n || isr.len() != n + 2 * m {
        return Err(format!(
            "lengths {} and {} for n={n}, m={m}",
            actions.len(),
            isr.len()
        ));
    }
    let mut s = SentenceStats {
        sentences: 1,
        tokens: n,
        internal: m,
        aj_actions: actions.len(),
        isr_actions: isr.len(),
        ..Default::default()
    };
    let mut state = ParserState::new();
    for ((action, case), token) in trace.iter().zip(tree.tokens()) {
        match action.kind() {
            ActionKind::Attach => s.attach += 1,
            ActionKind::Juxtapose => s.juxtapose += 1,
        }
        s.with_parent += usize::from(action.parent_label().is_some());
        s.cases[OracleCase::ALL
            .iter()
            .position(|c| c == case)
            .expect("listed")] += 1;
        state = apply_action(&state, &token, action).map_err(|e| e.to_string())?;
        s.max_chain = s.max_chain.max(state.tree().chain_len());
    }
    Ok(s)
}

/// Reads a whole file into trees with the default options.
pub fn load_trees(path: &Path) -> Result<Vec<ConstituencyTree>> {
    let args = CorpusArgs {
        input: path.to_path_buf(),
        no_normalize: false,
        lenient: false,
    };
    Ok(load(&args, &mut io::sink())?.trees)
}
