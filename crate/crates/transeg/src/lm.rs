//! Minimal n-gram language model over the label vocabulary, for optional
//! log-linear fusion with the sequence model score. Tables are explicit:
//! no backoff, no smoothing — desk-scale LMs are fully enumerable.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Result, TransegError};
use crate::models::{context_of, Context, ContextSym};
use crate::rng::SplitMix64;
use crate::score::{LogScore, TableProb};
use crate::vocab::{LabelId, Vocabulary, BOS_NAME, EOS_NAME};

pub const LM_FORMAT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct LmRow {
    pub labels: Vec<TableProb>,
    pub eos: TableProb,
}

/// Explicit n-gram model: a distribution over `V ∪ {#}` per begin-padded
/// context of `order - 1` labels. The fusion scale stays with the caller.
#[derive(Clone, Debug, PartialEq)]
pub struct NGramLM {
    order: usize,
    vocab: Vocabulary,
    rows: BTreeMap<Context, LmRow>,
}

impl NGramLM {
    pub fn new(order: usize, vocab: Vocabulary, rows: BTreeMap<Context, LmRow>) -> Result<Self> {
        if order < 1 {
            return Err(TransegError::Config("LM order must be at least 1".into()));
        }
        Ok(NGramLM { order, vocab, rows })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn rows(&self) -> &BTreeMap<Context, LmRow> {
        &self.rows
    }

    fn row(&self, history: &[LabelId]) -> Result<&LmRow> {
        let ctx = context_of(history, self.order - 1);
        self.rows.get(&ctx).ok_or_else(|| {
            TransegError::Unreachable(format!("no LM row for context {ctx:?}"))
        })
    }

    /// Conditional score of one label.
    pub fn label_score(&self, history: &[LabelId], label: LabelId) -> Result<LogScore> {
        Ok(self.row(history)?.labels[label.index()].score())
    }

    /// Conditional score of the sentence end.
    pub fn end_score(&self, history: &[LabelId]) -> Result<LogScore> {
        Ok(self.row(history)?.eos.score())
    }

    /// Total sequence score: the conditional factors of every label plus
    /// the closing sentence-end factor.
    pub fn score(&self, labels: &[LabelId]) -> Result<LogScore> {
        let mut acc = LogScore::ZERO;
        for (i, &label) in labels.iter().enumerate() {
            acc += self.label_score(&labels[..i], label)?;
        }
        Ok(acc + self.end_score(labels)?)
    }

    /// Score a sequence given as label names (errors on out-of-vocabulary
    /// symbols).
    pub fn score_rendered(&self, names: &[String]) -> Result<LogScore> {
        let ids = self.vocab.parse_labels(names)?;
        self.score(&ids)
    }

    pub fn validate(&self) -> Vec<crate::models::Violation> {
        let mut out = Vec::new();
        let mut any_end = false;
        for (ctx, row) in &self.rows {
            let sum: f64 =
                row.labels.iter().map(|s| s.linear()).sum::<f64>() + row.eos.linear();
            if (sum - 1.0).abs() > 1e-12 {
                out.push(crate::models::Violation {
                    location: format!("lm row {ctx:?}"),
                    detail: format!("row sums to {sum}"),
                });
            }
            if !row.eos.is_zero() {
                any_end = true;
            }
        }
        for labels in 0..=(self.order - 1) {
            // presence of all reachable contexts
            let mut stack: Vec<Context> = vec![vec![ContextSym::Bos; self.order - 1 - labels]];
            for _ in 0..labels {
                let mut next = Vec::new();
                for ctx in &stack {
                    for id in self.vocab.ids() {
                        let mut ext = ctx.clone();
                        ext.push(ContextSym::Label(id));
                        next.push(ext);
                    }
                }
                stack = next;
            }
            for ctx in stack {
                if !self.rows.contains_key(&ctx) {
                    out.push(crate::models::Violation {
                        location: format!("lm row {ctx:?}"),
                        detail: "reachable context missing".into(),
                    });
                }
            }
        }
        if !any_end {
            out.push(crate::models::Violation {
                location: "lm".into(),
                detail: "no context gives the sentence end positive probability".into(),
            });
        }
        out
    }
}

/// Uniform LM: every row splits mass evenly over `V ∪ {#}`.
pub fn uniform_lm(order: usize, vocab: &Vocabulary) -> NGramLM {
    let n = vocab.len() + 1;
    let p = TableProb::from_linear(1.0 / n as f64);
    let mut rows = BTreeMap::new();
    for ctx in contexts_for(order, vocab) {
        rows.insert(
            ctx,
            LmRow {
                labels: vec![p; vocab.len()],
                eos: p,
            },
        );
    }
    NGramLM::new(order, vocab.clone(), rows).unwrap()
}

/// Seeded random LM over the given vocabulary.
pub fn generate_random_lm(seed: u64, order: usize, vocab: &Vocabulary, smoothness: f64) -> NGramLM {
    let mut rng = SplitMix64::new(seed);
    let contexts = contexts_for(order, vocab);
    let sampled = crate::models::generate_random_lm_rows(
        &mut rng,
        contexts.len(),
        vocab.len() + 1,
        smoothness,
    );
    let rows = contexts
        .into_iter()
        .zip(sampled)
        .map(|(ctx, probs)| {
            (
                ctx,
                LmRow {
                    labels: probs[..vocab.len()]
                        .iter()
                        .map(|&p| TableProb::from_linear(p))
                        .collect(),
                    eos: TableProb::from_linear(probs[vocab.len()]),
                },
            )
        })
        .collect();
    NGramLM::new(order, vocab.clone(), rows).unwrap()
}

fn contexts_for(order: usize, vocab: &Vocabulary) -> Vec<Context> {
    let k = order - 1;
    let mut out = Vec::new();
    for labels in 0..=k {
        let mut stack: Vec<Context> = vec![vec![ContextSym::Bos; k - labels]];
        for _ in 0..labels {
            let mut next = Vec::new();
            for ctx in &stack {
                for id in vocab.ids() {
                    let mut ext = ctx.clone();
                    ext.push(ContextSym::Label(id));
                    next.push(ext);
                }
            }
            stack = next;
        }
        out.extend(stack);
    }
    out.sort();
    out
}

#[derive(Deserialize)]
struct LmFile {
    format_version: u64,
    order: usize,
    vocabulary: Vec<String>,
    rows: Vec<LmRowFile>,
}

#[derive(Deserialize)]
struct LmRowFile {
    context: Vec<String>,
    probs: BTreeMap<String, f64>,
}

pub fn lm_from_json(text: &str) -> Result<NGramLM> {
    let file: LmFile = serde_json::from_str(text).map_err(|e| TransegError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        detail: e.to_string(),
    })?;
    if file.format_version != LM_FORMAT_VERSION {
        return Err(TransegError::VersionMismatch {
            found: file.format_version,
            expected: LM_FORMAT_VERSION,
        });
    }
    let vocab = Vocabulary::new(file.vocabulary.clone())?;
    let mut rows = BTreeMap::new();
    for (i, row) in file.rows.iter().enumerate() {
        let loc = format!("rows[{i}]");
        let mut ctx = Vec::new();
        for sym in &row.context {
            if sym == BOS_NAME {
                ctx.push(ContextSym::Bos);
            } else {
                let id = vocab.id(sym).map_err(|_| TransegError::Parse {
                    location: loc.clone(),
                    detail: format!("unknown symbol {sym:?} in context"),
                })?;
                ctx.push(ContextSym::Label(id));
            }
        }
        let mut labels = vec![TableProb::ZERO; vocab.len()];
        let mut eos = TableProb::ZERO;
        for (sym, &p) in &row.probs {
            if !p.is_finite() || p < 0.0 {
                return Err(TransegError::Parse {
                    location: loc.clone(),
                    detail: format!("probability {p} is not a nonnegative finite number"),
                });
            }
            if sym == EOS_NAME {
                eos = TableProb::from_linear(p);
            } else {
                let id = vocab.id(sym).map_err(|_| TransegError::Parse {
                    location: loc.clone(),
                    detail: format!("unknown symbol {sym:?}"),
                })?;
                labels[id.index()] = TableProb::from_linear(p);
            }
        }
        rows.insert(ctx, LmRow { labels, eos });
    }
    NGramLM::new(file.order, vocab, rows)
}

pub fn lm_to_canonical_json(lm: &NGramLM) -> String {
    let vocab = lm.vocabulary();
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"format_version\": {LM_FORMAT_VERSION},\n"));
    out.push_str(&format!("  \"order\": {},\n", lm.order()));
    let names: Vec<String> = vocab.names().iter().map(|n| format!("{n:?}")).collect();
    out.push_str(&format!("  \"vocabulary\": [{}],\n", names.join(", ")));
    out.push_str("  \"rows\": [\n");
    let mut rows: Vec<(String, String)> = lm
        .rows()
        .iter()
        .map(|(ctx, row)| {
            let ctx_names: Vec<String> = ctx
                .iter()
                .map(|c| format!("{:?}", c.render(vocab)))
                .collect();
            let mut probs: Vec<(String, f64)> = row
                .labels
                .iter()
                .enumerate()
                .map(|(i, s)| (vocab.name(LabelId(i as u32)).to_string(), s.linear()))
                .collect();
            probs.push((EOS_NAME.into(), row.eos.linear()));
            probs.sort_by(|a, b| a.0.cmp(&b.0));
            let entries: Vec<String> = probs
                .iter()
                .map(|(sym, p)| format!("{sym:?}: {p:.16e}"))
                .collect();
            let sort_key = ctx.iter().map(|c| c.render(vocab)).collect::<Vec<_>>().join("\u{1}");
            (
                sort_key,
                format!(
                    "    {{\"context\": [{}], \"probs\": {{{}}}}}",
                    ctx_names.join(", "),
                    entries.join(", ")
                ),
            )
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let body: Vec<String> = rows.into_iter().map(|(_, r)| r).collect();
    out.push_str(&body.join(",\n"));
    out.push_str("\n  ]\n}\n");
    out
}

pub fn save_lm(lm: &NGramLM, destination: &Path) -> Result<()> {
    std::fs::write(destination, lm_to_canonical_json(lm))?;
    Ok(())
}

pub fn load_lm(source: &Path) -> Result<NGramLM> {
    let text = std::fs::read_to_string(source)?;
    lm_from_json(&text)
}
