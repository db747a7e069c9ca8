//! Tabular, finitely parameterized transducer and segmental models.
//!
//! The encoder output is abstracted away: every distribution conditions on
//! the frame index and on the last `k` emitted labels (begin-padded with a
//! reserved BOS placeholder), never on blank placement. That restriction
//! keeps the models finite while remaining a legitimate instance of the
//! full-history conditional.

mod format;
mod generate;
mod reach;
mod validate;

pub use format::{load_model, model_from_json, model_to_canonical_json, save_model, FORMAT_VERSION};
pub use generate::{
    generate_random_lm_rows, generate_random_segmental, generate_random_segmental_biased,
    generate_random_transducer, generate_random_transducer_biased, GeneratorParams,
};
pub use validate::{validate_model, validate_segmental, validate_transducer, Violation};

use std::collections::BTreeMap;

use crate::error::{Result, TransegError};
use crate::score::{LogScore, TableProb};
use crate::scorer::{
    BoundaryScores, HasContextOrder, LabelScores, SegmentalScorer, StepScores, TransducerScorer,
};
use crate::topology::{Frame, Topology, TopologyKind};
use crate::vocab::{LabelId, Vocabulary, BOS_NAME};

/// One position of a label context: the BOS pad or a real label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContextSym {
    Bos,
    Label(LabelId),
}

impl ContextSym {
    pub fn render(&self, vocab: &Vocabulary) -> String {
        match self {
            ContextSym::Bos => BOS_NAME.to_string(),
            ContextSym::Label(l) => vocab.name(*l).to_string(),
        }
    }
}

/// A begin-padded label context of exactly `k` symbols.
pub type Context = Vec<ContextSym>;

/// The last `k` labels of `history`, BOS-padded at the front.
pub fn context_of(history: &[LabelId], k: usize) -> Context {
    let take = history.len().min(k);
    let mut ctx = Vec::with_capacity(k);
    ctx.resize(k - take, ContextSym::Bos);
    ctx.extend(history[history.len() - take..].iter().map(|&l| ContextSym::Label(l)));
    ctx
}

/// Number of real labels in a context.
pub(crate) fn context_labels(ctx: &Context) -> usize {
    ctx.iter()
        .filter(|s| matches!(s, ContextSym::Label(_)))
        .count()
}

/// Whether a tabular model was authored directly (all rows fully
/// normalized) or materialized from a rewrite view (boundary rows may be
/// deficient, sentence-end entries are odds factors).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    Native,
    Derived,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransducerRow {
    /// Probability per label, indexed by `LabelId`.
    pub labels: Vec<TableProb>,
    pub blank: TableProb,
    pub unreachable: bool,
}

impl TransducerRow {
    fn to_step_scores(&self) -> StepScores {
        StepScores {
            labels: self.labels.iter().map(|p| p.score()).collect(),
            blank: self.blank.score(),
            reachable: !self.unreachable,
        }
    }
}

/// Key of a transducer table row. `t_prev` is `None` for natively authored
/// models; rows materialized from a segmental view additionally depend on
/// the previous label boundary.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TransducerKey {
    pub t: Frame,
    pub t_prev: Option<Frame>,
    pub context: Context,
}

/// Frame-level model: a distribution over `V ∪ {blank}` per grid step.
#[derive(Clone, Debug, PartialEq)]
pub struct TransducerModel {
    vocab: Vocabulary,
    topology: Topology,
    context_order: usize,
    rows: BTreeMap<TransducerKey, TransducerRow>,
}

impl TransducerModel {
    pub fn from_rows(
        vocab: Vocabulary,
        topology: Topology,
        context_order: usize,
        rows: BTreeMap<TransducerKey, TransducerRow>,
    ) -> Self {
        TransducerModel {
            vocab,
            topology,
            context_order,
            rows,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn context_order(&self) -> usize {
        self.context_order
    }

    pub fn rows(&self) -> &BTreeMap<TransducerKey, TransducerRow> {
        &self.rows
    }

    #[cfg(test)]
    pub(crate) fn rows_mut(&mut self) -> &mut BTreeMap<TransducerKey, TransducerRow> {
        &mut self.rows
    }

    /// Whether any row is keyed by a previous-boundary coordinate.
    pub fn has_boundary_keys(&self) -> bool {
        self.rows.keys().any(|k| k.t_prev.is_some())
    }

    /// The table row for `(t, last-k suffix of emitted_labels)`.
    pub fn step(&self, t: Frame, emitted_labels: &[LabelId]) -> Result<&TransducerRow> {
        if t < 1 || t > self.topology.frames {
            return Err(TransegError::FrameOutOfRange {
                t,
                frames: self.topology.frames,
            });
        }
        let context = context_of(emitted_labels, self.context_order);
        self.lookup(t, None, &context).ok_or_else(|| {
            TransegError::Unreachable(format!(
                "no transducer row for t={t}, context {context:?}"
            ))
        })
    }

    fn lookup(&self, t: Frame, t_prev: Option<Frame>, context: &Context) -> Option<&TransducerRow> {
        if let Some(prev) = t_prev {
            let key = TransducerKey {
                t,
                t_prev: Some(prev),
                context: context.clone(),
            };
            if let Some(row) = self.rows.get(&key) {
                return Some(row);
            }
        }
        let key = TransducerKey {
            t,
            t_prev: None,
            context: context.clone(),
        };
        self.rows.get(&key)
    }
}

impl HasContextOrder for TransducerModel {
    fn context_order(&self) -> usize {
        self.context_order
    }
}

impl TransducerScorer for TransducerModel {
    fn topology(&self) -> Topology {
        self.topology
    }

    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn step_scores(&self, t: Frame, t_prev: Frame, history: &[LabelId]) -> StepScores {
        let context = context_of(history, self.context_order);
        match self.lookup(t, Some(t_prev), &context) {
            Some(row) => row.to_step_scores(),
            None => StepScores::unreachable(self.vocab.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryRow {
    /// Boundary candidate probabilities; frames outside the topology
    /// support may appear in loaded files and are surfaced by validation.
    pub entries: BTreeMap<Frame, TableProb>,
    pub unreachable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentLabelRow {
    pub labels: Vec<TableProb>,
    /// Sentence-end entry. In a native model this is a probability sharing
    /// the row's mass; in a derived model it is the sentence-end odds
    /// factor and may exceed one.
    pub eos: TableProb,
    pub unreachable: bool,
}

/// Distribution over boundary candidates returned by
/// [`SegmentalModel::boundary_distribution`], with the mass left for the
/// sentence-end route made explicit.
#[derive(Clone, Debug)]
pub struct BoundaryDistribution {
    pub scores: BoundaryScores,
    /// Linear-domain leftover mass (zero for fully normalized rows).
    pub deficiency: f64,
}

/// Segment-level model: boundary and label tables; derived models carry an
/// explicit sentence-end table.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentalModel {
    vocab: Vocabulary,
    topology: Topology,
    context_order: usize,
    boundary: BTreeMap<(Frame, Context), BoundaryRow>,
    label: BTreeMap<(Frame, Frame, Context), SegmentLabelRow>,
    end: Option<BTreeMap<(Frame, Context), TableProb>>,
    normalization: Normalization,
}

impl SegmentalModel {
    pub fn from_rows(
        vocab: Vocabulary,
        topology: Topology,
        context_order: usize,
        boundary: BTreeMap<(Frame, Context), BoundaryRow>,
        label: BTreeMap<(Frame, Frame, Context), SegmentLabelRow>,
        end: Option<BTreeMap<(Frame, Context), TableProb>>,
        normalization: Normalization,
    ) -> Self {
        SegmentalModel {
            vocab,
            topology,
            context_order,
            boundary,
            label,
            end,
            normalization,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn context_order(&self) -> usize {
        self.context_order
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn boundary_rows(&self) -> &BTreeMap<(Frame, Context), BoundaryRow> {
        &self.boundary
    }

    pub fn label_rows(&self) -> &BTreeMap<(Frame, Frame, Context), SegmentLabelRow> {
        &self.label
    }

    pub fn end_rows(&self) -> Option<&BTreeMap<(Frame, Context), TableProb>> {
        self.end.as_ref()
    }

    /// Boundary distribution from `prev_boundary`, support-restricted to
    /// the topology. Empty support (strictly monotonic, `prev == T`) is a
    /// valid empty result, not an error.
    pub fn boundary_distribution(
        &self,
        prev_boundary: Frame,
        history: &[LabelId],
    ) -> Result<BoundaryDistribution> {
        let origin = self.topology.origin();
        if prev_boundary < origin || prev_boundary > self.topology.frames {
            return Err(TransegError::FrameOutOfRange {
                t: prev_boundary,
                frames: self.topology.frames,
            });
        }
        let ctx = context_of(history, self.context_order);
        let mass: f64 = match self.boundary.get(&(prev_boundary, ctx)) {
            Some(row) => row
                .entries
                .iter()
                .filter(|(&t, _)| self.topology.boundary_ok(prev_boundary, t))
                .map(|(_, p)| p.linear())
                .sum(),
            None => 0.0,
        };
        let scores = SegmentalScorer::boundary_scores(self, prev_boundary, history);
        Ok(BoundaryDistribution {
            scores,
            deficiency: (1.0 - mass).max(0.0),
        })
    }

    /// Label distribution over `V ∪ {sentence end}` for a segment spanning
    /// `(prev_boundary, boundary]`.
    pub fn label_distribution(
        &self,
        prev_boundary: Frame,
        boundary: Frame,
        history: &[LabelId],
    ) -> Result<SegmentLabelRow> {
        if !self.topology.boundary_ok(prev_boundary, boundary) {
            return Err(TransegError::InvalidSegmentation(format!(
                "boundary {boundary} not allowed after {prev_boundary}"
            )));
        }
        let ctx = context_of(history, self.context_order);
        self.label
            .get(&(prev_boundary, boundary, ctx.clone()))
            .cloned()
            .ok_or_else(|| {
                TransegError::Unreachable(format!(
                    "no label row for ({prev_boundary}, {boundary}, {ctx:?})"
                ))
            })
    }
}

impl HasContextOrder for SegmentalModel {
    fn context_order(&self) -> usize {
        self.context_order
    }
}

impl SegmentalScorer for SegmentalModel {
    fn topology(&self) -> Topology {
        self.topology
    }

    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn boundary_scores(&self, t_prev: Frame, history: &[LabelId]) -> BoundaryScores {
        let candidates = self.topology.boundary_candidates(t_prev);
        let support_start = *candidates.start();
        if candidates.is_empty() {
            return BoundaryScores::empty(support_start);
        }
        let ctx = context_of(history, self.context_order);
        match self.boundary.get(&(t_prev, ctx)) {
            Some(row) => BoundaryScores {
                support_start,
                scores: candidates
                    .map(|t| {
                        row.entries
                            .get(&t)
                            .map(|p| p.score())
                            .unwrap_or(LogScore::INFINITY)
                    })
                    .collect(),
            },
            None => BoundaryScores::empty(support_start),
        }
    }

    fn label_scores(&self, t_prev: Frame, t_cur: Frame, history: &[LabelId]) -> LabelScores {
        let ctx = context_of(history, self.context_order);
        match self.label.get(&(t_prev, t_cur, ctx)) {
            Some(row) if !row.unreachable => LabelScores {
                labels: row.labels.iter().map(|p| p.score()).collect(),
                reachable: true,
            },
            _ => LabelScores::unreachable(self.vocab.len()),
        }
    }

    fn end_score(&self, t_prev: Frame, history: &[LabelId]) -> LogScore {
        let frames = self.topology.frames;
        let ctx = context_of(history, self.context_order);
        if let Some(end) = &self.end {
            return end
                .get(&(t_prev, ctx))
                .map(|p| p.score())
                .unwrap_or(LogScore::INFINITY);
        }
        if self.topology.kind == TopologyKind::StrictMonotonic && t_prev == frames {
            // All frames consumed by real labels: ending is forced.
            return LogScore::ZERO;
        }
        let boundary_to_end = match self.boundary.get(&(t_prev, ctx.clone())) {
            Some(row) => row
                .entries
                .get(&frames)
                .map(|p| p.score())
                .unwrap_or(LogScore::INFINITY),
            None => LogScore::INFINITY,
        };
        let eos = match self.label.get(&(t_prev, frames, ctx)) {
            Some(row) => row.eos.score(),
            None => LogScore::INFINITY,
        };
        boundary_to_end + eos
    }
}

/// A model of either kind, as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Transducer(TransducerModel),
    Segmental(SegmentalModel),
}

impl AnyModel {
    pub fn vocabulary(&self) -> &Vocabulary {
        match self {
            AnyModel::Transducer(m) => m.vocabulary(),
            AnyModel::Segmental(m) => m.vocabulary(),
        }
    }

    pub fn topology(&self) -> Topology {
        match self {
            AnyModel::Transducer(m) => m.topology(),
            AnyModel::Segmental(m) => m.topology(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AnyModel::Transducer(_) => "transducer",
            AnyModel::Segmental(_) => "segmental",
        }
    }
}
