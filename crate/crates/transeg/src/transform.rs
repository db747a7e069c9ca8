//! Exact rewrites between the two model families.
//!
//! A transducer becomes a segmental model by reading blank as segment
//! continuation: the boundary factor is the blank run into the boundary
//! frame times the not-blank mass there, the label factor is the
//! blank-renormalized label probability, and the sentence-end route is the
//! pure blank run to the end of the grid (including the RNN-T terminating
//! blank).
//!
//! A segmental model becomes a transducer by reading blank as survival of
//! the boundary distribution: at each frame the blank branch is the ratio
//! of remaining label-emitting mass, and the label branch is the joint
//! boundary-and-label mass renormalized by survival. The sentence-end mass
//! maps onto the terminating blank. Survival is accumulated as a sum of
//! the remaining positive masses rather than `1 - cdf`, so no cancellation
//! occurs as the distribution is spent.
//!
//! Views are lazy: every query evaluates the rewrite on the wrapped
//! scorer, so the same code path applies to composed views.
//! Materialization bakes a view into a tabular model for serialization.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use crate::error::{Result, TransegError};
use crate::models::{
    context_of, BoundaryRow, Context, Normalization, SegmentLabelRow, SegmentalModel,
    TransducerKey, TransducerModel, TransducerRow,
};
use crate::score::{LogScore, TableProb};
use crate::scorer::{
    BoundaryScores, HasContextOrder, LabelScores, SegmentalScorer, StepScores, TransducerScorer,
};
use crate::topology::{Frame, Topology, TopologyKind};
use crate::vocab::{LabelId, Vocabulary};

/// Segmental view of a transducer.
#[derive(Clone, Copy, Debug)]
pub struct SegmentalView<'a, S: TransducerScorer> {
    inner: &'a S,
}

/// Rewrite a transducer scorer as a segmental scorer.
pub fn transducer_to_segmental<S: TransducerScorer>(model: &S) -> SegmentalView<'_, S> {
    SegmentalView { inner: model }
}

impl<'a, S: TransducerScorer> SegmentalView<'a, S> {
    pub fn inner(&self) -> &'a S {
        self.inner
    }

    fn blank(&self, t: Frame, t_prev: Frame, history: &[LabelId]) -> LogScore {
        self.inner.step_scores(t, t_prev, history).blank
    }

    /// Mass of "some label at frame `t`": one minus the blank probability,
    /// evaluated stably.
    fn not_blank(&self, t: Frame, t_prev: Frame, history: &[LabelId]) -> LogScore {
        self.blank(t, t_prev, history).one_minus()
    }

    /// The sentence-end odds factor at the final boundary (RNN-T only):
    /// `q(blank at T) / (1 - q(blank at T))`. May exceed one; the
    /// boundary factor it multiplies compensates exactly.
    pub fn sentence_end_factor(&self, t_prev: Frame, history: &[LabelId]) -> Result<LogScore> {
        let frames = self.inner.topology().frames;
        if self.inner.topology().kind != TopologyKind::Rnnt {
            return Err(TransegError::Config(
                "the sentence-end odds factor exists only under the RNN-T topology".into(),
            ));
        }
        let blank = self.blank(frames, t_prev, history);
        let denom = blank.one_minus();
        if denom.is_impossible() {
            return Err(TransegError::Unreachable(format!(
                "blank probability one at the final frame (t_prev={t_prev})"
            )));
        }
        Ok(blank.ratio(denom))
    }

    /// Segment-label distribution including the sentence-end entry, the
    /// user-facing counterpart of the scorer's label query.
    pub fn label_row(
        &self,
        t_prev: Frame,
        t_cur: Frame,
        history: &[LabelId],
    ) -> Result<SegmentLabelRow> {
        let topology = self.inner.topology();
        if !topology.boundary_ok(t_prev, t_cur) {
            return Err(TransegError::InvalidSegmentation(format!(
                "boundary {t_cur} not allowed after {t_prev}"
            )));
        }
        let scores = self.label_scores(t_prev, t_cur, history);
        if !scores.reachable {
            return Err(TransegError::Unreachable(format!(
                "blank probability one at boundary {t_cur}: no label can be emitted"
            )));
        }
        let eos = if t_cur == topology.frames && topology.kind == TopologyKind::Rnnt {
            TableProb::from_score(self.sentence_end_factor(t_prev, history)?)
        } else {
            TableProb::ZERO
        };
        Ok(SegmentLabelRow {
            labels: scores.labels.iter().map(|&l| TableProb::from_score(l)).collect(),
            eos,
            unreachable: false,
        })
    }
}

impl<'a, S: TransducerScorer> SegmentalScorer for SegmentalView<'a, S> {
    fn topology(&self) -> Topology {
        self.inner.topology()
    }

    fn vocabulary(&self) -> &Vocabulary {
        self.inner.vocabulary()
    }

    fn boundary_scores(&self, t_prev: Frame, history: &[LabelId]) -> BoundaryScores {
        let topology = self.inner.topology();
        let candidates = topology.boundary_candidates(t_prev);
        let support_start = *candidates.start();
        let mut scores = Vec::with_capacity(candidates.clone().count());
        let mut blank_run = LogScore::ZERO;
        for t in candidates {
            scores.push(blank_run + self.not_blank(t, t_prev, history));
            blank_run += self.blank(t, t_prev, history);
        }
        BoundaryScores {
            support_start,
            scores,
        }
    }

    fn label_scores(&self, t_prev: Frame, t_cur: Frame, history: &[LabelId]) -> LabelScores {
        let step = self.inner.step_scores(t_cur, t_prev, history);
        let denom = step.blank.one_minus();
        if denom.is_impossible() || !step.reachable {
            return LabelScores::unreachable(self.inner.vocabulary().len());
        }
        LabelScores {
            labels: step.labels.iter().map(|&s| s.ratio(denom)).collect(),
            reachable: true,
        }
    }

    fn end_score(&self, t_prev: Frame, history: &[LabelId]) -> LogScore {
        let topology = self.inner.topology();
        let first = match topology.kind {
            // The blank run from the previous boundary through the
            // terminating blank at the final frame.
            TopologyKind::Rnnt => t_prev,
            // No terminating blank when U = T: blanks strictly after the
            // last label.
            TopologyKind::StrictMonotonic => t_prev + 1,
        };
        let mut run = LogScore::ZERO;
        for t in first..=topology.frames {
            run += self.blank(t, t_prev, history);
        }
        run
    }
}

/// Transducer view of a segmental model.
#[derive(Clone, Copy, Debug)]
pub struct TransducerView<'a, S: SegmentalScorer> {
    inner: &'a S,
}

/// Rewrite a segmental scorer as a transducer scorer.
pub fn segmental_to_transducer<S: SegmentalScorer>(model: &S) -> TransducerView<'_, S> {
    TransducerView { inner: model }
}

impl<'a, S: SegmentalScorer> TransducerView<'a, S> {
    pub fn inner(&self) -> &'a S {
        self.inner
    }

    /// Label-emitting mass of boundary `t` in the linear domain: the
    /// boundary probability times the total real-label mass of its label
    /// row. Below the final frame the label row carries no sentence-end
    /// mass, so this is the boundary probability itself.
    fn emitting_mass(
        &self,
        boundary: &BoundaryScores,
        t: Frame,
        t_prev: Frame,
        history: &[LabelId],
    ) -> f64 {
        let b = boundary.get(t).prob();
        if b == 0.0 {
            return 0.0;
        }
        if t < self.inner.topology().frames {
            return b;
        }
        let labels = self.inner.label_scores(t_prev, t, history);
        b * labels.labels.iter().map(|l| l.prob()).sum::<f64>()
    }
}

impl<'a, S: SegmentalScorer> TransducerScorer for TransducerView<'a, S> {
    fn topology(&self) -> Topology {
        self.inner.topology()
    }

    fn vocabulary(&self) -> &Vocabulary {
        self.inner.vocabulary()
    }

    /// Survival arithmetic runs in the linear domain: the remaining masses
    /// are summed directly (never one minus a cumulative sum) and the
    /// blank ratio goes through `ln_1p`, so neither the sum nor the
    /// log-domain subtraction can cancel.
    fn step_scores(&self, t: Frame, t_prev: Frame, history: &[LabelId]) -> StepScores {
        let vocab_size = self.inner.vocabulary().len();
        let topology = self.inner.topology();
        if topology.kind == TopologyKind::StrictMonotonic && t <= t_prev {
            return StepScores::unreachable(vocab_size);
        }
        let boundary = self.inner.boundary_scores(t_prev, history);
        let end = self.inner.end_score(t_prev, history).prob();
        let mass_at = |frame: Frame| self.emitting_mass(&boundary, frame, t_prev, history);
        let mut surv_after = end;
        let mut mass_here = 0.0;
        for (tau, _) in boundary.iter() {
            if tau > t {
                surv_after += mass_at(tau);
            } else if tau == t {
                mass_here = mass_at(tau);
            }
        }
        let surv_before = surv_after + mass_here;
        if surv_before == 0.0 {
            // Boundary mass exhausted before this frame: zero path mass.
            return StepScores::unreachable(vocab_size);
        }
        let emit_fraction = mass_here / surv_before;
        let blank = if surv_after == 0.0 {
            LogScore::INFINITY
        } else if emit_fraction < 0.5 {
            // small emitting fraction: ln(1 - x) is exact through ln_1p
            LogScore::new(-(-emit_fraction).ln_1p())
        } else {
            // mass mostly emits here: both sums are well separated
            LogScore::new(surv_before.ln() - surv_after.ln())
        };
        let b = boundary.get(t).prob();
        let labels = if b == 0.0 {
            vec![LogScore::INFINITY; vocab_size]
        } else {
            let row = self.inner.label_scores(t_prev, t, history);
            row.labels
                .iter()
                .map(|&l| LogScore::from_prob(b * l.prob() / surv_before))
                .collect()
        };
        StepScores {
            labels,
            blank,
            reachable: true,
        }
    }
}

impl<'a, S: TransducerScorer + HasContextOrder> HasContextOrder for SegmentalView<'a, S> {
    fn context_order(&self) -> usize {
        self.inner.context_order()
    }
}

impl<'a, S: SegmentalScorer + HasContextOrder> HasContextOrder for TransducerView<'a, S> {
    fn context_order(&self) -> usize {
        self.inner.context_order()
    }
}

/// Bake a segmental view into a tabular segmental model by walking every
/// reachable state. Row values are exactly the view's query results; the
/// sentence-end route goes into an explicit end table so that the baked
/// model reproduces the view bit for bit.
pub fn materialize_segmental<S: SegmentalScorer + HasContextOrder>(view: &S) -> SegmentalModel {
    let topology = view.topology();
    let vocab = view.vocabulary().clone();
    let k = view.context_order();
    let mut boundary: BTreeMap<(Frame, Context), BoundaryRow> = BTreeMap::new();
    let mut label: BTreeMap<(Frame, Frame, Context), SegmentLabelRow> = BTreeMap::new();
    let mut end: BTreeMap<(Frame, Context), TableProb> = BTreeMap::new();

    let mut queue: VecDeque<(Frame, Vec<LabelId>)> = VecDeque::new();
    let mut seen: std::collections::BTreeSet<(Frame, Context)> = std::collections::BTreeSet::new();
    let start = (topology.origin(), Vec::new());
    seen.insert((start.0, context_of(&start.1, k)));
    queue.push_back(start);

    while let Some((t_prev, history)) = queue.pop_front() {
        let ctx = context_of(&history, k);
        let scores = view.boundary_scores(t_prev, &history);
        end.insert(
            (t_prev, ctx.clone()),
            TableProb::from_score(view.end_score(t_prev, &history)),
        );
        if !scores.scores.is_empty() {
            let entries: BTreeMap<Frame, TableProb> = scores
                .iter()
                .map(|(t, s)| (t, TableProb::from_score(s)))
                .collect();
            boundary.insert(
                (t_prev, ctx.clone()),
                BoundaryRow {
                    entries,
                    unreachable: false,
                },
            );
        }
        for (t_cur, b) in scores.iter() {
            let row = view.label_scores(t_prev, t_cur, &history);
            label.insert(
                (t_prev, t_cur, ctx.clone()),
                SegmentLabelRow {
                    labels: row.labels.iter().map(|&l| TableProb::from_score(l)).collect(),
                    eos: TableProb::ZERO,
                    unreachable: !row.reachable,
                },
            );
            if b.is_impossible() || !row.reachable {
                continue;
            }
            for (i, &l) in row.labels.iter().enumerate() {
                if l.is_impossible() {
                    continue;
                }
                let mut h = history.clone();
                h.push(LabelId(i as u32));
                let next_ctx = context_of(&h, k);
                if seen.insert((t_cur, next_ctx)) {
                    queue.push_back((t_cur, h));
                }
            }
        }
    }

    SegmentalModel::from_rows(
        vocab,
        topology,
        k,
        boundary,
        label,
        Some(end),
        Normalization::Derived,
    )
}

/// Bake a transducer view into a tabular transducer model. Rows are keyed
/// by `(t, t_prev, context)` since a rewritten segmental model conditions
/// on the previous label boundary.
pub fn materialize_transducer<S: TransducerScorer + HasContextOrder>(view: &S) -> TransducerModel {
    let topology = view.topology();
    let vocab = view.vocabulary().clone();
    let k = view.context_order();
    let frames = topology.frames;
    let mut rows: BTreeMap<TransducerKey, TransducerRow> = BTreeMap::new();

    // States (t, t_prev, history-context); transitions follow the grid.
    let mut queue: VecDeque<(Frame, Frame, Vec<LabelId>)> = VecDeque::new();
    let mut seen: std::collections::BTreeSet<(Frame, Frame, Context)> =
        std::collections::BTreeSet::new();
    let origin = topology.origin();
    seen.insert((1, origin, context_of(&[], k)));
    queue.push_back((1, origin, Vec::new()));

    while let Some((t, t_prev, history)) = queue.pop_front() {
        let ctx = context_of(&history, k);
        let step = view.step_scores(t, t_prev, &history);
        rows.insert(
            TransducerKey {
                t,
                t_prev: Some(t_prev),
                context: ctx.clone(),
            },
            TransducerRow {
                labels: step.labels.iter().map(|&l| TableProb::from_score(l)).collect(),
                blank: TableProb::from_score(step.blank),
                unreachable: !step.reachable,
            },
        );
        if !step.reachable {
            continue;
        }
        // blank advances the frame
        if t < frames && !step.blank.is_impossible() {
            let key = (t + 1, t_prev, ctx.clone());
            if seen.insert(key) {
                queue.push_back((t + 1, t_prev, history.clone()));
            }
        }
        // labels advance the boundary (and the frame under strict monotonicity)
        for (i, &l) in step.labels.iter().enumerate() {
            if l.is_impossible() {
                continue;
            }
            let mut h = history.clone();
            h.push(LabelId(i as u32));
            let next_ctx = context_of(&h, k);
            let next_t = match topology.kind {
                TopologyKind::Rnnt => t,
                TopologyKind::StrictMonotonic => t + 1,
            };
            if next_t > frames {
                continue;
            }
            if seen.insert((next_t, t, next_ctx)) {
                queue.push_back((next_t, t, h));
            }
        }
    }

    TransducerModel::from_rows(vocab, topology, k, rows)
}
