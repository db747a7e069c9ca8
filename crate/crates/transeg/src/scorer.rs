//! Scoring interfaces shared by tabular models and transform views.
//!
//! Decoders and oracles are written against these traits so that a rewrite
//! view (a segmental view of a transducer, or vice versa) can stand in for
//! a tabular model anywhere.
//!
//! Conditioning carries three pieces: the frame, the boundary of the most
//! recently emitted label (`t_prev`, the topology origin when no label has
//! been emitted), and the emitted label history. Tabular transducer models
//! ignore `t_prev`; views of segmental models need it, since their blank
//! probability is a survival ratio of the boundary distribution.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::score::LogScore;
use crate::topology::{Frame, Topology};
use crate::vocab::{LabelId, Vocabulary};

/// One transducer grid step: a distribution over `V ∪ {blank}`.
#[derive(Clone, Debug)]
pub struct StepScores {
    /// Score per label, indexed by `LabelId`.
    pub labels: Vec<LogScore>,
    pub blank: LogScore,
    /// False iff the conditioning state carries zero path mass; all scores
    /// are then `INFINITY` rather than NaN.
    pub reachable: bool,
}

impl StepScores {
    pub fn unreachable(vocab_size: usize) -> Self {
        StepScores {
            labels: vec![LogScore::INFINITY; vocab_size],
            blank: LogScore::INFINITY,
            reachable: false,
        }
    }

    pub fn label(&self, id: LabelId) -> LogScore {
        self.labels[id.index()]
    }
}

/// Scores over the boundary candidates `[support_start, T]` for the next
/// segment. May be deficient: leftover mass is the sentence-end route.
#[derive(Clone, Debug)]
pub struct BoundaryScores {
    pub support_start: Frame,
    /// `scores[i]` is the score of boundary `support_start + i`.
    pub scores: Vec<LogScore>,
}

impl BoundaryScores {
    pub fn empty(support_start: Frame) -> Self {
        BoundaryScores {
            support_start,
            scores: Vec::new(),
        }
    }

    pub fn get(&self, t: Frame) -> LogScore {
        if t < self.support_start {
            return LogScore::INFINITY;
        }
        self.scores
            .get((t - self.support_start) as usize)
            .copied()
            .unwrap_or(LogScore::INFINITY)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Frame, LogScore)> + '_ {
        self.scores
            .iter()
            .enumerate()
            .map(|(i, &s)| (self.support_start + i as Frame, s))
    }
}

/// Segment-label scores over `V` (sentence end is handled separately by
/// [`SegmentalScorer::end_score`]).
#[derive(Clone, Debug)]
pub struct LabelScores {
    pub labels: Vec<LogScore>,
    pub reachable: bool,
}

impl LabelScores {
    pub fn unreachable(vocab_size: usize) -> Self {
        LabelScores {
            labels: vec![LogScore::INFINITY; vocab_size],
            reachable: false,
        }
    }

    pub fn label(&self, id: LabelId) -> LogScore {
        self.labels[id.index()]
    }
}

/// Frame-level view: a distribution over `V ∪ {blank}` per grid step.
pub trait TransducerScorer {
    fn topology(&self) -> Topology;
    fn vocabulary(&self) -> &Vocabulary;

    /// Distribution at frame `t` given the last label boundary `t_prev`
    /// and the emitted non-blank history.
    fn step_scores(&self, t: Frame, t_prev: Frame, history: &[LabelId]) -> StepScores;
}

/// Segment-level view: boundary and label factors plus the sentence-end
/// route score.
pub trait SegmentalScorer {
    fn topology(&self) -> Topology;
    fn vocabulary(&self) -> &Vocabulary;

    /// Boundary scores for the segment following `t_prev` given the history.
    fn boundary_scores(&self, t_prev: Frame, history: &[LabelId]) -> BoundaryScores;

    /// Label scores over `V` given the segment spans `(t_prev, t_cur]`.
    fn label_scores(&self, t_prev: Frame, t_cur: Frame, history: &[LabelId]) -> LabelScores;

    /// Total score of the sentence-end route from `t_prev`: the final
    /// sentinel segment ending at frame `T`.
    fn end_score(&self, t_prev: Frame, history: &[LabelId]) -> LogScore;
}

/// Context order of the tabular model at the bottom of a scorer chain;
/// lets the oracles and decoders key caches and DP states by the bounded
/// label suffix instead of the unbounded history.
pub trait HasContextOrder {
    fn context_order(&self) -> usize;
}

impl<T: HasContextOrder + ?Sized> HasContextOrder for &T {
    fn context_order(&self) -> usize {
        (**self).context_order()
    }
}

/// Memoizing wrapper: caches query results keyed by the frame
/// coordinates and the context suffix the wrapped scorer actually
/// conditions on. Worth it for rewrite views, whose every query walks the
/// wrapped model.
pub struct CachedTransducer<'a, S: TransducerScorer + HasContextOrder> {
    inner: &'a S,
    k: usize,
    cache: RefCell<HashMap<(Frame, Frame, Vec<LabelId>), StepScores>>,
}

impl<'a, S: TransducerScorer + HasContextOrder> CachedTransducer<'a, S> {
    pub fn new(inner: &'a S) -> Self {
        CachedTransducer {
            inner,
            k: inner.context_order(),
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn suffix(&self, history: &[LabelId]) -> Vec<LabelId> {
        history[history.len() - history.len().min(self.k)..].to_vec()
    }
}

impl<'a, S: TransducerScorer + HasContextOrder> TransducerScorer for CachedTransducer<'a, S> {
    fn topology(&self) -> Topology {
        self.inner.topology()
    }
    fn vocabulary(&self) -> &Vocabulary {
        self.inner.vocabulary()
    }
    fn step_scores(&self, t: Frame, t_prev: Frame, history: &[LabelId]) -> StepScores {
        let key = (t, t_prev, self.suffix(history));
        if let Some(hit) = self.cache.borrow().get(&key) {
            return hit.clone();
        }
        let row = self.inner.step_scores(t, t_prev, history);
        self.cache.borrow_mut().insert(key, row.clone());
        row
    }
}

pub struct CachedSegmental<'a, S: SegmentalScorer + HasContextOrder> {
    inner: &'a S,
    k: usize,
    boundary: RefCell<HashMap<(Frame, Vec<LabelId>), BoundaryScores>>,
    label: RefCell<HashMap<(Frame, Frame, Vec<LabelId>), LabelScores>>,
    end: RefCell<HashMap<(Frame, Vec<LabelId>), LogScore>>,
}

impl<'a, S: SegmentalScorer + HasContextOrder> CachedSegmental<'a, S> {
    pub fn new(inner: &'a S) -> Self {
        CachedSegmental {
            inner,
            k: inner.context_order(),
            boundary: RefCell::new(HashMap::new()),
            label: RefCell::new(HashMap::new()),
            end: RefCell::new(HashMap::new()),
        }
    }

    fn suffix(&self, history: &[LabelId]) -> Vec<LabelId> {
        history[history.len() - history.len().min(self.k)..].to_vec()
    }
}

impl<'a, S: SegmentalScorer + HasContextOrder> SegmentalScorer for CachedSegmental<'a, S> {
    fn topology(&self) -> Topology {
        self.inner.topology()
    }
    fn vocabulary(&self) -> &Vocabulary {
        self.inner.vocabulary()
    }
    fn boundary_scores(&self, t_prev: Frame, history: &[LabelId]) -> BoundaryScores {
        let key = (t_prev, self.suffix(history));
        if let Some(hit) = self.boundary.borrow().get(&key) {
            return hit.clone();
        }
        let row = self.inner.boundary_scores(t_prev, history);
        self.boundary.borrow_mut().insert(key, row.clone());
        row
    }
    fn label_scores(&self, t_prev: Frame, t_cur: Frame, history: &[LabelId]) -> LabelScores {
        let key = (t_prev, t_cur, self.suffix(history));
        if let Some(hit) = self.label.borrow().get(&key) {
            return hit.clone();
        }
        let row = self.inner.label_scores(t_prev, t_cur, history);
        self.label.borrow_mut().insert(key, row.clone());
        row
    }
    fn end_score(&self, t_prev: Frame, history: &[LabelId]) -> LogScore {
        let key = (t_prev, self.suffix(history));
        if let Some(hit) = self.end.borrow().get(&key) {
            return *hit;
        }
        let s = self.inner.end_score(t_prev, history);
        self.end.borrow_mut().insert(key, s);
        s
    }
}

impl<T: TransducerScorer + ?Sized> TransducerScorer for &T {
    fn topology(&self) -> Topology {
        (**self).topology()
    }
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }
    fn step_scores(&self, t: Frame, t_prev: Frame, history: &[LabelId]) -> StepScores {
        (**self).step_scores(t, t_prev, history)
    }
}

impl<T: SegmentalScorer + ?Sized> SegmentalScorer for &T {
    fn topology(&self) -> Topology {
        (**self).topology()
    }
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }
    fn boundary_scores(&self, t_prev: Frame, history: &[LabelId]) -> BoundaryScores {
        (**self).boundary_scores(t_prev, history)
    }
    fn label_scores(&self, t_prev: Frame, t_cur: Frame, history: &[LabelId]) -> LabelScores {
        (**self).label_scores(t_prev, t_cur, history)
    }
    fn end_score(&self, t_prev: Frame, history: &[LabelId]) -> LogScore {
        (**self).end_score(t_prev, history)
    }
}
