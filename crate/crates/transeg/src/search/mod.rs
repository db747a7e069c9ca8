//! Beam-search decoders: time-synchronous, label-synchronous with full
//! segment expansion, and label-synchronous with two-stage
//! (boundary-then-label) expansion, plus strategy dispatch that inserts
//! the rewrite views when the model kind and strategy disagree.
//!
//! Pruning compares against the best hypothesis of the same expansion
//! step, never across steps. Ended hypotheses live in a separate pool
//! that takes no part in pruning comparisons. Hypotheses are never
//! recombined: two partial decodes with equal contexts stay distinct, and
//! correctness is validated purely against the exhaustive oracle.

mod label_sync;
mod time_sync;

pub use label_sync::{decode_label_sync_full, decode_label_sync_two_stage};
pub use time_sync::decode_time_sync;

use std::time::Instant;

use crate::error::{Result, TransegError};
use crate::lm::NGramLM;
use crate::models::AnyModel;
use crate::oracle::{better_candidate, Alignment, ScoredSequence, SearchLimits};
use crate::score::LogScore;
use crate::topology::Frame;
use crate::transform::{segmental_to_transducer, transducer_to_segmental};
use crate::vocab::LabelId;

/// Hypothesis pruning. `Threshold` discards hypotheses whose score trails
/// the step best by more than `q_prune`; `Beam` keeps the best `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PruneMode {
    None,
    Threshold { q_prune: f64 },
    Beam { b: usize },
    Both { q_prune: f64, b: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruneConfig {
    pub mode: PruneMode,
    /// Per-hypothesis boundary beam of the two-stage search.
    pub boundary_beam: Option<usize>,
}

impl PruneConfig {
    pub fn none() -> Self {
        PruneConfig {
            mode: PruneMode::None,
            boundary_beam: None,
        }
    }

    pub fn threshold(q_prune: f64) -> Self {
        PruneConfig {
            mode: PruneMode::Threshold { q_prune },
            boundary_beam: None,
        }
    }

    pub fn beam(b: usize) -> Self {
        PruneConfig {
            mode: PruneMode::Beam { b },
            boundary_beam: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_q = |q: f64| {
            if q > 0.0 {
                Ok(())
            } else {
                Err(TransegError::Config("q_prune must be positive".into()))
            }
        };
        let check_b = |b: usize| {
            if b >= 1 {
                Ok(())
            } else {
                Err(TransegError::Config("beam size must be at least 1".into()))
            }
        };
        match self.mode {
            PruneMode::None => {}
            PruneMode::Threshold { q_prune } => check_q(q_prune)?,
            PruneMode::Beam { b } => check_b(b)?,
            PruneMode::Both { q_prune, b } => {
                check_q(q_prune)?;
                check_b(b)?;
            }
        }
        if let Some(bt) = self.boundary_beam {
            check_b(bt)?;
        }
        Ok(())
    }

    fn q_prune(&self) -> Option<f64> {
        match self.mode {
            PruneMode::Threshold { q_prune } | PruneMode::Both { q_prune, .. } => Some(q_prune),
            _ => None,
        }
    }

    fn beam_size(&self) -> Option<usize> {
        match self.mode {
            PruneMode::Beam { b } | PruneMode::Both { b, .. } => Some(b),
            _ => None,
        }
    }
}

/// A partial decode: emitted labels, their boundaries, and the accumulated
/// score (model factors plus scaled LM factors).
#[derive(Clone, Debug)]
pub struct Hypothesis {
    pub labels: Vec<LabelId>,
    pub boundaries: Vec<Frame>,
    pub score: LogScore,
}

impl Hypothesis {
    fn initial() -> Self {
        Hypothesis {
            labels: Vec::new(),
            boundaries: Vec::new(),
            score: LogScore::ZERO,
        }
    }

    fn t_prev(&self, origin: Frame) -> Frame {
        self.boundaries.last().copied().unwrap_or(origin)
    }

    /// Labels already stacked on frame `t` (the trailing boundary run).
    fn labels_at(&self, t: Frame) -> usize {
        self.boundaries.iter().rev().take_while(|&&b| b == t).count()
    }
}

/// Decode statistics. Wall time is measured but reported as zero by the
/// CLI unless timing output is requested, keeping reruns byte-identical.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct DecodeStats {
    pub expanded: u64,
    pub pruned: u64,
    pub peak_beam: usize,
    pub wall_ms: u64,
}

#[derive(Clone, Debug)]
pub struct DecodeResult {
    /// Best-first (lowest score), label-sequence-unique.
    pub nbest: Vec<ScoredSequence>,
    pub stats: DecodeStats,
    /// Set iff a step cap cut the search off (RNN-T label-synchronous
    /// searches with unbounded zero-length segments).
    pub truncated: bool,
    /// Set by [`decode`] when the strategy required wrapping the model in
    /// a rewrite view.
    pub auto_transformed: bool,
}

impl DecodeResult {
    pub fn best(&self) -> Option<&ScoredSequence> {
        self.nbest.first()
    }
}

/// Score-threshold and beam pruning against the best hypothesis of this
/// step's pool. The best live hypothesis always survives. Returns the
/// number pruned.
fn prune_pool(pool: &mut Vec<Hypothesis>, prune: &PruneConfig) -> u64 {
    let before = pool.len();
    if pool.is_empty() {
        return 0;
    }
    if let Some(q) = prune.q_prune() {
        let best = pool.iter().map(|h| h.score).min().unwrap();
        pool.retain(|h| h.score.value() - best.value() <= q);
    }
    if let Some(b) = prune.beam_size() {
        if pool.len() > b {
            sort_hypotheses(pool);
            pool.truncate(b);
        }
    }
    (before - pool.len()) as u64
}

/// Deterministic hypothesis order: score, then labels, then boundaries.
fn sort_hypotheses(pool: &mut [Hypothesis]) {
    pool.sort_by(|a, b| {
        better_candidate(
            (&a.score, &a.labels, &a.boundaries),
            (&b.score, &b.labels, &b.boundaries),
        )
    });
}

/// Merge ended hypotheses into an n-best list: identical label sequences
/// keep their best (Viterbi) score, ordered deterministically.
fn assemble_nbest(
    mut ended: Vec<Hypothesis>,
    nbest: usize,
    to_alignment: impl Fn(&Hypothesis) -> Alignment,
) -> Vec<ScoredSequence> {
    sort_hypotheses(&mut ended);
    let mut out: Vec<ScoredSequence> = Vec::new();
    for hyp in ended {
        if hyp.score.is_impossible() {
            continue;
        }
        if out.iter().any(|s| s.labels == hyp.labels) {
            continue;
        }
        out.push(ScoredSequence {
            labels: hyp.labels.clone(),
            score: hyp.score,
            alignment: Some(to_alignment(&hyp)),
        });
        if out.len() == nbest {
            break;
        }
    }
    out
}

/// LM fusion hooks; a zero scale contributes exactly nothing.
#[derive(Clone, Copy)]
pub(crate) struct Fusion<'a> {
    lm: Option<&'a NGramLM>,
    lambda: f64,
}

impl<'a> Fusion<'a> {
    pub(crate) fn new(lm: Option<&'a NGramLM>, lambda: f64) -> Self {
        Fusion { lm, lambda }
    }

    pub(crate) fn label(&self, history: &[LabelId], label: LabelId) -> LogScore {
        match self.lm {
            Some(lm) if self.lambda != 0.0 => match lm.label_score(history, label) {
                Ok(s) => LogScore::new(self.lambda * s.value()),
                Err(_) => LogScore::INFINITY,
            },
            _ => LogScore::ZERO,
        }
    }

    pub(crate) fn end(&self, history: &[LabelId]) -> LogScore {
        match self.lm {
            Some(lm) if self.lambda != 0.0 => match lm.end_score(history) {
                Ok(s) => LogScore::new(self.lambda * s.value()),
                Err(_) => LogScore::INFINITY,
            },
            _ => LogScore::ZERO,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    TimeSync,
    LabelSyncFull,
    LabelSyncTwoStage,
}

/// Everything a decode call needs besides the model and LM.
#[derive(Clone, Debug)]
pub struct DecodeConfig {
    pub strategy: Strategy,
    pub prune: PruneConfig,
    pub lambda: f64,
    pub nbest: usize,
    /// Defaults to [`SearchLimits::for_topology`] when absent.
    pub limits: Option<SearchLimits>,
}

impl DecodeConfig {
    pub fn unpruned(strategy: Strategy) -> Self {
        DecodeConfig {
            strategy,
            prune: PruneConfig::none(),
            lambda: 0.0,
            nbest: 1,
            limits: None,
        }
    }
}

/// Strategy dispatch over either model kind. When the strategy's native
/// model kind differs from the input, the matching rewrite view is
/// inserted; unpruned results are unchanged by the wrapping.
pub fn decode(model: &AnyModel, lm: Option<&NGramLM>, config: &DecodeConfig) -> Result<DecodeResult> {
    config.prune.validate()?;
    let limits = config
        .limits
        .unwrap_or_else(|| SearchLimits::for_topology(model.topology()));
    let wall = Instant::now();
    let mut result = match (model, config.strategy) {
        (AnyModel::Transducer(m), Strategy::TimeSync) => {
            decode_time_sync(m, lm, config.lambda, &config.prune, &limits, config.nbest)
        }
        (AnyModel::Segmental(m), Strategy::TimeSync) => {
            let view = segmental_to_transducer(m);
            let mut r =
                decode_time_sync(&view, lm, config.lambda, &config.prune, &limits, config.nbest);
            r.auto_transformed = true;
            r
        }
        (AnyModel::Segmental(m), Strategy::LabelSyncFull) => {
            decode_label_sync_full(m, lm, config.lambda, &config.prune, &limits, config.nbest)
        }
        (AnyModel::Transducer(m), Strategy::LabelSyncFull) => {
            let view = transducer_to_segmental(m);
            let mut r = decode_label_sync_full(
                &view,
                lm,
                config.lambda,
                &config.prune,
                &limits,
                config.nbest,
            );
            r.auto_transformed = true;
            r
        }
        (AnyModel::Segmental(m), Strategy::LabelSyncTwoStage) => decode_label_sync_two_stage(
            m,
            lm,
            config.lambda,
            config.prune.beam_size().unwrap_or(usize::MAX),
            config.prune.boundary_beam.unwrap_or(usize::MAX),
            &limits,
            config.nbest,
        ),
        (AnyModel::Transducer(m), Strategy::LabelSyncTwoStage) => {
            let view = transducer_to_segmental(m);
            let mut r = decode_label_sync_two_stage(
                &view,
                lm,
                config.lambda,
                config.prune.beam_size().unwrap_or(usize::MAX),
                config.prune.boundary_beam.unwrap_or(usize::MAX),
                &limits,
                config.nbest,
            );
            r.auto_transformed = true;
            r
        }
    };
    result.stats.wall_ms = wall.elapsed().as_millis() as u64;
    Ok(result)
}
