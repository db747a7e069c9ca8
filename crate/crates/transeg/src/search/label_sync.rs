//! Label-synchronous beam search: hypotheses expand per segment. The full
//! variant hypothesizes boundary and label jointly; the two-stage variant
//! scores boundary extensions first, keeps the top `B_t` per hypothesis,
//! then expands labels and keeps the global top `B`.
//!
//! Hypotheses that consume the sentence end move to an ended pool that is
//! excluded from every pruning comparison. Live hypotheses drain naturally
//! once the label budget is spent; a step cap bounds the loop
//! defensively and marks the result truncated if it ever fires.

use super::{assemble_nbest, prune_pool, DecodeResult, DecodeStats, Fusion, Hypothesis, PruneConfig};
use crate::lm::NGramLM;
use crate::oracle::{Alignment, SearchLimits};
use crate::score::LogScore;
use crate::scorer::{CachedSegmental, HasContextOrder, SegmentalScorer};
use crate::search::sort_hypotheses;
use crate::topology::{Frame, Segmentation, Topology};
use crate::vocab::LabelId;

/// Live/ended bookkeeping shared by both label-synchronous variants.
pub(crate) struct LabelSyncState {
    pub live: Vec<Hypothesis>,
    pub ended: Vec<Hypothesis>,
    pub stats: DecodeStats,
}

impl LabelSyncState {
    pub(crate) fn new() -> Self {
        LabelSyncState {
            live: vec![Hypothesis::initial()],
            ended: Vec::new(),
            stats: DecodeStats::default(),
        }
    }

    /// Move each live hypothesis' sentence-end continuation to the ended
    /// pool. Ending never competes with live expansion.
    fn collect_ended<S: SegmentalScorer>(&mut self, model: &S, fusion: &Fusion, origin: Frame) {
        for hyp in &self.live {
            let end = model.end_score(hyp.t_prev(origin), &hyp.labels);
            let score = hyp.score + end + fusion.end(&hyp.labels);
            if score.is_impossible() {
                continue;
            }
            let mut done = hyp.clone();
            done.score = score;
            self.ended.push(done);
        }
    }
}

/// Segment continuations of one hypothesis: every admissible `(boundary,
/// label)` pair with its accumulated score.
fn expand_segments<S: SegmentalScorer>(
    model: &S,
    fusion: &Fusion,
    hyp: &Hypothesis,
    limits: &SearchLimits,
    topology: Topology,
    stats: &mut DecodeStats,
) -> Vec<Hypothesis> {
    let origin = topology.origin();
    let mut out = Vec::new();
    if hyp.labels.len() >= limits.max_labels {
        return out;
    }
    let t_prev = hyp.t_prev(origin);
    let boundary = model.boundary_scores(t_prev, &hyp.labels);
    for (t_cur, b) in boundary.iter() {
        if b.is_impossible() {
            continue;
        }
        if hyp.labels_at(t_cur) >= limits.max_labels_per_frame {
            continue;
        }
        let labels = model.label_scores(t_prev, t_cur, &hyp.labels);
        if !labels.reachable {
            continue;
        }
        for (i, &l) in labels.labels.iter().enumerate() {
            let label = LabelId(i as u32);
            let score = hyp.score + b + l + fusion.label(&hyp.labels, label);
            if score.is_impossible() {
                continue;
            }
            let mut ext = hyp.clone();
            ext.labels.push(label);
            ext.boundaries.push(t_cur);
            ext.score = score;
            stats.expanded += 1;
            out.push(ext);
        }
    }
    out
}

fn finish(state: LabelSyncState, nbest: usize, topology: Topology, truncated: bool) -> DecodeResult {
    let nbest_list = assemble_nbest(state.ended, nbest, move |hyp| {
        Alignment::Segmentation(
            Segmentation::new(hyp.labels.clone(), hyp.boundaries.clone(), topology)
                .expect("search emits topology-valid boundaries"),
        )
    });
    DecodeResult {
        nbest: nbest_list,
        stats: state.stats,
        truncated,
        auto_transformed: false,
    }
}

/// Full-segment expansion: per step every live hypothesis is expanded over
/// all `(boundary, label)` pairs, then the pool is pruned against the
/// step best.
pub fn decode_label_sync_full<S: SegmentalScorer + HasContextOrder>(
    model: &S,
    lm: Option<&NGramLM>,
    lambda: f64,
    prune: &PruneConfig,
    limits: &SearchLimits,
    nbest: usize,
) -> DecodeResult {
    let model = &CachedSegmental::new(model);
    let topology = model.topology();
    let fusion = Fusion::new(lm, lambda);
    let mut state = LabelSyncState::new();
    let step_cap = limits.max_labels + 1;
    let mut steps = 0usize;
    let mut truncated = false;

    while !state.live.is_empty() {
        steps += 1;
        if steps > step_cap {
            truncated = true;
            break;
        }
        state.collect_ended(model, &fusion, topology.origin());
        let live = std::mem::take(&mut state.live);
        let mut pool = Vec::new();
        for hyp in &live {
            pool.extend(expand_segments(
                model,
                &fusion,
                hyp,
                limits,
                topology,
                &mut state.stats,
            ));
        }
        state.stats.pruned += prune_pool(&mut pool, prune);
        sort_hypotheses(&mut pool);
        state.stats.peak_beam = state.stats.peak_beam.max(pool.len());
        state.live = pool;
    }

    finish(state, nbest, topology, truncated)
}

/// Two-stage expansion: boundary hypotheses are scored and pruned to the
/// top `b_t` per live hypothesis before labels are expanded; the joint
/// pool then keeps the global top `b`.
pub fn decode_label_sync_two_stage<S: SegmentalScorer + HasContextOrder>(
    model: &S,
    lm: Option<&NGramLM>,
    lambda: f64,
    b: usize,
    b_t: usize,
    limits: &SearchLimits,
    nbest: usize,
) -> DecodeResult {
    let model = &CachedSegmental::new(model);
    let topology = model.topology();
    let origin = topology.origin();
    let fusion = Fusion::new(lm, lambda);
    let mut state = LabelSyncState::new();
    let step_cap = limits.max_labels + 1;
    let mut steps = 0usize;
    let mut truncated = false;

    while !state.live.is_empty() {
        steps += 1;
        if steps > step_cap {
            truncated = true;
            break;
        }
        state.collect_ended(model, &fusion, origin);

        let live = std::mem::take(&mut state.live);
        let mut pool: Vec<Hypothesis> = Vec::new();
        for hyp in &live {
            if hyp.labels.len() >= limits.max_labels {
                continue;
            }
            let t_prev = hyp.t_prev(origin);
            // Stage one: boundary extensions only, pruned per hypothesis.
            let boundary = model.boundary_scores(t_prev, &hyp.labels);
            let mut positions: Vec<(Frame, LogScore)> = boundary
                .iter()
                .filter(|(t_cur, s)| {
                    !s.is_impossible() && hyp.labels_at(*t_cur) < limits.max_labels_per_frame
                })
                .map(|(t_cur, s)| (t_cur, hyp.score + s))
                .collect();
            positions.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            if positions.len() > b_t {
                state.stats.pruned += (positions.len() - b_t) as u64;
                positions.truncate(b_t);
            }
            // Stage two: label expansion over the surviving positions.
            for (t_cur, base) in positions {
                let labels = model.label_scores(t_prev, t_cur, &hyp.labels);
                if !labels.reachable {
                    continue;
                }
                for (i, &l) in labels.labels.iter().enumerate() {
                    let label = LabelId(i as u32);
                    let score = base + l + fusion.label(&hyp.labels, label);
                    if score.is_impossible() {
                        continue;
                    }
                    let mut ext = hyp.clone();
                    ext.labels.push(label);
                    ext.boundaries.push(t_cur);
                    ext.score = score;
                    state.stats.expanded += 1;
                    pool.push(ext);
                }
            }
        }

        // Global beam over the joint pool.
        if pool.len() > b {
            sort_hypotheses(&mut pool);
            state.stats.pruned += (pool.len() - b) as u64;
            pool.truncate(b);
        } else {
            sort_hypotheses(&mut pool);
        }
        state.stats.peak_beam = state.stats.peak_beam.max(pool.len());
        state.live = pool;
    }

    finish(state, nbest, topology, truncated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::SearchLimits;
    use crate::transform::transducer_to_segmental;

    #[test]
    fn unpruned_full_matches_hand_values() {
        let m = fixtures::two_label_strict();
        let view = transducer_to_segmental(&m);
        let limits = SearchLimits::for_topology(m.topology());
        let r = decode_label_sync_full(&view, None, 0.0, &PruneConfig::none(), &limits, 1);
        let best = r.best().unwrap();
        assert_eq!(best.labels, vec![LabelId(0)]);
        assert!((best.score.prob() - 0.25).abs() < 1e-12);
        assert!(!r.truncated);
    }

    #[test]
    fn empty_sequence_wins_on_blank_heavy_model() {
        let m = fixtures::const_blank_rnnt();
        let view = transducer_to_segmental(&m);
        let limits = SearchLimits::for_topology(m.topology());
        let r = decode_label_sync_full(&view, None, 0.0, &PruneConfig::none(), &limits, 1);
        let best = r.best().unwrap();
        assert!(best.labels.is_empty());
        assert!((best.score.prob() - 0.36).abs() < 1e-12);
    }

    #[test]
    fn two_stage_greedy_on_blank_heavy_model() {
        let m = fixtures::const_blank_rnnt();
        let view = transducer_to_segmental(&m);
        let limits = SearchLimits::for_topology(m.topology());
        let r = decode_label_sync_two_stage(&view, None, 0.0, 1, 1, &limits, 1);
        let best = r.best().unwrap();
        assert!(best.labels.is_empty());
        assert!((best.score.prob() - 0.36).abs() < 1e-12);
    }

    /// Injecting a foreign ended hypothesis must not change which live
    /// hypotheses survive pruning.
    #[test]
    fn ended_pool_never_interferes_with_pruning() {
        let m = fixtures::two_label_strict();
        let view = transducer_to_segmental(&m);
        let limits = SearchLimits::for_topology(m.topology());
        let fusion = Fusion::new(None, 0.0);
        let prune = PruneConfig::threshold(0.5);

        let run_one_step = |inject: bool| -> Vec<(Vec<LabelId>, LogScore)> {
            let mut state = LabelSyncState::new();
            if inject {
                state.ended.push(Hypothesis {
                    labels: vec![LabelId(1)],
                    boundaries: vec![1],
                    score: LogScore::new(1e-9),
                });
            }
            state.collect_ended(&view, &fusion, 0);
            let mut pool = Vec::new();
            for hyp in &state.live.clone() {
                pool.extend(expand_segments(
                    &view,
                    &fusion,
                    hyp,
                    &limits,
                    m.topology(),
                    &mut state.stats,
                ));
            }
            prune_pool(&mut pool, &prune);
            sort_hypotheses(&mut pool);
            pool.into_iter().map(|h| (h.labels, h.score)).collect()
        };

        assert_eq!(run_one_step(false), run_one_step(true));
    }
}
