//! Time-synchronous beam search: hypotheses expand per frame. Under RNN-T
//! the vertical label transitions within a frame are closed (up to the
//! per-frame cap) before the horizontal blank; under strict monotonicity
//! every expansion consumes the frame. Pruning applies to the surviving
//! live pool after each frame's full expansion.

use super::{assemble_nbest, prune_pool, DecodeResult, DecodeStats, Fusion, Hypothesis, PruneConfig};
use crate::lm::NGramLM;
use crate::oracle::{Alignment, SearchLimits};
use crate::scorer::{CachedTransducer, HasContextOrder, TransducerScorer};
use crate::search::sort_hypotheses;
use crate::topology::{segmentation_to_path, Segmentation, TopologyKind};
use crate::vocab::LabelId;

pub fn decode_time_sync<S: TransducerScorer + HasContextOrder>(
    model: &S,
    lm: Option<&NGramLM>,
    lambda: f64,
    prune: &PruneConfig,
    limits: &SearchLimits,
    nbest: usize,
) -> DecodeResult {
    let model = &CachedTransducer::new(model);
    let topology = model.topology();
    let frames = topology.frames;
    let origin = topology.origin();
    let fusion = Fusion::new(lm, lambda);
    let mut stats = DecodeStats::default();

    let mut live: Vec<Hypothesis> = vec![Hypothesis::initial()];
    let mut ended: Vec<Hypothesis> = Vec::new();

    for t in 1..=frames {
        // Vertical closure (RNN-T): every hypothesis may stack labels on
        // this frame before taking its blank.
        let mut pool = live;
        if topology.kind == TopologyKind::Rnnt {
            let mut level: Vec<Hypothesis> = pool.clone();
            loop {
                let mut next_level = Vec::new();
                for hyp in &level {
                    if hyp.labels.len() >= limits.max_labels
                        || hyp.labels_at(t) >= limits.max_labels_per_frame
                    {
                        continue;
                    }
                    let step = model.step_scores(t, hyp.t_prev(origin), &hyp.labels);
                    if !step.reachable {
                        continue;
                    }
                    for (i, &s) in step.labels.iter().enumerate() {
                        let label = LabelId(i as u32);
                        let score = hyp.score + s + fusion.label(&hyp.labels, label);
                        if score.is_impossible() {
                            continue;
                        }
                        let mut ext = hyp.clone();
                        ext.labels.push(label);
                        ext.boundaries.push(t);
                        ext.score = score;
                        stats.expanded += 1;
                        next_level.push(ext);
                    }
                }
                if next_level.is_empty() {
                    break;
                }
                pool.extend(next_level.iter().cloned());
                level = next_level;
            }
        }

        // Horizontal blank: advance to the next frame, or terminate at T.
        let mut next_live = Vec::new();
        for hyp in &pool {
            let step = model.step_scores(t, hyp.t_prev(origin), &hyp.labels);
            if !step.reachable {
                continue;
            }
            match topology.kind {
                TopologyKind::Rnnt => {
                    let score = hyp.score + step.blank;
                    if score.is_impossible() {
                        continue;
                    }
                    let mut ext = hyp.clone();
                    ext.score = score;
                    stats.expanded += 1;
                    if t < frames {
                        next_live.push(ext);
                    } else {
                        ext.score += fusion.end(&ext.labels);
                        if !ext.score.is_impossible() {
                            ended.push(ext);
                        }
                    }
                }
                TopologyKind::StrictMonotonic => {
                    // blank consumes the frame
                    let blank_score = hyp.score + step.blank;
                    if !blank_score.is_impossible() {
                        let mut ext = hyp.clone();
                        ext.score = blank_score;
                        stats.expanded += 1;
                        if t < frames {
                            next_live.push(ext);
                        } else {
                            ext.score += fusion.end(&ext.labels);
                            if !ext.score.is_impossible() {
                                ended.push(ext);
                            }
                        }
                    }
                    // labels consume the frame as well
                    if hyp.labels.len() < limits.max_labels {
                        for (i, &s) in step.labels.iter().enumerate() {
                            let label = LabelId(i as u32);
                            let score = hyp.score + s + fusion.label(&hyp.labels, label);
                            if score.is_impossible() {
                                continue;
                            }
                            let mut ext = hyp.clone();
                            ext.labels.push(label);
                            ext.boundaries.push(t);
                            ext.score = score;
                            stats.expanded += 1;
                            if t < frames {
                                next_live.push(ext);
                            } else {
                                ext.score += fusion.end(&ext.labels);
                                if !ext.score.is_impossible() {
                                    ended.push(ext);
                                }
                            }
                        }
                    }
                }
            }
        }

        stats.pruned += prune_pool(&mut next_live, prune);
        sort_hypotheses(&mut next_live);
        stats.peak_beam = stats.peak_beam.max(next_live.len());
        live = next_live;
        if live.is_empty() && t < frames {
            break;
        }
    }

    let topology_copy = topology;
    let nbest_list = assemble_nbest(ended, nbest, move |hyp| {
        let seg = Segmentation::new(hyp.labels.clone(), hyp.boundaries.clone(), topology_copy)
            .expect("search emits topology-valid boundaries");
        Alignment::Path(segmentation_to_path(&seg))
    });
    DecodeResult {
        nbest: nbest_list,
        stats,
        truncated: false,
        auto_transformed: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::search::PruneConfig;

    #[test]
    fn greedy_strict_monotonic_picks_frame_argmax() {
        let m = fixtures::two_label_strict();
        let limits = SearchLimits::for_topology(m.topology());
        let r = decode_time_sync(&m, None, 0.0, &PruneConfig::beam(1), &limits, 1);
        let best = r.best().unwrap();
        assert_eq!(best.labels, vec![LabelId(0)]);
        assert!((best.score.prob() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn greedy_rnnt_prefers_blanks() {
        let m = fixtures::const_blank_rnnt();
        let limits = SearchLimits::for_topology(m.topology());
        let r = decode_time_sync(&m, None, 0.0, &PruneConfig::beam(1), &limits, 3);
        let best = r.best().unwrap();
        assert!(best.labels.is_empty());
        assert!((best.score.prob() - 0.36).abs() < 1e-12);
    }
}
