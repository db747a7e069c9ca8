//! Ground-truth machinery: exhaustive enumeration and exact dynamic
//! programming for full-sum and Viterbi quantities at desk scale.
//!
//! Every sum has two independent implementations — enumeration over
//! explicit alignments and a forward DP over the grid — so each serves as
//! the other's oracle. The DP is the one the harness reuses.

use std::collections::BTreeMap;

use crate::error::{Result, TransegError};
use crate::lm::NGramLM;
use crate::score::{log_add, LogScore};
use crate::scorer::{SegmentalScorer, TransducerScorer};
use crate::topology::{
    segmentation_to_path, AlignmentPath, Frame, Segmentation, Topology, TopologyKind,
};
use crate::vocab::LabelId;

/// Enumeration guard: refuse to materialize more alignments than this.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// A decoded or audited label sequence with its score.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSequence {
    pub labels: Vec<LabelId>,
    pub score: LogScore,
    pub alignment: Option<Alignment>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Alignment {
    Path(AlignmentPath),
    Segmentation(Segmentation),
}

impl Alignment {
    pub fn boundaries(&self) -> Vec<Frame> {
        match self {
            Alignment::Path(p) => {
                crate::topology::path_to_segmentation(p).boundaries().to_vec()
            }
            Alignment::Segmentation(s) => s.boundaries().to_vec(),
        }
    }
}

/// Bounds on the search space, shared by the oracles and every decoder so
/// that they optimize over exactly the same set of hypotheses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchLimits {
    /// Upper bound on the number of emitted labels.
    pub max_labels: usize,
    /// RNN-T only: cap on consecutive labels within one frame.
    pub max_labels_per_frame: usize,
}

impl SearchLimits {
    pub fn for_topology(topology: Topology) -> Self {
        match topology.kind {
            TopologyKind::Rnnt => SearchLimits {
                max_labels: topology.frames as usize,
                max_labels_per_frame: 3,
            },
            TopologyKind::StrictMonotonic => SearchLimits {
                max_labels: topology.frames as usize,
                max_labels_per_frame: 1,
            },
        }
    }

    /// Whether a boundary tuple stays within the per-frame label cap.
    pub fn admits_boundaries(&self, boundaries: &[Frame]) -> bool {
        if boundaries.len() > self.max_labels {
            return false;
        }
        let mut run = 0usize;
        let mut prev = None;
        for &t in boundaries {
            run = if prev == Some(t) { run + 1 } else { 1 };
            if run > self.max_labels_per_frame {
                return false;
            }
            prev = Some(t);
        }
        true
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let mut acc: u64 = 1;
    for i in 0..k.min(n - k) {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Number of boundary tuples for `s` labels over `frames`.
pub fn alignment_count(topology: Topology, s: usize) -> u64 {
    let t = topology.frames as u64;
    let s = s as u64;
    match topology.kind {
        TopologyKind::Rnnt => binomial(t + s.max(1) - 1, s),
        TopologyKind::StrictMonotonic => binomial(t, s),
    }
}

fn guard(topology: Topology, s: usize) -> Result<()> {
    let required = alignment_count(topology, s);
    if required > ENUMERATION_LIMIT {
        return Err(TransegError::EnumerationGuard {
            limit: ENUMERATION_LIMIT,
            required,
        });
    }
    Ok(())
}

/// All boundary tuples for `s` labels under the topology, in lexicographic
/// order (earliest boundaries first).
pub fn boundary_tuples(topology: Topology, s: usize) -> Vec<Vec<Frame>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(s);
    fn rec(topology: Topology, s: usize, current: &mut Vec<Frame>, out: &mut Vec<Vec<Frame>>) {
        if current.len() == s {
            out.push(current.clone());
            return;
        }
        let prev = *current.last().unwrap_or(&topology.origin());
        for t in topology.boundary_candidates(prev) {
            current.push(t);
            rec(topology, s, current, out);
            current.pop();
        }
    }
    rec(topology, s, &mut current, &mut out);
    out
}

/// Score an explicit path against a transducer scorer, stepping the grid
/// left to right.
pub fn score_path<S: TransducerScorer>(model: &S, path: &AlignmentPath) -> LogScore {
    let topology = model.topology();
    let mut score = LogScore::ZERO;
    let mut t: Frame = 1;
    let mut t_prev = topology.origin();
    let mut history: Vec<LabelId> = Vec::new();
    for sym in path.symbols() {
        let step = model.step_scores(t, t_prev, &history);
        match sym {
            Some(label) => {
                score += step.label(*label);
                t_prev = t;
                history.push(*label);
                if topology.kind == TopologyKind::StrictMonotonic {
                    t += 1;
                }
            }
            None => {
                score += step.blank;
                t += 1;
            }
        }
    }
    score
}

/// Score an explicit segmentation against a segmental scorer: boundary and
/// label factors per segment, then the sentence-end route.
pub fn score_segmentation<S: SegmentalScorer>(model: &S, seg: &Segmentation) -> LogScore {
    let mut score = LogScore::ZERO;
    let mut t_prev = seg.topology().origin();
    let mut history: Vec<LabelId> = Vec::new();
    for (&label, &t) in seg.labels().iter().zip(seg.boundaries()) {
        let boundary = model.boundary_scores(t_prev, &history);
        score += boundary.get(t);
        let labels = model.label_scores(t_prev, t, &history);
        score += labels.label(label);
        t_prev = t;
        history.push(label);
    }
    score + model.end_score(t_prev, &history)
}

/// Exactly all valid paths realizing `labels`, each with its score.
pub fn enumerate_paths<S: TransducerScorer>(
    model: &S,
    labels: &[LabelId],
) -> Result<Vec<(AlignmentPath, LogScore)>> {
    let topology = model.topology();
    guard(topology, labels.len())?;
    if topology.kind == TopologyKind::StrictMonotonic && labels.len() > topology.frames as usize {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for tuple in boundary_tuples(topology, labels.len()) {
        let seg = Segmentation::new(labels.to_vec(), tuple, topology)
            .expect("tuples generated within the topology");
        let path = segmentation_to_path(&seg);
        let score = score_path(model, &path);
        out.push((path, score));
    }
    Ok(out)
}

/// All segmentations realizing `labels`, each with its score.
pub fn enumerate_segmentations<S: SegmentalScorer>(
    model: &S,
    labels: &[LabelId],
) -> Result<Vec<(Segmentation, LogScore)>> {
    let topology = model.topology();
    guard(topology, labels.len())?;
    if topology.kind == TopologyKind::StrictMonotonic && labels.len() > topology.frames as usize {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for tuple in boundary_tuples(topology, labels.len()) {
        let seg = Segmentation::new(labels.to_vec(), tuple, topology)
            .expect("tuples generated within the topology");
        let score = score_segmentation(model, &seg);
        out.push((seg, score));
    }
    Ok(out)
}

/// Full sum over alignments by explicit enumeration (guarded).
pub fn full_sum_transducer_by_enumeration<S: TransducerScorer>(
    model: &S,
    labels: &[LabelId],
) -> Result<LogScore> {
    Ok(enumerate_paths(model, labels)?
        .into_iter()
        .fold(LogScore::INFINITY, |acc, (_, s)| log_add(acc, s)))
}

/// Full sum over segmentations by explicit enumeration (guarded).
pub fn full_sum_segmental_by_enumeration<S: SegmentalScorer>(
    model: &S,
    labels: &[LabelId],
) -> Result<LogScore> {
    Ok(enumerate_segmentations(model, labels)?
        .into_iter()
        .fold(LogScore::INFINITY, |acc, (_, s)| log_add(acc, s)))
}

/// Forward DP over the `(frame, emitted, previous-boundary)` lattice for a
/// fixed label sequence. The previous-boundary coordinate makes the DP
/// exact for rewrite views, whose rows condition on it.
pub fn full_sum_transducer<S: TransducerScorer>(model: &S, labels: &[LabelId]) -> LogScore {
    let topology = model.topology();
    let frames = topology.frames;
    let s_total = labels.len();
    if topology.kind == TopologyKind::StrictMonotonic && s_total > frames as usize {
        return LogScore::INFINITY;
    }
    // alpha[(t, s, t_prev)]: mass of prefixes at frame t with s labels
    // emitted, the last at boundary t_prev.
    let mut alpha: BTreeMap<(Frame, usize, Frame), LogScore> = BTreeMap::new();
    alpha.insert((1, 0, topology.origin()), LogScore::ZERO);
    let mut answer = LogScore::INFINITY;
    // Frames advance monotonically; iterate t then s.
    for t in 1..=frames {
        for s in 0..=s_total {
            let keys: Vec<(Frame, usize, Frame)> = alpha
                .range((t, s, 0)..=(t, s, frames))
                .map(|(&k, _)| k)
                .collect();
            for key in keys {
                let (_, _, t_prev) = key;
                let mass = alpha[&key];
                if mass.is_impossible() {
                    continue;
                }
                let step = model.step_scores(t, t_prev, &labels[..s]);
                if !step.reachable {
                    continue;
                }
                // blank: advance the frame (the final blank under RNN-T
                // completes the path).
                let blank_mass = mass + step.blank;
                if !blank_mass.is_impossible() {
                    if t < frames {
                        merge(&mut alpha, (t + 1, s, t_prev), blank_mass);
                    } else if s == s_total && topology.kind == TopologyKind::Rnnt {
                        answer = log_add(answer, blank_mass);
                    } else if s == s_total && topology.kind == TopologyKind::StrictMonotonic {
                        answer = log_add(answer, blank_mass);
                    }
                }
                // label: emit labels[s]
                if s < s_total {
                    let label_mass = mass + step.label(labels[s]);
                    if !label_mass.is_impossible() {
                        match topology.kind {
                            TopologyKind::Rnnt => merge(&mut alpha, (t, s + 1, t), label_mass),
                            TopologyKind::StrictMonotonic => {
                                if t < frames {
                                    merge(&mut alpha, (t + 1, s + 1, t), label_mass);
                                } else if s + 1 == s_total {
                                    answer = log_add(answer, label_mass);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    answer
}

fn merge(
    alpha: &mut BTreeMap<(Frame, usize, Frame), LogScore>,
    key: (Frame, usize, Frame),
    mass: LogScore,
) {
    let slot = alpha.entry(key).or_insert(LogScore::INFINITY);
    *slot = log_add(*slot, mass);
}

/// Forward DP over `(emitted, previous-boundary)` for a fixed label
/// sequence against a segmental scorer.
pub fn full_sum_segmental<S: SegmentalScorer>(model: &S, labels: &[LabelId]) -> LogScore {
    let topology = model.topology();
    if topology.kind == TopologyKind::StrictMonotonic
        && labels.len() > topology.frames as usize
    {
        return LogScore::INFINITY;
    }
    let mut layer: BTreeMap<Frame, LogScore> = BTreeMap::new();
    layer.insert(topology.origin(), LogScore::ZERO);
    for (s, &label) in labels.iter().enumerate() {
        let mut next: BTreeMap<Frame, LogScore> = BTreeMap::new();
        for (&t_prev, &mass) in &layer {
            if mass.is_impossible() {
                continue;
            }
            let boundary = model.boundary_scores(t_prev, &labels[..s]);
            for (t, b) in boundary.iter() {
                if b.is_impossible() {
                    continue;
                }
                let row = model.label_scores(t_prev, t, &labels[..s]);
                let contribution = mass + b + row.label(label);
                if contribution.is_impossible() {
                    continue;
                }
                let slot = next.entry(t).or_insert(LogScore::INFINITY);
                *slot = log_add(*slot, contribution);
            }
        }
        layer = next;
    }
    let mut answer = LogScore::INFINITY;
    for (&t_prev, &mass) in &layer {
        if mass.is_impossible() {
            continue;
        }
        answer = log_add(answer, mass + model.end_score(t_prev, labels));
    }
    answer
}

/// Candidate comparison for Viterbi decisions: score first, then label ids
/// lexicographically, then earliest boundary tuple.
pub fn better_candidate(
    a: (&LogScore, &[LabelId], &[Frame]),
    b: (&LogScore, &[LabelId], &[Frame]),
) -> std::cmp::Ordering {
    a.0.total_cmp(b.0)
        .then_with(|| a.1.cmp(b.1))
        .then_with(|| a.2.cmp(b.2))
}

/// All label sequences up to `max_labels` over the vocabulary, shortest
/// first within lexicographic order of ids.
pub fn label_sequences(vocab_size: usize, max_labels: usize) -> Vec<Vec<LabelId>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<LabelId>> = vec![Vec::new()];
    for _ in 0..max_labels {
        let mut next = Vec::new();
        for seq in &layer {
            for v in 0..vocab_size as u32 {
                let mut ext = seq.clone();
                ext.push(LabelId(v));
                next.push(ext);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Exhaustive Viterbi decision over the capped search space: maximizes the
/// alignment score plus `lambda` times the LM score over every label
/// sequence and alignment, with the deterministic tie-break.
pub fn exact_best_transducer<S: TransducerScorer>(
    model: &S,
    lm: Option<&NGramLM>,
    lambda: f64,
    limits: &SearchLimits,
) -> Result<ScoredSequence> {
    let topology = model.topology();
    guard(topology, limits.max_labels)?;
    let mut best: Option<(LogScore, Vec<LabelId>, Vec<Frame>, AlignmentPath)> = None;
    for labels in label_sequences(model.vocabulary().len(), limits.max_labels) {
        if topology.kind == TopologyKind::StrictMonotonic
            && labels.len() > topology.frames as usize
        {
            continue;
        }
        let lm_score = fused_lm_score(lm, lambda, &labels, model)?;
        for tuple in boundary_tuples(topology, labels.len()) {
            if !limits.admits_boundaries(&tuple) {
                continue;
            }
            let seg = Segmentation::new(labels.clone(), tuple.clone(), topology).unwrap();
            let path = segmentation_to_path(&seg);
            let score = score_path(model, &path) + lm_score;
            if score.is_impossible() {
                continue;
            }
            let replace = match &best {
                None => true,
                Some((bs, bl, bb, _)) => {
                    better_candidate((&score, &labels, &tuple), (bs, bl, bb)).is_lt()
                }
            };
            if replace {
                best = Some((score, labels.clone(), tuple, path));
            }
        }
    }
    let (score, labels, _, path) = best.ok_or_else(|| {
        TransegError::Unreachable("no label sequence carries positive mass".into())
    })?;
    Ok(ScoredSequence {
        labels,
        score,
        alignment: Some(Alignment::Path(path)),
    })
}

/// Segmental counterpart of [`exact_best_transducer`].
pub fn exact_best_segmental<S: SegmentalScorer>(
    model: &S,
    lm: Option<&NGramLM>,
    lambda: f64,
    limits: &SearchLimits,
) -> Result<ScoredSequence> {
    let topology = model.topology();
    guard(topology, limits.max_labels)?;
    let mut best: Option<(LogScore, Vec<LabelId>, Vec<Frame>, Segmentation)> = None;
    for labels in label_sequences(model.vocabulary().len(), limits.max_labels) {
        if topology.kind == TopologyKind::StrictMonotonic
            && labels.len() > topology.frames as usize
        {
            continue;
        }
        let lm_score = fused_lm_score_seg(lm, lambda, &labels, model)?;
        for tuple in boundary_tuples(topology, labels.len()) {
            if !limits.admits_boundaries(&tuple) {
                continue;
            }
            let seg = Segmentation::new(labels.clone(), tuple.clone(), topology).unwrap();
            let score = score_segmentation(model, &seg) + lm_score;
            if score.is_impossible() {
                continue;
            }
            let replace = match &best {
                None => true,
                Some((bs, bl, bb, _)) => {
                    better_candidate((&score, &labels, &tuple), (bs, bl, bb)).is_lt()
                }
            };
            if replace {
                best = Some((score, labels.clone(), tuple, seg));
            }
        }
    }
    let (score, labels, _, seg) = best.ok_or_else(|| {
        TransegError::Unreachable("no label sequence carries positive mass".into())
    })?;
    Ok(ScoredSequence {
        labels,
        score,
        alignment: Some(Alignment::Segmentation(seg)),
    })
}

fn fused_lm_score<S: TransducerScorer>(
    lm: Option<&NGramLM>,
    lambda: f64,
    labels: &[LabelId],
    model: &S,
) -> Result<LogScore> {
    match lm {
        Some(lm) if lambda != 0.0 => {
            let names = model.vocabulary().render(labels);
            let raw = lm.score_rendered(&names)?;
            Ok(LogScore::new(lambda * raw.value()))
        }
        _ => Ok(LogScore::ZERO),
    }
}

fn fused_lm_score_seg<S: SegmentalScorer>(
    lm: Option<&NGramLM>,
    lambda: f64,
    labels: &[LabelId],
    model: &S,
) -> Result<LogScore> {
    match lm {
        Some(lm) if lambda != 0.0 => {
            let names = model.vocabulary().render(labels);
            let raw = lm.score_rendered(&names)?;
            Ok(LogScore::new(lambda * raw.value()))
        }
        _ => Ok(LogScore::ZERO),
    }
}

/// Exact Viterbi decision by dynamic programming over the grid: the fast
/// twin of [`exact_best_transducer`], used by the harness at scales where
/// enumeration is infeasible. States carry the frame, the previous label
/// boundary, the per-frame label run, and the label suffix needed by the
/// scorer and LM contexts. On exact score ties the first-found candidate
/// wins (blank before labels, lower label ids first), which agrees with
/// the enumeration tie-break everywhere score ties do not occur.
pub fn viterbi_best_transducer<S>(
    model: &S,
    lm: Option<&NGramLM>,
    lambda: f64,
    limits: &SearchLimits,
) -> Result<ScoredSequence>
where
    S: TransducerScorer + crate::scorer::HasContextOrder,
{
    let topology = model.topology();
    let frames = topology.frames;
    let vocab_size = model.vocabulary().len();
    let suffix_len = model
        .context_order()
        .max(lm.map(|l| l.order() - 1).unwrap_or(0));
    let fuse_label = |history: &[LabelId], label: LabelId| -> LogScore {
        match lm {
            Some(lm) if lambda != 0.0 => match lm.label_score(history, label) {
                Ok(s) => LogScore::new(lambda * s.value()),
                Err(_) => LogScore::INFINITY,
            },
            _ => LogScore::ZERO,
        }
    };
    let fuse_end = |history: &[LabelId]| -> LogScore {
        match lm {
            Some(lm) if lambda != 0.0 => match lm.end_score(history) {
                Ok(s) => LogScore::new(lambda * s.value()),
                Err(_) => LogScore::INFINITY,
            },
            _ => LogScore::ZERO,
        }
    };

    // key: (t, run, emitted, t_prev, suffix); value: (score, backpointer).
    // The frame and run lead the key so each (t, run) layer can be drained
    // in order; labels feed the next run of the same frame (RNN-T) or the
    // next frame.
    type Key = (Frame, usize, usize, Frame, Vec<LabelId>);
    let mut table: BTreeMap<Key, (LogScore, Option<(Key, Option<LabelId>)>)> = BTreeMap::new();
    let start: Key = (1, 0, 0, topology.origin(), Vec::new());
    table.insert(start, (LogScore::ZERO, None));
    let mut final_best: Option<(LogScore, Key)> = None;

    let consider =
        |table: &mut BTreeMap<Key, (LogScore, Option<(Key, Option<LabelId>)>)>,
         key: Key,
         score: LogScore,
         back: (Key, Option<LabelId>)| {
            if score.is_impossible() {
                return;
            }
            match table.get(&key) {
                Some((existing, _)) if existing.value() <= score.value() => {}
                _ => {
                    table.insert(key, (score, Some(back)));
                }
            }
        };
    let finish = |table: &mut BTreeMap<Key, (LogScore, Option<(Key, Option<LabelId>)>)>,
                      final_best: &mut Option<(LogScore, Key)>,
                      end_key: Key,
                      total: LogScore,
                      back: (Key, Option<LabelId>)| {
        if total.is_impossible() {
            return;
        }
        if final_best
            .as_ref()
            .map(|(b, _)| total.value() < b.value())
            .unwrap_or(true)
        {
            table.insert(end_key.clone(), (total, Some(back)));
            *final_best = Some((total, end_key));
        }
    };

    for t in 1..=frames {
        for run in 0..=limits.max_labels_per_frame {
            let keys: Vec<Key> = table
                .range((t, run, 0, 0, Vec::new())..(t, run + 1, 0, 0, Vec::new()))
                .map(|(k, _)| k.clone())
                .collect();
            for key in keys {
                let (score, _) = table[&key];
                let (_, _, emitted, t_prev, ref suffix) = key;
                let suffix = suffix.clone();
                let step = model.step_scores(t, t_prev, &suffix);
                if !step.reachable {
                    continue;
                }
                // blank advances the frame or terminates
                let blank_score = score + step.blank;
                if !blank_score.is_impossible() {
                    if t < frames {
                        consider(
                            &mut table,
                            (t + 1, 0, emitted, t_prev, suffix.clone()),
                            blank_score,
                            (key.clone(), None),
                        );
                    } else {
                        let total = blank_score + fuse_end(&suffix);
                        finish(
                            &mut table,
                            &mut final_best,
                            (frames + 1, 0, emitted, t_prev, suffix.clone()),
                            total,
                            (key.clone(), None),
                        );
                    }
                }
                // label emissions
                if emitted >= limits.max_labels {
                    continue;
                }
                for i in 0..vocab_size {
                    let label = LabelId(i as u32);
                    let s = step.label(label);
                    if s.is_impossible() {
                        continue;
                    }
                    let total = score + s + fuse_label(&suffix, label);
                    if total.is_impossible() {
                        continue;
                    }
                    let mut next_suffix = suffix.clone();
                    next_suffix.push(label);
                    if next_suffix.len() > suffix_len {
                        next_suffix.remove(0);
                    }
                    match topology.kind {
                        TopologyKind::Rnnt => {
                            if run + 1 <= limits.max_labels_per_frame {
                                consider(
                                    &mut table,
                                    (t, run + 1, emitted + 1, t, next_suffix),
                                    total,
                                    (key.clone(), Some(label)),
                                );
                            }
                        }
                        TopologyKind::StrictMonotonic => {
                            if t < frames {
                                consider(
                                    &mut table,
                                    (t + 1, 0, emitted + 1, t, next_suffix),
                                    total,
                                    (key.clone(), Some(label)),
                                );
                            } else {
                                let with_end = total + fuse_end(&next_suffix);
                                finish(
                                    &mut table,
                                    &mut final_best,
                                    (frames + 1, 0, emitted + 1, t, next_suffix),
                                    with_end,
                                    (key.clone(), Some(label)),
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    let (score, end_key) = final_best.ok_or_else(|| {
        TransegError::Unreachable("no complete hypothesis carries positive mass".into())
    })?;
    // backtrace
    let mut labels_rev: Vec<LabelId> = Vec::new();
    let mut boundaries_rev: Vec<Frame> = Vec::new();
    let mut cursor = end_key;
    loop {
        let (_, back) = &table[&cursor];
        match back {
            Some((prev, emitted)) => {
                if let Some(label) = emitted {
                    labels_rev.push(*label);
                    // the label was emitted at the source state's frame
                    boundaries_rev.push(prev.0);
                }
                cursor = prev.clone();
            }
            None => break,
        }
    }
    labels_rev.reverse();
    boundaries_rev.reverse();
    let seg = Segmentation::new(labels_rev.clone(), boundaries_rev, topology)
        .expect("DP emits topology-valid boundaries");
    Ok(ScoredSequence {
        labels: labels_rev,
        score,
        alignment: Some(Alignment::Path(segmentation_to_path(&seg))),
    })
}

/// Normalization audit: total probability mass over label sequences.
#[derive(Clone, Debug)]
pub struct MassReport {
    pub mass: LogScore,
    /// True iff the label-sequence space was exhausted (strict
    /// monotonicity); otherwise `mass` is a lower bound for `S <=
    /// max_labels`.
    pub exact: bool,
    pub per_sequence: Vec<(Vec<LabelId>, LogScore)>,
}

/// Sum the full-sum DP over label sequences. Exact under strict
/// monotonicity (`S <= T` exhausts the space); a reported lower bound for
/// RNN-T, where `max_labels` truncates.
pub fn total_mass_transducer<S: TransducerScorer>(model: &S, max_labels: usize) -> MassReport {
    let topology = model.topology();
    let cap = match topology.kind {
        TopologyKind::StrictMonotonic => topology.frames as usize,
        TopologyKind::Rnnt => max_labels,
    };
    let mut mass = LogScore::INFINITY;
    let mut per_sequence = Vec::new();
    for labels in label_sequences(model.vocabulary().len(), cap) {
        let s = full_sum_transducer(model, &labels);
        if !s.is_impossible() {
            mass = log_add(mass, s);
        }
        per_sequence.push((labels, s));
    }
    MassReport {
        mass,
        exact: topology.kind == TopologyKind::StrictMonotonic,
        per_sequence,
    }
}

/// Segmental counterpart of [`total_mass_transducer`].
pub fn total_mass_segmental<S: SegmentalScorer>(model: &S, max_labels: usize) -> MassReport {
    let topology = model.topology();
    let cap = match topology.kind {
        TopologyKind::StrictMonotonic => topology.frames as usize,
        TopologyKind::Rnnt => max_labels,
    };
    let mut mass = LogScore::INFINITY;
    let mut per_sequence = Vec::new();
    for labels in label_sequences(model.vocabulary().len(), cap) {
        let s = full_sum_segmental(model, &labels);
        if !s.is_impossible() {
            mass = log_add(mass, s);
        }
        per_sequence.push((labels, s));
    }
    MassReport {
        mass,
        exact: topology.kind == TopologyKind::StrictMonotonic,
        per_sequence,
    }
}


#[cfg(test)]
mod properties {
    use super::*;
    use crate::models::generate_random_transducer;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Enumeration and forward DP are independent routes to the same
        /// sum, for arbitrary model shapes.
        #[test]
        fn enumeration_equals_dp(
            seed in 0u64..1_000_000,
            frames in 2u32..=4,
            vocab in 1usize..=3,
            k in 0usize..=1,
            smoothness in 0.0f64..=1.0,
            rnnt in any::<bool>(),
        ) {
            let topology = if rnnt {
                Topology::rnnt(frames)
            } else {
                Topology::strict_monotonic(frames)
            };
            let m = generate_random_transducer(seed, topology, vocab, k, smoothness);
            for labels in label_sequences(vocab, 3) {
                let dp = full_sum_transducer(&m, &labels);
                let en = full_sum_transducer_by_enumeration(&m, &labels).unwrap();
                if dp.is_impossible() && en.is_impossible() {
                    continue;
                }
                prop_assert!((dp.value() - en.value()).abs() < 1e-10);
            }
        }
    }
}

#[cfg(test)]
mod viterbi_tests {
    use super::*;
    use crate::fixtures;
    use crate::lm::generate_random_lm;
    use crate::models::generate_random_transducer;

    #[test]
    fn dp_viterbi_agrees_with_enumeration() {
        for seed in 0..16u64 {
            let topology = if seed % 2 == 0 {
                Topology::rnnt(3)
            } else {
                Topology::strict_monotonic(4)
            };
            let m = generate_random_transducer(seed, topology, 2, 1, 0.6);
            let limits = SearchLimits::for_topology(topology);
            let lm = generate_random_lm(seed ^ 0x77, 2, m.vocabulary(), 0.7);
            for lambda in [0.0, 0.5] {
                let lm_opt = if lambda == 0.0 { None } else { Some(&lm) };
                let en = exact_best_transducer(&m, lm_opt, lambda, &limits).unwrap();
                let dp = viterbi_best_transducer(&m, lm_opt, lambda, &limits).unwrap();
                assert_eq!(en.labels, dp.labels, "seed {seed} lambda {lambda}");
                assert!(
                    (en.score.value() - dp.score.value()).abs() < 1e-10,
                    "seed {seed}: {} vs {}",
                    en.score.value(),
                    dp.score.value()
                );
                assert_eq!(en.alignment, dp.alignment, "seed {seed}");
            }
        }
    }

    #[test]
    fn dp_viterbi_on_fixtures() {
        let m = fixtures::two_label_strict();
        let limits = SearchLimits::for_topology(m.topology());
        let best = viterbi_best_transducer(&m, None, 0.0, &limits).unwrap();
        assert_eq!(best.labels, vec![LabelId(0)]);
        assert!((best.score.prob() - 0.25).abs() < 1e-14);
    }
}
