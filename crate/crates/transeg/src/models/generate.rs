//! Seeded random model generation.
//!
//! Rows are drawn with a rank-decay construction: symbols are randomly
//! ranked, rank `r` gets base mass `d^r`, and a multiplicative jitter is
//! applied before normalizing. Smoothness 1 gives near-uniform rows
//! (decay 1, jitter on); smoothness 0 gives near-one-hot rows (decay
//! 0.004, jitter off), so the per-row maximum always exceeds 0.99.

use std::collections::BTreeMap;

use super::reach;
use super::{
    BoundaryRow, Normalization, SegmentLabelRow, SegmentalModel, TransducerKey, TransducerModel,
    TransducerRow,
};
use crate::rng::SplitMix64;
use crate::score::TableProb;
use crate::topology::Topology;
use crate::vocab::Vocabulary;

/// Extra generator knobs. `blank_bias`
/// rescales the blank mass of transducer rows (values below one shorten
/// segments — the synthetic stand-in for a high-subsampling setup); for
/// segmental models it geometrically dampens long boundary jumps.
#[derive(Clone, Copy, Debug)]
pub struct GeneratorParams {
    pub smoothness: f64,
    pub blank_bias: Option<f64>,
}

impl GeneratorParams {
    pub fn smooth(smoothness: f64) -> Self {
        GeneratorParams {
            smoothness,
            blank_bias: None,
        }
    }
}

fn sample_row(rng: &mut SplitMix64, n: usize, smoothness: f64) -> Vec<f64> {
    debug_assert!(n >= 1);
    debug_assert!((0.0..=1.0).contains(&smoothness));
    let decay = 0.004f64.powf(1.0 - smoothness);
    let jitter = 0.5 * smoothness;
    let draws: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| draws[b].total_cmp(&draws[a]).then(a.cmp(&b)));
    let mut probs = vec![0.0; n];
    for (rank, &idx) in order.iter().enumerate() {
        let wobble = (rng.next_f64() - 0.5) * jitter;
        probs[idx] = decay.powi(rank as i32) * wobble.exp();
    }
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    probs
}

fn renormalize(probs: &mut [f64]) {
    let sum: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= sum;
    }
}

/// Deterministic random transducer model. Identical arguments produce
/// identical tables.
pub fn generate_random_transducer(
    seed: u64,
    topology: Topology,
    vocab_size: usize,
    context_order: usize,
    smoothness: f64,
) -> TransducerModel {
    generate_random_transducer_biased(
        seed,
        topology,
        vocab_size,
        context_order,
        GeneratorParams::smooth(smoothness),
    )
}

/// Variant with the full parameter set.
pub fn generate_random_transducer_biased(
    seed: u64,
    topology: Topology,
    vocab_size: usize,
    context_order: usize,
    params: GeneratorParams,
) -> TransducerModel {
    assert!(vocab_size >= 1);
    let vocab = Vocabulary::synthetic(vocab_size);
    let mut rng = SplitMix64::new(seed);
    let mut rows = BTreeMap::new();
    for (t, context) in reach::transducer_keys(topology, context_order, vocab_size) {
        let mut probs = sample_row(&mut rng, vocab_size + 1, params.smoothness);
        if let Some(bias) = params.blank_bias {
            probs[vocab_size] *= bias;
            renormalize(&mut probs);
        }
        let row = TransducerRow {
            labels: probs[..vocab_size]
                .iter()
                .map(|&p| TableProb::from_linear(p))
                .collect(),
            blank: TableProb::from_linear(probs[vocab_size]),
            unreachable: false,
        };
        rows.insert(
            TransducerKey {
                t,
                t_prev: None,
                context,
            },
            row,
        );
    }
    TransducerModel::from_rows(vocab, topology, context_order, rows)
}

/// Deterministic random native segmental model: boundary rows sum to one
/// over the topology support, label rows sum to one over `V ∪ {#}` with
/// sentence-end mass only at the final frame.
pub fn generate_random_segmental(
    seed: u64,
    topology: Topology,
    vocab_size: usize,
    context_order: usize,
    smoothness: f64,
) -> SegmentalModel {
    generate_random_segmental_biased(
        seed,
        topology,
        vocab_size,
        context_order,
        GeneratorParams::smooth(smoothness),
    )
}

pub fn generate_random_segmental_biased(
    seed: u64,
    topology: Topology,
    vocab_size: usize,
    context_order: usize,
    params: GeneratorParams,
) -> SegmentalModel {
    assert!(vocab_size >= 1);
    let vocab = Vocabulary::synthetic(vocab_size);
    let frames = topology.frames;
    let mut rng = SplitMix64::new(seed);

    let mut boundary = BTreeMap::new();
    for (t_prev, context) in reach::segmental_boundary_keys(topology, context_order, vocab_size) {
        let candidates: Vec<_> = topology.boundary_candidates(t_prev).collect();
        let mut probs = sample_row(&mut rng, candidates.len(), params.smoothness);
        if let Some(bias) = params.blank_bias {
            for (i, p) in probs.iter_mut().enumerate() {
                *p *= bias.powi(i as i32);
            }
            renormalize(&mut probs);
        }
        let entries = candidates
            .iter()
            .zip(&probs)
            .map(|(&t, &p)| (t, TableProb::from_linear(p)))
            .collect();
        boundary.insert(
            (t_prev, context),
            BoundaryRow {
                entries,
                unreachable: false,
            },
        );
    }

    let mut label = BTreeMap::new();
    for (t_prev, t_cur, context) in
        reach::segmental_label_keys(topology, context_order, vocab_size)
    {
        let with_eos = t_cur == frames;
        let n = vocab_size + usize::from(with_eos);
        let probs = sample_row(&mut rng, n, params.smoothness);
        let row = SegmentLabelRow {
            labels: probs[..vocab_size]
                .iter()
                .map(|&p| TableProb::from_linear(p))
                .collect(),
            eos: if with_eos {
                TableProb::from_linear(probs[vocab_size])
            } else {
                TableProb::ZERO
            },
            unreachable: false,
        };
        label.insert((t_prev, t_cur, context), row);
    }

    SegmentalModel::from_rows(
        vocab,
        topology,
        context_order,
        boundary,
        label,
        None,
        Normalization::Native,
    )
}

/// Row sampler shared with LM generation: `count` distributions of arity
/// `n`, drawn from the given stream.
pub fn generate_random_lm_rows(
    rng: &mut SplitMix64,
    count: usize,
    n: usize,
    smoothness: f64,
) -> Vec<Vec<f64>> {
    (0..count).map(|_| sample_row(rng, n, smoothness)).collect()
}
