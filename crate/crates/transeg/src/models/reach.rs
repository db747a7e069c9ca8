//! Reachable table keys for tabular models.
//!
//! A context with `m < k` real labels (BOS-padded) means exactly `m` labels
//! have been emitted; `m == k` means at least `k`. Under strict
//! monotonicity each consumed frame emits at most one label, which bounds
//! how many labels can precede a frame or boundary; under RNN-T vertical
//! transitions make every context reachable everywhere.

use super::{context_labels, Context, ContextSym};
use crate::topology::{Frame, Topology, TopologyKind};
use crate::vocab::LabelId;

/// All begin-padded contexts of length `k` over a vocabulary of `n` labels.
pub(crate) fn all_contexts(k: usize, n: usize) -> Vec<Context> {
    let mut out = Vec::new();
    for labels in 0..=k {
        let mut partial: Vec<Context> = vec![vec![ContextSym::Bos; k - labels]];
        for _ in 0..labels {
            let mut next = Vec::new();
            for ctx in &partial {
                for v in 0..n as u32 {
                    let mut ext = ctx.clone();
                    ext.push(ContextSym::Label(LabelId(v)));
                    next.push(ext);
                }
            }
            partial = next;
        }
        out.extend(partial);
    }
    out.sort();
    out
}

/// Reachable `(t, context)` keys of a transducer table.
pub(crate) fn transducer_keys(topology: Topology, k: usize, n: usize) -> Vec<(Frame, Context)> {
    let mut out = Vec::new();
    for ctx in all_contexts(k, n) {
        let m = context_labels(&ctx) as Frame;
        for t in 1..=topology.frames {
            let reachable = match topology.kind {
                TopologyKind::Rnnt => true,
                TopologyKind::StrictMonotonic => m <= t.saturating_sub(1),
            };
            if reachable {
                out.push((t, ctx.clone()));
            }
        }
    }
    out.sort();
    out
}

/// Reachable `(t_prev, context)` keys of a segmental boundary table.
/// Keys whose topology support is empty are excluded.
pub(crate) fn segmental_boundary_keys(
    topology: Topology,
    k: usize,
    n: usize,
) -> Vec<(Frame, Context)> {
    let mut out = Vec::new();
    let origin = topology.origin();
    for ctx in all_contexts(k, n) {
        let m = context_labels(&ctx);
        if m == 0 {
            out.push((origin, ctx.clone()));
            // Under RNN-T the origin coincides with frame 1; a label emitted
            // there reuses the same key only when k == 0, which the m >= 1
            // arm below then covers identically.
        }
        if m >= 1 || k == 0 {
            for t_prev in 1..=topology.frames {
                let reachable = match topology.kind {
                    TopologyKind::Rnnt => true,
                    TopologyKind::StrictMonotonic => m as Frame <= t_prev,
                };
                if reachable && !topology.boundary_candidates(t_prev).is_empty() {
                    out.push((t_prev, ctx.clone()));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Reachable `(t_prev, t_cur, context)` keys of a segmental label table.
pub(crate) fn segmental_label_keys(
    topology: Topology,
    k: usize,
    n: usize,
) -> Vec<(Frame, Frame, Context)> {
    let mut out = Vec::new();
    for (t_prev, ctx) in segmental_boundary_keys(topology, k, n) {
        for t_cur in topology.boundary_candidates(t_prev) {
            out.push((t_prev, t_cur, ctx.clone()));
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_counts() {
        assert_eq!(all_contexts(0, 3).len(), 1);
        assert_eq!(all_contexts(1, 3).len(), 4); // BOS + 3 labels
        assert_eq!(all_contexts(2, 2).len(), 7); // 1 + 2 + 4
    }

    #[test]
    fn strict_monotonic_excludes_early_label_contexts() {
        let topo = Topology::strict_monotonic(3);
        let keys = transducer_keys(topo, 1, 2);
        // frame 1 admits only the BOS context
        let frame1: Vec<_> = keys.iter().filter(|(t, _)| *t == 1).collect();
        assert_eq!(frame1.len(), 1);
        assert_eq!(frame1[0].1, vec![ContextSym::Bos]);
        // frame 2 admits all contexts
        assert_eq!(keys.iter().filter(|(t, _)| *t == 2).count(), 3);
    }

    #[test]
    fn rnnt_admits_all_contexts_everywhere() {
        let topo = Topology::rnnt(2);
        let keys = transducer_keys(topo, 1, 2);
        assert_eq!(keys.len(), 2 * 3);
    }

    #[test]
    fn boundary_keys_strict_monotonic_drop_final_frame() {
        let topo = Topology::strict_monotonic(2);
        let keys = segmental_boundary_keys(topo, 0, 1);
        // t_prev = 2 has empty support and is excluded
        assert_eq!(keys, vec![(0, vec![]), (1, vec![])]);
    }
}
